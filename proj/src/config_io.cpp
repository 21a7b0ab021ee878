#include "bwlab/config_io.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "bwlab/error.hpp"

namespace bwlab {

namespace {

using nlohmann::json;

int line_of(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

// Reads one YAML mapping, rejecting keys outside `allowed` and converting
// scalars with errors that carry the node's line and dotted path.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(label() + "expected a mapping", line_of(node_));
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) throw ConfigError("unknown field '" + field(key) + "'", line_of(kv.first));
    }
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }
  YAML::Node at(const std::string& key) const { return node_[key]; }
  int line() const { return line_of(node_); }
  int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : line(); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    out = convert<T>(node_[key], field(key));
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) const {
    if (!has(key)) return;
    out = convert<T>(node_[key], field(key));
  }

  template <typename T>
  static T convert(const YAML::Node& n, const std::string& name) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(name + ": expected " + type_name<T>(), line_of(n));
    }
  }

  // Runs a validator; a ParameterError whose message starts with a field
  // name is re-raised at that field's line.
  template <typename Fn>
  void validate(Fn&& fn) const {
    try {
      fn();
    } catch (const ParameterError& e) {
      const std::string msg = e.what();
      const std::string first = msg.substr(0, msg.find(' '));
      const bool named = has(first);
      throw ConfigError((named ? field(first) + ": " : label()) + msg, named ? line(first) : line());
    }
  }

 private:
  template <typename T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a list of numbers";
  }
  std::string label() const { return path_.empty() ? "" : path_ + ": "; }

  YAML::Node node_;
  std::string path_;
};

template <typename Fn>
auto named_enum(const MapReader& r, const std::string& key, Fn&& parse) {
  std::string s;
  r.get(key, s);
  try {
    return parse(s);
  } catch (const ParameterError& e) {
    throw ConfigError(r.field(key) + ": " + e.what(), r.line(key));
  }
}

TierParams parse_tier(const YAML::Node& n, const std::string& path, TierParams t) {
  MapReader r(n, path,
              {"order_delay", "ship_delay", "smoothing", "target_multiplier", "holding_rate", "backlog_rate"});
  r.get("order_delay", t.order_delay);
  r.get("ship_delay", t.ship_delay);
  r.get("smoothing", t.smoothing);
  r.get("target_multiplier", t.target_multiplier);
  r.get("holding_rate", t.holding_rate);
  r.get("backlog_rate", t.backlog_rate);
  r.validate([&] { t.validate(); });
  return t;
}

DecisionShockSpec parse_shock(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path, {"family", "scale", "values", "probabilities", "stream"});
  DecisionShockSpec s;
  if (r.has("family")) s.family = named_enum(r, "family", shock_family_from_string);
  r.get("scale", s.scale);
  r.get("values", s.values);
  r.get("probabilities", s.probabilities);
  r.get("stream", s.stream);
  r.validate([&] { s.validate(); });
  return s;
}

RemoteAgentConfig::Fallback fallback_from_string(const std::string& s) {
  if (s == "repeat_last_order") return RemoteAgentConfig::Fallback::kRepeatLastOrder;
  if (s == "fail") return RemoteAgentConfig::Fallback::kFail;
  throw ParameterError("unknown fallback '" + s + "' (expected repeat_last_order or fail)");
}

std::string to_string(RemoteAgentConfig::Fallback f) {
  return f == RemoteAgentConfig::Fallback::kFail ? "fail" : "repeat_last_order";
}

PolicySpec parse_policy(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path,
              {"kind", "theta", "shock", "level", "order", "low", "high", "samples", "base", "endpoint",
               "timeout_ms", "retries", "fallback", "prompt_template", "checkpoint", "parameters", "max_order",
               "spread"});
  PolicySpec p;
  if (r.has("kind")) p.kind = named_enum(r, "kind", policy_kind_from_string);
  r.get("theta", p.theta);
  if (r.has("shock")) p.shock = parse_shock(r.at("shock"), r.field("shock"));
  r.get("level", p.level);
  r.get("order", p.order);
  r.get("low", p.low);
  r.get("high", p.high);
  r.get("samples", p.samples);
  if (r.has("base")) p.base = std::make_shared<PolicySpec>(parse_policy(r.at("base"), r.field("base")));
  r.get("endpoint", p.remote.endpoint);
  r.get("timeout_ms", p.remote.timeout_ms);
  r.get("retries", p.remote.retries);
  if (r.has("fallback")) p.remote.fallback = named_enum(r, "fallback", fallback_from_string);
  r.get("prompt_template", p.remote.prompt_template);
  r.get("checkpoint", p.checkpoint);
  r.get("parameters", p.parameters);
  r.get("max_order", p.max_order);
  r.get("spread", p.spread);
  r.validate([&] {
    if (p.theta && !(*p.theta > 0.0)) throw ParameterError("theta must be > 0");
    if (p.samples < 1) throw ParameterError("samples must be >= 1");
    if (p.low < 0 || p.high < p.low) throw ParameterError("high must be >= low >= 0");
    if (p.remote.retries < 0) throw ParameterError("retries must be >= 0");
    if (p.remote.timeout_ms <= 0) throw ParameterError("timeout_ms must be > 0");
    if (p.kind == PolicySpec::Kind::kMajorityVote && !p.base) throw ParameterError("base policy is required");
    if (p.max_order < 1) throw ParameterError("max_order must be >= 1");
    if (!(p.spread > 0.0)) throw ParameterError("spread must be > 0");
  });
  return p;
}

DemandCurriculum parse_curriculum(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path, {"poisson", "trunc_normal", "rate", "mu", "sigma", "support", "resample_per_episode"});
  DemandCurriculum c;
  r.get("poisson", c.poisson);
  r.get("trunc_normal", c.trunc_normal);
  auto range = [&](const std::string& key, double& lo, double& hi) {
    if (!r.has(key)) return;
    const auto v = MapReader::convert<std::vector<double>>(r.at(key), r.field(key));
    if (v.size() != 2) throw ConfigError(r.field(key) + ": expected [low, high]", r.line(key));
    lo = v[0];
    hi = v[1];
  };
  range("rate", c.rate_low, c.rate_high);
  range("mu", c.mu_low, c.mu_high);
  range("sigma", c.sigma_low, c.sigma_high);
  range("support", c.support_low, c.support_high);
  r.get("resample_per_episode", c.resample_per_episode);
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(path + ": " + e.what(), r.line());
  }
  return c;
}

DemandSpec parse_demand(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path,
              {"kind", "value", "step_value", "step_week", "path", "mean", "stddev", "rate", "low", "high",
               "curriculum", "fixed_path"});
  DemandSpec d;
  if (r.has("kind")) d.kind = named_enum(r, "kind", demand_kind_from_string);
  r.get("value", d.value);
  r.get("step_value", d.step_value);
  r.get("step_week", d.step_week);
  r.get("path", d.path);
  r.get("mean", d.mean);
  r.get("stddev", d.stddev);
  r.get("rate", d.rate);
  r.get("low", d.low);
  r.get("high", d.high);
  if (r.has("curriculum")) d.curriculum = parse_curriculum(r.at("curriculum"), r.field("curriculum"));
  r.get("fixed_path", d.fixed_path);
  r.validate([&] { d.validate(); });
  return d;
}

TrainingSpec parse_training(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path,
              {"group_size", "steps", "beta", "learning_rate", "clip_norm", "optimizer", "eps_norm", "reward",
               "curriculum", "demand_source", "initial_spread", "max_order", "eval_runs", "eval_seed"});
  TrainingSpec t;
  r.get("group_size", t.group_size);
  r.get("steps", t.steps);
  r.get("beta", t.hyper.beta);
  r.get("learning_rate", t.hyper.learning_rate);
  r.get("clip_norm", t.hyper.clip_norm);
  if (r.has("optimizer")) t.hyper.optimizer = named_enum(r, "optimizer", optimizer_from_string);
  r.get("eps_norm", t.eps_norm);
  if (r.has("reward")) {
    MapReader rr(r.at("reward"), r.field("reward"), {"scope", "attribution"});
    if (rr.has("scope")) t.reward.scope = named_enum(rr, "scope", reward_scope_from_string);
    if (rr.has("attribution")) t.reward.attribution = named_enum(rr, "attribution", attribution_from_string);
  }
  if (r.has("curriculum")) t.curriculum = parse_curriculum(r.at("curriculum"), r.field("curriculum"));
  if (r.has("demand_source")) t.demand_source = named_enum(r, "demand_source", demand_source_from_string);
  r.get("initial_spread", t.initial_spread);
  r.get("max_order", t.max_order);
  r.get("eval_runs", t.eval_runs);
  r.get("eval_seed", t.eval_seed);
  r.validate([&] {
    if (t.group_size < 2) throw ParameterError("group_size must be >= 2");
    if (!(t.hyper.beta >= 0.0)) throw ParameterError("beta must be >= 0");
    if (!(t.hyper.learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
    if (!(t.eps_norm > 0.0)) throw ParameterError("eps_norm must be > 0");
    if (!(t.initial_spread > 0.0)) throw ParameterError("initial_spread must be > 0");
    if (t.max_order < 1) throw ParameterError("max_order must be >= 1");
    if (t.eval_runs < 2) throw ParameterError("eval_runs must be >= 2");
  });
  return t;
}

LabConfig parse_root(const YAML::Node& root) {
  if (!root || root.IsNull()) return {};
  MapReader r(root, "",
              {"name", "dynamics", "horizon", "seed", "runs", "burn_in", "tau", "tiers", "tier_count",
               "tier_defaults", "initial", "linear_initial", "policy", "policies", "demand", "training"});
  LabConfig cfg;
  ScenarioConfig& s = cfg.scenario;
  r.get("name", s.name);
  if (r.has("dynamics")) s.dynamics = named_enum(r, "dynamics", dynamics_from_string);
  r.get("horizon", s.horizon);
  r.get("seed", s.seed);
  r.get("runs", s.runs);
  r.get("burn_in", s.burn_in);
  r.get("tau", s.tau);

  if (r.has("tiers") && (r.has("tier_count") || r.has("tier_defaults")))
    throw ConfigError("give either 'tiers' or 'tier_count'/'tier_defaults', not both", r.line("tiers"));
  if (r.has("tiers")) {
    const auto list = r.at("tiers");
    if (!list.IsSequence() || list.size() == 0)
      throw ConfigError("tiers: expected a non-empty list", line_of(list));
    s.tiers.clear();
    for (std::size_t k = 0; k < list.size(); ++k)
      s.tiers.push_back(parse_tier(list[k], "tiers[" + std::to_string(k) + "]", TierParams{}));
  } else {
    long count = 4;
    r.get("tier_count", count);
    if (count < 1) throw ConfigError("tier_count must be >= 1", r.line("tier_count"));
    TierParams defaults;
    if (r.has("tier_defaults")) defaults = parse_tier(r.at("tier_defaults"), "tier_defaults", defaults);
    s.tiers.assign(static_cast<std::size_t>(count), defaults);
  }

  if (r.has("initial")) {
    MapReader ir(r.at("initial"), "initial", {"on_hand", "backlog", "pipeline_rate", "forecast", "last_order"});
    ir.get("on_hand", s.initial.on_hand);
    ir.get("backlog", s.initial.backlog);
    ir.get("pipeline_rate", s.initial.pipeline_rate);
    ir.get("forecast", s.initial.forecast);
    ir.get("last_order", s.initial.last_order);
    ir.validate([&] {
      if (s.initial.on_hand < 0) throw ParameterError("on_hand must be >= 0");
      if (s.initial.backlog < 0) throw ParameterError("backlog must be >= 0");
      if (s.initial.pipeline_rate < 0) throw ParameterError("pipeline_rate must be >= 0");
    });
  }
  if (r.has("linear_initial")) {
    MapReader lr(r.at("linear_initial"), "linear_initial", {"position", "forecast"});
    lr.get("position", s.linear_initial_position);
    lr.get("forecast", s.linear_initial_forecast);
  }

  if (r.has("policy") && r.has("policies"))
    throw ConfigError("give either 'policy' or 'policies', not both", r.line("policies"));
  if (r.has("policy")) s.policies = {parse_policy(r.at("policy"), "policy")};
  if (r.has("policies")) {
    const auto list = r.at("policies");
    if (!list.IsSequence() || list.size() == 0)
      throw ConfigError("policies: expected a non-empty list", line_of(list));
    s.policies.clear();
    for (std::size_t k = 0; k < list.size(); ++k)
      s.policies.push_back(parse_policy(list[k], "policies[" + std::to_string(k) + "]"));
  }
  if (r.has("demand")) s.demand = parse_demand(r.at("demand"), "demand");
  if (r.has("training")) cfg.training = parse_training(r.at("training"), "training");

  try {
    s.validate();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    const std::string first = msg.substr(0, msg.find(' '));
    throw ConfigError(msg, r.has(first) ? r.line(first) : (r.has("policies") ? r.line("policies") : r.line()));
  }
  return cfg;
}

json shock_json(const DecisionShockSpec& s) {
  return {{"family", to_string(s.family)},
          {"scale", s.scale},
          {"values", s.values},
          {"probabilities", s.probabilities},
          {"stream", s.stream}};
}

json tier_json(const TierParams& t) {
  return {{"order_delay", t.order_delay},   {"ship_delay", t.ship_delay},
          {"smoothing", t.smoothing},       {"target_multiplier", t.target_multiplier},
          {"holding_rate", t.holding_rate}, {"backlog_rate", t.backlog_rate}};
}

json policy_json(const PolicySpec& p) {
  json j = {{"kind", to_string(p.kind)},
            {"shock", shock_json(p.shock)},
            {"level", p.level},
            {"order", p.order},
            {"low", p.low},
            {"high", p.high},
            {"samples", p.samples},
            {"endpoint", p.remote.endpoint},
            {"timeout_ms", p.remote.timeout_ms},
            {"retries", p.remote.retries},
            {"fallback", to_string(p.remote.fallback)},
            {"prompt_template", p.remote.prompt_template},
            {"checkpoint", p.checkpoint},
            {"parameters", p.parameters},
            {"max_order", p.max_order},
            {"spread", p.spread}};
  if (p.theta) j["theta"] = *p.theta;
  if (p.base) j["base"] = policy_json(*p.base);
  return j;
}

json curriculum_json(const DemandCurriculum& c) {
  return {{"poisson", c.poisson},
          {"trunc_normal", c.trunc_normal},
          {"rate", {c.rate_low, c.rate_high}},
          {"mu", {c.mu_low, c.mu_high}},
          {"sigma", {c.sigma_low, c.sigma_high}},
          {"support", {c.support_low, c.support_high}},
          {"resample_per_episode", c.resample_per_episode}};
}

json demand_json(const DemandSpec& d) {
  return {{"kind", to_string(d.kind)}, {"value", d.value}, {"step_value", d.step_value},
          {"step_week", d.step_week},  {"path", d.path},   {"mean", d.mean},
          {"stddev", d.stddev},        {"rate", d.rate},   {"low", d.low},
          {"high", d.high},            {"curriculum", curriculum_json(d.curriculum)},
          {"fixed_path", d.fixed_path}};
}

void emit_json(YAML::Emitter& out, const json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (auto it = j.begin(); it != j.end(); ++it) {
      out << YAML::Key << it.key() << YAML::Value;
      emit_json(out, it.value());
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    const bool scalars = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
    out << (scalars ? YAML::Flow : YAML::Block) << YAML::BeginSeq;
    for (const auto& e : j) emit_json(out, e);
    out << YAML::EndSeq;
  } else if (j.is_boolean()) {
    out << j.get<bool>();
  } else if (j.is_number_unsigned()) {
    out << j.get<std::uint64_t>();
  } else if (j.is_number_integer()) {
    out << j.get<std::int64_t>();
  } else if (j.is_number_float()) {
    out << j.get<double>();
  } else if (j.is_string()) {
    out << YAML::DoubleQuoted << j.get<std::string>();
  } else {
    out << YAML::Null;
  }
}

}  // namespace

LabConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed YAML: " + e.msg, e.mark.line + 1);
  }
  return parse_root(root);
}

LabConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::json config_json(const LabConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  json tiers = json::array(), policies = json::array();
  for (const auto& t : s.tiers) tiers.push_back(tier_json(t));
  for (const auto& p : s.policies) policies.push_back(policy_json(p));
  json j = {{"name", s.name},
            {"dynamics", to_string(s.dynamics)},
            {"horizon", s.horizon},
            {"seed", s.seed},
            {"runs", s.runs},
            {"tau", s.tau},
            {"tiers", tiers},
            {"initial",
             {{"on_hand", s.initial.on_hand},
              {"backlog", s.initial.backlog},
              {"pipeline_rate", s.initial.pipeline_rate},
              {"forecast", s.initial.forecast},
              {"last_order", s.initial.last_order}}},
            {"linear_initial", {{"position", s.linear_initial_position}, {"forecast", s.linear_initial_forecast}}},
            {"policies", policies},
            {"demand", demand_json(s.demand)}};
  if (s.burn_in) j["burn_in"] = *s.burn_in;
  const TrainingSpec& t = cfg.training;
  j["training"] = {{"group_size", t.group_size},
                   {"steps", t.steps},
                   {"beta", t.hyper.beta},
                   {"learning_rate", t.hyper.learning_rate},
                   {"clip_norm", t.hyper.clip_norm},
                   {"optimizer", to_string(t.hyper.optimizer)},
                   {"eps_norm", t.eps_norm},
                   {"reward", {{"scope", to_string(t.reward.scope)}, {"attribution", to_string(t.reward.attribution)}}},
                   {"curriculum", curriculum_json(t.curriculum)},
                   {"demand_source", to_string(t.demand_source)},
                   {"initial_spread", t.initial_spread},
                   {"max_order", t.max_order},
                   {"eval_runs", t.eval_runs},
                   {"eval_seed", t.eval_seed}};
  return j;
}

std::string emit_config(const LabConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  emit_json(out, config_json(cfg));
  return std::string(out.c_str()) + "\n";
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-256 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string config_hash(const LabConfig& cfg) { return sha256_hex(config_json(cfg).dump()); }

bool apply_environment_overrides(LabConfig& cfg) {
  const char* endpoint = std::getenv(kEndpointEnv);
  if (!endpoint || !*endpoint) return false;
  bool applied = false;
  std::function<void(PolicySpec&)> visit = [&](PolicySpec& p) {
    if (p.kind == PolicySpec::Kind::kRemote) {
      p.remote.endpoint = endpoint;
      applied = true;
    }
    if (p.base) {
      auto copy = std::make_shared<PolicySpec>(*p.base);
      visit(*copy);
      p.base = copy;
    }
  };
  for (auto& p : cfg.scenario.policies) visit(p);
  return applied;
}

}  // namespace bwlab
