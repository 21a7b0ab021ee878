// bwlab command-line front end.
//
//   bwlab simulate  --config c.yaml --out dir
//   bwlab analyze   --theta 1,2 --lambda 0.5,1 --tiers 3 [--out dir]
//   bwlab ensemble  --config c.yaml --out dir --runs 30
//   bwlab decompose --config c.yaml --out dir --paths 20 --runs 20
//   bwlab train     --config c.yaml --out dir --steps 300
//   bwlab eval      [--config c.yaml] [--checkpoint ckpt.json] --out dir
//   bwlab report    --config c.yaml --out dir
//
// Every command that writes a directory also writes manifest.json; passing
// that file back through --manifest re-runs the command with the recorded
// configuration and options. The worker count never changes results and is
// not recorded.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bwlab/bounds.hpp"
#include "bwlab/config_io.hpp"
#include "bwlab/decompose.hpp"
#include "bwlab/ensemble.hpp"
#include "bwlab/error.hpp"
#include "bwlab/grpo.hpp"
#include "bwlab/metrics.hpp"
#include "bwlab/scenario.hpp"
#include "bwlab/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bwlab;

namespace {

enum ExitCode { kOk = 0, kConfigFailure = 2, kRuntimeFailure = 3, kRemoteFailure = 4 };

// Options shared by the config-driven commands. Scalars given on the command
// line override the file.
struct CommonOptions {
  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> runs;
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_out = true) {
  cmd->add_option("-c,--config", o.config_path, "scenario/training YAML file (defaults when omitted)");
  cmd->add_option("--manifest", o.manifest_path, "re-run from a manifest written by an earlier invocation");
  auto* out = cmd->add_option("-o,--out", o.out_dir, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", o.seed, "master seed override");
  cmd->add_option("--horizon", o.horizon, "horizon T override");
  cmd->add_option("--runs", o.runs, "runs R override");
  cmd->add_option("--workers", o.workers, "worker threads (0 = one per core)")->capture_default_str();
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Resolves the configuration: manifest, else file, else defaults; then the
// environment override and the scalar flags.
LabConfig resolve_config(const CommonOptions& o, const json* manifest) {
  LabConfig cfg;
  if (manifest) {
    cfg = parse_config(manifest->at("config").get<std::string>());
  } else if (!o.config_path.empty()) {
    cfg = load_config(o.config_path);
  }
  apply_environment_overrides(cfg);
  if (o.seed) cfg.scenario.seed = *o.seed;
  if (o.horizon) cfg.scenario.horizon = *o.horizon;
  if (o.runs) cfg.scenario.runs = *o.runs;
  try {
    cfg.scenario.validate();
    cfg.training.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  std::ofstream os(dir / name);
  if (!os) throw Error("cannot write " + (dir / name).string());
  return os;
}

void write_manifest(const fs::path& dir, const std::string& command, const LabConfig* cfg, const json& options,
                    const std::vector<std::string>& files) {
  json m;
  m["artifact"] = "bwlab";
  m["version"] = kVersion;
  m["command"] = command;
  m["options"] = options;
  if (cfg) {
    m["config_hash"] = config_hash(*cfg);
    m["seed"] = cfg->scenario.seed;
    m["config"] = emit_config(*cfg);
  } else {
    m["config_hash"] = sha256_hex(options.dump());
  }
  m["files"] = files;
  auto os = open_out(dir, "manifest.json");
  os << m.dump(2) << '\n';
}

fs::path prepare_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// Reads the manifest named by --manifest and checks it belongs to `command`.
std::optional<json> read_manifest(const CommonOptions& o, const std::string& command) {
  if (o.manifest_path.empty()) return std::nullopt;
  json m = load_json(o.manifest_path);
  if (m.value("command", "") != command)
    throw ConfigError(o.manifest_path + " was written by '" + m.value("command", "?") + "', not '" + command + "'");
  if (!m.contains("config")) throw ConfigError(o.manifest_path + " carries no configuration");
  return m;
}

template <typename T>
void restore(const std::optional<json>& m, const char* key, T& value) {
  if (m && m->at("options").contains(key)) value = m->at("options").at(key).get<T>();
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const CommonOptions& o) {
  const auto manifest = read_manifest(o, "simulate");
  const LabConfig lab = resolve_config(o, manifest ? &*manifest : nullptr);
  const ScenarioConfig& cfg = lab.scenario;
  const auto policies = build_policies(cfg);
  const auto demand = run_demand(cfg, cfg.seed, 0);
  auto streams = tier_streams(cfg.seed, {0}, cfg.tiers.size());
  const Trajectory tr = run_episode(cfg, policies, demand, streams);

  const fs::path dir = prepare_dir(o.out_dir);
  auto os = open_out(dir, "trajectory.csv");
  os << "tier,period,demand,order,incoming,shipment,receipt,on_hand,backlog,inventory_position,cost\n"
     << std::setprecision(12);
  const bool physical = !tr.on_hand.empty();
  for (std::size_t k = 0; k < tr.orders.size(); ++k)
    for (std::size_t t = 0; t < tr.demand.size(); ++t) {
      os << k + 1 << ',' << t + 1 << ',' << tr.demand[t] << ',' << tr.orders[k][t] << ',';
      if (physical)
        os << tr.incoming[k][t] << ',' << tr.shipments[k][t] << ',' << tr.receipts[k][t] << ',' << tr.on_hand[k][t]
           << ',' << tr.backlog[k][t] << ',' << tr.inventory_position[k][t] << ',' << tr.costs[k][t];
      else
        os << tr.incoming[k][t] << ",,,,,," << tr.costs[k][t];
      os << '\n';
    }
  write_manifest(dir, "simulate", &lab, json::object(), {"trajectory.csv"});
  std::cout << "simulate: " << tr.orders.size() << " tiers x " << tr.demand.size()
            << " periods, total cost " << tr.total_cost() << '\n';
  return kOk;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOptions {
  std::vector<double> thetas{1.0};
  std::vector<double> lambdas{1.0};
  std::size_t tiers = 3;
  double demand_variance = 1.0;
  double shock_variance = 1.0;
  std::string out_dir;
};

int cmd_analyze(const AnalyzeOptions& o) {
  if (o.tiers < 1) throw ConfigError("--tiers must be >= 1");
  std::ostringstream csv;
  csv << "theta,lambda,k,gamma_k,demand_bound,decision_bound,uniform_demand_bound,uniform_decision_bound\n"
      << std::setprecision(12);
  for (double theta : o.thetas)
    for (double lambda : o.lambdas) {
      GainProfile gains = [&] {
        try {
          return GainProfile::uniform(theta, lambda, o.tiers);
        } catch (const ParameterError& e) {
          throw ConfigError(e.what());
        }
      }();
      const std::vector<double> shocks(o.tiers, o.shock_variance);
      for (const auto& r : bound_reports(gains, o.demand_variance, shocks))
        csv << theta << ',' << lambda << ',' << r.tier << ',' << r.gain << ',' << r.demand_bound << ','
            << r.decision_bound << ',' << r.uniform_demand_bound << ',' << r.uniform_decision_bound << '\n';
    }
  if (o.out_dir.empty()) {
    std::cout << csv.str();
    return kOk;
  }
  const fs::path dir = prepare_dir(o.out_dir);
  open_out(dir, "bounds.csv") << csv.str();
  const json options{{"theta", o.thetas},
                     {"lambda", o.lambdas},
                     {"tiers", o.tiers},
                     {"demand_variance", o.demand_variance},
                     {"shock_variance", o.shock_variance}};
  write_manifest(dir, "analyze", nullptr, options, {"bounds.csv"});
  return kOk;
}

// ---------------------------------------------------------------- ensemble

void write_ensemble_outputs(const fs::path& dir, const EnsembleRecord& e, const ScenarioConfig& cfg,
                            std::vector<std::string>& files) {
  const auto sigma2 = run_to_run_variance(e);
  const auto metrics = bullwhip_metrics(e, cfg.tau, cfg.effective_burn_in());
  {
    auto os = open_out(dir, "orders.csv");
    write_orders_csv(os, e);
  }
  {
    auto os = open_out(dir, "demand.csv");
    write_demand_csv(os, e);
  }
  {
    auto os = open_out(dir, "variance.csv");
    write_variance_csv(os, sigma2);
  }
  {
    auto os = open_out(dir, "metrics.csv");
    write_metrics_csv(os, metrics);
  }
  {
    auto os = open_out(dir, "classical.csv");
    write_classical_csv(os, metrics, e.run_ids);
  }
  {
    auto os = open_out(dir, "boxplot.csv");
    write_boxplot_csv(os, e);
  }
  {
    auto os = open_out(dir, "excluded.csv");
    os << "run,reason\n";
    for (const auto& x : e.excluded) os << x.run << ",\"" << x.reason << "\"\n";
  }
  for (const char* f : {"orders.csv", "demand.csv", "variance.csv", "metrics.csv", "classical.csv", "boxplot.csv",
                        "excluded.csv"})
    files.emplace_back(f);
}

int cmd_ensemble(const CommonOptions& o) {
  const auto manifest = read_manifest(o, "ensemble");
  const LabConfig lab = resolve_config(o, manifest ? &*manifest : nullptr);
  const ScenarioConfig& cfg = lab.scenario;
  const EnsembleRecord e = run_ensemble(cfg, cfg.runs, cfg.seed, o.workers);
  const fs::path dir = prepare_dir(o.out_dir);
  std::vector<std::string> files;
  write_ensemble_outputs(dir, e, cfg, files);
  write_manifest(dir, "ensemble", &lab, json::object(), files);
  std::cout << "ensemble: " << e.runs() << " runs kept, " << e.excluded.size() << " excluded\n";
  return kOk;
}

// --------------------------------------------------------------- decompose

struct DecomposeOptions {
  std::size_t paths = 20;
  std::optional<std::size_t> burn_in;
};

int cmd_decompose(const CommonOptions& o, DecomposeOptions d) {
  const auto manifest = read_manifest(o, "decompose");
  restore(manifest, "paths", d.paths);
  if (manifest && manifest->at("options").contains("burn_in"))
    d.burn_in = manifest->at("options").at("burn_in").get<std::size_t>();
  const LabConfig lab = resolve_config(o, manifest ? &*manifest : nullptr);
  const ScenarioConfig& cfg = lab.scenario;
  if (d.paths < 1) throw ConfigError("--paths must be >= 1");
  const auto result = decompose_variance(cfg, d.paths, cfg.runs, cfg.seed, d.burn_in, o.workers);

  const fs::path dir = prepare_dir(o.out_dir);
  std::vector<std::string> files{"decomposition.csv", "decomposition_summary.csv"};
  {
    auto os = open_out(dir, "decomposition.csv");
    write_decomposition_csv(os, result);
  }
  {
    auto os = open_out(dir, "decomposition_summary.csv");
    write_decomposition_summary_csv(os, result);
  }
  // Bounds apply only when demand is i.i.d. with a known variance.
  if (const auto dv = demand_variance(cfg.demand)) {
    const auto checks = check_bounds(result, scenario_gain_profile(cfg), *dv, scenario_shock_variances(cfg));
    auto os = open_out(dir, "bound_checks.csv");
    write_bound_checks_csv(os, checks);
    files.emplace_back("bound_checks.csv");
  }
  json options{{"paths", d.paths}};
  if (d.burn_in) options["burn_in"] = *d.burn_in;
  write_manifest(dir, "decompose", &lab, options, files);
  std::cout << "decompose: M=" << result.paths << " R=" << result.runs
            << (result.demand_available ? "" : " (demand component unavailable for M=1)") << '\n';
  return kOk;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::optional<std::size_t> steps;
  std::optional<std::size_t> group_size;
};

void write_evaluation_row(std::ostream& os, const std::string& label, const EvaluationReport& r) {
  os << label << ',' << r.record.runs() << ',' << r.mean_cost << ',' << r.std_cost << ',' << r.cv << ','
     << r.max_cost;
  for (double c : r.agent_mean_costs) os << ',' << c;
  os << '\n';
}

void write_evaluation_header(std::ostream& os, std::size_t tiers) {
  os << "policy,runs,mean_cost,std_cost,cv,max_cost";
  for (std::size_t k = 1; k <= tiers; ++k) os << ",tier" << k << "_mean_cost";
  os << '\n' << std::setprecision(12);
}

int cmd_train(const CommonOptions& o, TrainOptions t) {
  const auto manifest = read_manifest(o, "train");
  LabConfig lab = resolve_config(o, manifest ? &*manifest : nullptr);
  if (t.steps) lab.training.steps = *t.steps;
  if (t.group_size) lab.training.group_size = *t.group_size;
  try {
    lab.training.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  const ScenarioConfig& env = lab.scenario;
  const TrainResult res = train(env, lab.training, env.seed, nullptr, o.workers);

  const fs::path dir = prepare_dir(o.out_dir);
  const std::string hash = config_hash(lab);
  {
    auto os = open_out(dir, "training_log.csv");
    write_training_log_csv(os, res.log);
  }
  {
    const auto& pol = dynamic_cast<const CategoricalOrderPolicy&>(*res.policy);
    auto os = open_out(dir, "checkpoint.json");
    os << checkpoint_json(pol, hash).dump(2) << '\n';
  }
  const auto before = evaluate(res.reference, env, lab.training.eval_runs, lab.training.eval_seed, o.workers);
  const auto after = evaluate(res.policy, env, lab.training.eval_runs, lab.training.eval_seed, o.workers);
  {
    auto os = open_out(dir, "evaluation.csv");
    write_evaluation_header(os, env.tiers.size());
    write_evaluation_row(os, "initial", before);
    write_evaluation_row(os, "trained", after);
  }
  write_manifest(dir, "train", &lab, json::object(),
                 {"training_log.csv", "checkpoint.json", "evaluation.csv"});
  std::cout << "train: " << res.log.size() << " steps; eval mean cost " << before.mean_cost << " -> "
            << after.mean_cost << ", cv " << before.cv << " -> " << after.cv << '\n';
  return kOk;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const CommonOptions& o, std::string checkpoint) {
  const auto manifest = read_manifest(o, "eval");
  restore(manifest, "checkpoint", checkpoint);
  const LabConfig lab = resolve_config(o, manifest ? &*manifest : nullptr);
  const ScenarioConfig& cfg = lab.scenario;
  EvaluationReport report;
  json options = json::object();
  if (!checkpoint.empty()) {
    const PolicyPtr policy = std::make_shared<CategoricalOrderPolicy>(load_checkpoint(checkpoint));
    report = evaluate(policy, cfg, cfg.runs, cfg.seed, o.workers);
    options["checkpoint"] = checkpoint;
  } else {
    report = evaluate(build_policies(cfg), cfg, cfg.runs, cfg.seed, o.workers);
  }
  const fs::path dir = prepare_dir(o.out_dir);
  std::vector<std::string> files{"evaluation.csv", "run_costs.csv"};
  {
    auto os = open_out(dir, "evaluation.csv");
    write_evaluation_header(os, cfg.tiers.size());
    write_evaluation_row(os, checkpoint.empty() ? "configured" : "checkpoint", report);
  }
  {
    auto os = open_out(dir, "run_costs.csv");
    os << "run,total_cost\n" << std::setprecision(12);
    for (std::size_t r = 0; r < report.record.runs(); ++r)
      os << report.record.run_ids[r] << ',' << report.record.total_costs[r] << '\n';
  }
  write_ensemble_outputs(dir, report.record, cfg, files);
  write_manifest(dir, "eval", &lab, options, files);
  std::cout << "eval: " << report.record.runs() << " runs, mean cost " << report.mean_cost << ", cv " << report.cv
            << '\n';
  return kOk;
}

// ------------------------------------------------------------------ report

int cmd_report(const CommonOptions& o, std::optional<double> demand_var) {
  const auto manifest = read_manifest(o, "report");
  if (manifest && manifest->at("options").contains("demand_variance"))
    demand_var = manifest->at("options").at("demand_variance").get<double>();
  const LabConfig lab = resolve_config(o, manifest ? &*manifest : nullptr);
  const ScenarioConfig& cfg = lab.scenario;
  const GainProfile gains = scenario_gain_profile(cfg);
  const auto shocks = scenario_shock_variances(cfg);
  const double dv = demand_var ? *demand_var : demand_variance(cfg.demand).value_or(1.0);

  const fs::path dir = prepare_dir(o.out_dir);
  {
    auto os = open_out(dir, "bounds.csv");
    write_bounds_csv(os, bound_reports(gains, dv, shocks));
  }
  {
    auto os = open_out(dir, "gains.csv");
    os << "k,theta,lambda,gamma_k,exact_demand_variance,exact_decision_variance\n" << std::setprecision(12);
    for (std::size_t k = 1; k <= gains.size(); ++k)
      os << k << ',' << gains.tier(k).theta << ',' << gains.tier(k).lambda << ',' << gains.gain(k) << ','
         << exact_demand_variance(k, dv, gains) << ',' << exact_decision_variance(k, shocks, gains) << '\n';
  }
  write_manifest(dir, "report", &lab, json{{"demand_variance", dv}}, {"bounds.csv", "gains.csv"});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bullwhip laboratory: serial supply chains, variance analytics and policy training"};
  app.set_version_flag("--version", std::string("bwlab ") + kVersion);
  app.require_subcommand(1);

  CommonOptions sim_o, ens_o, dec_o, train_o, eval_o, rep_o;
  auto* sim = app.add_subcommand("simulate", "run one episode and write its trajectory");
  add_common(sim, sim_o);

  AnalyzeOptions an_o;
  auto* an = app.add_subcommand("analyze", "closed-form gains and variance bounds over a (theta, lambda) grid");
  an->add_option("--theta", an_o.thetas, "target multipliers")->delimiter(',');
  an->add_option("--lambda", an_o.lambdas, "smoothing weights")->delimiter(',');
  an->add_option("--tiers", an_o.tiers, "tiers k = 1..K")->capture_default_str();
  an->add_option("--demand-variance", an_o.demand_variance, "per-period demand variance")->capture_default_str();
  an->add_option("--shock-variance", an_o.shock_variance, "decision-shock variance of every tier")
      ->capture_default_str();
  an->add_option("-o,--out", an_o.out_dir, "output directory (stdout when omitted)");

  auto* ens = app.add_subcommand("ensemble", "R repeated runs with variance and bullwhip metrics");
  add_common(ens, ens_o);

  DecomposeOptions dec_x;
  auto* dec = app.add_subcommand("decompose", "nested Monte Carlo law-of-total-variance split");
  add_common(dec, dec_o);
  dec->add_option("--paths", dec_x.paths, "demand paths M")->capture_default_str();
  dec->add_option("--burn-in", dec_x.burn_in, "periods discarded from window averages");

  TrainOptions train_x;
  auto* tr = app.add_subcommand("train", "group-relative policy optimization of the categorical policy");
  add_common(tr, train_o);
  tr->add_option("--steps", train_x.steps, "optimization steps");
  tr->add_option("--group-size", train_x.group_size, "episodes per group G");

  std::string checkpoint;
  auto* ev = app.add_subcommand("eval", "evaluate the configured policies or a checkpoint");
  add_common(ev, eval_o);
  ev->add_option("--checkpoint", checkpoint, "categorical policy checkpoint used at every tier");

  std::optional<double> report_dv;
  auto* rep = app.add_subcommand("report", "bound and gain tables for the configured chain");
  add_common(rep, rep_o);
  rep->add_option("--demand-variance", report_dv, "demand variance (default: the regime's, else 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (*sim) return cmd_simulate(sim_o);
    if (*an) return cmd_analyze(an_o);
    if (*ens) return cmd_ensemble(ens_o);
    if (*dec) return cmd_decompose(dec_o, dec_x);
    if (*tr) return cmd_train(train_o, train_x);
    if (*ev) return cmd_eval(eval_o, checkpoint);
    if (*rep) return cmd_report(rep_o, report_dv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const RemoteBudgetExceeded& e) {
    std::cerr << "remote agent failure: " << e.what() << '\n';
    return kRemoteFailure;
  } catch (const InsufficientSampleError& e) {
    std::cerr << "insufficient sample: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}
