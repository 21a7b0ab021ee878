#include "bwlab/remote_agent.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "bwlab/error.hpp"

namespace bwlab {

const std::string& default_prompt_template() {
  static const std::string kTemplate =
      "You are the {role} in the Beer Distribution Game.\n"
      "Your objective is to minimize your total supply chain costs by managing your beer inventory "
      "efficiently. You receive orders from {downstream} and stock up your inventory from the {upstream}.\n"
      "Your only task is to decide, based on your inventory status and incoming order (shown below), "
      "how many new cases of beer you want to buy this week.\n"
      "\n"
      "Here are the costs you face:\n"
      "- Holding Cost: {holding_cost} per case per week.\n"
      "- Backorder Cost: {backorder_cost} per case per week.\n"
      "- Order Lead Time: {order_lead_time} week(s) (your order reaches the {upstream} after this delay).\n"
      "- Shipping Lead Time: {shipping_lead_time} week(s) (your delivery from the {upstream} arrives this "
      "long after they ship).\n"
      "\n"
      "**Your Current Situation (Week {week}):**\n"
      "- Current Inventory: {current_inventory} cases\n"
      "- Current Backlog: {current_backlog} cases\n"
      "- Incoming Order from Downstream ({downstream}): {incoming_order_this_week} cases\n"
      "- Last Order You Placed: {last_order_placed} cases\n"
      "- Last Delivery You Received: {last_delivery_received} cases\n"
      "{pipeline_info}{budget_info}{fixed_cost_info}{order_forecast_info}{feedback_info}\n"
      "\n"
      "---------------------------\n"
      "Your Task:\n"
      "Decide how many cases of beer to order from your upstream this week based on your current situation.\n"
      "\n"
      "Start your response with a JSON object **on its own line** in the following exact format:\n"
      "{\"order_quantity\": <number_of_cases>}\n"
      "\n"
      "Important:\n"
      "- Replace `<number_of_cases>` with your actual numeric decision.\n"
      "- Do not add any text, notes, or punctuation after the JSON.\n"
      "- This will be parsed by a program, so the format must be valid and exact.\n"
      "\n"
      "Example (your response should end like this):\n"
      "{\"order_quantity\": 5}\n";
  return kTemplate;
}

std::string role_name(std::size_t tier, std::size_t tiers) {
  static const char* kFour[] = {"Retailer", "Wholesaler", "Distributor", "Factory"};
  if (tiers == 4 && tier < 4) return kFour[tier];
  return "Tier " + std::to_string(tier + 1);
}

namespace {

std::string format_quantity(double x) {
  if (std::abs(x - std::round(x)) < 1e-9) {
    std::ostringstream os;
    os << static_cast<long long>(std::llround(x));
    return os.str();
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double quantity_from(const nlohmann::json& obj) {
  if (!obj.contains("order_quantity")) throw ProtocolViolation("JSON object lacks \"order_quantity\"");
  const auto& q = obj["order_quantity"];
  if (!q.is_number()) throw ProtocolViolation("order_quantity is not numeric");
  const double v = q.get<double>();
  if (!std::isfinite(v)) throw ProtocolViolation("order_quantity is not finite");
  if (v < 0.0) throw ProtocolViolation("order_quantity is negative");
  return v;
}

}  // namespace

std::string render_prompt(const Observation& obs, const std::string& prompt_template, std::size_t tiers) {
  const std::string downstream = obs.tier == 0 ? "Customer Demand" : role_name(obs.tier - 1, tiers);
  const std::string upstream = obs.tier + 1 < tiers ? role_name(obs.tier + 1, tiers) : "Supplier";
  const std::pair<const char*, std::string> fields[] = {
      {"week", std::to_string(obs.week)},
      {"current_inventory", format_quantity(obs.on_hand)},
      {"current_backlog", format_quantity(obs.backlog)},
      {"incoming_order_this_week", format_quantity(obs.incoming_order)},
      {"last_order_placed", format_quantity(obs.last_order)},
      {"last_delivery_received", format_quantity(obs.last_delivery)},
      {"role", role_name(obs.tier, tiers)},
      {"upstream", upstream},
      {"downstream", downstream},
      {"holding_cost", [&] {
         char b[32];
         std::snprintf(b, sizeof b, "%.2f", obs.holding_rate);
         return std::string(b);
       }()},
      {"backorder_cost", [&] {
         char b[32];
         std::snprintf(b, sizeof b, "%.2f", obs.backlog_rate);
         return std::string(b);
       }()},
      {"order_lead_time", std::to_string(obs.order_delay)},
      {"shipping_lead_time", std::to_string(obs.ship_delay)},
      {"pipeline_info", ""},
      {"budget_info", ""},
      {"fixed_cost_info", ""},
      {"order_forecast_info", ""},
      {"feedback_info", ""},
  };

  std::string out;
  out.reserve(prompt_template.size() + 256);
  std::size_t i = 0;
  while (i < prompt_template.size()) {
    const char c = prompt_template[i];
    if (c == '{') {
      const auto close = prompt_template.find('}', i);
      if (close != std::string::npos) {
        const std::string key = prompt_template.substr(i + 1, close - i - 1);
        const bool identifier =
            !key.empty() && key.find_first_not_of("abcdefghijklmnopqrstuvwxyz_") == std::string::npos;
        if (identifier) {
          bool found = false;
          for (const auto& [name, value] : fields) {
            if (key == name) {
              out += value;
              found = true;
              break;
            }
          }
          if (!found) throw InputError("prompt template has unknown placeholder {" + key + "}");
          i = close + 1;
          continue;
        }
      }
    }
    out += c;
    ++i;
  }
  return out;
}

double parse_order(const std::string& response_text) {
  std::istringstream in(response_text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() != '{') continue;
    nlohmann::json j = nlohmann::json::parse(t, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) continue;
    return quantity_from(j);
  }
  // A pretty-printed object spanning several lines.
  const std::string whole = trim(response_text);
  if (!whole.empty() && whole.front() == '{') {
    nlohmann::json j = nlohmann::json::parse(whole, nullptr, false);
    if (!j.is_discarded() && j.is_object()) return quantity_from(j);
  }
  throw ProtocolViolation("response contains no JSON object line");
}

RemoteAgentPolicy::RemoteAgentPolicy(RemoteAgentConfig config)
    : config_(std::move(config)),
      violations_(std::make_shared<std::atomic<long>>(0)),
      fallbacks_(std::make_shared<std::atomic<long>>(0)) {
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) throw ParameterError("remote endpoint must look like http://host:port/path");
  const auto slash = config_.endpoint.find('/', scheme + 3);
  host_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
  if (config_.retries < 0) throw ParameterError("remote retries must be >= 0");
  if (config_.timeout_ms <= 0) throw ParameterError("remote timeout_ms must be > 0");
  if (config_.prompt_template.empty()) config_.prompt_template = default_prompt_template();
}

Decision RemoteAgentPolicy::decide(const Observation& obs, Rng&) const {
  const std::string prompt = render_prompt(obs, config_.prompt_template, config_.tiers);
  httplib::Client client(host_);
  const auto sec = config_.timeout_ms / 1000;
  const auto usec = (config_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  std::string last_problem;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = client.Post(path_, prompt, "text/plain");
    if (!res) {
      last_problem = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_problem = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      return {parse_order(res->body), std::nullopt};
    } catch (const ProtocolViolation& e) {
      violations_->fetch_add(1);
      last_problem = e.what();
    }
  }
  if (config_.fallback == RemoteAgentConfig::Fallback::kRepeatLastOrder) {
    fallbacks_->fetch_add(1);
    return {obs.last_order, std::nullopt};
  }
  throw RemoteBudgetExceeded("remote agent for tier " + std::to_string(obs.tier) + " failed after " +
                             std::to_string(config_.retries + 1) + " attempts: " + last_problem);
}

}  // namespace bwlab
