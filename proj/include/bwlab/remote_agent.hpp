#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "bwlab/policy.hpp"

namespace bwlab {

// Default decision prompt for a beer-game tier. Placeholders in braces are
// substituted by render_prompt; the optional information blocks
// ({pipeline_info}, {budget_info}, ...) render empty.
const std::string& default_prompt_template();

// Role labels for a serial chain of `tiers` tiers (Retailer, Wholesaler,
// Distributor, Factory for four tiers; "Tier k" otherwise).
std::string role_name(std::size_t tier, std::size_t tiers);

// Substitutes {week}, {current_inventory}, {current_backlog},
// {incoming_order_this_week}, {last_order_placed}, {last_delivery_received},
// {role}, {upstream}, {downstream}, {holding_cost}, {backorder_cost},
// {order_lead_time}, {shipping_lead_time} and empties the optional blocks.
// Throws InputError when the template still contains an unknown placeholder.
std::string render_prompt(const Observation& obs, const std::string& prompt_template, std::size_t tiers = 4);

// Returns order_quantity from the first line that parses as a JSON object.
// Throws ProtocolViolation for missing/invalid JSON or a negative or
// non-numeric quantity.
double parse_order(const std::string& response_text);

struct RemoteAgentConfig {
  std::string endpoint = "http://127.0.0.1:8080/decide";  // scheme://host[:port]/path
  int timeout_ms = 10000;
  int retries = 2;  // extra attempts after the first
  enum class Fallback { kRepeatLastOrder, kFail } fallback = Fallback::kRepeatLastOrder;
  std::string prompt_template;  // empty selects the default
  std::size_t tiers = 4;

  bool operator==(const RemoteAgentConfig&) const = default;
};

// Posts the rendered prompt (text/plain) to the endpoint and parses the
// response body. Protocol violations and transport errors are retried; once
// the budget is spent the fallback applies (repeat last order, or throw
// RemoteBudgetExceeded).
class RemoteAgentPolicy final : public AgentPolicy {
 public:
  explicit RemoteAgentPolicy(RemoteAgentConfig config);
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "remote"; }

  long violations() const noexcept { return violations_->load(); }
  long fallbacks() const noexcept { return fallbacks_->load(); }
  const RemoteAgentConfig& config() const noexcept { return config_; }

 private:
  RemoteAgentConfig config_;
  std::string host_;
  std::string path_;
  std::shared_ptr<std::atomic<long>> violations_;
  std::shared_ptr<std::atomic<long>> fallbacks_;
};

}  // namespace bwlab
