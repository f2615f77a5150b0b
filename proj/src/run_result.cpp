#include "lset/run_result.hpp"

#include "json.hpp"

#include "lset/errors.hpp"

namespace lset {

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::AllClassified: return "all-classified";
    case StopReason::ToleranceRoundCap: return "tolerance-round-cap";
    case StopReason::BudgetExhausted: return "budget-exhausted";
  }
  return "unknown";
}

const Snapshot& RunResult::snapshot_at(std::size_t samples) const {
  if (snapshots.empty()) throw InvalidInput("run has no snapshots");
  const Snapshot* best = &snapshots.front();
  for (const auto& s : snapshots) {
    if (s.samples <= samples) best = &s;
  }
  return *best;
}

std::string RunResult::serialize() const {
  using nlohmann::json;
  json j;
  j["algorithm"] = algorithm;
  j["G_hat"] = G_hat;
  j["B_hat"] = B_hat;
  j["R_hat"] = R_hat;
  j["active"] = active;
  j["total_samples"] = total_samples;
  j["stop_reason"] = stop_reason_name(stop_reason);
  json rs = json::array();
  for (const auto& r : rounds) {
    json pairs = json::array();
    for (const auto& [a, b] : r.active_pairs) pairs.push_back({a, b});
    rs.push_back({{"t", r.t},
                  {"delta_t", r.delta_t},
                  {"gamma", r.gamma},
                  {"lambda", r.lambda},
                  {"g_value", r.g_value},
                  {"q_t", r.q_t},
                  {"n_t", r.n_t},
                  {"active_arms", r.active_arms},
                  {"active_pairs", pairs},
                  {"estimates", r.estimates},
                  {"to_good", r.to_good},
                  {"to_bad", r.to_bad},
                  {"samples_after", r.samples_after}});
  }
  j["rounds"] = rs;
  json ss = json::array();
  for (const auto& s : snapshots) {
    ss.push_back({{"samples", s.samples},
                  {"round", s.round},
                  {"declared", s.declared},
                  {"certified", s.certified},
                  {"n_good", s.n_good},
                  {"n_bad", s.n_bad},
                  {"n_active", s.n_active}});
  }
  j["snapshots"] = ss;
  return j.dump();
}

}  // namespace lset
