#include "lset/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lset/errors.hpp"

namespace lset {

double f1_score(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  std::vector<std::size_t> p(predicted.begin(), predicted.end());
  std::vector<std::size_t> t(truth.begin(), truth.end());
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (p.empty() && t.empty()) return 1.0;
  if (p.empty() || t.empty()) return 0.0;
  std::vector<std::size_t> both;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
  if (both.empty()) return 0.0;
  const double precision = static_cast<double>(both.size()) / static_cast<double>(p.size());
  const double recall = static_cast<double>(both.size()) / static_cast<double>(t.size());
  return 2.0 * precision * recall / (precision + recall);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<double> round_weighted_total(const std::vector<std::vector<double>>& round_designs) {
  if (round_designs.empty()) return {};
  std::vector<double> total(round_designs.front().size(), 0.0);
  double mass = 0.0;
  for (std::size_t r = 0; r < round_designs.size(); ++r) {
    if (round_designs[r].size() != total.size()) throw InvalidInput("round designs differ in length");
    const double w = std::pow(4.0, static_cast<double>(r + 1));
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += w * round_designs[r][i];
    mass += w;
  }
  for (double& v : total) v /= mass;
  return total;
}

}  // namespace lset
