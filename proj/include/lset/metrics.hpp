#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lset {

/// 2PR / (P + R); 1 when both sets are empty, 0 when exactly one is.
/// Inputs are arm-index sets (order and duplicates ignored).
double f1_score(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

/// Half the L1 distance between two probability vectors of equal length.
double total_variation(std::span<const double> p, std::span<const double> q);

/// Sum_t 4^t lambda_t over rounds t = 1.., normalized to a probability vector.
std::vector<double> round_weighted_total(const std::vector<std::vector<double>>& round_designs);

}  // namespace lset
