#pragma once

#include <cstddef>

namespace lset {

/// Noisy evaluation of the unknown function at an arm. Each call consumes one
/// unit of budget; an exhausted oracle throws BudgetExhausted.
class SamplingOracle {
 public:
  virtual ~SamplingOracle() = default;
  virtual double observe(std::size_t arm) = 0;
  virtual std::size_t samples_used() const = 0;
};

}  // namespace lset
