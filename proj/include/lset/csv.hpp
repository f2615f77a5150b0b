#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lset {

inline constexpr int kSchemaVersion = 1;

struct MetricRow {
  int schema_version = kSchemaVersion;
  std::string algorithm;
  std::string instance;
  std::uint64_t seed = 0;
  std::size_t checkpoint_samples = 0;
  double f1 = 0.0;
  std::size_t n_good = 0;
  std::size_t n_bad = 0;
  std::size_t n_active = 0;
  int round = 0;
  double wall_time_ms = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct SummaryRow {
  int schema_version = kSchemaVersion;
  std::string algorithm;
  std::string instance;
  std::size_t checkpoint_samples = 0;
  std::size_t n_seeds = 0;
  double f1_mean = 0.0;
  double f1_stderr = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

const std::vector<std::string>& metric_columns();
const std::vector<std::string>& summary_columns();

/// %.17g formatting.
std::string format_double(double v);

void write_metric_rows(std::ostream& os, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metric_rows(std::istream& is);
void write_summary_rows(std::ostream& os, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_rows(std::istream& is);

/// Groups by (algorithm, instance, checkpoint_samples) in sorted order; stderr is
/// the sample standard deviation over sqrt(n), zero for a single seed.
std::vector<SummaryRow> summarize_rows(const std::vector<MetricRow>& rows);

/// Reads metric CSVs, checks each header against the fixed schema, and aggregates.
/// Throws ConfigError naming the offending file and columns.
std::vector<SummaryRow> summarize_files(const std::vector<std::string>& paths);

struct AllocationRow {
  std::size_t arm_index = 0;
  std::vector<double> coords;
  double weight = 0.0;
  /// Round t >= 1, -1 for the 4^t-weighted total, -2 for the oracle design.
  int round = 0;
};

void write_allocation_rows(std::ostream& os, const std::vector<AllocationRow>& rows, std::size_t dim);
std::vector<AllocationRow> read_allocation_rows(std::istream& is);

/// One row per arm for a design vector.
std::vector<AllocationRow> allocation_rows(const Eigen::MatrixXd& points, const std::vector<double>& weights,
                                           int round);

}  // namespace lset
