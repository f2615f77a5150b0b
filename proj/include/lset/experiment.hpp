#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lset/csv.hpp"
#include "lset/environment.hpp"
#include "lset/gp.hpp"
#include "lset/latte.hpp"
#include "lset/melk.hpp"
#include "lset/milk.hpp"

namespace lset {

enum class AlgorithmType { Melk, Milk, Baseline, Latte };

/// One algorithm entry of an experiment. Parameters left unset in the config
/// (B, sigma, the level) are filled from each generated instance.
struct AlgorithmSpec {
  AlgorithmType type = AlgorithmType::Melk;
  std::string label;
  MelkConfig melk;
  MilkConfig milk;
  BaselineConfig baseline;
  LatteConfig latte;
  std::optional<double> B;
  std::optional<double> sigma;
  std::optional<double> alpha;
  std::optional<double> epsilon;
  std::optional<std::size_t> budget;
};

struct ExperimentConfig {
  std::string name = "experiment";
  InstanceSpec instance;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> checkpoints;
  /// Sampling budget enforced by the environment; baselines and LATTE require one.
  std::optional<std::size_t> budget;
  bool export_allocation = false;
  std::optional<double> gap_floor;

  void validate() const;
};

/// Throws ConfigError with the JSON path of the offending field.
InstanceSpec parse_instance_spec(const nlohmann::json& j, const std::string& path = "instance");
FWConfig parse_fw_config(const nlohmann::json& j, const std::string& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& file);

/// "1,2,5" or an inclusive range "0-24".
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

struct ExperimentOutput {
  std::vector<MetricRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<AllocationRow> allocations;
  std::size_t allocation_dim = 0;
};

/// Runs every algorithm on every seed (seeds in parallel over `jobs` threads).
/// Rows come back sorted by (algorithm, seed, checkpoint) regardless of jobs.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, int jobs = 1);

/// metrics.csv, summary.csv and, when exported, allocations.csv under `dir`.
void write_experiment(const ExperimentOutput& out, const std::string& dir);

/// Ground truth the F1 of `spec` is scored against on `inst`.
std::vector<std::size_t> truth_for(const AlgorithmSpec& spec, const Instance& inst);

nlohmann::json instance_to_json(const Instance& inst);

/// {"instance", "seed", "gamma", "targets", "fw"} -> {"lambda", "value", "iters"}.
nlohmann::json design_solve(const nlohmann::json& request);

/// {"instance", "seed", "gamma", "gap_floor", "objective", "fw"} -> one row per arm, round -2.
std::vector<AllocationRow> oracle_allocation_export(const nlohmann::json& request, std::size_t& dim);

}  // namespace lset
