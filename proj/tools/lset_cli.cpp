#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lset/csv.hpp"
#include "lset/environment.hpp"
#include "lset/errors.hpp"
#include "lset/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

nlohmann::json read_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw lset::ConfigError("cannot open config '" + file + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw lset::ConfigError(file + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw lset::ConfigError("cannot write '" + path.string() + "'");
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level set estimation experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "out";
  std::string seeds;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Run an experiment config and write metrics/summary CSVs");
  run->add_option("--config", config, "Experiment JSON")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seeds", seeds, "Seed override: 1,2,3 or 0-24");
  run->add_option("--jobs", jobs, "Worker threads over seeds")->check(CLI::PositiveNumber);

  std::vector<std::string> inputs;
  auto* summarize = app.add_subcommand("summarize", "Aggregate metric CSVs into mean and standard error");
  summarize->add_option("inputs", inputs, "Metric CSV files")->required();
  summarize->add_option("--out", out_dir, "Output directory");

  auto* design = app.add_subcommand("design-solve", "Solve one design problem with Frank-Wolfe");
  design->add_option("--config", config, "Request JSON")->required();
  design->add_option("--out", out_dir, "Output directory");

  std::uint64_t seed = 0;
  auto* envgen = app.add_subcommand("env-generate", "Generate an instance and dump its ground truth");
  envgen->add_option("--config", config, "Instance JSON (or experiment JSON with an instance field)")->required();
  envgen->add_option("--seed", seed, "Instance seed");
  envgen->add_option("--out", out_dir, "Output directory");

  auto* oracle = app.add_subcommand("oracle-allocation", "Compute the oracle design for known function values");
  oracle->add_option("--config", config, "Request JSON")->required();
  oracle->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      auto cfg = lset::load_experiment_config(config);
      if (!seeds.empty()) cfg.seeds = lset::parse_seed_list(seeds);
      const auto out = lset::run_experiment(cfg, jobs);
      lset::write_experiment(out, out_dir);
      std::cout << out.rows.size() << " rows written to " << out_dir << "\n";
    } else if (*summarize) {
      const auto rows = lset::summarize_files(inputs);
      auto f = open_out(out_dir, "summary.csv");
      lset::write_summary_rows(f, rows);
    } else if (*design) {
      const auto result = lset::design_solve(read_json(config));
      auto f = open_out(out_dir, "design.json");
      f << result.dump(2) << "\n";
    } else if (*envgen) {
      const auto j = read_json(config);
      const auto spec = lset::parse_instance_spec(j.contains("instance") ? j.at("instance") : j);
      const auto inst = lset::generate_instance(spec, seed);
      auto f = open_out(out_dir, "instance.json");
      f << lset::instance_to_json(*inst).dump(2) << "\n";
    } else if (*oracle) {
      std::size_t dim = 0;
      const auto rows = lset::oracle_allocation_export(read_json(config), dim);
      auto f = open_out(out_dir, "oracle_allocation.csv");
      lset::write_allocation_rows(f, rows, dim);
    }
  } catch (const lset::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lset::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lset::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
