#include "lset/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <thread>

#include "lset/errors.hpp"
#include "lset/metrics.hpp"

namespace lset {

using nlohmann::json;

namespace {

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError(at(path, it.key()) + ": unknown field");
    }
  }
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(path + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> as_doubles(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], at(path, i)));
  return out;
}

template <class F>
void maybe(const json& j, const char* key, F&& f) {
  if (j.contains(key)) f(j.at(key));
}

/// Runs `f`, turning InvalidInput from a validate() call into a ConfigError at `path`.
template <class F>
void validated(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ThresholdSpec parse_threshold(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "value"});
  if (!j.contains("kind") || !j.contains("value")) throw ConfigError(path + ": needs kind and value");
  const std::string kind = as_string(j.at("kind"), at(path, "kind"));
  const double v = as_double(j.at("value"), at(path, "value"));
  if (kind == "explicit") return ThresholdSpec::explicit_alpha(v);
  if (kind == "quantile") return ThresholdSpec::quantile(v);
  if (kind == "implicit") return ThresholdSpec::implicit_epsilon(v);
  throw ConfigError(at(path, "kind") + ": expected explicit, quantile or implicit");
}

InverseRoute parse_route(const std::string& s, const std::string& path) {
  if (s == "auto") return InverseRoute::Auto;
  if (s == "dense") return InverseRoute::Dense;
  if (s == "kernel_trick") return InverseRoute::KernelTrick;
  throw ConfigError(path + ": expected auto, dense or kernel_trick");
}

void parse_phased(const json& j, const std::string& path, PhasedConfig& c) {
  maybe(j, "delta", [&](const json& v) { c.delta = as_double(v, at(path, "delta")); });
  maybe(j, "gamma", [&](const json& v) { c.gamma = as_double(v, at(path, "gamma")); });
  maybe(j, "gamma_decay", [&](const json& v) { c.gamma_decay = as_bool(v, at(path, "gamma_decay")); });
  maybe(j, "beta_tilde", [&](const json& v) { c.beta_tilde = as_double(v, at(path, "beta_tilde")); });
  maybe(j, "max_rounds", [&](const json& v) { c.max_rounds = as_int(v, at(path, "max_rounds")); });
  maybe(j, "fw", [&](const json& v) { c.fw = parse_fw_config(v, at(path, "fw")); });
}

AlgorithmSpec parse_algorithm(const json& j, const std::string& path) {
  require_object(j, path);
  if (!j.contains("type")) throw ConfigError(at(path, "type") + ": missing");
  const std::string type = as_string(j.at("type"), at(path, "type"));
  AlgorithmSpec a;
  auto common = [&] {
    maybe(j, "label", [&](const json& v) { a.label = as_string(v, at(path, "label")); });
    maybe(j, "B", [&](const json& v) { a.B = as_double(v, at(path, "B")); });
    maybe(j, "sigma", [&](const json& v) { a.sigma = as_double(v, at(path, "sigma")); });
    maybe(j, "budget", [&](const json& v) { a.budget = as_count(v, at(path, "budget")); });
  };
  if (type == "melk") {
    check_keys(j, path, {"type", "label", "B", "sigma", "budget", "delta", "gamma", "gamma_decay", "beta_tilde",
                         "max_rounds", "fw", "alpha", "batch_size", "batch_beta_sqrt", "max_batches"});
    a.type = AlgorithmType::Melk;
    common();
    parse_phased(j, path, a.melk);
    maybe(j, "alpha", [&](const json& v) { a.alpha = as_double(v, at(path, "alpha")); });
    maybe(j, "batch_size", [&](const json& v) { a.melk.batch_size = as_count(v, at(path, "batch_size")); });
    maybe(j, "batch_beta_sqrt",
          [&](const json& v) { a.melk.batch_beta_sqrt = as_double(v, at(path, "batch_beta_sqrt")); });
    maybe(j, "max_batches", [&](const json& v) { a.melk.max_batches = as_count(v, at(path, "max_batches")); });
    if (a.label.empty()) a.label = "melk";
  } else if (type == "milk") {
    check_keys(j, path, {"type", "label", "B", "sigma", "budget", "delta", "gamma", "gamma_decay", "beta_tilde",
                         "max_rounds", "fw", "epsilon"});
    a.type = AlgorithmType::Milk;
    common();
    parse_phased(j, path, a.milk);
    maybe(j, "epsilon", [&](const json& v) { a.epsilon = as_double(v, at(path, "epsilon")); });
    if (a.label.empty()) a.label = "milk";
  } else if (type == "baseline") {
    check_keys(j, path, {"type", "label", "B", "sigma", "budget", "policy", "alpha", "epsilon", "beta_sqrt",
                         "frequentist", "delta", "refresh_every"});
    a.type = AlgorithmType::Baseline;
    common();
    if (!j.contains("policy")) throw ConfigError(at(path, "policy") + ": missing");
    const std::string pol = as_string(j.at("policy"), at(path, "policy"));
    validated(at(path, "policy"), [&] { a.baseline.policy = parse_policy(pol); });
    maybe(j, "alpha", [&](const json& v) { a.alpha = as_double(v, at(path, "alpha")); });
    maybe(j, "epsilon", [&](const json& v) { a.epsilon = as_double(v, at(path, "epsilon")); });
    maybe(j, "beta_sqrt", [&](const json& v) { a.baseline.beta_sqrt = as_double(v, at(path, "beta_sqrt")); });
    maybe(j, "frequentist", [&](const json& v) { a.baseline.frequentist = as_bool(v, at(path, "frequentist")); });
    maybe(j, "delta", [&](const json& v) { a.baseline.delta = as_double(v, at(path, "delta")); });
    maybe(j, "refresh_every", [&](const json& v) { a.baseline.refresh_every = as_int(v, at(path, "refresh_every")); });
    if (a.label.empty()) a.label = pol;
  } else if (type == "latte") {
    check_keys(j, path, {"type", "label", "sigma", "budget", "epsilon", "gamma_apt", "additive_threshold"});
    a.type = AlgorithmType::Latte;
    common();
    maybe(j, "epsilon", [&](const json& v) { a.epsilon = as_double(v, at(path, "epsilon")); });
    maybe(j, "gamma_apt", [&](const json& v) { a.latte.gamma_apt = as_double(v, at(path, "gamma_apt")); });
    maybe(j, "additive_threshold",
          [&](const json& v) { a.latte.additive_threshold = as_bool(v, at(path, "additive_threshold")); });
    if (a.label.empty()) a.label = "latte";
  } else {
    throw ConfigError(at(path, "type") + ": expected melk, milk, baseline or latte");
  }
  if (a.label.find_first_of(",\n\r") != std::string::npos) throw ConfigError(at(path, "label") + ": contains a separator");
  return a;
}

/// Level for an algorithm: its own setting, else the instance's resolved objective.
double level_alpha(const AlgorithmSpec& a, const Instance& inst) {
  if (a.alpha) return *a.alpha;
  if (inst.objective.kind != LevelObjective::Kind::Explicit) {
    throw ConfigError(a.label + ": alpha is required when the instance threshold is implicit");
  }
  return inst.objective.alpha;
}

double level_epsilon(const AlgorithmSpec& a, const Instance& inst) {
  if (a.epsilon) return *a.epsilon;
  if (inst.objective.kind != LevelObjective::Kind::Implicit) {
    throw ConfigError(a.label + ": epsilon is required when the instance threshold is explicit");
  }
  return inst.objective.epsilon;
}

MelkConfig resolve_melk(const AlgorithmSpec& a, const Instance& inst) {
  MelkConfig c = a.melk;
  c.alpha = level_alpha(a, inst);
  c.B = a.B.value_or(inst.B);
  c.sigma = a.sigma.value_or(inst.sigma);
  return c;
}

MilkConfig resolve_milk(const AlgorithmSpec& a, const Instance& inst) {
  MilkConfig c = a.milk;
  c.epsilon = level_epsilon(a, inst);
  c.B = a.B.value_or(inst.B);
  c.sigma = a.sigma.value_or(inst.sigma);
  return c;
}

std::optional<std::size_t> run_budget(const AlgorithmSpec& a, const ExperimentConfig& cfg) {
  if (a.budget) return a.budget;
  if (cfg.budget) return cfg.budget;
  return cfg.instance.budget;
}

struct SeedOutput {
  std::vector<MetricRow> rows;
  std::vector<AllocationRow> allocations;
};

MetricRow base_row(const AlgorithmSpec& a, const ExperimentConfig& cfg, std::uint64_t seed, std::size_t checkpoint) {
  MetricRow r;
  r.algorithm = a.label;
  r.instance = cfg.name;
  r.seed = seed;
  r.checkpoint_samples = checkpoint;
  return r;
}

std::vector<AllocationRow> melk_allocations(const RunResult& res, const Instance& inst, const AlgorithmSpec& a,
                                            const ExperimentConfig& cfg) {
  std::vector<AllocationRow> out;
  std::vector<std::vector<double>> designs;
  for (const auto& h : res.rounds) {
    auto rows = allocation_rows(inst.arms.points(), h.lambda, h.t);
    out.insert(out.end(), rows.begin(), rows.end());
    designs.push_back(h.lambda);
  }
  if (!designs.empty()) {
    auto rows = allocation_rows(inst.arms.points(), round_weighted_total(designs), -1);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  LevelObjective obj;
  double gamma = 0.0;
  double floor = 0.0;
  FWConfig fw;
  if (a.type == AlgorithmType::Melk) {
    const MelkConfig c = resolve_melk(a, inst);
    obj = LevelObjective::explicit_threshold(c.alpha);
    gamma = c.gamma;
    floor = c.beta_tilde;
    fw = c.fw;
  } else {
    const MilkConfig c = resolve_milk(a, inst);
    obj = LevelObjective::implicit_fraction(c.epsilon);
    gamma = c.gamma;
    floor = c.beta_tilde;
    fw = c.fw;
  }
  const Design oracle = oracle_allocation(inst.arms, inst.true_f, obj, gamma, fw, cfg.gap_floor.value_or(floor));
  auto rows = allocation_rows(inst.arms.points(),
                              std::vector<double>(oracle.weights.data(), oracle.weights.data() + oracle.weights.size()),
                              -2);
  out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

SeedOutput run_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool export_allocation) {
  SeedOutput out;
  const auto inst = generate_instance(cfg.instance, seed);
  bool exported = false;
  for (const auto& a : cfg.algorithms) {
    const auto truth = truth_for(a, *inst);
    const auto budget = run_budget(a, cfg);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };

    if (a.type == AlgorithmType::Latte) {
      // Fixed-budget: one independent run per checkpoint, with that checkpoint as T.
      LatteConfig lc = a.latte;
      lc.epsilon = level_epsilon(a, *inst);
      lc.sigma = a.sigma.value_or(inst->sigma);
      for (std::size_t c : cfg.checkpoints) {
        lc.budget = c;
        Environment env(inst, seed);
        const LatteResult res = run_latte(inst->arms.size(), env, lc);
        MetricRow r = base_row(a, cfg, seed, c);
        r.f1 = f1_score(res.S_hat, truth);
        r.n_good = res.S_hat.size();
        r.n_bad = inst->arms.size() - res.S_hat.size();
        r.round = res.rounds;
        r.wall_time_ms = elapsed();
        out.rows.push_back(std::move(r));
      }
      continue;
    }

    Environment env(inst, seed, budget);
    RunResult res;
    switch (a.type) {
      case AlgorithmType::Melk:
        res = run_melk(inst->arms, env, resolve_melk(a, *inst), seed);
        break;
      case AlgorithmType::Milk:
        res = run_milk(inst->arms, env, resolve_milk(a, *inst), seed);
        break;
      case AlgorithmType::Baseline: {
        BaselineConfig bc = a.baseline;
        bc.objective = bc.policy == Policy::LseImp ? LevelObjective::implicit_fraction(level_epsilon(a, *inst))
                                                   : LevelObjective::explicit_threshold(level_alpha(a, *inst));
        bc.B = a.B.value_or(inst->B);
        bc.sigma = a.sigma.value_or(inst->sigma);
        if (!budget) throw ConfigError(a.label + ": baselines need a budget");
        bc.budget = *budget;
        bc.checkpoints = cfg.checkpoints;
        res = run_baseline(inst->arms, env, bc);
        break;
      }
      case AlgorithmType::Latte:
        break;
    }
    const double ms = elapsed();
    for (std::size_t c : cfg.checkpoints) {
      const Snapshot& s = res.snapshot_at(c);
      MetricRow r = base_row(a, cfg, seed, c);
      r.f1 = f1_score(s.declared, truth);
      r.n_good = s.n_good;
      r.n_bad = s.n_bad;
      r.n_active = s.n_active;
      r.round = s.round;
      r.wall_time_ms = ms;
      out.rows.push_back(std::move(r));
    }
    if (export_allocation && !exported && (a.type == AlgorithmType::Melk || a.type == AlgorithmType::Milk)) {
      out.allocations = melk_allocations(res, *inst, a, cfg);
      exported = true;
    }
  }
  return out;
}

}  // namespace

InstanceSpec parse_instance_spec(const json& j, const std::string& path) {
  check_keys(j, path, {"generator", "name", "lengthscale", "grid", "grid_dim", "frequency", "n_points", "n", "d",
                       "xi_range", "points", "theta", "means", "sigma", "threshold", "B", "budget"});
  InstanceSpec s;
  if (!j.contains("generator")) throw ConfigError(at(path, "generator") + ": missing");
  validated(at(path, "generator"), [&] { s.generator = parse_generator(as_string(j.at("generator"), at(path, "generator"))); });
  s.name = generator_name(s.generator);
  maybe(j, "name", [&](const json& v) { s.name = as_string(v, at(path, "name")); });
  maybe(j, "lengthscale", [&](const json& v) { s.lengthscale = as_double(v, at(path, "lengthscale")); });
  maybe(j, "grid", [&](const json& v) { s.grid = as_int(v, at(path, "grid")); });
  maybe(j, "grid_dim", [&](const json& v) { s.grid_dim = as_int(v, at(path, "grid_dim")); });
  maybe(j, "frequency", [&](const json& v) { s.frequency = as_double(v, at(path, "frequency")); });
  maybe(j, "n_points", [&](const json& v) { s.n_points = as_int(v, at(path, "n_points")); });
  maybe(j, "n", [&](const json& v) { s.n = as_int(v, at(path, "n")); });
  maybe(j, "d", [&](const json& v) { s.d = as_int(v, at(path, "d")); });
  maybe(j, "xi_range", [&](const json& v) { s.xi_range = as_double(v, at(path, "xi_range")); });
  maybe(j, "points", [&](const json& v) {
    const std::string p = at(path, "points");
    if (!v.is_array() || v.empty()) throw ConfigError(p + ": expected a nonempty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < v.size(); ++i) rows.push_back(as_doubles(v[i], at(p, i)));
    const std::size_t d = rows.front().size();
    s.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d) throw ConfigError(at(p, i) + ": row length differs from row 0");
      for (std::size_t k = 0; k < d; ++k) s.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  });
  maybe(j, "theta", [&](const json& v) {
    const auto t = as_doubles(v, at(path, "theta"));
    s.theta = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  });
  maybe(j, "means", [&](const json& v) { s.means = as_doubles(v, at(path, "means")); });
  maybe(j, "sigma", [&](const json& v) { s.sigma = as_double(v, at(path, "sigma")); });
  maybe(j, "threshold", [&](const json& v) { s.threshold = parse_threshold(v, at(path, "threshold")); });
  maybe(j, "B", [&](const json& v) { s.B = as_double(v, at(path, "B")); });
  maybe(j, "budget", [&](const json& v) { s.budget = as_count(v, at(path, "budget")); });
  validated(path, [&] { s.validate(); });
  return s;
}

FWConfig parse_fw_config(const json& j, const std::string& path) {
  check_keys(j, path, {"max_iters", "step_rule", "step", "init_vertex", "stop_tol", "route"});
  FWConfig c;
  maybe(j, "max_iters", [&](const json& v) { c.max_iters = as_int(v, at(path, "max_iters")); });
  maybe(j, "step_rule", [&](const json& v) {
    const std::string s = as_string(v, at(path, "step_rule"));
    if (s == "harmonic") {
      c.step_rule = StepRule::Harmonic;
    } else if (s == "fixed") {
      c.step_rule = StepRule::Fixed;
    } else {
      throw ConfigError(at(path, "step_rule") + ": expected harmonic or fixed");
    }
  });
  maybe(j, "step", [&](const json& v) { c.step = as_double(v, at(path, "step")); });
  maybe(j, "init_vertex", [&](const json& v) { c.init_vertex = as_count(v, at(path, "init_vertex")); });
  maybe(j, "stop_tol", [&](const json& v) { c.stop_tol = as_double(v, at(path, "stop_tol")); });
  maybe(j, "route", [&](const json& v) { c.route = parse_route(as_string(v, at(path, "route")), at(path, "route")); });
  validated(path, [&] { c.validate(); });
  return c;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw ConfigError("algorithms: at least one algorithm is required");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (checkpoints.empty()) throw ConfigError("checkpoints: at least one checkpoint is required");
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1]) throw ConfigError(at("checkpoints", i) + ": must be strictly increasing");
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    const auto& a = algorithms[i];
    if (std::find(labels.begin(), labels.end(), a.label) != labels.end()) {
      throw ConfigError(at(at("algorithms", i), "label") + ": duplicate label '" + a.label + "'");
    }
    labels.push_back(a.label);
    const bool has_budget = a.budget || budget || instance.budget;
    if (a.type == AlgorithmType::Baseline && !has_budget) {
      throw ConfigError(at("algorithms", i) + ": baselines need a budget");
    }
  }
}

ExperimentConfig parse_experiment_config(const json& j) {
  check_keys(j, "", {"name", "instance", "algorithms", "seeds", "checkpoints", "budget", "allocation"});
  ExperimentConfig c;
  maybe(j, "name", [&](const json& v) { c.name = as_string(v, "name"); });
  if (c.name.find_first_of(",\n\r") != std::string::npos) throw ConfigError("name: contains a separator");
  if (!j.contains("instance")) throw ConfigError("instance: missing");
  c.instance = parse_instance_spec(j.at("instance"));
  if (!j.contains("algorithms") || !j.at("algorithms").is_array()) throw ConfigError("algorithms: expected an array");
  for (std::size_t i = 0; i < j.at("algorithms").size(); ++i) {
    c.algorithms.push_back(parse_algorithm(j.at("algorithms")[i], at("algorithms", i)));
  }
  if (!j.contains("seeds")) throw ConfigError("seeds: missing");
  const json& s = j.at("seeds");
  if (s.is_array()) {
    for (std::size_t i = 0; i < s.size(); ++i) c.seeds.push_back(as_count(s[i], at("seeds", i)));
  } else if (s.is_object()) {
    check_keys(s, "seeds", {"count", "start"});
    if (!s.contains("count")) throw ConfigError("seeds.count: missing");
    const std::size_t count = as_count(s.at("count"), "seeds.count");
    std::size_t start = 0;
    maybe(s, "start", [&](const json& v) { start = as_count(v, "seeds.start"); });
    for (std::size_t i = 0; i < count; ++i) c.seeds.push_back(start + i);
  } else {
    throw ConfigError("seeds: expected a list or {count, start}");
  }
  if (!j.contains("checkpoints") || !j.at("checkpoints").is_array()) throw ConfigError("checkpoints: expected an array");
  for (std::size_t i = 0; i < j.at("checkpoints").size(); ++i) {
    c.checkpoints.push_back(as_count(j.at("checkpoints")[i], at("checkpoints", i)));
  }
  maybe(j, "budget", [&](const json& v) { c.budget = as_count(v, "budget"); });
  maybe(j, "allocation", [&](const json& v) {
    check_keys(v, "allocation", {"export", "gap_floor"});
    maybe(v, "export", [&](const json& e) { c.export_allocation = as_bool(e, "allocation.export"); });
    maybe(v, "gap_floor", [&](const json& g) { c.gap_floor = as_double(g, "allocation.gap_floor"); });
  });
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config '" + file + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(file + ": " + e.what());
  }
  return parse_experiment_config(j);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  auto num = [&](const std::string& t) -> std::uint64_t {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("--seeds: '" + t + "' is not a seed");
    }
    return std::stoull(t);
  };
  const auto dash = s.find('-');
  if (dash != std::string::npos && s.find(',') == std::string::npos) {
    const auto lo = num(s.substr(0, dash));
    const auto hi = num(s.substr(dash + 1));
    if (hi < lo) throw ConfigError("--seeds: empty range '" + s + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    out.push_back(num(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::size_t> truth_for(const AlgorithmSpec& a, const Instance& inst) {
  switch (a.type) {
    case AlgorithmType::Melk:
      return true_sets_and_gaps(inst.true_f, LevelObjective::explicit_threshold(level_alpha(a, inst))).good;
    case AlgorithmType::Milk:
      return true_sets_and_gaps(inst.true_f, LevelObjective::implicit_fraction(level_epsilon(a, inst))).good;
    case AlgorithmType::Baseline:
      if (a.baseline.policy == Policy::LseImp) {
        return true_sets_and_gaps(inst.true_f, LevelObjective::implicit_fraction(level_epsilon(a, inst))).good;
      }
      return true_sets_and_gaps(inst.true_f, LevelObjective::explicit_threshold(level_alpha(a, inst))).good;
    case AlgorithmType::Latte: {
      const double eps = level_epsilon(a, inst);
      if (!a.latte.additive_threshold) {
        return true_sets_and_gaps(inst.true_f, LevelObjective::implicit_fraction(eps)).good;
      }
      const double level = *std::max_element(inst.true_f.begin(), inst.true_f.end()) - eps;
      std::vector<std::size_t> good;
      for (std::size_t i = 0; i < inst.true_f.size(); ++i) {
        if (inst.true_f[i] >= level) good.push_back(i);
      }
      return good;
    }
  }
  return {};
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<SeedOutput> per_seed(n_seeds);
  std::vector<std::exception_ptr> errors(n_seeds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n_seeds; k = next++) {
      try {
        per_seed[k] = run_seed(cfg, cfg.seeds[k], cfg.export_allocation && k == 0);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, n_seeds);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentOutput out;
  for (auto& s : per_seed) out.rows.insert(out.rows.end(), s.rows.begin(), s.rows.end());
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.algorithm, a.seed, a.checkpoint_samples) < std::tie(b.algorithm, b.seed, b.checkpoint_samples);
  });
  out.summary = summarize_rows(out.rows);
  if (cfg.export_allocation) {
    out.allocations = std::move(per_seed.front().allocations);
    out.allocation_dim = out.allocations.empty() ? 0 : out.allocations.front().coords.size();
  }
  return out;
}

void write_experiment(const ExperimentOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + (fs::path(dir) / name).string() + "'");
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metric_rows(f, out.rows);
  }
  {
    auto f = open("summary.csv");
    write_summary_rows(f, out.summary);
  }
  if (!out.allocations.empty()) {
    auto f = open("allocations.csv");
    write_allocation_rows(f, out.allocations, out.allocation_dim);
  }
}

json instance_to_json(const Instance& inst) {
  json j;
  j["generator"] = generator_name(inst.spec.generator);
  j["name"] = inst.spec.name;
  j["seed"] = inst.seed;
  const auto& pts = inst.arms.points();
  json rows = json::array();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(pts.cols()));
    for (Eigen::Index k = 0; k < pts.cols(); ++k) r[static_cast<std::size_t>(k)] = pts(i, k);
    rows.push_back(r);
  }
  j["points"] = rows;
  j["kernel"] = inst.arms.kernel().kind == KernelKind::Linear ? "linear" : "squared_exponential";
  j["lengthscale"] = inst.arms.kernel().lengthscale;
  j["true_f"] = inst.true_f;
  j["sigma"] = inst.sigma;
  j["B"] = inst.B;
  j["theta_norm"] = inst.theta_norm ? json(*inst.theta_norm) : json(nullptr);
  const TrueSets ts = true_sets_and_gaps(inst.true_f, inst.objective);
  if (inst.objective.kind == LevelObjective::Kind::Explicit) {
    j["objective"] = {{"kind", "explicit"}, {"alpha", inst.objective.alpha}};
  } else {
    j["objective"] = {{"kind", "implicit"}, {"epsilon", inst.objective.epsilon}};
  }
  j["level"] = ts.level;
  j["good"] = ts.good;
  j["delta_min"] = ts.delta_min;
  j["degenerate"] = ts.degenerate;
  return j;
}

namespace {

struct SolveInputs {
  std::shared_ptr<const Instance> inst;
  double gamma = 0.0;
  FWConfig fw;
};

SolveInputs solve_inputs(const json& req, std::initializer_list<const char*> keys) {
  check_keys(req, "", keys);
  if (!req.contains("instance")) throw ConfigError("instance: missing");
  SolveInputs s;
  std::uint64_t seed = 0;
  maybe(req, "seed", [&](const json& v) { seed = as_count(v, "seed"); });
  maybe(req, "gamma", [&](const json& v) { s.gamma = as_double(v, "gamma"); });
  maybe(req, "fw", [&](const json& v) { s.fw = parse_fw_config(v, "fw"); });
  s.inst = generate_instance(parse_instance_spec(req.at("instance")), seed);
  return s;
}

LevelObjective parse_objective(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "alpha", "epsilon"});
  const std::string kind = j.contains("kind") ? as_string(j.at("kind"), at(path, "kind")) : "";
  if (kind == "explicit") {
    if (!j.contains("alpha")) throw ConfigError(at(path, "alpha") + ": missing");
    return LevelObjective::explicit_threshold(as_double(j.at("alpha"), at(path, "alpha")));
  }
  if (kind == "implicit") {
    if (!j.contains("epsilon")) throw ConfigError(at(path, "epsilon") + ": missing");
    return LevelObjective::implicit_fraction(as_double(j.at("epsilon"), at(path, "epsilon")));
  }
  throw ConfigError(at(path, "kind") + ": expected explicit or implicit");
}

}  // namespace

json design_solve(const json& req) {
  const SolveInputs s = solve_inputs(req, {"instance", "seed", "gamma", "fw", "targets"});
  const std::size_t n = s.inst->arms.size();
  DesignProblem p{s.inst->arms, {}, s.gamma, {}, {}};
  const json targets = req.contains("targets") ? req.at("targets") : json{{"kind", "arms"}};
  check_keys(targets, "targets", {"kind", "epsilon", "combos"});
  const std::string kind = targets.contains("kind") ? as_string(targets.at("kind"), "targets.kind") : "";
  if (kind == "arms") {
    for (std::size_t i = 0; i < n; ++i) p.targets.push_back(FeatureCombo::arm(i));
  } else if (kind == "pairs") {
    if (!targets.contains("epsilon")) throw ConfigError("targets.epsilon: missing");
    const double eps = as_double(targets.at("epsilon"), "targets.epsilon");
    for (const auto& [i, j] : all_ordered_pairs(n)) p.targets.push_back(pair_combo(i, j, eps));
  } else if (kind == "combos") {
    const json& cs = targets.contains("combos") ? targets.at("combos") : json();
    if (!cs.is_array()) throw ConfigError("targets.combos: expected an array of [[arm, coef], ...] lists");
    for (std::size_t t = 0; t < cs.size(); ++t) {
      const std::string path = at("targets.combos", t);
      if (!cs[t].is_array()) throw ConfigError(path + ": expected a list of [arm, coef]");
      FeatureCombo c;
      for (std::size_t k = 0; k < cs[t].size(); ++k) {
        const json& term = cs[t][k];
        if (!term.is_array() || term.size() != 2) throw ConfigError(at(path, k) + ": expected [arm, coef]");
        c.add(as_count(term[0], at(path, k) + "[0]"), as_double(term[1], at(path, k) + "[1]"));
      }
      validated(path, [&] { c.validate(n); });
      p.targets.push_back(std::move(c));
    }
  } else {
    throw ConfigError("targets.kind: expected arms, pairs or combos");
  }
  validated("", [&] { p.validate(); });
  const FWResult r = frank_wolfe_design(p, s.fw);
  return {{"lambda", std::vector<double>(r.lambda.weights.data(), r.lambda.weights.data() + n)},
          {"value", r.value},
          {"iters", r.iters}};
}

std::vector<AllocationRow> oracle_allocation_export(const json& req, std::size_t& dim) {
  const SolveInputs s = solve_inputs(req, {"instance", "seed", "gamma", "fw", "gap_floor", "objective"});
  LevelObjective obj = s.inst->objective;
  maybe(req, "objective", [&](const json& v) { obj = parse_objective(v, "objective"); });
  double floor = 0.0;
  maybe(req, "gap_floor", [&](const json& v) { floor = as_double(v, "gap_floor"); });
  const Design d = oracle_allocation(s.inst->arms, s.inst->true_f, obj, s.gamma, s.fw, floor);
  dim = static_cast<std::size_t>(s.inst->arms.points().cols());
  return allocation_rows(s.inst->arms.points(),
                         std::vector<double>(d.weights.data(), d.weights.data() + d.weights.size()), -2);
}

}  // namespace lset
