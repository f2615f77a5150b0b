#include "lset/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "lset/errors.hpp"

namespace lset {

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {"schema_version", "algorithm", "instance", "seed",
                                                "checkpoint_samples", "f1", "n_good", "n_bad",
                                                "n_active", "round", "wall_time_ms"};
  return cols;
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {"schema_version", "algorithm", "instance", "checkpoint_samples",
                                                "n_seeds", "f1_mean", "f1_stderr"};
  return cols;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw InvalidInput("CSV text field '" + s + "' contains a separator");
  }
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("CSV: '" + s + "' is not a number");
  return v;
}

long long to_int(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ConfigError("CSV: '" + s + "' is not an integer");
  return v;
}

unsigned long long to_uint(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || s.front() == '-') throw ConfigError("CSV: '" + s + "' is not a count");
  return v;
}

void expect_header(const std::string& line, const std::vector<std::string>& want, const std::string& what) {
  const auto got = split(line);
  if (got == want) return;
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& c : want) {
    if (std::find(got.begin(), got.end(), c) == got.end()) missing.push_back(c);
  }
  for (const auto& c : got) {
    if (std::find(want.begin(), want.end(), c) == want.end()) extra.push_back(c);
  }
  std::string msg = what + ": header does not match schema";
  if (!missing.empty()) msg += "; missing columns: " + join(missing);
  if (!extra.empty()) msg += "; unexpected columns: " + join(extra);
  if (missing.empty() && extra.empty()) msg += "; columns out of order";
  throw ConfigError(msg);
}

}  // namespace

void write_metric_rows(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << join(metric_columns()) << '\n';
  for (const auto& r : rows) {
    check_field(r.algorithm);
    check_field(r.instance);
    os << r.schema_version << ',' << r.algorithm << ',' << r.instance << ',' << r.seed << ','
       << r.checkpoint_samples << ',' << format_double(r.f1) << ',' << r.n_good << ',' << r.n_bad << ','
       << r.n_active << ',' << r.round << ',' << format_double(r.wall_time_ms) << '\n';
  }
}

std::vector<MetricRow> read_metric_rows(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("metrics CSV is empty");
  expect_header(line, metric_columns(), "metrics CSV");
  std::vector<MetricRow> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != metric_columns().size()) throw ConfigError("metrics CSV: row has " + std::to_string(f.size()) + " fields");
    MetricRow r;
    r.schema_version = static_cast<int>(to_int(f[0]));
    if (r.schema_version != kSchemaVersion) throw ConfigError("metrics CSV: unsupported schema_version " + f[0]);
    r.algorithm = f[1];
    r.instance = f[2];
    r.seed = to_uint(f[3]);
    r.checkpoint_samples = to_uint(f[4]);
    r.f1 = to_double(f[5]);
    r.n_good = to_uint(f[6]);
    r.n_bad = to_uint(f[7]);
    r.n_active = to_uint(f[8]);
    r.round = static_cast<int>(to_int(f[9]));
    r.wall_time_ms = to_double(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_rows(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << join(summary_columns()) << '\n';
  for (const auto& r : rows) {
    check_field(r.algorithm);
    check_field(r.instance);
    os << r.schema_version << ',' << r.algorithm << ',' << r.instance << ',' << r.checkpoint_samples << ','
       << r.n_seeds << ',' << format_double(r.f1_mean) << ',' << format_double(r.f1_stderr) << '\n';
  }
}

std::vector<SummaryRow> read_summary_rows(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("summary CSV is empty");
  expect_header(line, summary_columns(), "summary CSV");
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != summary_columns().size()) throw ConfigError("summary CSV: wrong field count");
    SummaryRow r;
    r.schema_version = static_cast<int>(to_int(f[0]));
    r.algorithm = f[1];
    r.instance = f[2];
    r.checkpoint_samples = to_uint(f[3]);
    r.n_seeds = to_uint(f[4]);
    r.f1_mean = to_double(f[5]);
    r.f1_stderr = to_double(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize_rows(const std::vector<MetricRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.algorithm, r.instance, r.checkpoint_samples}].push_back(r.f1);
  std::vector<SummaryRow> out;
  for (const auto& [key, vals] : groups) {
    SummaryRow s;
    s.algorithm = std::get<0>(key);
    s.instance = std::get<1>(key);
    s.checkpoint_samples = std::get<2>(key);
    s.n_seeds = vals.size();
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    s.f1_mean = mean;
    if (vals.size() > 1) {
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(vals.size() - 1));
      s.f1_stderr = sd / std::sqrt(static_cast<double>(vals.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SummaryRow> summarize_files(const std::vector<std::string>& paths) {
  std::vector<MetricRow> all;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open metrics CSV '" + p + "'");
    try {
      auto rows = read_metric_rows(in);
      all.insert(all.end(), rows.begin(), rows.end());
    } catch (const ConfigError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  }
  return summarize_rows(all);
}

void write_allocation_rows(std::ostream& os, const std::vector<AllocationRow>& rows, std::size_t dim) {
  os << "arm_index";
  for (std::size_t k = 0; k < dim; ++k) os << ",x" << k;
  os << ",weight,round\n";
  for (const auto& r : rows) {
    if (r.coords.size() != dim) throw InvalidInput("allocation row has the wrong coordinate count");
    os << r.arm_index;
    for (double c : r.coords) os << ',' << format_double(c);
    os << ',' << format_double(r.weight) << ',' << r.round << '\n';
  }
}

std::vector<AllocationRow> read_allocation_rows(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("allocation CSV is empty");
  const auto head = split(line);
  if (head.size() < 3 || head.front() != "arm_index" || head[head.size() - 2] != "weight" || head.back() != "round") {
    throw ConfigError("allocation CSV: header must be arm_index, x0.., weight, round");
  }
  const std::size_t dim = head.size() - 3;
  std::vector<AllocationRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != head.size()) throw ConfigError("allocation CSV: wrong field count");
    AllocationRow r;
    r.arm_index = to_uint(f[0]);
    for (std::size_t k = 0; k < dim; ++k) r.coords.push_back(to_double(f[1 + k]));
    r.weight = to_double(f[1 + dim]);
    r.round = static_cast<int>(to_int(f[2 + dim]));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<AllocationRow> allocation_rows(const Eigen::MatrixXd& points, const std::vector<double>& weights,
                                           int round) {
  if (static_cast<std::size_t>(points.rows()) != weights.size()) {
    throw InvalidInput("allocation export: weights do not match the arm count");
  }
  std::vector<AllocationRow> rows;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    AllocationRow r;
    r.arm_index = static_cast<std::size_t>(i);
    for (Eigen::Index k = 0; k < points.cols(); ++k) r.coords.push_back(points(i, k));
    r.weight = weights[static_cast<std::size_t>(i)];
    r.round = round;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lset
