#pragma once

// Result files: curves CSV, metrics CSV and JSON documents.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icl/error.hpp"
#include "icl/eval.hpp"
#include "icl/trainer.hpp"

namespace icl {

/// Shortest decimal form that round-trips.
[[nodiscard]] inline std::string format_real(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

[[nodiscard]] inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline constexpr const char* kCurvesHeader = "method,k,mean,median,ci_lo,ci_hi,n";
inline constexpr const char* kMetricsHeader = "step,d_cur,k_cur,loss";

[[nodiscard]] inline std::string curves_csv(const std::vector<ErrorCurve>& curves) {
  std::string s = std::string(kCurvesHeader) + "\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      s += c.method + "," + std::to_string(p.k) + "," + format_real(p.mean) + "," + format_real(p.median) + "," +
           format_real(p.ci_lo) + "," + format_real(p.ci_hi) + "," + std::to_string(p.n) + "\n";
  return s;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_real_field(const std::string& s, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw Error(where + ": bad number '" + s + "'");
  return v;
}

inline std::size_t parse_count_field(const std::string& s, const std::string& where) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw Error(where + ": bad count '" + s + "'");
  return static_cast<std::size_t>(std::strtoull(s.c_str(), nullptr, 10));
}

}  // namespace detail

/// Parses a curves CSV; errors name the source and 1-based row.
[[nodiscard]] inline std::vector<ErrorCurve> parse_curves_csv(const std::string& text, const std::string& source = "<csv>") {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::vector<ErrorCurve> curves;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = source + ": row " + std::to_string(row);
    if (row == 1) {
      if (line != kCurvesHeader) throw Error(where + ": expected header '" + kCurvesHeader + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) throw Error(where + ": expected 7 fields, found " + std::to_string(f.size()));
    if (f[0].empty()) throw Error(where + ": empty method name");
    CurvePoint p;
    p.k = detail::parse_count_field(f[1], where);
    p.mean = detail::parse_real_field(f[2], where);
    p.median = detail::parse_real_field(f[3], where);
    p.ci_lo = detail::parse_real_field(f[4], where);
    p.ci_hi = detail::parse_real_field(f[5], where);
    p.n = detail::parse_count_field(f[6], where);
    auto it = std::find_if(curves.begin(), curves.end(), [&](const ErrorCurve& c) { return c.method == f[0]; });
    if (it == curves.end()) {
      curves.push_back({f[0], {}});
      it = std::prev(curves.end());
    }
    it->points.push_back(p);
  }
  if (row == 0) throw Error(source + ": empty file");
  return curves;
}

[[nodiscard]] inline std::string metrics_header() { return std::string(kMetricsHeader) + "\n"; }

[[nodiscard]] inline std::string metrics_row(const MetricRow& r) {
  return std::to_string(r.step) + "," + std::to_string(r.d_cur) + "," + std::to_string(r.k_cur) + "," +
         format_real(r.loss) + "\n";
}

[[nodiscard]] inline std::vector<MetricRow> parse_metrics_csv(const std::string& text, const std::string& source = "<csv>") {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::vector<MetricRow> out;
  while (std::getline(in, line)) {
    ++row;
    const std::string where = source + ": row " + std::to_string(row);
    if (row == 1) {
      if (line != kMetricsHeader) throw Error(where + ": expected header '" + kMetricsHeader + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) throw Error(where + ": expected 4 fields");
    out.push_back({detail::parse_count_field(f[0], where), detail::parse_count_field(f[1], where),
                   detail::parse_count_field(f[2], where), detail::parse_real_field(f[3], where)});
  }
  return out;
}

[[nodiscard]] inline nlohmann::ordered_json curves_json(const EvalResult& res) {
  nlohmann::ordered_json curves = nlohmann::ordered_json::array();
  for (const auto& c : res.curves) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : c.points)
      pts.push_back({{"k", p.k}, {"mean", p.mean}, {"median", p.median}, {"ci_lo", p.ci_lo}, {"ci_hi", p.ci_hi}, {"n", p.n}});
    curves.push_back({{"method", c.method}, {"points", pts}});
  }
  return curves;
}

[[nodiscard]] inline nlohmann::ordered_json summary_json(const EvalResult& res) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : res.summary)
    rows.push_back({{"k", r.k}, {"best_mean", r.best_mean}, {"best_median", r.best_median}});
  return rows;
}

[[nodiscard]] inline nlohmann::ordered_json eval_spec_json(const EvalSpec& s) {
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto& m : s.methods) {
    nlohmann::ordered_json j = {{"name", m.name()}};
    if (m.kind == MethodKind::ridge) j["alpha"] = m.alpha;
    methods.push_back(j);
  }
  return {{"d", s.task.d},
          {"k", s.task.k},
          {"prior", kind_name(s.task.prior)},
          {"features", kind_name(s.task.features)},
          {"noise", kind_name(s.task.noise.family)},
          {"noise_scale", s.task.noise.scale},
          {"methods", methods},
          {"k_values", s.k_values},
          {"n_trials", s.n_trials},
          {"metric", to_string(s.metric)},
          {"normalize", to_string(s.normalize)},
          {"n_boot", s.n_boot},
          {"seed", s.seed},
          {"checkpoint", s.checkpoint},
          {"admm_penalty", s.l1.admm_penalty},
          {"admm_max_iter", s.l1.max_iter},
          {"admm_tol", s.l1.primal_tol}};
}

[[nodiscard]] inline std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace icl
