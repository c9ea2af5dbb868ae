#pragma once

// Flat-file formats.
//
//   SymMatrix:       line 1 `d`, then d(d+1)/2 reals, lower triangle row-major
//   BlockSymMatrix:  line 1 `n`, then 3(2n-1) reals, (a, b, c) per block
//   ConePoint:       line 1 `n`, line 2 the 2n+1 coordinates
//   ProbeReport CSV: header `t,h_norm,residual_norm`, one row per grid point,
//                    footer `# slope=<s> implied_order=<p> target=<lambda-1>`
//
// Reals are written with 17 significant digits, which round-trips binary64.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sliceproj/cones.hpp"
#include "sliceproj/error.hpp"
#include "sliceproj/probe.hpp"
#include "sliceproj/project.hpp"
#include "sliceproj/symmat.hpp"

namespace sliceproj {

/// Parse failure in one of the text formats.
class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<double> read_reals(std::istream& in, std::size_t count, const char* what) {
  std::vector<double> out;
  out.reserve(count);
  std::string token;
  while (out.size() < count && in >> token) {
    // strtod rather than stod: underflow to a subnormal is a valid value.
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    const auto used = static_cast<std::size_t>(end - token.c_str());
    if (used != token.size() || !std::isfinite(v))
      throw ParseError(std::string(what) + ": bad number '" + token + "'");
    out.push_back(v);
  }
  if (out.size() != count)
    throw ParseError(std::string(what) + ": expected " + std::to_string(count) + " numbers, got " +
                     std::to_string(out.size()));
  if (in >> token) throw ParseError(std::string(what) + ": trailing data '" + token + "'");
  return out;
}

inline int read_size(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw ParseError(std::string(what) + ": missing size line");
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) throw ParseError(std::string(what) + ": bad size '" + token + "'");
  return v;
}

inline void write_reals(std::ostream& out, std::span<const double> v, std::size_t per_line) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << format_real(v[i]);
    out << ((i + 1) % per_line == 0 || i + 1 == v.size() ? '\n' : ' ');
  }
}

}  // namespace detail

inline SymMatrix read_sym_matrix(std::istream& in) {
  const int d = detail::read_size(in, "SymMatrix");
  if (d <= 0) throw ParseError("SymMatrix: dimension must be positive");
  return {d, detail::read_reals(in, SymMatrix::packed_size(d), "SymMatrix")};
}

inline void write_sym_matrix(std::ostream& out, const SymMatrix& m) {
  out << m.dim() << '\n';
  for (int i = 0; i < m.dim(); ++i) {
    std::vector<double> row(m.packed().begin() + static_cast<long>(i) * (i + 1) / 2,
                            m.packed().begin() + static_cast<long>(i + 1) * (i + 2) / 2);
    detail::write_reals(out, row, row.size());
  }
}

inline BlockSymMatrix read_block_matrix(std::istream& in) {
  const int n = detail::read_size(in, "BlockSymMatrix");
  if (n < kMinConeIndex || n > kMaxConeIndex) throw ParseError("BlockSymMatrix: n must lie in [2, 12]");
  const auto v = detail::read_reals(in, 3 * BlockSymMatrix::block_count(n), "BlockSymMatrix");
  std::vector<Sym2> blocks;
  for (std::size_t k = 0; k < v.size(); k += 3) blocks.push_back({v[k], v[k + 1], v[k + 2]});
  return {n, std::move(blocks)};
}

inline void write_block_matrix(std::ostream& out, const BlockSymMatrix& m) {
  out << m.n() << '\n';
  for (const Sym2& b : m.blocks()) {
    const double row[] = {b.a, b.b, b.c};
    detail::write_reals(out, row, 3);
  }
}

inline ConePoint read_cone_point(std::istream& in) {
  const int n = detail::read_size(in, "ConePoint");
  if (n < kMinConeIndex || n > kMaxConeIndex) throw ParseError("ConePoint: n must lie in [2, 12]");
  const auto v = detail::read_reals(in, static_cast<std::size_t>(2 * n + 1), "ConePoint");
  return {n, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))};
}

inline void write_cone_point(std::ostream& out, const ConePoint& p) {
  out << p.n() << '\n';
  const auto& c = p.coords();
  detail::write_reals(out, std::span<const double>(c.data(), static_cast<std::size_t>(c.size())),
                      static_cast<std::size_t>(c.size()));
}

template <typename T, typename Reader>
T parse_text(const std::string& text, Reader reader) {
  std::istringstream in(text);
  return reader(in);
}

inline nlohmann::json to_json(const SolveStats& s) {
  return {{"iterations", s.iterations}, {"final_residual", s.final_residual},
          {"converged", s.converged}};
}

inline SolveStats solve_stats_from_json(const nlohmann::json& j) {
  try {
    return {j.at("iterations").get<long>(), j.at("final_residual").get<double>(),
            j.at("converged").get<bool>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("SolveStats: ") + e.what());
  }
}

inline nlohmann::json to_json(const ProbeReport& r) {
  return {{"n", r.n},
          {"mode", std::string(to_string(r.mode))},
          {"t_grid", r.t_grid},
          {"h_norms", r.h_norms},
          {"residual_norms", r.residual_norms},
          {"fitted_slope", r.fitted_slope},
          {"intercept", r.intercept},
          {"max_abs_log_deviation", r.max_abs_log_deviation},
          {"implied_order", r.implied_order},
          {"target_lambda", r.target_lambda},
          {"target_order", r.target_order()}};
}

inline ProbeReport probe_report_from_json(const nlohmann::json& j) {
  try {
    ProbeReport r;
    r.n = j.at("n").get<int>();
    r.mode = parse_probe_mode(j.at("mode").get<std::string>());
    r.t_grid = j.at("t_grid").get<std::vector<double>>();
    r.h_norms = j.at("h_norms").get<std::vector<double>>();
    r.residual_norms = j.at("residual_norms").get<std::vector<double>>();
    r.fitted_slope = j.at("fitted_slope").get<double>();
    r.intercept = j.at("intercept").get<double>();
    r.max_abs_log_deviation = j.at("max_abs_log_deviation").get<double>();
    r.implied_order = j.at("implied_order").get<double>();
    r.target_lambda = j.at("target_lambda").get<double>();
    if (r.h_norms.size() != r.t_grid.size() || r.residual_norms.size() != r.t_grid.size())
      throw ParseError("ProbeReport: column lengths differ");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ProbeReport: ") + e.what());
  }
}

inline void write_probe_csv(std::ostream& out, const ProbeReport& r) {
  out << "t,h_norm,residual_norm\n";
  for (std::size_t i = 0; i < r.t_grid.size(); ++i)
    out << format_real(r.t_grid[i]) << ',' << format_real(r.h_norms[i]) << ','
        << format_real(r.residual_norms[i]) << '\n';
  out << "# slope=" << format_real(r.fitted_slope)
      << " implied_order=" << format_real(r.implied_order)
      << " target=" << format_real(r.target_order()) << '\n';
}

/// What the CSV form carries: the three columns and the footer values.
struct ProbeCsv {
  std::vector<double> t_grid;
  std::vector<double> h_norms;
  std::vector<double> residual_norms;
  double slope = 0.0;
  double implied_order = 0.0;
  double target_order = 0.0;
};

inline ProbeCsv read_probe_csv(std::istream& in) {
  ProbeCsv out;
  std::string line;
  if (!std::getline(in, line) || line != "t,h_norm,residual_norm")
    throw ParseError("probe CSV: missing header");
  bool footer = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      double s = 0, p = 0, t = 0;
      if (std::sscanf(line.c_str(), "# slope=%lf implied_order=%lf target=%lf", &s, &p, &t) != 3)
        throw ParseError("probe CSV: bad footer '" + line + "'");
      out.slope = s;
      out.implied_order = p;
      out.target_order = t;
      footer = true;
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    const auto v = detail::read_reals(row, 3, "probe CSV row");
    out.t_grid.push_back(v[0]);
    out.h_norms.push_back(v[1]);
    out.residual_norms.push_back(v[2]);
  }
  if (!footer) throw ParseError("probe CSV: missing footer");
  return out;
}

}  // namespace sliceproj
