#pragma once

// Command implementations behind the `pnn` tool: CSV ingestion, run
// configuration and JSON reports.

#include "pnn/bench.hpp"
#include "pnn/core.hpp"
#include "pnn/estimators.hpp"
#include "pnn/risk.hpp"
#include "pnn/width.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace pnn::app {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or unreadable input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Parses rows of comma-separated decimals (no header). Blank lines are
/// skipped; every row must have the same number of fields.
inline Matrix parse_matrix_csv(std::string_view text, const std::string& name = "<input>") {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;

    std::vector<double> row;
    std::size_t field_start = 0;
    std::size_t column = 1;
    while (true) {
      const auto comma = line.find(',', field_start);
      const std::string_view raw = line.substr(
          field_start, comma == std::string_view::npos ? std::string_view::npos : comma - field_start);
      const std::string_view field = detail::trim(raw);
      double value = 0.0;
      const char* begin = field.data();
      const char* end = field.data() + field.size();
      if (!field.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(name + ": line " + std::to_string(line_no) + ", column " +
                         std::to_string(column) + ": cannot parse '" + std::string(field) +
                         "' as a number");
      }
      if (!std::isfinite(value)) {
        throw ParseError(name + ": line " + std::to_string(line_no) + ", column " +
                         std::to_string(column) + ": non-finite value");
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      field_start = comma + 1;
      ++column;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(name + ": line " + std::to_string(line_no) + ": ragged row with " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(name + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Matrix load_matrix_csv(const std::string& path) {
  return parse_matrix_csv(read_file(path), path);
}

/// A vector stored either as one column or as one row.
inline Vector load_vector_csv(const std::string& path) {
  const Matrix m = load_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ParseError(path + ": expected a single row or a single column");
}

/// 17 significant digits, which round-trips every double.
inline std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << format_matrix_csv(m);
}

// ---------------------------------------------------------------------------
// Configuration

enum class Command { width, estimate, adapt, risk, bench };
enum class BenchName { lemma7, example1, identity };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::width: return "width";
    case Command::estimate: return "estimate";
    case Command::adapt: return "adapt";
    case Command::risk: return "risk";
    case Command::bench: return "bench";
  }
  return "?";
}

inline const char* to_string(BenchName b) {
  switch (b) {
    case BenchName::lemma7: return "lemma7";
    case BenchName::example1: return "example1";
    case BenchName::identity: return "identity";
  }
  return "?";
}

inline BenchName parse_bench_name(const std::string& s) {
  if (s == "lemma7") return BenchName::lemma7;
  if (s == "example1") return BenchName::example1;
  if (s == "identity") return BenchName::identity;
  throw InvalidArgument("unknown bench '" + s + "' (expected lemma7, example1 or identity)");
}

struct RunConfig {
  Command command = Command::width;
  std::string design_path;
  std::optional<std::string> obs_path;
  double sigma = 1.0;
  double q = 1.0;
  double radius = 1.0;
  std::uint64_t seed = 42;
  int trials = 200;
  double tol = 1e-6;
  int max_iter = 20000;
  std::optional<std::string> output_path;
  BenchName bench_name = BenchName::lemma7;
};

/// Command output plus whether every solver certified its result.
struct Report {
  json body;
  bool converged = true;
};

inline json config_echo(const RunConfig& cfg) {
  json c;
  c["command"] = to_string(cfg.command);
  if (cfg.command == Command::bench) {
    c["bench"] = to_string(cfg.bench_name);
  } else {
    c["design"] = cfg.design_path;
    c["q"] = cfg.q;
    c["radius"] = cfg.radius;
  }
  if (cfg.obs_path) c["obs"] = *cfg.obs_path;
  c["sigma"] = cfg.sigma;
  c["seed"] = cfg.seed;
  c["trials"] = cfg.trials;
  c["tol"] = cfg.tol;
  c["max_iter"] = cfg.max_iter;
  return c;
}

inline json envelope(const RunConfig& cfg) {
  json j;
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  j["config"] = config_echo(cfg);
  return j;
}

inline json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Relative l1 tolerance: tol * (1 + ||b||^2) for each sub-problem rhs b.
inline L1Options l1_options(const RunConfig& cfg) {
  L1Options o;
  o.rel_tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  return o;
}

inline WidthOptions width_options(const RunConfig& cfg) {
  WidthOptions o;
  o.seed = cfg.seed;
  return o;
}

inline void validate(const RunConfig& cfg) {
  require(std::isfinite(cfg.sigma) && cfg.sigma >= 0.0, "--sigma must be nonnegative");
  require(cfg.q > 0.0 && cfg.q <= 1.0, "--q must lie in (0, 1]");
  require(std::isfinite(cfg.radius) && cfg.radius >= 0.0, "--radius must be nonnegative");
  require(cfg.trials >= 1, "--trials must be positive");
  require(cfg.tol >= 0.0, "--tol must be nonnegative");
  require(cfg.max_iter >= 0, "--max-iter must be nonnegative");
  if (cfg.command != Command::bench)
    require(!cfg.design_path.empty(), "--design is required");
  if (cfg.command == Command::estimate || cfg.command == Command::adapt)
    require(cfg.obs_path.has_value(), "--obs is required");
}

inline ProblemInstance load_instance(const RunConfig& cfg) {
  return ProblemInstance(load_matrix_csv(cfg.design_path), cfg.q, cfg.radius, cfg.sigma);
}

inline Vector load_observation(const RunConfig& cfg, Index n) {
  Vector y = load_vector_csv(*cfg.obs_path);
  if (y.size() != n)
    throw ParseError(*cfg.obs_path + ": observation has " + std::to_string(y.size()) +
                     " entries, design has " + std::to_string(n) + " rows");
  return y;
}

// ---------------------------------------------------------------------------
// Commands

inline json profile_json(const WidthProfile& prof) {
  json j;
  j["ks"] = prof.ks;
  j["relax_lower"] = prof.relax_lower;
  j["relax_upper"] = prof.relax_upper;
  j["achieved"] = prof.achieved;
  j["sources"] = prof.sources;
  j["iterations"] = prof.iterations;
  std::vector<bool> conv(prof.converged.begin(), prof.converged.end());
  j["converged"] = conv;
  return j;
}

/// Width profile of C X.
inline Report run_width(const RunConfig& cfg) {
  validate(cfg);
  const ProblemInstance inst = load_instance(cfg);
  const WidthProfile prof = width_profile(inst.scaled_design(), width_options(cfg));
  Report rep{envelope(cfg), true};
  rep.body["width"] = profile_json(prof);
  // Width bounds stay valid without a closed relaxation gap; only reported.
  rep.body["relaxation_converged"] = prof.all_converged();
  return rep;
}

/// Projected nearest neighbor estimate with automatic choice of k.
inline Report run_estimate(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.q != 1.0)
    throw InvalidArgument(
        "estimate requires --q 1: the nearest point on X l_q(C) for q < 1 is a nonconvex "
        "problem with no known efficient algorithm; use `risk` for q < 1 certificates");
  const ProblemInstance inst = load_instance(cfg);
  const Vector y = load_observation(cfg, inst.n());
  const WidthProfile prof = width_profile(inst.scaled_design(), width_options(cfg));
  const PNNSelection sel = pnn_select(inst, prof);
  const PNNEstimate est = pnn_estimate(inst, y, sel, l1_options(cfg));

  Report rep{envelope(cfg), est.nn.converged};
  rep.body["k_star"] = sel.k_star;
  rep.body["r"] = sel.r;
  rep.body["z"] = sel.z;
  rep.body["y_hat"] = to_json(est.y_hat);
  rep.body["vi_residual"] = est.nn.vi_residual;
  rep.body["vi_tolerance"] = est.nn.tolerance;
  rep.body["converged"] = est.nn.converged;
  return rep;
}

/// Adaptive estimate; the radius flag is not used.
inline Report run_adapt(const RunConfig& cfg) {
  validate(cfg);
  const ProblemInstance inst = load_instance(cfg);
  const Vector y = load_observation(cfg, inst.n());
  const WidthProfile prof = width_profile(inst.design(), width_options(cfg));
  const AdaptiveResult res = adaptive_estimate(inst, y, prof, l1_options(cfg));

  Report rep{envelope(cfg), true};
  json records = json::array();
  for (const auto& r : res.trace.records) {
    json jr;
    jr["k"] = r.k;
    jr["delta"] = r.delta;
    jr["radius"] = std::isfinite(r.radius) ? json(r.radius) : json("inf");
    jr["stat"] = r.stat;
    jr["threshold"] = r.threshold;
    jr["accepted"] = r.accepted;
    records.push_back(jr);
  }
  rep.body["records"] = records;
  rep.body["final_k"] = res.trace.final_k ? json(*res.trace.final_k) : json("fallback");
  rep.body["y_hat"] = to_json(res.y_hat);
  return rep;
}

inline json certificate_json(const RiskCertificate& c) {
  json j;
  j["q"] = c.q;
  j["sigma"] = c.sigma;
  j["c_q"] = c.c_q;
  j["upper_terms"] = c.terms;
  j["upper"] = c.upper;
  j["k_upper"] = c.k_upper;
  j["lower"] = c.lower;
  j["k_lower"] = c.k_lower;
  j["ratio"] = std::isfinite(c.ratio) ? json(c.ratio) : json("inf");
  j["proj_risk"] = c.proj_risk;
  j["widths_converged"] = c.widths_converged;
  j["constants"] = "absolute constants fixed to 1";
  return j;
}

/// Minimax risk certificate for any q in (0, 1].
inline Report run_risk(const RunConfig& cfg) {
  validate(cfg);
  const ProblemInstance inst = load_instance(cfg);
  const WidthProfile prof = width_profile(inst.scaled_design(), width_options(cfg));
  Report rep{envelope(cfg), true};
  rep.body["certificate"] = certificate_json(minimax_certificate(inst, prof));
  rep.body["width"] = profile_json(prof);
  rep.body["euclidean_ball_lower"] =
      euclidean_ball_lower(inst.n(), max_projected_norm(ProjectionOperator::identity(inst.n()),
                                                         inst.scaled_design()),
                           inst.sigma());
  return rep;
}

inline json mc_json(const MonteCarloReport& r) {
  json j;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  j["means"] = r.means;
  j["std_errors"] = r.std_errors;
  j["max_mean"] = r.max_mean;
  j["max_std_error"] = r.max_std_error();
  j["argmax"] = r.argmax;
  return j;
}

/// Desk-scale settings of the three benchmark scenarios.
inline constexpr Index kExample1N = 8;
inline constexpr Index kExample1K = 4;
inline constexpr Index kIdentityN = 256;
inline constexpr int kIdentityRepeats = 2;

inline Report run_bench(const RunConfig& cfg) {
  validate(cfg);
  Report rep{envelope(cfg), true};
  json& b = rep.body;
  b["bench"] = to_string(cfg.bench_name);
  switch (cfg.bench_name) {
    case BenchName::lemma7: {
      const auto r = bench::ellipsoid_gap({64, 256, 1024}, cfg.trials, cfg.seed);
      json rows = json::array();
      for (const auto& row : r.rows) {
        rows.push_back({{"n", row.n},
                        {"nn_risk", row.nn_risk},
                        {"nn_se", row.nn_se},
                        {"proj_risk", row.proj_risk},
                        {"proj_se", row.proj_se},
                        {"proj_risk_bound", 2.0},
                        {"ratio", row.ratio}});
      }
      b["rows"] = rows;
      b["growth_exponent"] = r.growth_exponent;
      break;
    }
    case BenchName::example1: {
      const auto r = bench::product_gap(kExample1N, kExample1K, cfg.trials, cfg.seed);
      b["n"] = r.n;
      b["k"] = r.k;
      b["pnn"] = mc_json(r.pnn);
      b["nn"] = mc_json(r.nn);
      json projs;
      for (std::size_t i = 0; i < r.projections.size(); ++i)
        projs[r.projection_names[i]] = mc_json(r.projections[i]);
      b["projections"] = projs;
      b["best_projection"] = r.projection_names[r.best_projection];
      break;
    }
    case BenchName::identity: {
      WidthOptions w = width_options(cfg);
      w.repeats = kIdentityRepeats;
      const auto r = bench::identity_gap(kIdentityN, cfg.trials, cfg.seed, w);
      b["n"] = r.n;
      b["sigma"] = 1.0 / std::sqrt(static_cast<double>(r.n));
      b["k_star"] = r.k_star;
      b["pnn"] = mc_json(r.pnn);
      b["proj_risk"] = r.certificate.proj_risk;
      b["ratio"] = r.ratio;
      break;
    }
  }
  return rep;
}

inline Report run(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::width: return run_width(cfg);
    case Command::estimate: return run_estimate(cfg);
    case Command::adapt: return run_adapt(cfg);
    case Command::risk: return run_risk(cfg);
    case Command::bench: return run_bench(cfg);
  }
  throw InvalidArgument("unknown command");
}

/// Stable serialization: sorted keys, two-space indent, trailing newline.
inline std::string dump(const Report& rep) { return rep.body.dump(2) + "\n"; }

}  // namespace pnn::app
