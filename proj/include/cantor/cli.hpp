// Command-line driver: generate | experiment | net-audit | inspect.
//
// Exit codes: 0 pass, 1 a statistical or acceptance check failed, 2 usage
// or configuration error.
#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <algorithm>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cantor/calibration.hpp"
#include "cantor/construction.hpp"
#include "cantor/geometry.hpp"
#include "cantor/io.hpp"
#include "cantor/measure.hpp"
#include "cantor/net.hpp"
#include "cantor/statistics.hpp"

namespace cantor::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kPass = 0, kFail = 1, kConfigError = 2 };

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"martingale", "mgf",     "tail",    "good-events",
                                              "tube-scan",  "box-dim", "ahlfors", "net-audit"};
  return names;
}

/// Everything that determines a run. `options` is the parsed config file.
struct RunConfig {
  std::string command;
  std::string experiment;
  std::string config_path;
  std::string input;
  /// Empty: "." for runs, no file for inspect.
  std::string out_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<std::string> formats;
  std::optional<ConstructionParams> params;
  std::optional<SelectionRule> rule;
  json options = json::object();
};

inline json to_json(const RunConfig& c) {
  json j = {{"command", c.command},  {"experiment", c.experiment}, {"config_path", c.config_path},
            {"input", c.input},      {"out_dir", c.out_dir},       {"seed", c.seed},
            {"threads", c.threads},  {"formats", c.formats},       {"options", c.options}};
  if (c.params) j["params"] = io::to_json(*c.params);
  if (c.rule) j["rule"] = io::to_json(*c.rule);
  return j;
}

namespace detail {

template <typename T>
T option(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("option '") + key + "': " + e.what());
  }
}

inline const json& section(const RunConfig& c, const char* key) {
  static const json empty = json::object();
  return c.options.contains(key) ? c.options.at(key) : empty;
}

inline const ConstructionParams& require_params(const RunConfig& c) {
  if (!c.params) throw ConfigError("config has no 'params'");
  return *c.params;
}

inline const SelectionRule& require_rule(const RunConfig& c) {
  if (!c.rule) throw ConfigError("config has no 'rule'");
  return *c.rule;
}

inline Flat require_flat(const RunConfig& c) {
  if (!c.options.contains("flat")) throw ConfigError("config has no 'flat'");
  return io::flat_from_json(c.options.at("flat"));
}

inline bool wants(const RunConfig& c, const std::string& format) {
  return c.formats.empty() || std::find(c.formats.begin(), c.formats.end(), format) != c.formats.end();
}

/// Realization from --input/"input", else built from params, rule, seed.
inline Realization obtain_realization(const RunConfig& c) {
  if (!c.input.empty()) return io::realization_from_json(io::read_json_file(c.input));
  const ConstructionParams& p = require_params(c);
  const SelectionRule& rule = require_rule(c);
  if (auto v = validate_params(p, rule); !v) throw ConfigError(v.code + ": " + v.detail);
  return build_realization(p, rule, c.seed, c.threads);
}

inline ConcentrationParams concentration(const RunConfig& c, const ConstructionParams& p) {
  const json& s = section(c, "concentration");
  if (!s.contains("t")) throw ConfigError("concentration.t is required");
  ConcentrationParams cp = derive_concentration(p, s.at("t").get<double>(), option(s, "k", 1),
                                                option(s, "eps", -1.0), option(s, "period", 0));
  if (s.contains("R")) cp.R = s.at("R").get<double>();
  if (s.contains("lambda")) cp.lambda = s.at("lambda").get<double>();
  if (s.contains("lambda0")) cp.lambda0 = s.at("lambda0").get<double>();
  return cp;
}

inline json to_json(const ConcentrationParams& cp) {
  return {{"t", cp.t},   {"k", cp.k},           {"eps", cp.eps_dim},         {"n0", cp.n0},
          {"R0", cp.R0}, {"R", cp.R},           {"lambda", cp.lambda},       {"lambda0", cp.lambda0},
          {"Cn0", cp.Cn0}, {"Cn0_finite", cp.Cn0_finite}};
}

inline std::vector<int> levels_option(const json& j, const char* key, std::vector<int> fallback) {
  auto v = option(j, key, fallback);
  return v;
}

/// Writes `<experiment>.json` and one CSV per curve.
inline void write_outputs(const RunConfig& c, const std::string& stem, json body, const std::vector<Curve>& curves) {
  const fs::path dir(c.out_dir);
  if (wants(c, "json")) {
    body["format_version"] = io::kFormatVersion;
    body["timestamp"] = io::iso8601_now();
    body["run_config"] = to_json(c);
    io::atomic_write(dir / (stem + ".json"), body.dump(2) + "\n");
  }
  if (wants(c, "csv")) {
    for (const auto& curve : curves) {
      std::string text = "# format_version=" + std::to_string(io::kFormatVersion) + " run_config=" +
                         to_json(c).dump() + "\n" + io::to_csv(curve);
      io::atomic_write(dir / (stem + "_" + curve.name + ".csv"), text);
    }
  }
}

// ---------------------------------------------------------------------------
// Experiments. Each returns the overall pass flag.

inline bool run_martingale(const RunConfig& c, std::ostream& out) {
  const ConstructionParams& p = require_params(c);
  const SelectionRule& rule = require_rule(c);
  const Flat w = require_flat(c);
  const auto trials = option<std::size_t>(c.options, "trials", 10000);
  const auto levels = levels_option(c.options, "levels", {option(c.options, "level", 1)});
  Curve curve{"martingale", {"n", "y_previous", "mean", "std_error", "gap_in_se", "passed"}, {}};
  json reports = json::array();
  bool pass = true;
  for (int n : levels) {
    const ExperimentReport r = martingale_check(p, rule, w, n, trials, derive_seed(c.seed, {std::uint64_t(n)}), c.threads);
    pass = pass && r.passed;
    curve.rows.push_back({double(n), r.values.at("y_previous"), r.values.at("mean"), r.values.at("std_error"),
                          r.values.at("gap_in_se"), r.passed ? 1.0 : 0.0});
    reports.push_back(io::to_json(r, 0));
    out << "martingale n=" << n << " Y_{n-1}=" << r.values.at("y_previous") << " mean=" << r.values.at("mean")
        << " SE=" << r.values.at("std_error") << (r.passed ? " PASS" : " FAIL") << "\n";
  }
  write_outputs(c, "martingale", {{"passed", pass}, {"reports", reports}}, {curve});
  return pass;
}

inline bool run_mgf(const RunConfig& c, std::ostream& out) {
  const ConstructionParams& p = require_params(c);
  const SelectionRule& rule = require_rule(c);
  const Flat w = require_flat(c);
  const json& s = section(c, "concentration");
  const int k = option(s, "k", 1);
  const auto trials = option<std::size_t>(c.options, "trials", 10000);
  const auto levels = levels_option(c.options, "levels", {option(c.options, "level", 2)});
  Curve curve{"mgf", {"n", "lambda", "lambda0", "mgf_estimate", "mgf_std_error", "bound", "passed"}, {}};
  json reports = json::array();
  bool pass = true;
  for (int n : levels) {
    if (n < 1 || n > p.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
    // default: λ0 = 1 and the largest λ the hypothesis admits
    const double lambda0 = option(s, "lambda0", 1.0);
    const double lambda = option(s, "lambda", lambda0 / mgf_hypothesis_lhs(p, n, k, 1.0));
    require_mgf_hypothesis(p, n, k, lambda, lambda0);
    const std::uint64_t seed = derive_seed(c.seed, {std::uint64_t(n)});
    const Realization prefix = build_realization(p.truncated(n - 1), rule, cantor::detail::prefix_seed(seed), c.threads);
    const ExperimentReport r = conditional_mgf_check(p, prefix, w, n, lambda, lambda0, k, trials, seed, c.threads);
    pass = pass && r.passed;
    curve.rows.push_back({double(n), lambda, lambda0, r.values.at("mgf_estimate"), r.values.at("mgf_std_error"),
                          r.values.at("bound"), r.passed ? 1.0 : 0.0});
    reports.push_back(io::to_json(r, 0));
    out << "mgf n=" << n << " E[e^{λY}]=" << r.values.at("mgf_estimate") << " bound=" << r.values.at("bound")
        << (r.passed ? " PASS" : " FAIL") << "\n";
  }
  write_outputs(c, "mgf", {{"passed", pass}, {"reports", reports}}, {curve});
  return pass;
}

inline bool run_tail(const RunConfig& c, std::ostream& out) {
  const ConstructionParams& p = require_params(c);
  const SelectionRule& rule = require_rule(c);
  const Flat w = require_flat(c);
  const ConcentrationParams cp = concentration(c, p);
  std::vector<int> fallback;
  for (int n = cp.n0 + 1; n <= p.depth(); ++n) fallback.push_back(n);
  const auto levels = levels_option(c.options, "levels", fallback);
  // the tail argument applies the MGF bound with these λ, λ0 at every level
  for (int n : levels) require_mgf_hypothesis(p, n, cp.k, cp.lambda, cp.lambda0);
  const auto trials = option<std::size_t>(c.options, "trials", 10000);
  const ExperimentReport r = tail_trend(p, rule, w, levels, cp, trials, c.seed, c.threads);
  out << "tail levels=" << levels.size() << " R=" << cp.R << (r.flags.at("vacuous") ? " (vacuous)" : "")
      << (r.passed ? " PASS" : " FAIL") << "\n";
  write_outputs(c, "tail", {{"passed", r.passed}, {"concentration", to_json(cp)}, {"report", io::to_json(r, 0)}},
                r.curves);
  return r.passed;
}

inline bool run_good_events(const RunConfig& c, std::ostream& out) {
  const ConstructionParams& p = require_params(c);
  const SelectionRule& rule = require_rule(c);
  const ConcentrationParams cp = concentration(c, p);
  const int m = p.dim - cp.k;
  std::vector<int> fallback;
  for (int n = cp.n0 + 1; n <= p.depth(); ++n) fallback.push_back(n);
  const auto levels = levels_option(c.options, "levels", fallback);
  const auto trials = option<std::size_t>(c.options, "trials", 1000);
  Curve curve{"good_events", {"n", "frequency", "threshold", "net_cardinality", "vacuous", "passed"}, {}};
  json reports = json::array();
  bool pass = true;
  bool trend = true;
  double prev = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const int n = levels[i];
    NetParams np = NetParams::standard(p, n, m);
    Net net = c.options.contains("explicit_net")
                  ? [&] {
                      std::vector<Flat> members;
                      for (const auto& jf : c.options.at("explicit_net")) members.push_back(io::flat_from_json(jf));
                      return Net::from_members(np, p.dim, m, std::move(members));
                    }()
                  : build_net(np, p.dim, m);
    const ExperimentReport r =
        good_event_frequency(p, rule, net, n, cp, trials, derive_seed(c.seed, {std::uint64_t(n)}), c.threads);
    const double f = r.values.at("frequency");
    const double se = std::sqrt(f * (1.0 - f) / double(trials));
    if (i > 0 && f + kFrequencySigmas * std::sqrt(se * se + 2.0 * prev * (1.0 - prev) / double(trials)) < prev) {
      trend = false;
    }
    prev = f;
    pass = pass && r.passed;
    curve.rows.push_back({double(n), f, r.values.at("threshold"), r.values.at("net_cardinality"),
                          r.flags.at("vacuous") ? 1.0 : 0.0, r.passed ? 1.0 : 0.0});
    reports.push_back(io::to_json(r, 0));
    out << "good-events n=" << n << " frequency=" << f << (r.flags.at("vacuous") ? " (certified)" : "")
        << (r.passed ? " PASS" : " FAIL") << "\n";
  }
  pass = pass && trend;
  write_outputs(c, "good-events",
                {{"passed", pass}, {"nondecreasing", trend}, {"concentration", to_json(cp)}, {"reports", reports}},
                {curve});
  return pass;
}

inline std::vector<double> widths_option(const json& s) {
  if (s.contains("widths")) return s.at("widths").get<std::vector<double>>();
  // default 2^-3 .. 2^-10
  std::vector<double> w;
  for (int j = option(s, "coarsest_exponent", 3); j <= option(s, "finest_exponent", 10); ++j) w.push_back(std::ldexp(1.0, -j));
  return w;
}

inline bool run_tube_scan(const RunConfig& c, std::ostream& out) {
  const Realization r = obtain_realization(c);
  const json& s = section(c, "tube_scan");
  TubeScanOptions opt;
  opt.tubes_per_width = option<std::size_t>(s, "tubes_per_width", 2000);
  const auto strategy = tube_strategy_from_string(option<std::string>(s, "strategy", "mixed"));
  if (!strategy) throw ConfigError("unknown tube strategy");
  opt.strategy = *strategy;
  opt.reference_width = option(s, "reference_width", 0.0);
  opt.growth_limit = option(s, "growth_limit", 2.0);
  opt.seed = c.seed;
  opt.threads = c.threads;
  const ExperimentReport rep = tube_sup_scan(r, option(s, "t", 0.8), widths_option(s), opt);
  out << "tube-scan t=" << rep.values.at("t") << " max ratio=" << rep.values.at("max_ratio")
      << " growth=" << rep.values.at("growth") << (rep.passed ? " PASS" : " FAIL") << "\n";
  write_outputs(c, "tube-scan", {{"passed", rep.passed}, {"report", io::to_json(rep)}}, rep.curves);
  return rep.passed;
}

inline bool run_box_dim(const RunConfig& c, std::ostream& out) {
  const Realization r = obtain_realization(c);
  const json& s = section(c, "box_dim");
  std::vector<int> fallback;
  for (int j = std::max(0, r.depth() / 2 - 1); j < r.depth(); ++j) fallback.push_back(j);
  const auto depths = levels_option(s, "depths", fallback);
  if (depths.size() < 3) throw DomainError("insufficient scales: need at least 3 depths");
  const double lo = option(s, "min_slope", 0.9);
  const double hi = option(s, "max_slope", 1.0);
  std::vector<Flat> dirs;
  if (s.contains("angles")) {
    if (r.dim() != 2) throw ConfigError("box_dim.angles needs d = 2");
    for (double a : s.at("angles").get<std::vector<double>>()) dirs.push_back(direction_line(a));
  } else {
    SplitMix64 rng(derive_seed(c.seed, {0x626F78ULL}));
    const auto count = option<std::size_t>(s, "directions", 50);
    for (std::size_t i = 0; i < count; ++i) {
      if (r.dim() == 2) {
        dirs.push_back(direction_line(std::numbers::pi * rng.uniform()));
      } else {
        dirs.push_back(Flat::line(Vec::Zero(r.dim()), cantor::detail::random_unit(r.dim(), rng)));
      }
    }
  }
  Curve slopes{"box_dim_slopes", {"direction", "slope", "residual"}, {}};
  Curve counts{"box_dim_counts", {"direction", "log_inv_delta", "log_count"}, {}};
  bool pass = true;
  double min_slope = std::numeric_limits<double>::infinity();
  double max_slope = -min_slope;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const BoxDimension b = box_dimension_estimate(r, dirs[i], depths);
    pass = pass && b.slope >= lo && b.slope <= hi;
    min_slope = std::min(min_slope, b.slope);
    max_slope = std::max(max_slope, b.slope);
    slopes.rows.push_back({double(i), b.slope, b.residual});
    for (const auto& [delta, n] : b.counts) counts.rows.push_back({double(i), -std::log(delta), std::log(double(n))});
  }
  out << "box-dim directions=" << dirs.size() << " slopes in [" << min_slope << ", " << max_slope << "]"
      << (pass ? " PASS" : " FAIL") << "\n";
  json directions = json::array();
  for (const auto& d : dirs) directions.push_back(io::to_json(d));
  write_outputs(c, "box-dim",
                {{"passed", pass}, {"min_slope", min_slope}, {"max_slope", max_slope}, {"accepted_range", {lo, hi}},
                 {"directions", directions}},
                {slopes, counts});
  return pass;
}

inline bool run_ahlfors(const RunConfig& c, std::ostream& out) {
  const Realization r = obtain_realization(c);
  const json& s = section(c, "ahlfors");
  std::vector<double> radii;
  if (s.contains("radii")) {
    radii = s.at("radii").get<std::vector<double>>();
  } else {
    for (int j = option(s, "coarsest_exponent", 2); j <= option(s, "finest_exponent", 10); ++j) radii.push_back(std::ldexp(1.0, -j));
  }
  const NaturalMeasure mu(r);
  const AhlforsScan scan = ahlfors_ratio_scan(mu, option<std::size_t>(s, "samples", 200), radii, c.seed,
                                              option(s, "exponent", -1.0));
  const double bound = option(s, "spread_bound", calibration::kAhlforsSpreadBound);
  const bool pass = scan.spread() <= bound;
  out << "ahlfors spread=" << scan.spread() << " bound=" << bound << (pass ? " PASS" : " FAIL") << "\n";
  json body = {{"passed", pass}, {"spread_bound", bound}, {"scan", io::to_json(scan)}};
  write_outputs(c, "ahlfors", body, {io::ball_scan_curve(scan)});
  return pass;
}

inline bool run_net_audit(const RunConfig& c, std::ostream& out) {
  const json& s = section(c, "net_audit");
  const int d = option(s, "dim", c.params ? c.params->dim : 2);
  const int m = option(s, "flat_dim", d - 1);
  const int max_level = option(s, "max_level", 6);
  const int cases = option(s, "cases", 1000);
  const double cg = calibration::c_geom(d, m);
  const GeometryAudit audit = geometry_audit(d, m, cases, max_level, c.seed);

  Curve audit_curve{"audit_cases", {"case", "level", "transfer_ratio", "boundary_ratio", "interior_excess", "rho_over_eps"}, {}};
  bool transfer_ok = true;
  bool boundary_ok = true;
  bool interior_ok = true;
  bool density_ok = true;
  for (std::size_t i = 0; i < audit.cases.size(); ++i) {
    const auto& a = audit.cases[i];
    transfer_ok = transfer_ok && a.transfer_ratio <= cg;
    boundary_ok = boundary_ok && a.boundary_ratio <= cg;
    interior_ok = interior_ok && a.interior_excess <= 1e-9;
    density_ok = density_ok && a.rho <= a.eps * (1.0 + 1e-9);
    audit_curve.rows.push_back({double(i), double(a.level), a.transfer_ratio, a.boundary_ratio, a.interior_excess,
                                a.rho / a.eps});
  }

  // exact section measures against the hit-or-miss estimate
  Curve oracle_curve{"measure_audit", {"case", "exact", "oracle", "error"}, {}};
  const int oracle_cases = option(s, "oracle_cases", 50);
  const auto oracle_samples = option<std::size_t>(s, "oracle_samples", 200000);
  SplitMix64 rng(derive_seed(c.seed, {0x6F7261636CULL}));
  bool oracle_ok = true;
  for (int i = 0; i < oracle_cases; ++i) {
    Box q{Vec(d), Vec(d)};
    Vec x(d);
    for (int a = 0; a < d; ++a) {
      q.lo[a] = 0.5 * rng.uniform();
      q.hi[a] = q.lo[a] + 0.1 + 0.4 * rng.uniform();
      x[a] = rng.uniform(q.lo[a], q.hi[a]);
    }
    const Flat w = random_gamma_flat(d, m, x, 0.0, rng);
    const double exact = flat_cube_measure(w, q);
    const SectionMeasure mc = cantor::detail::section_monte_carlo(w, q, oracle_samples);
    const double err = std::abs(exact - mc.value);
    oracle_ok = oracle_ok && err <= 5.0 * mc.std_error + 1e-9;
    oracle_curve.rows.push_back({double(i), exact, mc.value, err});
  }

  json nets = json::array();
  Curve size_curve{"net_size", {"level", "eps", "cardinality_bound", "size_exponent"}, {}};
  for (int n = 1; n <= max_level; ++n) {
    const ConstructionParams grid = ConstructionParams::uniform(d, 2, 1, n);
    const Net net = build_net(NetParams::standard(grid, n, m), d, m);
    nets.push_back(io::to_json(net, option<std::size_t>(s, "member_limit", 20000)));
    size_curve.rows.push_back({double(n), net.params().eps_net, double(net.cardinality_bound()), net.size_exponent()});
  }
  const bool pass = transfer_ok && boundary_ok && interior_ok && density_ok && oracle_ok;
  out << "net-audit d=" << d << " m=" << m << " c_geom=" << cg << " max transfer=" << audit.max_transfer_ratio
      << " max boundary=" << audit.max_boundary_ratio << " max rho/eps=" << audit.max_rho_over_eps
      << (pass ? " PASS" : " FAIL") << "\n";
  json body = {{"passed", pass},
               {"c_geom", cg},
               {"checks",
                {{"transfer", transfer_ok}, {"boundary", boundary_ok}, {"interior", interior_ok},
                 {"density", density_ok}, {"oracle", oracle_ok}}},
               {"max_transfer_ratio", audit.max_transfer_ratio},
               {"max_boundary_ratio", audit.max_boundary_ratio},
               {"max_interior_excess", audit.max_interior_excess},
               {"max_rho_over_eps", audit.max_rho_over_eps},
               {"calibrated_constant_this_run", audit.calibrated_constant()},
               {"nets", nets}};
  write_outputs(c, "net-audit", body, {audit_curve, oracle_curve, size_curve});
  return pass;
}

inline bool run_experiment(const RunConfig& c, std::ostream& out) {
  const std::string& e = c.experiment;
  if (e == "martingale") return run_martingale(c, out);
  if (e == "mgf") return run_mgf(c, out);
  if (e == "tail") return run_tail(c, out);
  if (e == "good-events") return run_good_events(c, out);
  if (e == "tube-scan") return run_tube_scan(c, out);
  if (e == "box-dim") return run_box_dim(c, out);
  if (e == "ahlfors") return run_ahlfors(c, out);
  if (e == "net-audit") return run_net_audit(c, out);
  throw ConfigError("unknown experiment: '" + e + "'");
}

inline bool run_generate(const RunConfig& c, std::ostream& out) {
  const ConstructionParams& p = require_params(c);
  const SelectionRule& rule = require_rule(c);
  if (auto v = validate_params(p, rule); !v) {
    throw ConfigError(v.code + ": " + v.detail);
  }
  const Realization r = build_realization(p, rule, c.seed, c.threads);
  const fs::path dir(c.out_dir);
  if (wants(c, "json")) {
    json j = io::to_json(r);
    j["run_config"] = to_json(c);
    io::atomic_write(dir / "realization.json", j.dump() + "\n");
  }
  if (wants(c, "csv")) {
    std::ostringstream os;
    os << "# format_version=" << io::kFormatVersion << " run_config=" << to_json(c).dump() << "\n";
    os << "level";
    for (int a = 0; a < p.dim; ++a) os << ",i" << a;
    os << "\n";
    for (int k = 1; k <= r.depth(); ++k) {
      for (const auto& q : r.level(k)) {
        os << k;
        for (int a = 0; a < p.dim; ++a) os << "," << q.index[static_cast<std::size_t>(a)];
        os << "\n";
      }
    }
    io::atomic_write(dir / "realization.csv", os.str());
  }
  out << "generated depth " << r.depth() << ", " << r.level(r.depth()).size() << " cubes at the deepest level\n";
  return true;
}

inline bool run_inspect(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw ConfigError("inspect needs a realization file");
  const Realization r = io::realization_from_json(io::read_json_file(c.input));
  const NaturalMeasure mu(r);
  json levels = json::array();
  for (int k = 0; k <= r.depth(); ++k) {
    levels.push_back({{"level", k},
                      {"cubes", r.level(k).size()},
                      {"expected", r.params().population(k)},
                      {"scale", r.params().scale(k)}});
  }
  const Rational mass = total_mass(mu);
  json j = {{"params", io::to_json(r.params())},
            {"rule", r.rule().name()},
            {"seed", r.seed()},
            {"depth", r.depth()},
            {"levels", levels},
            {"total_mass", std::to_string(mass.numerator()) + "/" + std::to_string(mass.denominator())}};
  if (r.depth() > 0) j["dimension_value"] = dimension_value(r.params());
  if (r.dim() == 2) {
    const Rational px = projection_measure(r, 0);
    const Rational py = projection_measure(r, 1);
    j["projection_x"] = std::to_string(px.numerator()) + "/" + std::to_string(px.denominator());
    j["projection_y"] = std::to_string(py.numerator()) + "/" + std::to_string(py.denominator());
  }
  out << j.dump(2) << "\n";
  if (!c.out_dir.empty()) write_outputs(c, "inspect", j, {});
  return mass == Rational(1);
}

/// Merges the config file and command-line overrides.
inline RunConfig resolve(RunConfig c, const std::optional<std::uint64_t>& seed, const std::optional<unsigned>& threads,
                         const std::string& format) {
  if (!c.config_path.empty()) {
    c.options = io::read_json_file(c.config_path);
    if (!c.options.is_object()) throw ConfigError("config must be a JSON object");
  }
  const json& o = c.options;
  if (o.contains("params")) c.params = io::params_from_json(o.at("params"));
  if (o.contains("rule")) c.rule = io::rule_from_json(o.at("rule"));
  if (c.out_dir.empty() && c.command != "inspect") c.out_dir = ".";
  if (c.experiment.empty()) c.experiment = detail::option<std::string>(o, "experiment", "");
  if (c.input.empty()) c.input = detail::option<std::string>(o, "input", "");
  c.seed = seed ? *seed : detail::option<std::uint64_t>(o, "seed", 1);
  c.threads = threads ? *threads : detail::option<unsigned>(o, "threads", 1);
  if (c.threads == 0) throw ConfigError("--threads must be at least 1");
  if (!format.empty()) {
    if (format != "json" && format != "csv") throw ConfigError("--format must be json or csv");
    c.formats = {format};
  } else if (o.contains("formats")) {
    c.formats = o.at("formats").get<std::vector<std::string>>();
  } else if (c.command == "generate") {
    c.formats = {"json"};
  }
  return c;
}

}  // namespace detail

/// Entry point; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Random Cantor set simulator"};
  app.require_subcommand(1);
  RunConfig base;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string format;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", base.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--out", base.out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_option("--format", format, "output format: json or csv");
  };
  CLI::App* gen = app.add_subcommand("generate", "build a realization and write it out");
  common(gen);
  CLI::App* exp = app.add_subcommand("experiment", "run one experiment");
  common(exp);
  exp->add_option("name", base.experiment, "experiment name (overrides the config)");
  exp->add_option("--input", base.input, "realization file to analyse instead of building one");
  CLI::App* audit = app.add_subcommand("net-audit", "audit nets and the geometric bounds");
  common(audit);
  CLI::App* inspect = app.add_subcommand("inspect", "summarize a realization file");
  common(inspect);
  inspect->add_option("file", base.input, "realization JSON")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kPass : kConfigError;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kPass : kConfigError;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  if (gen->parsed()) base.command = "generate";
  if (exp->parsed()) base.command = "experiment";
  if (audit->parsed()) {
    base.command = "net-audit";
    base.experiment = "net-audit";
  }
  if (inspect->parsed()) base.command = "inspect";
  try {
    const RunConfig c = detail::resolve(base, seed, threads, format);
    bool pass = false;
    if (c.command == "generate") {
      pass = detail::run_generate(c, out);
    } else if (c.command == "inspect") {
      pass = detail::run_inspect(c, out);
    } else {
      if (c.experiment.empty()) throw ConfigError("no experiment named; expected one of martingale, mgf, tail, good-events, tube-scan, box-dim, ahlfors, net-audit");
      pass = detail::run_experiment(c, out);
    }
    return pass ? kPass : kFail;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace cantor::cli
