// JSON and CSV encodings: parameters, rules, realizations, flats, nets and
// experiment reports, plus atomic file writes.
#pragma once

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "cantor/construction.hpp"
#include "cantor/errors.hpp"
#include "cantor/geometry.hpp"
#include "cantor/measure.hpp"
#include "cantor/net.hpp"
#include "cantor/statistics.hpp"

namespace cantor::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Current UTC time as ISO-8601, e.g. 2024-06-11T09:30:00Z.
inline std::string iso8601_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Writes via a temporary file in the same directory and a rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("rename to " + path.string() + " failed: " + ec.message());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Parameters and rules

inline json to_json(const ConstructionParams& p) {
  json levels = json::array();
  for (const auto& l : p.levels) levels.push_back({l.branching, l.retained});
  return {{"dim", p.dim}, {"branching_bound", p.branching_bound}, {"levels", levels}};
}

/// Accepts the canonical form {dim, levels: [[M,N],...], branching_bound?}
/// or the shorthands {dim, M, N, depth} and {dim, pattern: [[M,N],...], depth}.
inline ConstructionParams params_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("params must be an object");
    const int dim = j.at("dim").get<int>();
    ConstructionParams p;
    if (j.contains("levels")) {
      p.dim = dim;
      p.branching_bound = 0;
      for (const auto& l : j.at("levels")) {
        if (!l.is_array() || l.size() != 2) throw ConfigError("each level must be [M, N]");
        const Level lv{l[0].get<int>(), l[1].get<std::uint64_t>()};
        p.levels.push_back(lv);
        p.branching_bound = std::max(p.branching_bound, lv.branching);
      }
      if (p.levels.empty()) p.branching_bound = 2;
    } else if (j.contains("pattern")) {
      std::vector<Level> pattern;
      for (const auto& l : j.at("pattern")) pattern.push_back({l.at(0).get<int>(), l.at(1).get<std::uint64_t>()});
      if (pattern.empty()) throw ConfigError("empty level pattern");
      p = ConstructionParams::periodic(dim, pattern, j.at("depth").get<int>());
    } else {
      p = ConstructionParams::uniform(dim, j.at("M").get<int>(), j.at("N").get<std::uint64_t>(),
                                      j.at("depth").get<int>());
    }
    if (j.contains("branching_bound")) p.branching_bound = j.at("branching_bound").get<int>();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid params: ") + e.what());
  }
}

inline json to_json(const SelectionRule& r) { return r.name(); }

inline SelectionRule rule_from_json(const json& j) {
  if (!j.is_string()) throw ConfigError("rule must be a string");
  auto r = SelectionRule::from_name(j.get<std::string>());
  if (!r) throw ConfigError("unknown selection rule: " + j.get<std::string>());
  return *r;
}

// ---------------------------------------------------------------------------
// Realizations

/// {format_version, params, rule, seed, prefix_depth, levels}; levels[k-1]
/// lists the level-k cubes, each as its k digit vectors (d-tuples).
inline json to_json(const Realization& r) {
  const ConstructionParams& p = r.params();
  json levels = json::array();
  for (int k = 1; k <= r.depth(); ++k) {
    json cubes = json::array();
    for (const auto& q : r.level(k)) cubes.push_back(q.digits(p));
    levels.push_back(std::move(cubes));
  }
  return {{"format_version", kFormatVersion},
          {"params", to_json(p)},
          {"rule", to_json(r.rule())},
          {"seed", r.seed()},
          {"prefix_depth", r.prefix_depth()},
          {"levels", std::move(levels)}};
}

inline Realization realization_from_json(const json& j) {
  try {
    if (j.value("format_version", 0) != kFormatVersion) throw ConfigError("unsupported realization format_version");
    ConstructionParams p = params_from_json(j.at("params"));
    SelectionRule rule = rule_from_json(j.at("rule"));
    if (auto v = validate_params(p, rule); !v) throw ConfigError(v.code + ": " + v.detail);
    std::vector<std::vector<CubeAddress>> levels;
    const auto& jl = j.at("levels");
    if (!jl.is_array() || static_cast<int>(jl.size()) != p.depth()) {
      throw ConfigError("realization: level count differs from params depth");
    }
    for (int k = 1; k <= p.depth(); ++k) {
      std::vector<CubeAddress> cubes;
      for (const auto& jc : jl[static_cast<std::size_t>(k - 1)]) {
        auto digits = jc.get<std::vector<std::vector<std::uint32_t>>>();
        if (static_cast<int>(digits.size()) != k) throw ConfigError("realization: cube digit count differs from level");
        cubes.push_back(CubeAddress::from_digits(p, digits));
      }
      levels.push_back(std::move(cubes));
    }
    return Realization::from_levels(std::move(p), std::move(rule), j.at("seed").get<std::uint64_t>(),
                                    std::move(levels), j.value("prefix_depth", 0));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid realization: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid realization: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Flats and nets

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  if (xs.empty() || static_cast<int>(xs.size()) > kMaxDim) throw ConfigError("vector has bad length");
  Vec v(static_cast<int>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
  return v;
}

/// {point, basis: [b_1, ..., b_m]}.
inline json to_json(const Flat& w) {
  json basis = json::array();
  for (int j = 0; j < w.flat_dim(); ++j) basis.push_back(to_json(Vec(w.basis().col(j))));
  return {{"point", to_json(w.point())}, {"basis", basis}};
}

/// Accepts {point, basis}, {point, direction} or {normal, offset}; the basis
/// is orthonormalized.
inline Flat flat_from_json(const json& j) {
  try {
    if (j.contains("normal")) return Flat::hyperplane(vec_from_json(j.at("normal")), j.at("offset").get<double>());
    const Vec point = vec_from_json(j.at("point"));
    if (j.contains("direction")) return Flat::line(point, vec_from_json(j.at("direction")));
    const auto& jb = j.at("basis");
    if (!jb.is_array() || jb.empty()) throw ConfigError("flat basis must be a non-empty list");
    Mat b(point.size(), static_cast<int>(jb.size()));
    for (std::size_t c = 0; c < jb.size(); ++c) {
      const Vec col = vec_from_json(jb[c]);
      if (col.size() != point.size()) throw ConfigError("flat basis vector has wrong dimension");
      b.col(static_cast<int>(c)) = col;
    }
    return Flat::through(point, b);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid flat: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

inline std::string to_string(Net::Kind k) {
  switch (k) {
    case Net::Kind::HyperplaneGrid: return "hyperplane-grid";
    case Net::Kind::LineGrid: return "line-grid";
    case Net::Kind::Explicit: return "explicit";
  }
  return "explicit";
}

/// Net summary; members are listed when there are at most `member_limit`.
inline json to_json(const Net& net, std::size_t member_limit = 100000) {
  const NetParams& np = net.params();
  json j = {{"level", np.level},
            {"alpha", np.alpha},
            {"eps_net", np.eps_net},
            {"c_geom", np.c_geom},
            {"dim", net.dim()},
            {"flat_dim", net.flat_dim()},
            {"kind", to_string(net.kind())},
            {"cardinality_bound", static_cast<double>(net.cardinality_bound())},
            {"size_exponent", net.size_exponent()}};
  if (net.enumerable(member_limit)) {
    json members = json::array();
    for (const auto& m : net.members(member_limit)) members.push_back(to_json(m));
    j["members"] = std::move(members);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Reports and CSV

inline json to_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean},   {"std_dev", s.std_dev}, {"std_error", s.std_error},
          {"min", s.min},     {"max", s.max},     {"q05", s.q05},         {"q50", s.q50},
          {"q95", s.q95}};
}

/// Samples are included when there are at most `sample_limit` of them.
inline json to_json(const ExperimentReport& r, std::size_t sample_limit = 100000) {
  json flats = json::array();
  for (const auto& [name, f] : r.flats) flats.push_back({{"name", name}, {"flat", to_json(f)}});
  json curves = json::array();
  for (const auto& c : r.curves) curves.push_back({{"name", c.name}, {"columns", c.columns}, {"rows", c.rows}});
  json j = {{"experiment", r.experiment},
            {"seed", r.seed},
            {"trials", r.trials},
            {"trial_seed_range", {0, r.trials == 0 ? 0 : r.trials - 1}},
            {"summary", to_json(r.summary)},
            {"values", r.values},
            {"flags", r.flags},
            {"witnesses", flats},
            {"curves", curves},
            {"passed", r.passed},
            {"note", r.note},
            {"runtime_seconds", r.runtime_seconds}};
  if (r.samples.size() <= sample_limit) j["samples"] = r.samples;
  return j;
}

inline std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string to_csv(const Curve& c) {
  std::ostringstream os;
  for (std::size_t i = 0; i < c.columns.size(); ++i) os << (i ? "," : "") << c.columns[i];
  os << '\n';
  for (const auto& row : c.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
  return os.str();
}

/// Ball scan rows as CSV: x coordinates, r, lower, estimate, upper.
inline Curve ball_scan_curve(const AhlforsScan& scan) {
  Curve c{"ball_scan", {}, {}};
  const int d = scan.rows.empty() ? 0 : static_cast<int>(scan.rows.front().center.size());
  for (int i = 0; i < d; ++i) c.columns.push_back("x" + std::to_string(i));
  for (const char* name : {"r", "lower", "estimate", "upper"}) c.columns.emplace_back(name);
  for (const auto& row : scan.rows) {
    std::vector<double> v;
    for (int i = 0; i < d; ++i) v.push_back(row.center[i]);
    v.insert(v.end(), {row.radius, row.mass.lower, row.mass.estimate, row.mass.upper});
    c.rows.push_back(std::move(v));
  }
  return c;
}

inline json to_json(const AhlforsScan& scan) {
  return {{"exponent", scan.exponent},
          {"min_ratio", scan.min_ratio},
          {"max_ratio", scan.max_ratio},
          {"spread", scan.spread()},
          {"min_lower_ratio", scan.min_lower_ratio},
          {"max_upper_ratio", scan.max_upper_ratio},
          {"bracket_spread", scan.max_upper_ratio / scan.min_lower_ratio},
          {"rows", scan.rows.size()}};
}

}  // namespace cantor::io
