#include "bergman/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/estimation.hpp"
#include "bergman/geometry.hpp"
#include "bergman/infogeo.hpp"
#include "bergman/maps.hpp"
#include "bergman/parallel.hpp"
#include "bergman/rng.hpp"
#include "bergman/sampling.hpp"

namespace fs = std::filesystem;

namespace bergman {

namespace {

std::atomic<bool> g_interrupt{false};

struct Interrupted {};

void check_interrupt() {
  if (g_interrupt.load()) throw Interrupted{};
}

constexpr long long kMaxSamples = 100000000;
constexpr long long kMaxReplications = 100000;
constexpr int kMaxDimension = 8;

// stream tags for derive_seed
constexpr std::uint64_t kTagRandomPoints = 0x5054;
constexpr std::uint64_t kTagRandomPairs = 0x5041;
constexpr std::uint64_t kTagKernelPairs = 0x4b4f;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + msg);
}

std::string field(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double number_at(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

long long integer_at(const Json& j, const std::string& path, long long lo, long long hi) {
  const double v = number_at(j, path);
  if (v != std::floor(v)) fail(path, "expected an integer");
  if (v < static_cast<double>(lo) || v > static_cast<double>(hi))
    fail(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<long long>(v);
}

// Typed access to an object's optional members with path-qualified errors.
class Params {
 public:
  Params(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  bool has(const char* key) const { return obj_.contains(key); }
  std::string at(const char* key) const { return field(path_, key); }
  const Json& raw(const char* key) const { return obj_.at(key); }

  double number(const char* key, double fallback) const {
    return has(key) ? number_at(obj_.at(key), at(key)) : fallback;
  }
  double number(const char* key) const {
    if (!has(key)) fail(at(key), "is required");
    return number_at(obj_.at(key), at(key));
  }
  long long integer(const char* key, long long lo, long long hi,
                    std::optional<long long> fallback = std::nullopt) const {
    if (!has(key)) {
      if (!fallback) fail(at(key), "is required");
      return *fallback;
    }
    return integer_at(obj_.at(key), at(key), lo, hi);
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!obj_.at(key).is_boolean()) fail(at(key), "expected true or false");
    return obj_.at(key).get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!obj_.at(key).is_string()) fail(at(key), "expected a string");
    return obj_.at(key).get<std::string>();
  }

 private:
  const Json& obj_;
  std::string path_;
};

cplx parse_coordinate(const Json& j, const std::string& path) {
  if (j.is_number()) return {number_at(j, path), 0.0};
  if (j.is_array()) {
    if (j.size() != 2) fail(path, "complex coordinate must be [re, im]");
    return {number_at(j[0], index(path, 0)), number_at(j[1], index(path, 1))};
  }
  if (j.is_object()) {
    for (const auto& [key, _] : j.items())
      if (key != "re" && key != "im") fail(field(path, key), "unknown field");
    const double re = j.contains("re") ? number_at(j["re"], field(path, "re")) : 0.0;
    const double im = j.contains("im") ? number_at(j["im"], field(path, "im")) : 0.0;
    return {re, im};
  }
  fail(path, "expected a number, [re, im] or {\"re\", \"im\"}");
}

// --- JSON output helpers ---------------------------------------------------

Json cjson(cplx v) { return Json::array({v.real(), v.imag()}); }

Json point_json(const ComplexPoint& z) {
  Json a = Json::array();
  for (Eigen::Index j = 0; j < z.size(); ++j) a.push_back(cjson(z[j]));
  return a;
}

Json cmatrix_json(const Eigen::MatrixXcd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(cjson(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json rmatrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json estimate_json(const MCEstimate& e) {
  return Json{{"mean", cmatrix_json(e.mean)},
              {"std_error", rmatrix_json(e.std_error)},
              {"n_samples", e.n_samples}};
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string fmt_c(cplx v) {
  if (v.imag() == 0.0) return fmt("%.4g", v.real());
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4g%+.4gi", v.real(), v.imag());
  return buf;
}

std::string fmt_point(const ComplexPoint& z) {
  std::string s = "(";
  for (Eigen::Index j = 0; j < z.size(); ++j) s += (j ? ", " : "") + fmt_c(z[j]);
  return s + ")";
}

// --- plan ------------------------------------------------------------------

struct CaseSpec {
  std::string path;
  DomainModel domain = DomainModel::disc();
  std::vector<ComplexPoint> points;
  std::vector<std::pair<ComplexPoint, ComplexPoint>> pairs;
  std::optional<ProperMap> map;
  std::optional<bool> check_relation;
};

struct AmariSpec {
  std::array<bool, 3> conjugate{false, false, false};
  std::array<int, 3> indices{0, 0, 0};
};

struct IdentitySpec {
  ExpectationIdentity id;
  IndexTuple indices{0, 0, 0, 0};
};

struct Plan {
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<CaseSpec> cases;
  long long n = 0;
  int r_rep = 0;
  long long m = 0;
  std::vector<long long> m_schedule;
  // kernel-oracle
  int pair_count = 1000;
  double max_radius = 0.9;
  double rel_tol = 1e-8;
  double series_tol = 1e-10;
  // fisher
  double center_rel_stderr = 0.01;
  // identities
  std::vector<IdentitySpec> identities;  // empty: full catalog at every index tuple
  std::vector<AmariSpec> amari;
  // curvature
  std::vector<int> directions;
  double fd_tol = 1e-5;
  // divergence
  std::string divergence = "kl";
  std::vector<double> alphas;
  double mobius = 0.0;
  // maps
  std::vector<std::string> checks;
  int grid = 20;
  double bell_tol = 1e-10;
  // consistency
  std::optional<std::pair<double, double>> ratio_range;
  // clt
  double covariance_tol = 0.10;
  double ks_level = 0.01;
  bool check_relation = false;
  bool dump_csv = false;
  // determinism
  std::vector<std::string> configs;
};

DomainModel domain_from(const std::string& kind, long long n, const std::string& path) {
  if (kind == "disc") {
    if (n != 1) fail(path, "the disc is one-dimensional");
    return DomainModel::disc();
  }
  if (kind == "polydisc") return DomainModel::polydisc(static_cast<int>(n));
  if (kind == "ball") return DomainModel::ball(static_cast<int>(n));
  fail(path, "unknown domain '" + kind + "' (expected disc, polydisc or ball)");
}

ProperMap parse_map(const Json& j, const std::string& path, const Json* case_domain,
                    const std::string& case_domain_path) {
  if (!j.is_object()) fail(path, "expected a map object");
  const Params p(j, path);
  const std::string kind = p.string("kind", "");
  if (kind == "power") return ProperMap::power(static_cast<int>(p.integer("k", 1, 16)));
  if (kind == "coordinate_power") {
    if (!p.has("k") || !p.raw("k").is_array() || p.raw("k").empty())
      fail(p.at("k"), "expected a non-empty array of exponents");
    std::vector<int> ks;
    for (std::size_t i = 0; i < p.raw("k").size(); ++i)
      ks.push_back(static_cast<int>(integer_at(p.raw("k")[i], index(p.at("k"), i), 1, 16)));
    if (ks.size() > static_cast<std::size_t>(kMaxDimension)) fail(p.at("k"), "too many exponents");
    return ProperMap::coordinate_power(ks);
  }
  if (kind == "identity") {
    if (p.has("domain")) return ProperMap::identity(parse_domain(p.raw("domain"), p.at("domain")));
    if (!case_domain) fail(p.at("domain"), "identity map needs a domain");
    return ProperMap::identity(parse_domain(*case_domain, case_domain_path));
  }
  fail(p.at("kind"), "unknown map kind '" + kind + "' (expected identity, power or coordinate_power)");
}

std::vector<ComplexPoint> parse_point_list(const Json& j, const DomainModel& d, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of points");
  std::vector<ComplexPoint> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_point(j[i], d, index(path, i)));
  return out;
}

std::pair<int, double> parse_random_spec(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected {\"count\", \"max_radius\"}");
  const Params p(j, path);
  const int count = static_cast<int>(p.integer("count", 1, 100000));
  const double radius = p.number("max_radius", 0.6);
  if (!(radius > 0.0 && radius < 1.0)) fail(p.at("max_radius"), "must lie in (0, 1)");
  return {count, radius};
}

CaseSpec parse_case(const Json& j, const std::string& path, std::size_t case_index,
                    std::uint64_t seed) {
  if (!j.is_object()) fail(path, "expected a case object");
  const Params p(j, path);
  CaseSpec c;
  c.path = path;
  if (p.has("map")) {
    c.map = parse_map(p.raw("map"), p.at("map"), p.has("domain") ? &p.raw("domain") : nullptr, p.at("domain"));
    c.domain = c.map->source();
    if (p.has("domain") && !(parse_domain(p.raw("domain"), p.at("domain")) == c.domain))
      fail(p.at("domain"), "does not match the map's source domain " + c.domain.name());
  } else {
    if (!p.has("domain")) fail(p.at("domain"), "is required");
    c.domain = parse_domain(p.raw("domain"), p.at("domain"));
  }
  if (p.has("point")) c.points.push_back(parse_point(p.raw("point"), c.domain, p.at("point")));
  if (p.has("points")) {
    auto pts = parse_point_list(p.raw("points"), c.domain, p.at("points"));
    c.points.insert(c.points.end(), pts.begin(), pts.end());
  }
  if (p.has("random_points")) {
    const auto [count, radius] = parse_random_spec(p.raw("random_points"), p.at("random_points"));
    auto pts = random_points(c.domain, count, radius, derive_seed(seed, {kTagRandomPoints, case_index}));
    c.points.insert(c.points.end(), pts.begin(), pts.end());
  }
  if (p.has("pairs")) {
    const Json& arr = p.raw("pairs");
    const std::string ap = p.at("pairs");
    if (!arr.is_array() || arr.empty()) fail(ap, "expected a non-empty array of [z, w] pairs");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = index(ap, i);
      if (!arr[i].is_array() || arr[i].size() != 2) fail(ip, "expected [z, w]");
      c.pairs.emplace_back(parse_point(arr[i][0], c.domain, index(ip, 0)),
                           parse_point(arr[i][1], c.domain, index(ip, 1)));
    }
  }
  if (p.has("random_pairs")) {
    const auto [count, radius] = parse_random_spec(p.raw("random_pairs"), p.at("random_pairs"));
    const auto zs = random_points(c.domain, count, radius, derive_seed(seed, {kTagRandomPairs, case_index, 0}));
    const auto ws = random_points(c.domain, count, radius, derive_seed(seed, {kTagRandomPairs, case_index, 1}));
    for (int i = 0; i < count; ++i) c.pairs.emplace_back(zs[i], ws[i]);
  }
  if (p.has("check_relation")) c.check_relation = p.boolean("check_relation", false);
  static const char* known[] = {"domain", "map", "point", "points", "random_points", "pairs",
                                "random_pairs", "check_relation"};
  for (const auto& [key, _] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      fail(field(path, key), "unknown field");
  return c;
}

std::uint64_t parse_seed(const Json& doc) {
  if (!doc.contains("seed")) fail("seed", "is required");
  const Json& s = doc["seed"];
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer()) {
    if (s.get<long long>() < 0) fail("seed", "must be non-negative");
    return static_cast<std::uint64_t>(s.get<long long>());
  }
  fail("seed", "expected a non-negative 64-bit integer");
}

void check_top_level_fields(const Json& doc, const std::string& kind) {
  static const std::map<std::string, std::set<std::string>> extra = {
      {"kernel-oracle", {"pair_count", "max_radius", "rel_tol", "series_tol"}},
      {"fisher", {"n", "center_rel_stderr"}},
      {"identities", {"n", "identities", "amari_chentsov"}},
      {"curvature", {"n", "fd_tol", "directions"}},
      {"divergence", {"n", "divergence", "alphas", "mobius"}},
      {"maps", {"n", "checks", "grid", "bell_tol"}},
      {"consistency", {"m_schedule", "r_rep", "ratio_range"}},
      {"clt", {"m", "r_rep", "covariance_tol", "ks_level", "check_relation", "dump_csv"}},
      {"determinism", {"configs"}},
  };
  static const std::set<std::string> common = {"name", "kind", "seed", "description"};
  static const std::set<std::string> case_fields = {"cases", "domain", "map", "point", "points",
                                                    "random_points", "pairs", "random_pairs"};
  const auto& own = extra.at(kind);
  for (const auto& [key, _] : doc.items()) {
    if (common.count(key) || own.count(key)) continue;
    if (kind != "determinism" && case_fields.count(key)) continue;
    fail(key, "unknown field for a " + kind + " experiment");
  }
}

Plan build_plan(const Json& doc) {
  if (!doc.is_object()) fail("", "config must be a JSON object");
  const Params top(doc, "");
  Plan plan;
  plan.kind = top.string("kind", "");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), plan.kind) == kinds.end())
    fail("kind", "unknown experiment kind '" + plan.kind + "'");
  plan.seed = parse_seed(doc);
  check_top_level_fields(doc, plan.kind);

  if (plan.kind == "determinism") {
    if (!top.has("configs")) fail("configs", "is required");
    const Json& cs = doc["configs"];
    if (cs.is_string()) {
      if (cs.get<std::string>() != "siblings") fail("configs", "expected \"siblings\" or a list of paths");
      plan.configs = {"siblings"};
    } else if (cs.is_array() && !cs.empty()) {
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!cs[i].is_string()) fail(index("configs", i), "expected a path");
        plan.configs.push_back(cs[i].get<std::string>());
      }
    } else {
      fail("configs", "expected \"siblings\" or a non-empty list of paths");
    }
    return plan;
  }

  if (doc.contains("cases")) {
    const Json& cs = doc["cases"];
    if (!cs.is_array() || cs.empty()) fail("cases", "expected a non-empty array");
    for (std::size_t i = 0; i < cs.size(); ++i)
      plan.cases.push_back(parse_case(cs[i], index("cases", i), i, plan.seed));
  } else {
    Json single = Json::object();
    for (const char* key : {"domain", "map", "point", "points", "random_points", "pairs", "random_pairs"})
      if (doc.contains(key)) single[key] = doc[key];
    plan.cases.push_back(parse_case(single, "", 0, plan.seed));
  }

  const auto need_points = [&] {
    for (const auto& c : plan.cases)
      if (c.points.empty()) fail(field(c.path, "points"), "this experiment needs at least one point");
  };
  const auto samples = [&] { plan.n = top.integer("n", kMinMonteCarloSamples, kMaxSamples); };

  if (plan.kind == "kernel-oracle") {
    plan.pair_count = static_cast<int>(top.integer("pair_count", 1, 1000000, 1000));
    plan.max_radius = top.number("max_radius", 0.9);
    if (!(plan.max_radius > 0.0 && plan.max_radius < 1.0)) fail("max_radius", "must lie in (0, 1)");
    plan.rel_tol = top.number("rel_tol", 1e-8);
    plan.series_tol = top.number("series_tol", 1e-10);
    if (!(plan.rel_tol > 0.0)) fail("rel_tol", "must be positive");
    if (!(plan.series_tol > 0.0 && plan.series_tol < plan.rel_tol))
      fail("series_tol", "must be positive and below rel_tol");
  } else if (plan.kind == "fisher") {
    need_points();
    samples();
    plan.center_rel_stderr = top.number("center_rel_stderr", 0.01);
  } else if (plan.kind == "identities") {
    need_points();
    samples();
    if (top.has("identities")) {
      const Json& ids = doc["identities"];
      if (!ids.is_array() || ids.empty()) fail("identities", "expected a non-empty array");
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::string ip = index("identities", i);
        IdentitySpec spec{};
        const Json* name = &ids[i];
        if (ids[i].is_object()) {
          if (!ids[i].contains("id")) fail(field(ip, "id"), "is required");
          name = &ids[i]["id"];
          if (ids[i].contains("indices")) {
            const Json& ix = ids[i]["indices"];
            const std::string xp = field(ip, "indices");
            if (!ix.is_array() || ix.size() > 4) fail(xp, "expected up to four indices");
            for (std::size_t k = 0; k < ix.size(); ++k)
              spec.indices[k] = static_cast<int>(integer_at(ix[k], index(xp, k), 0, kMaxDimension - 1));
          }
        }
        if (!name->is_string()) fail(ip, "expected an identity name");
        try {
          spec.id = identity_from_string(name->get<std::string>());
        } catch (const UnknownIdentity& e) {
          fail(ip, e.what());
        }
        for (const auto& c : plan.cases)
          for (int k = 0; k < identity_arity(spec.id); ++k)
            if (spec.indices[k] >= c.domain.dimension())
              fail(ip, "index out of range for " + c.domain.name());
        plan.identities.push_back(spec);
      }
    }
    if (top.has("amari_chentsov")) {
      const Json& ac = doc["amari_chentsov"];
      if (ac.is_boolean()) {
        if (ac.get<bool>())
          for (int k = 0; k <= 3; ++k) {
            AmariSpec s;
            for (int slot = 0; slot < 3; ++slot) s.conjugate[slot] = slot >= 3 - k;
            plan.amari.push_back(s);
          }
      } else if (ac.is_array()) {
        for (std::size_t i = 0; i < ac.size(); ++i) {
          const std::string ip = index("amari_chentsov", i);
          if (!ac[i].is_object()) fail(ip, "expected {\"conjugate\", \"indices\"}");
          AmariSpec s;
          const Json& cj = ac[i].value("conjugate", Json::array({false, false, false}));
          if (!cj.is_array() || cj.size() != 3) fail(field(ip, "conjugate"), "expected three booleans");
          for (int k = 0; k < 3; ++k) {
            if (!cj[k].is_boolean()) fail(index(field(ip, "conjugate"), k), "expected true or false");
            s.conjugate[k] = cj[k].get<bool>();
          }
          if (ac[i].contains("indices")) {
            const Json& ix = ac[i]["indices"];
            if (!ix.is_array() || ix.size() != 3) fail(field(ip, "indices"), "expected three indices");
            for (int k = 0; k < 3; ++k)
              s.indices[k] = static_cast<int>(integer_at(ix[k], index(field(ip, "indices"), k), 0, kMaxDimension - 1));
          }
          for (const auto& c : plan.cases)
            for (int k = 0; k < 3; ++k)
              if (s.indices[k] >= c.domain.dimension())
                fail(field(ip, "indices"), "index out of range for " + c.domain.name());
          plan.amari.push_back(s);
        }
      } else {
        fail("amari_chentsov", "expected true/false or a list of components");
      }
    }
  } else if (plan.kind == "curvature") {
    need_points();
    samples();
    plan.fd_tol = top.number("fd_tol", 1e-5);
    if (top.has("directions")) {
      const Json& ds = doc["directions"];
      if (!ds.is_array() || ds.empty()) fail("directions", "expected a non-empty array");
      for (std::size_t i = 0; i < ds.size(); ++i)
        plan.directions.push_back(static_cast<int>(integer_at(ds[i], index("directions", i), 0, kMaxDimension - 1)));
      for (const auto& c : plan.cases)
        for (int d : plan.directions)
          if (d >= c.domain.dimension()) fail("directions", "direction out of range for " + c.domain.name());
    }
  } else if (plan.kind == "divergence") {
    samples();
    for (const auto& c : plan.cases)
      if (c.pairs.empty()) fail(field(c.path, "pairs"), "divergence needs pairs or random_pairs");
    plan.divergence = top.string("divergence", "kl");
    if (plan.divergence == "alpha") {
      if (!top.has("alphas") || !doc["alphas"].is_array() || doc["alphas"].empty())
        fail("alphas", "expected a non-empty array");
      for (std::size_t i = 0; i < doc["alphas"].size(); ++i)
        plan.alphas.push_back(number_at(doc["alphas"][i], index("alphas", i)));
      plan.mobius = top.number("mobius");
      if (!(std::abs(plan.mobius) < 1.0)) fail("mobius", "must lie in (-1, 1)");
      for (const auto& c : plan.cases)
        if (c.domain.kind() != DomainKind::Disc) fail(field(c.path, "domain"), "mobius invariance runs on the disc");
    } else if (plan.divergence != "kl") {
      fail("divergence", "expected \"kl\" or \"alpha\"");
    }
  } else if (plan.kind == "maps") {
    for (const auto& c : plan.cases)
      if (!c.map) fail(field(c.path, "map"), "is required");
    static const std::vector<std::string> all_checks = {"pullback", "normalization", "bell",
                                                        "k_inequality", "comparison", "diagram"};
    if (top.has("checks")) {
      const Json& cs = doc["checks"];
      if (!cs.is_array() || cs.empty()) fail("checks", "expected a non-empty array");
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!cs[i].is_string() ||
            std::find(all_checks.begin(), all_checks.end(), cs[i].get<std::string>()) == all_checks.end())
          fail(index("checks", i), "unknown check (expected one of pullback, normalization, bell, "
                                   "k_inequality, comparison, diagram)");
        plan.checks.push_back(cs[i].get<std::string>());
      }
    } else {
      plan.checks = all_checks;
    }
    const bool sampled = std::find(plan.checks.begin(), plan.checks.end(), "pullback") != plan.checks.end() ||
                         std::find(plan.checks.begin(), plan.checks.end(), "normalization") != plan.checks.end();
    if (sampled) {
      samples();
      need_points();
    }
    plan.grid = static_cast<int>(top.integer("grid", 2, 10000, 20));
    plan.bell_tol = top.number("bell_tol", 1e-10);
  } else if (plan.kind == "consistency") {
    need_points();
    plan.r_rep = static_cast<int>(top.integer("r_rep", 2, kMaxReplications));
    if (!top.has("m_schedule") || !doc["m_schedule"].is_array() || doc["m_schedule"].size() < 2)
      fail("m_schedule", "expected at least two sample sizes");
    for (std::size_t i = 0; i < doc["m_schedule"].size(); ++i) {
      const long long m = integer_at(doc["m_schedule"][i], index("m_schedule", i), 2, 10000000);
      if (!plan.m_schedule.empty() && m <= plan.m_schedule.back())
        fail(index("m_schedule", i), "must be strictly increasing");
      plan.m_schedule.push_back(m);
    }
    if (top.has("ratio_range")) {
      const Json& r = doc["ratio_range"];
      if (!r.is_array() || r.size() != 2) fail("ratio_range", "expected [lo, hi]");
      plan.ratio_range = std::make_pair(number_at(r[0], "ratio_range[0]"), number_at(r[1], "ratio_range[1]"));
    }
  } else if (plan.kind == "clt") {
    need_points();
    plan.m = top.integer("m", 2, 10000000);
    plan.r_rep = static_cast<int>(top.integer("r_rep", 2, kMaxReplications));
    plan.covariance_tol = top.number("covariance_tol", 0.10);
    plan.ks_level = top.number("ks_level", 0.01);
    plan.check_relation = top.boolean("check_relation", false);
    plan.dump_csv = top.boolean("dump_csv", false);
    if (!(plan.covariance_tol > 0.0)) fail("covariance_tol", "must be positive");
    if (!(plan.ks_level > 0.0 && plan.ks_level < 1.0)) fail("ks_level", "must lie in (0, 1)");
  }
  return plan;
}

// --- runners -----------------------------------------------------------------

using Records = Json;  // array

void push(Records& records, Json record, const RunOptions& opts) {
  if (opts.log)
    *opts.log << "  " << (record.value("pass", false) ? "PASS" : "FAIL") << "  "
              << record.value("label", std::string()) << "  " << record.value("summary", std::string())
              << std::endl;
  records.push_back(std::move(record));
}

void run_kernel_oracle(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    check_interrupt();
    const DomainModel& d = plan.cases[c].domain;
    const auto zs = random_points(d, plan.pair_count, plan.max_radius, derive_seed(plan.seed, {kTagKernelPairs, c, 0}));
    const auto ws = random_points(d, plan.pair_count, plan.max_radius, derive_seed(plan.seed, {kTagKernelPairs, c, 1}));
    std::vector<double> rel(zs.size());
    std::vector<int> trunc(zs.size());
    parallel_for(zs.size(), opts.threads, [&](std::size_t i) {
      trunc[i] = series_truncation_for(d, zs[i], ws[i], plan.series_tol);
      const cplx closed = bergman_kernel(d, zs[i], ws[i]);
      const cplx series = bergman_kernel_series(d, zs[i], ws[i], trunc[i]);
      rel[i] = std::abs(closed - series) / std::abs(closed);
    });
    const auto worst = static_cast<std::size_t>(std::max_element(rel.begin(), rel.end()) - rel.begin());
    double mean_trunc = 0.0;
    for (int t : trunc) mean_trunc += t;
    mean_trunc /= static_cast<double>(trunc.size());
    const bool pass = rel[worst] < plan.rel_tol;
    Json r;
    r["label"] = "kernel-oracle " + d.name();
    r["domain"] = d.name();
    r["pairs"] = plan.pair_count;
    r["max_radius"] = plan.max_radius;
    r["max_rel_error"] = rel[worst];
    r["worst_pair"] = Json::array({point_json(zs[worst]), point_json(ws[worst])});
    r["mean_truncation"] = mean_trunc;
    r["max_truncation"] = *std::max_element(trunc.begin(), trunc.end());
    r["tolerance"] = plan.rel_tol;
    r["pass"] = pass;
    r["summary"] = "max rel err " + fmt("%.3g", rel[worst]) + " < " + fmt("%.0e", plan.rel_tol) +
                   " over " + std::to_string(plan.pair_count) + " pairs";
    push(records, std::move(r), opts);
  }
}

bool is_origin(const ComplexPoint& z) { return z.cwiseAbs().maxCoeff() == 0.0; }

void run_fisher(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const DomainModel& d = plan.cases[c].domain;
    for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
      check_interrupt();
      const ComplexPoint& z = plan.cases[c].points[p];
      const std::uint64_t seed = derive_seed(plan.seed, {c, p});
      const MCEstimate est = fisher_metric_mc(d, z, plan.n, seed, opts.threads);
      const HermitianMatrix g = bergman_metric(d, z);
      const bool within = est.within(g, 3.0);
      Json r;
      r["label"] = "fisher " + d.name() + " z=" + fmt_point(z);
      r["domain"] = d.name();
      r["point"] = point_json(z);
      r["seed"] = seed;
      r["estimate"] = estimate_json(est);
      r["target"] = cmatrix_json(g);
      r["max_zscore"] = est.max_zscore(g);
      r["within_3_stderr"] = within;
      bool pass = within;
      std::string summary = "g11 " + fmt_c(est.value(0, 0)) + " +- " + fmt("%.2g", est.error(0, 0)) +
                            " vs " + fmt("%.6g", g(0, 0).real()) + ", max z " + fmt("%.2f", est.max_zscore(g));
      if (is_origin(z)) {
        double worst = 0.0;
        for (int i = 0; i < d.dimension(); ++i) worst = std::max(worst, est.error(i, i) / g(i, i).real());
        r["center_rel_stderr"] = worst;
        r["center_rel_stderr_limit"] = plan.center_rel_stderr;
        pass = pass && worst < plan.center_rel_stderr;
        summary += ", rel stderr " + fmt("%.2e", worst);
      }
      r["pass"] = pass;
      r["summary"] = summary;
      push(records, std::move(r), opts);
    }
  }
}

Json identity_json(const IdentityReport& rep) {
  Json j;
  j["id"] = to_string(rep.id);
  j["label"] = rep.label;
  Json idx = Json::array();
  for (int k = 0; k < rep.arity; ++k) idx.push_back(rep.indices[k]);
  j["indices"] = idx;
  Json forms = Json::array();
  for (Eigen::Index f = 0; f < rep.estimate.mean.rows(); ++f)
    forms.push_back(Json{{"estimate", cjson(rep.estimate.value(static_cast<int>(f), 0))},
                         {"std_error", rep.estimate.error(static_cast<int>(f), 0)}});
  j["forms"] = forms;
  j["n_samples"] = rep.estimate.n_samples;
  j["target"] = cjson(rep.target);
  j["max_zscore"] = rep.estimate.max_zscore(
      Eigen::MatrixXcd::Constant(rep.estimate.mean.rows(), rep.estimate.mean.cols(), rep.target));
  j["attempts"] = rep.attempts;
  j["seed"] = rep.seed;
  j["pass"] = rep.pass;
  return j;
}

void push_identity_group(Records& records, const std::string& prefix, const std::string& name,
                         const DomainModel& d, const ComplexPoint& z,
                         const std::vector<const IdentityReport*>& reps, const RunOptions& opts) {
  Json r;
  r["label"] = prefix + " " + name + " " + d.name() + " z=" + fmt_point(z);
  r["identity"] = name;
  r["domain"] = d.name();
  r["point"] = point_json(z);
  Json items = Json::array();
  bool pass = true;
  int retries = 0;
  double worst = 0.0;
  for (const auto* rep : reps) {
    items.push_back(identity_json(*rep));
    pass = pass && rep->pass;
    retries += rep->attempts - 1;
    worst = std::max(worst, items.back()["max_zscore"].get<double>());
  }
  r["components"] = items;
  r["pass"] = pass;
  r["summary"] = std::to_string(reps.size()) + " components, max z " + fmt("%.2f", worst) +
                 ", retries " + std::to_string(retries);
  push(records, std::move(r), opts);
}

void run_identities(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const DomainModel& d = plan.cases[c].domain;
    for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
      check_interrupt();
      const ComplexPoint& z = plan.cases[c].points[p];
      const std::uint64_t seed = derive_seed(plan.seed, {c, p});
      std::vector<IdentityReport> reps;
      if (plan.identities.empty()) {
        reps = identity_suite_mc(d, z, plan.n, seed, opts.threads);
      } else {
        for (std::size_t i = 0; i < plan.identities.size(); ++i) {
          check_interrupt();
          reps.push_back(lemma_identity_mc(d, z, plan.identities[i].id, plan.identities[i].indices, plan.n,
                                           derive_seed(seed, {3, i}), opts.threads));
        }
      }
      for (ExpectationIdentity id : all_identities()) {
        std::vector<const IdentityReport*> group;
        for (const auto& rep : reps)
          if (rep.id == id) group.push_back(&rep);
        if (!group.empty()) push_identity_group(records, "identity", to_string(id), d, z, group, opts);
      }
      for (std::size_t a = 0; a < plan.amari.size(); ++a) {
        check_interrupt();
        const IdentityReport rep = amari_chentsov_mc(d, z, plan.amari[a].conjugate, plan.amari[a].indices,
                                                     plan.n, derive_seed(seed, {4, a}), opts.threads);
        push_identity_group(records, "tensor", rep.label, d, z, {&rep}, opts);
      }
    }
  }
}

void run_curvature(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const DomainModel& d = plan.cases[c].domain;
    std::vector<int> dirs = plan.directions;
    if (dirs.empty())
      for (int a = 0; a < d.dimension(); ++a) dirs.push_back(a);
    for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
      const ComplexPoint& z = plan.cases[c].points[p];
      for (int a : dirs) {
        check_interrupt();
        const std::uint64_t seed = derive_seed(plan.seed, {c, p, static_cast<std::uint64_t>(a)});
        const CurvatureReport rep = curvature_mc(d, z, a, plan.n, seed, opts.threads);
        const double fd = holo_sectional_curvature_fd(d, z, a);
        const bool fd_ok = std::abs(fd - rep.analytic) <= plan.fd_tol * std::max(1.0, std::abs(rep.analytic));
        const bool analytic_le_2 = rep.analytic <= 2.0;
        Json r;
        r["label"] = "curvature " + d.name() + " z=" + fmt_point(z) + " dir " + std::to_string(a);
        r["domain"] = d.name();
        r["point"] = point_json(z);
        r["direction"] = a;
        r["seed"] = seed;
        r["analytic"] = rep.analytic;
        r["finite_difference"] = fd;
        r["fd_agrees"] = fd_ok;
        r["second_moment"] = estimate_json(rep.second_moment);
        r["mc_curvature"] = rep.mc_curvature;
        r["mc_stderr"] = rep.mc_stderr;
        r["matches"] = rep.matches;
        r["below_bound"] = rep.below_bound;
        r["analytic_at_most_2"] = analytic_le_2;
        r["pass"] = rep.matches && rep.below_bound && fd_ok && analytic_le_2;
        r["summary"] = "R " + fmt("%.6f", rep.analytic) + " (fd " + fmt("%.6f", fd) + "), MC " +
                       fmt("%.5f", rep.mc_curvature) + " +- " + fmt("%.2g", rep.mc_stderr);
        push(records, std::move(r), opts);
      }
    }
  }
}

ComplexPoint mobius(const ComplexPoint& z, double a) {
  ComplexPoint out(1);
  out[0] = (z[0] - a) / (1.0 - a * z[0]);
  return out;
}

void run_divergence(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const DomainModel& d = plan.cases[c].domain;
    for (std::size_t p = 0; p < plan.cases[c].pairs.size(); ++p) {
      const auto& [z, w] = plan.cases[c].pairs[p];
      const std::string where = d.name() + " z=" + fmt_point(z) + " w=" + fmt_point(w);
      if (plan.divergence == "kl") {
        check_interrupt();
        const std::uint64_t seed = derive_seed(plan.seed, {c, p});
        const MCEstimate est = kl_divergence_mc(d, z, w, plan.n, seed, opts.threads);
        const double dia = diastasis(d, z, w);
        const bool pass = est.within(cplx(dia), 3.0);
        Json r;
        r["label"] = "kl " + where;
        r["domain"] = d.name();
        r["z"] = point_json(z);
        r["w"] = point_json(w);
        r["seed"] = seed;
        r["estimate"] = est.value().real();
        r["std_error"] = est.error();
        r["diastasis"] = dia;
        r["pass"] = pass;
        r["summary"] = fmt("%.5f", est.value().real()) + " +- " + fmt("%.2g", est.error()) + " vs Dia " +
                       fmt("%.5f", dia);
        push(records, std::move(r), opts);
        continue;
      }
      const ComplexPoint fz = mobius(z, plan.mobius);
      const ComplexPoint fw = mobius(w, plan.mobius);
      for (std::size_t k = 0; k < plan.alphas.size(); ++k) {
        check_interrupt();
        const double alpha = plan.alphas[k];
        const std::uint64_t s0 = derive_seed(plan.seed, {c, p, k, 0});
        const std::uint64_t s1 = derive_seed(plan.seed, {c, p, k, 1});
        const MCEstimate before = alpha_divergence_mc(d, z, w, alpha, plan.n, s0, opts.threads);
        const MCEstimate after = alpha_divergence_mc(d, fz, fw, alpha, plan.n, s1, opts.threads);
        const double diff = before.value().real() - after.value().real();
        const double joint = std::hypot(before.error(), after.error());
        const bool pass = std::abs(diff) <= 3.0 * joint + roundoff_floor(before.value());
        Json r;
        r["label"] = "alpha=" + fmt("%g", alpha) + " " + where;
        r["domain"] = d.name();
        r["alpha"] = alpha;
        r["mobius"] = plan.mobius;
        r["z"] = point_json(z);
        r["w"] = point_json(w);
        r["mapped_z"] = point_json(fz);
        r["mapped_w"] = point_json(fw);
        r["seeds"] = Json::array({s0, s1});
        r["before"] = Json{{"estimate", before.value().real()}, {"std_error", before.error()}};
        r["after"] = Json{{"estimate", after.value().real()}, {"std_error", after.error()}};
        r["joint_stderr"] = joint;
        r["difference"] = diff;
        r["pass"] = pass;
        r["summary"] = fmt("%.5f", before.value().real()) + " vs " + fmt("%.5f", after.value().real()) +
                       ", |diff| " + fmt("%.2g", std::abs(diff)) + " <= 3*" + fmt("%.2g", joint);
        push(records, std::move(r), opts);
      }
    }
  }
}

// Deterministic interior grid: coordinate j of point k has modulus
// r0 + dr k and argument rate k + phase + 0.9 j, scaled for the ball.
std::vector<ComplexPoint> spiral_grid(const DomainModel& d, int count, double r0, double r1, double rate,
                                      double phase) {
  std::vector<ComplexPoint> out;
  const double scale = d.kind() == DomainKind::Ball ? 1.0 / std::sqrt(static_cast<double>(d.dimension())) : 1.0;
  for (int k = 0; k < count; ++k) {
    ComplexPoint z(d.dimension());
    const double r = (r0 + (r1 - r0) * k / std::max(1, count - 1)) * scale;
    for (int j = 0; j < d.dimension(); ++j) z[j] = std::polar(r, rate * k + phase + 0.9 * j);
    out.push_back(z);
  }
  return out;
}

void run_maps(const Plan& plan, const RunOptions& opts, Records& records) {
  const auto wants = [&](const char* check) {
    return std::find(plan.checks.begin(), plan.checks.end(), check) != plan.checks.end();
  };
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const ProperMap& map = *plan.cases[c].map;
    const DomainModel& d1 = map.source();
    const DomainModel& d2 = map.target();
    const bool injective = map.sheet_count() == 1;
    const auto zs = spiral_grid(d1, plan.grid, 0.1, 0.67, 0.7, 0.0);
    // a different spiral for the targets, avoiding the critical value 0
    std::vector<ComplexPoint> zetas = spiral_grid(d2, plan.grid, 0.05, 0.81, -1.3, 0.2);
    std::rotate(zetas.begin(), zetas.begin() + plan.grid / 3, zetas.end());
    const std::string tag = map.name() + " on " + d1.name();

    if (wants("pullback"))
      for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
        check_interrupt();
        const ComplexPoint& z = plan.cases[c].points[p];
        const std::uint64_t seed = derive_seed(plan.seed, {c, p, 0});
        const MCEstimate est = pullback_fisher_mc(map, d1, z, plan.n, seed, opts.threads);
        const HermitianMatrix g = bergman_metric(d1, z);
        bool monotone = true;
        bool strict = true;
        double min_gap_z = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d1.dimension(); ++i) {
          const double e = est.value(i, i).real();
          const double s = est.error(i, i);
          const double gi = g(i, i).real();
          monotone = monotone && e <= gi + 3.0 * s + roundoff_floor(gi);
          if (map.exponents()[static_cast<std::size_t>(i)] > 1) {
            strict = strict && gi - e > 3.0 * s;
            min_gap_z = std::min(min_gap_z, (gi - e) / s);
          }
        }
        const bool equal = est.within(g, 3.0);
        const bool pass = monotone && (injective ? equal : strict);
        Json r;
        r["label"] = "pullback " + tag + " z=" + fmt_point(z);
        r["map"] = map.name();
        r["domain"] = d1.name();
        r["point"] = point_json(z);
        r["seed"] = seed;
        r["injective"] = injective;
        r["estimate"] = estimate_json(est);
        r["bergman_metric"] = cmatrix_json(g);
        r["at_most_metric"] = monotone;
        r["hermitian_defect"] = (est.mean - est.mean.adjoint()).norm();
        if (injective)
          r["equals_metric"] = equal;
        else
          r["strictly_below_metric"] = strict;
        r["pass"] = pass;
        std::string summary = fmt_c(est.value(0, 0)) + " +- " + fmt("%.2g", est.error(0, 0)) + " vs g " +
                              fmt("%.6g", g(0, 0).real());
        if (!injective) summary += ", gap " + fmt("%.1f", min_gap_z) + " stderr";
        r["summary"] = summary;
        push(records, std::move(r), opts);
      }

    if (wants("normalization"))
      for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
        check_interrupt();
        const ComplexPoint& z = plan.cases[c].points[p];
        const std::uint64_t seed = derive_seed(plan.seed, {c, p, 1});
        // P(0, .) is uniform on these domains, and ζ = f(ξ) covers the target m times
        const double w = d1.volume() / map.sheet_count();
        const SampleFilter exclude = [&map](const ComplexPoint& xi) {
          return map.near_critical_value(map.apply(xi));
        };
        const ComplexPoint origin = ComplexPoint::Zero(d1.dimension());
        const MCEstimate est = mc_expectation(
            d1, origin, 1, 1,
            [&] {
              return MatrixIntegrand([&](const ComplexPoint& xi, Eigen::MatrixXcd& out) {
                out(0, 0) = w * pushforward_density(map, d1, z, map.apply(xi)) * std::norm(map.jacobian(xi));
              });
            },
            plan.n, seed, opts.threads, exclude);
        const bool pass = est.within(cplx(1.0), 3.0);
        Json r;
        r["label"] = "normalization " + tag + " z=" + fmt_point(z);
        r["map"] = map.name();
        r["point"] = point_json(z);
        r["seed"] = seed;
        r["integral"] = est.value().real();
        r["std_error"] = est.error();
        r["pass"] = pass;
        r["summary"] = "integral " + fmt("%.6f", est.value().real()) + " +- " + fmt("%.2g", est.error());
        push(records, std::move(r), opts);
      }

    if (wants("bell")) {
      check_interrupt();
      double worst = 0.0;
      Json rows = Json::array();
      for (int k = 0; k < plan.grid; ++k) {
        const double res = bell_rule_check(map, d1, d2, zs[k], zetas[k]);
        worst = std::max(worst, res);
        rows.push_back(Json{{"z", point_json(zs[k])}, {"zeta", point_json(zetas[k])}, {"residual", res}});
      }
      Json r;
      r["label"] = "bell " + tag;
      r["map"] = map.name();
      r["grid"] = rows;
      r["max_residual"] = worst;
      r["tolerance"] = plan.bell_tol;
      r["pass"] = worst < plan.bell_tol;
      r["summary"] = "max residual " + fmt("%.3g", worst) + " over " + std::to_string(plan.grid) + " points";
      push(records, std::move(r), opts);
    }

    if (wants("k_inequality")) {
      check_interrupt();
      bool holds = true;
      int equal = 0;
      int total = 0;
      double worst = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < plan.grid; ++k)
        for (int a = 0; a < d1.dimension(); ++a) {
          const KInequality q = k_inequality_check(map, d1, zs[k], zetas[k], a);
          const double scale = std::max(std::abs(q.lhs), std::abs(q.rhs));
          holds = holds && q.lhs <= q.rhs + 1e-12 * scale;
          worst = std::max(worst, (q.lhs - q.rhs) / scale);
          equal += q.equal ? 1 : 0;
          ++total;
        }
      const bool pass = holds && (!injective || equal == total);
      Json r;
      r["label"] = "k-inequality " + tag;
      r["map"] = map.name();
      r["checked"] = total;
      r["equalities"] = equal;
      r["max_relative_excess"] = worst;
      r["holds"] = holds;
      r["pass"] = pass;
      r["summary"] = std::to_string(total) + " checks, " + std::to_string(equal) + " equalities, max (lhs-rhs)/rhs " +
                     fmt("%.2g", worst);
      push(records, std::move(r), opts);
    }

    if (wants("comparison")) {
      check_interrupt();
      bool holds = true;
      double min_ratio = std::numeric_limits<double>::infinity();
      for (int k = 0; k < plan.grid; ++k) {
        const ComparisonBound b = comparison_bound_check(map, d1, zs[k], zetas[k]);
        holds = holds && b.holds;
        min_ratio = std::min(min_ratio, b.density / b.bound);
      }
      Json r;
      r["label"] = "comparison " + tag;
      r["map"] = map.name();
      r["min_density_over_bound"] = min_ratio;
      r["pass"] = holds;
      r["summary"] = "min density/bound " + fmt("%.6g", min_ratio);
      push(records, std::move(r), opts);
    }

    if (wants("diagram")) {
      check_interrupt();
      double worst = 0.0;
      int at = 0;
      for (int k = 0; k < plan.grid; ++k) {
        const double defect = diagram_defect(map, zs[k], zetas[k]);
        if (defect > worst) {
          worst = defect;
          at = k;
        }
      }
      const bool pass = injective ? worst < 1e-10 : worst > 1e-6;
      Json r;
      r["label"] = "diagram " + tag;
      r["map"] = map.name();
      r["injective"] = injective;
      r["max_defect"] = worst;
      r["witness"] = Json{{"z", point_json(zs[at])}, {"zeta", point_json(zetas[at])}};
      r["pass"] = pass;
      r["summary"] = std::string(injective ? "commutes" : "fails to commute") + ", max defect " + fmt("%.3g", worst);
      push(records, std::move(r), opts);
    }
  }
}

void run_consistency(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const DomainModel& d = plan.cases[c].domain;
    for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
      check_interrupt();
      const ComplexPoint& z = plan.cases[c].points[p];
      const std::uint64_t seed = derive_seed(plan.seed, {c, p});
      const ConsistencyReport rep = consistency_experiment(d, z, plan.m_schedule, plan.r_rep, seed, opts.threads);
      Json rows = Json::array();
      std::string summary = "mean error";
      for (const auto& row : rep.rows) {
        rows.push_back(Json{{"m", row.m},
                            {"mean_error", row.mean_error},
                            {"std_error", row.std_error},
                            {"replications", row.replications},
                            {"failures", row.failures},
                            {"mean_iterations", row.mean_iterations}});
        summary += " " + fmt("%.4f", row.mean_error);
      }
      bool ratios_ok = true;
      Json ratios = Json::array();
      for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        const double q = rep.rows[i].mean_error / rep.rows[i - 1].mean_error;
        ratios.push_back(q);
        if (plan.ratio_range) ratios_ok = ratios_ok && q >= plan.ratio_range->first && q <= plan.ratio_range->second;
      }
      const bool pass = rep.strictly_decreasing && rep.failure_rate < 0.01 && ratios_ok;
      Json r;
      r["label"] = "consistency " + d.name() + " z0=" + fmt_point(z);
      r["domain"] = d.name();
      r["z0"] = point_json(z);
      r["seed"] = seed;
      r["r_rep"] = plan.r_rep;
      r["initialization"] = "batch_mean";
      r["rows"] = rows;
      r["ratios"] = ratios;
      if (plan.ratio_range) r["ratio_range"] = Json::array({plan.ratio_range->first, plan.ratio_range->second});
      r["strictly_decreasing"] = rep.strictly_decreasing;
      r["failure_rate"] = rep.failure_rate;
      r["pass"] = pass;
      r["summary"] = summary + ", failures " + fmt("%.2g", rep.failure_rate);
      push(records, std::move(r), opts);
    }
  }
}

void run_clt(const Plan& plan, const RunOptions& opts, Records& records) {
  for (std::size_t c = 0; c < plan.cases.size(); ++c) {
    const DomainModel& d = plan.cases[c].domain;
    for (std::size_t p = 0; p < plan.cases[c].points.size(); ++p) {
      check_interrupt();
      const ComplexPoint& z = plan.cases[c].points[p];
      const std::uint64_t seed = derive_seed(plan.seed, {c, p});
      const CltReport rep = clt_experiment(d, z, plan.m, plan.r_rep, seed, opts.threads);
      const bool cov_ok = rep.covariance_ok(plan.covariance_tol);
      const bool ks_ok = rep.normality_ok(plan.ks_level);
      const bool relation_checked = plan.cases[c].check_relation.value_or(plan.check_relation);
      const bool rel_ok = !relation_checked || rep.relation_ok();
      const bool fail_ok = rep.failure_rate_ok();
      Json ks = Json::array();
      for (std::size_t i = 0; i < rep.marginal_names.size(); ++i)
        ks.push_back(Json{{"marginal", rep.marginal_names[i]},
                          {"statistic", rep.ks_statistics[i]},
                          {"p_value", rep.ks_p_values[i]}});
      Json r;
      r["label"] = "clt " + d.name() + " z0=" + fmt_point(z);
      r["domain"] = d.name();
      r["z0"] = point_json(z);
      r["m"] = plan.m;
      r["r_rep"] = plan.r_rep;
      r["seed"] = seed;
      r["initialization"] = "batch_mean";
      r["successes"] = rep.successes;
      r["failures"] = rep.failures;
      r["mean_iterations"] = rep.mean_iterations;
      r["gamma_hat"] = cmatrix_json(rep.gamma_hat);
      r["gamma_star"] = cmatrix_json(rep.gamma_star);
      r["covariance_rel_error"] = rep.covariance_rel_error;
      r["covariance_tol"] = plan.covariance_tol;
      r["relation_hat"] = cmatrix_json(rep.relation_hat);
      r["relation_norm"] = rep.relation_norm;
      r["relation_bound"] = rep.relation_bound;
      r["relation_checked"] = relation_checked;
      r["ks"] = ks;
      r["ks_level"] = plan.ks_level;
      r["covariance_ok"] = cov_ok;
      r["relation_ok"] = rep.relation_ok();
      r["normality_ok"] = ks_ok;
      r["failure_rate_ok"] = fail_ok;
      if (plan.dump_csv && !opts.csv_dir.empty()) {
        fs::create_directories(opts.csv_dir);
        const std::string file =
            (fs::path(opts.csv_dir) / ("clt_" + std::to_string(c) + "_" + std::to_string(p) + ".csv")).string();
        write_points_csv(rep.scaled_errors, file, "y");
        r["csv"] = fs::path(file).filename().string();
      }
      r["pass"] = cov_ok && ks_ok && rel_ok && fail_ok;
      double min_p = 1.0;
      for (double q : rep.ks_p_values) min_p = std::min(min_p, q);
      std::string summary = "cov rel err " + fmt("%.3f", rep.covariance_rel_error) + " (tol " +
                            fmt("%.3g", plan.covariance_tol) + "), min KS p " + fmt("%.3g", min_p);
      if (relation_checked)
        summary += ", |R| " + fmt("%.4f", rep.relation_norm) + " < " + fmt("%.4f", rep.relation_bound);
      r["summary"] = summary;
      push(records, std::move(r), opts);
    }
  }
}

std::string canonical(const std::string& path) {
  std::error_code ec;
  const fs::path p = fs::weakly_canonical(path, ec);
  return ec ? path : p.string();
}

void run_determinism(const Plan& plan, const ExperimentConfig& config, const RunOptions& opts,
                     Records& records) {
  const fs::path base = config.source == "<memory>" ? fs::current_path() : fs::path(config.source).parent_path();
  std::vector<std::string> paths;
  if (plan.configs.size() == 1 && plan.configs[0] == "siblings") {
    for (const auto& entry : fs::directory_iterator(base))
      if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
  } else {
    for (const auto& p : plan.configs) paths.push_back((base / p).string());
  }
  const std::string self = canonical(config.source);
  for (const auto& path : paths) {
    check_interrupt();
    if (canonical(path) == self) continue;
    const ExperimentConfig other = load_config(path);
    if (other.kind == "determinism") continue;
    RunOptions inner = opts;
    inner.log = nullptr;
    inner.csv_dir.clear();
    inner.prior_reports = nullptr;
    Json first;
    bool reused = false;
    if (opts.prior_reports) {
      const auto it = opts.prior_reports->find(canonical(path));
      if (it != opts.prior_reports->end()) {
        first = strip_volatile(it->second);
        reused = true;
      }
    }
    if (!reused) first = strip_volatile(run_experiment(other, inner));
    const Json second = strip_volatile(run_experiment(other, inner));
    const std::string a = first.dump();
    const std::string b = second.dump();
    const bool same = a == b;
    Json r;
    r["label"] = "determinism " + other.name;
    r["config"] = fs::path(path).filename().string();
    r["reused_prior_report"] = reused;
    r["report_bytes"] = a.size();
    r["identical"] = same;
    if (!same) {
      const Json patch = Json::diff(first, second);
      if (!patch.empty()) r["first_difference"] = patch[0].value("path", std::string());
    }
    r["pass"] = same;
    r["summary"] = same ? "bit-identical rerun (" + std::to_string(a.size()) + " bytes)" : "reports differ";
    push(records, std::move(r), opts);
  }
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"kernel-oracle", "fisher", "identities", "curvature",
                                                 "divergence", "maps", "consistency", "clt", "determinism"};
  return kinds;
}

DomainModel parse_domain(const Json& j, const std::string& path) {
  if (j.is_string()) {
    static const std::regex form(R"(^\s*(disc|polydisc|ball)\s*(?:\(\s*(\d+)\s*\))?\s*$)");
    std::smatch m;
    const std::string s = j.get<std::string>();
    if (!std::regex_match(s, m, form)) fail(path, "unknown domain '" + s + "' (expected disc, polydisc(n) or ball(n))");
    if (m[1] != "disc" && !m[2].matched) fail(path, "'" + s + "' needs a dimension, e.g. " + m[1].str() + "(2)");
    const long long n = m[2].matched ? std::stoll(m[2].str()) : 1;
    if (n < 1 || n > kMaxDimension) fail(path, "dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
    return domain_from(m[1].str(), n, path);
  }
  if (j.is_object()) {
    const Params p(j, path);
    const std::string kind = p.string("kind", "");
    const long long n = p.integer("n", 1, kMaxDimension, 1);
    for (const auto& [key, _] : j.items())
      if (key != "kind" && key != "n") fail(field(path, key), "unknown field");
    return domain_from(kind, n, p.at("kind"));
  }
  fail(path, "expected a domain name or {\"kind\", \"n\"}");
}

ComplexPoint parse_point(const Json& j, const DomainModel& domain, const std::string& path) {
  const int n = domain.dimension();
  ComplexPoint z(n);
  if (n == 1 && (j.is_number() || j.is_object())) {
    z[0] = parse_coordinate(j, path);
  } else {
    if (!j.is_array()) fail(path, "expected an array of " + std::to_string(n) + " coordinates");
    if (j.size() != static_cast<std::size_t>(n))
      fail(path, "expected " + std::to_string(n) + " coordinates for " + domain.name() + ", got " +
                     std::to_string(j.size()));
    for (int k = 0; k < n; ++k) z[k] = parse_coordinate(j[static_cast<std::size_t>(k)], index(path, k));
  }
  if (!domain.contains(z)) fail(path, "point " + fmt_point(z) + " is not inside " + domain.name());
  return z;
}

std::vector<ComplexPoint> random_points(const DomainModel& domain, int count, double max_radius,
                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ComplexPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(max_radius * uniform_box_sample(domain, rng));
  return out;
}

ExperimentConfig parse_config(const Json& doc, const std::string& source) {
  build_plan(doc);
  ExperimentConfig cfg;
  cfg.doc = doc;
  cfg.kind = doc["kind"].get<std::string>();
  cfg.seed = parse_seed(doc);
  if (doc.contains("name")) {
    if (!doc["name"].is_string() || doc["name"].get<std::string>().empty()) fail("name", "expected a non-empty string");
    cfg.name = doc["name"].get<std::string>();
  } else {
    cfg.name = source == "<memory>" ? cfg.kind : fs::path(source).stem().string();
  }
  cfg.source = source;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  try {
    return parse_config(doc, path);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json smoke_scaled(const Json& doc) {
  Json out = doc;
  if (out.contains("n") && out["n"].is_number() && out["n"].get<double>() > 1e4) out["n"] = 10000;
  if (out.contains("r_rep") && out["r_rep"].is_number() && out["r_rep"].get<double>() > 100) out["r_rep"] = 100;
  if (out.value("kind", std::string()) == "clt" && out.contains("r_rep") && out["r_rep"].is_number()) {
    const double widened = 3.0 / std::sqrt(out["r_rep"].get<double>());
    const double tol = out.contains("covariance_tol") && out["covariance_tol"].is_number()
                           ? out["covariance_tol"].get<double>()
                           : 0.10;
    out["covariance_tol"] = std::max(tol, widened);
  }
  return out;
}

Json run_experiment(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = config;
  if (opts.smoke) cfg.doc = smoke_scaled(config.doc);
  const Plan plan = build_plan(cfg.doc);

  Json report;
  report["name"] = cfg.name;
  report["kind"] = cfg.kind;
  report["library_version"] = BERGMAN_VERSION;
  report["seed"] = cfg.seed;
  report["smoke"] = opts.smoke;
  report["config"] = cfg.doc;
  report["records"] = Json::array();
  Json& records = report["records"];
  if (opts.log) *opts.log << "== " << cfg.name << " (" << cfg.kind << (opts.smoke ? ", smoke" : "") << ")\n";

  bool interrupted = false;
  std::string error;
  try {
    if (plan.kind == "kernel-oracle") run_kernel_oracle(plan, opts, records);
    else if (plan.kind == "fisher") run_fisher(plan, opts, records);
    else if (plan.kind == "identities") run_identities(plan, opts, records);
    else if (plan.kind == "curvature") run_curvature(plan, opts, records);
    else if (plan.kind == "divergence") run_divergence(plan, opts, records);
    else if (plan.kind == "maps") run_maps(plan, opts, records);
    else if (plan.kind == "consistency") run_consistency(plan, opts, records);
    else if (plan.kind == "clt") run_clt(plan, opts, records);
    else if (plan.kind == "determinism") run_determinism(plan, cfg, opts, records);
  } catch (const Interrupted&) {
    interrupted = true;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    error = e.what();
  }

  bool pass = !interrupted && error.empty() && !records.empty();
  for (const auto& r : records) pass = pass && r.value("pass", false);
  report["pass"] = pass;
  if (interrupted) report["interrupted"] = true;
  if (!error.empty()) {
    report["error"] = error;
    if (opts.log) *opts.log << "  ERROR " << error << "\n";
  }
  report["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Json strip_volatile(Json report) {
  if (report.is_object()) {
    report.erase("wall_clock_seconds");
    for (auto& [_, v] : report.items()) v = strip_volatile(v);
  } else if (report.is_array()) {
    for (auto& v : report) v = strip_volatile(v);
  }
  return report;
}

void print_summary(const Json& report, std::ostream& out) {
  const auto& records = report.at("records");
  std::size_t width = 0;
  for (const auto& r : records) width = std::max(width, r.value("label", std::string()).size());
  out << report.value("name", std::string()) << " [" << report.value("kind", std::string()) << "] seed "
      << report.value("seed", std::uint64_t{0}) << "\n";
  for (const auto& r : records) {
    const std::string label = r.value("label", std::string());
    out << "  " << (r.value("pass", false) ? "PASS" : "FAIL") << "  " << label
        << std::string(width - label.size() + 2, ' ') << r.value("summary", std::string()) << "\n";
  }
  if (report.contains("error")) out << "  error: " << report["error"].get<std::string>() << "\n";
  if (report.value("interrupted", false)) out << "  interrupted: partial report\n";
  out << "  => " << (report.value("pass", false) ? "PASS" : "FAIL") << " (" << records.size() << " records, "
      << fmt("%.1f", report.value("wall_clock_seconds", 0.0)) << " s)\n";
}

std::string default_config_dir() {
  if (const char* env = std::getenv("BERGMAN_CONFIG_DIR")) return env;
  return BERGMAN_DEFAULT_CONFIG_DIR;
}

std::vector<std::string> suite_config_paths(const std::string& suite, const std::string& config_dir) {
  if (suite != "smoke" && suite != "paper") throw ConfigError("unknown suite '" + suite + "' (expected smoke or paper)");
  const fs::path dir = fs::path(config_dir.empty() ? default_config_dir() : config_dir) / "paper";
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + ": suite directory not found");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") out.push_back(entry.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void write_json(const Json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write report");
  out << j.dump(2) << "\n";
}

}  // namespace

int run_config_file(const std::string& path, const std::string& out_path, const RunOptions& opts) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  const fs::path out = out_path.empty() ? fs::path("reports") / (cfg.name + ".json") : fs::path(out_path);
  RunOptions o = opts;
  if (o.csv_dir.empty()) o.csv_dir = (out.parent_path() / (cfg.name + "_csv")).string();
  Json report;
  try {
    report = run_experiment(cfg, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  write_json(report, out);
  print_summary(report, std::cout);
  std::cout << "report: " << out.string() << "\n";
  return report.value("pass", false) ? 0 : 1;
}

int run_suite(const std::string& suite, const std::string& out_dir, const RunOptions& opts) {
  std::vector<std::string> paths;
  try {
    paths = suite_config_paths(suite, opts.config_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const fs::path dir = out_dir.empty() ? fs::path("reports") / suite : fs::path(out_dir);
  std::vector<ExperimentConfig> configs;
  for (const auto& p : paths) {
    try {
      configs.push_back(load_config(p));
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }
  RunOptions o = opts;
  o.smoke = suite == "smoke";
  std::map<std::string, Json> done;
  o.prior_reports = &done;
  Json summary;
  summary["suite"] = suite;
  summary["library_version"] = BERGMAN_VERSION;
  summary["reports"] = Json::array();
  bool pass = true;
  bool interrupted = false;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& cfg = configs[i];
    o.csv_dir = (dir / (cfg.name + "_csv")).string();
    Json report;
    try {
      report = run_experiment(cfg, o);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    const fs::path file = dir / (cfg.name + ".json");
    write_json(report, file);
    print_summary(report, std::cout);
    done[canonical(paths[i])] = report;
    const bool ok = report.value("pass", false);
    pass = pass && ok;
    summary["reports"].push_back(Json{{"name", cfg.name},
                                      {"kind", cfg.kind},
                                      {"file", file.filename().string()},
                                      {"pass", ok},
                                      {"wall_clock_seconds", report["wall_clock_seconds"]}});
    if (report.value("interrupted", false)) {
      interrupted = true;
      break;
    }
  }
  summary["pass"] = pass && !interrupted;
  if (interrupted) summary["interrupted"] = true;
  summary["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(summary, dir / "summary.json");
  std::cout << "suite " << suite << ": " << (summary["pass"].get<bool>() ? "PASS" : "FAIL") << " ("
            << fmt("%.1f", summary["wall_clock_seconds"].get<double>()) << " s), reports in " << dir.string()
            << "\n";
  return summary["pass"].get<bool>() ? 0 : 1;
}

void request_interrupt() { g_interrupt.store(true); }
void clear_interrupt() { g_interrupt.store(false); }
bool interrupt_requested() { return g_interrupt.load(); }

}  // namespace bergman
