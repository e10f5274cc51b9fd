#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "bergman/domains.hpp"

namespace bergman {

using Json = nlohmann::ordered_json;

/// Experiment families understood by the runner.
const std::vector<std::string>& experiment_kinds();

/// A validated configuration document. `doc` keeps the exact input so reports
/// can echo it; the runner reads kind-specific parameters from it lazily and
/// reports problems as ConfigError naming the JSON path.
struct ExperimentConfig {
  Json doc;
  std::string name;
  std::string kind;
  std::uint64_t seed = 0;
  std::string source;  // file path, or "<memory>"
};

/// Throws ConfigError (message starts with the offending field path).
ExperimentConfig parse_config(const Json& doc, const std::string& source = "<memory>");
ExperimentConfig load_config(const std::string& path);

DomainModel parse_domain(const Json& j, const std::string& path);
/// Array of coordinates (number, [re, im] or {"re":..,"im":..}); a bare number
/// is accepted for one-dimensional domains.
ComplexPoint parse_point(const Json& j, const DomainModel& domain, const std::string& path);

/// Deterministic interior points whose per-factor radius is at most max_radius.
std::vector<ComplexPoint> random_points(const DomainModel& domain, int count, double max_radius,
                                        std::uint64_t seed);

struct RunOptions {
  int threads = 0;           // 0: default_thread_count()
  bool smoke = false;        // apply smoke budgets
  std::string config_dir;    // for suites and determinism runs
  std::ostream* log = nullptr;
  std::string csv_dir;       // where dump_csv outputs go; empty disables them
  /// Reports already produced in this session, keyed by config path; the
  /// determinism check reruns against these instead of running twice.
  const std::map<std::string, Json>* prior_reports = nullptr;
};

/// Smoke budgets: n <= 1e4, r_rep <= 100, CLT covariance tolerance widened to
/// 3 / sqrt(r_rep).
Json smoke_scaled(const Json& doc);

/// Executes one experiment and returns its report:
///   {name, kind, library_version, seed, smoke, config, records[], pass, wall_clock_seconds}
Json run_experiment(const ExperimentConfig& config, const RunOptions& opts);

/// Report with every wall_clock_seconds field removed, for reproducibility checks.
Json strip_volatile(Json report);

/// Prints one line per record.
void print_summary(const Json& report, std::ostream& out);

/// Config files of a suite, sorted: smoke and paper both use <dir>/paper/*.json.
std::vector<std::string> suite_config_paths(const std::string& suite, const std::string& config_dir);

std::string default_config_dir();

/// Exit codes: 0 pass, 1 experiment failure or interrupt, 2 configuration error.
int run_config_file(const std::string& path, const std::string& out_path, const RunOptions& opts);
int run_suite(const std::string& suite, const std::string& out_dir, const RunOptions& opts);

/// Cooperative interruption: set from a signal handler, checked between test items.
void request_interrupt();
void clear_interrupt();
bool interrupt_requested();

}  // namespace bergman
