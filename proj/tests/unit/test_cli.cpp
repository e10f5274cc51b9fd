#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "bergman/errors.hpp"
#include "bergman/experiment.hpp"

using namespace bergman;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = BERGMAN_TEST_SCRATCH;

Json fisher_example() {
  return Json::parse(R"j({"name": "fisher_example", "kind": "fisher", "domain": "disc", "point": 0.5, "n": 1e6, "seed": 7})j");
}

std::string config_error(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path write_config(const std::string& name, const Json& doc) {
  fs::create_directories(kScratch);
  const fs::path p = kScratch / (name + ".json");
  std::ofstream(p) << doc.dump(2);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BERGMAN_TEST_CLI) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

RunOptions quiet() {
  RunOptions o;
  o.threads = 1;
  o.config_dir = BERGMAN_TEST_CONFIG_DIR;
  return o;
}

}  // namespace

TEST_CASE("configuration errors name the offending field") {
  Json outside = fisher_example();
  outside["point"] = 1.2;
  CHECK(config_error(outside).rfind("point", 0) == 0);

  Json kind = fisher_example();
  kind["kind"] = "fishing";
  CHECK(config_error(kind).find("kind") != std::string::npos);
  CHECK(config_error(kind).find("fishing") != std::string::npos);

  Json big = fisher_example();
  big["n"] = 1e9;
  CHECK(config_error(big).rfind("n", 0) == 0);

  Json small = fisher_example();
  small["n"] = 10;
  CHECK(config_error(small).rfind("n", 0) == 0);

  Json seedless = fisher_example();
  seedless.erase("seed");
  CHECK(config_error(seedless).rfind("seed", 0) == 0);

  Json domain = fisher_example();
  domain["domain"] = "annulus";
  CHECK(config_error(domain).rfind("domain", 0) == 0);

  Json extra = fisher_example();
  extra["colour"] = "blue";
  CHECK_FALSE(config_error(extra).empty());

  const Json nested = Json::parse(
      R"j({"kind": "fisher", "seed": 1, "n": 1000, "cases": [{"domain": "ball(2)", "points": [[0.1, 0.2], [0.9, [0, 0.5]]]}]})j");
  const std::string msg = config_error(nested);
  CHECK(msg.rfind("cases[0].points[1]", 0) == 0);

  CHECK(config_error(fisher_example()).empty());
  CHECK_THROWS_AS(load_config((kScratch / "does_not_exist.json").string()), ConfigError);
}

TEST_CASE("domain and point parsing") {
  CHECK(parse_domain(Json("disc"), "d").kind() == DomainKind::Disc);
  CHECK(parse_domain(Json("polydisc(3)"), "d").dimension() == 3);
  CHECK(parse_domain(Json::parse(R"j({"kind": "ball", "n": 2})j"), "d").kind() == DomainKind::Ball);
  CHECK_THROWS_AS(parse_domain(Json("ball(0)"), "d"), ConfigError);
  const auto ball = DomainModel::ball(2);
  const ComplexPoint z = parse_point(Json::parse(R"([[0.1, -0.2], {"re": 0.3, "im": 0}])"), ball, "p");
  CHECK(z[0] == cplx(0.1, -0.2));
  CHECK(z[1] == cplx(0.3, 0.0));
  CHECK(parse_point(Json(0.25), DomainModel::disc(), "p")[0] == cplx(0.25));
  CHECK_THROWS_AS(parse_point(Json(0.25), ball, "p"), ConfigError);
  CHECK_THROWS_AS(parse_point(Json::parse("[0.8, 0.8]"), ball, "p"), ConfigError);

  const auto pts = random_points(DomainModel::polydisc(2), 20, 0.6, 3);
  CHECK(pts.size() == 20);
  for (const auto& p : pts) CHECK(p.cwiseAbs().maxCoeff() <= 0.6);
  CHECK(random_points(DomainModel::polydisc(2), 20, 0.6, 3)[7] == pts[7]);
}

TEST_CASE("fisher example runs and passes") {
  const ExperimentConfig cfg = parse_config(fisher_example());
  CHECK(cfg.kind == "fisher");
  CHECK(cfg.seed == 7);
  const Json report = run_experiment(cfg, quiet());
  CHECK(report["pass"].get<bool>());
  for (const char* key : {"name", "kind", "library_version", "seed", "smoke", "config", "records", "wall_clock_seconds"})
    CHECK(report.contains(key));
  CHECK(report["config"] == fisher_example());
  REQUIRE(report["records"].size() == 1);
  const Json& rec = report["records"][0];
  CHECK(rec.contains("label"));
  CHECK(rec.contains("summary"));
  std::ostringstream text;
  print_summary(report, text);
  CHECK(text.str().find("PASS") != std::string::npos);
  CHECK(text.str().find("3.55") != std::string::npos);

  // rerunning gives the same report up to timing fields
  const Json again = run_experiment(cfg, quiet());
  CHECK(strip_volatile(again).dump() == strip_volatile(report).dump());
  CHECK_FALSE(strip_volatile(report).dump().find("wall_clock_seconds") != std::string::npos);
}

TEST_CASE("thread count does not change reports") {
  Json doc = fisher_example();
  doc["n"] = 50000;
  doc["domain"] = "ball(2)";
  doc["point"] = Json::parse("[0.2, [0, -0.3]]");
  const ExperimentConfig cfg = parse_config(doc);
  RunOptions four = quiet();
  four.threads = 4;
  CHECK(strip_volatile(run_experiment(cfg, quiet())).dump() == strip_volatile(run_experiment(cfg, four)).dump());
}

TEST_CASE("smoke scaling") {
  const Json s = smoke_scaled(Json::parse(R"j({"kind": "clt", "seed": 1, "n": 1e6, "r_rep": 2000, "covariance_tol": 0.1})j"));
  CHECK(s["n"].get<double>() == 10000);
  CHECK(s["r_rep"].get<double>() == 100);
  CHECK(s["covariance_tol"].get<double>() == doctest::Approx(0.3));
  const Json t = smoke_scaled(Json::parse(R"j({"kind": "fisher", "seed": 1, "n": 5000})j"));
  CHECK(t["n"].get<double>() == 5000);
}

TEST_CASE("interrupted runs report partial results") {
  const ExperimentConfig cfg = parse_config(fisher_example());
  request_interrupt();
  CHECK(interrupt_requested());
  const Json report = run_experiment(cfg, quiet());
  clear_interrupt();
  CHECK_FALSE(interrupt_requested());
  CHECK(report["interrupted"].get<bool>());
  CHECK_FALSE(report["pass"].get<bool>());
}

TEST_CASE("suite discovery") {
  const auto paths = suite_config_paths("paper", BERGMAN_TEST_CONFIG_DIR);
  CHECK(paths.size() == 11);
  CHECK(std::is_sorted(paths.begin(), paths.end()));
  CHECK(suite_config_paths("smoke", BERGMAN_TEST_CONFIG_DIR) == paths);
  CHECK_THROWS_AS(suite_config_paths("nightly", BERGMAN_TEST_CONFIG_DIR), ConfigError);
  for (const auto& p : paths) CHECK_NOTHROW(load_config(p));
}

TEST_CASE("command line") {
  const fs::path good = write_config("cli_fisher", [] {
    Json j = fisher_example();
    j["n"] = 20000;
    return j;
  }());
  const fs::path out = kScratch / "cli_fisher_report.json";
  fs::remove(out);
  CHECK(run_cli("--out " + out.string() + " run " + good.string()) == 0);
  REQUIRE(fs::exists(out));
  const Json first = read_json(out);
  CHECK(first["pass"].get<bool>());
  CHECK(run_cli("--threads 2 --out " + out.string() + " run " + good.string()) == 0);
  CHECK(strip_volatile(read_json(out)).dump() == strip_volatile(first).dump());

  Json bad = fisher_example();
  bad["point"] = 1.5;
  CHECK(run_cli("run " + write_config("cli_bad", bad).string()) == 2);
  CHECK(run_cli("run " + (kScratch / "missing.json").string()) == 2);
  CHECK(run_cli("--out " + (kScratch / "nightly").string() + " suite nightly") == 2);
  CHECK(run_cli("--no-such-flag") == 2);
  CHECK(run_cli("--version") == 0);
}
