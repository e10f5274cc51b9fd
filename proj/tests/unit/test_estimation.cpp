#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bergman/errors.hpp"
#include "bergman/estimation.hpp"
#include "bergman/geometry.hpp"
#include "bergman/rng.hpp"
#include "oracles.hpp"

using namespace bergman;
using oracle::cd;
using oracle::pi;

namespace {

ComplexPoint pt(std::initializer_list<cplx> c) { return make_point(c); }

double oracle_objective(const DomainModel& d, const ComplexPoint& z, const std::vector<ComplexPoint>& xs) {
  double s = 0.0;
  for (const auto& x : xs) s += d.kind() == DomainKind::Ball ? oracle::ball_diastasis(z, x) : oracle::disc_diastasis(z[0], x[0]);
  return s;
}

}  // namespace

TEST_CASE("objective examples") {
  const auto disc = DomainModel::disc();
  const ObjectiveValue one = diastasis_objective_grad(disc, pt({0.4}), std::vector<ComplexPoint>{pt({0.4})});
  CHECK(std::abs(one.value) < 1e-14);
  CHECK(one.grad_norm() < 1e-14);
  // d_z Dia(z, w) at z = 0 is -2 conj(w)
  const ObjectiveValue at0 = diastasis_objective_grad(disc, pt({0.0}), std::vector<ComplexPoint>{pt({0.4})});
  CHECK(std::abs(at0.wirtinger_grad[0] - cplx(-0.8)) < 1e-15);
  CHECK(at0.value == doctest::Approx(oracle::disc_diastasis(0.0, 0.4)));
  const Eigen::VectorXd rg = at0.real_grad();
  CHECK(rg[0] == doctest::Approx(-1.6));
  CHECK(rg[1] == doctest::Approx(0.0));
}

TEST_CASE("objective gradient against differences of the closed form") {
  for (const auto& d : {DomainModel::disc(), DomainModel::ball(2)}) {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      std::vector<ComplexPoint> xs;
      for (int i = 0; i < 7; ++i) xs.push_back(0.9 * uniform_box_sample(d, rng));
      const ComplexPoint z = 0.8 * uniform_box_sample(d, rng);
      const ObjectiveValue v = diastasis_objective_grad(d, z, xs);
      CHECK(v.value == doctest::Approx(oracle_objective(d, z, xs)).epsilon(1e-11));
      const Eigen::VectorXd fd =
          oracle::fd_gradient([&](const Eigen::VectorXcd& u) { return oracle_objective(d, u, xs); }, z);
      CHECK((v.real_grad() - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("minimizer on small samples") {
  const auto disc = DomainModel::disc();
  const std::vector<ComplexPoint> single{pt({cplx(0.3, -0.6)})};
  const ZhatResult r = minimize_diastasis(disc, single, pt({0.0}));
  CHECK(r.converged);
  CHECK(r.stop_reason == "gradient");
  CHECK(std::abs(r.zhat[0] - cplx(0.3, -0.6)) < 1e-8);

  // symmetric pair: minimizer at the origin, objective below the starting value
  const std::vector<ComplexPoint> pair{pt({0.5}), pt({-0.5})};
  const ZhatResult p = minimize_diastasis(disc, pair, pt({0.2}));
  CHECK(std::abs(p.zhat[0]) < 1e-8);
  CHECK(p.objective <= oracle_objective(disc, pt({0.2}), pair));
  CHECK(p.objective == doctest::Approx(oracle_objective(disc, pt({0.0}), pair)).epsilon(1e-12));

  ZhatOptions one;
  one.max_iterations = 1;
  one.accept_tol = 1e-12;
  const ZhatResult s = minimize_diastasis(disc, pair, pt({0.6}), one);
  CHECK_FALSE(s.converged);
  CHECK(s.stop_reason == "iterations");
  CHECK(s.objective < oracle_objective(disc, pt({0.6}), pair));
  const SampleBatch b = rejection_sample(disc, pt({0.1}), 200, 3);
  CHECK_THROWS_AS(estimate_zhat(disc, b, pt({0.6}), one), NonConvergence);
}

TEST_CASE("estimator on a large sample and rotation equivariance") {
  const auto disc = DomainModel::disc();
  const SampleBatch b = rejection_sample(disc, pt({0.3}), 10000, 4);
  const ComplexPoint zhat = estimate_zhat(disc, b);
  CHECK(std::abs(zhat[0] - cplx(0.3)) < 0.05);

  const cplx rot = std::polar(1.0, 0.7);
  SampleBatch turned = b;
  for (auto& p : turned.points) p *= rot;
  const ComplexPoint zt = estimate_zhat(disc, turned);
  CHECK(std::abs(zt[0] - rot * zhat[0]) < 1e-7);

  const auto ball = DomainModel::ball(2);
  const SampleBatch bb = rejection_sample(ball, pt({0.2, cplx(0, -0.1)}), 10000, 5);
  const ComplexPoint zb = estimate_zhat(ball, bb);
  CHECK((zb - pt({0.2, cplx(0, -0.1)})).norm() < 0.05);
  CHECK(diastasis_objective_grad(ball, zb, bb).grad_norm() < 1e-4);
}

TEST_CASE("initial point stays inside") {
  const auto disc = DomainModel::disc();
  const std::vector<ComplexPoint> xs{pt({0.999}), pt({0.9999})};
  const ComplexPoint z = batch_mean_initial_point(disc, xs);
  CHECK(disc.contains(z));
  CHECK(std::abs(batch_mean_initial_point(disc, {pt({0.2}), pt({0.4})})[0] - cplx(0.3)) < 1e-15);
}

TEST_CASE("consistency: error halves when m quadruples") {
  const ConsistencyReport r = consistency_experiment(DomainModel::disc(), pt({0.0}), {200, 800}, 200, 11);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.strictly_decreasing);
  CHECK(r.failure_rate < 0.01);
  const double ratio = r.rows[1].mean_error / r.rows[0].mean_error;
  CHECK(ratio > 0.4);
  CHECK(ratio < 0.6);
  // E|Y| for a circular normal with variance 1/g = 1/2 is sqrt(pi/8)
  CHECK(r.rows[1].mean_error * std::sqrt(800.0) == doctest::Approx(std::sqrt(pi / 8.0)).epsilon(0.1));
}

TEST_CASE("central limit theorem") {
  const CltReport d = clt_experiment(DomainModel::disc(), pt({0.0}), 200, 1000, 12);
  CHECK(d.covariance_ok());
  CHECK(d.normality_ok());
  CHECK(d.relation_ok());
  CHECK(d.failure_rate_ok());
  CHECK(d.gamma_star(0, 0).real() == doctest::Approx(0.5));
  CHECK(d.scaled_errors.size() == static_cast<std::size_t>(d.successes));
  CHECK(d.ks_p_values.size() == 2);

  const CltReport b = clt_experiment(DomainModel::ball(2), pt({0.0, 0.0}), 200, 1000, 13);
  CHECK(b.covariance_ok());
  CHECK(b.normality_ok());
  CHECK(b.failure_rate_ok());
  CHECK((b.gamma_star - Eigen::MatrixXcd::Identity(2, 2) / 3.0).norm() < 1e-14);
  CHECK(b.ks_p_values.size() == 4);
}

TEST_CASE("complex normal sampling and density") {
  ComplexNormalSpec spec;
  spec.mean = pt({cplx(1, -1), 0.5});
  spec.covariance.resize(2, 2);
  spec.covariance << 2.0, cplx(0, 0.5), cplx(0, -0.5), 1.0;
  const long long n = 200000;
  const auto xs = complex_normal_sample(spec, n, 1);
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(2, 2), rel = Eigen::MatrixXcd::Zero(2, 2);
  ComplexPoint mean = ComplexPoint::Zero(2);
  for (const auto& x : xs) mean += x / double(n);
  for (const auto& x : xs) {
    const ComplexPoint y = x - spec.mean;
    cov += y * y.adjoint() / double(n);
    rel += y * y.transpose() / double(n);
  }
  CHECK((mean - spec.mean).norm() < 0.02);
  CHECK((cov - spec.covariance).norm() < 0.03);
  CHECK(rel.norm() < 0.03);

  const double det = 2.0 - 0.25;
  CHECK(complex_normal_density(spec, spec.mean) == doctest::Approx(1.0 / (pi * pi * det)));
  ComplexNormalSpec one{pt({0.0}), Eigen::MatrixXcd::Constant(1, 1, 2.0), {}};
  CHECK(complex_normal_density(one, pt({1.0})) == doctest::Approx(std::exp(-0.5) / (2.0 * pi)));

  ComplexNormalSpec bad = spec;
  bad.covariance << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(complex_normal_sample(bad, 10, 1), NotPositiveDefinite);
  const auto again = complex_normal_sample(spec, 5, 1);
  CHECK(again[4] == xs[4]);
}

TEST_CASE("points CSV") {
  const auto path = std::filesystem::temp_directory_path() / "bergman_points_test.csv";
  write_points_csv({pt({cplx(0.1, 0.2)}), pt({cplx(-1.0 / 3.0, 0.0)})}, path.string(), "y");
  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "re(y1),im(y1)");
  CHECK(std::stod(row2.substr(0, row2.find(','))) == -1.0 / 3.0);
  std::filesystem::remove(path);
}
