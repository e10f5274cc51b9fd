#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "bergman/errors.hpp"
#include "bergman/geometry.hpp"
#include "bergman/rng.hpp"
#include "oracles.hpp"

using namespace bergman;
using oracle::cd;

namespace {

ComplexPoint pt(std::initializer_list<cplx> c) { return make_point(c); }

using RealFn = std::function<double(const ComplexPoint&)>;
using ComplexFn = std::function<cplx(const ComplexPoint&)>;

ComplexPoint shifted(ComplexPoint z, Eigen::Index j, cplx step) {
  z[j] += step;
  return z;
}

// d_a dbar_b f by central differences on the real coordinates, h = 1e-4 with
// one Richardson step.
cplx fd_ddbar(const RealFn& f, const ComplexPoint& z, Eigen::Index a, Eigen::Index b) {
  const auto at = [&](double h) {
    const auto second = [&](cplx ua, cplx ub) {
      return (f(shifted(shifted(z, a, h * ua), b, h * ub)) - f(shifted(shifted(z, a, h * ua), b, -h * ub)) -
              f(shifted(shifted(z, a, -h * ua), b, h * ub)) + f(shifted(shifted(z, a, -h * ua), b, -h * ub))) /
             (4.0 * h * h);
    };
    const cd i(0.0, 1.0);
    const double xx = second(1.0, 1.0), yy = second(i, i), xy = second(1.0, i), yx = second(i, 1.0);
    return 0.25 * cplx(xx + yy, xy - yx);
  };
  return (4.0 * at(5e-5) - at(1e-4)) / 3.0;
}

// d_c of a complex function.
cplx fd_d(const ComplexFn& f, const ComplexPoint& z, Eigen::Index c, double h = 1e-5) {
  const cplx dx = (f(shifted(z, c, h)) - f(shifted(z, c, -h))) / (2.0 * h);
  const cplx dy = (f(shifted(z, c, cplx(0, h))) - f(shifted(z, c, cplx(0, -h)))) / (2.0 * h);
  return 0.5 * (dx - cplx(0, 1) * dy);
}

cplx fd_dbar(const ComplexFn& f, const ComplexPoint& z, Eigen::Index c, double h = 1e-5) {
  const cplx dx = (f(shifted(z, c, h)) - f(shifted(z, c, -h))) / (2.0 * h);
  const cplx dy = (f(shifted(z, c, cplx(0, h))) - f(shifted(z, c, cplx(0, -h)))) / (2.0 * h);
  return 0.5 * (dx + cplx(0, 1) * dy);
}

Eigen::MatrixXcd oracle_metric(const DomainModel& d, const ComplexPoint& z) {
  switch (d.kind()) {
    case DomainKind::Disc: return Eigen::MatrixXcd::Constant(1, 1, oracle::disc_metric(z[0]));
    case DomainKind::Polydisc: return oracle::polydisc_metric(z);
    case DomainKind::Ball: return oracle::ball_metric(z);
  }
  return {};
}

double oracle_diastasis(const DomainModel& d, const ComplexPoint& z, const ComplexPoint& w) {
  if (d.kind() == DomainKind::Ball) return oracle::ball_diastasis(z, w);
  double s = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) s += oracle::disc_diastasis(z[j], w[j]);
  return s;
}

double relerr(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).norm() / b.norm(); }

const DomainModel kDomains[] = {DomainModel::disc(), DomainModel::polydisc(2), DomainModel::ball(2),
                                DomainModel::ball(3)};

}  // namespace

TEST_CASE("diastasis examples and symmetry") {
  const auto disc = DomainModel::disc();
  CHECK(std::abs(diastasis(disc, pt({0.3}), pt({0.3}))) < 1e-14);
  CHECK(diastasis(disc, pt({0.5}), pt({0.0})) == doctest::Approx(2.0 * std::log(1.0 / 0.75)).epsilon(1e-14));
  CHECK(diastasis(disc, pt({0.5}), pt({0.0})) == doctest::Approx(0.5754).epsilon(1e-4));
  for (const auto& d : kDomains) {
    Rng rng(21);
    for (int t = 0; t < 100; ++t) {
      const ComplexPoint z = uniform_box_sample(d, rng);
      const ComplexPoint w = uniform_box_sample(d, rng);
      const double a = diastasis(d, z, w);
      CHECK(std::abs(a - diastasis(d, w, z)) <= 1e-13 * std::max(1.0, a));
      CHECK(a > 0.0);
      CHECK(a == doctest::Approx(oracle_diastasis(d, z, w)).epsilon(1e-10));
      CHECK(std::abs(diastasis(d, z, z)) < 1e-13);
    }
  }
  CHECK_THROWS_AS(diastasis(disc, pt({1.5}), pt({0.0})), DomainError);
}

TEST_CASE("exp(-Dia(z, xi)) B(xi, xi) = P(z, xi)") {
  for (const auto& d : kDomains) {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      const ComplexPoint z = uniform_box_sample(d, rng);
      const ComplexPoint xi = uniform_box_sample(d, rng);
      const double lhs = std::exp(-diastasis(d, z, xi)) * bergman_kernel(d, xi, xi).real();
      CHECK(lhs == doctest::Approx(poisson_bergman(d, z, xi)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Bergman metric examples") {
  CHECK(bergman_metric(DomainModel::disc(), pt({0.0}))(0, 0).real() == doctest::Approx(2.0).epsilon(1e-15));
  const HermitianMatrix b = bergman_metric(DomainModel::ball(2), pt({0.0, 0.0}));
  CHECK(relerr(b, 3.0 * Eigen::MatrixXcd::Identity(2, 2)) < 1e-15);
  const HermitianMatrix p = bergman_metric(DomainModel::polydisc(2), pt({0.5, 0.0}));
  CHECK(p(0, 0).real() == doctest::Approx(2.0 / 0.5625).epsilon(1e-14));
  CHECK(p(0, 0).real() == doctest::Approx(3.5556).epsilon(1e-4));
  CHECK(p(1, 1).real() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(p(0, 1)) == 0.0);
}

TEST_CASE("metric against finite differences of log B(z,z) at 50 points with |z| <= 0.9") {
  for (const auto& d : kDomains) {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
      const ComplexPoint z = 0.9 * uniform_box_sample(d, rng);
      const RealFn potential = [&](const ComplexPoint& u) { return std::log(bergman_kernel(d, u, u).real()); };
      Eigen::MatrixXcd fd(d.dimension(), d.dimension());
      for (int a = 0; a < d.dimension(); ++a)
        for (int b = 0; b < d.dimension(); ++b) fd(a, b) = fd_ddbar(potential, z, a, b);
      const HermitianMatrix g = bergman_metric(d, z);
      CHECK(relerr(g, fd) < 1e-6);
      CHECK(relerr(g, oracle_metric(d, z)) < 1e-13);
      CHECK(relerr(bergman_metric_fd(d, z), g) < 1e-6);
      CHECK(is_hermitian(g));
      CHECK(min_eigenvalue(g) > 0.0);
    }
  }
}

TEST_CASE("metric derivatives against differences of the closed-form metric") {
  const auto disc = DomainModel::disc();
  const Tensor3 dg = metric_derivative(disc, pt({0.5}));
  CHECK(dg(0, 0, 0).real() == doctest::Approx(4.0 * 0.5 / std::pow(0.75, 3)).epsilon(1e-13));
  CHECK(dg(0, 0, 0).real() == doctest::Approx(4.7407).epsilon(1e-4));

  for (const auto& d : kDomains) {
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
      const ComplexPoint z = 0.7 * uniform_box_sample(d, rng);
      const Tensor3 an = metric_derivative(d, z);
      const int n = d.dimension();
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const ComplexFn gab = [&](const ComplexPoint& u) { return oracle_metric(d, u)(a, b); };
          for (int c = 0; c < n; ++c) {
            const cplx fd = fd_d(gab, z, c);
            CHECK(std::abs(an(a, b, c) - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
            for (int e = 0; e < n; ++e) {
              const ComplexFn dcg = [&](const ComplexPoint& u) { return fd_d(gab, u, c, 1e-4); };
              const cplx fd2 = fd_dbar(dcg, z, e, 1e-3);
              CHECK(std::abs(metric_second_derivative(d, z, a, b, c, e) - fd2) < 1e-4 * std::max(1.0, std::abs(fd2)));
            }
          }
        }
    }
  }
}

TEST_CASE("log-kernel jet examples") {
  const auto disc = DomainModel::disc();
  const WirtingerJet j = log_kernel_jet(disc, pt({0.0}), pt({0.4}));
  CHECK(std::abs(j.d[0] - cplx(0.8)) < 1e-15);
  for (const auto& d : kDomains) {
    const ComplexPoint zero = ComplexPoint::Zero(d.dimension());
    const WirtingerJet j0 = log_kernel_jet(d, zero, zero);
    CHECK(relerr(j0.ddbar, -bergman_metric(d, zero)) < 1e-14);
  }
}

TEST_CASE("log-kernel jet against the finite-difference oracle at 10 random pairs") {
  for (const auto& d : kDomains) {
    Rng rng(31);
    for (int t = 0; t < 10; ++t) {
      const ComplexPoint z = 0.7 * uniform_box_sample(d, rng);
      const ComplexPoint xi = 0.9 * uniform_box_sample(d, rng);
      const WirtingerJet an = log_kernel_jet(d, z, xi);
      const WirtingerJet fd = log_kernel_jet_fd(d, z, xi);
      const int n = d.dimension();
      CHECK(an.value == doctest::Approx(std::log(poisson_bergman(d, z, xi))).epsilon(1e-12));
      CHECK(relerr(an.d, fd.d) < 1e-6);
      CHECK(relerr(an.dd, fd.dd) < 1e-6);
      CHECK(relerr(an.ddbar, fd.ddbar) < 1e-6);
      double scale = 0.0, diff = 0.0, scale2 = 0.0, diff2 = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) {
            scale = std::max(scale, std::abs(fd.ddd(a, b, c)));
            diff = std::max(diff, std::abs(an.ddd(a, b, c) - fd.ddd(a, b, c)));
            scale2 = std::max(scale2, std::abs(fd.dd_dbar(a, b, c)));
            diff2 = std::max(diff2, std::abs(an.dd_dbar(a, b, c) - fd.dd_dbar(a, b, c)));
          }
      CHECK(diff < 1e-6 * std::max(1.0, scale));
      CHECK(diff2 < 1e-6 * std::max(1.0, scale2));
      // l is real: conjugate blocks agree
      CHECK((an.dbar - an.d.conjugate()).norm() == 0.0);
      CHECK(is_hermitian(an.ddbar, 1e-12));
    }
  }
}

TEST_CASE("normal coordinates: unit metric with vanishing first derivatives at the base") {
  for (const auto& d : kDomains) {
    Rng rng(17);
    for (int t = 0; t < 5; ++t) {
      const ComplexPoint z = 0.6 * uniform_box_sample(d, rng);
      const NormalFrame nf = normal_frame(d, z);
      const int n = d.dimension();
      const ComplexPoint w0 = ComplexPoint::Zero(n);
      CHECK((nf.map(w0) - z).norm() == 0.0);
      CHECK((normal_coordinate_metric(d, nf, w0) - Eigen::MatrixXcd::Identity(n, n)).norm() < 1e-12);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const ComplexFn gab = [&](const ComplexPoint& w) { return normal_coordinate_metric(d, nf, w)(a, b); };
          for (int c = 0; c < n; ++c) CHECK(std::abs(fd_d(gab, w0, c)) < 1e-7);
        }
    }
  }
}

TEST_CASE("holomorphic sectional curvature") {
  const auto disc = DomainModel::disc();
  CHECK(holo_sectional_curvature(disc, pt({0.0}), 0) == doctest::Approx(-1.0).epsilon(1e-12));
  // homogeneity under the automorphism group
  CHECK(holo_sectional_curvature(disc, pt({0.6}), 0) == doctest::Approx(holo_sectional_curvature(disc, pt({0.0}), 0)).epsilon(1e-10));
  CHECK(holo_sectional_curvature_fd(disc, pt({0.6}), 0) ==
        doctest::Approx(holo_sectional_curvature_fd(disc, pt({0.0}), 0)).epsilon(1e-5));

  for (const auto& d : kDomains) {
    Rng rng(19);
    for (int t = 0; t < 3; ++t) {
      const ComplexPoint z = 0.6 * uniform_box_sample(d, rng);
      for (int a = 0; a < d.dimension(); ++a) {
        const double r = holo_sectional_curvature(d, z, a);
        CHECK(r <= 2.0);
        CHECK(r == doctest::Approx(holo_sectional_curvature_fd(d, z, a)).epsilon(1e-5));
        // constant on the ball: -2/(n+1); each polydisc factor is a disc
        const double expected = d.kind() == DomainKind::Ball ? -2.0 / (d.dimension() + 1) : -1.0;
        if (d.kind() != DomainKind::Polydisc) CHECK(r == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
  // the frame direction of a polydisc at a point on a coordinate axis is the axis itself
  CHECK(holo_sectional_curvature(DomainModel::polydisc(2), pt({0.4, 0.0}), 0) == doctest::Approx(-1.0).epsilon(1e-9));
}
