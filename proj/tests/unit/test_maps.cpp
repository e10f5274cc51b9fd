#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bergman/errors.hpp"
#include "bergman/geometry.hpp"
#include "bergman/maps.hpp"
#include "oracles.hpp"

using namespace bergman;
using oracle::cd;
using oracle::pi;

namespace {

ComplexPoint pt(std::initializer_list<cplx> c) { return make_point(c); }

const DomainModel kDisc = DomainModel::disc();

}  // namespace

TEST_CASE("map basics") {
  const ProperMap id = ProperMap::identity(kDisc);
  CHECK(id.sheet_count() == 1);
  CHECK(id.kind() == MapKind::Identity);
  const ProperMap p3 = ProperMap::power(3);
  CHECK(p3.sheet_count() == 3);
  CHECK(std::abs(p3.apply(pt({cplx(0.5, 0.1)}))[0] - std::pow(cd(0.5, 0.1), 3)) < 1e-15);
  CHECK(std::abs(p3.jacobian(pt({0.5}))) == doctest::Approx(0.75));
  const ProperMap cp = ProperMap::coordinate_power({2, 3});
  CHECK(cp.sheet_count() == 6);
  CHECK(cp.source().dimension() == 2);
  CHECK(std::abs(cp.jacobian(pt({0.5, 0.2})) - cd(2 * 0.5 * 3 * 0.04)) < 1e-15);
  CHECK_THROWS(ProperMap::power(0));
}

TEST_CASE("branches invert the map") {
  for (const int k : {2, 3, 5}) {
    const ProperMap f = ProperMap::power(k);
    for (const cd zeta : {cd(0.3, 0.4), cd(-0.7, 0.0), cd(0.0, -0.05), cd(0.8, -0.1)}) {
      const auto bs = f.branches(pt({zeta}));
      REQUIRE(bs.size() == static_cast<std::size_t>(k));
      for (std::size_t j = 0; j < bs.size(); ++j) {
        const cd w = bs[j].point[0];
        CHECK(std::abs(std::pow(w, k) - zeta) < 1e-12);
        CHECK(std::abs(bs[j].jacobian - 1.0 / (double(k) * std::pow(w, k - 1))) < 1e-12 * std::abs(bs[j].jacobian));
        for (std::size_t i = 0; i < j; ++i) CHECK(std::abs(bs[i].point[0] - w) > 1e-3);
      }
      // principal branch first
      CHECK(std::abs(bs[0].point[0] - std::pow(zeta, 1.0 / k)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(ProperMap::power(2).branches(pt({0.0})), CriticalValueError);
  CHECK_THROWS_AS(ProperMap::power(2).branches(pt({1e-9})), CriticalValueError);
  CHECK(ProperMap::power(2).near_critical_value(pt({1e-9})));
  CHECK_FALSE(ProperMap::identity(kDisc).near_critical_value(pt({0.0})));
  CHECK_THROWS_AS(ProperMap::coordinate_power({2, 1}).branches(pt({0.0, 0.5})), CriticalValueError);
  CHECK_NOTHROW(ProperMap::coordinate_power({1, 2}).branches(pt({0.0, 0.5})));
}

TEST_CASE("pushforward density") {
  const ProperMap id = ProperMap::identity(kDisc);
  for (const cd z : {cd(0.0), cd(0.4, -0.2)})
    for (const cd zeta : {cd(0.1, 0.1), cd(-0.6, 0.3)})
      CHECK(pushforward_density(id, kDisc, pt({z}), pt({zeta})) == doctest::Approx(oracle::disc_poisson(z, zeta)).epsilon(1e-12));
  // uniform xi pushed through xi^2 has density 1/(2 pi |zeta|)
  for (const cd zeta : {cd(0.25), cd(0.0, -0.6), cd(0.3, 0.3)})
    CHECK(pushforward_density(ProperMap::power(2), kDisc, pt({0.0}), pt({zeta})) ==
          doctest::Approx(1.0 / (2.0 * pi * std::abs(zeta))).epsilon(1e-12));
  // a probability density on the target
  const cd z = cd(0.3, 0.2);
  const cd mass = oracle::disc_integral(
      [&](cd zeta) { return std::abs(zeta) < 1e-12 ? cd(0) : cd(pushforward_density(ProperMap::power(3), kDisc, pt({z}), pt({zeta}))); });
  CHECK(mass.real() == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("pullback of the Fisher metric") {
  const ProperMap id = ProperMap::identity(kDisc);
  const MCEstimate e = pullback_fisher_mc(id, kDisc, pt({0.5}), 20000, 1);
  CHECK(std::abs(e.value() - oracle::disc_metric(0.5)) < 1e-9);

  const ProperMap p2 = ProperMap::power(2);
  const MCEstimate half = pullback_fisher_mc(p2, kDisc, pt({0.5}), 400000, 2);
  const double oracle_value = oracle::power2_pullback(0.5);
  INFO("quadrature " << oracle_value << ", MC " << half.value() << " +- " << half.error());
  CHECK(half.within(cplx(oracle_value)));
  CHECK(half.value().real() + 3.0 * half.error() < oracle::disc_metric(0.5));
  CHECK(std::abs(half.value().imag()) < 1e-12);

  const MCEstimate zero = pullback_fisher_mc(p2, kDisc, pt({0.0}), 200000, 3);
  CHECK(zero.value().real() <= 2.0 + 3.0 * zero.error());
  CHECK(zero.value().real() >= -3.0 * zero.error());

  // polydisc: one squared coordinate, one identity coordinate
  const auto poly = DomainModel::polydisc(2);
  const MCEstimate mixed = pullback_fisher_mc(ProperMap::coordinate_power({1, 2}), poly, pt({0.3, 0.5}), 200000, 4);
  CHECK(std::abs(mixed.value(0, 0) - oracle::disc_metric(0.3)) < 1e-6);
  CHECK(mixed.within(Eigen::MatrixXcd(Eigen::Vector2cd(oracle::disc_metric(0.3), oracle_value).asDiagonal())));
}

TEST_CASE("K inequality") {
  const ProperMap p2 = ProperMap::power(2);
  const KInequality k = k_inequality_check(p2, kDisc, pt({0.5}), pt({0.09}));
  CHECK(k.lhs <= k.rhs);
  CHECK_FALSE(k.equal);
  // hand value: two preimages +-0.3
  double kv = 0.0, rhs = 0.0;
  cd d{};
  for (const double w : {0.3, -0.3}) {
    const double t = std::norm(oracle::disc_kernel(0.5, w)) / std::norm(2.0 * w);
    const cd b = 2.0 * w / (1.0 - 0.5 * w);
    kv += t;
    d += t * b;
    rhs += t * std::norm(b);
  }
  CHECK(k.lhs == doctest::Approx(std::norm(d) / kv).epsilon(1e-12));
  CHECK(k.rhs == doctest::Approx(rhs).epsilon(1e-12));

  const KInequality e = k_inequality_check(ProperMap::identity(kDisc), kDisc, pt({0.5}), pt({0.09}));
  CHECK(e.equal);
  CHECK(e.lhs == doctest::Approx(e.rhs).epsilon(1e-10));
}

TEST_CASE("Bell transformation rule") {
  CHECK(bell_rule_check(ProperMap::power(2), kDisc, kDisc, pt({0.4}), pt({0.25})) < 1e-12);
  CHECK(bell_rule_check(ProperMap::power(3), kDisc, kDisc, pt({cplx(0.5, 0.1)}), pt({0.2 * std::exp(cd(0, 1))})) < 1e-12);
  const auto poly = DomainModel::polydisc(2);
  CHECK(bell_rule_check(ProperMap::coordinate_power({2, 3}), poly, poly, pt({0.1, cplx(0.2, -0.3)}),
                        pt({cplx(0.0, 0.4), 0.3})) < 1e-12);
  CHECK(bell_rule_check(ProperMap::identity(DomainModel::ball(2)), DomainModel::ball(2), DomainModel::ball(2),
                        pt({0.1, 0.2}), pt({-0.3, 0.1})) < 1e-12);
}

TEST_CASE("comparison bound and the embedding diagram") {
  const ProperMap p2 = ProperMap::power(2);
  for (const cd z : {cd(0.0, 0.1), cd(0.5), cd(-0.2, 0.6)})
    for (const cd zeta : {cd(0.05), cd(0.3, -0.4), cd(-0.7, 0.1)}) {
      const ComparisonBound c = comparison_bound_check(p2, kDisc, pt({z}), pt({zeta}));
      CHECK(c.holds);
      CHECK(c.density >= c.bound * (1 - 1e-12));
      // B2(f z, f z) |f'(z)|^2 / (2 B1(z, z)) * P2(f z, zeta)
      const cd fz = z * z;
      const double hand = oracle::disc_kernel(fz, fz).real() * std::norm(2.0 * z) /
                          (2.0 * oracle::disc_kernel(z, z).real()) * oracle::disc_poisson(fz, zeta);
      CHECK(c.bound == doctest::Approx(hand).epsilon(1e-12));
      CHECK(diagram_defect(p2, pt({z}), pt({zeta})) > 1e-6);
      CHECK(diagram_defect(ProperMap::identity(kDisc), pt({z}), pt({zeta})) < 1e-12);
    }
}
