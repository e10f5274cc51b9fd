#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "bergman/errors.hpp"
#include "bergman/infogeo.hpp"
#include "oracles.hpp"

using namespace bergman;
using oracle::cd;

namespace {

ComplexPoint pt(std::initializer_list<cplx> c) { return make_point(c); }

cd mobius(cd a, cd z) { return (z - a) / (1.0 - std::conj(a) * z); }

bool jointly_close(const MCEstimate& a, const MCEstimate& b, double k = 3.0) {
  return std::abs(a.value() - b.value()) <= k * std::hypot(a.error(), b.error());
}

}  // namespace

TEST_CASE("Fisher information matches the metric") {
  const MCEstimate d = fisher_metric_mc(DomainModel::disc(), pt({0.5}), 200000, 1);
  CHECK(d.within(cplx(oracle::disc_metric(0.5))));
  CHECK(d.value().real() == doctest::Approx(3.5556).epsilon(0.01));

  const ComplexPoint z = pt({cplx(0.2, -0.1), 0.3});
  const MCEstimate b = fisher_metric_mc(DomainModel::ball(2), z, 200000, 2);
  CHECK(b.within(oracle::ball_metric(z)));
  const MCEstimate p = fisher_metric_mc(DomainModel::polydisc(2), z, 200000, 3);
  CHECK(p.within(oracle::polydisc_metric(z)));
  // Hermitian up to noise, exactly Hermitian diagonal
  CHECK(std::abs(b.value(0, 0).imag()) < 1e-12);
}

TEST_CASE("identity catalog") {
  CHECK(all_identities().size() == 16);
  std::set<std::string> names;
  for (const auto id : all_identities()) {
    const std::string name = to_string(id);
    names.insert(name);
    CHECK(identity_from_string(name) == id);
    CHECK(identity_arity(id) >= 1);
    CHECK(identity_arity(id) <= 4);
    CHECK(identity_form_count(id) >= 1);
    CHECK(identity_form_count(id) <= 2);
  }
  CHECK(names.size() == 16);
  CHECK(identity_arity(ExpectationIdentity::ScoreHermitian) == 2);
  CHECK(identity_arity(ExpectationIdentity::ScoreCube) == 3);
  CHECK(identity_arity(ExpectationIdentity::ScoreQuartic) == 4);
  CHECK(identity_arity(ExpectationIdentity::QuarticDecomposition) == 1);
  CHECK(identity_form_count(ExpectationIdentity::MixedHessianScore) == 2);
  CHECK_THROWS_AS(identity_from_string("no_such_identity"), UnknownIdentity);
  CHECK_THROWS_AS(lemma_identity_mc(DomainModel::disc(), pt({0.1}), "no_such_identity", {0, 0, 0, 0}, 1000, 1),
                  UnknownIdentity);
}

TEST_CASE("identity targets on the disc") {
  const auto disc = DomainModel::disc();
  const ComplexPoint z = pt({0.5});
  const IndexTuple i0{0, 0, 0, 0};
  const double g = oracle::disc_metric(0.5);
  const double dg = 4.0 * 0.5 / std::pow(0.75, 3);
  CHECK(identity_target(disc, z, ExpectationIdentity::ScoreHermitian, i0).real() == doctest::Approx(g));
  CHECK(identity_target(disc, z, ExpectationIdentity::HessianConjScore, i0).real() == doctest::Approx(dg));
  CHECK(identity_target(disc, z, ExpectationIdentity::HessianConjScore, i0).real() == doctest::Approx(4.7407).epsilon(1e-4));
  CHECK(identity_target(disc, z, ExpectationIdentity::ThirdMixed, i0).real() == doctest::Approx(-dg));
  CHECK(identity_target(disc, z, ExpectationIdentity::MixedHessianProduct, i0).real() == doctest::Approx(12.642).epsilon(1e-4));
  CHECK(identity_target(disc, z, ExpectationIdentity::MixedHessianScorePair, i0).real() == doctest::Approx(-g * g));
  CHECK(identity_target(disc, z, ExpectationIdentity::ScoreQuartic, i0).real() == doctest::Approx(2 * g * g));
  // d dbar g = 4/(1-r^2)^3 + 12 r^2/(1-r^2)^4
  CHECK(identity_target(disc, z, ExpectationIdentity::MetricSecondDerivative, i0).real() ==
        doctest::Approx(4.0 / std::pow(0.75, 3) + 3.0 / std::pow(0.75, 4)));
  for (const auto id : {ExpectationIdentity::ScoreHolomorphicSquare, ExpectationIdentity::HolomorphicHessianMean,
                        ExpectationIdentity::ScoreCube, ExpectationIdentity::HessianScore,
                        ExpectationIdentity::ThirdHolomorphic, ExpectationIdentity::FourthMixedScore})
    CHECK(identity_target(disc, z, id, i0) == cplx(0.0));
}

TEST_CASE("single identities by Monte Carlo") {
  const auto disc = DomainModel::disc();
  const IdentityReport r = lemma_identity_mc(disc, pt({0.5}), ExpectationIdentity::ScoreHermitian, {0, 0, 0, 0},
                                             200000, 4);
  CHECK(r.pass);
  CHECK(r.recompute_pass());
  CHECK(r.estimate.mean.rows() == identity_form_count(ExpectationIdentity::ScoreHermitian));
  IdentityReport tampered = r;
  tampered.target = r.target + 1.0;
  CHECK_FALSE(tampered.recompute_pass());

  const auto ball = DomainModel::ball(2);
  const IdentityReport h = lemma_identity_mc(ball, pt({0.2, cplx(0, 0.3)}), "hessian_conj_score", {0, 1, 1, 0},
                                             200000, 5);
  CHECK(h.pass);
  CHECK(h.arity == 3);
}

TEST_CASE("whole catalog on one point") {
  const auto reports = identity_suite_mc(DomainModel::polydisc(2), pt({0.3, cplx(-0.1, 0.2)}), 50000, 6);
  CHECK(reports.size() > 16);
  for (const auto& r : reports) {
    INFO(r.label);
    CHECK(r.pass);
    CHECK(r.recompute_pass() == r.pass);
  }
}

TEST_CASE("Amari-Chentsov tensor vanishes") {
  const auto disc = DomainModel::disc();
  for (const auto& conj : {std::array<bool, 3>{false, false, false}, std::array<bool, 3>{false, false, true},
                           std::array<bool, 3>{true, false, true}}) {
    const IdentityReport r = amari_chentsov_mc(disc, pt({0.4}), conj, {0, 0, 0}, 100000, 7);
    CHECK(r.target == cplx(0.0));
    CHECK(r.pass);
  }
  const IdentityReport b = amari_chentsov_mc(DomainModel::ball(2), pt({0.1, 0.3}), {false, true, false}, {0, 1, 1},
                                             100000, 8);
  CHECK(b.pass);
}

TEST_CASE("alpha function") {
  for (const double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    CHECK(chi_alpha(a, 1.0) == doctest::Approx(0.0));
    CHECK(chi_alpha_centered(a, 0.0) == 0.0);
    for (const double lx : {-3.0, -0.2, 0.1, 2.0}) {
      CHECK(chi_alpha_centered(a, lx) > 0.0);
      const double x = std::exp(lx);
      CHECK(chi_alpha_centered(a, lx) == doctest::Approx(chi_alpha(a, x) - chi_alpha_slope(a) * (x - 1.0)).epsilon(1e-12));
    }
    // slope by differences
    const double h = 1e-6;
    CHECK(chi_alpha_slope(a) == doctest::Approx((chi_alpha(a, 1 + h) - chi_alpha(a, 1 - h)) / (2 * h)).epsilon(1e-6));
  }
  CHECK(chi_alpha(-1.0, 2.0) == doctest::Approx(-std::log(2.0)));
  CHECK(chi_alpha(1.0, 2.0) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(chi_alpha(0.0, 4.0) == doctest::Approx(4.0 * (1.0 - 2.0)));
  // the centered form is continuous at alpha = +-1
  CHECK(chi_alpha_centered(1.0 - 1e-7, 0.7) == doctest::Approx(chi_alpha_centered(1.0, 0.7)).epsilon(1e-6));
  CHECK(chi_alpha_centered(-1.0 + 1e-7, 0.7) == doctest::Approx(chi_alpha_centered(-1.0, 0.7)).epsilon(1e-6));
  CHECK_THROWS_AS(chi_alpha(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("KL divergence equals the diastasis") {
  const auto disc = DomainModel::disc();
  const MCEstimate same = kl_divergence_mc(disc, pt({0.3}), pt({0.3}), 10000, 1);
  CHECK(std::abs(same.value()) == 0.0);
  const MCEstimate a = kl_divergence_mc(disc, pt({0.5}), pt({0.0}), 200000, 2);
  CHECK(a.within(cplx(oracle::disc_diastasis(0.5, 0.0))));
  CHECK(a.value().real() == doctest::Approx(0.5754).epsilon(0.01));
  const MCEstimate b = kl_divergence_mc(disc, pt({0.0}), pt({0.5}), 200000, 3);
  CHECK(b.within(cplx(0.5754), 3.0 + 0.0001 / b.error()));
  CHECK(jointly_close(a, b));

  const ComplexPoint z = pt({0.1, cplx(0.2, 0.2)}), w = pt({-0.3, 0.1});
  const MCEstimate c = kl_divergence_mc(DomainModel::ball(2), z, w, 200000, 4);
  CHECK(c.within(cplx(oracle::ball_diastasis(z, w))));
}

TEST_CASE("alpha divergences") {
  const auto disc = DomainModel::disc();
  const MCEstimate kl = kl_divergence_mc(disc, pt({0.4}), pt({0.1}), 50000, 9);
  const MCEstimate m1 = alpha_divergence_mc(disc, pt({0.4}), pt({0.1}), -1.0, 50000, 9);
  CHECK(m1.value().real() == doctest::Approx(kl.value().real()).epsilon(1e-12));
  for (const double a : {-1.0, 0.0, 0.5, 1.0}) CHECK(alpha_divergence_mc(disc, pt({0.2}), pt({0.2}), a, 5000, 1).value() == cplx(0.0));

  // invariance under a disc automorphism
  const cd c = 0.3;
  const MCEstimate before = alpha_divergence_mc(disc, pt({0.4}), pt({0.1}), 0.5, 200000, 10);
  const MCEstimate after = alpha_divergence_mc(disc, pt({mobius(c, 0.4)}), pt({mobius(c, 0.1)}), 0.5, 200000, 11);
  CHECK(jointly_close(before, after));
  CHECK(before.value().real() > 0.0);
}

TEST_CASE("curvature from the second moment in normal coordinates") {
  const CurvatureReport d = curvature_mc(DomainModel::disc(), pt({0.0}), 0, 200000, 1);
  CHECK(d.analytic == doctest::Approx(-1.0));
  CHECK(d.matches);
  CHECK(d.below_bound);
  CHECK(d.mc_curvature == doctest::Approx(2.0 - d.second_moment.value().real()));
  const CurvatureReport s = curvature_mc(DomainModel::disc(), pt({0.6}), 0, 200000, 2);
  CHECK(s.matches);
  const CurvatureReport b = curvature_mc(DomainModel::ball(2), pt({0.2, 0.1}), 1, 200000, 3);
  CHECK(b.analytic == doctest::Approx(-2.0 / 3.0).epsilon(1e-8));
  CHECK(b.matches);
}
