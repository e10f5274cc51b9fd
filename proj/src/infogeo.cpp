#include "bergman/infogeo.hpp"

#include <cmath>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/finite_difference.hpp"
#include "bergman/rng.hpp"

namespace bergman {

MCEstimate fisher_metric_mc(const DomainModel& domain, const ComplexPoint& z, long long n,
                            std::uint64_t seed, int threads) {
  const int dim = domain.dimension();
  const LogKernelJetEvaluator eval(domain, z);
  return mc_expectation(
      domain, z, dim, dim,
      [&] {
        return MatrixIntegrand([&, jet = WirtingerJet{}](const ComplexPoint& xi,
                                                         Eigen::MatrixXcd& out) mutable {
          eval.evaluate(xi, jet);
          out.noalias() = jet.d * jet.dbar.transpose();
        });
      },
      n, seed, threads);
}

namespace {

struct CatalogEntry {
  ExpectationIdentity id;
  const char* name;
  int arity;
  int forms;
};

constexpr CatalogEntry kCatalog[] = {
    {ExpectationIdentity::ScoreHermitian, "score_hermitian", 2, 2},
    {ExpectationIdentity::ScoreHolomorphicSquare, "score_holomorphic_square", 2, 2},
    {ExpectationIdentity::HolomorphicHessianMean, "holomorphic_hessian_mean", 2, 2},
    {ExpectationIdentity::ScoreCube, "score_cube", 3, 2},
    {ExpectationIdentity::HessianScore, "hessian_score", 3, 2},
    {ExpectationIdentity::MixedHessianScore, "mixed_hessian_score", 3, 2},
    {ExpectationIdentity::ScoreMixedCube, "score_mixed_cube", 3, 2},
    {ExpectationIdentity::HessianConjScore, "hessian_conj_score", 3, 1},
    {ExpectationIdentity::ThirdHolomorphic, "third_holomorphic", 3, 2},
    {ExpectationIdentity::ThirdMixed, "third_mixed", 3, 1},
    {ExpectationIdentity::FourthMixedScore, "fourth_mixed_score", 4, 2},
    {ExpectationIdentity::MixedHessianScorePair, "mixed_hessian_score_pair", 4, 1},
    {ExpectationIdentity::MixedHessianProduct, "mixed_hessian_product", 4, 1},
    {ExpectationIdentity::ScoreQuartic, "score_quartic", 4, 1},
    {ExpectationIdentity::MetricSecondDerivative, "metric_second_derivative", 4, 1},
    {ExpectationIdentity::QuarticDecomposition, "quartic_decomposition", 1, 1},
};

const CatalogEntry& entry(ExpectationIdentity id) {
  for (const auto& e : kCatalog)
    if (e.id == id) return e;
  throw UnknownIdentity("identity id outside the catalog");
}

}  // namespace

const std::vector<ExpectationIdentity>& all_identities() {
  static const std::vector<ExpectationIdentity> ids = [] {
    std::vector<ExpectationIdentity> v;
    for (const auto& e : kCatalog) v.push_back(e.id);
    return v;
  }();
  return ids;
}

std::string to_string(ExpectationIdentity id) { return entry(id).name; }

ExpectationIdentity identity_from_string(const std::string& name) {
  for (const auto& e : kCatalog)
    if (name == e.name) return e.id;
  throw UnknownIdentity("unknown identity '" + name + "'");
}

int identity_arity(ExpectationIdentity id) { return entry(id).arity; }
int identity_form_count(ExpectationIdentity id) { return entry(id).forms; }

cplx identity_integrand(ExpectationIdentity id, int form, const WirtingerJet& j,
                        const IndexTuple& idx) {
  const int a = idx[0], b = idx[1], c = idx[2], d = idx[3];
  const bool alt = form == 1;
  switch (id) {
    case ExpectationIdentity::ScoreHermitian:
      return alt ? -j.ddbar(a, b) : j.d[a] * j.dbar[b];
    case ExpectationIdentity::ScoreHolomorphicSquare:
      return alt ? j.dbar[a] * j.dbar[b] : j.d[a] * j.d[b];
    case ExpectationIdentity::HolomorphicHessianMean:
      return alt ? j.dbar_dbar(a, b) : j.dd(a, b);
    case ExpectationIdentity::ScoreCube:
      return alt ? j.dbar[a] * j.dbar[b] * j.dbar[c] : j.d[a] * j.d[b] * j.d[c];
    case ExpectationIdentity::HessianScore:
      return alt ? j.dbar_dbar(a, b) * j.dbar[c] : j.dd(a, b) * j.d[c];
    case ExpectationIdentity::MixedHessianScore:
      return j.ddbar(a, b) * (alt ? j.dbar[c] : j.d[c]);
    case ExpectationIdentity::ScoreMixedCube:
      return alt ? j.dbar[a] * j.dbar[b] * j.d[c] : j.d[a] * j.d[b] * j.dbar[c];
    case ExpectationIdentity::HessianConjScore:
      return j.dd(a, b) * j.dbar[c];
    case ExpectationIdentity::ThirdHolomorphic:
      return alt ? j.dbar3(a, b, c) : j.ddd(a, b, c);
    case ExpectationIdentity::ThirdMixed:
      return j.dd_dbar(a, b, c);
    case ExpectationIdentity::FourthMixedScore:
      return alt ? j.d_dbar_dbar(a, b, c) * j.d[d] : j.dd_dbar(a, b, c) * j.dbar[d];
    case ExpectationIdentity::MixedHessianScorePair:
      return j.ddbar(a, b) * j.d[c] * j.dbar[d];
    case ExpectationIdentity::MixedHessianProduct:
      return j.ddbar(a, b) * j.ddbar(c, d);
    case ExpectationIdentity::ScoreQuartic:
      return j.d[a] * j.d[b] * (j.dbar_dbar(c, d) + j.dbar[c] * j.dbar[d]);
    case ExpectationIdentity::MetricSecondDerivative:
      return j.dd(a, b) * (j.dbar_dbar(c, d) + j.dbar[c] * j.dbar[d]);
    case ExpectationIdentity::QuarticDecomposition: {
      const cplx s = j.d[a];
      const cplx h = j.dd(a, a);
      const cplx ddp_over_p = h + s * s;  // d_a d_a P / P
      return std::norm(s) * std::norm(s) - std::norm(ddp_over_p) + std::norm(h) +
             2.0 * s * s * std::conj(h);
    }
  }
  throw UnknownIdentity("identity id outside the catalog");
}

namespace {

void cross_check(cplx analytic, cplx oracle, const char* what) {
  const double scale = std::max(1.0, std::abs(analytic));
  if (std::abs(analytic - oracle) > 1e-6 * scale) {
    std::ostringstream os;
    os << what << ": analytic " << analytic << " vs finite-difference " << oracle;
    throw OracleMismatch(os.str());
  }
}

cplx checked_metric(const HermitianMatrix& g, const HermitianMatrix& g_fd, int a, int b) {
  cross_check(g(a, b), g_fd(a, b), "metric");
  return g(a, b);
}

ComplexFunction metric_entry(const DomainModel& domain, int a, int b) {
  return [domain, a, b](const ComplexPoint& p) { return bergman_metric(domain, p)(a, b); };
}

// d_c g_{a bbar}
cplx checked_metric_derivative(const DomainModel& domain, const ComplexPoint& z, int a, int b,
                               int c) {
  const int h[] = {a, c};
  const int bar[] = {b};
  const cplx analytic = potential_derivative(domain, z, h, bar);
  cross_check(analytic, wirtinger_fd(metric_entry(domain, a, b), z, {dz(c)}), "metric derivative");
  return analytic;
}

// d_c dbar_d g_{a bbar}
cplx checked_metric_second_derivative(const DomainModel& domain, const ComplexPoint& z, int a,
                                      int b, int c, int d) {
  const cplx analytic = metric_second_derivative(domain, z, a, b, c, d);
  cross_check(analytic, wirtinger_fd(metric_entry(domain, a, b), z, {dz(c), dzbar(d)}),
              "metric second derivative");
  return analytic;
}

void check_indices(const DomainModel& domain, ExpectationIdentity id, const IndexTuple& idx) {
  const int arity = identity_arity(id);
  for (int k = 0; k < arity; ++k)
    if (idx[k] < 0 || idx[k] >= domain.dimension()) {
      std::ostringstream os;
      os << "index " << idx[k] << " of " << to_string(id) << " is outside 0.."
         << domain.dimension() - 1;
      throw std::invalid_argument(os.str());
    }
}

}  // namespace

cplx identity_target(const DomainModel& domain, const ComplexPoint& z, ExpectationIdentity id,
                     const IndexTuple& idx) {
  check_indices(domain, id, idx);
  const int a = idx[0], b = idx[1], c = idx[2], d = idx[3];
  const HermitianMatrix g = bergman_metric(domain, z);
  const HermitianMatrix g_fd = bergman_metric_fd(domain, z);
  auto metric = [&](int p, int q) { return checked_metric(g, g_fd, p, q); };
  switch (id) {
    case ExpectationIdentity::ScoreHermitian: return metric(a, b);
    case ExpectationIdentity::HessianConjScore: return checked_metric_derivative(domain, z, a, c, b);
    case ExpectationIdentity::ThirdMixed: return -checked_metric_derivative(domain, z, a, c, b);
    case ExpectationIdentity::MixedHessianScorePair: return -metric(a, b) * metric(c, d);
    case ExpectationIdentity::MixedHessianProduct: return metric(a, b) * metric(c, d);
    case ExpectationIdentity::ScoreQuartic:
      return metric(a, d) * metric(b, c) + metric(b, d) * metric(a, c);
    case ExpectationIdentity::MetricSecondDerivative:
      return checked_metric_second_derivative(domain, z, a, c, b, d);
    default: return cplx{};
  }
}

bool IdentityReport::recompute_pass() const {
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Constant(estimate.mean.rows(), estimate.mean.cols(), target);
  return estimate.within(t, 3.0);
}

namespace {

IdentityReport single_attempt(const DomainModel& domain, const ComplexPoint& z,
                              ExpectationIdentity id, const IndexTuple& idx, cplx target,
                              long long n, std::uint64_t seed, int threads) {
  const int forms = identity_form_count(id);
  const LogKernelJetEvaluator eval(domain, z);
  IdentityReport r;
  r.id = id;
  r.label = to_string(id);
  r.indices = idx;
  r.arity = identity_arity(id);
  r.target = target;
  r.seed = seed;
  r.estimate = mc_expectation(
      domain, z, forms, 1,
      [&] {
        return MatrixIntegrand([&, jet = WirtingerJet{}](const ComplexPoint& xi,
                                                         Eigen::MatrixXcd& out) mutable {
          eval.evaluate(xi, jet);
          for (int f = 0; f < forms; ++f) out(f, 0) = identity_integrand(id, f, jet, idx);
        });
      },
      n, seed, threads);
  r.pass = r.recompute_pass();
  return r;
}

IdentityReport with_retry(const DomainModel& domain, const ComplexPoint& z, ExpectationIdentity id,
                          const IndexTuple& idx, cplx target, long long n, std::uint64_t seed,
                          std::uint64_t retry_seed, int threads) {
  IdentityReport r = single_attempt(domain, z, id, idx, target, n, seed, threads);
  r.attempts = 1;
  if (!r.pass) {
    r = single_attempt(domain, z, id, idx, target, n, retry_seed, threads);
    r.attempts = 2;
  }
  return r;
}

std::vector<IndexTuple> index_tuples(int dim, int arity) {
  std::vector<IndexTuple> out;
  int total = 1;
  for (int k = 0; k < arity; ++k) total *= dim;
  for (int t = 0; t < total; ++t) {
    IndexTuple idx{0, 0, 0, 0};
    int rest = t;
    for (int k = arity - 1; k >= 0; --k) {
      idx[k] = rest % dim;
      rest /= dim;
    }
    out.push_back(idx);
  }
  return out;
}

}  // namespace

IdentityReport lemma_identity_mc(const DomainModel& domain, const ComplexPoint& z,
                                 ExpectationIdentity id, const IndexTuple& indices, long long n,
                                 std::uint64_t seed, int threads) {
  const cplx target = identity_target(domain, z, id, indices);
  return with_retry(domain, z, id, indices, target, n, seed, derive_seed(seed, {1}), threads);
}

IdentityReport lemma_identity_mc(const DomainModel& domain, const ComplexPoint& z,
                                 const std::string& id_name, const IndexTuple& indices,
                                 long long n, std::uint64_t seed, int threads) {
  return lemma_identity_mc(domain, z, identity_from_string(id_name), indices, n, seed, threads);
}

std::vector<IdentityReport> identity_suite_mc(const DomainModel& domain, const ComplexPoint& z,
                                              long long n, std::uint64_t seed, int threads) {
  struct Slot {
    ExpectationIdentity id;
    IndexTuple idx;
    int row;
    int forms;
  };
  std::vector<Slot> slots;
  int rows = 0;
  for (auto id : all_identities())
    for (const auto& idx : index_tuples(domain.dimension(), identity_arity(id))) {
      slots.push_back({id, idx, rows, identity_form_count(id)});
      rows += identity_form_count(id);
    }

  const LogKernelJetEvaluator eval(domain, z);
  const MCEstimate shared = mc_expectation(
      domain, z, rows, 1,
      [&] {
        return MatrixIntegrand([&, jet = WirtingerJet{}](const ComplexPoint& xi,
                                                         Eigen::MatrixXcd& out) mutable {
          eval.evaluate(xi, jet);
          for (const auto& s : slots)
            for (int f = 0; f < s.forms; ++f)
              out(s.row + f, 0) = identity_integrand(s.id, f, jet, s.idx);
        });
      },
      n, seed, threads);

  std::vector<IdentityReport> reports;
  reports.reserve(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& s = slots[k];
    IdentityReport r;
    r.id = s.id;
    r.label = to_string(s.id);
    r.indices = s.idx;
    r.arity = identity_arity(s.id);
    r.target = identity_target(domain, z, s.id, s.idx);
    r.seed = seed;
    r.attempts = 1;
    r.estimate.mean = shared.mean.block(s.row, 0, s.forms, 1);
    r.estimate.std_error = shared.std_error.block(s.row, 0, s.forms, 1);
    r.estimate.n_samples = shared.n_samples;
    r.pass = r.recompute_pass();
    if (!r.pass) {
      r = single_attempt(domain, z, s.id, s.idx, r.target, n, derive_seed(seed, {2, k}), threads);
      r.attempts = 2;
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

IdentityReport amari_chentsov_mc(const DomainModel& domain, const ComplexPoint& z,
                                 const std::array<bool, 3>& conjugate,
                                 const std::array<int, 3>& indices, long long n,
                                 std::uint64_t seed, int threads) {
  for (int k : indices)
    if (k < 0 || k >= domain.dimension()) throw std::invalid_argument("tensor index out of range");
  const bool pure = conjugate[0] == conjugate[1] && conjugate[1] == conjugate[2];
  IdentityReport r;
  r.id = pure ? ExpectationIdentity::ScoreCube : ExpectationIdentity::ScoreMixedCube;
  r.label = "amari_chentsov[";
  for (int k = 0; k < 3; ++k) r.label += std::string(k ? "," : "") + (conjugate[k] ? "dbar" : "d");
  r.label += "]";
  r.indices = {indices[0], indices[1], indices[2], 0};
  r.arity = 3;
  r.target = 0.0;
  const LogKernelJetEvaluator eval(domain, z);
  auto attempt = [&](std::uint64_t s) {
    r.seed = s;
    r.estimate = mc_expectation(
        domain, z, 1, 1,
        [&] {
          return MatrixIntegrand([&, jet = WirtingerJet{}](const ComplexPoint& xi,
                                                           Eigen::MatrixXcd& out) mutable {
            eval.evaluate(xi, jet);
            cplx p(1.0);
            for (int k = 0; k < 3; ++k)
              p *= conjugate[k] ? jet.dbar[indices[k]] : jet.d[indices[k]];
            out(0, 0) = p;
          });
        },
        n, s, threads);
    r.pass = r.recompute_pass();
  };
  attempt(seed);
  r.attempts = 1;
  if (!r.pass) {
    attempt(derive_seed(seed, {1}));
    r.attempts = 2;
  }
  return r;
}

double chi_alpha(double alpha, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("chi_alpha needs a positive density ratio");
  if (alpha == 1.0) return x * std::log(x);
  if (alpha == -1.0) return -std::log(x);
  return 4.0 / (1.0 - alpha * alpha) * (1.0 - std::pow(x, 0.5 * (1.0 + alpha)));
}

double chi_alpha_slope(double alpha) {
  if (alpha == 1.0) return 1.0;
  return -2.0 / (1.0 - alpha);
}

double chi_alpha_centered(double alpha, double log_x) {
  if (!std::isfinite(log_x)) throw std::invalid_argument("chi_alpha needs a positive density ratio");
  const double xm1 = std::expm1(log_x);
  if (alpha == 1.0) return std::exp(log_x) * log_x - xm1;
  if (alpha == -1.0) return -log_x + xm1;
  // 2/(1-alpha) [(x - 1) - 2/(1+alpha) (x^q - 1)], one shared 1/(1-alpha) so it stays accurate near alpha = 1
  return 2.0 / (1.0 - alpha) * (xm1 - 2.0 / (1.0 + alpha) * std::expm1(0.5 * (1.0 + alpha) * log_x));
}

MCEstimate kl_divergence_mc(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w,
                            long long n, std::uint64_t seed, int threads) {
  domain.require_inside(w, "w");
  return mc_expectation(
      domain, z,
      [&](const ComplexPoint& xi) {
        const double lx = log_poisson_bergman(domain, w, xi) - log_poisson_bergman(domain, z, xi);
        // E[x - 1] = 0 under P(z, .); adding it keeps the integrand nonnegative
        return cplx(-lx + std::expm1(lx));
      },
      n, seed, threads);
}

MCEstimate alpha_divergence_mc(const DomainModel& domain, const ComplexPoint& z,
                               const ComplexPoint& w, double alpha, long long n,
                               std::uint64_t seed, int threads) {
  domain.require_inside(w, "w");
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
  // D^(alpha)(z, w) = D^(-alpha)(w, z); sample on the side with the smaller exponent
  const bool dual = alpha > 0.0;
  const ComplexPoint& p = dual ? w : z;
  const ComplexPoint& q = dual ? z : w;
  const double a = dual ? -alpha : alpha;
  return mc_expectation(
      domain, p,
      [&](const ComplexPoint& xi) {
        const double lx = log_poisson_bergman(domain, q, xi) - log_poisson_bergman(domain, p, xi);
        return cplx(chi_alpha_centered(a, lx));
      },
      n, seed, threads);
}

CurvatureReport curvature_mc(const DomainModel& domain, const ComplexPoint& z, int direction,
                             long long n, std::uint64_t seed, int threads) {
  const int dim = domain.dimension();
  if (direction < 0 || direction >= dim) throw std::invalid_argument("direction index out of range");
  const NormalFrame nf = normal_frame(domain, z);
  const LogKernelJetEvaluator eval(domain, z);
  const int a = direction;
  CurvatureReport r;
  r.direction = direction;
  r.analytic = holo_sectional_curvature(domain, z, direction);
  // in w-coordinates: d_a d_a P / P = d_a d_a l~ + (d_a l~)^2 with
  // d_a l~ = A_{mu a} d_mu l, d_a d_a l~ = A_{mu a} A_{nu a} d_mu d_nu l + C_{mu a a} d_mu l
  r.second_moment = mc_expectation(
      domain, z, 1, 1,
      [&] {
        return MatrixIntegrand([&, jet = WirtingerJet{}](const ComplexPoint& xi,
                                                         Eigen::MatrixXcd& out) mutable {
          eval.evaluate(xi, jet);
          cplx s{}, h{};
          for (int mu = 0; mu < dim; ++mu) {
            s += nf.frame(mu, a) * jet.d[mu];
            h += nf.quadratic(mu, a, a) * jet.d[mu];
            for (int nu = 0; nu < dim; ++nu) h += nf.frame(mu, a) * nf.frame(nu, a) * jet.dd(mu, nu);
          }
          out(0, 0) = std::norm(h + s * s);
        });
      },
      n, seed, threads);
  r.mc_curvature = 2.0 - r.second_moment.value().real();
  r.mc_stderr = r.second_moment.error();
  r.matches = std::abs(r.analytic - r.mc_curvature) <= 3.0 * r.mc_stderr + roundoff_floor(r.analytic);
  r.below_bound = r.mc_curvature <= 2.0 + 3.0 * r.mc_stderr;
  return r;
}

}  // namespace bergman
