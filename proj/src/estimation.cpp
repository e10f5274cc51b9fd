#include "bergman/estimation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/geometry.hpp"
#include "bergman/parallel.hpp"
#include "bergman/rng.hpp"
#include "bergman/stats.hpp"

namespace bergman {

Eigen::VectorXd ObjectiveValue::real_grad() const {
  const auto n = wirtinger_grad.size();
  Eigen::VectorXd g(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    g[2 * j] = 2.0 * wirtinger_grad[j].real();
    g[2 * j + 1] = -2.0 * wirtinger_grad[j].imag();
  }
  return g;
}

namespace {

// sum_i Dia(z, Z_i) and, if grad != nullptr,
//   d_z L = m d_z log B(z,z) - sum_i d_z log B(z, Z_i).
double objective(const DomainModel& domain, const ComplexPoint& z,
                 const std::vector<ComplexPoint>& samples, Eigen::VectorXcd* grad) {
  const auto m = static_cast<double>(samples.size());
  double value = 0.0;
  if (grad) grad->setZero(domain.dimension());
  for (const auto& f : domain.factors()) {
    double sz = 0.0;
    for (int j : f.coords) sz += std::norm(z[j]);
    const double log_z = std::log1p(-sz);
    value -= m * f.weight * log_z;
    if (grad)
      for (int j : f.coords) (*grad)[j] += m * f.weight * std::conj(z[j]) / (1.0 - sz);
    for (const auto& w : samples) {
      double sw = 0.0;
      cplx u{};
      for (int j : f.coords) {
        sw += std::norm(w[j]);
        u += z[j] * std::conj(w[j]);
      }
      const cplx gap = 1.0 - u;
      value += f.weight * (2.0 * std::log(std::abs(gap)) - std::log1p(-sw));
      if (grad)
        for (int j : f.coords) (*grad)[j] -= f.weight * std::conj(w[j]) / gap;
    }
  }
  return value;
}

// L(z + delta) - L(z) accumulated from per-term differences, so the result
// keeps its relative accuracy when the step barely moves the objective.
double objective_change(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& delta,
                        const std::vector<ComplexPoint>& samples) {
  const auto m = static_cast<double>(samples.size());
  double change = 0.0;
  for (const auto& f : domain.factors()) {
    double sz = 0.0;
    cplx zd{};
    double dd = 0.0;
    for (int j : f.coords) {
      sz += std::norm(z[j]);
      zd += std::conj(z[j]) * delta[j];
      dd += std::norm(delta[j]);
    }
    // 1 - |z + delta|^2 = (1 - |z|^2)(1 - (2 Re(conj z . delta) + |delta|^2) / (1 - |z|^2))
    change -= m * f.weight * std::log1p(-(2.0 * zd.real() + dd) / (1.0 - sz));
    for (const auto& w : samples) {
      cplx zw{}, dw{};
      for (int j : f.coords) {
        zw += z[j] * std::conj(w[j]);
        dw += delta[j] * std::conj(w[j]);
      }
      const cplx u = dw / (1.0 - zw);
      change += f.weight * std::log1p(-2.0 * u.real() + std::norm(u));
    }
  }
  return change;
}

void require_samples(const DomainModel& domain, const std::vector<ComplexPoint>& samples) {
  if (samples.empty()) throw std::invalid_argument("sample batch is empty");
  for (const auto& w : samples) domain.require_inside(w, "sample");
}

}  // namespace

ObjectiveValue diastasis_objective_grad(const DomainModel& domain, const ComplexPoint& z,
                                        const std::vector<ComplexPoint>& samples) {
  domain.require_inside(z, "z");
  require_samples(domain, samples);
  ObjectiveValue ov;
  ov.value = objective(domain, z, samples, &ov.wirtinger_grad);
  return ov;
}

ObjectiveValue diastasis_objective_grad(const DomainModel& domain, const ComplexPoint& z,
                                        const SampleBatch& batch) {
  return diastasis_objective_grad(domain, z, batch.points);
}

ComplexPoint batch_mean_initial_point(const DomainModel& domain,
                                      const std::vector<ComplexPoint>& samples) {
  if (samples.empty()) throw std::invalid_argument("sample batch is empty");
  ComplexPoint mean = ComplexPoint::Zero(domain.dimension());
  for (const auto& w : samples) mean += w;
  mean /= static_cast<double>(samples.size());
  const double r = domain.factor_radius(mean);
  if (r >= 1.0 - 1e-6) mean *= (1.0 - 1e-3) / r;
  return mean;
}

ZhatResult minimize_diastasis(const DomainModel& domain, const std::vector<ComplexPoint>& samples,
                              const ComplexPoint& init, const ZhatOptions& opts) {
  domain.require_inside(init, "initial point");
  require_samples(domain, samples);
  ZhatResult res;
  res.stop_reason = "iterations";
  ComplexPoint z = init;
  Eigen::VectorXcd grad;
  double value = objective(domain, z, samples, &grad);
  double gnorm = 2.0 * grad.norm();
  double t = 1.0 / static_cast<double>(samples.size());
  ComplexPoint cand(z.size());
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (gnorm < opts.grad_tol) {
      res.stop_reason = "gradient";
      break;
    }
    // steepest descent in real coordinates is -2 conj(d_z L) in complex form
    const Eigen::VectorXcd dir = -2.0 * grad.conjugate();
    t *= 2.0;
    bool accepted = false;
    while (t * dir.norm() > 1e-15 * (1.0 + z.norm())) {
      cand = z + t * dir;
      if (domain.contains(cand)) {
        const double dv = objective_change(domain, z, cand - z, samples);
        if (dv <= -opts.armijo * t * gnorm * gnorm) {
          accepted = true;
          break;
        }
      }
      t *= opts.shrink;
    }
    if (!accepted) {
      res.stop_reason = "stalled";
      break;
    }
    z = cand;
    value = objective(domain, z, samples, &grad);
    gnorm = 2.0 * grad.norm();
  }
  res.zhat = z;
  res.iterations = it;
  res.objective = value;
  res.grad_norm = gnorm;
  res.converged = gnorm < opts.accept_tol;
  return res;
}

ComplexPoint estimate_zhat(const DomainModel& domain, const SampleBatch& batch,
                           const ComplexPoint& init, const ZhatOptions& opts) {
  const ZhatResult r = minimize_diastasis(domain, batch.points, init, opts);
  if (!r.converged) {
    std::ostringstream os;
    os << "diastasis minimization stopped (" << r.stop_reason << ") after " << r.iterations
       << " iterations with gradient norm " << r.grad_norm;
    throw NonConvergence(os.str());
  }
  return r.zhat;
}

ComplexPoint estimate_zhat(const DomainModel& domain, const SampleBatch& batch,
                           const ZhatOptions& opts) {
  return estimate_zhat(domain, batch, batch_mean_initial_point(domain, batch.points), opts);
}

namespace {

struct Replication {
  ComplexPoint zhat;
  int iterations = 0;
  bool ok = false;
};

Replication replicate(const DomainModel& domain, const ComplexPoint& z0, long long m,
                      std::uint64_t seed) {
  const SampleBatch batch = rejection_sample(domain, z0, m, seed, 1);
  const ZhatResult r =
      minimize_diastasis(domain, batch.points, batch_mean_initial_point(domain, batch.points));
  return {r.zhat, r.iterations, r.converged};
}

}  // namespace

ConsistencyReport consistency_experiment(const DomainModel& domain, const ComplexPoint& z0,
                                         const std::vector<long long>& m_schedule, int r_rep,
                                         std::uint64_t seed, int threads) {
  domain.require_inside(z0, "z0");
  if (m_schedule.empty()) throw std::invalid_argument("m schedule is empty");
  for (std::size_t i = 1; i < m_schedule.size(); ++i)
    if (m_schedule[i] <= m_schedule[i - 1]) throw std::invalid_argument("m schedule must increase");
  if (r_rep < 2) throw std::invalid_argument("consistency needs at least two replications");

  ConsistencyReport rep;
  rep.z0 = z0;
  rep.r_rep = r_rep;
  rep.seed = seed;
  int total_fail = 0;
  for (std::size_t i = 0; i < m_schedule.size(); ++i) {
    std::vector<Replication> runs(static_cast<std::size_t>(r_rep));
    parallel_for(runs.size(), threads, [&](std::size_t r) {
      runs[r] = replicate(domain, z0, m_schedule[i], derive_seed(seed, {i, r}));
    });
    ConsistencyRow row;
    row.m = m_schedule[i];
    row.replications = r_rep;
    double sum = 0.0, sum2 = 0.0, iters = 0.0;
    int ok = 0;
    for (const auto& run : runs) {
      iters += run.iterations;
      if (!run.ok) {
        ++row.failures;
        continue;
      }
      const double e = (run.zhat - z0).norm();
      sum += e;
      sum2 += e * e;
      ++ok;
    }
    row.mean_iterations = iters / r_rep;
    if (ok > 1) {
      row.mean_error = sum / ok;
      const double var = std::max(0.0, (sum2 - ok * row.mean_error * row.mean_error) / (ok - 1));
      row.std_error = std::sqrt(var / ok);
    }
    total_fail += row.failures;
    rep.rows.push_back(row);
  }
  rep.strictly_decreasing = true;
  rep.nonincreasing_within_slack = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    if (!(b.mean_error < a.mean_error)) rep.strictly_decreasing = false;
    const double slack = 2.0 * std::hypot(a.std_error, b.std_error);
    if (b.mean_error > a.mean_error + slack) rep.nonincreasing_within_slack = false;
  }
  rep.failure_rate = static_cast<double>(total_fail) / (static_cast<double>(r_rep) * rep.rows.size());
  return rep;
}

bool CltReport::normality_ok(double level) const {
  for (double p : ks_p_values)
    if (!(p > level)) return false;
  return !ks_p_values.empty();
}

bool CltReport::failure_rate_ok() const {
  return r_rep > 0 && static_cast<double>(failures) <= 0.01 * r_rep;
}

CltReport clt_experiment(const DomainModel& domain, const ComplexPoint& z0, long long m, int r_rep,
                         std::uint64_t seed, int threads) {
  domain.require_inside(z0, "z0");
  if (m < 1) throw std::invalid_argument("batch size m must be positive");
  if (r_rep < 2) throw std::invalid_argument("CLT needs at least two replications");
  const int n = domain.dimension();

  std::vector<Replication> runs(static_cast<std::size_t>(r_rep));
  parallel_for(runs.size(), threads, [&](std::size_t r) {
    runs[r] = replicate(domain, z0, m, derive_seed(seed, {r}));
  });

  CltReport rep;
  rep.z0 = z0;
  rep.m = m;
  rep.r_rep = r_rep;
  rep.seed = seed;
  rep.gamma_hat = Eigen::MatrixXcd::Zero(n, n);
  rep.relation_hat = Eigen::MatrixXcd::Zero(n, n);
  double iters = 0.0;
  const double root_m = std::sqrt(static_cast<double>(m));
  for (const auto& run : runs) {
    iters += run.iterations;
    if (!run.ok) {
      ++rep.failures;
      continue;
    }
    const ComplexPoint y = root_m * (run.zhat - z0);
    rep.gamma_hat += y * y.adjoint();
    rep.relation_hat += y * y.transpose();
    rep.scaled_errors.push_back(y);
  }
  rep.successes = static_cast<int>(rep.scaled_errors.size());
  rep.mean_iterations = iters / r_rep;
  if (rep.successes < 2) throw NonConvergence("fewer than two CLT replications converged");
  rep.gamma_hat /= static_cast<double>(rep.successes);
  rep.relation_hat /= static_cast<double>(rep.successes);

  const HermitianMatrix g = bergman_metric(domain, z0);
  rep.gamma_star = g.inverse();
  rep.gamma_star = 0.5 * (rep.gamma_star + rep.gamma_star.adjoint()).eval();
  const double star_norm = rep.gamma_star.norm();
  rep.covariance_rel_error = (rep.gamma_hat - rep.gamma_star).norm() / star_norm;
  rep.relation_norm = rep.relation_hat.norm();
  rep.relation_bound = 3.0 * star_norm / std::sqrt(static_cast<double>(rep.successes));

  // whiten by L^{-1}, Gamma* = L L^H; each real and imaginary part is then N(0, 1/2)
  const Eigen::LLT<HermitianMatrix> llt(rep.gamma_star);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("target covariance is not positive definite");
  const Eigen::MatrixXcd L = llt.matrixL();
  std::vector<std::vector<double>> marg(2 * static_cast<std::size_t>(n));
  for (const auto& y : rep.scaled_errors) {
    const Eigen::VectorXcd x = L.triangularView<Eigen::Lower>().solve(y);
    for (int j = 0; j < n; ++j) {
      marg[2 * j].push_back(x[j].real());
      marg[2 * j + 1].push_back(x[j].imag());
    }
  }
  const auto cdf = [](double v) { return normal_cdf(v, 0.0, 0.5); };
  for (int j = 0; j < n; ++j)
    for (int part = 0; part < 2; ++part) {
      const KsResult ks = ks_test(marg[2 * j + part], cdf);
      rep.marginal_names.push_back((part ? "im(x" : "re(x") + std::to_string(j + 1) + ")");
      rep.ks_statistics.push_back(ks.statistic);
      rep.ks_p_values.push_back(ks.p_value);
    }
  return rep;
}

namespace {

Eigen::MatrixXcd cholesky_factor(const HermitianMatrix& gamma) {
  if (gamma.rows() != gamma.cols() || !is_hermitian(gamma, 1e-12))
    throw NotPositiveDefinite("covariance must be a Hermitian matrix");
  const Eigen::LLT<HermitianMatrix> llt(gamma);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance has no Cholesky factor");
  const Eigen::MatrixXcd L = llt.matrixL();
  for (Eigen::Index j = 0; j < L.rows(); ++j)
    if (!(L(j, j).real() > 0.0)) throw NotPositiveDefinite("covariance is singular");
  return L;
}

void check_spec(const ComplexNormalSpec& spec) {
  if (spec.mean.size() != spec.covariance.rows())
    throw std::invalid_argument("mean and covariance dimensions differ");
  if (spec.relation.size() != 0 && spec.relation.cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("only the circular case (zero relation matrix) is supported");
}

}  // namespace

std::vector<ComplexPoint> complex_normal_sample(const ComplexNormalSpec& spec, long long count,
                                                std::uint64_t seed) {
  check_spec(spec);
  const Eigen::MatrixXcd L = cholesky_factor(spec.covariance);
  const auto n = spec.mean.size();
  Rng rng(seed);
  const double s = std::sqrt(0.5);
  std::vector<ComplexPoint> out;
  out.reserve(static_cast<std::size_t>(std::max<long long>(count, 0)));
  Eigen::VectorXcd w(n);
  for (long long k = 0; k < count; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      w[j] = cplx(s * re, s * im);
    }
    out.emplace_back(spec.mean + L * w);
  }
  return out;
}

double complex_normal_density(const ComplexNormalSpec& spec, const ComplexPoint& z) {
  check_spec(spec);
  const Eigen::MatrixXcd L = cholesky_factor(spec.covariance);
  const Eigen::VectorXcd x = L.triangularView<Eigen::Lower>().solve(z - spec.mean);
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < L.rows(); ++j) log_det += 2.0 * std::log(L(j, j).real());
  const auto n = static_cast<double>(z.size());
  return std::exp(-x.squaredNorm() - n * std::log(kPi) - log_det);
}

void write_points_csv(const std::vector<ComplexPoint>& points, const std::string& path,
                      const std::string& prefix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto n = points.empty() ? 0 : points.front().size();
  for (Eigen::Index j = 0; j < n; ++j)
    out << (j ? "," : "") << "re(" << prefix << j + 1 << "),im(" << prefix << j + 1 << ")";
  out << "\n";
  char buf[64];
  for (const auto& p : points) {
    for (Eigen::Index j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", j ? "," : "", p[j].real(), p[j].imag());
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace bergman
