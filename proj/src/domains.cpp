#include "bergman/domains.hpp"

#include <cmath>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/rng.hpp"

namespace bergman {

bool is_finite(const ComplexPoint& z) {
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (!std::isfinite(z[j].real()) || !std::isfinite(z[j].imag())) return false;
  return true;
}

bool is_hermitian(const HermitianMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_eigenvalue(const HermitianMatrix& m) {
  const HermitianMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

ComplexPoint make_point(std::initializer_list<cplx> coords) {
  ComplexPoint z(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index j = 0;
  for (auto c : coords) z[j++] = c;
  return z;
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Disc: return "disc";
    case DomainKind::Polydisc: return "polydisc";
    case DomainKind::Ball: return "ball";
  }
  return "unknown";
}

DomainModel::DomainModel(DomainKind kind, int n) : kind_(kind), n_(n) {
  if (n < 1) throw DomainError("domain dimension must be positive");
  switch (kind) {
    case DomainKind::Disc:
    case DomainKind::Polydisc:
      volume_ = std::pow(kPi, n);
      log_norm_ = -n * std::log(kPi);
      for (int j = 0; j < n; ++j) factors_.push_back({2.0, {j}});
      break;
    case DomainKind::Ball: {
      volume_ = std::exp(n * std::log(kPi) - std::lgamma(n + 1.0));
      log_norm_ = std::lgamma(n + 1.0) - n * std::log(kPi);
      KernelFactor f{static_cast<double>(n + 1), {}};
      for (int j = 0; j < n; ++j) f.coords.push_back(j);
      factors_.push_back(std::move(f));
      break;
    }
  }
}

DomainModel DomainModel::disc() { return DomainModel(DomainKind::Disc, 1); }
DomainModel DomainModel::polydisc(int n) { return DomainModel(DomainKind::Polydisc, n); }
DomainModel DomainModel::ball(int n) { return DomainModel(DomainKind::Ball, n); }

std::string DomainModel::name() const {
  if (kind_ == DomainKind::Disc) return "disc";
  return to_string(kind_) + "(" + std::to_string(n_) + ")";
}

double DomainModel::factor_radius(const ComplexPoint& z) const {
  double r = 0.0;
  for (const auto& f : factors_) {
    double s = 0.0;
    for (int j : f.coords) s += std::norm(z[j]);
    r = std::max(r, std::sqrt(s));
  }
  return r;
}

bool DomainModel::contains(const ComplexPoint& z) const {
  if (z.size() != n_ || !is_finite(z)) return false;
  return factor_radius(z) < 1.0 - kBoundaryMargin;
}

void DomainModel::require_inside(const ComplexPoint& z, const char* what) const {
  if (z.size() != n_) {
    std::ostringstream os;
    os << what << " has " << z.size() << " coordinates, " << name() << " needs " << n_;
    throw DomainError(os.str());
  }
  if (!contains(z)) {
    std::ostringstream os;
    os << what << " is not inside " << name();
    throw DomainError(os.str());
  }
}

namespace {

cplx factor_inner(const KernelFactor& f, const ComplexPoint& z, const ComplexPoint& w) {
  cplx s{};
  for (int j : f.coords) s += z[j] * std::conj(w[j]);
  return s;
}

}  // namespace

cplx log_bergman_kernel(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w) {
  domain.require_inside(z, "z");
  domain.require_inside(w, "w");
  cplx acc = domain.log_normalization();
  for (const auto& f : domain.factors()) acc -= f.weight * std::log(1.0 - factor_inner(f, z, w));
  return acc;
}

cplx bergman_kernel(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w) {
  domain.require_inside(z, "z");
  domain.require_inside(w, "w");
  cplx acc = std::exp(domain.log_normalization());
  for (const auto& f : domain.factors()) acc *= std::pow(1.0 - factor_inner(f, z, w), -f.weight);
  return acc;
}

namespace {

// log of pi^d alpha! / (d + |alpha|)! for one factor of complex dimension d.
double log_factor_norm(const std::vector<int>& alpha) {
  const int d = static_cast<int>(alpha.size());
  int total = 0;
  double acc = d * std::log(kPi);
  for (int a : alpha) {
    acc += std::lgamma(a + 1.0);
    total += a;
  }
  return acc - std::lgamma(d + total + 1.0);
}

// Visits multi-indices of length d and total degree `degree` in graded
// lexicographic order (first coordinate descending).
template <typename Fn>
void for_each_multi_index(int d, int degree, std::vector<int>& alpha, int pos, Fn&& fn) {
  if (pos == d - 1) {
    alpha[pos] = degree;
    fn(alpha);
    return;
  }
  for (int a = degree; a >= 0; --a) {
    alpha[pos] = a;
    for_each_multi_index(d, degree - a, alpha, pos + 1, fn);
  }
}

cplx factor_series(const KernelFactor& f, const ComplexPoint& z, const ComplexPoint& w,
                   int truncation) {
  const int d = static_cast<int>(f.coords.size());
  std::vector<double> log_abs(d);
  std::vector<double> arg(d);
  std::vector<bool> zero(d);
  for (int j = 0; j < d; ++j) {
    const cplx u = z[f.coords[j]] * std::conj(w[f.coords[j]]);
    zero[j] = (u == cplx{});
    log_abs[j] = zero[j] ? 0.0 : std::log(std::abs(u));
    arg[j] = zero[j] ? 0.0 : std::arg(u);
  }
  cplx sum{};
  std::vector<int> alpha(d);
  for (int degree = 0; degree < truncation; ++degree) {
    for_each_multi_index(d, degree, alpha, 0, [&](const std::vector<int>& a) {
      double la = -log_factor_norm(a);
      double ph = 0.0;
      for (int j = 0; j < d; ++j) {
        if (a[j] == 0) continue;
        if (zero[j]) return;
        la += a[j] * log_abs[j];
        ph += a[j] * arg[j];
      }
      sum += std::polar(std::exp(la), ph);
    });
  }
  return sum;
}

}  // namespace

double monomial_norm_squared(const DomainModel& domain, const std::vector<int>& alpha) {
  if (static_cast<int>(alpha.size()) != domain.dimension())
    throw DomainError("multi-index length does not match domain dimension");
  double log_norm = 0.0;
  for (const auto& f : domain.factors()) {
    std::vector<int> sub;
    for (int j : f.coords) sub.push_back(alpha[j]);
    log_norm += log_factor_norm(sub);
  }
  return std::exp(log_norm);
}

cplx bergman_kernel_series(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w,
                           int truncation) {
  domain.require_inside(z, "z");
  domain.require_inside(w, "w");
  if (truncation < 1) throw DomainError("series truncation must be at least 1");
  cplx acc{1.0, 0.0};
  for (const auto& f : domain.factors()) acc *= factor_series(f, z, w, truncation);
  return acc;
}

int series_truncation_for(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w,
                          double rel_tol) {
  int levels = 1;
  const double per_factor_tol = rel_tol / static_cast<double>(domain.factors().size());
  for (const auto& f : domain.factors()) {
    const int d = static_cast<int>(f.coords.size());
    double rho = 0.0;
    for (int j : f.coords) rho += std::abs(z[j]) * std::abs(w[j]);
    if (rho == 0.0) continue;
    // |degree-k block| <= C(k+d, d) rho^k relative to the constant term, and the
    // full sum is at least 2^-(d+1) times the constant term.
    const double target = per_factor_tol * std::pow(2.0, -(d + 1));
    double term = 1.0;
    int k = 0;
    for (;; ++k) {
      const double ratio = rho * (k + d + 1.0) / (k + 1.0);
      if (ratio < 1.0 && term * ratio / (1.0 - ratio) < target) break;
      term *= ratio;
      if (k > 100000) throw EvaluationError("series truncation bound did not converge");
    }
    levels = std::max(levels, k + 1);
  }
  return levels;
}

double log_poisson_bergman(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& xi) {
  domain.require_inside(z, "z");
  domain.require_inside(xi, "xi");
  double acc = domain.log_normalization();
  for (const auto& f : domain.factors()) {
    double s = 0.0;
    for (int j : f.coords) s += std::norm(z[j]);
    const cplx u = factor_inner(f, z, xi);
    acc += f.weight * (std::log1p(-s) - 2.0 * std::log(std::abs(1.0 - u)));
  }
  return acc;
}

double poisson_bergman(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& xi) {
  return std::exp(log_poisson_bergman(domain, z, xi));
}

int uniform_box_sample_into(const DomainModel& domain, Rng& rng, ComplexPoint& out) {
  const int n = domain.dimension();
  out.resize(n);
  for (int proposals = 1;; ++proposals) {
    for (int j = 0; j < n; ++j) {
      const double x = rng.uniform(-1.0, 1.0);
      const double y = rng.uniform(-1.0, 1.0);
      out[j] = cplx(x, y);
    }
    if (domain.contains(out)) return proposals;
  }
}

ComplexPoint uniform_box_sample(const DomainModel& domain, Rng& rng) {
  ComplexPoint z;
  uniform_box_sample_into(domain, rng, z);
  return z;
}

ComplexPoint uniform_box_sample(const DomainModel& domain, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_box_sample(domain, rng);
}

}  // namespace bergman
