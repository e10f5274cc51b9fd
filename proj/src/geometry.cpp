#include "bergman/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "bergman/errors.hpp"
#include "bergman/finite_difference.hpp"

namespace bergman {

namespace {

bool in_factor(const KernelFactor& f, int j) {
  return std::find(f.coords.begin(), f.coords.end(), j) != f.coords.end();
}

bool all_in_factor(const KernelFactor& f, std::span<const int> idx) {
  for (int j : idx)
    if (!in_factor(f, j)) return false;
  return true;
}

// k-th derivative of F(s) = -log(1 - s):  F^(k) = (k-1)! / (1-s)^k.
template <typename T>
T log_derivative(int k, T s) {
  if (k == 0) return -std::log(T(1.0) - s);
  double fact = 1.0;
  for (int i = 2; i < k; ++i) fact *= i;
  return T(fact) / std::pow(T(1.0) - s, k);
}

// d^A dbar^B F(<z,z>_f): sum over partial matchings between A and B of
// F^(|A|+|B|-|M|) times conj(z) for unmatched holomorphic indices and z for
// unmatched antiholomorphic ones.
struct MatchingSum {
  std::span<const int> holo;
  std::span<const int> anti;
  const ComplexPoint& z;
  double s;
  cplx total{};

  void run(std::size_t i, unsigned used, int matched, cplx prod) {
    if (i == holo.size()) {
      cplx p = prod;
      for (std::size_t j = 0; j < anti.size(); ++j)
        if (!(used & (1u << j))) p *= z[anti[j]];
      const int k = static_cast<int>(holo.size() + anti.size()) - matched;
      total += p * log_derivative<double>(k, s);
      return;
    }
    run(i + 1, used, matched, prod * std::conj(z[holo[i]]));
    for (std::size_t j = 0; j < anti.size(); ++j) {
      if ((used & (1u << j)) || anti[j] != holo[i]) continue;
      run(i + 1, used | (1u << j), matched + 1, prod);
    }
  }
};

double factor_norm2(const KernelFactor& f, const ComplexPoint& z) {
  double s = 0.0;
  for (int j : f.coords) s += std::norm(z[j]);
  return s;
}

cplx factor_inner(const KernelFactor& f, const ComplexPoint& z, const ComplexPoint& w) {
  cplx u{};
  for (int j : f.coords) u += z[j] * std::conj(w[j]);
  return u;
}

}  // namespace

double diastasis(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w) {
  domain.require_inside(z, "z");
  domain.require_inside(w, "w");
  double acc = 0.0;
  for (const auto& f : domain.factors()) {
    const double gap = std::abs(1.0 - factor_inner(f, z, w));
    if (gap == 0.0) throw EvaluationError("kernel B(z,w) vanishes");
    acc += f.weight * (-std::log1p(-factor_norm2(f, z)) - std::log1p(-factor_norm2(f, w)) +
                       2.0 * std::log(gap));
  }
  return std::max(acc, 0.0);
}

cplx potential_derivative(const DomainModel& domain, const ComplexPoint& z,
                          std::span<const int> holo, std::span<const int> anti) {
  domain.require_inside(z, "z");
  if (anti.size() > 16) throw std::invalid_argument("derivative order too large");
  cplx acc{};
  if (holo.empty() && anti.empty()) acc = domain.log_normalization();
  for (const auto& f : domain.factors()) {
    if (!all_in_factor(f, holo) || !all_in_factor(f, anti)) continue;
    MatchingSum m{holo, anti, z, factor_norm2(f, z)};
    m.run(0, 0u, 0, cplx(1.0));
    acc += f.weight * m.total;
  }
  return acc;
}

cplx log_kernel_holo_derivative(const DomainModel& domain, const ComplexPoint& z,
                                const ComplexPoint& xi, std::span<const int> holo) {
  domain.require_inside(z, "z");
  domain.require_inside(xi, "xi");
  cplx acc{};
  if (holo.empty()) acc = domain.log_normalization();
  for (const auto& f : domain.factors()) {
    if (!all_in_factor(f, holo)) continue;
    cplx p = log_derivative<cplx>(static_cast<int>(holo.size()), factor_inner(f, z, xi));
    for (int j : holo) p *= std::conj(xi[j]);
    acc += f.weight * p;
  }
  return acc;
}

HermitianMatrix bergman_metric(const DomainModel& domain, const ComplexPoint& z) {
  domain.require_inside(z, "z");
  const int n = domain.dimension();
  HermitianMatrix g = HermitianMatrix::Zero(n, n);
  for (const auto& f : domain.factors()) {
    const double t = 1.0 / (1.0 - factor_norm2(f, z));
    for (int a : f.coords)
      for (int b : f.coords)
        g(a, b) += f.weight * ((a == b ? t : 0.0) + std::conj(z[a]) * z[b] * t * t);
  }
  return g;
}

Tensor3 metric_derivative(const DomainModel& domain, const ComplexPoint& z) {
  const int n = domain.dimension();
  Tensor3 out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const int h[] = {a, c};
        const int bar[] = {b};
        out(a, b, c) = potential_derivative(domain, z, h, bar);
      }
  return out;
}

cplx metric_second_derivative(const DomainModel& domain, const ComplexPoint& z, int a, int b, int c,
                              int d) {
  const int h[] = {a, c};
  const int bar[] = {b, d};
  return potential_derivative(domain, z, h, bar);
}

PotentialJet potential_jet(const DomainModel& domain, const ComplexPoint& z) {
  domain.require_inside(z, "z");
  const int n = domain.dimension();
  PotentialJet jet;
  jet.value = potential_derivative(domain, z, {}, {}).real();
  jet.d.resize(n);
  jet.dd.resize(n, n);
  jet.ddbar = bergman_metric(domain, z);
  jet.ddd = Tensor3(n);
  jet.dd_dbar = Tensor3(n);
  for (int a = 0; a < n; ++a) {
    const int one[] = {a};
    jet.d[a] = potential_derivative(domain, z, one, {});
    for (int b = 0; b < n; ++b) {
      const int two[] = {a, b};
      jet.dd(a, b) = potential_derivative(domain, z, two, {});
      for (int c = 0; c < n; ++c) {
        const int three[] = {a, b, c};
        const int bar[] = {c};
        jet.ddd(a, b, c) = potential_derivative(domain, z, three, {});
        jet.dd_dbar(a, b, c) = potential_derivative(domain, z, two, bar);
      }
    }
  }
  return jet;
}

LogKernelJetEvaluator::LogKernelJetEvaluator(const DomainModel& domain, const ComplexPoint& z)
    : domain_(domain), z_(z), potential_(potential_jet(domain, z)) {}

void LogKernelJetEvaluator::evaluate(const ComplexPoint& xi, WirtingerJet& out) const {
  domain_.require_inside(xi, "xi");
  const int n = domain_.dimension();
  const auto& pj = potential_;

  out.d.setZero(n);
  out.dd.setZero(n, n);
  if (out.ddd.dim() != n) out.ddd = Tensor3(n);
  out.ddd.set_zero();
  if (out.dd_dbar.dim() != n) out.dd_dbar = Tensor3(n);

  // holomorphic derivatives of log B(z, xi); the antiholomorphic part of
  // log |B|^2 is killed by every d_a.
  double log_b = domain_.log_normalization();
  for (const auto& f : domain_.factors()) {
    const cplx u = factor_inner(f, z_, xi);
    const cplx one_minus = 1.0 - u;
    log_b -= f.weight * std::log(std::abs(one_minus));
    const cplx t = 1.0 / one_minus;
    const cplx t2 = t * t;
    const cplx t3 = 2.0 * t2 * t;
    for (int a : f.coords) {
      const cplx xa = std::conj(xi[a]);
      out.d[a] += f.weight * t * xa;
      for (int b : f.coords) {
        const cplx xab = xa * std::conj(xi[b]);
        out.dd(a, b) += f.weight * t2 * xab;
        for (int c : f.coords) out.ddd(a, b, c) += f.weight * t3 * xab * std::conj(xi[c]);
      }
    }
  }
  out.value = 2.0 * log_b - pj.value;
  if (out.value < std::log(1e-300)) throw EvaluationError("Poisson-Bergman density underflows");

  out.d -= pj.d;
  out.dbar = out.d.conjugate();
  out.dd -= pj.dd;
  out.ddbar = -pj.ddbar;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        out.ddd(a, b, c) -= pj.ddd(a, b, c);
        out.dd_dbar(a, b, c) = -pj.dd_dbar(a, b, c);
      }
}

WirtingerJet log_kernel_jet(const DomainModel& domain, const ComplexPoint& z,
                            const ComplexPoint& xi) {
  return LogKernelJetEvaluator(domain, z)(xi);
}

WirtingerJet log_kernel_jet_fd(const DomainModel& domain, const ComplexPoint& z,
                               const ComplexPoint& xi) {
  domain.require_inside(z, "z");
  domain.require_inside(xi, "xi");
  const int n = domain.dimension();
  const ComplexFunction l = [&](const ComplexPoint& p) {
    return cplx(log_poisson_bergman(domain, p, xi));
  };
  WirtingerJet jet;
  jet.value = log_poisson_bergman(domain, z, xi);
  jet.d.resize(n);
  jet.dbar.resize(n);
  jet.dd.resize(n, n);
  jet.ddbar.resize(n, n);
  jet.ddd = Tensor3(n);
  jet.dd_dbar = Tensor3(n);
  for (int a = 0; a < n; ++a) {
    jet.d[a] = wirtinger_fd(l, z, {dz(a)});
    jet.dbar[a] = wirtinger_fd(l, z, {dzbar(a)});
    for (int b = 0; b < n; ++b) {
      jet.dd(a, b) = wirtinger_fd(l, z, {dz(a), dz(b)});
      jet.ddbar(a, b) = wirtinger_fd(l, z, {dz(a), dzbar(b)});
      for (int c = 0; c < n; ++c) {
        jet.ddd(a, b, c) = wirtinger_fd(l, z, {dz(a), dz(b), dz(c)});
        jet.dd_dbar(a, b, c) = wirtinger_fd(l, z, {dz(a), dz(b), dzbar(c)});
      }
    }
  }
  return jet;
}

namespace {

ComplexFunction potential_function(const DomainModel& domain) {
  return [domain](const ComplexPoint& p) {
    return cplx(potential_derivative(domain, p, {}, {}).real());
  };
}

}  // namespace

HermitianMatrix bergman_metric_fd(const DomainModel& domain, const ComplexPoint& z) {
  domain.require_inside(z, "z");
  const int n = domain.dimension();
  const auto phi = potential_function(domain);
  HermitianMatrix g(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) g(a, b) = wirtinger_fd(phi, z, {dz(a), dzbar(b)});
  return g;
}

ComplexPoint NormalFrame::map(const ComplexPoint& w) const {
  const int n = static_cast<int>(base.size());
  ComplexPoint z = base + frame * w;
  for (int mu = 0; mu < n; ++mu)
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) z[mu] += 0.5 * quadratic(mu, a, c) * w[a] * w[c];
  return z;
}

namespace {

// g~ = J^T g conj(J), so A = L^{-H} with g^T = L L^H; then C solves g^T C(., a, c) = -Y(., a, c),
// Y(nu, a, c) = sum d_rho g_{mu nubar} A(mu, a) A(rho, c).
NormalFrame build_frame(const ComplexPoint& z, const HermitianMatrix& g, const Tensor3& dg) {
  const int n = static_cast<int>(z.size());
  const HermitianMatrix h = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> eig(h, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw ConditioningError("metric is singular or too ill-conditioned for a normal frame");
  Eigen::LLT<HermitianMatrix> llt(h.transpose());
  if (llt.info() != Eigen::Success) throw ConditioningError("Cholesky factorization of metric failed");
  const Eigen::MatrixXcd L = llt.matrixL();
  NormalFrame nf;
  nf.base = z;
  nf.frame = L.adjoint().inverse();
  nf.quadratic = Tensor3(n);
  const auto& A = nf.frame;
  const auto solver = h.transpose().partialPivLu();
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
      for (int nu = 0; nu < n; ++nu)
        for (int mu = 0; mu < n; ++mu)
          for (int rho = 0; rho < n; ++rho) y[nu] += dg(mu, nu, rho) * A(mu, a) * A(rho, c);
      const Eigen::VectorXcd col = solver.solve(-y);
      for (int mu = 0; mu < n; ++mu) nf.quadratic(mu, a, c) = col[mu];
    }
  return nf;
}

}  // namespace

NormalFrame normal_frame(const DomainModel& domain, const ComplexPoint& z) {
  domain.require_inside(z, "z");
  return build_frame(z, bergman_metric(domain, z), metric_derivative(domain, z));
}

NormalFrame normal_frame_fd(const DomainModel& domain, const ComplexPoint& z) {
  domain.require_inside(z, "z");
  const int n = domain.dimension();
  const auto phi = potential_function(domain);
  Tensor3 dg(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) dg(a, b, c) = wirtinger_fd(phi, z, {dz(c), dz(a), dzbar(b)});
  return build_frame(z, bergman_metric_fd(domain, z), dg);
}

HermitianMatrix normal_coordinate_metric(const DomainModel& domain, const NormalFrame& nf,
                                         const ComplexPoint& w) {
  const int n = static_cast<int>(nf.base.size());
  const ComplexPoint z = nf.map(w);
  Eigen::MatrixXcd J = nf.frame;
  for (int mu = 0; mu < n; ++mu)
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) J(mu, a) += nf.quadratic(mu, a, c) * w[c];
  return J.transpose() * bergman_metric(domain, z) * J.conjugate();
}

double holo_sectional_curvature(const DomainModel& domain, const ComplexPoint& z, int direction) {
  const int n = domain.dimension();
  if (direction < 0 || direction >= n) throw std::invalid_argument("direction index out of range");
  const NormalFrame nf = normal_frame(domain, z);
  const HermitianMatrix g = bergman_metric(domain, z);
  const Tensor3 dg = metric_derivative(domain, z);
  const auto& A = nf.frame;
  const auto& C = nf.quadratic;
  const int al = direction;

  // d_a dbar_a of g~_{a abar}(w) = J^T g(z(w)) conj(J) at w = 0, J = A + C w.
  cplx t1{}, t2{}, t3{}, t4{};
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      t4 += C(mu, al, al) * g(mu, nu) * std::conj(C(nu, al, al));
      for (int r = 0; r < n; ++r) {
        t1 += C(mu, al, al) * std::conj(dg(nu, mu, r) * A(r, al) * A(nu, al));
        t3 += A(mu, al) * dg(mu, nu, r) * A(r, al) * std::conj(C(nu, al, al));
        for (int s = 0; s < n; ++s)
          t2 += A(mu, al) * metric_second_derivative(domain, z, mu, nu, r, s) * A(r, al) *
                std::conj(A(s, al) * A(nu, al));
      }
    }
  return -(t1 + t2 + t3 + t4).real();
}

double holo_sectional_curvature_fd(const DomainModel& domain, const ComplexPoint& z,
                                   int direction) {
  const int n = domain.dimension();
  if (direction < 0 || direction >= n) throw std::invalid_argument("direction index out of range");
  const NormalFrame nf = normal_frame_fd(domain, z);
  const ComplexFunction pulled = [&](const ComplexPoint& w) {
    return cplx(potential_derivative(domain, nf.map(w), {}, {}).real());
  };
  const ComplexPoint origin = ComplexPoint::Zero(n);
  const cplx d4 = wirtinger_fd(pulled, origin,
                               {dz(direction), dzbar(direction), dz(direction), dzbar(direction)});
  return -d4.real();
}

}  // namespace bergman
