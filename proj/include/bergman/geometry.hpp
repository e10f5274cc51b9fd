#pragma once

#include <span>
#include <vector>

#include "bergman/domains.hpp"
#include "bergman/types.hpp"

namespace bergman {

/// Calabi diastasis log( B(z,z) B(w,w) / |B(z,w)|^2 ); symmetric, zero on the
/// diagonal and positive off it.
double diastasis(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w);

/// Mixed Wirtinger derivative  d^holo dbar^anti  of the Kahler potential
/// log B(z,z), from the factorized closed form.
cplx potential_derivative(const DomainModel& domain, const ComplexPoint& z,
                          std::span<const int> holo, std::span<const int> anti);

/// Holomorphic derivative d^holo of z -> log B(z, xi) at fixed xi.
cplx log_kernel_holo_derivative(const DomainModel& domain, const ComplexPoint& z,
                                const ComplexPoint& xi, std::span<const int> holo);

/// g_{a bbar}(z) = d_a dbar_b log B(z,z).
HermitianMatrix bergman_metric(const DomainModel& domain, const ComplexPoint& z);

/// d(a, b, c) = d_c g_{a bbar}.
Tensor3 metric_derivative(const DomainModel& domain, const ComplexPoint& z);

/// d_c dbar_d g_{a bbar}.
cplx metric_second_derivative(const DomainModel& domain, const ComplexPoint& z, int a, int b,
                              int c, int d);

/// Derivatives of log B(z,z) at a fixed base point, up to the mixed third
/// order blocks used by the log-likelihood jet.
struct PotentialJet {
  double value = 0.0;
  Eigen::VectorXcd d;       // d_a
  Eigen::MatrixXcd dd;      // d_a d_b
  Eigen::MatrixXcd ddbar;   // d_a dbar_b  (the metric)
  Tensor3 ddd;              // d_a d_b d_c
  Tensor3 dd_dbar;          // d_a d_b dbar_c
};

PotentialJet potential_jet(const DomainModel& domain, const ComplexPoint& z);

/// Jet of a real function in the z variables. Conjugate-holomorphic blocks
/// follow from reality, e.g. dbar_a dbar_b l = conj(dd(a,b)).
struct WirtingerJet {
  double value = 0.0;
  Eigen::VectorXcd d;
  Eigen::VectorXcd dbar;
  Eigen::MatrixXcd dd;
  Eigen::MatrixXcd ddbar;   // d_a dbar_b
  Tensor3 ddd;              // d_a d_b d_c
  Tensor3 dd_dbar;          // d_a d_b dbar_c

  cplx dbar_dbar(int a, int b) const { return std::conj(dd(a, b)); }
  cplx dbar3(int a, int b, int c) const { return std::conj(ddd(a, b, c)); }
  /// d_a dbar_b dbar_c
  cplx d_dbar_dbar(int a, int b, int c) const { return std::conj(dd_dbar(b, c, a)); }
};

/// Evaluates the jet of l(z, xi) = log P(z, xi) in z for many xi at one base
/// point; the xi-independent potential part is computed once.
class LogKernelJetEvaluator {
 public:
  LogKernelJetEvaluator(const DomainModel& domain, const ComplexPoint& z);

  void evaluate(const ComplexPoint& xi, WirtingerJet& out) const;
  WirtingerJet operator()(const ComplexPoint& xi) const {
    WirtingerJet jet;
    evaluate(xi, jet);
    return jet;
  }

  const PotentialJet& potential() const { return potential_; }
  const ComplexPoint& base() const { return z_; }

 private:
  DomainModel domain_;
  ComplexPoint z_;
  PotentialJet potential_;
};

/// Analytic jet of l(z, xi) = log |B(z,xi)|^2 - log B(z,z).
WirtingerJet log_kernel_jet(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& xi);

/// Finite-difference jet of the same function, built only from log P evaluations.
WirtingerJet log_kernel_jet_fd(const DomainModel& domain, const ComplexPoint& z,
                               const ComplexPoint& xi);

/// Metric from finite differences of log B(z,z).
HermitianMatrix bergman_metric_fd(const DomainModel& domain, const ComplexPoint& z);

/// Holomorphic normal coordinates at a base point p:
///   z(w) = p + A w + 1/2 C(w, w),
/// with A^H g(p) A = I and C chosen so that the first derivatives of the
/// metric vanish at w = 0.
struct NormalFrame {
  ComplexPoint base;
  Eigen::MatrixXcd frame;   // A
  Tensor3 quadratic;        // C(mu, a, c), symmetric in (a, c)

  ComplexPoint map(const ComplexPoint& w) const;
};

NormalFrame normal_frame(const DomainModel& domain, const ComplexPoint& z);

/// R_{a abar a abar} = -d_a dbar_a g_{a abar} in the normal coordinates of
/// normal_frame(domain, z); since g = I there this is also the holomorphic
/// sectional curvature along the frame direction.
double holo_sectional_curvature(const DomainModel& domain, const ComplexPoint& z, int direction);

/// Same frame built from finite-difference metric data.
NormalFrame normal_frame_fd(const DomainModel& domain, const ComplexPoint& z);

/// Curvature from a fourth-order finite difference of log B(z(w), z(w)) in the
/// explicitly constructed normal coordinates.
double holo_sectional_curvature_fd(const DomainModel& domain, const ComplexPoint& z, int direction);

/// Metric of the normal coordinates, g~_{a bbar}(w), evaluated from the analytic metric.
HermitianMatrix normal_coordinate_metric(const DomainModel& domain, const NormalFrame& frame,
                                         const ComplexPoint& w);

}  // namespace bergman
