#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bergman/types.hpp"

namespace bergman {

class Rng;

enum class DomainKind { Disc, Polydisc, Ball };

std::string to_string(DomainKind kind);

/// One factor of a product kernel  B(z,w) = C * prod_f (1 - <z,w>_f)^(-weight),
/// where <z,w>_f sums z_j conj(w_j) over the factor's coordinates.
/// Polydiscs have one factor per coordinate (weight 2); the ball has a single
/// factor over all coordinates (weight n+1).
struct KernelFactor {
  double weight = 0.0;
  std::vector<int> coords;
};

/// Unit disc, unit polydisc or unit ball in C^n with its closed-form Bergman
/// kernel structure.
class DomainModel {
 public:
  static DomainModel disc();
  static DomainModel polydisc(int n);
  static DomainModel ball(int n);

  DomainKind kind() const { return kind_; }
  int dimension() const { return n_; }
  std::string name() const;

  /// Lebesgue volume: pi, pi^n, pi^n / n!.
  double volume() const { return volume_; }

  /// Interior test; points within 1e-12 of the boundary are rejected.
  bool contains(const ComplexPoint& z) const;

  /// Throws DomainError naming `what` when contains(z) is false.
  void require_inside(const ComplexPoint& z, const char* what) const;

  /// Largest per-factor radius sqrt(<z,z>_f); the domain is {radius < 1}.
  double factor_radius(const ComplexPoint& z) const;

  const std::vector<KernelFactor>& factors() const { return factors_; }

  /// log of the constant C in the product form of the kernel.
  double log_normalization() const { return log_norm_; }

  friend bool operator==(const DomainModel& a, const DomainModel& b) {
    return a.kind_ == b.kind_ && a.n_ == b.n_;
  }

 private:
  DomainModel(DomainKind kind, int n);

  DomainKind kind_;
  int n_;
  double volume_;
  double log_norm_;
  std::vector<KernelFactor> factors_;
};

inline constexpr double kBoundaryMargin = 1e-12;

/// Closed-form Bergman kernel B(z,w).
cplx bergman_kernel(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w);

/// log B(z,w) on the principal branch of each factor, finite for interior points.
cplx log_bergman_kernel(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& w);

/// Partial sum of sum_j s_j(z) conj(s_j(w)) over the orthonormal monomial
/// basis, keeping `truncation` total-degree levels (degrees 0..truncation-1).
/// For the polydisc each factor is truncated separately and the factor sums
/// are multiplied, so the partial sums factorize exactly.
cplx bergman_kernel_series(const DomainModel& domain, const ComplexPoint& z,
                           const ComplexPoint& w, int truncation);

/// Squared L2 norm of the monomial z^alpha over one kernel factor of the domain.
/// For a factor of dimension d this is pi^d alpha! / (d + |alpha|)!  (ball)
/// and prod_j pi / (alpha_j + 1) for polydisc factors.
double monomial_norm_squared(const DomainModel& domain, const std::vector<int>& alpha);

/// Number of degree levels after which the geometric tail of the series at
/// (z, w) falls below rel_tol relative to the leading term.
int series_truncation_for(const DomainModel& domain, const ComplexPoint& z,
                          const ComplexPoint& w, double rel_tol);

/// Poisson-Bergman (Berezin) density P(z, xi) = |B(z,xi)|^2 / B(z,z).
double poisson_bergman(const DomainModel& domain, const ComplexPoint& z, const ComplexPoint& xi);

/// log P(z, xi), evaluated through log-kernels for accuracy near the boundary.
double log_poisson_bergman(const DomainModel& domain, const ComplexPoint& z,
                           const ComplexPoint& xi);

/// Uniform draw from the domain by rejection from the box [-1,1]^{2n}.
ComplexPoint uniform_box_sample(const DomainModel& domain, std::uint64_t seed);
ComplexPoint uniform_box_sample(const DomainModel& domain, Rng& rng);

/// Same as above but writes into `out` (sized n) without allocating; returns
/// the number of box proposals used.
int uniform_box_sample_into(const DomainModel& domain, Rng& rng, ComplexPoint& out);

}  // namespace bergman
