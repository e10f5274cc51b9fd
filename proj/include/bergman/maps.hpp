#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bergman/domains.hpp"
#include "bergman/sampling.hpp"

namespace bergman {

enum class MapKind { Identity, Power, CoordinatePower };

std::string to_string(MapKind kind);

/// One local inverse f_k^{-1} evaluated at zeta, with the complex Jacobian
/// determinant of f_k^{-1} there.
struct Branch {
  ComplexPoint point;
  cplx jacobian;
};

/// Critical values closer than this are excluded.
inline constexpr double kCriticalValueRadius = 1e-8;

/// Proper holomorphic self-maps of the v1 domains: the identity, z -> z^k on
/// the disc, and (z_j) -> (z_j^{k_j}) on a polydisc.
class ProperMap {
 public:
  static ProperMap identity(const DomainModel& domain);
  static ProperMap power(int k);
  static ProperMap coordinate_power(std::vector<int> exponents);

  MapKind kind() const { return kind_; }
  const DomainModel& source() const { return source_; }
  const DomainModel& target() const { return target_; }
  /// Number of sheets m.
  int sheet_count() const { return sheets_; }
  const std::vector<int>& exponents() const { return exponents_; }
  std::string name() const;
  /// Human-readable critical-value set.
  std::string critical_values() const;

  ComplexPoint apply(const ComplexPoint& z) const;
  /// det of the complex Jacobian of f at z.
  cplx jacobian(const ComplexPoint& z) const;

  bool near_critical_value(const ComplexPoint& zeta) const;

  /// All local inverses at zeta, ordered by branch label (principal argument
  /// in (-pi, pi], branch j adds 2 pi j / k). Throws CriticalValueError near
  /// critical values. `out` is resized to sheet_count().
  void branches(const ComplexPoint& zeta, std::vector<Branch>& out) const;
  std::vector<Branch> branches(const ComplexPoint& zeta) const;

 private:
  ProperMap(MapKind kind, DomainModel source, DomainModel target, std::vector<int> exponents);

  MapKind kind_;
  DomainModel source_;
  DomainModel target_;
  std::vector<int> exponents_;
  int sheets_;
};

/// K(z, zeta) = sum_k |B_1(z, w_k)|^2 |J_R f_k^{-1}(zeta)| and its Wirtinger
/// derivatives in z; |J_R| = |J_C|^2.
struct PushforwardKernel {
  double value = 0.0;
  Eigen::VectorXcd d;      // d_a K
  Eigen::MatrixXcd ddbar;  // d_a dbar_b K
};

PushforwardKernel pushforward_kernel(const ProperMap& map, const ComplexPoint& z,
                                     const ComplexPoint& zeta);

/// Density of f_*(P_1(z, .) dV) at zeta: K(z, zeta) / B_1(z, z).
double pushforward_density(const ProperMap& map, const DomainModel& domain1, const ComplexPoint& z,
                           const ComplexPoint& zeta);

/// (kappa o Phi_1)^* g_{F_2} at z as a full matrix:
///   g_{a bbar}(z) + E_Q[d_a K dbar_b K / K^2 - d_a dbar_b K / K],
/// with zeta = f(xi), xi ~ P_1(z, .). Draws landing near a critical value are redrawn.
MCEstimate pullback_fisher_mc(const ProperMap& map, const DomainModel& domain1,
                              const ComplexPoint& z, long long n, std::uint64_t seed,
                              int threads = 0);

struct KInequality {
  double lhs = 0.0;  // |d_a K|^2 / K
  double rhs = 0.0;  // d_a dbar_a K
  bool equal = false;
};

/// Pointwise |d_a K|^2 / K <= d_a dbar_a K; equal when the relative gap is below 1e-10.
KInequality k_inequality_check(const ProperMap& map, const DomainModel& domain1,
                               const ComplexPoint& z, const ComplexPoint& zeta, int direction = 0);

/// |LHS - RHS| / |LHS| for J f(z) B_2(f(z), zeta) = sum_k B_1(z, w_k) conj(J f_k^{-1}(zeta)).
double bell_rule_check(const ProperMap& map, const DomainModel& domain1, const DomainModel& domain2,
                       const ComplexPoint& z, const ComplexPoint& zeta);

struct ComparisonBound {
  double density = 0.0;  // (kappa o Phi_1)(z) at zeta
  double bound = 0.0;    // B_2(f z, f z) |J f(z)|^2 / (m B_1(z,z)) * P_2(f(z), zeta)
  bool holds = false;
};

ComparisonBound comparison_bound_check(const ProperMap& map, const DomainModel& domain1,
                                       const ComplexPoint& z, const ComplexPoint& zeta);

/// |(kappa o Phi_1)(z)(zeta) - P_2(f(z), zeta)| relative to P_2: zero when the
/// square of embeddings commutes at (z, zeta).
double diagram_defect(const ProperMap& map, const ComplexPoint& z, const ComplexPoint& zeta);

}  // namespace bergman
