#include "bergman/maps.hpp"

#include <cmath>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/geometry.hpp"

namespace bergman {

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::Identity: return "identity";
    case MapKind::Power: return "power";
    case MapKind::CoordinatePower: return "coordinate_power";
  }
  return "unknown";
}

ProperMap::ProperMap(MapKind kind, DomainModel source, DomainModel target, std::vector<int> exponents)
    : kind_(kind),
      source_(std::move(source)),
      target_(std::move(target)),
      exponents_(std::move(exponents)),
      sheets_(1) {
  for (int k : exponents_) {
    if (k < 1) throw std::invalid_argument("map exponents must be at least 1");
    sheets_ *= k;
  }
}

ProperMap ProperMap::identity(const DomainModel& domain) {
  return ProperMap(MapKind::Identity, domain, domain, std::vector<int>(domain.dimension(), 1));
}

ProperMap ProperMap::power(int k) {
  return ProperMap(MapKind::Power, DomainModel::disc(), DomainModel::disc(), {k});
}

ProperMap ProperMap::coordinate_power(std::vector<int> exponents) {
  if (exponents.empty()) throw std::invalid_argument("coordinate_power needs at least one exponent");
  const auto n = static_cast<int>(exponents.size());
  return ProperMap(MapKind::CoordinatePower, DomainModel::polydisc(n), DomainModel::polydisc(n),
                   std::move(exponents));
}

std::string ProperMap::name() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == MapKind::Power) os << "(" << exponents_[0] << ")";
  if (kind_ == MapKind::CoordinatePower) {
    os << "(";
    for (std::size_t j = 0; j < exponents_.size(); ++j) os << (j ? "," : "") << exponents_[j];
    os << ")";
  }
  return os.str();
}

std::string ProperMap::critical_values() const {
  std::ostringstream os;
  bool any = false;
  for (std::size_t j = 0; j < exponents_.size(); ++j)
    if (exponents_[j] > 1) {
      os << (any ? " or " : "") << "zeta_" << j + 1 << " = 0";
      any = true;
    }
  return any ? os.str() : "none";
}

ComplexPoint ProperMap::apply(const ComplexPoint& z) const {
  source_.require_inside(z, "map argument");
  ComplexPoint out(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) out[j] = std::pow(z[j], exponents_[j]);
  return out;
}

cplx ProperMap::jacobian(const ComplexPoint& z) const {
  cplx det(1.0);
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const int k = exponents_[j];
    if (k > 1) det *= static_cast<double>(k) * std::pow(z[j], k - 1);
  }
  return det;
}

bool ProperMap::near_critical_value(const ComplexPoint& zeta) const {
  for (Eigen::Index j = 0; j < zeta.size(); ++j)
    if (exponents_[j] > 1 && std::abs(zeta[j]) < kCriticalValueRadius) return true;
  return false;
}

void ProperMap::branches(const ComplexPoint& zeta, std::vector<Branch>& out) const {
  target_.require_inside(zeta, "zeta");
  if (near_critical_value(zeta)) {
    std::ostringstream os;
    os << "zeta is within " << kCriticalValueRadius << " of a critical value of " << name();
    throw CriticalValueError(os.str());
  }
  const auto n = static_cast<int>(zeta.size());
  out.resize(static_cast<std::size_t>(sheets_));
  for (int s = 0; s < sheets_; ++s) {
    Branch& b = out[static_cast<std::size_t>(s)];
    b.point.resize(n);
    b.jacobian = 1.0;
    int rest = s;
    for (int j = n - 1; j >= 0; --j) {
      const int k = exponents_[j];
      const int label = rest % k;
      rest /= k;
      if (k == 1) {
        b.point[j] = zeta[j];
        continue;
      }
      const double r = std::pow(std::abs(zeta[j]), 1.0 / k);
      const double theta = (std::arg(zeta[j]) + 2.0 * kPi * label) / k;
      const cplx w = std::polar(r, theta);
      b.point[j] = w;
      b.jacobian *= 1.0 / (static_cast<double>(k) * std::pow(w, k - 1));
    }
  }
}

std::vector<Branch> ProperMap::branches(const ComplexPoint& zeta) const {
  std::vector<Branch> out;
  branches(zeta, out);
  return out;
}

namespace {

// Accumulates K and its z-derivatives over the supplied branches.
void accumulate_kernel(const DomainModel& d1, const ComplexPoint& z, const std::vector<Branch>& br,
                       PushforwardKernel& k) {
  const int n = d1.dimension();
  k.value = 0.0;
  k.d.setZero(n);
  k.ddbar.setZero(n, n);
  Eigen::VectorXcd b(n);
  for (const auto& branch : br) {
    const double weight =
        std::exp(2.0 * log_bergman_kernel(d1, z, branch.point).real()) * std::norm(branch.jacobian);
    b.setZero();
    for (const auto& f : d1.factors()) {
      cplx u{};
      for (int j : f.coords) u += z[j] * std::conj(branch.point[j]);
      for (int j : f.coords) b[j] += f.weight * std::conj(branch.point[j]) / (1.0 - u);
    }
    k.value += weight;
    k.d += weight * b;
    k.ddbar.noalias() += weight * b * b.adjoint();
  }
}

void require_source(const ProperMap& map, const DomainModel& domain1) {
  if (!(map.source() == domain1))
    throw DomainError("map source " + map.source().name() + " does not match " + domain1.name());
}

}  // namespace

PushforwardKernel pushforward_kernel(const ProperMap& map, const ComplexPoint& z,
                                     const ComplexPoint& zeta) {
  map.source().require_inside(z, "z");
  PushforwardKernel k;
  accumulate_kernel(map.source(), z, map.branches(zeta), k);
  return k;
}

double pushforward_density(const ProperMap& map, const DomainModel& domain1, const ComplexPoint& z,
                           const ComplexPoint& zeta) {
  require_source(map, domain1);
  const PushforwardKernel k = pushforward_kernel(map, z, zeta);
  return k.value / std::exp(log_bergman_kernel(domain1, z, z).real());
}

MCEstimate pullback_fisher_mc(const ProperMap& map, const DomainModel& domain1,
                              const ComplexPoint& z, long long n, std::uint64_t seed, int threads) {
  require_source(map, domain1);
  domain1.require_inside(z, "z");
  const int dim = domain1.dimension();
  const HermitianMatrix g = bergman_metric(domain1, z);
  const SampleFilter exclude = [&map](const ComplexPoint& xi) {
    return map.near_critical_value(map.apply(xi));
  };
  return mc_expectation(
      domain1, z, dim, dim,
      [&] {
        return MatrixIntegrand([&, br = std::vector<Branch>{}, k = PushforwardKernel{},
                                dk = Eigen::VectorXcd{}](const ComplexPoint& xi,
                                                         Eigen::MatrixXcd& out) mutable {
          map.branches(map.apply(xi), br);
          accumulate_kernel(domain1, z, br, k);
          dk = k.d / k.value;
          out.noalias() = g + dk * dk.adjoint() - k.ddbar / k.value;
        });
      },
      n, seed, threads, exclude);
}

KInequality k_inequality_check(const ProperMap& map, const DomainModel& domain1,
                               const ComplexPoint& z, const ComplexPoint& zeta, int direction) {
  require_source(map, domain1);
  if (direction < 0 || direction >= domain1.dimension())
    throw std::invalid_argument("direction index out of range");
  const PushforwardKernel k = pushforward_kernel(map, z, zeta);
  KInequality r;
  r.lhs = std::norm(k.d[direction]) / k.value;
  r.rhs = k.ddbar(direction, direction).real();
  const double scale = std::max(std::abs(r.lhs), std::abs(r.rhs));
  r.equal = scale == 0.0 || std::abs(r.rhs - r.lhs) < 1e-10 * scale;
  return r;
}

double bell_rule_check(const ProperMap& map, const DomainModel& domain1, const DomainModel& domain2,
                       const ComplexPoint& z, const ComplexPoint& zeta) {
  require_source(map, domain1);
  if (!(map.target() == domain2))
    throw DomainError("map target " + map.target().name() + " does not match " + domain2.name());
  domain1.require_inside(z, "z");
  const cplx jac = map.jacobian(z);
  if (std::abs(jac) < kCriticalValueRadius)
    throw CriticalValueError("z is a critical point of " + map.name());
  const cplx lhs = jac * bergman_kernel(domain2, map.apply(z), zeta);
  cplx rhs{};
  for (const auto& b : map.branches(zeta))
    rhs += bergman_kernel(domain1, z, b.point) * std::conj(b.jacobian);
  return std::abs(lhs - rhs) / std::abs(lhs);
}

ComparisonBound comparison_bound_check(const ProperMap& map, const DomainModel& domain1,
                                       const ComplexPoint& z, const ComplexPoint& zeta) {
  require_source(map, domain1);
  ComparisonBound r;
  const double b1 = std::exp(log_bergman_kernel(domain1, z, z).real());
  r.density = pushforward_density(map, domain1, z, zeta);
  const ComplexPoint fz = map.apply(z);
  r.bound = std::norm(map.jacobian(z)) * std::norm(bergman_kernel(map.target(), fz, zeta)) /
            (map.sheet_count() * b1);
  r.holds = r.density >= r.bound * (1.0 - 1e-12);
  return r;
}

double diagram_defect(const ProperMap& map, const ComplexPoint& z, const ComplexPoint& zeta) {
  const double q = pushforward_density(map, map.source(), z, zeta);
  const double p2 = poisson_bergman(map.target(), map.apply(z), zeta);
  return std::abs(q - p2) / p2;
}

}  // namespace bergman
