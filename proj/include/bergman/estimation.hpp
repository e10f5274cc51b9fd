#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bergman/domains.hpp"
#include "bergman/sampling.hpp"

namespace bergman {

struct ObjectiveValue {
  double value = 0.0;                // sum_i Dia(z, Z_i)
  Eigen::VectorXcd wirtinger_grad;   // d_z L
  /// Gradient in real coordinates (x_1, y_1, ..., x_n, y_n): (2 Re, -2 Im).
  Eigen::VectorXd real_grad() const;
  double grad_norm() const { return 2.0 * wirtinger_grad.norm(); }
};

ObjectiveValue diastasis_objective_grad(const DomainModel& domain, const ComplexPoint& z,
                                        const std::vector<ComplexPoint>& samples);
ObjectiveValue diastasis_objective_grad(const DomainModel& domain, const ComplexPoint& z,
                                        const SampleBatch& batch);

struct ZhatOptions {
  int max_iterations = 500;
  double grad_tol = 1e-8;     // stop when the real gradient norm drops below this
  double accept_tol = 1e-4;   // otherwise the result must reach at least this
  double armijo = 1e-4;
  double shrink = 0.5;
};

struct ZhatResult {
  ComplexPoint zhat;
  int iterations = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::string stop_reason;  // "gradient", "iterations" or "stalled"
};

/// Componentwise Euclidean mean of the samples, pulled radially inside the
/// domain if it lands on or outside the boundary.
ComplexPoint batch_mean_initial_point(const DomainModel& domain,
                                      const std::vector<ComplexPoint>& samples);

/// Gradient descent with Armijo backtracking on the 2n real coordinates.
/// Never throws on non-convergence; see ZhatResult::converged.
ZhatResult minimize_diastasis(const DomainModel& domain, const std::vector<ComplexPoint>& samples,
                              const ComplexPoint& init, const ZhatOptions& opts = {});

/// Local minimizer of sum_i Dia(z, Z_i); throws NonConvergence when the final
/// gradient norm exceeds opts.accept_tol.
ComplexPoint estimate_zhat(const DomainModel& domain, const SampleBatch& batch,
                           const ComplexPoint& init, const ZhatOptions& opts = {});
/// Same, starting from batch_mean_initial_point.
ComplexPoint estimate_zhat(const DomainModel& domain, const SampleBatch& batch,
                           const ZhatOptions& opts = {});

struct ConsistencyRow {
  long long m = 0;
  double mean_error = 0.0;  // mean |zhat - z0| over successful replications
  double std_error = 0.0;
  int replications = 0;
  int failures = 0;
  double mean_iterations = 0.0;
};

struct ConsistencyReport {
  ComplexPoint z0;
  int r_rep = 0;
  std::uint64_t seed = 0;
  std::vector<ConsistencyRow> rows;
  bool strictly_decreasing = false;
  bool nonincreasing_within_slack = false;  // each step up by at most 2 joint stderr
  double failure_rate = 0.0;
};

ConsistencyReport consistency_experiment(const DomainModel& domain, const ComplexPoint& z0,
                                         const std::vector<long long>& m_schedule, int r_rep,
                                         std::uint64_t seed, int threads = 0);

struct CltReport {
  ComplexPoint z0;
  long long m = 0;
  int r_rep = 0;
  std::uint64_t seed = 0;
  int successes = 0;
  int failures = 0;
  double mean_iterations = 0.0;
  Eigen::MatrixXcd gamma_hat;     // mean Y Y^H
  Eigen::MatrixXcd relation_hat;  // mean Y Y^T
  Eigen::MatrixXcd gamma_star;    // g_B(z0)^{-1}
  double covariance_rel_error = 0.0;  // ||gamma_hat - gamma_star||_F / ||gamma_star||_F
  double relation_norm = 0.0;         // ||relation_hat||_F
  double relation_bound = 0.0;        // 3 ||gamma_star||_F / sqrt(successes)
  std::vector<std::string> marginal_names;
  std::vector<double> ks_statistics;
  std::vector<double> ks_p_values;
  std::vector<ComplexPoint> scaled_errors;  // Y_r = sqrt(m)(zhat_r - z0)

  bool covariance_ok(double tol = 0.10) const { return covariance_rel_error < tol; }
  bool relation_ok() const { return relation_norm < relation_bound; }
  bool normality_ok(double level = 0.01) const;
  bool failure_rate_ok() const;
};

CltReport clt_experiment(const DomainModel& domain, const ComplexPoint& z0, long long m, int r_rep,
                         std::uint64_t seed, int threads = 0);

/// Circular complex normal N_C(mu, Gamma, 0).
struct ComplexNormalSpec {
  ComplexPoint mean;
  HermitianMatrix covariance;
  Eigen::MatrixXcd relation;  // must be zero (or empty)
};

/// z = mu + L w with Gamma = L L^H and w standard circular. Throws
/// NotPositiveDefinite when Gamma has no Cholesky factor.
std::vector<ComplexPoint> complex_normal_sample(const ComplexNormalSpec& spec, long long count,
                                                std::uint64_t seed);

/// exp(-(z-mu)^H Gamma^{-1} (z-mu)) / (pi^n det Gamma).
double complex_normal_density(const ComplexNormalSpec& spec, const ComplexPoint& z);

/// Y_r columns as CSV: re(y1),im(y1),...
void write_points_csv(const std::vector<ComplexPoint>& points, const std::string& path,
                      const std::string& prefix);

}  // namespace bergman
