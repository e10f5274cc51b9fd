#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bergman/domains.hpp"
#include "bergman/types.hpp"

namespace bergman {

/// Monte Carlo mean with entrywise standard error. A scalar estimate is the
/// 1x1 case. For complex entries the error is sqrt(E|X - mean|^2 / n).
struct MCEstimate {
  Eigen::MatrixXcd mean;
  Eigen::MatrixXd std_error;
  long long n_samples = 0;

  cplx value(int i = 0, int j = 0) const { return mean(i, j); }
  double error(int i = 0, int j = 0) const { return std_error(i, j); }

  /// Largest |mean - target| / std_error over entries; zero-error entries
  /// count only when they miss by more than roundoff.
  double max_zscore(const Eigen::MatrixXcd& target) const;

  /// Entrywise |mean - target| <= k * std_error, plus a 1e-9 relative
  /// roundoff allowance so deterministic integrands can pass.
  bool within(const Eigen::MatrixXcd& target, double k = 3.0) const;
  bool within(cplx target, double k = 3.0) const;
};

/// Allowance added to k * std_error in MCEstimate::within.
double roundoff_floor(cplx target);

/// Streaming mean / second-moment accumulator (Welford), mergeable in a fixed
/// order so parallel reductions are reproducible.
class MCAccumulator {
 public:
  MCAccumulator() = default;
  MCAccumulator(int rows, int cols);

  void add(const Eigen::MatrixXcd& x);
  void merge(const MCAccumulator& other);
  long long count() const { return n_; }
  MCEstimate estimate() const;

 private:
  long long n_ = 0;
  Eigen::MatrixXcd mean_;
  Eigen::MatrixXd m2_;
  Eigen::MatrixXcd delta_;
};

/// Reproducible i.i.d. draws from P(z0, .) dV.
struct SampleBatch {
  DomainModel domain = DomainModel::disc();
  ComplexPoint base;
  std::uint64_t seed = 0;
  std::vector<ComplexPoint> points;
  long long proposals = 0;  // uniform-on-domain proposals consumed

  std::size_t size() const { return points.size(); }
};

/// Envelope M with P(z0, xi) * vol <= M for every xi:
/// prod over factors ((1 + r_f) / (1 - r_f))^{weight_f}.
double poisson_bergman_envelope(const DomainModel& domain, const ComplexPoint& z0);

/// Largest per-factor radius accepted as a sampling base point.
inline constexpr double kMaxSamplingRadius = 0.95;

/// Optional predicate; accepted draws for which it returns true are discarded
/// and redrawn (measure-zero exclusions).
using SampleFilter = std::function<bool(const ComplexPoint&)>;

/// Points are produced in fixed-size chunks with per-chunk derived seeds, so
/// the output does not depend on the thread count.
inline constexpr int kSampleChunk = 8192;

/// Visits the draws chunk by chunk: visit(chunk_index, points) where points is
/// n x chunk_len. Chunks may be visited concurrently.
void rejection_sample_chunks(const DomainModel& domain, const ComplexPoint& z0, long long count,
                             std::uint64_t seed, int threads, const SampleFilter& exclude,
                             const std::function<void(std::size_t, const Eigen::MatrixXcd&)>& visit,
                             long long* proposals = nullptr);

SampleBatch rejection_sample(const DomainModel& domain, const ComplexPoint& z0, long long count,
                             std::uint64_t seed, int threads = 0,
                             const SampleFilter& exclude = nullptr);

/// Integrand writing a rows x cols value for one draw xi. `out` is preallocated.
using MatrixIntegrand = std::function<void(const ComplexPoint& xi, Eigen::MatrixXcd& out)>;

/// Builds a fresh integrand per worker thread, so integrands may keep scratch state.
using IntegrandFactory = std::function<MatrixIntegrand()>;

/// E_{xi ~ P(z, .)}[integrand(xi)] from n exact draws.
MCEstimate mc_expectation(const DomainModel& domain, const ComplexPoint& z, int rows, int cols,
                          const IntegrandFactory& integrand, long long n, std::uint64_t seed,
                          int threads = 0, const SampleFilter& exclude = nullptr);

MCEstimate mc_expectation(const DomainModel& domain, const ComplexPoint& z,
                          const std::function<cplx(const ComplexPoint&)>& integrand, long long n,
                          std::uint64_t seed, int threads = 0);

/// Minimum sample count accepted by mc_expectation.
inline constexpr long long kMinMonteCarloSamples = 1000;

/// CSV with header re(xi1),im(xi1),... and round-trip decimal values.
void write_batch_csv(const SampleBatch& batch, const std::string& path);

}  // namespace bergman
