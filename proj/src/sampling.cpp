#include "bergman/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/parallel.hpp"
#include "bergman/rng.hpp"

namespace bergman {

double roundoff_floor(cplx target) { return 1e-9 * std::max(1.0, std::abs(target)); }

double MCEstimate::max_zscore(const Eigen::MatrixXcd& target) const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < mean.rows(); ++i)
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      const double miss = std::abs(mean(i, j) - target(i, j));
      const double se = std_error(i, j);
      if (se > 0.0) {
        worst = std::max(worst, miss / se);
      } else if (miss > roundoff_floor(target(i, j))) {
        worst = std::numeric_limits<double>::infinity();
      }
    }
  return worst;
}

bool MCEstimate::within(const Eigen::MatrixXcd& target, double k) const {
  if (target.rows() != mean.rows() || target.cols() != mean.cols())
    throw std::invalid_argument("target shape does not match estimate");
  for (Eigen::Index i = 0; i < mean.rows(); ++i)
    for (Eigen::Index j = 0; j < mean.cols(); ++j)
      if (std::abs(mean(i, j) - target(i, j)) > k * std_error(i, j) + roundoff_floor(target(i, j)))
        return false;
  return true;
}

bool MCEstimate::within(cplx target, double k) const {
  Eigen::MatrixXcd t(1, 1);
  t(0, 0) = target;
  return within(t, k);
}

MCAccumulator::MCAccumulator(int rows, int cols)
    : mean_(Eigen::MatrixXcd::Zero(rows, cols)),
      m2_(Eigen::MatrixXd::Zero(rows, cols)),
      delta_(rows, cols) {}

void MCAccumulator::add(const Eigen::MatrixXcd& x) {
  ++n_;
  delta_ = x - mean_;
  mean_ += delta_ / static_cast<double>(n_);
  // |x - old mean| * |x - new mean| summed; complex Welford on the real inner product.
  m2_.array() += (delta_.array().conjugate() * (x - mean_).array()).real();
}

void MCAccumulator::merge(const MCAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double nt = na + nb;
  const Eigen::MatrixXcd d = other.mean_ - mean_;
  mean_ += d * (nb / nt);
  m2_ += other.m2_ + d.cwiseAbs2() * (na * nb / nt);
  n_ += other.n_;
}

MCEstimate MCAccumulator::estimate() const {
  if (n_ < 2) throw std::logic_error("Monte Carlo estimate needs at least two samples");
  MCEstimate e;
  e.mean = mean_;
  e.n_samples = n_;
  const double n = static_cast<double>(n_);
  // sample variance with n - 1, divided by n
  e.std_error = (m2_.array().max(0.0) / ((n - 1.0) * n)).sqrt().matrix();
  return e;
}

double poisson_bergman_envelope(const DomainModel& domain, const ComplexPoint& z0) {
  double log_m = 0.0;
  for (const auto& f : domain.factors()) {
    double s = 0.0;
    for (int j : f.coords) s += std::norm(z0[j]);
    const double r = std::sqrt(s);
    log_m += f.weight * (std::log1p(r) - std::log1p(-r));
  }
  return std::exp(log_m);
}

namespace {

constexpr long long kWindow = 10000;
constexpr double kMinAcceptance = 1e-4;

struct ChunkSampler {
  const DomainModel& domain;
  const ComplexPoint& z0;
  double log_const;  // log(C vol / M) + sum_f w_f log(1 - s_f)

  ChunkSampler(const DomainModel& d, const ComplexPoint& z)
      : domain(d), z0(z), log_const(0.0) {
    log_const = d.log_normalization() + std::log(d.volume()) -
                std::log(poisson_bergman_envelope(d, z));
    for (const auto& f : d.factors()) {
      double s = 0.0;
      for (int j : f.coords) s += std::norm(z[j]);
      log_const += f.weight * std::log1p(-s);
    }
  }

  // log of the acceptance probability P(z0, xi) vol / M
  double log_accept(const ComplexPoint& xi) const {
    double a = log_const;
    for (const auto& f : domain.factors()) {
      cplx u{};
      for (int j : f.coords) u += z0[j] * std::conj(xi[j]);
      a -= 2.0 * f.weight * std::log(std::abs(1.0 - u));
    }
    return a;
  }

  long long fill(Rng& rng, Eigen::MatrixXcd& out, const SampleFilter& exclude) const {
    ComplexPoint xi(domain.dimension());
    long long proposals = 0;
    long long accepted = 0;
    for (Eigen::Index k = 0; k < out.cols();) {
      uniform_box_sample_into(domain, rng, xi);
      ++proposals;
      const double a = log_accept(xi);
      if (a > 1e-12) {
        std::ostringstream os;
        os << "envelope violated: acceptance ratio exp(" << a << ") exceeds 1";
        throw SamplerError(os.str());
      }
      if (rng.uniform() < std::exp(a)) {
        ++accepted;
        if (!exclude || !exclude(xi)) out.col(k++) = xi;
      }
      if (proposals >= kWindow &&
          static_cast<double>(accepted) < kMinAcceptance * static_cast<double>(proposals)) {
        std::ostringstream os;
        os << "acceptance rate " << static_cast<double>(accepted) / proposals << " after "
           << proposals << " proposals is below " << kMinAcceptance;
        throw SamplerError(os.str());
      }
    }
    return proposals;
  }
};

void check_base(const DomainModel& domain, const ComplexPoint& z0) {
  domain.require_inside(z0, "sampling base point");
  if (domain.factor_radius(z0) > kMaxSamplingRadius) {
    std::ostringstream os;
    os << "sampling base point radius " << domain.factor_radius(z0) << " exceeds "
       << kMaxSamplingRadius;
    throw SamplerError(os.str());
  }
}

}  // namespace

void rejection_sample_chunks(const DomainModel& domain, const ComplexPoint& z0, long long count,
                             std::uint64_t seed, int threads, const SampleFilter& exclude,
                             const std::function<void(std::size_t, const Eigen::MatrixXcd&)>& visit,
                             long long* proposals) {
  check_base(domain, z0);
  if (count < 0) throw std::invalid_argument("sample count must be nonnegative");
  const ChunkSampler sampler(domain, z0);
  const auto chunks = static_cast<std::size_t>((count + kSampleChunk - 1) / kSampleChunk);
  std::vector<long long> used(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const long long begin = static_cast<long long>(c) * kSampleChunk;
    const long long len = std::min<long long>(kSampleChunk, count - begin);
    Eigen::MatrixXcd pts(domain.dimension(), len);
    Rng rng(derive_seed(seed, {c}));
    used[c] = sampler.fill(rng, pts, exclude);
    visit(c, pts);
  });
  if (proposals) {
    *proposals = 0;
    for (auto u : used) *proposals += u;
  }
}

SampleBatch rejection_sample(const DomainModel& domain, const ComplexPoint& z0, long long count,
                             std::uint64_t seed, int threads, const SampleFilter& exclude) {
  SampleBatch batch;
  batch.domain = domain;
  batch.base = z0;
  batch.seed = seed;
  batch.points.resize(static_cast<std::size_t>(std::max<long long>(count, 0)));
  rejection_sample_chunks(
      domain, z0, count, seed, threads, exclude,
      [&](std::size_t c, const Eigen::MatrixXcd& pts) {
        const std::size_t begin = c * kSampleChunk;
        for (Eigen::Index k = 0; k < pts.cols(); ++k) batch.points[begin + k] = pts.col(k);
      },
      &batch.proposals);
  return batch;
}

MCEstimate mc_expectation(const DomainModel& domain, const ComplexPoint& z, int rows, int cols,
                          const IntegrandFactory& integrand, long long n, std::uint64_t seed,
                          int threads, const SampleFilter& exclude) {
  if (n < kMinMonteCarloSamples) {
    std::ostringstream os;
    os << "Monte Carlo sample count " << n << " is below " << kMinMonteCarloSamples;
    throw std::invalid_argument(os.str());
  }
  if (threads <= 0) threads = default_thread_count();
  const auto chunks = static_cast<std::size_t>((n + kSampleChunk - 1) / kSampleChunk);
  std::vector<MCAccumulator> partial(chunks);
  // one integrand instance per worker slot; chunks are claimed dynamically
  std::vector<MatrixIntegrand> fns(static_cast<std::size_t>(std::max(threads, 1)));
  std::vector<std::thread::id> owners(fns.size());
  std::mutex slot_mutex;
  thread_local ComplexPoint xi;
  auto slot_for_thread = [&]() -> MatrixIntegrand& {
    std::lock_guard<std::mutex> lock(slot_mutex);
    const auto id = std::this_thread::get_id();
    for (std::size_t s = 0; s < fns.size(); ++s) {
      if (fns[s] && owners[s] == id) return fns[s];
      if (!fns[s]) {
        owners[s] = id;
        fns[s] = integrand();
        return fns[s];
      }
    }
    throw std::logic_error("no integrand slot for worker thread");
  };
  rejection_sample_chunks(domain, z, n, seed, threads, exclude,
                          [&](std::size_t c, const Eigen::MatrixXcd& pts) {
                            MatrixIntegrand& f = slot_for_thread();
                            MCAccumulator acc(rows, cols);
                            Eigen::MatrixXcd value(rows, cols);
                            for (Eigen::Index k = 0; k < pts.cols(); ++k) {
                              xi = pts.col(k);
                              f(xi, value);
                              acc.add(value);
                            }
                            partial[c] = std::move(acc);
                          });
  MCAccumulator total(rows, cols);
  for (const auto& p : partial) total.merge(p);
  return total.estimate();
}

MCEstimate mc_expectation(const DomainModel& domain, const ComplexPoint& z,
                          const std::function<cplx(const ComplexPoint&)>& integrand, long long n,
                          std::uint64_t seed, int threads) {
  return mc_expectation(
      domain, z, 1, 1,
      [&] {
        return MatrixIntegrand([&](const ComplexPoint& xi, Eigen::MatrixXcd& out) {
          out(0, 0) = integrand(xi);
        });
      },
      n, seed, threads);
}

void write_batch_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const int n = batch.domain.dimension();
  for (int j = 0; j < n; ++j) out << (j ? "," : "") << "re(xi" << j + 1 << "),im(xi" << j + 1 << ")";
  out << "\n";
  char buf[64];
  for (const auto& p : batch.points) {
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", j ? "," : "", p[j].real(), p[j].imag());
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace bergman
