#include "bergman/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bergman {

double normal_cdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("normal variance must be positive");
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("KS statistic of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double kolmogorov_pvalue(double d, std::size_t n) {
  if (n == 0) throw std::invalid_argument("KS p-value needs a nonempty sample");
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;  // 1 - Q(0.2) < 1e-9
  // Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16 * std::abs(sum)) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(const std::vector<double>& sample, const std::function<double(double)>& cdf) {
  KsResult r;
  r.statistic = ks_statistic(sample, cdf);
  r.p_value = kolmogorov_pvalue(r.statistic, sample.size());
  return r;
}

}  // namespace bergman
