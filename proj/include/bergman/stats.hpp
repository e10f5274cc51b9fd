#pragma once

#include <functional>
#include <vector>

namespace bergman {

double normal_cdf(double x, double mean = 0.0, double variance = 1.0);

/// Two-sided one-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Asymptotic p-value P(D_n >= d) from the Kolmogorov distribution with the
/// Stephens small-sample correction lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) d.
double kolmogorov_pvalue(double d, std::size_t n);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

KsResult ks_test(const std::vector<double>& sample, const std::function<double(double)>& cdf);

}  // namespace bergman
