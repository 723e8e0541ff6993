#pragma once

#include <cstddef>
#include <span>

namespace wmkit {

/// Pr(Z > z) for a standard normal Z.
double normal_upper_tail(double z);
/// z with Pr(Z > z) = alpha.
double normal_upper_quantile(double alpha);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_upper_tail(double statistic, double dof);

struct KsResult {
  double statistic = 0.0;
  /// Asymptotic Kolmogorov p-value with the usual effective-size correction.
  double p_value = 1.0;
};

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_and_stderr(std::span<const double> xs);

/// Empirical quantile: the smallest sample value v with at least q of the
/// samples <= v.
double empirical_quantile(std::span<const double> xs, double q);

}  // namespace wmkit
