#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stratlabor/numerics.hpp"
#include "stratlabor/random.hpp"

namespace stratlabor {

/// Closed catalog of one-dimensional densities. Each member has a closed-form
/// CDF and quantile, so sampling is by inversion and normalization is exact.
///
///   uniform(lo, hi)       1/(hi-lo) on [lo, hi]
///   gaussian(mu, sd, k)   N(mu, sd^2) truncated to mu +- k sd, renormalized
///   power(n)              (n+1) x^n on [0, 1], n > -1
///   linear_ramp(a)        -a x + a/2 + 1 on [0, 1], |a| <= 2
class Density {
 public:
  enum class Family { uniform, gaussian, power, linear_ramp };

  static Density uniform(double lo, double hi);
  static Density gaussian(double mean, double sd, double truncate_sd = 8.0);
  static Density power(double n);
  static Density linear_ramp(double a);

  Family family() const noexcept { return family_; }
  const Interval& support() const noexcept { return support_; }
  double param1() const noexcept { return p1_; }
  double param2() const noexcept { return p2_; }
  double param3() const noexcept { return p3_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  // d pdf / dx inside the support; +-inf where the derivative is unbounded.
  double pdf_derivative(double x) const;
  double mean() const;

  double sample(RngStream& rng) const { return quantile(rng.uniform()); }

  std::string describe() const;

  friend bool operator==(const Density&, const Density&) = default;

 private:
  Density(Family f, double p1, double p2, double p3, Interval support);

  Family family_;
  double p1_;
  double p2_;
  double p3_;
  Interval support_;
  double log_norm_ = 0.0;  // gaussian: log of the retained probability mass
  double lower_mass_ = 0.0;  // gaussian: Phi(-k)
};

/// n i.i.d. draws from `density`, reproducible given the stream state.
std::vector<double> sample(const Density& density, std::size_t n, RngStream& rng);
/// One draw from each of the n equal-probability strata: Q((i + U_i) / n).
std::vector<double> stratified_sample(const Density& density, std::size_t n, RngStream& rng);

double standard_normal_cdf(double z);
double standard_normal_pdf(double z);
double standard_normal_quantile(double p);

}  // namespace stratlabor
