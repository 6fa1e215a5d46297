#include "stratlabor/density.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace stratlabor {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double standard_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0,1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

Density::Density(Family f, double p1, double p2, double p3, Interval support)
    : family_(f), p1_(p1), p2_(p2), p3_(p3), support_(support) {}

Density Density::uniform(double lo, double hi) { return Density(Family::uniform, lo, hi, 0.0, Interval(lo, hi)); }

Density Density::gaussian(double mean, double sd, double truncate_sd) {
  if (!(sd > 0) || !(truncate_sd > 0)) throw DomainError("gaussian density needs sd > 0 and truncation > 0");
  Density d(Family::gaussian, mean, sd, truncate_sd,
            Interval(mean - truncate_sd * sd, mean + truncate_sd * sd));
  d.lower_mass_ = standard_normal_cdf(-truncate_sd);
  d.log_norm_ = std::log(1.0 - 2.0 * d.lower_mass_);
  return d;
}

Density Density::power(double n) {
  if (!(n > -1.0)) throw DomainError("power density needs n > -1");
  return Density(Family::power, n, 0.0, 0.0, Interval(0.0, 1.0));
}

Density Density::linear_ramp(double a) {
  if (!(std::abs(a) <= 2.0)) throw DomainError("linear ramp density needs |a| <= 2");
  return Density(Family::linear_ramp, a, 0.0, 0.0, Interval(0.0, 1.0));
}

double Density::pdf(double x) const {
  if (x < support_.lo || x > support_.hi) return 0.0;
  switch (family_) {
    case Family::uniform:
      return 1.0 / support_.width();
    case Family::gaussian: {
      const double z = (x - p1_) / p2_;
      return standard_normal_pdf(z) / p2_ * std::exp(-log_norm_);
    }
    case Family::power:
      return (p1_ + 1.0) * std::pow(x, p1_);
    case Family::linear_ramp:
      return -p1_ * x + 0.5 * p1_ + 1.0;
  }
  return 0.0;
}

double Density::cdf(double x) const {
  if (x <= support_.lo) return 0.0;
  if (x >= support_.hi) return 1.0;
  switch (family_) {
    case Family::uniform:
      return (x - support_.lo) / support_.width();
    case Family::gaussian:
      return (standard_normal_cdf((x - p1_) / p2_) - lower_mass_) * std::exp(-log_norm_);
    case Family::power:
      return std::pow(x, p1_ + 1.0);
    case Family::linear_ramp:
      return -0.5 * p1_ * x * x + (0.5 * p1_ + 1.0) * x;
  }
  return 0.0;
}

double Density::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile needs u in [0,1]");
  switch (family_) {
    case Family::uniform:
      return support_.lo + u * support_.width();
    case Family::gaussian: {
      if (u <= 0.0) return support_.lo;
      if (u >= 1.0) return support_.hi;
      const double p = lower_mass_ + u * std::exp(log_norm_);
      return support_.clamp(p1_ + p2_ * standard_normal_quantile(p));
    }
    case Family::power:
      return std::pow(u, 1.0 / (p1_ + 1.0));
    case Family::linear_ramp: {
      const double b = 0.5 * p1_ + 1.0;
      return support_.clamp(2.0 * u / (b + std::sqrt(std::max(0.0, b * b - 2.0 * p1_ * u))));
    }
  }
  return 0.0;
}

double Density::pdf_derivative(double x) const {
  if (x < support_.lo || x > support_.hi) return 0.0;
  switch (family_) {
    case Family::uniform:
      return 0.0;
    case Family::gaussian:
      return -(x - p1_) / (p2_ * p2_) * pdf(x);
    case Family::power:
      if (p1_ == 0.0) return 0.0;
      if (x == 0.0 && p1_ < 1.0) return std::numeric_limits<double>::infinity();
      return p1_ * (p1_ + 1.0) * std::pow(x, p1_ - 1.0);
    case Family::linear_ramp:
      return -p1_;
  }
  return 0.0;
}

double Density::mean() const {
  switch (family_) {
    case Family::uniform:
      return support_.mid();
    case Family::gaussian:
      return p1_;
    case Family::power:
      return (p1_ + 1.0) / (p1_ + 2.0);
    case Family::linear_ramp:
      return 0.5 - p1_ / 12.0;
  }
  return 0.0;
}

std::string Density::describe() const {
  std::ostringstream os;
  os.precision(9);
  switch (family_) {
    case Family::uniform:
      os << "uniform[" << support_.lo << "," << support_.hi << "]";
      break;
    case Family::gaussian:
      os << "gaussian(" << p1_ << "," << p2_ << ";trunc=" << p3_ << ")";
      break;
    case Family::power:
      os << "power(" << p1_ << ")";
      break;
    case Family::linear_ramp:
      os << "linear-ramp(" << p1_ << ")";
      break;
  }
  return os.str();
}

std::vector<double> sample(const Density& density, std::size_t n, RngStream& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(density.sample(rng));
  return out;
}

std::vector<double> stratified_sample(const Density& density, std::size_t n, RngStream& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(density.quantile((static_cast<double>(i) + rng.uniform()) / static_cast<double>(n)));
  }
  return out;
}

}  // namespace stratlabor
