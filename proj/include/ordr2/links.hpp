#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "ordr2/errors.hpp"

namespace ordr2 {

/// Error distribution of the latent variable; its CDF is the inverse link.
enum class LinkKind { Probit, Logit };

inline std::string_view to_string(LinkKind link) {
  return link == LinkKind::Probit ? "probit" : "logit";
}

inline LinkKind parse_link(std::string_view text) {
  if (text == "probit") return LinkKind::Probit;
  if (text == "logit") return LinkKind::Logit;
  throw DomainError("unknown link '" + std::string(text) + "' (expected probit or logit)");
}

/// Variance of the standardized error: 1 for probit, pi^2/3 for logit.
inline double error_variance(LinkKind link) {
  return link == LinkKind::Probit ? 1.0 : std::numbers::pi * std::numbers::pi / 3.0;
}

namespace detail {

inline void require_finite(double z, const char* what) {
  if (!std::isfinite(z)) throw DomainError(std::string(what) + ": argument is not finite");
}

inline double probit_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

inline double probit_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double logit_cdf(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit_pdf(double z) {
  const double e = std::exp(-std::abs(z));
  return e / ((1.0 + e) * (1.0 + e));
}

// Acklam's rational approximation (rel. error ~1e-9), polished below.
inline double probit_quantile_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double probit_quantile(double p) {
  double x = probit_quantile_initial(p);
  for (int i = 0; i < 2; ++i) {
    // Halley step; the tail residual uses the complement for accuracy.
    const double e = x > 0.0 ? (1.0 - p) - probit_cdf(-x) : probit_cdf(x) - p;
    const double u = e / probit_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace detail

/// Inverse link F(z).
inline double cdf(LinkKind link, double z) {
  detail::require_finite(z, "cdf");
  return link == LinkKind::Probit ? detail::probit_cdf(z) : detail::logit_cdf(z);
}

/// Density f(z) = F'(z).
inline double pdf(LinkKind link, double z) {
  detail::require_finite(z, "pdf");
  return link == LinkKind::Probit ? detail::probit_pdf(z) : detail::logit_pdf(z);
}

/// Derivative of the density, f'(z).
inline double pdf_derivative(LinkKind link, double z) {
  detail::require_finite(z, "pdf_derivative");
  if (link == LinkKind::Probit) return -z * detail::probit_pdf(z);
  return detail::logit_pdf(z) * (1.0 - 2.0 * detail::logit_cdf(z));
}

/// F^{-1}(p) for p in (0, 1).
inline double quantile(LinkKind link, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: probability must lie in (0, 1)");
  if (link == LinkKind::Logit) return std::log(p) - std::log1p(-p);
  return detail::probit_quantile(p);
}

}  // namespace ordr2
