#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ordr2/errors.hpp"
#include "ordr2/estimation.hpp"
#include "ordr2/links.hpp"

namespace ordr2 {

/// Exponent lambda(r) applied to the likelihood ratio in the modified index.
/// L0 is the constant 1 (plain McFadden); L1..L6 are the candidate
/// penalties; Constant holds a user-chosen value for every r.
struct PenaltySpec {
  enum class Kind { L0, L1, L2, L3, L4, L5, L6, Constant };
  Kind kind = Kind::L2;
  double constant_value = 1.0;

  static PenaltySpec constant(double value) {
    if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("constant penalty must be positive");
    return {Kind::Constant, value};
  }
  static PenaltySpec candidate(int index) {
    if (index < 0 || index > 6) throw DomainError("penalty index must be 0..6");
    return {static_cast<Kind>(index), 1.0};
  }

  /// Stable measure identifier: "ug:l0".."ug:l6" or "ug:const:<value>".
  std::string id() const {
    if (kind == Kind::Constant) {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, constant_value);
      return "ug:const:" + std::string(buf, res.ptr);
    }
    return "ug:l" + std::to_string(static_cast<int>(kind));
  }

  friend bool operator==(const PenaltySpec&, const PenaltySpec&) = default;
};

/// Parses "l0".."l6", "ug:l2", "const:3", "ug:const:3" or a bare number.
inline PenaltySpec parse_penalty(std::string_view text) {
  if (text.starts_with("ug:")) text.remove_prefix(3);
  if (text.size() == 2 && (text[0] == 'l' || text[0] == 'L') && text[1] >= '0' && text[1] <= '6') {
    return PenaltySpec::candidate(text[1] - '0');
  }
  if (text.starts_with("const:")) text.remove_prefix(6);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw DomainError("unrecognized penalty '" + std::string(text) + "'");
  }
  return PenaltySpec::constant(value);
}

inline double penalty(const PenaltySpec& spec, int r) {
  if (r < 2) throw DomainError("penalty: need r >= 2");
  const double x = r;
  using Kind = PenaltySpec::Kind;
  switch (spec.kind) {
    case Kind::L0: return 1.0;
    case Kind::L1: return x;
    case Kind::L2: return std::sqrt(2.0 * x);
    case Kind::L3: return 2.0 + std::sqrt(x - 2.0);
    case Kind::L4: return 1.0 + std::log2(x);
    case Kind::L5: return 2.0 + std::log2(x - 1.0);
    case Kind::L6: return 2.0 + std::pow(x - 2.0, 1.5);
    case Kind::Constant: return spec.constant_value;
  }
  return 1.0;
}

namespace detail {

constexpr double kRatioSlack = 1e-12;

// gamma_r = l_p / l_0, validated and pulled into [0, 1].
inline double likelihood_ratio(double loglik_full, double loglik_null) {
  if (!std::isfinite(loglik_full) || !std::isfinite(loglik_null)) {
    throw UndefinedMeasureError("log-likelihood is not finite");
  }
  if (!(loglik_null < 0.0)) throw UndefinedMeasureError("null log-likelihood is zero");
  const double gamma = loglik_full / loglik_null;
  if (gamma < -kRatioSlack || gamma > 1.0 + kRatioSlack) {
    throw DomainError("log-likelihoods violate l_null <= l_full <= 0");
  }
  return std::clamp(gamma, 0.0, 1.0);
}

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace detail

inline double gamma_ratio(double loglik_full, double loglik_null) {
  return detail::likelihood_ratio(loglik_full, loglik_null);
}

/// McFadden's likelihood ratio index 1 - l_p / l_0.
inline double r2_mcfadden(double loglik_full, double loglik_null) {
  return 1.0 - detail::likelihood_ratio(loglik_full, loglik_null);
}

/// Penalized index 1 - gamma_r^lambda(r).
inline double r2_modified(double loglik_full, double loglik_null, int r, const PenaltySpec& spec) {
  const double gamma = detail::likelihood_ratio(loglik_full, loglik_null);
  return 1.0 - std::pow(gamma, penalty(spec, r));
}

inline double r2_coxsnell(double loglik_full, double loglik_null, long n) {
  if (n < 1) throw DomainError("Cox-Snell: n must be positive");
  detail::likelihood_ratio(loglik_full, loglik_null);
  const double diff = std::min(loglik_null - loglik_full, 0.0);
  return detail::clamp_unit(-std::expm1(2.0 * diff / static_cast<double>(n)));
}

/// Cox-Snell divided by its attainable maximum 1 - exp(2 l_0 / n).
inline double r2_nagelkerke(double loglik_full, double loglik_null, long n) {
  const double cs = r2_coxsnell(loglik_full, loglik_null, n);
  const double bound = -std::expm1(2.0 * loglik_null / static_cast<double>(n));
  if (!(bound > 0.0)) throw UndefinedMeasureError("Nagelkerke: maximum Cox-Snell value is zero");
  return detail::clamp_unit(cs / bound);
}

/// Var(eta) / (Var(eta) + error variance of the link), population variance.
inline double r2_mckelvey_zavoina(std::span<const double> linear_predictors, LinkKind link) {
  const std::size_t n = linear_predictors.size();
  if (n < 2) throw UndefinedMeasureError("McKelvey-Zavoina: need at least two observations");
  double mean = 0.0;
  for (double v : linear_predictors) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : linear_predictors) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(n);
  return var / (var + error_variance(link));
}

/// Tjur's coefficient of discrimination: mean p among events minus mean p
/// among non-events. `y` is coded 0/1; the result lies in [-1, 1].
inline double r2_tjur(std::span<const double> fitted_p1, std::span<const int> y) {
  if (fitted_p1.size() != y.size()) throw SchemaError("Tjur: length mismatch");
  double sum1 = 0.0, sum0 = 0.0;
  long n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) {
      sum1 += fitted_p1[i];
      ++n1;
    } else if (y[i] == 0) {
      sum0 += fitted_p1[i];
      ++n0;
    } else {
      throw InapplicableMeasureError("Tjur: response must be binary (0/1)");
    }
  }
  if (n1 == 0 || n0 == 0) throw UndefinedMeasureError("Tjur: both classes must be present");
  return sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);
}

/// All applicable measures for one fitted model. Measures that cannot be
/// computed are listed in `unavailable` with a reason code instead.
struct GofReport {
  long n = 0;
  int r = 0;
  double loglik_full = 0.0;
  double loglik_null = 0.0;
  double gamma_r = 1.0;
  double g_statistic = 0.0;
  std::map<std::string, double> measures;
  std::map<std::string, std::string> unavailable;
  std::vector<std::string> flags;

  bool has(const std::string& id) const { return measures.count(id) != 0; }
  double at(const std::string& id) const {
    const auto it = measures.find(id);
    if (it == measures.end()) throw SchemaError("measure '" + id + "' not in report");
    return it->second;
  }
};

inline std::vector<PenaltySpec> default_penalties() {
  std::vector<PenaltySpec> specs;
  for (int k = 1; k <= 6; ++k) specs.push_back(PenaltySpec::candidate(k));
  return specs;
}

inline GofReport gof_report(const FittedModel& model, std::span<const PenaltySpec> penalties) {
  GofReport report;
  report.n = static_cast<long>(model.n());
  report.r = model.categories;
  report.loglik_full = model.loglik;
  report.loglik_null = model.null_loglik;
  report.g_statistic = std::max(-2.0 * (model.null_loglik - model.loglik), 0.0);
  if (!model.converged) report.flags.push_back(model.separation_warning ? "separation" : "not-converged");

  auto record = [&](const std::string& id, auto&& compute) {
    try {
      report.measures[id] = compute();
    } catch (const Error& e) {
      report.unavailable[id] = e.code();
    }
  };

  try {
    report.gamma_r = detail::likelihood_ratio(model.loglik, model.null_loglik);
  } catch (const Error& e) {
    report.flags.push_back(std::string("gamma-") + e.code());
  }
  record("mf", [&] { return r2_mcfadden(model.loglik, model.null_loglik); });
  record("cs", [&] { return r2_coxsnell(model.loglik, model.null_loglik, report.n); });
  record("nk", [&] { return r2_nagelkerke(model.loglik, model.null_loglik, report.n); });
  for (const auto& spec : penalties) {
    record(spec.id(), [&] { return r2_modified(model.loglik, model.null_loglik, model.categories, spec); });
  }
  record("mz", [&] {
    return r2_mckelvey_zavoina(
        std::span<const double>(model.linear_predictors.data(), static_cast<std::size_t>(model.n())),
        model.link);
  });
  if (model.categories > 2 && report.has("mz")) report.flags.push_back("mz-extended");

  if (model.categories == 2) {
    record("tj", [&] {
      std::vector<double> p_event(static_cast<std::size_t>(model.n()));
      std::vector<int> event(p_event.size());
      for (std::size_t i = 0; i < p_event.size(); ++i) {
        p_event[i] = model.fitted_probs(static_cast<Eigen::Index>(i), 1);
        event[i] = model.response[i] == 2 ? 1 : 0;
      }
      const double value = r2_tjur(p_event, event);
      if (value < 0.0) {
        report.flags.push_back("tj-negative-clamped");
        return 0.0;
      }
      return value;
    });
  } else {
    report.unavailable["tj"] = "inapplicable-measure";
  }
  return report;
}

}  // namespace ordr2
