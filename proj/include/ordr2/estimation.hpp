#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ordr2/dataset.hpp"
#include "ordr2/errors.hpp"
#include "ordr2/links.hpp"

namespace ordr2 {

/// Least-squares fit of a continuous response on an intercept plus predictors.
struct LinearFit {
  std::vector<std::string> names;  // predictors, intercept excluded
  Eigen::VectorXd beta_tilde;      // intercept first
  Eigen::VectorXd fitted;
  double residual_ss = 0.0;
  double total_ss = 0.0;
  double r2_ols = 0.0;
};

/// Cumulative-link model P(y <= j) = F(tau_j - x'beta) at its estimate.
struct FittedModel {
  LinkKind link = LinkKind::Probit;
  std::vector<std::string> names;
  int categories = 0;
  Eigen::VectorXd beta;
  Eigen::VectorXd tau;  // strictly increasing, length categories - 1
  double loglik = 0.0;
  double null_loglik = 0.0;
  Eigen::VectorXd linear_predictors;
  Eigen::MatrixXd fitted_probs;  // n x categories
  std::vector<int> response;     // observed codes 1..categories
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  int fisher_steps = 0;
  bool separation_warning = false;

  Eigen::Index n() const { return linear_predictors.size(); }

  /// Binary models only: intercept of P(y = 2) = F(alpha + x'beta).
  double intercept() const { return -tau(0); }
};

/// Raised when the optimizer stops without meeting the gradient criterion.
/// The last iterate is kept so callers can still report on it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, FittedModel last)
      : Error(what), last_(std::move(last)) {}
  const char* code() const noexcept override { return "convergence"; }
  const FittedModel& last_iterate() const noexcept { return last_; }

 private:
  FittedModel last_;
};

struct FitOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  double loglik_tolerance = 1e-10;
  int max_halvings = 30;
  double separation_bound = 1e3;
  // Natural-scale starting point (beta..., tau...). Defaults to beta = 0
  // with the null-model thresholds.
  std::optional<Eigen::VectorXd> start;
};

/// Log-likelihood with its gradient and Hessian in the natural parameters,
/// ordered (beta_1..beta_p, tau_1..tau_{r-1}).
struct LoglikDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinProbability = 1e-300;

inline double cdf_ext(LinkKind link, double z) {
  if (z == kInf) return 1.0;
  if (z == -kInf) return 0.0;
  return link == LinkKind::Probit ? probit_cdf(z) : logit_cdf(z);
}

inline double pdf_ext(LinkKind link, double z) {
  if (!std::isfinite(z)) return 0.0;
  return link == LinkKind::Probit ? probit_pdf(z) : logit_pdf(z);
}

inline double dpdf_ext(LinkKind link, double z) {
  if (!std::isfinite(z)) return 0.0;
  if (link == LinkKind::Probit) return -z * probit_pdf(z);
  return logit_pdf(z) * (1.0 - 2.0 * logit_cdf(z));
}

// F(upper) - F(lower), taken from the survival side when both ends sit in
// the right tail so that small probabilities keep their relative accuracy.
inline double interval_probability(LinkKind link, double lower, double upper) {
  const double p = lower > 0.0 ? cdf_ext(link, -lower) - cdf_ext(link, -upper)
                               : cdf_ext(link, upper) - cdf_ext(link, lower);
  return std::max(p, kMinProbability);
}

inline double lower_cut(const Eigen::VectorXd& tau, int code) {
  return code > 1 ? tau(code - 2) : -kInf;
}
inline double upper_cut(const Eigen::VectorXd& tau, int code) {
  return code <= tau.size() ? tau(code - 1) : kInf;
}

inline void require_increasing(const Eigen::VectorXd& tau) {
  for (Eigen::Index j = 1; j < tau.size(); ++j) {
    if (!(tau(j) > tau(j - 1))) throw OrderingError("thresholds are not strictly increasing");
  }
  for (Eigen::Index j = 0; j < tau.size(); ++j) {
    if (!std::isfinite(tau(j))) throw OrderingError("threshold is not finite");
  }
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

inline void require_full_rank(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd design = with_intercept(x);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw SingularDesignError("design matrix (with intercept) is rank deficient");
  }
}

inline std::vector<long> count_categories(std::span<const int> response, int categories) {
  std::vector<long> counts(static_cast<std::size_t>(categories), 0);
  for (int c : response) {
    if (c < 1 || c > categories) throw DomainError("response code outside 1..r");
    ++counts[static_cast<std::size_t>(c - 1)];
  }
  return counts;
}

inline double null_loglik_closed_form(const std::vector<long>& counts) {
  long n = 0;
  for (long c : counts) n += c;
  double value = 0.0;
  for (long c : counts) {
    if (c == 0) throw DegenerateNullError("a response category has no observations");
    value += static_cast<double>(c) * std::log(static_cast<double>(c) / static_cast<double>(n));
  }
  return value;
}

inline double loglik_value(LinkKind link, const Eigen::MatrixXd& x, std::span<const int> y,
                           const Eigen::VectorXd& beta, const Eigen::VectorXd& tau) {
  const Eigen::VectorXd eta = x * beta;
  double value = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const int code = y[static_cast<std::size_t>(i)];
    value += std::log(interval_probability(link, lower_cut(tau, code) - eta(i),
                                           upper_cut(tau, code) - eta(i)));
  }
  return value;
}

// Expected (Fisher) information in the natural parameters.
inline Eigen::MatrixXd expected_information(LinkKind link, const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& beta,
                                            const Eigen::VectorXd& tau) {
  const Eigen::Index p = x.cols();
  const Eigen::Index m = tau.size();
  const int r = static_cast<int>(m) + 1;
  const Eigen::VectorXd eta = x * beta;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p + m, p + m);
  Eigen::VectorXd dp(p + m);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    for (int k = 1; k <= r; ++k) {
      const double lo = lower_cut(tau, k) - eta(i);
      const double hi = upper_cut(tau, k) - eta(i);
      const double prob = interval_probability(link, lo, hi);
      const double fu = pdf_ext(link, hi);
      const double fl = pdf_ext(link, lo);
      dp.setZero();
      dp.head(p) = -(fu - fl) * x.row(i).transpose();
      if (k <= m) dp(p + k - 1) += fu;
      if (k >= 2) dp(p + k - 2) -= fl;
      info.noalias() += dp * dp.transpose() / prob;
    }
  }
  return info;
}

inline LoglikDerivatives loglik_grad_hess(LinkKind link, const Eigen::MatrixXd& x,
                                          std::span<const int> y, const Eigen::VectorXd& beta,
                                          const Eigen::VectorXd& tau, bool with_hessian) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index m = tau.size();
  const Eigen::VectorXd eta = x * beta;

  LoglikDerivatives out;
  out.gradient = Eigen::VectorXd::Zero(p + m);
  if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(p + m, p + m);

  Eigen::VectorXd beta_weight(n);  // d2/deta2 per observation
  Eigen::VectorXd eta_score(n);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, m);

  for (Eigen::Index i = 0; i < n; ++i) {
    const int code = y[static_cast<std::size_t>(i)];
    const double hi = upper_cut(tau, code) - eta(i);
    const double lo = lower_cut(tau, code) - eta(i);
    const double prob = interval_probability(link, lo, hi);
    out.value += std::log(prob);

    const double la = pdf_ext(link, hi) / prob;
    const double lb = -pdf_ext(link, lo) / prob;
    eta_score(i) = -(la + lb);
    if (code <= m) out.gradient(p + code - 1) += la;
    if (code >= 2) out.gradient(p + code - 2) += lb;

    if (!with_hessian) continue;
    const double laa = dpdf_ext(link, hi) / prob - la * la;
    const double lbb = -dpdf_ext(link, lo) / prob - lb * lb;
    const double lab = -la * lb;
    beta_weight(i) = laa + 2.0 * lab + lbb;
    auto& h = out.hessian;
    if (code <= m) {
      h(p + code - 1, p + code - 1) += laa;
      if (p > 0) cross.col(code - 1) -= (laa + lab) * x.row(i).transpose();
    }
    if (code >= 2) {
      h(p + code - 2, p + code - 2) += lbb;
      if (p > 0) cross.col(code - 2) -= (lab + lbb) * x.row(i).transpose();
    }
    if (code >= 2 && code <= m) {
      h(p + code - 1, p + code - 2) += lab;
      h(p + code - 2, p + code - 1) += lab;
    }
  }
  if (p > 0) {
    out.gradient.head(p) = x.transpose() * eta_score;
    if (with_hessian) {
      out.hessian.topLeftCorner(p, p) = x.transpose() * beta_weight.asDiagonal() * x;
      out.hessian.topRightCorner(p, m) = cross;
      out.hessian.bottomLeftCorner(m, p) = cross.transpose();
    }
  }
  return out;
}

inline Eigen::MatrixXd category_probabilities(LinkKind link, const Eigen::VectorXd& eta,
                                              const Eigen::VectorXd& tau) {
  const int r = static_cast<int>(tau.size()) + 1;
  Eigen::MatrixXd probs(eta.size(), r);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double total = 0.0;
    for (int k = 1; k <= r; ++k) {
      const double lo = lower_cut(tau, k) - eta(i);
      const double hi = upper_cut(tau, k) - eta(i);
      const double prob = lo > 0.0 ? cdf_ext(link, -lo) - cdf_ext(link, -hi)
                                   : cdf_ext(link, hi) - cdf_ext(link, lo);
      probs(i, k - 1) = std::max(prob, 0.0);
      total += probs(i, k - 1);
    }
    probs.row(i) /= total;
  }
  return probs;
}

// Unconstrained coordinates: (beta, tau_1, log(tau_2 - tau_1), ...).
inline Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& beta, const Eigen::VectorXd& tau) {
  Eigen::VectorXd psi(beta.size() + tau.size());
  psi.head(beta.size()) = beta;
  psi(beta.size()) = tau(0);
  for (Eigen::Index j = 1; j < tau.size(); ++j) psi(beta.size() + j) = std::log(tau(j) - tau(j - 1));
  return psi;
}

inline Eigen::VectorXd thresholds_from(const Eigen::VectorXd& psi, Eigen::Index p) {
  const Eigen::Index m = psi.size() - p;
  Eigen::VectorXd tau(m);
  tau(0) = psi(p);
  for (Eigen::Index j = 1; j < m; ++j) tau(j) = tau(j - 1) + std::exp(psi(p + j));
  return tau;
}

// d(beta, tau) / d(psi)
inline Eigen::MatrixXd reparam_jacobian(const Eigen::VectorXd& psi, Eigen::Index p) {
  const Eigen::Index m = psi.size() - p;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p + m, p + m);
  jac.topLeftCorner(p, p).setIdentity();
  for (Eigen::Index j = 0; j < m; ++j) {
    jac(p + j, p) = 1.0;
    for (Eigen::Index k = 1; k <= j; ++k) jac(p + j, p + k) = std::exp(psi(p + k));
  }
  return jac;
}

inline double rounding_slack(double value) {
  return 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value));
}

// Every observation predicted into its own category with near certainty.
inline bool separated(const FittedModel& model, double bound) {
  if (model.beta.size() > 0 && model.beta.norm() > bound) return true;
  if (model.beta.size() == 0) return false;
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const int code = model.response[static_cast<std::size_t>(i)];
    if (model.fitted_probs(i, code - 1) < 1.0 - 1e-6) return false;
  }
  return true;
}

}  // namespace detail

/// Value, gradient and Hessian of the ordinal log-likelihood at (beta, tau).
/// Throws OrderingError unless tau is strictly increasing.
inline LoglikDerivatives loglik_grad_hess(const Dataset& data, LinkKind link,
                                          const Eigen::VectorXd& beta, const Eigen::VectorXd& tau) {
  if (data.kind != ResponseKind::Ordinal) throw SchemaError("ordinal response required");
  if (beta.size() != data.p() || tau.size() != data.categories - 1) {
    throw SchemaError("parameter dimensions do not match the dataset");
  }
  detail::require_increasing(tau);
  return detail::loglik_grad_hess(link, data.x, data.ordinal, beta, tau, true);
}

/// Ordinary least squares with intercept; R^2 = 1 - RSS/TSS.
inline LinearFit fit_ols(const Dataset& data) {
  if (data.kind != ResponseKind::Continuous) throw SchemaError("continuous response required");
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (n <= p + 1) throw SingularDesignError("need more observations than parameters");
  const Eigen::VectorXd& y = data.continuous;

  LinearFit fit;
  fit.names = data.names;
  const double mean = y.mean();
  fit.total_ss = (y.array() - mean).square().sum();
  if (!(fit.total_ss > 0.0)) throw DegenerateResponseError("response is constant");

  if (p == 0) {
    fit.beta_tilde = Eigen::VectorXd::Constant(1, mean);
    fit.fitted = Eigen::VectorXd::Constant(n, mean);
  } else {
    const Eigen::MatrixXd design = detail::with_intercept(data.x);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) {
      throw SingularDesignError("design matrix (with intercept) is rank deficient");
    }
    fit.beta_tilde = qr.solve(y);
    fit.fitted = design * fit.beta_tilde;
  }
  fit.residual_ss = std::min((y - fit.fitted).squaredNorm(), fit.total_ss);
  fit.r2_ols = 1.0 - fit.residual_ss / fit.total_ss;
  return fit;
}

/// Thresholds-only model in closed form: tau_j = F^{-1}(cumulative share),
/// loglik = sum_j n_j log(n_j / n).
inline FittedModel fit_null(std::span<const int> response, int categories, LinkKind link) {
  if (categories < 2) throw DegenerateNullError("need at least two response categories");
  if (response.empty()) throw EmptyDataError("empty response");
  const auto counts = detail::count_categories(response, categories);
  const double loglik = detail::null_loglik_closed_form(counts);
  const double n = static_cast<double>(response.size());

  FittedModel model;
  model.link = link;
  model.categories = categories;
  model.beta = Eigen::VectorXd(0);
  model.tau.resize(categories - 1);
  long cumulative = 0;
  for (int j = 0; j < categories - 1; ++j) {
    cumulative += counts[static_cast<std::size_t>(j)];
    model.tau(j) = quantile(link, static_cast<double>(cumulative) / n);
  }
  model.loglik = loglik;
  model.null_loglik = loglik;
  model.linear_predictors = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(response.size()));
  model.fitted_probs = Eigen::MatrixXd(model.linear_predictors.size(), categories);
  for (int j = 0; j < categories; ++j) {
    model.fitted_probs.col(j).setConstant(static_cast<double>(counts[static_cast<std::size_t>(j)]) / n);
  }
  model.response.assign(response.begin(), response.end());
  model.converged = true;
  return model;
}

inline FittedModel fit_null(const Dataset& data, LinkKind link) {
  if (data.kind != ResponseKind::Ordinal) throw SchemaError("ordinal response required");
  return fit_null(data.ordinal, data.categories, link);
}

/// Category probabilities of `data` under `model`; columns must match the fit.
inline Eigen::MatrixXd predict_probs(const FittedModel& model, const Dataset& data) {
  if (data.names != model.names) throw SchemaError("predictor columns do not match the fitted model");
  return detail::category_probabilities(model.link, data.x * model.beta, model.tau);
}

/// Maximum-likelihood cumulative-link fit. Newton steps in unconstrained
/// threshold coordinates with step halving; Fisher scoring whenever the
/// observed Hessian is not negative definite.
inline FittedModel fit_clm(const Dataset& data, LinkKind link, const FitOptions& options = {}) {
  if (data.kind != ResponseKind::Ordinal) throw SchemaError("ordinal response required");
  if (data.categories < 2) throw DegenerateNullError("need at least two response categories");
  const FittedModel null_model = fit_null(data, link);
  if (data.p() > 0) detail::require_full_rank(data.x);

  const Eigen::Index p = data.p();
  const Eigen::MatrixXd& x = data.x;
  const std::span<const int> y(data.ordinal);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd tau = null_model.tau;
  if (options.start) {
    if (options.start->size() != p + tau.size()) throw SchemaError("starting vector has wrong length");
    beta = options.start->head(p);
    tau = options.start->tail(tau.size());
    detail::require_increasing(tau);
  }
  Eigen::VectorXd psi = detail::to_unconstrained(beta, tau);

  auto split = [&](const Eigen::VectorXd& v, Eigen::VectorXd& b, Eigen::VectorXd& t) {
    b = v.head(p);
    t = detail::thresholds_from(v, p);
  };

  LoglikDerivatives current = detail::loglik_grad_hess(link, x, y, beta, tau, true);
  int iterations = 0;
  int fisher_steps = 0;
  bool separation = false;

  while (iterations < options.max_iterations) {
    if (current.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    const Eigen::MatrixXd jac = detail::reparam_jacobian(psi, p);
    const Eigen::VectorXd grad_psi = jac.transpose() * current.gradient;
    Eigen::MatrixXd neg_hess = -(jac.transpose() * current.hessian * jac);
    // Curvature of the exp() map on the log-increments.
    for (Eigen::Index k = 1; k < tau.size(); ++k) {
      neg_hess(p + k, p + k) -= std::exp(psi(p + k)) * current.gradient.tail(tau.size() - k).sum();
    }

    Eigen::VectorXd step;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(grad_psi);
    } else {
      const Eigen::MatrixXd info = jac.transpose() * detail::expected_information(link, x, beta, tau) * jac;
      step = info.ldlt().solve(grad_psi);
      ++fisher_steps;
    }

    double scale = 1.0;
    bool improved = false;
    Eigen::VectorXd trial;
    double trial_value = current.value;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      trial = psi + scale * step;
      Eigen::VectorXd b, t;
      split(trial, b, t);
      trial_value = detail::loglik_value(link, x, y, b, t);
      if (std::isfinite(trial_value) && trial_value > current.value) {
        improved = true;
        break;
      }
      // Near the optimum a full step can be lost in rounding of the sum;
      // accept it if it still shrinks the gradient.
      if (h == 0 && std::isfinite(trial_value) && trial_value >= current.value - detail::rounding_slack(current.value)) {
        const auto at_trial = detail::loglik_grad_hess(link, x, y, b, t, false);
        if (at_trial.gradient.lpNorm<Eigen::Infinity>() < current.gradient.lpNorm<Eigen::Infinity>()) {
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;

    const double gain = trial_value - current.value;
    psi = trial;
    split(psi, beta, tau);
    current = detail::loglik_grad_hess(link, x, y, beta, tau, true);
    ++iterations;

    if (beta.size() > 0 && beta.norm() > options.separation_bound) {
      separation = true;
      break;
    }
    // A full Newton step that barely moves the likelihood is still making
    // quadratic progress on the gradient; only halved steps stop here.
    if (gain < options.loglik_tolerance && scale < 1.0) break;
  }

  FittedModel model;
  model.link = link;
  model.names = data.names;
  model.categories = data.categories;
  model.beta = beta;
  model.tau = tau;
  model.loglik = current.value;
  model.null_loglik = null_model.null_loglik;
  model.linear_predictors = x * beta;
  model.fitted_probs = detail::category_probabilities(link, model.linear_predictors, tau);
  model.response = data.ordinal;
  model.iterations = iterations;
  model.gradient_norm = current.gradient.lpNorm<Eigen::Infinity>();
  model.fisher_steps = fisher_steps;
  model.converged = model.gradient_norm < options.gradient_tolerance;
  model.separation_warning = separation || detail::separated(model, options.separation_bound);

  if (!model.converged && !model.separation_warning) {
    throw ConvergenceError("cumulative-link fit did not converge after " +
                               std::to_string(iterations) + " iterations (gradient norm " +
                               std::to_string(model.gradient_norm) + ")",
                           std::move(model));
  }
  return model;
}

/// Binary GLM P(y = 2) = F(alpha + x'beta) fitted directly by Newton-Raphson.
/// Same likelihood as `fit_clm` at r = 2, with tau_1 = -alpha.
inline FittedModel fit_binary_glm(const Dataset& data, LinkKind link, const FitOptions& options = {}) {
  if (data.kind != ResponseKind::Ordinal || data.categories != 2) {
    throw SchemaError("binary response coded 1/2 required");
  }
  const FittedModel null_model = fit_null(data, link);
  if (data.p() > 0) detail::require_full_rank(data.x);

  const Eigen::MatrixXd design = detail::with_intercept(data.x);
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();

  auto evaluate = [&](const Eigen::VectorXd& coef, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const Eigen::VectorXd eta = design * coef;
    Eigen::VectorXd score(n), weight(n);
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool event = data.ordinal[static_cast<std::size_t>(i)] == 2;
      // log F(eta) for events, log F(-eta) otherwise
      const double z = event ? eta(i) : -eta(i);
      const double prob = std::max(detail::cdf_ext(link, z), detail::kMinProbability);
      const double dens = detail::pdf_ext(link, z);
      const double ratio = dens / prob;
      value += std::log(prob);
      score(i) = event ? ratio : -ratio;
      weight(i) = detail::dpdf_ext(link, z) / prob - ratio * ratio;
    }
    if (grad) *grad = design.transpose() * score;
    if (hess) *hess = design.transpose() * weight.asDiagonal() * design;
    return value;
  };

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
  coef(0) = -null_model.tau(0);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double value = evaluate(coef, &grad, &hess);
  int iterations = 0;
  bool separation = false;
  while (iterations < options.max_iterations) {
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;
    const Eigen::VectorXd step = (-hess).ldlt().solve(grad);
    double scale = 1.0;
    bool improved = false;
    double trial_value = value;
    Eigen::VectorXd trial;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      trial = coef + scale * step;
      trial_value = evaluate(trial, nullptr, nullptr);
      if (std::isfinite(trial_value) && trial_value > value) {
        improved = true;
        break;
      }
      if (h == 0 && std::isfinite(trial_value) && trial_value >= value - detail::rounding_slack(value)) {
        Eigen::VectorXd trial_grad;
        evaluate(trial, &trial_grad, nullptr);
        if (trial_grad.lpNorm<Eigen::Infinity>() < grad.lpNorm<Eigen::Infinity>()) {
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;
    const double gain = trial_value - value;
    coef = trial;
    value = evaluate(coef, &grad, &hess);
    ++iterations;
    if (k > 1 && coef.tail(k - 1).norm() > options.separation_bound) {
      separation = true;
      break;
    }
    if (gain < options.loglik_tolerance && scale < 1.0) break;
  }

  FittedModel model;
  model.link = link;
  model.names = data.names;
  model.categories = 2;
  model.beta = coef.tail(k - 1);
  model.tau = Eigen::VectorXd::Constant(1, -coef(0));
  model.loglik = value;
  model.null_loglik = null_model.null_loglik;
  model.linear_predictors = data.x * model.beta;
  model.fitted_probs = detail::category_probabilities(link, model.linear_predictors, model.tau);
  model.response = data.ordinal;
  model.iterations = iterations;
  model.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  model.converged = model.gradient_norm < options.gradient_tolerance;
  model.separation_warning = separation || detail::separated(model, options.separation_bound);
  if (!model.converged && !model.separation_warning) {
    throw ConvergenceError("binary GLM fit did not converge", std::move(model));
  }
  return model;
}

}  // namespace ordr2
