#pragma once

// JSON views of fitted models and reports. Requires nlohmann/json.

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "ordr2/estimation.hpp"
#include "ordr2/gof.hpp"

namespace ordr2 {

using json = nlohmann::json;

namespace detail {

inline json to_array(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd from_array(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

}  // namespace detail

inline json to_json(const GofReport& report) {
  json j;
  j["n"] = report.n;
  j["r"] = report.r;
  j["loglik_full"] = report.loglik_full;
  j["loglik_null"] = report.loglik_null;
  j["gamma_r"] = report.gamma_r;
  j["g_statistic"] = report.g_statistic;
  j["measures"] = report.measures;
  j["unavailable"] = report.unavailable;
  j["flags"] = report.flags;
  return j;
}

/// Everything needed to rebuild the model without the data: parameters,
/// linear predictors and the observed codes.
inline json model_to_json(const FittedModel& model) {
  json j;
  j["link"] = std::string(to_string(model.link));
  j["categories"] = model.categories;
  j["names"] = model.names;
  j["beta"] = detail::to_array(model.beta);
  j["tau"] = detail::to_array(model.tau);
  j["linear_predictors"] = detail::to_array(model.linear_predictors);
  j["response"] = model.response;
  j["loglik"] = model.loglik;
  j["null_loglik"] = model.null_loglik;
  j["convergence"] = {{"converged", model.converged},
                      {"iterations", model.iterations},
                      {"gradient_norm", model.gradient_norm},
                      {"fisher_steps", model.fisher_steps},
                      {"separation_warning", model.separation_warning}};
  return j;
}

/// Inverse of `model_to_json`. Log-likelihoods are recomputed from the
/// stored parameters; the null value always comes from the closed form.
inline FittedModel model_from_json(const json& j) {
  FittedModel model;
  try {
    model.link = parse_link(j.at("link").get<std::string>());
    model.categories = j.at("categories").get<int>();
    model.names = j.at("names").get<std::vector<std::string>>();
    model.beta = detail::from_array(j.at("beta"));
    model.tau = detail::from_array(j.at("tau"));
    model.linear_predictors = detail::from_array(j.at("linear_predictors"));
    model.response = j.at("response").get<std::vector<int>>();
    const json& conv = j.at("convergence");
    model.converged = conv.at("converged").get<bool>();
    model.iterations = conv.at("iterations").get<int>();
    model.gradient_norm = conv.at("gradient_norm").get<double>();
    model.fisher_steps = conv.value("fisher_steps", 0);
    model.separation_warning = conv.at("separation_warning").get<bool>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model JSON: ") + e.what());
  }
  if (model.tau.size() != model.categories - 1 || model.beta.size() != static_cast<Eigen::Index>(model.names.size()) ||
      model.linear_predictors.size() != static_cast<Eigen::Index>(model.response.size())) {
    throw SchemaError("model JSON has inconsistent dimensions");
  }
  detail::require_increasing(model.tau);
  const auto counts = detail::count_categories(model.response, model.categories);
  model.null_loglik = detail::null_loglik_closed_form(counts);
  model.fitted_probs = detail::category_probabilities(model.link, model.linear_predictors, model.tau);
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const int code = model.response[static_cast<std::size_t>(i)];
    loglik += std::log(detail::interval_probability(model.link, detail::lower_cut(model.tau, code) - model.linear_predictors(i),
                                                    detail::upper_cut(model.tau, code) - model.linear_predictors(i)));
  }
  model.loglik = loglik;
  return model;
}

}  // namespace ordr2
