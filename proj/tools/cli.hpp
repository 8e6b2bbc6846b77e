#pragma once

// Command dispatch for the ordr2 executable; kept in a header so the test
// suite can drive commands in-process.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ordr2/json_io.hpp"
#include "ordr2/ordr2.hpp"

namespace ordr2::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNumericalWarning = 2 };

/// "2..10" or "100,500,1000" (ranges may be mixed with single values).
inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        std::size_t used = 0;
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const int lo = std::stoi(item.substr(0, dots));
        const int hi = std::stoi(item.substr(dots + 2));
        if (hi < lo) throw DomainError("empty range '" + item + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw DomainError("cannot parse integer list '" + text + "'");
    }
  }
  if (out.empty()) throw DomainError("empty list");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!detail::parse_number(detail::trim(item), v)) throw DomainError("cannot parse number list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError("empty list");
  return out;
}

inline std::vector<PenaltySpec> parse_penalty_list(const std::string& text) {
  std::vector<PenaltySpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_penalty(detail::trim(item)));
  }
  return out;
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw ParseError("cannot write '" + path + "'");
  file << text;
}

/// Fit summary: parameters, log-likelihoods, convergence record and report.
inline json fit_summary(const FittedModel& model, const GofReport& report, const std::string& kind) {
  json j;
  j["kind"] = kind;
  j["link"] = std::string(to_string(model.link));
  j["n"] = model.n();
  j["r"] = model.categories;
  json coefficients = json::object();
  for (std::size_t k = 0; k < model.names.size(); ++k) coefficients[model.names[k]] = model.beta(static_cast<Eigen::Index>(k));
  j["coefficients"] = coefficients;
  j["thresholds"] = detail::to_array(model.tau);
  if (model.categories == 2) j["intercept"] = model.intercept();
  j["loglik"] = model.loglik;
  j["null_loglik"] = model.null_loglik;
  j["convergence"] = model_to_json(model)["convergence"];
  j["gof"] = to_json(report);
  j["model"] = model_to_json(model);
  return j;
}

inline json linear_summary(const LinearFit& fit) {
  json j;
  j["kind"] = "linear";
  j["n"] = fit.fitted.size();
  json coefficients = json::object();
  coefficients["(Intercept)"] = fit.beta_tilde(0);
  for (std::size_t k = 0; k < fit.names.size(); ++k) coefficients[fit.names[k]] = fit.beta_tilde(static_cast<Eigen::Index>(k + 1));
  j["coefficients"] = coefficients;
  j["residual_ss"] = fit.residual_ss;
  j["total_ss"] = fit.total_ss;
  j["r2_ols"] = fit.r2_ols;
  j["gof"] = {{"measures", {{"ols", fit.r2_ols}}}};
  return j;
}

inline std::uint64_t resolve_seed(const std::string& flag) {
  std::string text = flag;
  if (text.empty()) {
    if (const char* env = std::getenv("ORDR2_SEED")) text = env;
  }
  if (text.empty()) return 1;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw DomainError("invalid seed '" + text + "'");
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cumulative-link models and pseudo-R^2 measures", "ordr2"};
  app.require_subcommand(1);

  // fit
  std::string data_path, response, kind = "ordinal", link_name = "probit", penalties = "l1,l2,l3,l4,l5,l6", out_path;
  auto* fit = app.add_subcommand("fit", "Fit a linear, binary or ordinal model and report R^2 measures");
  fit->add_option("--data", data_path, "CSV file with a header row")->required();
  fit->add_option("--response", response, "Response column")->required();
  fit->add_option("--kind", kind, "binary | ordinal | linear")->check(CLI::IsMember({"binary", "ordinal", "linear"}));
  fit->add_option("--link", link_name, "probit | logit")->check(CLI::IsMember({"probit", "logit"}));
  fit->add_option("--penalties", penalties, "Comma list: l0..l6, const:<value>");
  fit->add_option("--out", out_path, "JSON output (default stdout)");

  // gof
  std::string model_path, gof_penalties = "l1,l2,l3,l4,l5,l6", gof_out;
  auto* gof = app.add_subcommand("gof", "Recompute measures from a saved fit JSON");
  gof->add_option("--model", model_path, "JSON written by `fit`")->required();
  gof->add_option("--penalties", gof_penalties, "Comma list: l0..l6, const:<value>");
  gof->add_option("--out", gof_out, "JSON output (default stdout)");

  // simulate
  std::string setting = "a", n_list = "100,500,1000", sigma_list = "1,2,3,4", r_list = "2..10", seed_text,
              sim_link = "probit", sim_penalties = "l1,l2,l3,l4,l5,l6,const:3", rows_path, agg_path;
  int reps = 200, noise = 0;
  unsigned threads = 0;
  bool full_scale = false;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo study on latent-variable data");
  sim->add_option("--setting", setting, "a (two uniforms) | b (mixed normal/uniform)")->check(CLI::IsMember({"a", "b"}));
  sim->add_option("--n", n_list, "Sample sizes, e.g. 100,500,1000");
  sim->add_option("--sigma", sigma_list, "Latent error standard deviations");
  sim->add_option("--r", r_list, "Category counts, e.g. 2..10");
  sim->add_option("--reps", reps, "Replications per cell");
  sim->add_flag("--full-scale", full_scale, "Use 1000 replications");
  sim->add_option("--noise", noise, "Extra pure-noise U(0,1) covariates in the fitted model");
  sim->add_option("--seed", seed_text, "Master seed (falls back to $ORDR2_SEED)");
  sim->add_option("--link", sim_link, "probit | logit")->check(CLI::IsMember({"probit", "logit"}));
  sim->add_option("--penalties", sim_penalties, "Comma list: l0..l6, const:<value>");
  sim->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sim->add_option("--out-rows", rows_path, "Long-format CSV");
  sim->add_option("--out-agg", agg_path, "Aggregate CSV (default stdout)");

  // penalty-table
  int r_max = 10;
  std::string table_out;
  auto* table = app.add_subcommand("penalty-table", "Penalty curves lambda_k(r), k = 1..6");
  table->add_option("--r-max", r_max, "Largest r")->check(CLI::Range(2, 1000000));
  table->add_option("--out", table_out, "CSV output (default stdout)");

  // preprocess-sensory
  std::string raw_path, prefix;
  SensoryPipelineSpec pipeline;
  auto* sensory = app.add_subcommand("preprocess-sensory", "Build binary/ordinal/linear datasets from raw ratings");
  sensory->add_option("--data", raw_path, "Raw CSV (rating, androstenone, skatole)")->required();
  sensory->add_option("--rating", pipeline.rating_column, "Average rating column");
  sensory->add_option("--androstenone", pipeline.androstenone_column, "Androstenone column");
  sensory->add_option("--skatole", pipeline.skatole_column, "Skatole column");
  sensory->add_option("--cutpoint", pipeline.dichotomy_cutpoint, "Ratings >= cutpoint are coded 2");
  sensory->add_option("--out-prefix", prefix, "Writes <prefix>_binary.csv, _ordinal.csv, _linear.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (fit->parsed()) {
      const auto type = parse_response_type(kind);
      const Dataset data = load_csv(data_path, response, type);
      if (type == ResponseType::Continuous) {
        emit(out_path, linear_summary(fit_ols(data)).dump(2) + "\n", out);
        return kOk;
      }
      const auto specs = parse_penalty_list(penalties);
      const LinkKind link = parse_link(link_name);
      int status = kOk;
      FittedModel model;
      try {
        model = fit_clm(data, link);
        if (model.separation_warning) {
          err << "warning: possible separation (coefficients diverging)\n";
          status = kNumericalWarning;
        }
      } catch (const ConvergenceError& e) {
        err << "warning: " << e.what() << "\n";
        model = e.last_iterate();
        status = kNumericalWarning;
      }
      emit(out_path, fit_summary(model, gof_report(model, specs), kind).dump(2) + "\n", out);
      return status;
    }
    if (gof->parsed()) {
      std::ifstream in(model_path);
      if (!in) throw ParseError("cannot open '" + model_path + "'");
      json saved;
      try {
        saved = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
      }
      const json& model_json = saved.contains("model") ? saved.at("model") : saved;
      const FittedModel model = model_from_json(model_json);
      const auto specs = parse_penalty_list(gof_penalties);
      emit(gof_out, to_json(gof_report(model, specs)).dump(2) + "\n", out);
      return model.converged ? kOk : kNumericalWarning;
    }
    if (sim->parsed()) {
      SimConfig config;
      config.setting = parse_setting(setting);
      config.n_grid = parse_int_list(n_list);
      config.sigma_grid = parse_double_list(sigma_list);
      config.r_grid = parse_int_list(r_list);
      config.replications = full_scale ? 1000 : reps;
      config.noise_covariates = noise;
      config.link = parse_link(sim_link);
      config.penalties = parse_penalty_list(sim_penalties);
      config.seed = resolve_seed(seed_text);
      config.threads = threads;
      config.validate();
      const ExperimentResult result = run_experiment(config);
      if (!rows_path.empty()) {
        std::ostringstream rows;
        write_rows_csv(rows, result.rows);
        emit(rows_path, rows.str(), out);
      }
      std::ostringstream agg;
      write_aggregate_csv(agg, result.aggregates);
      emit(agg_path, agg.str(), out);
      for (const auto& a : result.aggregates) {
        if (a.measure == "flagged" && a.mean > 0.0) {
          err << "note: n=" << a.n << " sigma=" << a.sigma << " r=" << a.r << ": " << a.mean * 100.0
              << "% of replications flagged\n";
        }
      }
      return kOk;
    }
    if (table->parsed()) {
      std::ostringstream csv;
      csv << "penalty_id,r,value\n";
      for (int k = 1; k <= 6; ++k) {
        const auto spec = PenaltySpec::candidate(k);
        for (int r = 2; r <= r_max; ++r) {
          csv << "l" << k << ',' << r << ',' << detail::format_full(penalty(spec, r)) << '\n';
        }
      }
      emit(table_out, csv.str(), out);
      return kOk;
    }
    if (sensory->parsed()) {
      const Dataset raw = load_csv(raw_path, pipeline.rating_column, ResponseType::Continuous);
      const SensoryData result = preprocess_sensory(raw, pipeline);
      save_csv(prefix + "_binary.csv", result.binary);
      save_csv(prefix + "_ordinal.csv", result.ordinal);
      save_csv(prefix + "_linear.csv", result.linear);
      err << "excluded " << result.excluded_androstenone_zero << " rows with androstenone = 0";
      if (result.excluded_skatole_zero > 0) err << " and " << result.excluded_skatole_zero << " rows with skatole = 0";
      err << "; kept " << result.linear.n() << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace ordr2::cli
