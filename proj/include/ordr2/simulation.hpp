#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ordr2/dataset.hpp"
#include "ordr2/errors.hpp"
#include "ordr2/estimation.hpp"
#include "ordr2/gof.hpp"
#include "ordr2/links.hpp"

namespace ordr2 {

enum class Setting { SingleDistribution, MixedDistribution };

inline std::string setting_id(Setting s) { return s == Setting::SingleDistribution ? "a" : "b"; }

inline Setting parse_setting(std::string_view text) {
  if (text == "a") return Setting::SingleDistribution;
  if (text == "b") return Setting::MixedDistribution;
  throw DomainError("unknown setting '" + std::string(text) + "' (expected a or b)");
}

/// Latent coefficients (intercept first) of the generating model.
inline Eigen::VectorXd true_coefficients(Setting s) {
  if (s == Setting::SingleDistribution) return Eigen::Vector3d(0.0, 1.0, 2.0);
  Eigen::VectorXd beta(6);
  beta << 0.0, -1.0 / 3.0, -2.0 / 3.0, -1.0, 1.0, 2.0;
  return beta;
}

struct SimConfig {
  Setting setting = Setting::SingleDistribution;
  std::vector<int> n_grid{100, 500, 1000};
  std::vector<double> sigma_grid{1.0, 2.0, 3.0, 4.0};
  std::vector<int> r_grid{2, 3, 4, 5, 6, 7, 8, 9, 10};
  int replications = 200;
  int noise_covariates = 0;
  LinkKind link = LinkKind::Probit;
  std::vector<PenaltySpec> penalties = [] {
    auto specs = default_penalties();
    specs.push_back(PenaltySpec::constant(3.0));
    return specs;
  }();
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (n_grid.empty() || sigma_grid.empty() || r_grid.empty()) throw DomainError("empty simulation grid");
    for (int n : n_grid) {
      if (n < 2) throw DomainError("sample sizes must be >= 2");
    }
    for (double s : sigma_grid) {
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("sigma values must be positive");
    }
    for (int r : r_grid) {
      if (r < 2) throw DomainError("category counts must be >= 2");
      for (int n : n_grid) {
        if (n < r) throw DomainError("every sample size must be >= every category count");
      }
    }
    if (replications < 1) throw DomainError("replications must be positive");
    if (noise_covariates < 0) throw DomainError("noise covariate count must be nonnegative");
  }
};

struct SimResultRow {
  Setting setting = Setting::SingleDistribution;
  int n = 0;
  double sigma = 0.0;
  int r = 0;
  int rep = 0;
  std::string measure;
  double value = 0.0;
  std::string flag;
};

struct AggregateRow {
  Setting setting = Setting::SingleDistribution;
  int n = 0;
  double sigma = 0.0;
  int r = 0;
  std::string measure;
  double mean = 0.0;
  double sd = 0.0;
  long count = 0;
};

// Counter-based seed derivation: each stream is a pure function of the
// master seed and its coordinates, never of the rest of the grid.
namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

}  // namespace detail

enum class StreamPurpose : std::uint64_t { Latent = 1, Noise = 2 };

inline std::mt19937_64 replication_stream(std::uint64_t seed, Setting setting, int n, double sigma,
                                          int rep, StreamPurpose purpose) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::mix(h, static_cast<std::uint64_t>(setting));
  h = detail::mix(h, static_cast<std::uint64_t>(n));
  h = detail::mix(h, std::bit_cast<std::uint64_t>(sigma));
  h = detail::mix(h, static_cast<std::uint64_t>(rep));
  h = detail::mix(h, static_cast<std::uint64_t>(purpose));
  return std::mt19937_64(h);
}

/// Draws covariates for the setting and y~ = x'beta~ + eps, eps ~ N(0, sigma).
/// sigma = 0 yields the noiseless linear predictor.
inline Dataset gen_latent(Setting setting, int n, double sigma, std::mt19937_64& rng) {
  if (n < 2) throw DomainError("gen_latent: n must be >= 2");
  if (sigma < 0.0) throw DomainError("gen_latent: sigma must be nonnegative");
  const Eigen::VectorXd beta = true_coefficients(setting);
  const Eigen::Index k = beta.size() - 1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const bool gaussian = setting == Setting::MixedDistribution && j < 3;
      x(i, j) = gaussian ? normal(rng) : unif(rng);
    }
  }
  Eigen::VectorXd y = (x * beta.tail(k)).array() + beta(0);
  if (sigma > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * normal(rng);
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < k; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset::continuous_response(std::move(names), std::move(x), std::move(y), "y_latent");
}

inline Dataset gen_latent(const SimConfig& config, int n, double sigma, std::mt19937_64& rng) {
  return gen_latent(config.setting, n, sigma, rng);
}

/// Equal-probability bins: cut-points are the type-7 empirical quantiles at
/// j/r; a value equal to a cut-point goes to the lower category.
inline std::vector<int> discretize(std::span<const double> values, int r) {
  if (r < 2) throw DomainError("discretize: r must be >= 2");
  const std::size_t n = values.size();
  if (n < static_cast<std::size_t>(r)) throw DomainError("discretize: need n >= r");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts(static_cast<std::size_t>(r - 1));
  for (int j = 1; j < r; ++j) {
    const double h = static_cast<double>(n - 1) * j / r;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    cuts[static_cast<std::size_t>(j - 1)] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  std::vector<int> codes(n);
  std::vector<long> counts(static_cast<std::size_t>(r), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto above = std::lower_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin();
    codes[i] = static_cast<int>(above) + 1;
    ++counts[static_cast<std::size_t>(above)];
  }
  for (int j = 0; j < r; ++j) {
    if (counts[static_cast<std::size_t>(j)] == 0) {
      throw DegenerateDiscretizationError("category " + std::to_string(j + 1) + " is empty after discretization");
    }
  }
  return codes;
}

/// One replication of one grid cell: OLS on the latent data, then the
/// categorical fit on the discretized response, emitting every measure and
/// its error relative to the latent R^2 as "delta:<id>".
inline std::vector<SimResultRow> run_replication(const SimConfig& config, int n, double sigma, int r, int rep) {
  auto latent_rng = replication_stream(config.seed, config.setting, n, sigma, rep, StreamPurpose::Latent);
  const Dataset latent = gen_latent(config, n, sigma, latent_rng);

  std::vector<SimResultRow> rows;
  auto emit = [&](const std::string& measure, double value, const std::string& flag) {
    rows.push_back({config.setting, n, sigma, r, rep, measure, value, flag});
  };

  const LinearFit ols = fit_ols(latent);
  emit("ols", ols.r2_ols, "");

  Eigen::MatrixXd design = latent.x;
  std::vector<std::string> names = latent.names;
  if (config.noise_covariates > 0) {
    auto noise_rng = replication_stream(config.seed, config.setting, n, sigma, rep, StreamPurpose::Noise);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index k = design.cols();
    design.conservativeResize(Eigen::NoChange, k + config.noise_covariates);
    for (Eigen::Index j = k; j < design.cols(); ++j) {
      for (Eigen::Index i = 0; i < n; ++i) design(i, j) = unif(noise_rng);
      names.push_back("noise" + std::to_string(j - k + 1));
    }
  }

  FittedModel model;
  std::string flag;
  try {
    auto codes = discretize(std::span<const double>(latent.continuous.data(), static_cast<std::size_t>(n)), r);
    const Dataset observed = Dataset::ordinal_response(names, design, std::move(codes), r);
    try {
      model = fit_clm(observed, config.link);
      if (model.separation_warning) flag = "separation";
    } catch (const ConvergenceError& e) {
      model = e.last_iterate();
      flag = "not-converged";
    }
  } catch (const Error& e) {
    emit("fit", std::nan(""), std::string("error:") + e.code());
    return rows;
  }

  const GofReport report = gof_report(model, config.penalties);
  std::vector<std::string> order{"mf", "cs", "nk", "mz"};
  if (r == 2) order.push_back("tj");
  for (const auto& spec : config.penalties) order.push_back(spec.id());
  for (const auto& id : order) {
    if (!report.has(id)) continue;
    emit(id, report.at(id), flag);
  }
  for (const auto& id : order) {
    if (!report.has(id)) continue;
    emit("delta:" + id, report.at(id) - ols.r2_ols, flag);
  }
  return rows;
}

/// Raw rows of every (n, sigma, r, replication), in grid order.
inline std::vector<SimResultRow> run_rows(const SimConfig& config) {
  config.validate();
  struct Task {
    int n;
    double sigma;
    int r;
    int rep;
  };
  std::vector<Task> tasks;
  for (int n : config.n_grid) {
    for (double sigma : config.sigma_grid) {
      for (int r : config.r_grid) {
        for (int rep = 0; rep < config.replications; ++rep) tasks.push_back({n, sigma, r, rep});
      }
    }
  }

  std::vector<std::vector<SimResultRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      results[t] = run_replication(config, task.n, task.sigma, task.r, task.rep);
    }
  };
  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  std::vector<SimResultRow> rows;
  for (auto& chunk : results) {
    for (auto& row : chunk) rows.push_back(std::move(row));
  }
  return rows;
}

/// Mean, sd (n - 1 denominator, 0 for a single value) and count per
/// (n, sigma, r, measure), plus a "flagged" row holding the fraction of
/// replications whose fit was flagged. Rows are ordered by grid position,
/// then measure id.
inline std::vector<AggregateRow> aggregate(const SimConfig& config, const std::vector<SimResultRow>& rows) {
  struct Key {
    std::size_t cell;
    std::string measure;
    auto operator<=>(const Key&) const = default;
  };
  auto cell_index = [&](const SimResultRow& row) {
    const auto ni = std::find(config.n_grid.begin(), config.n_grid.end(), row.n) - config.n_grid.begin();
    const auto si = std::find(config.sigma_grid.begin(), config.sigma_grid.end(), row.sigma) - config.sigma_grid.begin();
    const auto ri = std::find(config.r_grid.begin(), config.r_grid.end(), row.r) - config.r_grid.begin();
    return (static_cast<std::size_t>(ni) * config.sigma_grid.size() + static_cast<std::size_t>(si)) *
               config.r_grid.size() +
           static_cast<std::size_t>(ri);
  };

  std::map<Key, std::vector<double>> values;
  std::map<std::size_t, std::map<int, bool>> flagged;  // cell -> rep -> flagged
  std::map<std::size_t, const SimResultRow*> exemplar;
  for (const auto& row : rows) {
    const std::size_t cell = cell_index(row);
    exemplar.try_emplace(cell, &row);
    auto& f = flagged[cell][row.rep];
    f = f || !row.flag.empty();
    if (std::isfinite(row.value)) values[{cell, row.measure}].push_back(row.value);
  }

  std::vector<AggregateRow> out;
  auto make = [&](std::size_t cell, const std::string& measure, double mean, double sd, long count) {
    const SimResultRow& ex = *exemplar.at(cell);
    out.push_back({ex.setting, ex.n, ex.sigma, ex.r, measure, mean, sd, count});
  };
  std::size_t last_cell = static_cast<std::size_t>(-1);
  auto close_cell = [&](std::size_t cell) {
    const auto& reps = flagged.at(cell);
    long bad = 0;
    for (const auto& [rep, f] : reps) bad += f ? 1 : 0;
    make(cell, "flagged", static_cast<double>(bad) / static_cast<double>(reps.size()), 0.0,
         static_cast<long>(reps.size()));
  };
  for (const auto& [key, vals] : values) {
    if (key.cell != last_cell) {
      if (last_cell != static_cast<std::size_t>(-1)) close_cell(last_cell);
      last_cell = key.cell;
    }
    double sum = 0.0;
    for (double v : vals) sum += v;
    const double mean = sum / static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
    make(key.cell, key.measure, mean, sd, static_cast<long>(vals.size()));
  }
  if (last_cell != static_cast<std::size_t>(-1)) close_cell(last_cell);
  return out;
}

struct ExperimentResult {
  std::vector<SimResultRow> rows;
  std::vector<AggregateRow> aggregates;

  /// Mean of `measure` in the cell, or NaN when absent.
  double mean(int n, double sigma, int r, const std::string& measure) const {
    for (const auto& a : aggregates) {
      if (a.n == n && a.sigma == sigma && a.r == r && a.measure == measure) return a.mean;
    }
    return std::nan("");
  }
};

inline ExperimentResult run_experiment(const SimConfig& config) {
  ExperimentResult result;
  result.rows = run_rows(config);
  result.aggregates = aggregate(config, result.rows);
  return result;
}

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_short(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline void write_rows_csv(std::ostream& out, const std::vector<SimResultRow>& rows) {
  out << "setting,n,sigma,r,rep,measure,value,flag\n";
  for (const auto& row : rows) {
    out << setting_id(row.setting) << ',' << row.n << ',' << detail::format_short(row.sigma) << ',' << row.r
        << ',' << row.rep << ',' << row.measure << ',' << detail::format_double(row.value) << ',' << row.flag
        << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "setting,n,sigma,r,measure,mean,sd,count\n";
  for (const auto& row : rows) {
    out << setting_id(row.setting) << ',' << row.n << ',' << detail::format_short(row.sigma) << ',' << row.r
        << ',' << row.measure << ',' << detail::format_double(row.mean) << ',' << detail::format_double(row.sd)
        << ',' << row.count << '\n';
  }
}

}  // namespace ordr2
