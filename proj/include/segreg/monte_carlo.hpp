#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segreg/continuity_test.hpp"
#include "segreg/core_model.hpp"
#include "segreg/estimation.hpp"
#include "segreg/rng.hpp"

namespace segreg {

// Simulation designs, all with U = |Q| e and e ~ N(0, 1):
//   A: Y = 2 + 3Q + delta Q 1{Q > 0} + U,   Q ~ N(0, 1)            (kink)
//   B: Y = 2 + 3Q + delta Q 1{Q > 2} + U,   Q ~ N(2, 1)            (jump)
//   C: Y = 2 + 3X + delta X 1{Q > 2} + U,   Q, X ~ N(2, 1) indep.  (jump)
// Regressors are (1, Q) for A and B and (1, X, Q) for C.
enum class Setting { A, B, C };

std::string to_string(Setting s);
Setting parse_setting(const std::string& s);
double true_threshold(Setting s);

struct DgpSetting {
  Setting setting = Setting::A;
  std::size_t n = 100;
  double delta = 2.0;

  double tau0() const { return true_threshold(setting); }
};

Dataset simulate_dgp(const DgpSetting& cfg, Rng& rng);

/// delta(n) = scale * n^(-exponent).
struct DeltaSchedule {
  std::string label;
  double scale = 0.0;
  double exponent = 0.0;

  double at(std::size_t n) const;

  static DeltaSchedule fixed(double value);
  static DeltaSchedule quarter(double scale, std::string label);
  static DeltaSchedule half(double scale, std::string label);
  static DeltaSchedule zero();
};

/// Schedules of the published tables: size study (A) and power studies (B, C).
std::vector<DeltaSchedule> size_schedules();
std::vector<DeltaSchedule> power_schedules();

struct ExperimentConfig {
  Setting setting = Setting::A;
  std::vector<DeltaSchedule> schedules;
  std::vector<std::size_t> n_values;
  std::vector<double> sizes{0.1, 0.05, 0.01};
  std::size_t replications = 2000;
  std::uint64_t seed = 1;
  GridOptions grid{GridStrategy::equidistant, 0.10, 0, std::nullopt};
  MultiplierDistribution multiplier;

  void validate() const;
};

struct SizePowerRow {
  std::string schedule;
  std::size_t n = 0;
  double delta = 0.0;
  std::vector<double> rates;  // one per nominal size
  std::size_t failures = 0;
  bool flagged = false;       // more than 1% of replications failed
};

struct SizePowerTable {
  Setting setting = Setting::A;
  std::size_t replications = 0;
  std::vector<double> sizes;
  std::vector<SizePowerRow> rows;
};

/// Critical value for size s is the order statistic of boot_stats at 1-based
/// index ceil((1 - s) R); rejection is t > cv.
std::vector<double> warp_speed_rates(std::span<const double> t_stats,
                                     std::span<const double> boot_stats,
                                     std::span<const double> sizes);

struct WarpDraw {
  double t_n = 0.0;
  double t_star = 0.0;
};

/// One replication: simulate, fit both estimators, T_n and a single T_n*.
/// Throws on estimator failure.
WarpDraw warp_speed_replication(const DgpSetting& dgp, const GridOptions& grid,
                                MultiplierDistribution dist, Rng& rng);

SizePowerTable size_power_experiment(const ExperimentConfig& cfg);

struct RateStudyConfig {
  Setting setting = Setting::A;
  double delta = 2.0;
  std::vector<std::size_t> n_values{250, 1000, 4000};
  std::size_t replications = 400;
  std::uint64_t seed = 1;
  bool constrained = false;
  GridOptions grid{GridStrategy::observed, 0.10, 0, std::nullopt};
};

struct RateStudyResult {
  std::vector<std::size_t> n_values;
  std::vector<double> median_abs_error;
  std::vector<double> mean_abs_error;  // empirical l1 risk
  double slope = 0.0;  // least-squares slope of log(median) on log(n)
  std::size_t failures = 0;
};

RateStudyResult rate_study(const RateStudyConfig& cfg);

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace segreg
