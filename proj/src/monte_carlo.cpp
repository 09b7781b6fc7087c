#include "segreg/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "segreg/errors.hpp"
#include "segreg/parallel.hpp"

namespace segreg {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::A: return "A";
    case Setting::B: return "B";
    case Setting::C: return "C";
  }
  return "?";
}

Setting parse_setting(const std::string& s) {
  if (s == "A" || s == "a") return Setting::A;
  if (s == "B" || s == "b") return Setting::B;
  if (s == "C" || s == "c") return Setting::C;
  throw InvalidConfig("unknown setting: " + s);
}

double true_threshold(Setting s) { return s == Setting::A ? 0.0 : 2.0; }

Dataset simulate_dgp(const DgpSetting& cfg, Rng& rng) {
  if (cfg.n < 50) throw InvalidConfig("simulation needs n >= 50");
  if (!std::isfinite(cfg.delta)) throw InvalidConfig("delta must be finite");
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const double tau0 = cfg.tau0();
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd q(n), e(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = tau0 + normal(rng);
  Eigen::MatrixXd middle(n, cfg.setting == Setting::C ? 1 : 0);
  if (cfg.setting == Setting::C) {
    for (Eigen::Index i = 0; i < n; ++i) middle(i, 0) = 2.0 + normal(rng);
  }
  for (Eigen::Index i = 0; i < n; ++i) e[i] = normal(rng);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = std::fabs(q[i]) * e[i];
    const double z = cfg.setting == Setting::C ? middle(i, 0) : q[i];
    const double jump = q[i] > tau0 ? cfg.delta * z : 0.0;
    y[i] = 2.0 + 3.0 * z + jump + u;
  }
  return Dataset::from_parts(std::move(y), middle, q);
}

double DeltaSchedule::at(std::size_t n) const {
  return scale * std::pow(static_cast<double>(n), -exponent);
}

DeltaSchedule DeltaSchedule::fixed(double value) {
  std::ostringstream label;
  label << "fixed " << value;
  return {label.str(), value, 0.0};
}
DeltaSchedule DeltaSchedule::quarter(double scale, std::string label) {
  return {std::move(label), scale, 0.25};
}
DeltaSchedule DeltaSchedule::half(double scale, std::string label) {
  return {std::move(label), scale, 0.5};
}
DeltaSchedule DeltaSchedule::zero() { return {"0", 0.0, 0.0}; }

std::vector<DeltaSchedule> size_schedules() {
  const double c = std::sqrt(10.0) / 4.0;
  return {DeltaSchedule::fixed(2.0), DeltaSchedule::quarter(c, "n^-1/4 sqrt10/4"),
          DeltaSchedule::half(c, "n^-1/2 sqrt10/4"), DeltaSchedule::zero()};
}

std::vector<DeltaSchedule> power_schedules() {
  const double r = std::sqrt(10.0);
  return {DeltaSchedule::quarter(r / 4.0, "n^-1/4 sqrt10/4"),
          DeltaSchedule::quarter(r / 2.0, "n^-1/4 sqrt10/2"),
          DeltaSchedule::quarter(r, "n^-1/4 sqrt10"), DeltaSchedule::fixed(2.0)};
}

void ExperimentConfig::validate() const {
  if (replications < 100) throw InvalidConfig("experiments need at least 100 replications");
  if (schedules.empty() || n_values.empty()) throw InvalidConfig("empty experiment grid");
  for (const double s : sizes) {
    if (!(s > 0.0 && s < 1.0)) throw InvalidConfig("nominal sizes must lie in (0, 1)");
  }
  for (const auto n : n_values) {
    if (n < 50) throw InvalidConfig("experiments need n >= 50");
  }
}

std::vector<double> warp_speed_rates(std::span<const double> t_stats,
                                     std::span<const double> boot_stats,
                                     std::span<const double> sizes) {
  if (t_stats.size() != boot_stats.size()) {
    throw InvalidConfig("t_stats and boot_stats lengths differ");
  }
  if (t_stats.empty()) throw InvalidConfig("no replications");
  std::vector<double> sorted(boot_stats.begin(), boot_stats.end());
  std::sort(sorted.begin(), sorted.end());
  const auto R = static_cast<double>(sorted.size());
  std::vector<double> rates;
  rates.reserve(sizes.size());
  for (const double s : sizes) {
    // 1-based index ceil((1 - s) R); the slack absorbs binary representation
    // error in (1 - s) R.
    auto k = static_cast<std::size_t>(std::ceil((1.0 - s) * R - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    const double cv = sorted[k - 1];
    std::size_t reject = 0;
    for (const double t : t_stats) reject += t > cv ? 1 : 0;
    rates.push_back(static_cast<double>(reject) / R);
  }
  return rates;
}

WarpDraw warp_speed_replication(const DgpSetting& dgp, const GridOptions& grid_opts,
                                MultiplierDistribution dist, Rng& rng) {
  const Dataset ds = simulate_dgp(dgp, rng);
  const ThresholdGrid grid = build_grid(ds, grid_opts);
  const FitResult fu = fit(ds, grid, false);
  const FitResult fc = fit(ds, grid, true);
  WarpDraw w;
  w.t_n = tn_statistic(ds.n(), fc.ssr_min, fu.ssr_min);
  const BootstrapDraw b = bootstrap_statistic(ds, fu, fc, grid, dist, rng);
  if (b.degenerate) throw DegenerateFit("bootstrap sample fits perfectly");
  w.t_star = b.statistic;
  return w;
}

SizePowerTable size_power_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  SizePowerTable table;
  table.setting = cfg.setting;
  table.replications = cfg.replications;
  table.sizes = cfg.sizes;

  const std::size_t R = cfg.replications;
  for (std::size_t si = 0; si < cfg.schedules.size(); ++si) {
    for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
      const std::size_t row_id = si * cfg.n_values.size() + ni;
      const DgpSetting dgp{cfg.setting, cfg.n_values[ni], cfg.schedules[si].at(cfg.n_values[ni])};
      std::vector<WarpDraw> draws(R);
      std::vector<char> ok(R, 0);
      parallel_for(R, [&](std::size_t r) {
        Rng rng = derive_stream(cfg.seed, {row_id, r});
        try {
          draws[r] = warp_speed_replication(dgp, cfg.grid, cfg.multiplier, rng);
          ok[r] = 1;
        } catch (const DataError&) {
          ok[r] = 0;
        }
      });
      std::vector<double> t, tb;
      for (std::size_t r = 0; r < R; ++r) {
        if (!ok[r]) continue;
        t.push_back(draws[r].t_n);
        tb.push_back(draws[r].t_star);
      }
      SizePowerRow row;
      row.schedule = cfg.schedules[si].label;
      row.n = dgp.n;
      row.delta = dgp.delta;
      row.failures = R - t.size();
      row.flagged = static_cast<double>(row.failures) > 0.01 * static_cast<double>(R);
      if (!t.empty()) {
        row.rates = warp_speed_rates(t, tb, cfg.sizes);
      } else {
        row.rates.assign(cfg.sizes.size(), std::nan(""));
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidConfig("slope needs >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidConfig("slope needs distinct x values");
  return sxy / sxx;
}

RateStudyResult rate_study(const RateStudyConfig& cfg) {
  if (cfg.n_values.size() < 3) throw InvalidConfig("rate study needs at least 3 sample sizes");
  if (!std::is_sorted(cfg.n_values.begin(), cfg.n_values.end()) ||
      std::adjacent_find(cfg.n_values.begin(), cfg.n_values.end()) != cfg.n_values.end()) {
    throw InvalidConfig("rate study sample sizes must be strictly increasing");
  }
  if (cfg.replications == 0) throw InvalidConfig("rate study needs replications");
  RateStudyResult res;
  res.n_values = cfg.n_values;
  const double tau0 = true_threshold(cfg.setting);
  std::vector<double> log_n, log_err;
  for (const std::size_t n : cfg.n_values) {
    std::vector<double> err(cfg.replications, std::nan(""));
    parallel_for(cfg.replications, [&](std::size_t r) {
      Rng rng = derive_stream(cfg.seed, {n, r});
      try {
        const Dataset ds = simulate_dgp({cfg.setting, n, cfg.delta}, rng);
        const FitResult f = fit(ds, build_grid(ds, cfg.grid), cfg.constrained);
        err[r] = std::fabs(f.theta.tau - tau0);
      } catch (const DataError&) {
      }
    });
    std::vector<double> good;
    for (const double e : err)
      if (!std::isnan(e)) good.push_back(e);
    double total = 0.0;
    for (const double e : good) total += e;
    res.failures += err.size() - good.size();
    if (good.empty()) throw SingularDesign("every replication failed at n = " + std::to_string(n));
    const auto mid = good.begin() + static_cast<std::ptrdiff_t>(good.size() / 2);
    std::nth_element(good.begin(), mid, good.end());
    double med = *mid;
    if (good.size() % 2 == 0) {
      med = 0.5 * (med + *std::max_element(good.begin(), mid));
    }
    res.median_abs_error.push_back(med);
    res.mean_abs_error.push_back(good.empty() ? std::nan("") : total / static_cast<double>(good.size()));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_err.push_back(std::log(med));
  }
  res.slope = ols_slope(log_n, log_err);
  return res;
}

}  // namespace segreg
