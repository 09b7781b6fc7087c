// segreg: threshold regression with a bootstrap test of continuity.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "segreg/asymptotics.hpp"
#include "segreg/cli_io.hpp"
#include "segreg/continuity_test.hpp"
#include "segreg/errors.hpp"
#include "segreg/estimation.hpp"
#include "segreg/kernels.hpp"
#include "segreg/monte_carlo.hpp"
#include "segreg/parallel.hpp"

namespace {

using nlohmann::json;
using namespace segreg;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

struct Common {
  std::string grid = "observed";
  double trim = 0.10;
  std::size_t points = 0;
  std::size_t boot = 999;
  std::string multiplier = "rademacher";
  std::uint64_t seed = 1;
  std::size_t reps = 2000;
  std::string out;
};

void add_grid_flags(CLI::App* cmd, Common& c, const std::string& default_grid) {
  c.grid = default_grid;
  cmd->add_option("--grid", c.grid, "threshold grid: observed or equidistant")
      ->check(CLI::IsMember({"observed", "equidistant"}))
      ->capture_default_str();
  cmd->add_option("--trim", c.trim, "total fraction of extreme Q values discarded")
      ->capture_default_str();
  cmd->add_option("--points", c.points, "equidistant grid size (0 = n/2)")->capture_default_str();
}

GridOptions grid_options(const Common& c) {
  return {parse_grid_strategy(c.grid), c.trim, c.points, std::nullopt};
}

json fingerprint(const std::string& command, const Common& c) {
  return {{"command", command},
          {"grid", c.grid},
          {"trim", c.trim},
          {"points", c.points},
          {"boot", c.boot},
          {"multiplier", c.multiplier},
          {"seed", c.seed},
          {"reps", c.reps},
          {"simd", std::string(kernels::isa_name(kernels::active_isa()))}};
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit(const std::string& out, const json& j, const std::string& csv = {}) {
  if (out.empty()) return;
  if (ends_with(out, ".csv")) {
    if (csv.empty()) throw InvalidConfig("this command writes JSON; use a .json output path");
    write_text(out, csv);
  } else {
    write_text(out, j.dump(2) + "\n");
  }
}

std::vector<std::size_t> parse_sizes(const std::vector<std::size_t>& v,
                                     std::vector<std::size_t> fallback) {
  return v.empty() ? fallback : v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold regression: jump and kink fits, continuity test, simulations"};
  app.require_subcommand(1);
  Common c;

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "estimate the threshold model");
  std::string data;
  bool constrained = false;
  fit_cmd->add_option("--data", data, "CSV with columns y[,x...],q")->required();
  fit_cmd->add_flag("--constrained", constrained, "impose continuity (kink model)");
  add_grid_flags(fit_cmd, c, "observed");
  fit_cmd->add_option("--out", c.out, "write JSON result");

  // test
  auto* test_cmd = app.add_subcommand("test", "bootstrap test of continuity");
  test_cmd->add_option("--data", data, "CSV with columns y[,x...],q")->required();
  add_grid_flags(test_cmd, c, "observed");
  test_cmd->add_option("--boot", c.boot, "bootstrap draws B")->capture_default_str();
  test_cmd->add_option("--multiplier", c.multiplier, "rademacher, mammen or gaussian")
      ->check(CLI::IsMember({"rademacher", "mammen", "gaussian"}))
      ->capture_default_str();
  test_cmd->add_option("--seed", c.seed)->capture_default_str();
  test_cmd->add_option("--out", c.out, "write JSON report");

  // Monte Carlo
  std::vector<std::size_t> n_values;
  std::string setting_name = "B";
  auto* size_cmd = app.add_subcommand("mc-size", "size table under the kink design (Setting A)");
  auto* power_cmd = app.add_subcommand("mc-power", "power table under a jump design (B or C)");
  for (auto* cmd : {size_cmd, power_cmd}) {
    add_grid_flags(cmd, c, "equidistant");
    cmd->add_option("--reps", c.reps, "warp-speed replications")->capture_default_str();
    cmd->add_option("--seed", c.seed)->capture_default_str();
    cmd->add_option("--n", n_values, "sample sizes")->delimiter(',');
    cmd->add_option("--multiplier", c.multiplier)
        ->check(CLI::IsMember({"rademacher", "mammen", "gaussian"}))
        ->capture_default_str();
    cmd->add_option("--out", c.out, "write table (.csv or .json)");
  }
  power_cmd->add_option("--setting", setting_name, "B or C")
      ->check(CLI::IsMember({"B", "C"}))
      ->capture_default_str();

  auto* rate_cmd = app.add_subcommand("mc-rate", "convergence rate of the threshold estimator");
  std::string rate_setting = "A";
  double rate_delta = 2.0;
  rate_cmd->add_option("--setting", rate_setting)->check(CLI::IsMember({"A", "B", "C"}))->capture_default_str();
  rate_cmd->add_option("--delta", rate_delta)->capture_default_str();
  rate_cmd->add_option("--n", n_values, "sample sizes")->delimiter(',');
  rate_cmd->add_flag("--constrained", constrained, "use the kink estimator");
  rate_cmd->add_option("--reps", c.reps)->capture_default_str();
  rate_cmd->add_option("--seed", c.seed)->capture_default_str();
  add_grid_flags(rate_cmd, c, "observed");
  rate_cmd->add_option("--out", c.out, "write JSON result");

  // limit
  auto* limit_cmd = app.add_subcommand("limit", "simulate the limit laws");
  std::string limit_kind = "kink";
  double a = 1.0, b = 1.0, g_max = 0.0;
  std::size_t n_grid = 5000, draws = 1000;
  std::string r_row = "as-printed";
  limit_cmd->add_option("kind", limit_kind, "kink (threshold estimator) or tn (T_n)")
      ->check(CLI::IsMember({"kink", "tn"}))
      ->capture_default_str();
  limit_cmd->add_option("--a", a, "noise scale")->capture_default_str();
  limit_cmd->add_option("--b", b, "cubic penalty")->capture_default_str();
  limit_cmd->add_option("--data", data, "dataset for plug-in estimates (tn)");
  limit_cmd->add_option("--gmax", g_max, "half-width of the g grid (0 = 10 (a/b)^(2/3))");
  limit_cmd->add_option("--grid-size", n_grid, "grid points per side")->capture_default_str();
  limit_cmd->add_option("--draws", draws)->capture_default_str();
  limit_cmd->add_option("--r-row", r_row, "third row of R: as-printed or delta-only")
      ->check(CLI::IsMember({"as-printed", "delta-only"}))
      ->capture_default_str();
  limit_cmd->add_option("--seed", c.seed)->capture_default_str();
  limit_cmd->add_option("--out", c.out, "write draws (.csv) or summary (.json)");

  // bound
  auto* bound_cmd = app.add_subcommand("bound", "l1-minimax lower bound");
  BoundInputs bound;
  bound_cmd->add_option("--n", bound.n)->required();
  bound_cmd->add_option("--varphi", bound.varphi)->capture_default_str();
  bound_cmd->add_option("--kappa0", bound.kappa0)->required();
  bound_cmd->add_option("--sigma2", bound.sigma_lower2, "lower bound on sigma^2(tau)")->required();
  bound_cmd->add_option("--fbar", bound.f_upper, "upper bound on the density of Q")->required();
  bound_cmd->add_option("--eta", bound.eta, "diameter of the threshold space")->required();
  bound_cmd->add_option("--out", c.out);

  // empirics
  auto* emp_cmd = app.add_subcommand("empirics", "growth/debt analysis: jump and kink fits, test");
  EmpiricsSpec spec;
  std::string residuals_out;
  emp_cmd->add_option("--data", data, "CSV with year, growth and debt columns")->required();
  emp_cmd->add_option("--year-col", spec.year_column)->capture_default_str();
  emp_cmd->add_option("--growth-col", spec.growth_column)->capture_default_str();
  emp_cmd->add_option("--debt-col", spec.debt_column)->capture_default_str();
  emp_cmd->add_option("--boot", spec.bootstrap)->capture_default_str();
  emp_cmd->add_option("--multiplier", c.multiplier)
      ->check(CLI::IsMember({"rademacher", "mammen", "gaussian"}))
      ->capture_default_str();
  emp_cmd->add_option("--seed", spec.seed)->capture_default_str();
  emp_cmd->add_option("--residuals", residuals_out, "AR(1) residual scatter data (CSV)");
  add_grid_flags(emp_cmd, c, "observed");
  emp_cmd->add_option("--out", c.out, "write JSON report");

  auto* res_cmd = app.add_subcommand("export-residuals", "AR(1) residuals of growth against debt");
  res_cmd->add_option("--data", data)->required();
  res_cmd->add_option("--year-col", spec.year_column)->capture_default_str();
  res_cmd->add_option("--growth-col", spec.growth_column)->capture_default_str();
  res_cmd->add_option("--debt-col", spec.debt_column)->capture_default_str();
  res_cmd->add_option("--out", c.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const MultiplierDistribution mult{parse_multiplier(c.multiplier)};
    if (*fit_cmd) {
      const Dataset ds = read_dataset_csv(data);
      const ThresholdGrid grid = build_grid(ds, grid_options(c));
      const FitResult f = fit(ds, grid, constrained);
      const RobustSe se = robust_standard_errors(ds, f);
      std::cout << format_fit(f, &se);
      json j = {{"config", fingerprint("fit", c)}, {"fit", to_json(f)}, {"robust_se", to_json(se)}};
      j["config"]["constrained"] = constrained;
      j["config"]["data"] = data;
      emit(c.out, j);
    } else if (*test_cmd) {
      const Dataset ds = read_dataset_csv(data);
      const ThresholdGrid grid = build_grid(ds, grid_options(c));
      const TestReport r = run_test(ds, grid, c.boot, mult, c.seed);
      std::cout << format_test(r);
      json j = {{"config", fingerprint("test", c)}, {"report", to_json(r)}};
      j["config"]["data"] = data;
      emit(c.out, j);
    } else if (*size_cmd || *power_cmd) {
      ExperimentConfig cfg;
      cfg.replications = c.reps;
      cfg.seed = c.seed;
      cfg.grid = grid_options(c);
      cfg.multiplier = mult;
      if (*size_cmd) {
        cfg.setting = Setting::A;
        cfg.schedules = size_schedules();
        cfg.n_values = parse_sizes(n_values, {100, 250, 500, 1000});
      } else {
        cfg.setting = parse_setting(setting_name);
        cfg.schedules = power_schedules();
        cfg.n_values = parse_sizes(n_values, {100, 250, 500});
      }
      const SizePowerTable t = size_power_experiment(cfg);
      std::cout << format_table(t);
      json j = {{"config", fingerprint(*size_cmd ? "mc-size" : "mc-power", c)}, {"table", to_json(t)}};
      j["config"]["setting"] = to_string(cfg.setting);
      j["config"]["n"] = cfg.n_values;
      emit(c.out, j, table_csv(t));
    } else if (*rate_cmd) {
      RateStudyConfig cfg;
      cfg.setting = parse_setting(rate_setting);
      cfg.delta = rate_delta;
      cfg.n_values = parse_sizes(n_values, {250, 1000, 4000});
      cfg.replications = c.reps;
      cfg.seed = c.seed;
      cfg.constrained = constrained;
      cfg.grid = grid_options(c);
      const RateStudyResult r = rate_study(cfg);
      std::cout << "Setting " << rate_setting << ", delta " << rate_delta
                << (constrained ? ", constrained" : ", unconstrained") << " estimator\n";
      for (std::size_t i = 0; i < r.n_values.size(); ++i) {
        std::printf("  n = %6zu   median |tau - tau0| = %.6g   mean = %.6g\n", r.n_values[i],
                    r.median_abs_error[i], r.mean_abs_error[i]);
      }
      std::printf("  log-log slope = %.4f\n", r.slope);
      json j = {{"config", fingerprint("mc-rate", c)}, {"result", to_json(r)}};
      j["config"]["setting"] = rate_setting;
      j["config"]["delta"] = rate_delta;
      j["config"]["constrained"] = constrained;
      emit(c.out, j);
    } else if (*limit_cmd) {
      std::vector<double> values;
      std::vector<char> flagged;
      json summary = {{"config", fingerprint("limit", c)}};
      summary["config"]["kind"] = limit_kind;
      summary["config"]["draws"] = draws;
      summary["config"]["grid_size"] = n_grid;
      if (limit_kind == "kink") {
        const double gm = g_max > 0.0 ? g_max : KinkScale{a, b}.recommended_g_max();
        for (std::size_t k = 0; k < draws; ++k) {
          Rng rng = derive_stream(c.seed, {k});
          const KinkDraw d = kink_limit_draw(a, b, gm, n_grid, rng);
          values.push_back(d.argmin);
          flagged.push_back(d.flagged);
        }
        summary["config"]["a"] = a;
        summary["config"]["b"] = b;
        summary["config"]["g_max"] = gm;
      } else {
        if (data.empty()) throw InvalidConfig("limit tn needs --data for plug-in estimates");
        const Dataset ds = read_dataset_csv(data);
        const FitResult fc = fit(ds, build_grid(ds, grid_options(c)), true);
        const auto est = estimate_limit_params(
            ds, fc, r_row == "as-printed" ? RRowConvention::as_printed : RRowConvention::delta_only);
        const TnLimitSimulator sim(est.params, g_max, n_grid);
        for (std::size_t k = 0; k < draws; ++k) {
          Rng rng = derive_stream(c.seed, {k});
          const TnLimitDraw d = sim.draw(rng);
          values.push_back(d.value);
          flagged.push_back(d.flagged);
        }
        summary["plug_in"] = {{"tau0", est.tau0},         {"d30", est.params.d30},
                              {"sigma2_tau0", est.params.sigma2_tau0},
                              {"f_tau0", est.params.f_tau0}, {"sigma2", est.params.sigma2},
                              {"bandwidth", est.bandwidth}};
        summary["config"]["g_max"] = sim.g_max();
      }
      std::size_t n_flagged = 0;
      for (const char f : flagged) n_flagged += f ? 1 : 0;
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      auto quant = [&](double p) { return sorted[static_cast<std::size_t>(p * (sorted.size() - 1))]; };
      std::printf("%zu draws (%s)\n", values.size(), limit_kind.c_str());
      for (const double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        std::printf("  q%-4g %.6g\n", p, quant(p));
      }
      if (n_flagged > 0) {
        std::printf("  warning: %zu draws landed in the outer 5%% of the grid; widen --gmax\n", n_flagged);
      }
      summary["flagged"] = n_flagged;
      summary["draws"] = values;
      std::ostringstream csv;
      csv << "draw,value,flagged\n";
      for (std::size_t k = 0; k < values.size(); ++k) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, values[k]);
        csv << k << ',' << std::string_view(buf, res.ptr) << ',' << (flagged[k] ? 1 : 0) << '\n';
      }
      emit(c.out, summary, csv.str());
    } else if (*bound_cmd) {
      const bool cube = minimax_cube_root_regime(bound);
      const double v = minimax_lower_bound(bound);
      std::printf("l1-minimax lower bound: %.10g (%s branch)\n", v,
                  cube ? "cube-root" : "eta/4");
      emit(c.out, {{"config",
                    {{"command", "bound"},
                     {"n", bound.n},
                     {"varphi", bound.varphi},
                     {"kappa0", bound.kappa0},
                     {"sigma2", bound.sigma_lower2},
                     {"fbar", bound.f_upper},
                     {"eta", bound.eta}}},
                   {"bound", v},
                   {"cube_root_branch", cube}});
    } else if (*emp_cmd) {
      spec.input = data;
      c.boot = spec.bootstrap;
      c.seed = spec.seed;
      spec.grid = grid_options(c);
      spec.multiplier = mult;
      spec.residual_output = residuals_out;
      const EmpiricsReport r = run_empirics(spec);
      std::cout << format_empirics(r);
      json j = {{"config", fingerprint("empirics", c)}, {"report", to_json(r)}};
      j["config"]["data"] = data;
      emit(c.out, j);
    } else if (*res_cmd) {
      const GrowthDebtSeries s = read_growth_debt(data, spec);
      const Ar1Residuals r = ar1_residual_export(s.growth, s.debt, c.out);
      std::printf("AR(1): y_t = %.6g + %.6g y_{t-1}; wrote %zu rows to %s\n", r.intercept, r.slope,
                  r.residual.size(), c.out.c_str());
      if (r.mean_fallback) {
        std::fprintf(stderr, "warning: growth series is constant; residuals are deviations from the mean\n");
      }
    }
  } catch (const InvalidConfig& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
