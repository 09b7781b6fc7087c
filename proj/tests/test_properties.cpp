#include <doctest.h>

#include <cstdlib>

#include "segreg/continuity_test.hpp"
#include "segreg/kernels.hpp"
#include "segreg/monte_carlo.hpp"
#include "support/oracle.hpp"

using namespace segreg;

TEST_CASE("T_n is non-negative") {
  const Setting settings[] = {Setting::A, Setting::B, Setting::C};
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng = derive_stream(100, {r});
    const Setting s = settings[r % 3];
    const std::size_t n = 50 + (r * 37) % 200;
    const double delta = (r % 5) * 0.5;
    const Dataset ds = simulate_dgp({s, n, delta}, rng);
    const ThresholdGrid grid = build_grid(ds);
    const double t = tn_statistic(ds.n(), fit(ds, grid, true).ssr_min, fit(ds, grid, false).ssr_min);
    CHECK(t >= 0.0);
  }
}

TEST_CASE("threshold estimate shifts with Q in the three-regressor design") {
  Rng rng = derive_stream(7, {});
  const Dataset ds = simulate_dgp({Setting::C, 200, 1.0}, rng);
  const FitResult base = fit(ds, build_grid(ds), false);
  Eigen::MatrixXd x = ds.x();
  x.col(2).array() += 5.0;
  const Dataset shifted(ds.y(), x);
  const FitResult f = fit(shifted, build_grid(shifted), false);
  CHECK(f.theta.tau == doctest::Approx(base.theta.tau + 5.0).epsilon(1e-12));
}

TEST_CASE("results do not depend on the thread count or SIMD variant") {
  Rng rng = derive_stream(9, {});
  const Dataset ds = simulate_dgp({Setting::B, 150, 1.0}, rng);
  const ThresholdGrid grid = build_grid(ds);

  setenv("SEGREG_THREADS", "1", 1);
  const TestReport one = run_test(ds, grid, 40, {}, 77);
  setenv("SEGREG_THREADS", "4", 1);
  const TestReport four = run_test(ds, grid, 40, {}, 77);
  unsetenv("SEGREG_THREADS");
  CHECK(one.boot_stats == four.boot_stats);
  CHECK(one.p_star == four.p_star);

  if (kernels::supported(kernels::Isa::avx2)) {
    const kernels::Isa before = kernels::active_isa();
    kernels::force_isa(kernels::Isa::scalar);
    const TestReport s = run_test(ds, grid, 40, {}, 77);
    kernels::force_isa(kernels::Isa::avx2);
    const TestReport v = run_test(ds, grid, 40, {}, 77);
    kernels::force_isa(before);
    CHECK(s.t_n == doctest::Approx(v.t_n).epsilon(1e-12));
    for (std::size_t b = 0; b < s.boot_stats.size(); ++b) {
      CHECK(s.boot_stats[b] == doctest::Approx(v.boot_stats[b]).epsilon(1e-9));
    }
  }
}
