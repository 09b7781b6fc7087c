#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "segreg/core_model.hpp"

namespace segreg {

enum class GridStrategy { observed, equidistant };

std::string to_string(GridStrategy s);
GridStrategy parse_grid_strategy(const std::string& s);

struct GridOptions {
  GridStrategy strategy = GridStrategy::observed;
  /// Total fraction of extreme Q order statistics discarded, half per tail.
  double trim_fraction = 0.10;
  /// Equidistant grid size; 0 means n/2.
  std::size_t n_points = 0;
  /// Minimum observations per regime; unset means d + 2.
  std::optional<std::size_t> min_per_regime;
};

struct ThresholdGrid {
  std::vector<double> points;  // strictly increasing
  GridStrategy strategy = GridStrategy::observed;
  double trim_fraction = 0.0;
  std::size_t min_per_regime = 0;
};

/// [lo, hi] after dropping floor(trim/2 * n) order statistics per tail.
std::pair<double, double> trimmed_range(const Dataset& ds, double trim_fraction);

/// Throws EmptyGrid when no candidate survives, InvalidConfig on bad options.
ThresholdGrid build_grid(const Dataset& ds, const GridOptions& opts = {});

struct ProfilePoint {
  double tau = 0.0;
  double ssr = 0.0;
};

struct FitResult {
  ThetaPoint theta;
  double ssr_min = 0.0;
  bool constrained = false;
  RegimeSplit regime;
  std::vector<ProfilePoint> profile;
  ThresholdGrid grid;
  std::vector<double> failed_points;  // grid cells skipped as singular
};

struct ProfileFit {
  ThetaPoint theta;
  double ssr = 0.0;
};

/// Least squares at a fixed threshold, solved on the full design by a
/// column-pivoted QR. The constrained form regresses Y on
/// (X', (Q - tau) 1{Q > tau}) and maps (beta, delta_3) back to
/// delta_1 = -delta_3 tau, delta_2 = 0.
ProfileFit profile_fit(const Dataset& ds, double tau, bool constrained);

/// Profiled least squares over the grid; smallest tau wins ties.
FitResult fit(const Dataset& ds, const ThresholdGrid& grid, bool constrained);

/// SSRs below this multiple of mean(Y^2) are reported as exactly zero.
inline constexpr double kPerfectFitRelTol = 1e-20;

struct RobustSe {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::MatrixXd cov;
};

/// White (HC0) sandwich with tau treated as known. Unconstrained fits report
/// (beta, delta). Constrained fits report (beta, delta_3, tau), using the
/// mean-function gradient whose tau column is -delta_3 1{Q > tau}.
RobustSe robust_standard_errors(const Dataset& ds, const FitResult& fit);

/// Constrained fit in hinge form: intercept at the threshold, middle slopes,
/// lower and upper slopes of Q, and tau, with delta-method SEs.
RobustSe hinge_form(const RobustSe& constrained_se, std::size_t d);

}  // namespace segreg
