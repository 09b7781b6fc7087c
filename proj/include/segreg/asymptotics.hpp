#pragma once

#include <Eigen/Core>
#include <cstddef>

#include "segreg/core_model.hpp"
#include "segreg/estimation.hpp"
#include "segreg/rng.hpp"

namespace segreg {

// Cube-root limit of the unconstrained threshold estimator under a kink:
//   argmin_g  b |g|^3 + 2 a W(g^3),
// with W two-sided Brownian motion, a = |d30| sqrt(sigma2(tau0) f(tau0) / 3)
// and b = d30^2 f(tau0) / 3. The noise sign is immaterial since W is
// symmetric in law.
struct KinkScale {
  double a = 0.0;
  double b = 0.0;

  /// Natural spread of the argmin, (a / b)^(2/3).
  double spread() const;
  /// 10 (a / b)^(2/3).
  double recommended_g_max() const { return 10.0 * spread(); }
};

KinkScale kink_scale(double d30, double sigma2_tau0, double f_tau0);

struct KinkDraw {
  double argmin = 0.0;
  double min_value = 0.0;  // <= 0, the objective is 0 at g = 0
  bool flagged = false;    // argmin in the outer 5% of [-g_max, g_max]
  double recommended_g_max = 0.0;
};

/// One draw on the grid g_k = k g_max / n_grid, k = -n_grid..n_grid, with
/// exact Gaussian increments in cubed time on each side. Throws
/// InvalidConfig if a or b is not positive, n_grid < 100, or g_max is below
/// the argmin spread.
KinkDraw kink_limit_draw(double a, double b, double g_max, std::size_t n_grid, Rng& rng);

/// Third row of the constraint matrix R: as printed (-beta30 - delta30) or
/// the first-principles derivative (-delta30 only).
enum class RRowConvention { as_printed, delta_only };

/// (d+2) x 2d matrix mapping X(tau0) to (X', (Q - tau0) 1, c 1).
Eigen::MatrixXd constraint_matrix(std::size_t d, double tau0, double beta30, double delta30,
                                  RRowConvention convention = RRowConvention::as_printed);

struct LimitParams {
  double d30 = 0.0;
  double sigma2_tau0 = 0.0;
  double f_tau0 = 0.0;
  Eigen::MatrixXd M;      // 2d x 2d, E X(tau0) X(tau0)'
  Eigen::MatrixXd Omega;  // 2d x 2d, E X(tau0) X(tau0)' U^2
  Eigen::MatrixXd R;      // (d+2) x 2d
  double sigma2 = 0.0;    // E U^2

  void validate() const;
};

struct TnLimitDraw {
  double value = 0.0;
  double min_ell = 0.0;
  double min_h = 0.0;
  double min_g = 0.0;
  bool flagged = false;
};

/// Limit of T_n:  (min_l K - min_h K - min_g K) / sigma2, with the two
/// quadratic minima in closed form and the cube-root term simulated.
/// Factorizations are done once at construction.
class TnLimitSimulator {
 public:
  TnLimitSimulator(LimitParams params, double g_max, std::size_t n_grid);

  TnLimitDraw draw(Rng& rng) const;

  const KinkScale& scale() const { return scale_; }
  double g_max() const { return g_max_; }

 private:
  LimitParams p_;
  KinkScale scale_;
  double g_max_;
  std::size_t n_grid_;
  Eigen::MatrixXd omega_root_;  // Omega = root root'
  Eigen::MatrixXd m_inv_;
  Eigen::MatrixXd proj_;        // R' (R M R')^+ R
};

/// g_max <= 0 selects the recommended 10 (a/b)^(2/3).
TnLimitDraw tn_limit_draw(const LimitParams& p, double g_max, std::size_t n_grid, Rng& rng);

struct PlugInEstimate {
  LimitParams params;
  double tau0 = 0.0;
  double bandwidth = 0.0;
};

/// Nuisance quantities at the constrained threshold estimate: sample moments
/// for M, Omega and sigma2 (constrained residuals), a Gaussian kernel density
/// for f(tau0) and a Nadaraya-Watson regression of squared residuals for
/// sigma2(tau0), both with Silverman's rule-of-thumb bandwidth.
PlugInEstimate estimate_limit_params(const Dataset& ds, const FitResult& fit_c,
                                     RRowConvention convention = RRowConvention::as_printed);

/// 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(const Eigen::VectorXd& x);

struct BoundInputs {
  std::size_t n = 0;
  double varphi = 0.0;        // in [0, 1/2)
  double kappa0 = 0.0;        // minimal slope change at n = 1
  double sigma_lower2 = 0.0;  // lower bound on sigma^2(tau)
  double f_upper = 0.0;       // upper bound on the density of Q
  double eta = 0.0;           // diameter of the threshold space
};

/// True when n^(1 - 2 varphi) >= 3 sigma_lower2 / (f_upper kappa^2 eta^3),
/// kappa = kappa0 n^(-varphi).
bool minimax_cube_root_regime(const BoundInputs& in);

/// l1-minimax lower bound for threshold estimation when the threshold type
/// is unknown.
double minimax_lower_bound(const BoundInputs& in);

}  // namespace segreg
