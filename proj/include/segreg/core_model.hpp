#pragma once

// Threshold regression data model:
//   Y_i = X_i' beta + X_i' delta 1{Q_i > tau} + U_i,   X_i = (1, X_i2', Q_i)'.

#include <Eigen/Core>
#include <cstddef>

namespace segreg {

/// Observations (Y_i, X_i, Q_i). Column 0 of x is all ones and the last
/// column is the threshold variable Q. Immutable once constructed.
class Dataset {
 public:
  /// Validates the layout. Throws DataError on a broken invariant.
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x);

  /// Builds x = (1, middle, q) from its parts.
  static Dataset from_parts(Eigen::VectorXd y, const Eigen::MatrixXd& middle,
                            const Eigen::VectorXd& q);

  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  auto q() const { return x_.col(x_.cols() - 1); }

  /// Same regressors, new response (bootstrap samples, rescaling).
  Dataset with_response(Eigen::VectorXd y) const;

  /// Smallest admissible sample size for dimension d.
  static std::size_t min_size(std::size_t d) noexcept { return 2 * (d + 2); }

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
};

/// theta = (beta', delta', tau)' with delta = (delta_1, delta_2', delta_3)'.
struct ThetaPoint {
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  double tau = 0.0;

  /// 1e-10 * (1 + |delta_3| |tau|).
  double default_continuity_tol() const;

  /// |delta_1 + delta_3 tau| <= tol and max|delta_2| <= tol.
  bool is_continuous(double tol) const;
  bool is_continuous() const { return is_continuous(default_continuity_tol()); }

  /// Regression function X'beta + X'delta 1{q > tau} evaluated at a point x.
  double mean_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct RegimeSplit {
  std::size_t n_lower = 0;  // Q_i <= tau
  std::size_t n_upper = 0;  // Q_i >  tau
};

RegimeSplit regime_split(const Dataset& ds, double tau);

/// Row i is (X_i', X_i' 1{Q_i > tau}).
Eigen::MatrixXd augmented_regressors(const Dataset& ds, double tau);

/// Y_i - X_i(tau)' alpha for every i.
Eigen::VectorXd residuals(const Dataset& ds, const ThetaPoint& theta);

/// X_i(tau)' alpha for every i.
Eigen::VectorXd fitted_values(const Dataset& ds, const ThetaPoint& theta);

/// (1/n) sum_i (Y_i - X_i(tau)' alpha)^2.
double ssr(const Dataset& ds, const ThetaPoint& theta);

/// Unvalidated forms on raw arrays (last column of x is Q). Used where the
/// sample is too small to form a Dataset.
Eigen::VectorXd residuals(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                          const ThetaPoint& theta);
double ssr(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
           const ThetaPoint& theta);

}  // namespace segreg
