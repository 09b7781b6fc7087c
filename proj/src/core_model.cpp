#include "segreg/core_model.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "segreg/errors.hpp"
#include "segreg/kernels.hpp"

namespace segreg {
namespace {

void check_theta(const Dataset& ds, const ThetaPoint& theta) {
  if (static_cast<std::size_t>(theta.beta.size()) != ds.d() ||
      static_cast<std::size_t>(theta.delta.size()) != ds.d()) {
    throw InvalidConfig("theta dimension does not match dataset (d = " +
                        std::to_string(ds.d()) + ")");
  }
}

std::vector<const double*> column_pointers(const Eigen::MatrixXd& x) {
  std::vector<const double*> cols(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) cols[j] = x.col(j).data();
  return cols;
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x)
    : y_(std::move(y)), x_(std::move(x)) {
  const auto d = static_cast<std::size_t>(x_.cols());
  if (d < 2) throw DataError("regressor dimension must be at least 2");
  if (x_.rows() != y_.size()) throw DataError("x and y row counts differ");
  if (n() < min_size(d)) {
    throw DataError("need at least " + std::to_string(min_size(d)) +
                    " observations for d = " + std::to_string(d) + ", got " +
                    std::to_string(n()));
  }
  if (!y_.allFinite() || !x_.allFinite()) {
    throw DataError("dataset contains non-finite values");
  }
  if ((x_.col(0).array() != 1.0).any()) {
    throw DataError("first regressor column must be the constant 1");
  }
}

Dataset Dataset::from_parts(Eigen::VectorXd y, const Eigen::MatrixXd& middle,
                            const Eigen::VectorXd& q) {
  const Eigen::Index n = q.size();
  if (middle.rows() != n && middle.cols() != 0) {
    throw DataError("middle regressors have the wrong number of rows");
  }
  Eigen::MatrixXd x(n, middle.cols() + 2);
  x.col(0).setOnes();
  if (middle.cols() > 0) x.middleCols(1, middle.cols()) = middle;
  x.col(x.cols() - 1) = q;
  return Dataset(std::move(y), std::move(x));
}

Dataset Dataset::with_response(Eigen::VectorXd y) const {
  return Dataset(std::move(y), x_);
}

double ThetaPoint::default_continuity_tol() const {
  const double d3 = delta.size() > 0 ? delta[delta.size() - 1] : 0.0;
  return 1e-10 * (1.0 + std::fabs(d3) * std::fabs(tau));
}

bool ThetaPoint::is_continuous(double tol) const {
  const Eigen::Index d = delta.size();
  if (d < 2) return false;
  if (std::fabs(delta[0] + delta[d - 1] * tau) > tol) return false;
  for (Eigen::Index j = 1; j + 1 < d; ++j) {
    if (std::fabs(delta[j]) > tol) return false;
  }
  return true;
}

double ThetaPoint::mean_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const double q = x[x.size() - 1];
  double m = x.dot(beta);
  if (q > tau) m += x.dot(delta);
  return m;
}

RegimeSplit regime_split(const Dataset& ds, double tau) {
  RegimeSplit s;
  for (const double qi : ds.q()) {
    if (qi > tau) {
      ++s.n_upper;
    } else {
      ++s.n_lower;
    }
  }
  return s;
}

Eigen::MatrixXd augmented_regressors(const Dataset& ds, double tau) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  const auto d = static_cast<Eigen::Index>(ds.d());
  Eigen::MatrixXd out(n, 2 * d);
  out.leftCols(d) = ds.x();
  const auto q = ds.q();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (q[i] > tau) {
      out.row(i).tail(d) = ds.x().row(i);
    } else {
      out.row(i).tail(d).setZero();
    }
  }
  return out;
}

Eigen::VectorXd residuals(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                          const ThetaPoint& theta) {
  const auto d = static_cast<std::size_t>(x.cols());
  if (d < 1 || x.rows() != y.size()) throw InvalidConfig("x and y shapes differ");
  if (static_cast<std::size_t>(theta.beta.size()) != d ||
      static_cast<std::size_t>(theta.delta.size()) != d) {
    throw InvalidConfig("theta dimension does not match regressors (d = " +
                        std::to_string(d) + ")");
  }
  const auto cols = column_pointers(x);
  const auto n = static_cast<std::size_t>(y.size());
  Eigen::VectorXd out(y.size());
  kernels::active().threshold_residuals(n, y.data(), cols, x.col(x.cols() - 1).data(),
                                        theta.tau, {theta.beta.data(), d},
                                        {theta.delta.data(), d}, out.data());
  return out;
}

double ssr(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
           const ThetaPoint& theta) {
  const Eigen::VectorXd r = residuals(y, x, theta);
  const auto n = static_cast<std::size_t>(r.size());
  return kernels::active().sum_squares(n, r.data()) / static_cast<double>(n);
}

Eigen::VectorXd residuals(const Dataset& ds, const ThetaPoint& theta) {
  return residuals(ds.y(), ds.x(), theta);
}

Eigen::VectorXd fitted_values(const Dataset& ds, const ThetaPoint& theta) {
  check_theta(ds, theta);
  Eigen::VectorXd alpha(2 * theta.beta.size());
  alpha << theta.beta, theta.delta;
  return augmented_regressors(ds, theta.tau) * alpha;
}

double ssr(const Dataset& ds, const ThetaPoint& theta) {
  return ssr(ds.y(), ds.x(), theta);
}

}  // namespace segreg
