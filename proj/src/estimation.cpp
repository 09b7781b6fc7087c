#include "segreg/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "segreg/errors.hpp"

namespace segreg {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double perfect_fit_floor(const Dataset& ds) {
  return kPerfectFitRelTol * ds.y().squaredNorm() / static_cast<double>(ds.n());
}

// Rank-revealing solve of a small symmetric positive semidefinite system.
// Jacobi scaling first, so the pivot threshold is scale free.
bool solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                            std::size_t n_rows, Eigen::VectorXd& out) {
  const Eigen::Index k = gram.rows();
  Eigen::VectorXd scale(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double g = gram(j, j);
    if (!(g > 0.0)) return false;
    scale[j] = 1.0 / std::sqrt(g);
  }
  const Eigen::MatrixXd scaled = scale.asDiagonal() * gram * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(kEps * static_cast<double>(std::max<std::size_t>(n_rows, k)));
  if (qr.rank() < k) return false;
  out = scale.asDiagonal() * qr.solve(scale.asDiagonal() * rhs);
  return out.allFinite();
}

// Packed index of (a, b), a <= b, in a p x p symmetric matrix.
inline std::size_t packed(std::size_t a, std::size_t b, std::size_t p) {
  return a * p - a * (a + 1) / 2 + b;
}

// Cross moments of z = (x', y)' accumulated over Q-sorted data, from below
// (prefix) and from above (suffix). Cell moments for any threshold are then
// O(d^2) lookups, with no subtraction of large totals.
class MomentTable {
 public:
  explicit MomentTable(const Dataset& ds)
      : n_(ds.n()), d_(ds.d()), p_(d_ + 1), m_(p_ * (p_ + 1) / 2) {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    const auto q = ds.q();
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
    sorted_q_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) sorted_q_[i] = q[order_[i]];

    prefix_.assign((n_ + 1) * m_, 0.0);
    suffix_.assign((n_ + 1) * m_, 0.0);
    std::vector<double> z(p_);
    auto load = [&](std::size_t row) {
      for (std::size_t a = 0; a < d_; ++a) z[a] = ds.x()(row, a);
      z[d_] = ds.y()[row];
    };
    for (std::size_t i = 0; i < n_; ++i) {
      load(order_[i]);
      const double* prev = &prefix_[i * m_];
      double* next = &prefix_[(i + 1) * m_];
      for (std::size_t a = 0; a < p_; ++a)
        for (std::size_t b = a; b < p_; ++b) {
          const std::size_t k = packed(a, b, p_);
          next[k] = prev[k] + z[a] * z[b];
        }
    }
    for (std::size_t i = n_; i-- > 0;) {
      load(order_[i]);
      const double* prev = &suffix_[(i + 1) * m_];
      double* next = &suffix_[i * m_];
      for (std::size_t a = 0; a < p_; ++a)
        for (std::size_t b = a; b < p_; ++b) {
          const std::size_t k = packed(a, b, p_);
          next[k] = prev[k] + z[a] * z[b];
        }
    }
  }

  /// Number of observations with Q <= tau.
  std::size_t lower_count(double tau) const {
    return static_cast<std::size_t>(
        std::upper_bound(sorted_q_.begin(), sorted_q_.end(), tau) - sorted_q_.begin());
  }

  // Moments of rows [0, split) or [split, n).
  double lower(std::size_t split, std::size_t a, std::size_t b) const {
    return prefix_[split * m_ + packed(std::min(a, b), std::max(a, b), p_)];
  }
  double upper(std::size_t split, std::size_t a, std::size_t b) const {
    return suffix_[split * m_ + packed(std::min(a, b), std::max(a, b), p_)];
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

 private:
  std::size_t n_, d_, p_, m_;
  std::vector<std::size_t> order_;
  std::vector<double> sorted_q_;
  std::vector<double> prefix_, suffix_;
};

struct CellFit {
  bool ok = false;
  double ssr = 0.0;  // sum, not mean
};

// One regime regressed on x alone.
CellFit regime_fit(const MomentTable& t, std::size_t split, bool upper) {
  const std::size_t d = t.d();
  auto mom = [&](std::size_t a, std::size_t b) {
    return upper ? t.upper(split, a, b) : t.lower(split, a, b);
  };
  Eigen::MatrixXd g(d, d);
  Eigen::VectorXd c(d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) g(a, b) = mom(a, b);
    c[a] = mom(a, d);
  }
  const std::size_t rows = upper ? t.n() - split : split;
  Eigen::VectorXd coef;
  if (!solve_normal_equations(g, c, rows, coef)) return {};
  return {true, mom(d, d) - c.dot(coef)};
}

CellFit unconstrained_cell(const MomentTable& t, std::size_t split) {
  const CellFit lo = regime_fit(t, split, false);
  if (!lo.ok) return {};
  const CellFit hi = regime_fit(t, split, true);
  if (!hi.ok) return {};
  return {true, std::max(0.0, lo.ssr) + std::max(0.0, hi.ssr)};
}

CellFit constrained_cell(const MomentTable& t, std::size_t split, double tau) {
  const std::size_t d = t.d();
  const std::size_t qi = d - 1;
  const double n_up = t.upper(split, 0, 0);
  Eigen::MatrixXd g(d + 1, d + 1);
  Eigen::VectorXd c(d + 1);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) g(a, b) = t.lower(split, a, b) + t.upper(split, a, b);
    c[a] = t.lower(split, a, d) + t.upper(split, a, d);
    // sum_up (q - tau) x_a
    const double v = t.upper(split, qi, a) - tau * t.upper(split, 0, a);
    g(a, d) = v;
    g(d, a) = v;
  }
  g(d, d) = t.upper(split, qi, qi) - 2.0 * tau * t.upper(split, 0, qi) + tau * tau * n_up;
  c[d] = t.upper(split, qi, d) - tau * t.upper(split, 0, d);
  Eigen::VectorXd coef;
  if (!solve_normal_equations(g, c, t.n(), coef)) return {};
  const double yy = t.lower(split, d, d) + t.upper(split, d, d);
  return {true, std::max(0.0, yy - c.dot(coef))};
}

Eigen::VectorXd qr_least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(kEps * static_cast<double>(std::max(z.rows(), z.cols())));
  if (qr.rank() < z.cols()) {
    throw SingularDesign("design matrix is rank deficient (rank " +
                         std::to_string(qr.rank()) + " of " +
                         std::to_string(z.cols()) + ")");
  }
  return qr.solve(y);
}

Eigen::MatrixXd kink_design(const Dataset& ds, double tau) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  const auto d = static_cast<Eigen::Index>(ds.d());
  Eigen::MatrixXd z(n, d + 1);
  z.leftCols(d) = ds.x();
  const auto q = ds.q();
  for (Eigen::Index i = 0; i < n; ++i) z(i, d) = q[i] > tau ? q[i] - tau : 0.0;
  return z;
}

Eigen::VectorXd standard_errors(const Eigen::MatrixXd& cov) {
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& z, const Eigen::VectorXd& resid) {
  const Eigen::MatrixXd bread = z.transpose() * z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bread);
  qr.setThreshold(kEps * static_cast<double>(std::max(z.rows(), z.cols())));
  if (qr.rank() < bread.cols()) throw SingularDesign("sandwich bread is singular");
  const Eigen::MatrixXd inv = qr.inverse();
  const Eigen::MatrixXd meat =
      z.transpose() * resid.array().square().matrix().asDiagonal() * z;
  Eigen::MatrixXd cov = inv * meat * inv;
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

std::string to_string(GridStrategy s) {
  return s == GridStrategy::observed ? "observed" : "equidistant";
}

GridStrategy parse_grid_strategy(const std::string& s) {
  if (s == "observed") return GridStrategy::observed;
  if (s == "equidistant") return GridStrategy::equidistant;
  throw InvalidConfig("unknown grid strategy: " + s);
}

std::pair<double, double> trimmed_range(const Dataset& ds, double trim_fraction) {
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw InvalidConfig("trim fraction must lie in [0, 0.5)");
  }
  std::vector<double> q(ds.q().begin(), ds.q().end());
  std::sort(q.begin(), q.end());
  const auto n = q.size();
  const auto drop =
      static_cast<std::size_t>(std::floor(trim_fraction / 2.0 * static_cast<double>(n) + 1e-9));
  return {q[drop], q[n - 1 - drop]};
}

ThresholdGrid build_grid(const Dataset& ds, const GridOptions& opts) {
  const auto [lo, hi] = trimmed_range(ds, opts.trim_fraction);
  ThresholdGrid grid;
  grid.strategy = opts.strategy;
  grid.trim_fraction = opts.trim_fraction;
  grid.min_per_regime = opts.min_per_regime.value_or(ds.d() + 2);

  std::vector<double> sorted(ds.q().begin(), ds.q().end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> candidates;
  if (opts.strategy == GridStrategy::observed) {
    for (const double v : sorted) {
      if (v >= lo && v <= hi && (candidates.empty() || v > candidates.back())) {
        candidates.push_back(v);
      }
    }
  } else {
    const std::size_t m = opts.n_points == 0 ? ds.n() / 2 : opts.n_points;
    if (m < 2) throw InvalidConfig("equidistant grid needs at least 2 points");
    if (hi > lo) {
      for (std::size_t k = 0; k < m; ++k) {
        const double v = k + 1 == m ? hi
                                    : lo + (hi - lo) * static_cast<double>(k) /
                                               static_cast<double>(m - 1);
        candidates.push_back(v);
      }
    }
  }

  const std::size_t n = ds.n();
  for (const double tau : candidates) {
    const auto n_lower = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), tau) - sorted.begin());
    if (n_lower >= grid.min_per_regime && n - n_lower >= grid.min_per_regime) {
      grid.points.push_back(tau);
    }
  }
  if (grid.points.empty()) {
    throw EmptyGrid("no threshold candidate survives trimming and the "
                    "minimum of " + std::to_string(grid.min_per_regime) +
                    " observations per regime");
  }
  return grid;
}

ProfileFit profile_fit(const Dataset& ds, double tau, bool constrained) {
  const auto d = static_cast<Eigen::Index>(ds.d());
  ProfileFit out;
  out.theta.tau = tau;
  if (constrained) {
    const Eigen::VectorXd coef = qr_least_squares(kink_design(ds, tau), ds.y());
    out.theta.beta = coef.head(d);
    out.theta.delta = Eigen::VectorXd::Zero(d);
    out.theta.delta[d - 1] = coef[d];
    out.theta.delta[0] = -coef[d] * tau;
  } else {
    const Eigen::VectorXd coef = qr_least_squares(augmented_regressors(ds, tau), ds.y());
    out.theta.beta = coef.head(d);
    out.theta.delta = coef.tail(d);
  }
  out.ssr = ssr(ds, out.theta);
  if (out.ssr <= perfect_fit_floor(ds)) out.ssr = 0.0;
  return out;
}

FitResult fit(const Dataset& ds, const ThresholdGrid& grid, bool constrained) {
  if (grid.points.empty()) throw EmptyGrid("threshold grid is empty");
  const MomentTable table(ds);
  const double inv_n = 1.0 / static_cast<double>(ds.n());

  FitResult res;
  res.constrained = constrained;
  res.grid = grid;
  res.profile.reserve(grid.points.size());

  std::size_t best = 0;
  bool have_best = false;
  std::size_t prev_split = ds.n() + 1;
  CellFit prev{};
  for (const double tau : grid.points) {
    const std::size_t split = table.lower_count(tau);
    CellFit cell;
    if (!constrained && split == prev_split) {
      cell = prev;  // same partition, same profiled SSR
    } else {
      cell = constrained ? constrained_cell(table, split, tau)
                         : unconstrained_cell(table, split);
    }
    prev_split = split;
    prev = cell;
    if (!cell.ok) {
      res.failed_points.push_back(tau);
      continue;
    }
    res.profile.push_back({tau, cell.ssr * inv_n});
    if (!have_best || res.profile.back().ssr < res.profile[best].ssr) {
      best = res.profile.size() - 1;
      have_best = true;
    }
  }
  if (!have_best) {
    throw SingularDesign("every grid point produced a singular design");
  }

  // Refit the winning cell on the full design; the profile keeps the exact
  // value there.
  const ProfileFit exact = profile_fit(ds, res.profile[best].tau, constrained);
  res.profile[best].ssr = exact.ssr;
  res.theta = exact.theta;
  res.ssr_min = exact.ssr;
  res.regime = regime_split(ds, exact.theta.tau);
  return res;
}

RobustSe robust_standard_errors(const Dataset& ds, const FitResult& f) {
  const auto d = static_cast<Eigen::Index>(ds.d());
  const double tau = f.theta.tau;
  // A fit snapped to zero SSR has zero residuals by convention.
  const Eigen::VectorXd resid =
      f.ssr_min == 0.0 ? Eigen::VectorXd::Zero(ds.n()).eval() : residuals(ds, f.theta);
  RobustSe out;
  for (Eigen::Index j = 0; j < d; ++j) out.names.push_back("beta" + std::to_string(j));
  if (f.constrained) {
    const double d3 = f.theta.delta[d - 1];
    Eigen::MatrixXd grad(ds.n(), d + 2);
    grad.leftCols(d + 1) = kink_design(ds, tau);
    const auto q = ds.q();
    for (Eigen::Index i = 0; i < grad.rows(); ++i) grad(i, d + 1) = q[i] > tau ? -d3 : 0.0;
    out.cov = sandwich(grad, resid);
    out.coef.resize(d + 2);
    out.coef << f.theta.beta, d3, tau;
    out.names.push_back("delta" + std::to_string(d - 1));
    out.names.push_back("tau");
  } else {
    out.cov = sandwich(augmented_regressors(ds, tau), resid);
    out.coef.resize(2 * d);
    out.coef << f.theta.beta, f.theta.delta;
    for (Eigen::Index j = 0; j < d; ++j) out.names.push_back("delta" + std::to_string(j));
  }
  out.se = standard_errors(out.cov);
  return out;
}

RobustSe hinge_form(const RobustSe& c, std::size_t d_) {
  const auto d = static_cast<Eigen::Index>(d_);
  if (c.coef.size() != d + 2 || c.names.empty() || c.names.back() != "tau") {
    throw InvalidConfig("hinge form needs a constrained fit");
  }
  const double tau = c.coef[d + 1];
  const double slope = c.coef[d - 1];
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d + 2, d + 2);
  // intercept at tau = beta_0 + beta_{d-1} tau
  jac(0, 0) = 1.0;
  jac(0, d - 1) = tau;
  jac(0, d + 1) = slope;
  for (Eigen::Index j = 1; j + 1 < d; ++j) jac(j, j) = 1.0;
  jac(d - 1, d - 1) = 1.0;  // lower slope
  jac(d, d - 1) = 1.0;      // upper slope = beta_{d-1} + delta_{d-1}
  jac(d, d) = 1.0;
  jac(d + 1, d + 1) = 1.0;

  RobustSe h;
  h.coef = jac * c.coef;
  h.coef[0] = c.coef[0] + slope * tau;
  h.cov = jac * c.cov * jac.transpose();
  h.se = standard_errors(h.cov);
  h.names.push_back("intercept_at_tau");
  for (Eigen::Index j = 1; j + 1 < d; ++j) h.names.push_back("beta" + std::to_string(j));
  h.names.push_back("slope_lower");
  h.names.push_back("slope_upper");
  h.names.push_back("tau");
  return h;
}

}  // namespace segreg
