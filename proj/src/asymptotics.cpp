#include "segreg/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "segreg/errors.hpp"
#include "segreg/kernels.hpp"

namespace segreg {

double KinkScale::spread() const { return std::cbrt((a / b) * (a / b)); }

KinkScale kink_scale(double d30, double sigma2_tau0, double f_tau0) {
  if (d30 == 0.0) throw InvalidConfig("d30 must be nonzero");
  if (!(sigma2_tau0 > 0.0) || !(f_tau0 > 0.0)) {
    throw InvalidConfig("sigma2(tau0) and f(tau0) must be positive");
  }
  return {std::fabs(d30) * std::sqrt(sigma2_tau0 * f_tau0 / 3.0), d30 * d30 * f_tau0 / 3.0};
}

KinkDraw kink_limit_draw(double a, double b, double g_max, std::size_t n_grid, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidConfig("kink limit needs a > 0 and b > 0");
  if (n_grid < 100) throw InvalidConfig("kink limit needs n_grid >= 100");
  const KinkScale scale{a, b};
  if (!(g_max >= scale.spread())) {
    throw InvalidConfig("g_max does not cover the argmin scale (a/b)^(2/3); use about " +
                        std::to_string(scale.recommended_g_max()));
  }
  const std::size_t N = n_grid;
  std::vector<double> g(2 * N + 1), w(2 * N + 1, 0.0);
  const double step = g_max / static_cast<double>(N);
  for (std::size_t k = 0; k <= 2 * N; ++k) {
    g[k] = step * (static_cast<double>(k) - static_cast<double>(N));
  }

  // Dyadic construction: N = m 2^L. Level 0 walks m points per side with
  // exact increments in cubed time; level l fills midpoints by Brownian
  // bridges. Each level has its own stream, so doubling n_grid keeps every
  // existing grid value and only adds midpoints.
  std::size_t m = N, levels = 0;
  while (m % 2 == 0) {
    m /= 2;
    ++levels;
  }
  const std::uint64_t key = rng();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::uint64_t side = 0; side < 2; ++side) {
    auto at = [&](std::size_t k) -> double& { return side == 0 ? w[N - k] : w[N + k]; };
    auto time = [&](std::size_t k) {
      const double gk = step * static_cast<double>(k);
      return gk * gk * gk;
    };
    Rng base = derive_stream(key, {side, 0});
    const std::size_t stride0 = N / m;
    double path = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t k = j * stride0;
      path += std::sqrt(time(k) - time(k - stride0)) * normal(base);
      at(k) = path;
    }
    for (std::size_t l = 1; l <= levels; ++l) {
      Rng lvl = derive_stream(key, {side, l});
      const std::size_t stride = stride0 >> l;
      for (std::size_t k = stride; k < N; k += 2 * stride) {
        const double t0 = time(k - stride), t1 = time(k + stride), tm = time(k);
        const double mean = at(k - stride) + (tm - t0) / (t1 - t0) * (at(k + stride) - at(k - stride));
        at(k) = mean + std::sqrt((tm - t0) * (t1 - tm) / (t1 - t0)) * normal(lvl);
      }
    }
  }
  const auto best = kernels::active().penalized_cubic_argmin(g.size(), g.data(), w.data(), a, b);
  KinkDraw out;
  out.argmin = g[best.index];
  out.min_value = best.value;
  out.flagged = std::fabs(out.argmin) > 0.95 * g_max;
  out.recommended_g_max = scale.recommended_g_max();
  return out;
}

Eigen::MatrixXd constraint_matrix(std::size_t d_, double tau0, double beta30, double delta30,
                                  RRowConvention convention) {
  if (d_ < 2) throw InvalidConfig("constraint matrix needs d >= 2");
  const auto d = static_cast<Eigen::Index>(d_);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d + 2, 2 * d);
  R.topLeftCorner(d, d).setIdentity();
  R(d, d) = -tau0;
  R(d, 2 * d - 1) = 1.0;
  R(d + 1, d) = convention == RRowConvention::as_printed ? -beta30 - delta30 : -delta30;
  return R;
}

void LimitParams::validate() const {
  if (d30 == 0.0) throw InvalidConfig("d30 must be nonzero");
  if (!(sigma2_tau0 > 0.0) || !(f_tau0 > 0.0) || !(sigma2 > 0.0)) {
    throw InvalidConfig("sigma2(tau0), f(tau0) and sigma2 must be positive");
  }
  const Eigen::Index k = M.rows();
  if (k < 4 || k % 2 != 0 || M.cols() != k) throw InvalidConfig("M must be 2d x 2d with d >= 2");
  if (Omega.rows() != k || Omega.cols() != k) throw InvalidConfig("Omega must match M");
  if (R.rows() != k / 2 + 2 || R.cols() != k) throw InvalidConfig("R must be (d+2) x 2d");
  if (!M.isApprox(M.transpose(), 1e-10) || !Omega.isApprox(Omega.transpose(), 1e-10)) {
    throw InvalidConfig("M and Omega must be symmetric");
  }
}

TnLimitSimulator::TnLimitSimulator(LimitParams params, double g_max, std::size_t n_grid)
    : p_(std::move(params)), n_grid_(n_grid) {
  p_.validate();
  scale_ = kink_scale(p_.d30, p_.sigma2_tau0, p_.f_tau0);
  g_max_ = g_max > 0.0 ? g_max : scale_.recommended_g_max();

  Eigen::LLT<Eigen::MatrixXd> llt(p_.M);
  if (llt.info() != Eigen::Success) throw InvalidConfig("M must be positive definite");
  m_inv_ = llt.solve(Eigen::MatrixXd::Identity(p_.M.rows(), p_.M.cols()));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p_.Omega);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff())) {
    throw InvalidConfig("Omega must be positive semidefinite");
  }
  omega_root_ = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const Eigen::MatrixXd rmr = p_.R * p_.M * p_.R.transpose();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(rmr);
  proj_ = p_.R.transpose() * cod.pseudoInverse() * p_.R;
}

TnLimitDraw TnLimitSimulator::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(omega_root_.cols());
  for (auto& v : z) v = normal(rng);
  const Eigen::VectorXd B = omega_root_ * z;

  TnLimitDraw out;
  out.min_h = -B.dot(m_inv_ * B);
  out.min_ell = -B.dot(proj_ * B);
  const KinkDraw k = kink_limit_draw(scale_.a, scale_.b, g_max_, n_grid_, rng);
  out.min_g = k.min_value;
  out.flagged = k.flagged;
  out.value = (out.min_ell - out.min_h - out.min_g) / p_.sigma2;
  return out;
}

TnLimitDraw tn_limit_draw(const LimitParams& p, double g_max, std::size_t n_grid, Rng& rng) {
  return TnLimitSimulator(p, g_max, n_grid).draw(rng);
}

double silverman_bandwidth(const Eigen::VectorXd& x) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw InvalidConfig("bandwidth needs at least 2 points");
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (n - 1.0));
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  auto quantile = [&](double p) {
    const double pos = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw InvalidConfig("bandwidth needs a nondegenerate sample");
  return 0.9 * spread * std::pow(n, -0.2);
}

PlugInEstimate estimate_limit_params(const Dataset& ds, const FitResult& fit_c,
                                     RRowConvention convention) {
  if (!fit_c.constrained) throw InvalidConfig("plug-in estimates need the constrained fit");
  const auto d = static_cast<Eigen::Index>(ds.d());
  const double n = static_cast<double>(ds.n());
  const double tau0 = fit_c.theta.tau;
  const Eigen::VectorXd u = residuals(ds, fit_c.theta);
  const Eigen::MatrixXd X = augmented_regressors(ds, tau0);
  const Eigen::VectorXd q = ds.q();

  PlugInEstimate est;
  est.tau0 = tau0;
  est.bandwidth = silverman_bandwidth(q);
  const double h = est.bandwidth;

  LimitParams& p = est.params;
  p.d30 = fit_c.theta.delta[d - 1];
  p.M = X.transpose() * X / n;
  p.Omega = X.transpose() * u.array().square().matrix().asDiagonal() * X / n;
  p.M = 0.5 * (p.M + p.M.transpose());
  p.Omega = 0.5 * (p.Omega + p.Omega.transpose());
  p.sigma2 = u.squaredNorm() / n;
  p.R = constraint_matrix(ds.d(), tau0, fit_c.theta.beta[d - 1], p.d30, convention);

  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  double ksum = 0.0, kusum = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double z = (q[i] - tau0) / h;
    const double k = inv_sqrt_2pi * std::exp(-0.5 * z * z);
    ksum += k;
    kusum += k * u[i] * u[i];
  }
  p.f_tau0 = ksum / (n * h);
  if (!(ksum > 0.0)) throw DataError("no kernel mass at the threshold estimate");
  p.sigma2_tau0 = kusum / ksum;
  return est;
}

bool minimax_cube_root_regime(const BoundInputs& in) {
  if (!(in.varphi >= 0.0 && in.varphi < 0.5)) throw InvalidConfig("varphi must lie in [0, 1/2)");
  if (in.n == 0 || !(in.kappa0 > 0.0) || !(in.sigma_lower2 > 0.0) || !(in.f_upper > 0.0) ||
      !(in.eta > 0.0)) {
    throw InvalidConfig("bound inputs must be positive");
  }
  const double n = static_cast<double>(in.n);
  const double kappa = in.kappa0 * std::pow(n, -in.varphi);
  const double lhs = std::pow(n, 1.0 - 2.0 * in.varphi);
  const double rhs = 3.0 * in.sigma_lower2 / (in.f_upper * kappa * kappa * in.eta * in.eta * in.eta);
  return lhs >= rhs;
}

double minimax_lower_bound(const BoundInputs& in) {
  if (!minimax_cube_root_regime(in)) return in.eta / 4.0;
  const double n = static_cast<double>(in.n);
  return std::cbrt(in.sigma_lower2) /
         (3.0 * std::cbrt(in.f_upper) * std::cbrt(in.kappa0 * in.kappa0)) *
         std::pow(n, (2.0 * in.varphi - 1.0) / 3.0);
}

}  // namespace segreg
