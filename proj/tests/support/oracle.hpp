#pragma once

// Test-side reference computations, written without the library's solvers.

#include <Eigen/Core>
#include <vector>

#include "segreg/core_model.hpp"

namespace oracle {

/// Least squares via modified Gram-Schmidt in long double. Returns the
/// coefficient vector; near-dependent columns get coefficient 0.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

/// Mean squared residual of the least-squares fit.
double mean_ssr(const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

/// Brute-force profile value at tau: jump model regresses on (X, X 1{Q>tau}),
/// kink model on (X, (Q - tau) 1{Q>tau}).
double profile_ssr(const segreg::Dataset& ds, double tau, bool constrained);

/// sup |F1 - F2| between two empirical distributions.
double ks_distance(std::vector<double> a, std::vector<double> b);

double median(std::vector<double> v);

}  // namespace oracle
