#include <cmath>

#include "impl.hpp"

namespace segreg::kernels::detail {
namespace {

void threshold_residuals(std::size_t n, const double* y,
                         std::span<const double* const> cols, const double* q,
                         double tau, std::span<const double> beta,
                         std::span<const double> delta, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i];
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double* c = cols[j];
    const double lo = beta[j];
    const double hi = beta[j] + delta[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double coef = q[i] > tau ? hi : lo;
      out[i] = out[i] - c[i] * coef;
    }
  }
}

double sum_squares(std::size_t n, const double* x) {
  // Four interleaved partial sums, same association as the AVX2 lanes.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) acc[k] += x[i + k] * x[i + k];
  }
  double total = (acc[0] + acc[2]) + (acc[1] + acc[3]);
  for (; i < n; ++i) total += x[i] * x[i];
  return total;
}

void wild_response(std::size_t n, const double* fitted, const double* resid,
                   const double* eta, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = fitted[i] + resid[i] * eta[i];
}

ArgminResult penalized_cubic_argmin(std::size_t n, const double* g,
                                    const double* w, double a, double b) {
  const double two_a = 2.0 * a;
  ArgminResult best{0, INFINITY};
  for (std::size_t i = 0; i < n; ++i) {
    const double ag = std::fabs(g[i]);
    double cube = ag * ag;
    cube = cube * ag;
    const double v = b * cube + two_a * w[i];
    if (v < best.value) best = {i, v};
  }
  return best;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{&threshold_residuals, &sum_squares,
                             &wild_response, &penalized_cubic_argmin};
  return t;
}

}  // namespace segreg::kernels::detail
