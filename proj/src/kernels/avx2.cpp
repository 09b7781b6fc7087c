// Compiled with -mavx2 -mfma. Only reached through the dispatcher after a
// runtime CPU check. No FMA intrinsics: keeps elementwise results
// bit-identical to the scalar reference.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "impl.hpp"

namespace segreg::kernels::detail {
namespace {

void threshold_residuals(std::size_t n, const double* y,
                         std::span<const double* const> cols, const double* q,
                         double tau, std::span<const double> beta,
                         std::span<const double> delta, double* out) {
  const __m256d vtau = _mm256_set1_pd(tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(q + i), vtau, _CMP_GT_OQ);
    __m256d r = _mm256_loadu_pd(y + i);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const __m256d lo = _mm256_set1_pd(beta[j]);
      const __m256d hi = _mm256_set1_pd(beta[j] + delta[j]);
      const __m256d coef = _mm256_blendv_pd(lo, hi, mask);
      r = _mm256_sub_pd(r, _mm256_mul_pd(_mm256_loadu_pd(cols[j] + i), coef));
    }
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    double r = y[i];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double coef = q[i] > tau ? beta[j] + delta[j] : beta[j];
      r = r - cols[j][i] * coef;
    }
    out[i] = r;
  }
}

double sum_squares(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
  for (; i < n; ++i) total += x[i] * x[i];
  return total;
}

void wild_response(std::size_t n, const double* fitted, const double* resid,
                   const double* eta, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod =
        _mm256_mul_pd(_mm256_loadu_pd(resid + i), _mm256_loadu_pd(eta + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(fitted + i), prod));
  }
  for (; i < n; ++i) out[i] = fitted[i] + resid[i] * eta[i];
}

ArgminResult penalized_cubic_argmin(std::size_t n, const double* g,
                                    const double* w, double a, double b) {
  const double two_a = 2.0 * a;
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d v2a = _mm256_set1_pd(two_a);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d best = _mm256_set1_pd(INFINITY);
  __m256i best_idx = _mm256_setzero_si256();
  __m256i idx = _mm256_setr_epi64x(0, 1, 2, 3);
  const __m256i step = _mm256_set1_epi64x(4);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ag = _mm256_andnot_pd(sign, _mm256_loadu_pd(g + i));
    __m256d cube = _mm256_mul_pd(ag, ag);
    cube = _mm256_mul_pd(cube, ag);
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(vb, cube),
                                    _mm256_mul_pd(v2a, _mm256_loadu_pd(w + i)));
    const __m256d lt = _mm256_cmp_pd(v, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, v, lt);
    best_idx = _mm256_castpd_si256(_mm256_blendv_pd(
        _mm256_castsi256_pd(best_idx), _mm256_castsi256_pd(idx), lt));
    idx = _mm256_add_epi64(idx, step);
  }
  alignas(32) double vals[4];
  alignas(32) std::int64_t ids[4];
  _mm256_store_pd(vals, best);
  _mm256_store_si256(reinterpret_cast<__m256i*>(ids), best_idx);
  ArgminResult res{0, INFINITY};
  bool have = false;
  for (int k = 0; k < 4; ++k) {
    if (vals[k] == INFINITY) continue;
    const auto id = static_cast<std::size_t>(ids[k]);
    if (!have || vals[k] < res.value || (vals[k] == res.value && id < res.index)) {
      res = {id, vals[k]};
      have = true;
    }
  }
  for (; i < n; ++i) {
    const double ag = std::fabs(g[i]);
    double cube = ag * ag;
    cube = cube * ag;
    const double v = b * cube + two_a * w[i];
    if (v < res.value) res = {i, v};
  }
  return res;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{&threshold_residuals, &sum_squares,
                             &wild_response, &penalized_cubic_argmin};
  return t;
}

}  // namespace segreg::kernels::detail
