#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and an AVX2 variant; the variant is chosen once at startup
// from the CPU feature flags and can be overridden with SEGREG_SIMD=scalar
// (or force_isa() in tests). Elementwise kernels are bit-identical across
// variants; reductions agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace segreg::kernels {

enum class Isa { scalar, avx2 };

struct ArgminResult {
  std::size_t index = 0;
  double value = 0.0;
};

struct KernelTable {
  // out[i] = y[i] - sum_j cols[j][i] * (beta[j] + delta[j] * 1{q[i] > tau})
  void (*threshold_residuals)(std::size_t n, const double* y,
                              std::span<const double* const> cols,
                              const double* q, double tau,
                              std::span<const double> beta,
                              std::span<const double> delta, double* out);
  double (*sum_squares)(std::size_t n, const double* x);
  // out[i] = fitted[i] + resid[i] * eta[i]
  void (*wild_response)(std::size_t n, const double* fitted,
                        const double* resid, const double* eta, double* out);
  // argmin_i  b*|g[i]|^3 + 2*a*w[i], first index on ties
  ArgminResult (*penalized_cubic_argmin)(std::size_t n, const double* g,
                                         const double* w, double a, double b);
};

const KernelTable& table(Isa isa);

/// True when the running CPU can execute `isa`.
bool supported(Isa isa);

/// ISA used by the convenience wrappers below.
Isa active_isa();

/// Overrides the dispatch choice (tests, benchmarking). Throws InvalidConfig
/// if the CPU lacks the requested ISA.
void force_isa(Isa isa);

std::string_view isa_name(Isa isa);

inline const KernelTable& active() { return table(active_isa()); }

}  // namespace segreg::kernels
