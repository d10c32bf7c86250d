#pragma once

// Arithmetic kernels behind scoring, gradients, optimizer and averaging.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant. The variant is picked once at first use from the CPU features;
// the environment variable KGE_ISA=scalar|avx2 overrides the choice.
// Variants agree to floating-point reassociation error, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace kge::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa) noexcept;

// Bias-corrected Adam coefficients for one step.
struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct Kernels {
  Isa isa;

  double (*dot)(std::span<const double> a, std::span<const double> b);

  // out[i] = <rows[i], q>, rows stored row-major with row length q.size().
  void (*matvec)(std::span<const double> rows, std::span<const double> q, std::span<double> out);

  // acc += sum_i coef[i] * rows[i]
  void (*matvec_t)(std::span<const double> rows, std::span<const double> coef,
                   std::span<double> acc);

  // rows[i] += coef[i] * q
  void (*rank1_update)(std::span<double> rows, std::span<const double> coef,
                       std::span<const double> q);

  // y += a * x
  void (*axpy)(double a, std::span<const double> x, std::span<double> y);

  // y = (y * n + x) / (n + 1)
  void (*running_mean)(std::span<double> y, std::span<const double> x, double n);

  void (*adam_update)(std::span<double> param, std::span<double> m, std::span<double> v,
                      std::span<const double> grad, const AdamCoeffs& c);
};

const Kernels& scalar_kernels() noexcept;

// nullptr when not compiled in or not supported by this CPU.
const Kernels* avx2_kernels() noexcept;

// The dispatched kernel table.
const Kernels& kernels() noexcept;

// Overrides dispatch for the rest of the process (tests, benchmarking).
// Returns false if the requested ISA is unavailable.
bool select_isa(Isa isa) noexcept;

}  // namespace kge::simd
