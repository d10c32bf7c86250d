// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "tables.hpp"

namespace kge::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot_raw(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy_raw(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  return dot_raw(a.data(), b.data(), a.size());
}

void matvec(std::span<const double> rows, std::span<const double> q, std::span<double> out) {
  const std::size_t d = q.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot_raw(rows.data() + i * d, q.data(), d);
}

void matvec_t(std::span<const double> rows, std::span<const double> coef, std::span<double> acc) {
  const std::size_t d = acc.size();
  for (std::size_t i = 0; i < coef.size(); ++i) axpy_raw(coef[i], rows.data() + i * d, acc.data(), d);
}

void rank1_update(std::span<double> rows, std::span<const double> coef, std::span<const double> q) {
  const std::size_t d = q.size();
  for (std::size_t i = 0; i < coef.size(); ++i) axpy_raw(coef[i], q.data(), rows.data() + i * d, d);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  axpy_raw(a, x.data(), y.data(), y.size());
}

void running_mean(std::span<double> y, std::span<const double> x, double n) {
  const std::size_t len = y.size();
  const __m256d vn = _mm256_set1_pd(n);
  const __m256d vd = _mm256_set1_pd(n + 1.0);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d num = _mm256_fmadd_pd(_mm256_loadu_pd(y.data() + i), vn, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_div_pd(num, vd));
  }
  for (; i < len; ++i) y[i] = (y[i] * n + x[i]) / (n + 1.0);
}

void adam_update(std::span<double> p, std::span<double> m, std::span<double> v,
                 std::span<const double> g, const AdamCoeffs& c) {
  const std::size_t n = p.size();
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d one_b1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d one_b2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias1);
  const __m256d bc2 = _mm256_set1_pd(c.bias2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g.data() + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m.data() + i)),
                                     _mm256_mul_pd(one_b1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v.data() + i)),
                                     _mm256_mul_pd(_mm256_mul_pd(one_b2, gi), gi));
    _mm256_storeu_pd(m.data() + i, mi);
    _mm256_storeu_pd(v.data() + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(p.data() + i, _mm256_sub_pd(_mm256_loadu_pd(p.data() + i), step));
  }
  for (; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    p[i] -= c.lr * (m[i] / c.bias1) / (std::sqrt(v[i] / c.bias2) + c.eps);
  }
}

constexpr Kernels kTable{
    Isa::kAvx2, dot, matvec, matvec_t, rank1_update, axpy, running_mean, adam_update,
};

}  // namespace

const Kernels& avx2_table() noexcept { return kTable; }

}  // namespace kge::simd::detail
