#include <cmath>

#include "tables.hpp"

namespace kge::simd::detail {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void matvec(std::span<const double> rows, std::span<const double> q, std::span<double> out) {
  const std::size_t d = q.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(rows.subspan(i * d, d), q);
}

void matvec_t(std::span<const double> rows, std::span<const double> coef, std::span<double> acc) {
  const std::size_t d = acc.size();
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const double c = coef[i];
    const double* r = rows.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc[j] += c * r[j];
  }
}

void rank1_update(std::span<double> rows, std::span<const double> coef, std::span<const double> q) {
  const std::size_t d = q.size();
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const double c = coef[i];
    double* r = rows.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) r[j] += c * q[j];
  }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void running_mean(std::span<double> y, std::span<const double> x, double n) {
  const double denom = n + 1.0;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (y[i] * n + x[i]) / denom;
}

void adam_update(std::span<double> p, std::span<double> m, std::span<double> v,
                 std::span<const double> g, const AdamCoeffs& c) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

constexpr Kernels kTable{
    Isa::kScalar, dot, matvec, matvec_t, rank1_update, axpy, running_mean, adam_update,
};

}  // namespace

const Kernels& scalar_table() noexcept { return kTable; }

}  // namespace kge::simd::detail
