#include "saflab/kernels.hpp"

namespace saflab::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double* y, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= s;
}

void blend_scalar(double* out, double lambda, const double* a, const double* b, std::size_t n) {
  const double mu = 1.0 - lambda;
  for (std::size_t i = 0; i < n; ++i) out[i] = lambda * a[i] + mu * b[i];
}

constexpr KernelTable kScalar{Isa::scalar, dot_scalar, sum_squares_scalar, axpy_scalar,
                              scale_scalar, blend_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace saflab::kernels
