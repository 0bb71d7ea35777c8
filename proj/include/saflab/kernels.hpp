#pragma once
// Inner-loop arithmetic shared by the filter bank and the adaptive updates.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2
// variant is compiled into its own translation unit and picked at runtime
// when the CPU supports it. Elementwise kernels (axpy, scale, blend) round
// exactly like the scalar path; reductions (dot, sum_squares) reassociate and
// agree only to within rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace saflab::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  // y += a * x
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // y *= s
  void (*scale)(double* y, double s, std::size_t n);
  // out = lambda * a + (1 - lambda) * b
  void (*blend)(double* out, double lambda, const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);

// Table used by the library. Chosen on first use: the widest supported ISA,
// unless SAFLAB_SIMD=scalar is set in the environment.
const KernelTable& active();

// Forces a specific table (tests, benchmarking). Returns false if the ISA is
// unavailable, leaving the selection untouched.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double sum_squares(std::span<const double> a) {
  return active().sum_squares(a.data(), a.size());
}

inline void axpy(std::span<double> y, double a, std::span<const double> x) {
  active().axpy(y.data(), a, x.data(), y.size());
}

inline void scale(std::span<double> y, double s) { active().scale(y.data(), s, y.size()); }

inline void blend(std::span<double> out, double lambda, std::span<const double> a,
                  std::span<const double> b) {
  active().blend(out.data(), lambda, a.data(), b.data(), out.size());
}

}  // namespace saflab::kernels
