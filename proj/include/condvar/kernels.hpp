#pragma once

// Dense level-1/level-2 kernels used by the CG solver, the matrix-free
// Hessian operator and the circulant DFT.
//
// Each kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on aarch64). The variant is chosen once at
// startup from CPU features; CONDVAR_KERNELS=scalar|avx2|neon overrides it
// and set_backend() switches it at runtime (tests use this to compare).
//
// SIMD variants reorder floating-point sums, so results agree with the
// scalar reference to rounding, not bitwise. A given backend is
// deterministic for a given input.

#include <cstddef>
#include <span>
#include <string_view>

namespace condvar::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b);
bool backend_supported(Backend b);
Backend active_backend();
// Throws ParameterError if the CPU (or build) does not support b.
void set_backend(Backend b);
// Best backend supported by this CPU, ignoring the environment override.
Backend detect_backend();

double dot(std::span<const double> x, std::span<const double> y);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
// y = x + a * y
void xpay(std::span<const double> x, double a, std::span<double> y);
// y = A x with A row-major rows x cols.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);

double nrm2(std::span<const double> x);

// Per-backend entry points. Lengths are not checked here; the dispatched
// functions above check them.
struct KernelTable {
  Backend backend;
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*xpay)(const double* x, double a, double* y, std::size_t n);
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
};

const KernelTable& table_for(Backend b);

namespace scalar {
extern const KernelTable table;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const KernelTable table;
}
#endif
#if defined(__aarch64__)
namespace neon {
extern const KernelTable table;
}
#endif

}  // namespace condvar::kernels
