#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "condvar/errors.hpp"
#include "condvar/kernels.hpp"

namespace condvar::kernels {
namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("CONDVAR_KERNELS")) {
    const std::string want(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
      if (want == backend_name(b) && backend_supported(b)) return b;
  }
  return detect_backend();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> t{&table_for(initial_backend())};
  return t;
}

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw ParameterError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return cpu_has_avx2();
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect_backend() {
  if (backend_supported(Backend::avx2)) return Backend::avx2;
  if (backend_supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const KernelTable& table_for(Backend b) {
  switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: return avx2::table;
#endif
#if defined(__aarch64__)
    case Backend::neon: return neon::table;
#endif
    default: return scalar::table;
  }
}

Backend active_backend() { return active_table().load()->backend; }

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw ParameterError("kernel backend '" + std::string(backend_name(b)) +
                         "' is not supported on this machine");
  active_table().store(&table_for(b));
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_same(x.size(), y.size(), "dot");
  return active_table().load()->dot(x.data(), y.data(), x.size());
}

double nrm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size(), "axpy");
  active_table().load()->axpy(a, x.data(), y.data(), x.size());
}

void xpay(std::span<const double> x, double a, std::span<double> y) {
  check_same(x.size(), y.size(), "xpay");
  active_table().load()->xpay(x.data(), a, y.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  check_same(a.size(), rows * cols, "gemv matrix");
  check_same(x.size(), cols, "gemv x");
  check_same(y.size(), rows, "gemv y");
  active_table().load()->gemv(a.data(), rows, cols, x.data(), y.data());
}

}  // namespace condvar::kernels
