#include <atomic>
#include <cstdlib>
#include <string>

#include "hsi/error.hpp"
#include "hsi/kernels/kernels.hpp"

namespace hsi::kernels {

namespace {

Isa best_isa() {
#if defined(HSI_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa initial_isa() {
  if (const char* env = std::getenv("HSI_ISA"); env != nullptr && std::string(env) == "scalar") return Isa::scalar;
  return best_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::scalar || best_isa() == Isa::avx2; }

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw ResourceError("kernel variant not supported here: " + std::string(isa_name(isa)));
  active().store(isa, std::memory_order_relaxed);
}

RayScan ray_scan(const TriangleBatch& tris, std::size_t begin, std::size_t end, const Vec3& origin, const Vec3& dir,
                 double eps) {
#if defined(HSI_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::ray_scan(tris, begin, end, origin, dir, eps);
#endif
  return scalar::ray_scan(tris, begin, end, origin, dir, eps);
}

double dot(const double* a, const double* b, std::size_t n) {
#if defined(HSI_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::dot(a, b, n);
#endif
  return scalar::dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if defined(HSI_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::axpy(alpha, x, y, n);
#endif
  scalar::axpy(alpha, x, y, n);
}

}  // namespace hsi::kernels
