#pragma once

// Data-parallel inner loops with a scalar reference implementation and SIMD
// variants. The public entry points dispatch at runtime to the best variant
// the CPU supports; HSI_ISA=scalar in the environment forces the reference.
//
// Equivalence contract (checked in tests/unit/test_kernels.cpp):
//   ray_scan  - bit-identical across variants (same per-lane operation order,
//               no FMA contraction, exact min reduction).
//   axpy      - bit-identical across variants.
//   dot       - variants differ only in summation order; each variant uses a
//               fixed order, so results are reproducible per variant.

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "hsi/math.hpp"

namespace hsi::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Throws ResourceError if the CPU or build lacks the requested variant.
void set_active_isa(Isa isa);

// Triangles stored as origin vertex plus two edge vectors, structure of arrays.
struct TriangleBatch {
  std::vector<double> v0x, v0y, v0z, e1x, e1y, e1z, e2x, e2y, e2z;

  void push(const Vec3& a, const Vec3& b, const Vec3& c);
  std::size_t size() const { return v0x.size(); }
};

struct RayScan {
  int crossings = 0;       // hits strictly inside a triangle at t > eps
  bool grazing = false;    // some hit lies within eps of an edge, or |t| <= eps
  double nearest = std::numeric_limits<double>::infinity();  // closed-triangle hit with t > eps
};

RayScan ray_scan(const TriangleBatch& tris, std::size_t begin, std::size_t end, const Vec3& origin,
                 const Vec3& dir, double eps);
double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

namespace scalar {
RayScan ray_scan(const TriangleBatch& tris, std::size_t begin, std::size_t end, const Vec3& origin,
                 const Vec3& dir, double eps);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(HSI_HAVE_AVX2)
namespace avx2 {
RayScan ray_scan(const TriangleBatch& tris, std::size_t begin, std::size_t end, const Vec3& origin,
                 const Vec3& dir, double eps);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace hsi::kernels
