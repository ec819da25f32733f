// Compiled with -mavx2 only (no -mfma) so products and sums round exactly
// like the scalar reference.
#include <immintrin.h>

#include <bit>

#include "hsi/kernels/kernels.hpp"

namespace hsi::kernels::avx2 {

namespace {

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace

RayScan ray_scan(const TriangleBatch& tris, std::size_t begin, std::size_t end, const Vec3& o, const Vec3& d,
                 double eps) {
  RayScan out;
  const __m256d dx = _mm256_set1_pd(d.x), dy = _mm256_set1_pd(d.y), dz = _mm256_set1_pd(d.z);
  const __m256d ox = _mm256_set1_pd(o.x), oy = _mm256_set1_pd(o.y), oz = _mm256_set1_pd(o.z);
  const __m256d veps = _mm256_set1_pd(eps), neps = _mm256_set1_pd(-eps);
  const __m256d one = _mm256_set1_pd(1.0), zero = _mm256_setzero_pd();
  const __m256d one_p = _mm256_set1_pd(1.0 + eps), one_m = _mm256_set1_pd(1.0 - eps);
  const __m256d det_min = _mm256_set1_pd(1e-14);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d nearest = inf;

  std::size_t i = begin;
  for (; i + 4 <= end; i += 4) {
    const __m256d e1x = _mm256_loadu_pd(&tris.e1x[i]), e1y = _mm256_loadu_pd(&tris.e1y[i]),
                  e1z = _mm256_loadu_pd(&tris.e1z[i]);
    const __m256d e2x = _mm256_loadu_pd(&tris.e2x[i]), e2y = _mm256_loadu_pd(&tris.e2y[i]),
                  e2z = _mm256_loadu_pd(&tris.e2z[i]);
    const __m256d px = _mm256_sub_pd(_mm256_mul_pd(dy, e2z), _mm256_mul_pd(dz, e2y));
    const __m256d py = _mm256_sub_pd(_mm256_mul_pd(dz, e2x), _mm256_mul_pd(dx, e2z));
    const __m256d pz = _mm256_sub_pd(_mm256_mul_pd(dx, e2y), _mm256_mul_pd(dy, e2x));
    const __m256d det = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e1x, px), _mm256_mul_pd(e1y, py)),
                                      _mm256_mul_pd(e1z, pz));
    const __m256d valid = _mm256_cmp_pd(_mm256_and_pd(det, abs_mask), det_min, _CMP_GE_OQ);
    if (_mm256_movemask_pd(valid) == 0) continue;
    const __m256d inv = _mm256_div_pd(one, det);
    const __m256d sx = _mm256_sub_pd(ox, _mm256_loadu_pd(&tris.v0x[i]));
    const __m256d sy = _mm256_sub_pd(oy, _mm256_loadu_pd(&tris.v0y[i]));
    const __m256d sz = _mm256_sub_pd(oz, _mm256_loadu_pd(&tris.v0z[i]));
    const __m256d u = _mm256_mul_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(sx, px), _mm256_mul_pd(sy, py)), _mm256_mul_pd(sz, pz)), inv);
    const __m256d qx = _mm256_sub_pd(_mm256_mul_pd(sy, e1z), _mm256_mul_pd(sz, e1y));
    const __m256d qy = _mm256_sub_pd(_mm256_mul_pd(sz, e1x), _mm256_mul_pd(sx, e1z));
    const __m256d qz = _mm256_sub_pd(_mm256_mul_pd(sx, e1y), _mm256_mul_pd(sy, e1x));
    const __m256d v = _mm256_mul_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, qx), _mm256_mul_pd(dy, qy)), _mm256_mul_pd(dz, qz)), inv);
    const __m256d t = _mm256_mul_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e2x, qx), _mm256_mul_pd(e2y, qy)), _mm256_mul_pd(e2z, qz)),
        inv);
    const __m256d w = _mm256_add_pd(u, v);

    __m256d near_tri = _mm256_and_pd(valid, _mm256_cmp_pd(u, neps, _CMP_GE_OQ));
    near_tri = _mm256_and_pd(near_tri, _mm256_cmp_pd(v, neps, _CMP_GE_OQ));
    near_tri = _mm256_and_pd(near_tri, _mm256_cmp_pd(w, one_p, _CMP_LE_OQ));
    near_tri = _mm256_and_pd(near_tri, _mm256_cmp_pd(t, neps, _CMP_GE_OQ));
    const int near_bits = _mm256_movemask_pd(near_tri);
    if (near_bits == 0) continue;

    __m256d strict = _mm256_and_pd(near_tri, _mm256_cmp_pd(u, veps, _CMP_GT_OQ));
    strict = _mm256_and_pd(strict, _mm256_cmp_pd(v, veps, _CMP_GT_OQ));
    strict = _mm256_and_pd(strict, _mm256_cmp_pd(w, one_m, _CMP_LT_OQ));
    strict = _mm256_and_pd(strict, _mm256_cmp_pd(t, veps, _CMP_GT_OQ));
    const int strict_bits = _mm256_movemask_pd(strict);
    out.crossings += std::popcount(static_cast<unsigned>(strict_bits));
    if (near_bits & ~strict_bits) out.grazing = true;

    __m256d closed = _mm256_and_pd(near_tri, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
    closed = _mm256_and_pd(closed, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
    closed = _mm256_and_pd(closed, _mm256_cmp_pd(w, one, _CMP_LE_OQ));
    closed = _mm256_and_pd(closed, _mm256_cmp_pd(t, veps, _CMP_GT_OQ));
    nearest = _mm256_min_pd(nearest, _mm256_blendv_pd(inf, t, closed));
  }

  RayScan tail = scalar::ray_scan(tris, i, end, o, d, eps);
  out.crossings += tail.crossings;
  out.grazing = out.grazing || tail.grazing;
  const double lane_min = hmin(nearest);
  out.nearest = lane_min < tail.nearest ? lane_min : tail.nearest;
  return out;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace hsi::kernels::avx2
