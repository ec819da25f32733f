#include <cmath>

#include "hsi/kernels/kernels.hpp"

namespace hsi::kernels {

void TriangleBatch::push(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  v0x.push_back(a.x); v0y.push_back(a.y); v0z.push_back(a.z);
  e1x.push_back(e1.x); e1y.push_back(e1.y); e1z.push_back(e1.z);
  e2x.push_back(e2.x); e2y.push_back(e2.y); e2z.push_back(e2.z);
}

namespace scalar {

// Moller-Trumbore. The expression order here is mirrored lane-for-lane by the
// SIMD variants; keep them in sync.
RayScan ray_scan(const TriangleBatch& tris, std::size_t begin, std::size_t end, const Vec3& o, const Vec3& d,
                 double eps) {
  RayScan out;
  for (std::size_t i = begin; i < end; ++i) {
    const double px = d.y * tris.e2z[i] - d.z * tris.e2y[i];
    const double py = d.z * tris.e2x[i] - d.x * tris.e2z[i];
    const double pz = d.x * tris.e2y[i] - d.y * tris.e2x[i];
    const double det = tris.e1x[i] * px + tris.e1y[i] * py + tris.e1z[i] * pz;
    if (!(std::fabs(det) >= 1e-14)) continue;
    const double inv = 1.0 / det;
    const double sx = o.x - tris.v0x[i];
    const double sy = o.y - tris.v0y[i];
    const double sz = o.z - tris.v0z[i];
    const double u = (sx * px + sy * py + sz * pz) * inv;
    const double qx = sy * tris.e1z[i] - sz * tris.e1y[i];
    const double qy = sz * tris.e1x[i] - sx * tris.e1z[i];
    const double qz = sx * tris.e1y[i] - sy * tris.e1x[i];
    const double v = (d.x * qx + d.y * qy + d.z * qz) * inv;
    const double t = (tris.e2x[i] * qx + tris.e2y[i] * qy + tris.e2z[i] * qz) * inv;
    const double w = u + v;

    const bool near_tri = u >= -eps && v >= -eps && w <= 1.0 + eps && t >= -eps;
    if (!near_tri) continue;
    const bool strict = u > eps && v > eps && w < 1.0 - eps && t > eps;
    if (strict) ++out.crossings;
    else out.grazing = true;
    const bool closed = u >= 0.0 && v >= 0.0 && w <= 1.0 && t > eps;
    if (closed && t < out.nearest) out.nearest = t;
  }
  return out;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar
}  // namespace hsi::kernels
