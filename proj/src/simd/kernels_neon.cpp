// AArch64 variant. Two-lane float64 vectors; argmin and dot stay scalar.
#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "vfp/simd/kernels.hpp"

namespace vfp::simd::detail {
namespace {

constexpr std::size_t kLanes = 2;

inline double log_slope(double hm, double h0, double hp) {
  const double rm = h0 / hm;
  const double rp = hp / h0;
  double ratio = 1.0;
  if (rm > 1.0 && rp > 1.0) {
    ratio = std::min(std::min(rm, rp), kMaxRatio);
  } else if (rm < 1.0 && rp < 1.0) {
    ratio = std::max(std::max(rm, rp), 1.0 / kMaxRatio);
  }
  return std::sqrt(ratio);
}

// std::min / std::max semantics: the first operand wins unless the second
// compares strictly smaller / larger.
inline float64x2_t min2(float64x2_t a, float64x2_t b) { return vbslq_f64(vcltq_f64(b, a), b, a); }
inline float64x2_t max2(float64x2_t a, float64x2_t b) { return vbslq_f64(vcltq_f64(a, b), b, a); }

void divide(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) vst1q_f64(out + j, vdivq_f64(vld1q_f64(a + j), vld1q_f64(b + j)));
  for (; j < n; ++j) out[j] = a[j] / b[j];
}

void log_slopes(const double* h, double* out, std::size_t n) {
  if (n == 0) return;
  out[0] = 1.0;
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t cap = vdupq_n_f64(kMaxRatio);
  const float64x2_t floor = vdupq_n_f64(1.0 / kMaxRatio);
  std::size_t j = 1;
  for (; j + kLanes < n; j += kLanes) {
    const float64x2_t hm = vld1q_f64(h + j - 1);
    const float64x2_t h0 = vld1q_f64(h + j);
    const float64x2_t hp = vld1q_f64(h + j + 1);
    const float64x2_t rm = vdivq_f64(h0, hm);
    const float64x2_t rp = vdivq_f64(hp, h0);
    const uint64x2_t up = vandq_u64(vcgtq_f64(rm, one), vcgtq_f64(rp, one));
    const uint64x2_t down = vandq_u64(vcltq_f64(rm, one), vcltq_f64(rp, one));
    float64x2_t ratio = one;
    ratio = vbslq_f64(up, min2(min2(rm, rp), cap), ratio);
    ratio = vbslq_f64(down, max2(max2(rm, rp), floor), ratio);
    vst1q_f64(out + j, vsqrtq_f64(ratio));
  }
  for (; j + 1 < n; ++j) out[j] = log_slope(h[j - 1], h[j], h[j + 1]);
  if (n > 1) out[n - 1] = 1.0;
}

void muscl_fluxes(const double* h, const double* q, const double* face_w, double speed,
                  double* flux, std::size_t n) {
  flux[0] = 0.0;
  flux[n] = 0.0;
  const float64x2_t s = vdupq_n_f64(speed);
  std::size_t j = 1;
  if (speed >= 0.0) {
    for (; j + kLanes <= n; j += kLanes) {
      const float64x2_t face = vmulq_f64(vld1q_f64(h + j - 1), vld1q_f64(q + j - 1));
      vst1q_f64(flux + j, vmulq_f64(vmulq_f64(s, vld1q_f64(face_w + j)), face));
    }
    for (; j < n; ++j) flux[j] = speed * face_w[j] * (h[j - 1] * q[j - 1]);
  } else {
    for (; j + kLanes <= n; j += kLanes) {
      const float64x2_t face = vdivq_f64(vld1q_f64(h + j), vld1q_f64(q + j));
      vst1q_f64(flux + j, vmulq_f64(vmulq_f64(s, vld1q_f64(face_w + j)), face));
    }
    for (; j < n; ++j) flux[j] = speed * face_w[j] * (h[j] / q[j]);
  }
}

void flux_update(const double* f, const double* flux, double r, double* out, std::size_t n) {
  const float64x2_t rv = vdupq_n_f64(r);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const float64x2_t diff = vsubq_f64(vld1q_f64(flux + j + 1), vld1q_f64(flux + j));
    vst1q_f64(out + j, vsubq_f64(vld1q_f64(f + j), vmulq_f64(rv, diff)));
  }
  for (; j < n; ++j) out[j] = f[j] - r * (flux[j + 1] - flux[j]);
}

void tridiag_apply(const double* lo, const double* mid, const double* hi, const double* f,
                   double* out, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = f[0] + mid[0] * f[0];
    return;
  }
  out[0] = f[0] + mid[0] * f[0] + hi[0] * f[1];
  std::size_t j = 1;
  for (; j + kLanes < n; j += kLanes) {
    const float64x2_t f0 = vld1q_f64(f + j);
    float64x2_t acc = vaddq_f64(f0, vmulq_f64(vld1q_f64(lo + j), vld1q_f64(f + j - 1)));
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(mid + j), f0));
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(hi + j), vld1q_f64(f + j + 1)));
    vst1q_f64(out + j, acc);
  }
  for (; j + 1 < n; ++j) out[j] = f[j] + lo[j] * f[j - 1] + mid[j] * f[j] + hi[j] * f[j + 1];
  out[n - 1] = f[n - 1] + lo[n - 1] * f[n - 2] + mid[n - 1] * f[n - 1];
}

void average(const double* a, const double* b, double* out, std::size_t n) {
  const float64x2_t half = vdupq_n_f64(0.5);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    vst1q_f64(out + j, vmulq_f64(half, vaddq_f64(vld1q_f64(a + j), vld1q_f64(b + j))));
  }
  for (; j < n; ++j) out[j] = 0.5 * (a[j] + b[j]);
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += a[j] * b[j];
  return acc;
}

ArgMin relax_row(const double* bx, const double* by, double ax, double ay, double u_row,
                 const double* v, const double* penalty, double* minv, std::int64_t* way,
                 std::int64_t j0, std::size_t n) {
  ArgMin best{INFINITY, n};
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = ax - bx[j];
    const double dy = ay - by[j];
    const double cur = dx * dx + dy * dy - u_row - v[j] + penalty[j];
    if (cur < minv[j]) {
      minv[j] = cur;
      way[j] = j0;
    }
    if (minv[j] < best.value) {
      best.value = minv[j];
      best.index = j;
    }
  }
  return best;
}

void shift_duals(double* v, double* minv, const double* used, double delta, std::size_t n) {
  const float64x2_t d = vdupq_n_f64(delta);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    vst1q_f64(v + j, vsubq_f64(vld1q_f64(v + j), vmulq_f64(vld1q_f64(used + j), d)));
    vst1q_f64(minv + j, vsubq_f64(vld1q_f64(minv + j), d));
  }
  for (; j < n; ++j) {
    v[j] -= used[j] * delta;
    minv[j] -= delta;
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{"neon",       divide,        log_slopes, muscl_fluxes,
                                 flux_update,  tridiag_apply, average,       dot,
                                 relax_row,    shift_duals};
  return table;
}

}  // namespace vfp::simd::detail
