// Compiled with -mavx2 only; selected at runtime after a CPU feature check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "vfp/simd/kernels.hpp"

namespace vfp::simd::detail {
namespace {

constexpr std::size_t kLanes = 4;

// std::min / std::max semantics: the first operand wins unless the second
// compares strictly smaller / larger.
inline __m256d min4(__m256d a, __m256d b) { return _mm256_blendv_pd(a, b, _mm256_cmp_pd(b, a, _CMP_LT_OQ)); }
inline __m256d max4(__m256d a, __m256d b) { return _mm256_blendv_pd(a, b, _mm256_cmp_pd(a, b, _CMP_LT_OQ)); }

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

void divide(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    _mm256_storeu_pd(out + j, _mm256_div_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j)));
  }
  for (; j < n; ++j) out[j] = a[j] / b[j];
}

void log_slopes(const double* h, double* out, std::size_t n) {
  if (n == 0) return;
  out[0] = 1.0;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d cap = _mm256_set1_pd(kMaxRatio);
  const __m256d floor = _mm256_set1_pd(1.0 / kMaxRatio);
  std::size_t j = 1;
  for (; j + kLanes < n; j += kLanes) {
    const __m256d hm = _mm256_loadu_pd(h + j - 1);
    const __m256d h0 = _mm256_loadu_pd(h + j);
    const __m256d hp = _mm256_loadu_pd(h + j + 1);
    const __m256d rm = _mm256_div_pd(h0, hm);
    const __m256d rp = _mm256_div_pd(hp, h0);
    const __m256d up = _mm256_and_pd(_mm256_cmp_pd(rm, one, _CMP_GT_OQ), _mm256_cmp_pd(rp, one, _CMP_GT_OQ));
    const __m256d down = _mm256_and_pd(_mm256_cmp_pd(rm, one, _CMP_LT_OQ), _mm256_cmp_pd(rp, one, _CMP_LT_OQ));
    __m256d ratio = one;
    ratio = _mm256_blendv_pd(ratio, min4(min4(rm, rp), cap), up);
    ratio = _mm256_blendv_pd(ratio, max4(max4(rm, rp), floor), down);
    _mm256_storeu_pd(out + j, _mm256_sqrt_pd(ratio));
  }
  for (; j + 1 < n; ++j) out[j] = log_slope(h[j - 1], h[j], h[j + 1]);
  if (n > 1) out[n - 1] = 1.0;
}

void muscl_fluxes(const double* h, const double* q, const double* face_w, double speed,
                  double* flux, std::size_t n) {
  flux[0] = 0.0;
  flux[n] = 0.0;
  const __m256d s = _mm256_set1_pd(speed);
  std::size_t j = 1;
  if (speed >= 0.0) {
    for (; j + kLanes <= n; j += kLanes) {
      const __m256d face = _mm256_mul_pd(_mm256_loadu_pd(h + j - 1), _mm256_loadu_pd(q + j - 1));
      const __m256d w = _mm256_mul_pd(s, _mm256_loadu_pd(face_w + j));
      _mm256_storeu_pd(flux + j, _mm256_mul_pd(w, face));
    }
    for (; j < n; ++j) flux[j] = speed * face_w[j] * (h[j - 1] * q[j - 1]);
  } else {
    for (; j + kLanes <= n; j += kLanes) {
      const __m256d face = _mm256_div_pd(_mm256_loadu_pd(h + j), _mm256_loadu_pd(q + j));
      const __m256d w = _mm256_mul_pd(s, _mm256_loadu_pd(face_w + j));
      _mm256_storeu_pd(flux + j, _mm256_mul_pd(w, face));
    }
    for (; j < n; ++j) flux[j] = speed * face_w[j] * (h[j] / q[j]);
  }
}

void flux_update(const double* f, const double* flux, double r, double* out, std::size_t n) {
  const __m256d rv = _mm256_set1_pd(r);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(flux + j + 1), _mm256_loadu_pd(flux + j));
    _mm256_storeu_pd(out + j, _mm256_sub_pd(_mm256_loadu_pd(f + j), _mm256_mul_pd(rv, diff)));
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
    const __m256d fm = _mm256_loadu_pd(f + j - 1);
    const __m256d f0 = _mm256_loadu_pd(f + j);
    const __m256d fp = _mm256_loadu_pd(f + j + 1);
    __m256d acc = _mm256_add_pd(f0, _mm256_mul_pd(_mm256_loadu_pd(lo + j), fm));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(mid + j), f0));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(hi + j), fp));
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j + 1 < n; ++j) {
    out[j] = f[j] + lo[j] * f[j - 1] + mid[j] * f[j] + hi[j] * f[j + 1];
  }
  out[n - 1] = f[n - 1] + lo[n - 1] * f[n - 2] + mid[n - 1] * f[n - 1];
}

void average(const double* a, const double* b, double* out, std::size_t n) {
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    _mm256_storeu_pd(out + j,
                     _mm256_mul_pd(half, _mm256_add_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j))));
  }
  for (; j < n; ++j) out[j] = 0.5 * (a[j] + b[j]);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 2 * kLanes <= n; j += 2 * kLanes) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + j + kLanes),
                                             _mm256_loadu_pd(b + j + kLanes)));
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; j < n; ++j) acc += a[j] * b[j];
  return acc;
}

ArgMin relax_row(const double* bx, const double* by, double ax, double ay, double u_row,
                 const double* v, const double* penalty, double* minv, std::int64_t* way,
                 std::int64_t j0, std::size_t n) {
  const __m256d axv = _mm256_set1_pd(ax);
  const __m256d ayv = _mm256_set1_pd(ay);
  const __m256d uv = _mm256_set1_pd(u_row);
  const __m256i j0v = _mm256_set1_epi64x(j0);
  __m256d best_val = _mm256_set1_pd(INFINITY);
  __m256i best_idx = _mm256_set1_epi64x(static_cast<std::int64_t>(n));
  __m256i idx = _mm256_setr_epi64x(0, 1, 2, 3);
  const __m256i step = _mm256_set1_epi64x(kLanes);

  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d dx = _mm256_sub_pd(axv, _mm256_loadu_pd(bx + j));
    const __m256d dy = _mm256_sub_pd(ayv, _mm256_loadu_pd(by + j));
    __m256d cur = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    cur = _mm256_sub_pd(cur, uv);
    cur = _mm256_sub_pd(cur, _mm256_loadu_pd(v + j));
    cur = _mm256_add_pd(cur, _mm256_loadu_pd(penalty + j));

    const __m256d old = _mm256_loadu_pd(minv + j);
    const __m256d better = _mm256_cmp_pd(cur, old, _CMP_LT_OQ);
    const __m256d updated = _mm256_blendv_pd(old, cur, better);
    _mm256_storeu_pd(minv + j, updated);
    const __m256i old_way = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(way + j));
    const __m256i new_way = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(old_way), _mm256_castsi256_pd(j0v), better));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(way + j), new_way);

    const __m256d lower = _mm256_cmp_pd(updated, best_val, _CMP_LT_OQ);
    best_val = _mm256_blendv_pd(best_val, updated, lower);
    best_idx = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(best_idx), _mm256_castsi256_pd(idx), lower));
    idx = _mm256_add_epi64(idx, step);
  }

  alignas(32) double vals[kLanes];
  alignas(32) std::int64_t ids[kLanes];
  _mm256_store_pd(vals, best_val);
  _mm256_store_si256(reinterpret_cast<__m256i*>(ids), best_idx);
  ArgMin best{INFINITY, n};
  for (std::size_t l = 0; l < kLanes; ++l) {
    const auto id = static_cast<std::size_t>(ids[l]);
    if (vals[l] < best.value || (vals[l] == best.value && id < best.index)) {
      best.value = vals[l];
      best.index = id;
    }
  }

  for (; j < n; ++j) {
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
  const __m256d d = _mm256_set1_pd(delta);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    _mm256_storeu_pd(v + j, _mm256_sub_pd(_mm256_loadu_pd(v + j),
                                          _mm256_mul_pd(_mm256_loadu_pd(used + j), d)));
    _mm256_storeu_pd(minv + j, _mm256_sub_pd(_mm256_loadu_pd(minv + j), d));
  }
  for (; j < n; ++j) {
    v[j] -= used[j] * delta;
    minv[j] -= delta;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2",       divide,        log_slopes, muscl_fluxes,
                                 flux_update,  tridiag_apply, average,       dot,
                                 relax_row,    shift_duals};
  return table;
}

}  // namespace vfp::simd::detail
