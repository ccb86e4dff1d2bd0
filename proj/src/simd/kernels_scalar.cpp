#include <algorithm>
#include <cmath>

#include "vfp/simd/kernels.hpp"

namespace vfp::simd {
namespace {


void divide(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = a[j] / b[j];
}

void log_slopes(const double* h, double* out, std::size_t n) {
  if (n == 0) return;
  out[0] = 1.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double rm = h[j] / h[j - 1];
    const double rp = h[j + 1] / h[j];
    double ratio = 1.0;
    if (rm > 1.0 && rp > 1.0) {
      ratio = std::min(std::min(rm, rp), kMaxRatio);
    } else if (rm < 1.0 && rp < 1.0) {
      ratio = std::max(std::max(rm, rp), 1.0 / kMaxRatio);
    }
    out[j] = std::sqrt(ratio);
  }
  if (n > 1) out[n - 1] = 1.0;
}

void muscl_fluxes(const double* h, const double* q, const double* face_w, double speed,
                  double* flux, std::size_t n) {
  flux[0] = 0.0;
  flux[n] = 0.0;
  if (speed >= 0.0) {
    for (std::size_t j = 1; j < n; ++j) {
      flux[j] = speed * face_w[j] * (h[j - 1] * q[j - 1]);
    }
  } else {
    for (std::size_t j = 1; j < n; ++j) {
      flux[j] = speed * face_w[j] * (h[j] / q[j]);
    }
  }
}

void flux_update(const double* f, const double* flux, double r, double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = f[j] - r * (flux[j + 1] - flux[j]);
}

void tridiag_apply(const double* lo, const double* mid, const double* hi, const double* f,
                   double* out, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = f[0] + mid[0] * f[0];
    return;
  }
  out[0] = f[0] + mid[0] * f[0] + hi[0] * f[1];
  for (std::size_t j = 1; j + 1 < n; ++j) {
    out[j] = f[j] + lo[j] * f[j - 1] + mid[j] * f[j] + hi[j] * f[j + 1];
  }
  out[n - 1] = f[n - 1] + lo[n - 1] * f[n - 2] + mid[n - 1] * f[n - 1];
}

void average(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.5 * (a[j] + b[j]);
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
  for (std::size_t j = 0; j < n; ++j) {
    v[j] -= used[j] * delta;
    minv[j] -= delta;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",      divide,      log_slopes, muscl_fluxes,
                                 flux_update,   tridiag_apply, average,     dot,
                                 relax_row,     shift_duals};
  return table;
}

}  // namespace vfp::simd
