#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace vfp::simd {

/// Result of a masked argmin sweep: smallest value and its first index.
struct ArgMin {
  double value;
  std::size_t index;
};

/// Largest ratio between neighbouring h values used by log_slopes.
inline constexpr double kMaxRatio = 2.25;

/// Table of inner-loop kernels. Every ISA variant computes elementwise
/// kernels with the same operation order as the scalar reference, so their
/// outputs are bit-identical; only `dot` reassociates its sum.
struct KernelTable {
  const char* name;

  /// out[j] = a[j] / b[j]
  void (*divide)(const double* a, const double* b, double* out, std::size_t n);

  /// Limited log-linear reconstruction factors. For interior j with
  /// rm = h[j] / h[j-1] and rp = h[j+1] / h[j], out[j] = sqrt(q) where q is
  /// min(rm, rp, kMaxRatio) if both exceed 1, max(rm, rp, 1 / kMaxRatio) if
  /// both are below 1, and 1 otherwise (including NaN). This is minmod on
  /// ln h: the right face value is h[j] * out[j], the left one h[j] / out[j].
  /// Both ends get 1.
  void (*log_slopes)(const double* h, double* out, std::size_t n);

  /// Upwind face fluxes along a line of n cells with constant speed. flux has
  /// n + 1 entries; flux[j] sits between cells j-1 and j and equals
  /// speed * face_w[j] * (h[j-1] * q[j-1]) for speed >= 0 and
  /// speed * face_w[j] * (h[j] / q[j]) otherwise. Boundary faces carry zero
  /// flux.
  void (*muscl_fluxes)(const double* h, const double* q, const double* face_w, double speed,
                       double* flux, std::size_t n);

  /// out[j] = f[j] - r * (flux[j+1] - flux[j])
  void (*flux_update)(const double* f, const double* flux, double r, double* out, std::size_t n);

  /// out[j] = f[j] + lo[j] f[j-1] + mid[j] f[j] + hi[j] f[j+1], with the
  /// missing neighbours at both ends treated as absent.
  void (*tridiag_apply)(const double* lo, const double* mid, const double* hi, const double* f,
                        double* out, std::size_t n);

  /// out[j] = 0.5 * (a[j] + b[j])
  void (*average)(const double* a, const double* b, double* out, std::size_t n);

  /// sum_j a[j] b[j]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// One row-relaxation of the shortest augmenting path assignment solver.
  /// For every column j: cur = |(ax, ay) - (bx[j], by[j])|^2 - u_row - v[j]
  /// + penalty[j]; if cur < minv[j] the column records (cur, j0). Returns the
  /// first index of the smallest minv.
  ArgMin (*relax_row)(const double* bx, const double* by, double ax, double ay, double u_row,
                      const double* v, const double* penalty, double* minv, std::int64_t* way,
                      std::int64_t j0, std::size_t n);

  /// v[j] -= used[j] * delta; minv[j] -= delta.
  void (*shift_duals)(double* v, double* minv, const double* used, double delta, std::size_t n);
};

const KernelTable& scalar_kernels();

/// Table for the widest ISA compiled in and supported by the running CPU.
const KernelTable& best_kernels();

/// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_kernels();

/// Kernels used by the library. Defaults to best_kernels(), unless the
/// environment variable VFP_SIMD names another available table
/// ("scalar", "avx2", "neon").
const KernelTable& active_kernels();

/// Selects the active table by name; returns false if it is unavailable.
bool select_kernels(std::string_view name);

namespace detail {
#if defined(VFP_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif
#if defined(VFP_HAVE_NEON_TU)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace vfp::simd
