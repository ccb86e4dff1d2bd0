#include "vfp/assignment.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "vfp/errors.hpp"
#include "vfp/simd/kernels.hpp"

namespace vfp {

Assignment squared_distance_assignment(std::span<const Point2> a, std::span<const Point2> b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw ContractViolation("assignment needs clouds of equal size");
  Assignment result;
  if (n == 0) return result;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::int64_t kDummy = -1;
  const auto& kt = simd::active_kernels();

  std::vector<double> bx(n), by(n);
  for (std::size_t j = 0; j < n; ++j) {
    bx[j] = b[j].x;
    by[j] = b[j].v;
  }
  std::vector<double> u(n, 0.0), v(n, 0.0), minv(n), used(n), penalty(n);
  std::vector<std::int64_t> row_of(n, -1), way(n);
  std::vector<std::size_t> used_cols;
  used_cols.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0.0);
    std::fill(penalty.begin(), penalty.end(), 0.0);
    used_cols.clear();
    std::int64_t j0 = kDummy;
    while (true) {
      const auto i0 = static_cast<std::size_t>(j0 == kDummy ? static_cast<std::int64_t>(i) : row_of[j0]);
      if (j0 != kDummy) {
        used[j0] = 1.0;
        penalty[j0] = kInf;
        minv[j0] = kInf;
        used_cols.push_back(static_cast<std::size_t>(j0));
      }
      const simd::ArgMin best = kt.relax_row(bx.data(), by.data(), a[i0].x, a[i0].v, u[i0], v.data(),
                                             penalty.data(), minv.data(), way.data(), j0, n);
      if (best.index >= n || !std::isfinite(best.value)) {
        throw ContractViolation("assignment: non-finite cost");
      }
      const double delta = best.value;
      u[i] += delta;
      for (std::size_t j : used_cols) u[static_cast<std::size_t>(row_of[j])] += delta;
      kt.shift_duals(v.data(), minv.data(), used.data(), delta, n);
      j0 = static_cast<std::int64_t>(best.index);
      if (row_of[j0] == -1) break;
    }
    while (j0 != kDummy) {
      const std::int64_t j1 = way[j0];
      row_of[j0] = j1 == kDummy ? static_cast<std::int64_t>(i) : row_of[j1];
      j0 = j1;
    }
  }

  result.row_of.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = static_cast<std::size_t>(row_of[j]);
    result.row_of[j] = r;
    const double dx = a[r].x - b[j].x;
    const double dv = a[r].v - b[j].v;
    result.cost += dx * dx + dv * dv;
  }
  return result;
}

}  // namespace vfp
