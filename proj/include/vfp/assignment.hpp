#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vfp {

/// Point in phase space.
struct Point2 {
  double x = 0.0;
  double v = 0.0;
};

struct Assignment {
  /// row_of[j] is the point of `a` matched with b[j].
  std::vector<std::size_t> row_of;
  /// Sum of squared distances over matched pairs.
  double cost = 0.0;
};

/// Exact minimum-cost perfect matching between two equal-size clouds under
/// squared Euclidean cost (shortest augmenting paths with potentials,
/// O(n^3)). Costs are formed on the fly, so memory is O(n).
Assignment squared_distance_assignment(std::span<const Point2> a, std::span<const Point2> b);

}  // namespace vfp
