#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vfp/model.hpp"

namespace vfp {

/// Truncated phase-space rectangle [-Lx, Lx] x [-Lv, Lv] split into nx x nv
/// cells.
struct GridShape {
  double Lx = 8.0;
  double Lv = 8.0;
  std::size_t nx = 128;
  std::size_t nv = 128;

  double dx() const noexcept { return 2.0 * Lx / static_cast<double>(nx); }
  double dv() const noexcept { return 2.0 * Lv / static_cast<double>(nv); }
  double x(std::size_t i) const noexcept { return -Lx + (static_cast<double>(i) + 0.5) * dx(); }
  double v(std::size_t k) const noexcept { return -Lv + (static_cast<double>(k) + 0.5) * dv(); }
  double cell_area() const noexcept { return dx() * dv(); }
  std::size_t cells() const noexcept { return nx * nv; }

  bool operator==(const GridShape&) const = default;
};

void validate_shape(const GridShape& shape);

/// Cell-averaged phase-space density, stored row-major with x as the slow
/// index: data[i * nv + k] ~ f(x_i, v_k).
struct PhaseGrid {
  GridShape shape;
  std::vector<double> data;
  double t = 0.0;

  double& at(std::size_t i, std::size_t k) { return data[i * shape.nv + k]; }
  double at(std::size_t i, std::size_t k) const { return data[i * shape.nv + k]; }
  double mass() const;
};

/// Zero density of the given shape.
PhaseGrid make_grid(const GridShape& shape);

/// Samples `density` at the cell centres and rescales to unit mass.
PhaseGrid sample_density(const GridShape& shape, const std::function<double(double, double)>& density);

/// Throws ContractViolation unless the data size matches and the mass is one
/// within `tolerance`.
void require_normalized(const PhaseGrid& grid, double tolerance = 1e-10);

/// x-marginal as a weighted sample on the cell centres.
struct Marginal {
  std::vector<double> points;
  std::vector<double> weights;

  WeightedSamples view() const { return {points, weights}; }
};

/// weights_i = sum_k f(i, k) dx dv.
Marginal x_marginal(const PhaseGrid& grid);

/// Direct quadrature of K * rho and of the mean-field force on the cell
/// centres of a uniform grid. Offsets x_i - x_j are multiples of dx, so K and
/// K' are tabulated once on 2 nx - 1 points.
class GridConvolution {
 public:
  GridConvolution(const GridShape& shape, const InteractionKernel& kernel);

  /// (K * rho)(x_i) = sum_j w_j K(x_i - x_j)
  std::vector<double> potential(const std::vector<double>& weights) const;
  /// sum_j w_j K'(x_i - x_j)
  std::vector<double> derivative(const std::vector<double>& weights) const;
  /// max_p |K'(p dx)| over the tabulated offsets.
  double max_abs_d1() const noexcept { return max_abs_d1_; }

 private:
  std::vector<double> apply(const std::vector<double>& table, const std::vector<double>& weights) const;

  std::size_t nx_;
  std::vector<double> k_table_;
  std::vector<double> d1_table_;
  double max_abs_d1_ = 0.0;
};

/// CSV rows "x,v,f" with a header line; 17 significant digits.
void write_grid_csv(std::ostream& out, const PhaseGrid& grid);

/// One JSON header line {"format","Lx","Lv","nx","nv","t"} terminated by a
/// newline, followed by nx * nv little-endian float64 values, row-major with x
/// as the slow index.
void write_grid_binary(std::ostream& out, const PhaseGrid& grid);
PhaseGrid read_grid_binary(std::istream& in);

/// Formats a double with 17 significant digits; NaN is spelled "nan".
std::string format_double(double value);

}  // namespace vfp
