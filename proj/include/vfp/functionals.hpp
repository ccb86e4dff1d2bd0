#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vfp/assignment.hpp"
#include "vfp/grid.hpp"
#include "vfp/model.hpp"

namespace vfp {

/// Cells with f below this value contribute nothing to log-integrals.
inline constexpr double kDensityMask = 1e-14;

/// sum f ln f dx dv over unmasked cells.
double entropy(const PhaseGrid& grid);

/// entropy + int (x^2 + v^2)/2 f + (lambda/2) iint K(x - y) f(x) f(y).
/// Only the even part of K contributes to the double integral.
double classical_free_energy(const PhaseGrid& grid, const ModelParams& params);

/// Mean-field free energy for K(x) = a x^2 + b x with additive constant 0:
///   entropy + int ((x^2 + v^2)/2 + lambda b x) f + lambda a var_x(f).
/// Throws ContractViolation for other kernels.
double mean_field_free_energy(const PhaseGrid& grid, const ModelParams& params);

struct LocalEquilibrium {
  PhaseGrid grid;
  double Z = 0.0;
  /// ln of the x-part of f_hat per x-cell, including -ln Z:
  /// ln f_hat(i, k) = log_x[i] - v_k^2 / 2.
  std::vector<double> log_x;

  double log_value(std::size_t i, std::size_t k) const {
    const double v = grid.shape.v(k);
    return log_x[i] - 0.5 * v * v;
  }
};

/// f_hat = exp(-x^2/2 - lambda (K * rho)(x) - v^2/2) / Z with rho the
/// x-marginal of `grid`; Z by the same quadrature.
LocalEquilibrium local_equilibrium(const PhaseGrid& grid, const ModelParams& params);

/// int |A grad ln(f / f_hat)|^2 f by central differences on interior cells.
/// A cell contributes only when it and its four neighbours are unmasked.
double fisher_information(const PhaseGrid& grid, const ModelParams& params, const Eigen::Matrix2d& A);

/// sum f ln(f / g) dx dv. Throws SupportError if g <= 0 on an unmasked cell of f.
double relative_entropy(const PhaseGrid& f, const PhaseGrid& g);

/// sum |f - g| dx dv.
double l1_distance(const PhaseGrid& f, const PhaseGrid& g);

/// Mean and covariance of the grid density: (m_x, m_v) and [[xx, xv], [xv, vv]].
struct GridMoments {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};
GridMoments grid_moments(const PhaseGrid& grid);

/// Exact empirical W2: sqrt of the mean squared distance of the optimal
/// matching. Throws ContractViolation on size mismatch or n > 4096.
double w2_empirical(std::span<const Point2> a, std::span<const Point2> b);

/// n points drawn from the grid density by inverse CDF over cells with a
/// uniform jitter inside the chosen cell.
std::vector<Point2> sample_grid(const PhaseGrid& grid, std::size_t n, std::uint64_t seed);

/// w2_empirical between n = 2048 samples of each grid. Both grids are
/// sampled with the same uniforms, so identical grids give exactly zero.
/// Monte Carlo estimator; statistical tolerance about 5 n^{-1/4}.
double w2_grid(const PhaseGrid& f, const PhaseGrid& g, std::uint64_t seed = 0, std::size_t n = 2048);

}  // namespace vfp
