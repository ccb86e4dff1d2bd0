#pragma once

#include <vector>

#include <Eigen/Core>

#include "vfp/grid.hpp"
#include "vfp/model.hpp"

namespace vfp {

/// Phase-space Gaussian: mean (m_x, m_v) and covariance.
struct GaussianState {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

/// Throws ContractViolation unless cov is symmetric positive definite.
void validate_gaussian(const GaussianState& g);

/// Coefficients (a, b) of a quadratic-linear kernel; throws ContractViolation
/// for any other kernel.
QuadraticCoefficients require_quadratic(const ModelParams& params);

struct GaussianTrajectory {
  std::vector<double> times;
  std::vector<GaussianState> states;
};

/// Gaussian solutions of the VFP equation with K = a x^2 + b x:
///   m_x' = m_v,  m_v' = -m_x - lambda b - gamma m_v,
///   S' = B S + S B^T + diag(0, 2 gamma),  B = [[0, 1], [-(1 + 2 lambda a), -gamma]].
/// Dormand-Prince 5(4) with error tolerance 1e-12; states reported every
/// `output_every` up to `horizon`. Throws UnconfinedError if 1 + 2 lambda a <= 0.
GaussianTrajectory moment_flow(const GaussianState& initial, const ModelParams& params, double horizon,
                               double output_every);

/// Right-hand side of the moment equations at g: (mean', cov').
GaussianState moment_rhs(const GaussianState& g, const ModelParams& params);

/// Time derivative of the classical free energy along the moment flow at g.
double classical_free_energy_rate(const GaussianState& g, const ModelParams& params);

/// Mean (-lambda b, 0), covariance diag(1 / (1 + 2 lambda a), 1).
GaussianState stationary_gaussian(const ModelParams& params);

/// Symmetric square root via eigendecomposition; eigenvalues floored at 1e-14.
Eigen::Matrix2d sqrtm_spd(const Eigen::Matrix2d& m);

/// W2 distance between Gaussians (Bures formula).
double bures_w2(const GaussianState& g1, const GaussianState& g2);

/// int g ln g = -1 - ln(2 pi) - ln(det S) / 2.
double gaussian_entropy(const GaussianState& g);

/// KL(N(m1, S1) || N(m2, S2)) in any dimension.
double gaussian_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& m2,
                   const Eigen::MatrixXd& s2);

/// Closed-form mean-field free energy of a Gaussian, additive constant 0:
///   entropy + E[(x^2 + v^2)/2 + lambda b x] + lambda a var_x.
double free_energy_quadratic(const GaussianState& g, const ModelParams& params);

/// Closed-form classical free energy of a Gaussian:
///   entropy + E[(x^2 + v^2)/2] + (lambda/2) E[K(X - Y)].
double classical_free_energy_gaussian(const GaussianState& g, const ModelParams& params);

/// N-particle invariant measure for K = a x^2 + b x, coordinates ordered
/// (x_1..x_N, v_1..v_N).
struct GibbsN {
  int N = 0;
  Eigen::MatrixXd precision;
  Eigen::VectorXd mean;
};

/// Position precision I + (2 lambda a / (N - 1)) (N I - 1 1^T), position mean
/// -lambda b 1, standard velocity block. Throws UnconfinedError if the
/// precision is not positive definite.
GibbsN gibbs_measure_N(const ModelParams& params, int N);

/// (1/N) KL(g^{(x)N} || mu_N) via the dense 2N-dimensional Gaussian formula.
double free_energy_particle_limit(const GaussianState& g, const ModelParams& params, int N);

/// Density of g sampled at the cell centres and normalised on the grid.
PhaseGrid gaussian_grid(const GridShape& shape, const GaussianState& g);

}  // namespace vfp
