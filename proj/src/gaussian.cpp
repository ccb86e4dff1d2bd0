#include "vfp/gaussian.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include "vfp/errors.hpp"

namespace vfp {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double confinement(const ModelParams& params, const QuadraticCoefficients& q) {
  const double c = 1.0 + 2.0 * params.lambda * q.a;
  if (!(c > 0.0)) throw UnconfinedError("1 + 2 lambda a must be positive");
  return c;
}

using OdeState = std::array<double, 5>;  // m_x, m_v, S_xx, S_xv, S_vv

}  // namespace

void validate_gaussian(const GaussianState& g) {
  if (!g.mean.allFinite() || !g.cov.allFinite()) throw ContractViolation("Gaussian has non-finite entries");
  if (std::abs(g.cov(0, 1) - g.cov(1, 0)) > 1e-12 * (1.0 + g.cov.cwiseAbs().maxCoeff())) {
    throw ContractViolation("Gaussian covariance is not symmetric");
  }
  if (!(g.cov(0, 0) > 0.0) || !(g.cov.determinant() > 0.0)) {
    throw ContractViolation("Gaussian covariance is not positive definite");
  }
}

QuadraticCoefficients require_quadratic(const ModelParams& params) {
  const auto& q = params.kernel.quadratic();
  if (!q) throw ContractViolation("operation requires a kernel of the form a x^2 + b x");
  return *q;
}

GaussianTrajectory moment_flow(const GaussianState& initial, const ModelParams& params, double horizon,
                               double output_every) {
  validate_gaussian(initial);
  const QuadraticCoefficients q = require_quadratic(params);
  const double c = confinement(params, q);
  if (!(horizon >= 0.0) || !(output_every > 0.0)) {
    throw ConfigError("horizon must be >= 0 and output interval > 0");
  }
  const double gamma = params.gamma;
  const double drift = params.lambda * q.b;

  auto rhs = [=](const OdeState& y, OdeState& dy, double) {
    dy[0] = y[1];
    dy[1] = -y[0] - drift - gamma * y[1];
    // B = [[0, 1], [-c, -gamma]]
    dy[2] = 2.0 * y[3];
    dy[3] = y[4] - c * y[2] - gamma * y[3];
    dy[4] = -2.0 * c * y[3] - 2.0 * gamma * y[4] + 2.0 * gamma;
  };

  GaussianTrajectory out;
  const auto outputs = static_cast<std::size_t>(std::llround(horizon / output_every));
  std::vector<double> times(outputs + 1);
  for (std::size_t n = 0; n <= outputs; ++n) times[n] = static_cast<double>(n) * output_every;

  OdeState y{initial.mean(0), initial.mean(1), initial.cov(0, 0), initial.cov(0, 1), initial.cov(1, 1)};
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_dense_output(1e-12, 1e-12, odeint::runge_kutta_dopri5<OdeState>());
  odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), std::min(0.01, output_every),
                          [&](const OdeState& s, double t) {
                            GaussianState g;
                            g.mean << s[0], s[1];
                            g.cov << s[2], s[3], s[3], s[4];
                            out.times.push_back(t);
                            out.states.push_back(g);
                          });
  return out;
}

GaussianState moment_rhs(const GaussianState& g, const ModelParams& params) {
  const QuadraticCoefficients q = require_quadratic(params);
  const double c = confinement(params, q);
  Eigen::Matrix2d B;
  B << 0.0, 1.0, -c, -params.gamma;
  GaussianState d;
  d.mean << g.mean(1), -g.mean(0) - params.lambda * q.b - params.gamma * g.mean(1);
  d.cov = B * g.cov + g.cov * B.transpose();
  d.cov(1, 1) += 2.0 * params.gamma;
  return d;
}

double classical_free_energy_rate(const GaussianState& g, const ModelParams& params) {
  const QuadraticCoefficients q = require_quadratic(params);
  const GaussianState d = moment_rhs(g, params);
  const double entropy_rate = -0.5 * (g.cov.inverse() * d.cov).trace();
  const double energy_rate = g.mean.dot(d.mean) + 0.5 * d.cov.trace();
  return entropy_rate + energy_rate + params.lambda * q.a * d.cov(0, 0);
}

GaussianState stationary_gaussian(const ModelParams& params) {
  const QuadraticCoefficients q = require_quadratic(params);
  const double c = confinement(params, q);
  GaussianState g;
  g.mean << -params.lambda * q.b, 0.0;
  g.cov << 1.0 / c, 0.0, 0.0, 1.0;
  return g;
}

Eigen::Matrix2d sqrtm_spd(const Eigen::Matrix2d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(0.5 * (m + m.transpose()));
  const Eigen::Vector2d root = eig.eigenvalues().cwiseMax(1e-14).cwiseSqrt();
  const Eigen::Matrix2d r = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

double bures_w2(const GaussianState& g1, const GaussianState& g2) {
  const Eigen::Matrix2d r2 = sqrtm_spd(g2.cov);
  const Eigen::Matrix2d cross = sqrtm_spd(r2 * g1.cov * r2);
  const double trace = g1.cov.trace() + g2.cov.trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(0.0, (g1.mean - g2.mean).squaredNorm() + trace));
}

double gaussian_entropy(const GaussianState& g) {
  return -1.0 - std::log(kTwoPi) - 0.5 * std::log(g.cov.determinant());
}

double gaussian_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& m2,
                   const Eigen::MatrixXd& s2) {
  const Eigen::LLT<Eigen::MatrixXd> l1(s1);
  const Eigen::LLT<Eigen::MatrixXd> l2(s2);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) {
    throw ContractViolation("gaussian_kl: covariance is not positive definite");
  }
  const Eigen::VectorXd diff = m2 - m1;
  const double trace = l2.solve(s1).trace();
  const double quad = diff.dot(l2.solve(diff));
  const double logdet1 = 2.0 * l1.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet2 = 2.0 * l2.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * (trace + quad - static_cast<double>(m1.size()) + logdet2 - logdet1);
}

double free_energy_quadratic(const GaussianState& g, const ModelParams& params) {
  const QuadraticCoefficients q = require_quadratic(params);
  const double second = g.mean.squaredNorm() + g.cov.trace();
  return gaussian_entropy(g) + 0.5 * second + params.lambda * q.b * g.mean(0) +
         params.lambda * q.a * g.cov(0, 0);
}

double classical_free_energy_gaussian(const GaussianState& g, const ModelParams& params) {
  const QuadraticCoefficients q = require_quadratic(params);
  const double second = g.mean.squaredNorm() + g.cov.trace();
  // E[a (X - Y)^2 + b (X - Y)] = 2 a var_x for independent copies.
  return gaussian_entropy(g) + 0.5 * second + params.lambda * q.a * g.cov(0, 0);
}

GibbsN gibbs_measure_N(const ModelParams& params, int N) {
  if (N < 2) throw ContractViolation("gibbs_measure_N needs N >= 2");
  const QuadraticCoefficients q = require_quadratic(params);
  const double n = static_cast<double>(N);
  const double coupling = 2.0 * params.lambda * q.a / (n - 1.0);
  if (!(1.0 + coupling * n > 0.0)) throw UnconfinedError("N-particle precision is not positive definite");

  GibbsN out;
  out.N = N;
  out.precision = Eigen::MatrixXd::Identity(2 * N, 2 * N);
  auto px = out.precision.topLeftCorner(N, N);
  px.array() -= coupling;
  px.diagonal().array() += coupling * n;
  out.mean = Eigen::VectorXd::Zero(2 * N);
  out.mean.head(N).setConstant(-params.lambda * q.b);
  return out;
}

double free_energy_particle_limit(const GaussianState& g, const ModelParams& params, int N) {
  validate_gaussian(g);
  const GibbsN mu = gibbs_measure_N(params, N);
  const Eigen::LLT<Eigen::MatrixXd> llt(mu.precision);
  if (llt.info() != Eigen::Success) throw UnconfinedError("N-particle precision is not positive definite");

  // g^{(x)N} in the (x_1..x_N, v_1..v_N) ordering.
  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  s1.topLeftCorner(N, N).diagonal().setConstant(g.cov(0, 0));
  s1.bottomRightCorner(N, N).diagonal().setConstant(g.cov(1, 1));
  s1.topRightCorner(N, N).diagonal().setConstant(g.cov(0, 1));
  s1.bottomLeftCorner(N, N).diagonal().setConstant(g.cov(1, 0));
  Eigen::VectorXd m1(2 * N);
  m1.head(N).setConstant(g.mean(0));
  m1.tail(N).setConstant(g.mean(1));

  // KL against N(mu, P^{-1}) written with the precision P.
  const Eigen::VectorXd diff = mu.mean - m1;
  const double trace = (mu.precision.cwiseProduct(s1)).sum();
  const double quad = diff.dot(mu.precision * diff);
  const double logdet_p = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_s1 = static_cast<double>(N) * std::log(g.cov.determinant());
  const double kl = 0.5 * (trace + quad - 2.0 * N - logdet_p - logdet_s1);
  return kl / static_cast<double>(N);
}

PhaseGrid gaussian_grid(const GridShape& shape, const GaussianState& g) {
  validate_gaussian(g);
  const Eigen::Matrix2d inv = g.cov.inverse();
  return sample_density(shape, [&](double x, double v) {
    const Eigen::Vector2d d(x - g.mean(0), v - g.mean(1));
    return std::exp(-0.5 * d.dot(inv * d));
  });
}

}  // namespace vfp
