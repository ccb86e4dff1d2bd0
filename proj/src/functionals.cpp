#include "vfp/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vfp/errors.hpp"
#include "vfp/rng.hpp"

namespace vfp {
namespace {

void require_same_shape(const PhaseGrid& f, const PhaseGrid& g) {
  if (!(f.shape == g.shape) || f.data.size() != g.data.size()) {
    throw ContractViolation("grids have different shapes");
  }
}

double second_moment_energy(const PhaseGrid& grid) {
  const GridShape& s = grid.shape;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.nx; ++i) {
    const double x = s.x(i);
    for (std::size_t k = 0; k < s.nv; ++k) {
      const double v = s.v(k);
      acc += 0.5 * (x * x + v * v) * grid.at(i, k);
    }
  }
  return acc * s.cell_area();
}

}  // namespace

double entropy(const PhaseGrid& grid) {
  double acc = 0.0;
  for (double f : grid.data) {
    if (f >= kDensityMask) acc += f * std::log(f);
  }
  return acc * grid.shape.cell_area();
}

double classical_free_energy(const PhaseGrid& grid, const ModelParams& params) {
  double interaction = 0.0;
  if (params.lambda != 0.0) {
    const Marginal m = x_marginal(grid);
    const GridConvolution conv(grid.shape, params.kernel);
    const auto potential = conv.potential(m.weights);
    for (std::size_t i = 0; i < m.weights.size(); ++i) interaction += m.weights[i] * potential[i];
  }
  return entropy(grid) + second_moment_energy(grid) + 0.5 * params.lambda * interaction;
}

double mean_field_free_energy(const PhaseGrid& grid, const ModelParams& params) {
  const auto& q = params.kernel.quadratic();
  if (!q) throw ContractViolation("mean-field free energy is only available for a x^2 + b x kernels");
  const GridMoments mom = grid_moments(grid);
  return entropy(grid) + second_moment_energy(grid) + params.lambda * q->b * mom.mean(0) +
         params.lambda * q->a * mom.cov(0, 0);
}

LocalEquilibrium local_equilibrium(const PhaseGrid& grid, const ModelParams& params) {
  const GridShape& s = grid.shape;
  const Marginal m = x_marginal(grid);
  std::vector<double> potential(s.nx, 0.0);
  if (params.lambda != 0.0) potential = GridConvolution(s, params.kernel).potential(m.weights);

  std::vector<double> exponent(s.nx);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.nx; ++i) {
    const double x = s.x(i);
    exponent[i] = -0.5 * x * x - params.lambda * potential[i];
    top = std::max(top, exponent[i]);
  }
  double zx = 0.0;
  for (double e : exponent) zx += std::exp(e - top);
  zx *= s.dx();
  double zv = 0.0;
  for (std::size_t k = 0; k < s.nv; ++k) {
    const double v = s.v(k);
    zv += std::exp(-0.5 * v * v);
  }
  zv *= s.dv();

  LocalEquilibrium eq;
  const double log_z = top + std::log(zx) + std::log(zv);
  eq.Z = std::exp(log_z);
  eq.log_x.resize(s.nx);
  for (std::size_t i = 0; i < s.nx; ++i) eq.log_x[i] = exponent[i] - log_z;
  eq.grid = make_grid(s);
  eq.grid.t = grid.t;
  for (std::size_t i = 0; i < s.nx; ++i) {
    for (std::size_t k = 0; k < s.nv; ++k) eq.grid.at(i, k) = std::exp(eq.log_value(i, k));
  }
  return eq;
}

double fisher_information(const PhaseGrid& grid, const ModelParams& params, const Eigen::Matrix2d& A) {
  const GridShape& s = grid.shape;
  const LocalEquilibrium eq = local_equilibrium(grid, params);
  const std::size_t nx = s.nx;
  const std::size_t nv = s.nv;

  std::vector<double> phi(grid.data.size(), 0.0);
  std::vector<unsigned char> live(grid.data.size(), 0);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t k = 0; k < nv; ++k) {
      const double f = grid.at(i, k);
      if (f >= kDensityMask) {
        live[i * nv + k] = 1;
        phi[i * nv + k] = std::log(f) - eq.log_value(i, k);
      }
    }
  }

  const double inv_2dx = 0.5 / s.dx();
  const double inv_2dv = 0.5 / s.dv();
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    for (std::size_t k = 1; k + 1 < nv; ++k) {
      const std::size_t c = i * nv + k;
      if (!(live[c] && live[c - nv] && live[c + nv] && live[c - 1] && live[c + 1])) continue;
      const Eigen::Vector2d g((phi[c + nv] - phi[c - nv]) * inv_2dx, (phi[c + 1] - phi[c - 1]) * inv_2dv);
      acc += (A * g).squaredNorm() * grid.data[c];
    }
  }
  return acc * s.cell_area();
}

double relative_entropy(const PhaseGrid& f, const PhaseGrid& g) {
  require_same_shape(f, g);
  double acc = 0.0;
  for (std::size_t c = 0; c < f.data.size(); ++c) {
    const double fc = f.data[c];
    if (fc < kDensityMask) continue;
    const double gc = g.data[c];
    if (!(gc > 0.0)) {
      throw SupportError("relative entropy: reference density vanishes where f = " + format_double(fc));
    }
    acc += fc * std::log(fc / gc);
  }
  return acc * f.shape.cell_area();
}

double l1_distance(const PhaseGrid& f, const PhaseGrid& g) {
  require_same_shape(f, g);
  double acc = 0.0;
  for (std::size_t c = 0; c < f.data.size(); ++c) acc += std::abs(f.data[c] - g.data[c]);
  return acc * f.shape.cell_area();
}

GridMoments grid_moments(const PhaseGrid& grid) {
  const GridShape& s = grid.shape;
  double m0 = 0.0, mx = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < s.nx; ++i) {
    for (std::size_t k = 0; k < s.nv; ++k) {
      const double f = grid.at(i, k);
      m0 += f;
      mx += s.x(i) * f;
      mv += s.v(k) * f;
    }
  }
  mx /= m0;
  mv /= m0;
  double xx = 0.0, xv = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < s.nx; ++i) {
    const double dx = s.x(i) - mx;
    for (std::size_t k = 0; k < s.nv; ++k) {
      const double dv = s.v(k) - mv;
      const double f = grid.at(i, k);
      xx += dx * dx * f;
      xv += dx * dv * f;
      vv += dv * dv * f;
    }
  }
  GridMoments out;
  out.mean << mx, mv;
  out.cov << xx / m0, xv / m0, xv / m0, vv / m0;
  return out;
}

double w2_empirical(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.size() != b.size()) throw ContractViolation("w2_empirical: clouds differ in size");
  if (a.size() > 4096) throw ContractViolation("w2_empirical: at most 4096 points");
  if (a.empty()) return 0.0;
  const Assignment match = squared_distance_assignment(a, b);
  // Sum in sorted order so that swapping the clouds gives the same bits.
  std::vector<double> pair_cost(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Point2& p = a[match.row_of[j]];
    const double dx = p.x - b[j].x;
    const double dv = p.v - b[j].v;
    pair_cost[j] = dx * dx + dv * dv;
  }
  std::sort(pair_cost.begin(), pair_cost.end());
  double cost = 0.0;
  for (double c : pair_cost) cost += c;
  return std::sqrt(cost / static_cast<double>(a.size()));
}

std::vector<Point2> sample_grid(const PhaseGrid& grid, std::size_t n, std::uint64_t seed) {
  const GridShape& s = grid.shape;
  std::vector<double> cumulative(grid.data.size());
  double total = 0.0;
  for (std::size_t c = 0; c < grid.data.size(); ++c) {
    total += std::max(grid.data[c], 0.0);
    cumulative[c] = total;
  }
  if (!(total > 0.0)) throw ContractViolation("cannot sample a grid without mass");

  const CounterNormal rng(seed, streams::kGridSampling);
  std::vector<Point2> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double target = rng.uniform(p, 0) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto c = static_cast<std::size_t>(it - cumulative.begin());
    const std::size_t i = c / s.nv;
    const std::size_t k = c % s.nv;
    out[p].x = s.x(i) + (rng.uniform(p, 1) - 0.5) * s.dx();
    out[p].v = s.v(k) + (rng.uniform(p, 2) - 0.5) * s.dv();
  }
  return out;
}

double w2_grid(const PhaseGrid& f, const PhaseGrid& g, std::uint64_t seed, std::size_t n) {
  require_same_shape(f, g);
  const auto a = sample_grid(f, n, seed);
  const auto b = sample_grid(g, n, seed);
  return w2_empirical(a, b);
}

}  // namespace vfp
