#include "vfp/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vfp/errors.hpp"
#include "vfp/simd/kernels.hpp"

namespace vfp {
namespace {

constexpr double kNegativeTolerance = -1e-13;
constexpr double kTinyWeight = 1e-250;

// z / (e^z - 1)
double bernoulli(double z) {
  if (std::abs(z) < 1e-12) return 1.0 - 0.5 * z;
  return z / std::expm1(z);
}

double fp_face_delta(const GridShape& s, std::size_t face) {
  const double v_face = -s.Lv + static_cast<double>(face) * s.dv();
  return v_face * s.dv();
}

// max_k [B(delta_{k+1/2}) + B(-delta_{k-1/2})], the diagonal weight of the
// Chang-Cooper operator.
double fp_diagonal_bound(const GridShape& s) {
  double worst = 0.0;
  for (std::size_t k = 0; k < s.nv; ++k) {
    double d = 0.0;
    if (k + 1 < s.nv) d += bernoulli(fp_face_delta(s, k + 1));
    if (k > 0) d += bernoulli(-fp_face_delta(s, k));
    worst = std::max(worst, d);
  }
  return worst;
}

// dt bound from the x transport and the Fokker-Planck substep.
double static_dt_bound(const ModelParams& params, const GridConfig& cfg) {
  const GridShape s = cfg.shape();
  const double transport = s.dx() / s.Lv;
  const double diffusion = s.dv() * s.dv() / (params.gamma * fp_diagonal_bound(s));
  return cfg.cfl_safety * std::min(transport, diffusion);
}

}  // namespace

void validate_grid_config(const GridConfig& cfg) {
  validate_shape(cfg.shape());
  if (!(cfg.dt >= 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be finite and >= 0");
  if (!(cfg.cfl_safety > 0.0) || cfg.cfl_safety > 1.0) {
    throw ConfigError("cfl_safety must lie in (0, 1]");
  }
}

std::vector<double> balanced_faces(const std::vector<double>& cell_w, const std::vector<double>& speed,
                                   double dy) {
  const std::size_t n = cell_w.size();
  if (speed.size() != n) throw ContractViolation("balanced_faces: size mismatch");
  double total_w = 0.0;
  double residual = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    total_w += cell_w[j];
    residual += dy * speed[j] * cell_w[j];
  }
  // Accumulate from whichever end is nearer so tail faces keep their
  // relative precision.
  const auto mode = static_cast<std::size_t>(std::max_element(cell_w.begin(), cell_w.end()) - cell_w.begin());
  std::vector<double> faces(n + 1, 0.0);
  double running = 0.0;
  double running_w = 0.0;
  for (std::size_t j = 0; j < mode; ++j) {
    running += dy * speed[j] * cell_w[j];
    running_w += cell_w[j];
    faces[j + 1] = std::max(0.0, running - (running_w / total_w) * residual);
  }
  running = 0.0;
  running_w = 0.0;
  for (std::size_t j = n - 1; j > mode; --j) {
    running += dy * speed[j] * cell_w[j];
    running_w += cell_w[j];
    faces[j] = std::max(0.0, -running + (running_w / total_w) * residual);
  }
  return faces;
}

double stable_dt(const ModelParams& params, const GridConfig& cfg) {
  validate_grid_config(cfg);
  const GridShape s = cfg.shape();
  const GridConvolution conv(s, params.kernel);
  const double force = s.Lx + params.lambda * conv.max_abs_d1();
  return std::min(static_dt_bound(params, cfg), cfg.cfl_safety * s.dv() / force);
}

VfpSolver::VfpSolver(ModelParams params, GridConfig cfg)
    : params_(std::move(params)),
      cfg_(cfg),
      shape_((validate_grid_config(cfg), cfg.shape())),
      convolution_(shape_, params_.kernel),
      second_order_(cfg.splitting == Splitting::strang) {
  if (cfg_.dt > 0.0) {
    const double bound = static_dt_bound(params_, cfg_);
    if (cfg_.dt > bound * (1.0 + 1e-12)) {
      throw ConfigError("dt = " + format_double(cfg_.dt) + " violates the CFL bound " +
                        format_double(bound));
    }
    dt_ = cfg_.dt;
  } else {
    dt_ = stable_dt(params_, cfg_);
  }

  const std::size_t nv = shape_.nv;
  const double dv = shape_.dv();
  g_cell_.resize(nv);
  std::vector<double> minus_v(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    const double v = shape_.v(k);
    g_cell_[k] = std::exp(-0.5 * v * v);
    minus_v[k] = -v;
  }
  g_face_ = balanced_faces(g_cell_, minus_v, dv);
  x_speed_.resize(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    x_speed_[k] = -(g_face_[k + 1] - g_face_[k]) / (dv * g_cell_[k]);
    if (!std::isfinite(x_speed_[k])) x_speed_[k] = shape_.v(k);
  }

  cc_plus_.assign(nv + 1, 0.0);
  cc_minus_.assign(nv + 1, 0.0);
  for (std::size_t face = 1; face < nv; ++face) {
    const double delta = fp_face_delta(shape_, face);
    cc_plus_[face] = bernoulli(delta);
    cc_minus_[face] = bernoulli(-delta);
  }

  const std::size_t n = std::max(shape_.nx, nv);
  transposed_.resize(shape_.cells());
  line_a_.resize(n);
  line_b_.resize(n);
  line_c_.resize(n);
  h_.resize(n);
  ratio_.resize(n);
  flux_.resize(n + 1);
}

VfpSolver::StepPlan VfpSolver::plan_steps(double horizon, double output_every) const {
  if (!(horizon >= 0.0) || !(output_every > 0.0)) {
    throw ConfigError("horizon must be >= 0 and output interval > 0");
  }
  const auto outputs = static_cast<std::size_t>(std::llround(horizon / output_every));
  const auto per = static_cast<std::size_t>(std::ceil(output_every / dt_ * (1.0 - 1e-12)));
  const std::size_t steps = std::max<std::size_t>(per, 1);
  return {outputs, steps, output_every / static_cast<double>(steps)};
}

VfpSolver::XTables VfpSolver::x_tables(const PhaseGrid& grid) const {
  const std::size_t nx = shape_.nx;
  const double dx = shape_.dx();
  const Marginal marginal = x_marginal(grid);
  const auto potential = convolution_.potential(marginal.weights);
  const auto derivative = convolution_.derivative(marginal.weights);

  XTables t;
  t.cell_w.resize(nx);
  t.speed.resize(nx);
  std::vector<double> u(nx);
  double u_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = shape_.x(i);
    u[i] = 0.5 * x * x + params_.lambda * potential[i];
    u_min = std::min(u_min, u[i]);
  }
  std::vector<double> force(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    t.cell_w[i] = std::max(std::exp(-(u[i] - u_min)), std::numeric_limits<double>::min());
    force[i] = -shape_.x(i) - params_.lambda * derivative[i];
  }
  t.face_w = balanced_faces(t.cell_w, force, dx);
  for (std::size_t i = 0; i < nx; ++i) {
    t.speed[i] = t.cell_w[i] > kTinyWeight ? (t.face_w[i + 1] - t.face_w[i]) / (dx * t.cell_w[i])
                                          : force[i];
  }
  return t;
}

void VfpSolver::check_force_cfl(const XTables& tables, double h) const {
  double s_max = 0.0;
  for (double s : tables.speed) s_max = std::max(s_max, std::abs(s));
  if (s_max == 0.0) return;
  const double bound = cfg_.cfl_safety * shape_.dv() / s_max;
  if (h > bound * (1.0 + 1e-9)) {
    throw ConfigError("dt = " + format_double(h) + " violates the force CFL bound " +
                      format_double(bound) + " (max |F - x| = " + format_double(s_max) + ")");
  }
}

void VfpSolver::line_advect(const double* f, const double* cell_w, const double* face_w,
                            double speed, double r, double* out, std::size_t n) {
  const auto& kt = simd::active_kernels();
  kt.divide(f, cell_w, h_.data(), n);
  if (second_order_) {
    kt.log_slopes(h_.data(), ratio_.data(), n);
  } else {
    std::fill_n(ratio_.data(), n, 1.0);
  }
  kt.muscl_fluxes(h_.data(), ratio_.data(), face_w, speed, flux_.data(), n);
  kt.flux_update(f, flux_.data(), r, out, n);
}

void VfpSolver::line_stage(const double* f, const double* cell_w, const double* face_w,
                           double speed, double r, double* out, std::size_t n) {
  if (!second_order_) {
    line_advect(f, cell_w, face_w, speed, r, out, n);
    return;
  }
  line_advect(f, cell_w, face_w, speed, r, line_a_.data(), n);
  line_advect(line_a_.data(), cell_w, face_w, speed, r, line_b_.data(), n);
  simd::active_kernels().average(f, line_b_.data(), out, n);
}

void VfpSolver::x_sweep(PhaseGrid& grid, const XTables& tables, double h) {
  const std::size_t nx = shape_.nx;
  const std::size_t nv = shape_.nv;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t k = 0; k < nv; ++k) transposed_[k * nx + i] = grid.data[i * nv + k];
  }
  const double r = h / shape_.dx();
  for (std::size_t k = 0; k < nv; ++k) {
    double* line = transposed_.data() + k * nx;
    line_stage(line, tables.cell_w.data(), tables.face_w.data(), x_speed_[k], r, line_c_.data(), nx);
    std::copy_n(line_c_.data(), nx, line);
  }
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t k = 0; k < nv; ++k) grid.data[i * nv + k] = transposed_[k * nx + i];
  }
}

void VfpSolver::v_sweep(PhaseGrid& grid, const XTables& tables, double h) {
  const std::size_t nv = shape_.nv;
  const double r = h / shape_.dv();
  for (std::size_t i = 0; i < shape_.nx; ++i) {
    double* row = grid.data.data() + i * nv;
    line_stage(row, g_cell_.data(), g_face_.data(), tables.speed[i], r, line_c_.data(), nv);
    std::copy_n(line_c_.data(), nv, row);
  }
}

void VfpSolver::fp_sweep(PhaseGrid& grid, double h) {
  const std::size_t nv = shape_.nv;
  if (h != tridiag_h_) {
    const double c = h * params_.gamma / (shape_.dv() * shape_.dv());
    lo_.assign(nv, 0.0);
    mid_.assign(nv, 0.0);
    hi_.assign(nv, 0.0);
    for (std::size_t k = 0; k < nv; ++k) {
      lo_[k] = c * cc_plus_[k];
      hi_[k] = c * cc_minus_[k + 1];
      mid_[k] = -c * (cc_plus_[k + 1] + cc_minus_[k]);
    }
    tridiag_h_ = h;
  }
  const auto& kt = simd::active_kernels();
  for (std::size_t i = 0; i < shape_.nx; ++i) {
    double* row = grid.data.data() + i * nv;
    if (second_order_) {
      kt.tridiag_apply(lo_.data(), mid_.data(), hi_.data(), row, line_a_.data(), nv);
      kt.tridiag_apply(lo_.data(), mid_.data(), hi_.data(), line_a_.data(), line_b_.data(), nv);
      kt.average(row, line_b_.data(), line_c_.data(), nv);
    } else {
      kt.tridiag_apply(lo_.data(), mid_.data(), hi_.data(), row, line_c_.data(), nv);
    }
    std::copy_n(line_c_.data(), nv, row);
  }
}

void VfpSolver::step(PhaseGrid& grid) { step(grid, dt_); }

void VfpSolver::step(PhaseGrid& grid, double h) {
  if (!(grid.shape == shape_) || grid.data.size() != shape_.cells()) {
    throw ContractViolation("grid shape does not match the solver configuration");
  }
  if (!(h > 0.0) || h > dt_ * (1.0 + 1e-12)) throw ContractViolation("step exceeds the solver dt");
  const double mass_before = grid.mass();

  if (cfg_.splitting == Splitting::strang) {
    x_sweep(grid, x_tables(grid), 0.5 * h);
    const XTables mid = x_tables(grid);
    check_force_cfl(mid, h);
    v_sweep(grid, mid, 0.5 * h);
    fp_sweep(grid, h);
    v_sweep(grid, mid, 0.5 * h);
    x_sweep(grid, mid, 0.5 * h);
  } else {
    const XTables pre = x_tables(grid);
    check_force_cfl(pre, h);
    x_sweep(grid, pre, h);
    v_sweep(grid, pre, h);
    fp_sweep(grid, h);
  }

  double lowest = 0.0;
  for (double value : grid.data) lowest = std::min(lowest, value);
  min_cell_seen_ = std::min(min_cell_seen_, lowest);
  if (lowest < kNegativeTolerance) {
    throw SchemeError("negative density " + format_double(lowest) + " at t = " +
                      format_double(grid.t + h));
  }
  const double mass_after = grid.mass();
  max_mass_drift_ = std::max(max_mass_drift_, std::abs(mass_after - mass_before));
  if (lowest < 0.0) {
    for (double& value : grid.data) value = std::max(value, 0.0);
    const double scale = mass_before / grid.mass();
    for (double& value : grid.data) value *= scale;
  }
  grid.t += h;
}

PhaseGrid vfp_step(const PhaseGrid& grid, const ModelParams& params, const GridConfig& cfg) {
  require_normalized(grid);
  GridConfig local = cfg;
  local.Lx = grid.shape.Lx;
  local.Lv = grid.shape.Lv;
  local.nx = grid.shape.nx;
  local.nv = grid.shape.nv;
  VfpSolver solver(params, local);
  PhaseGrid out = grid;
  solver.step(out);
  return out;
}

StationaryResult stationary_fixed_point(const ModelParams& params, const GridShape& shape,
                                        const StationaryOptions& options) {
  validate_shape(shape);
  if (!(options.omega > 0.0) || options.omega > 1.0) throw ConfigError("omega must lie in (0, 1]");
  if (options.max_iter < 1) throw ConfigError("max_iter must be positive");

  StationaryResult result;
  if (!smallness_holds(params)) {
    result.warnings.push_back("smallness condition fails; the fixed point may not be unique");
  }
  const std::size_t nx = shape.nx;
  const GridConvolution conv(shape, params.kernel);

  auto normalized_gibbs = [&](const std::vector<double>& potential) {
    std::vector<double> u(nx);
    double u_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = shape.x(i);
      u[i] = 0.5 * x * x + params.lambda * potential[i];
      u_min = std::min(u_min, u[i]);
    }
    std::vector<double> w(nx);
    double total = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      w[i] = std::exp(-(u[i] - u_min));
      total += w[i];
    }
    for (double& value : w) value /= total;
    return w;
  };

  std::vector<double> rho = normalized_gibbs(std::vector<double>(nx, 0.0));
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < options.max_iter) {
    ++iter;
    const auto target = normalized_gibbs(conv.potential(rho));
    residual = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      const double next = (1.0 - options.omega) * rho[i] + options.omega * target[i];
      residual += std::abs(next - rho[i]);
      rho[i] = next;
    }
    if (residual < options.tolerance) break;
  }
  if (!(residual < options.tolerance)) throw NonConvergenceError(iter, residual);

  PhaseGrid grid = make_grid(shape);
  std::vector<double> g(shape.nv);
  double g_total = 0.0;
  for (std::size_t k = 0; k < shape.nv; ++k) {
    const double v = shape.v(k);
    g[k] = std::exp(-0.5 * v * v);
    g_total += g[k];
  }
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t k = 0; k < shape.nv; ++k) {
      grid.at(i, k) = rho[i] * g[k] / (g_total * shape.cell_area());
    }
  }
  result.grid = std::move(grid);
  result.weights = std::move(rho);
  result.iterations = iter;
  result.residual = residual;
  return result;
}

}  // namespace vfp
