#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vfp/grid.hpp"
#include "vfp/model.hpp"

namespace vfp {

enum class Splitting { lie, strang };

struct GridConfig {
  double Lx = 8.0;
  double Lv = 8.0;
  std::size_t nx = 128;
  std::size_t nv = 128;
  /// Time step; 0 selects the largest step allowed by the CFL bound.
  double dt = 0.0;
  double cfl_safety = 0.5;
  Splitting splitting = Splitting::strang;

  GridShape shape() const { return {Lx, Lv, nx, nv}; }
};

void validate_grid_config(const GridConfig& cfg);

/// Largest dt satisfying
///   dt <= cfl * min(dx / Lv, dv / S, dv^2 / (gamma * D))
/// where S = Lx + lambda * max|K'| bounds |F_f - x| for every density on the
/// grid and D = max (B(z) + B(-z)) over the Fokker-Planck faces (D -> 2 on
/// fine grids).
double stable_dt(const ModelParams& params, const GridConfig& cfg);

/// Grid solver for
///   f_t + v f_x + (F_f - x) f_v = gamma (v f + f_v)_v
/// with zero-flux boundaries.
///
/// Transport substeps are conservative finite-volume updates of h = f / w,
/// where w is the local equilibrium factor along the line (the x-part of
/// exp(-x^2/2 - lambda K*rho) for the x sweep, exp(-v^2/2) for the v sweep),
/// so the discrete operators annihilate the discrete local equilibrium. The
/// Fokker-Planck substep uses Chang-Cooper weights B(z) = z / (e^z - 1),
/// exact on the sampled Maxwellian.
///
/// strang: X(dt/2) V(dt/2) C(dt) V(dt/2) X(dt/2), limited log-linear
/// reconstruction of h (minmod on ln h) and two-stage SSP Runge-Kutta
/// substeps (second order).
/// lie: X(dt) V(dt) C(dt), first-order upwind and forward Euler.
///
/// The force is recomputed from the x-marginal before each velocity block
/// and frozen during it.
class VfpSolver {
 public:
  VfpSolver(ModelParams params, GridConfig cfg);

  double dt() const noexcept { return dt_; }
  const GridConfig& config() const noexcept { return cfg_; }

  /// One step of size dt(), in place. Throws ConfigError if the frozen force
  /// violates the CFL bound and SchemeError on negative density.
  void step(PhaseGrid& grid);
  /// One step of size h <= dt().
  void step(PhaseGrid& grid, double h);

  /// Advances to t + horizon, calling observe(grid) at the start and every
  /// `output_every` time units. The step is shrunk so output times are hit
  /// exactly.
  template <class Observer>
  void advance(PhaseGrid& grid, double horizon, double output_every, Observer&& observe) {
    const auto plan = plan_steps(horizon, output_every);
    observe(static_cast<const PhaseGrid&>(grid));
    for (std::size_t out = 0; out < plan.outputs; ++out) {
      for (std::size_t s = 0; s < plan.steps_per_output; ++s) step(grid, plan.h);
      observe(static_cast<const PhaseGrid&>(grid));
    }
  }

  struct StepPlan {
    std::size_t outputs;
    std::size_t steps_per_output;
    double h;
  };
  StepPlan plan_steps(double horizon, double output_every) const;

  /// Largest value of |mass change| seen over all steps, before renormalisation.
  double max_mass_drift() const noexcept { return max_mass_drift_; }
  /// Most negative cell value seen (0 if none).
  double min_cell_seen() const noexcept { return min_cell_seen_; }

 private:
  struct XTables {
    std::vector<double> cell_w;  // nx
    std::vector<double> face_w;  // nx + 1
    std::vector<double> speed;   // nx, velocity-direction speed F - x
  };
  XTables x_tables(const PhaseGrid& grid) const;

  void x_sweep(PhaseGrid& grid, const XTables& tables, double h);
  void v_sweep(PhaseGrid& grid, const XTables& tables, double h);
  void fp_sweep(PhaseGrid& grid, double h);
  void line_advect(const double* f, const double* cell_w, const double* face_w, double speed,
                   double r, double* out, std::size_t n);
  void line_stage(const double* f, const double* cell_w, const double* face_w, double speed,
                  double r, double* out, std::size_t n);
  void check_force_cfl(const XTables& tables, double h) const;

  ModelParams params_;
  GridConfig cfg_;
  GridShape shape_;
  GridConvolution convolution_;
  double dt_;
  bool second_order_;

  std::vector<double> g_cell_;   // exp(-v^2/2), nv
  std::vector<double> g_face_;   // nv + 1
  std::vector<double> x_speed_;  // nv, transport speed per velocity line
  std::vector<double> cc_plus_;  // B(delta_{k+1/2}), nv + 1
  std::vector<double> cc_minus_; // B(-delta_{k+1/2}), nv + 1
  std::vector<double> lo_, mid_, hi_;
  double tridiag_h_ = -1.0;

  std::vector<double> transposed_, line_a_, line_b_, line_c_, h_, ratio_, flux_;

  double max_mass_drift_ = 0.0;
  double min_cell_seen_ = 0.0;
};

/// One step of the grid solver from a copy of `grid`.
PhaseGrid vfp_step(const PhaseGrid& grid, const ModelParams& params, const GridConfig& cfg);

/// Local-equilibrium weights on a line: given cell values w_j and
/// s_j = (ln w)'(y_j), returns faces (n + 1 entries, both ends zero) with
/// face[j+1] - face[j] = dy * s_j * w_j up to a residual that is spread in
/// proportion to w, so that face[j] approximates w at the face. Exposed for
/// testing.
std::vector<double> balanced_faces(const std::vector<double>& cell_w, const std::vector<double>& speed,
                                   double dy);

struct StationaryOptions {
  double omega = 0.5;
  double tolerance = 1e-10;
  int max_iter = 10000;
};

struct StationaryResult {
  PhaseGrid grid;
  /// Fixed-point x-marginal as cell weights (sum to one).
  std::vector<double> weights;
  int iterations = 0;
  double residual = 0.0;
  std::vector<std::string> warnings;
};

/// Damped Picard iteration rho <- (1 - omega) rho + omega N[exp(-x^2/2 - lambda K*rho)]
/// starting from the normalised exp(-x^2/2); returns rho times the Maxwellian.
/// Throws NonConvergenceError after max_iter iterations.
StationaryResult stationary_fixed_point(const ModelParams& params, const GridShape& shape,
                                        const StationaryOptions& options = {});

}  // namespace vfp
