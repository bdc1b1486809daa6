#pragma once

#include <functional>
#include <vector>

#include "apkinetic/collision.hpp"
#include "apkinetic/tableau.hpp"
#include "apkinetic/velocity.hpp"

namespace apkinetic {

struct StepperConfig {
    IMEXPair pair;
    double dt = 0.0;
    double eps = 1.0;  // Knudsen number
    CollisionBackend backend;
    bool enforce_positivity_report = false;
};

struct StepDiagnostics {
    double lambda = 0.0;  // eps/(mu*dt) of the step
    double mu = 0.0;
    double min_value = 0.0;  // min node value of the output
    // l1 distance between the returned level and the last stage value;
    // exactly zero for globally stiffly accurate pairs.
    double gsa_gap = 0.0;
};

/// One IMEX step of the penalized homogeneous equation
///   d_t f = (mu/eps) g(f) + (mu/eps) (M[f] - f),
/// with mu frozen at its f^n value and M[F^(i)] = M[f^n] (collisions conserve
/// moments, so every stage Maxwellian is known without nonlinear solves).
///
/// Stages are evaluated in the residual form
///   khat_i = phi (M - rhs_i) / (1 + a_ii phi),   F^(i) = rhs_i + a_ii khat_i,
/// phi = mu dt / eps, which keeps stage values exact as eps -> 0 even though
/// the khat/ghat workspace values grow like phi. The final level accumulates
/// with the same loop shape and zero-skip rules as the last stage, so for
/// globally stiffly accurate pairs f^{n+1} equals F^(nu) bitwise.
GridFunction imex_step_homogeneous(const GridFunction& f, const StepperConfig& cfg,
                                   StepDiagnostics* diag = nullptr);

/// The explicit moment scheme: stage moments (and the final-level moments,
/// returned as the extra last entry) from the transport-divergence moments
/// alone, since collision terms integrate to zero against (1, v, |v|^2/2).
/// Passing an empty or short flux list treats missing entries as zero, which
/// is the space-homogeneous case.
std::vector<Moments> stage_moments_explicit(const IMEXPair& pair, const Moments& mn,
                                            double dt,
                                            const std::vector<Moments>& flux_div_moments);

struct KineticState1D {
    enum class BC { periodic, free_flow };
    int N_x = 0;
    double x_max = 0.0;
    double dx = 0.0;
    BC bc = BC::periodic;
    VelocityGrid2D vgrid;
    std::vector<GridFunction> cells;  // N_x entries, one distribution per cell

    static KineticState1D make(int N_x, double x_max, BC bc, const VelocityGrid2D& vgrid);
    double cfl_number(double dt) const { return vgrid.v_max * dt / dx; }
};

/// One IMEX step of the 1D-in-x kinetic equation with first-order
/// characteristic upwind transport (explicit) and penalized collisions.
/// mu is frozen per cell at its f^n value; stage Maxwellians come from the
/// explicit moment scheme per cell.
KineticState1D imex_step_1d(const KineticState1D& state, const StepperConfig& cfg);

struct DiagnosticsRow {
    double t = 0.0;
    double lambda = 0.0;
    double rho_drift = 0.0;
    double w_drift = 0.0;
    double E_drift = 0.0;
    double entropy = 0.0;  // clipped at nonnegative part, see entropy_clipped
    double min_f = 0.0;
    double l1_error = -1.0;  // vs configured oracle; negative when not configured
};

struct RelaxationResult {
    GridFunction final;
    std::vector<std::pair<double, GridFunction>> snapshots;
    std::vector<DiagnosticsRow> diagnostics;
};

/// Repeated homogeneous steps to t_end with per-step diagnostics. The
/// optional error metric receives (state, time) after each step; its value
/// lands in the l1_error column. snapshot_stride 0 keeps only the endpoints.
RelaxationResult run_relaxation(
    const GridFunction& f0, const StepperConfig& cfg, double t_end,
    int snapshot_stride = 0,
    const std::function<double(const GridFunction&, double)>& error_metric = {});

/// Reference integrator for d_t f = Q(f,f): one classical RK4 step. Used by
/// the collision oracle and the kernel calibration fit, not by the schemes.
GridFunction rk4_collision_step(const GridFunction& f, const CollisionBackend& backend,
                                double dt);

/// Like entropy() but treating every nonpositive node as zero contribution
/// instead of throwing; diagnostics use this because spectral solutions may
/// dip slightly negative.
double entropy_clipped(const GridFunction& f);

}  // namespace apkinetic
