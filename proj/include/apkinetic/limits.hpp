#pragma once

#include <array>

#include "apkinetic/integrator.hpp"
#include "apkinetic/tableau.hpp"
#include "apkinetic/velocity.hpp"

namespace apkinetic {

struct BKWParams {
    double sigma = 1.0;
};

/// S(t) = 1 - exp(-sigma^2 t / 8) / 2.
double bkw_s(double t, double sigma = 1.0);

/// The exact BKW relaxation solution
///   f(v,t) = 1/(2 pi S^2 sigma^2) (2S - 1 + (1-S)/(2S) v^2/sigma^2)
///            * exp(-v^2 / (2 S sigma^2)),
/// a nonnegative solution with moments rho=1, w=0, E=sigma^2 for all t >= 0.
GridFunction bkw(const VelocityGrid2D& grid, double t, const BKWParams& params = {});

/// Conserved Euler variables per cell: (rho, rho*w_x, rho*w_y, E). w_y is a
/// passive moment in the 1D slab geometry.
struct EulerCell {
    double rho = 0.0;
    double mx = 0.0;
    double my = 0.0;
    double E = 0.0;
};

struct EulerState1D {
    int N_x = 0;
    double x_max = 0.0;
    double dx = 0.0;
    KineticState1D::BC bc = KineticState1D::BC::periodic;
    VelocityGrid2D vgrid;  // quadrature grid shared with the kinetic solver
    std::vector<EulerCell> cells;

    static EulerState1D make(int N_x, double x_max, KineticState1D::BC bc,
                             const VelocityGrid2D& vgrid);
    double cfl_number(double dt) const { return vgrid.v_max * dt / dx; }
};

Moments cell_moments(const EulerCell& u);

/// Upwind kinetic flux through an interface: half-space moments of the two
/// adjacent Maxwellians on the same velocity grid and quadrature the kinetic
/// solver uses, so the Euler limit comparison is exact in the flux treatment.
/// Components: (rho, rho w_x, rho w_y, E) fluxes.
std::array<double, 4> kinetic_flux_1d(const EulerCell& uL, const EulerCell& uR,
                                      const VelocityGrid2D& grid);

/// Explicit RK step over the finite-volume divergence of kinetic_flux_1d;
/// tableau is the explicit member of an IMEX pair.
EulerState1D explicit_rk_euler_step(const EulerState1D& state, double dt,
                                    const ButcherTableau& ex);

}  // namespace apkinetic
