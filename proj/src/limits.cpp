#include "apkinetic/limits.hpp"

#include <cmath>
#include <utility>

#include "apkinetic/errors.hpp"

namespace apkinetic {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kVacuumRho = 1e-14;

// Per-cell primitive state extracted once so flux loops stay tight.
struct Primitive {
    double rho, wx, wy, T;
};

Primitive primitive_of(const EulerCell& u) {
    if (!(u.rho > kVacuumRho)) {
        throw DegenerateStateError("Euler cell density is vacuum or negative");
    }
    const double wx = u.mx / u.rho;
    const double wy = u.my / u.rho;
    const double T = (2.0 * u.E - u.rho * (wx * wx + wy * wy)) / (2.0 * u.rho);
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw InvalidMomentsError("Euler cell has nonpositive internal energy");
    }
    return {u.rho, wx, wy, T};
}

// Half-space flux moments of the cell Maxwellian on the shared grid:
// plus accumulates v_x > 0 nodes, minus accumulates v_x < 0 nodes.
void half_fluxes(const Primitive& p, const VelocityGrid2D& g,
                 std::array<double, 4>& plus, std::array<double, 4>& minus) {
    plus = {0.0, 0.0, 0.0, 0.0};
    minus = {0.0, 0.0, 0.0, 0.0};
    const int N = g.N_v;
    const double pref = p.rho / (2.0 * kPi * p.T);
    const double inv2T = 1.0 / (2.0 * p.T);
    for (int j = 0; j < N; ++j) {
        const double vx = g.nodes[j];
        if (vx == 0.0) continue;
        const double dx2 = (vx - p.wx) * (vx - p.wx);
        std::array<double, 4>& acc = (vx > 0.0) ? plus : minus;
        for (int k = 0; k < N; ++k) {
            const double vy = g.nodes[k];
            const double dy2 = (vy - p.wy) * (vy - p.wy);
            const double m = pref * std::exp(-(dx2 + dy2) * inv2T);
            const double wxm = vx * m;
            acc[0] += wxm;
            acc[1] += wxm * vx;
            acc[2] += wxm * vy;
            acc[3] += wxm * 0.5 * (vx * vx + vy * vy);
        }
    }
    const double w = g.dv * g.dv;
    for (int c = 0; c < 4; ++c) {
        plus[c] *= w;
        minus[c] *= w;
    }
}

using FluxArray = std::vector<std::array<double, 4>>;

// Divergence of the upwind kinetic fluxes for every cell of a stage state.
std::vector<std::array<double, 4>> flux_divergence(const EulerState1D& s) {
    const int Nx = s.N_x;
    // Per-cell half fluxes, then interface fluxes by combination.
    FluxArray plus(Nx), minus(Nx);
    for (int c = 0; c < Nx; ++c) {
        const Primitive p = primitive_of(s.cells[c]);
        half_fluxes(p, s.vgrid, plus[c], minus[c]);
    }
    // face[i] is the flux through interface i-1/2, faces 0..Nx.
    FluxArray face(Nx + 1);
    for (int i = 0; i <= Nx; ++i) {
        int L = i - 1;
        int R = i;
        if (s.bc == KineticState1D::BC::periodic) {
            L = (L + Nx) % Nx;
            R = R % Nx;
        } else {
            if (L < 0) L = 0;
            if (R >= Nx) R = Nx - 1;
        }
        for (int c = 0; c < 4; ++c) face[i][c] = plus[L][c] + minus[R][c];
    }
    std::vector<std::array<double, 4>> div(Nx);
    const double inv_dx = 1.0 / s.dx;
    for (int c = 0; c < Nx; ++c) {
        for (int q = 0; q < 4; ++q) {
            div[c][q] = (face[c + 1][q] - face[c][q]) * inv_dx;
        }
    }
    return div;
}

}  // namespace

double bkw_s(double t, double sigma) {
    return 1.0 - 0.5 * std::exp(-sigma * sigma * t / 8.0);
}

GridFunction bkw(const VelocityGrid2D& grid, double t, const BKWParams& params) {
    if (!(params.sigma > 0.0)) {
        throw ConfigError("BKW sigma must be positive");
    }
    if (t < 0.0) {
        throw ConfigError("BKW time must be nonnegative");
    }
    const double s2 = params.sigma * params.sigma;
    const double S = bkw_s(t, params.sigma);
    GridFunction f(grid);
    const int N = grid.N_v;
    const double pref = 1.0 / (2.0 * kPi * S * S * s2);
    const double lin = 2.0 * S - 1.0;
    const double quad = (1.0 - S) / (2.0 * S) / s2;
    const double expf = 1.0 / (2.0 * S * s2);
    for (int j = 0; j < N; ++j) {
        const double vx = grid.nodes[j];
        for (int k = 0; k < N; ++k) {
            const double vy = grid.nodes[k];
            const double v2 = vx * vx + vy * vy;
            f.values[static_cast<size_t>(j) * N + k] =
                pref * (lin + quad * v2) * std::exp(-v2 * expf);
        }
    }
    return f;
}

EulerState1D EulerState1D::make(int N_x, double x_max, KineticState1D::BC bc,
                                const VelocityGrid2D& vgrid) {
    if (N_x < 2) throw ConfigError("EulerState1D needs at least 2 cells");
    if (!(x_max > 0.0)) throw ConfigError("x_max must be positive");
    EulerState1D s;
    s.N_x = N_x;
    s.x_max = x_max;
    s.dx = x_max / N_x;
    s.bc = bc;
    s.vgrid = vgrid;
    s.cells.resize(static_cast<size_t>(N_x));
    return s;
}

Moments cell_moments(const EulerCell& u) {
    const Primitive p = primitive_of(u);
    Moments m;
    m.rho = p.rho;
    m.wx = p.wx;
    m.wy = p.wy;
    m.E = u.E;
    m.T = p.T;
    return m;
}

std::array<double, 4> kinetic_flux_1d(const EulerCell& uL, const EulerCell& uR,
                                      const VelocityGrid2D& grid) {
    std::array<double, 4> plusL, minusL, plusR, minusR;
    half_fluxes(primitive_of(uL), grid, plusL, minusL);
    half_fluxes(primitive_of(uR), grid, plusR, minusR);
    std::array<double, 4> F{};
    for (int c = 0; c < 4; ++c) F[c] = plusL[c] + minusR[c];
    return F;
}

EulerState1D explicit_rk_euler_step(const EulerState1D& state, double dt,
                                    const ButcherTableau& ex) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (state.cfl_number(dt) > 0.9) {
        throw ConfigError("CFL number exceeds 0.9");
    }
    const int nu = ex.nu;
    const int Nx = state.N_x;
    std::vector<std::vector<std::array<double, 4>>> div(static_cast<size_t>(nu));
    EulerState1D stage = state;
    for (int i = 0; i < nu; ++i) {
        stage.cells = state.cells;
        for (int j = 0; j < i; ++j) {
            const double aij = ex.a(i, j);
            if (aij == 0.0) continue;
            for (int c = 0; c < Nx; ++c) {
                stage.cells[c].rho -= dt * aij * div[j][c][0];
                stage.cells[c].mx -= dt * aij * div[j][c][1];
                stage.cells[c].my -= dt * aij * div[j][c][2];
                stage.cells[c].E -= dt * aij * div[j][c][3];
            }
        }
        div[i] = flux_divergence(stage);
    }
    EulerState1D out = state;
    for (int j = 0; j < nu; ++j) {
        const double wj = ex.w[static_cast<size_t>(j)];
        if (wj == 0.0) continue;
        for (int c = 0; c < Nx; ++c) {
            out.cells[c].rho -= dt * wj * div[j][c][0];
            out.cells[c].mx -= dt * wj * div[j][c][1];
            out.cells[c].my -= dt * wj * div[j][c][2];
            out.cells[c].E -= dt * wj * div[j][c][3];
        }
    }
    return out;
}

}  // namespace apkinetic
