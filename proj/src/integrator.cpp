#include "apkinetic/integrator.hpp"

#include <cmath>
#include <string>

namespace apkinetic {

namespace {

constexpr double kBlowUpThreshold = 1e12;

void check_finite(const GridFunction& f, int stage, double lambda) {
    for (double x : f.values) {
        if (!std::isfinite(x) || std::abs(x) > kBlowUpThreshold)
            throw BlowUpError("blow-up detected at stage " + std::to_string(stage) +
                                  " (lambda=" + std::to_string(lambda) + ")",
                              stage, lambda);
    }
}

// Which stages need an explicit collision evaluation: column j of the
// explicit tableau or weight vector has a nonzero entry.
std::vector<char> stages_needing_g(const IMEXPair& pr) {
    std::vector<char> need(pr.nu, 0);
    for (int j = 0; j < pr.nu; ++j) {
        bool n = pr.ex.w[j] != 0.0;
        for (int i = j + 1; i < pr.nu && !n; ++i) n = pr.ex.a(i, j) != 0.0;
        need[j] = n ? 1 : 0;
    }
    return need;
}

// Conserved-variable view used by the moment scheme; linear in f, so it is
// evaluated with a raw quadrature that tolerates signed integrands.
struct Conserved {
    double rho = 0.0, mx = 0.0, my = 0.0, E = 0.0;
};

Conserved conserved_of(const Moments& m) {
    return {m.rho, m.rho * m.wx, m.rho * m.wy, m.E};
}

Conserved raw_quadrature(const GridFunction& f) {
    const auto& g = f.grid;
    Conserved c;
    for (int j = 0; j < g.N_v; ++j) {
        const double vx = g.nodes[j];
        for (int k = 0; k < g.N_v; ++k) {
            const double vy = g.nodes[k];
            const double fv = f.at(j, k);
            c.rho += fv;
            c.mx += fv * vx;
            c.my += fv * vy;
            c.E += fv * 0.5 * (vx * vx + vy * vy);
        }
    }
    const double w2 = g.dv * g.dv;
    c.rho *= w2;
    c.mx *= w2;
    c.my *= w2;
    c.E *= w2;
    return c;
}

Moments moments_of(const Conserved& c, const char* where) {
    if (c.rho <= 1e-14)
        throw DegenerateStateError(std::string(where) + ": stage density " +
                                   std::to_string(c.rho) + " not positive");
    Moments m;
    m.rho = c.rho;
    m.wx = c.mx / c.rho;
    m.wy = c.my / c.rho;
    m.E = c.E;
    m.T = (2.0 * m.E - m.rho * (m.wx * m.wx + m.wy * m.wy)) / (2.0 * m.rho);
    return m;
}

}  // namespace

GridFunction imex_step_homogeneous(const GridFunction& f, const StepperConfig& cfg,
                                   StepDiagnostics* diag) {
    const IMEXPair& pr = cfg.pair;
    const int nu = pr.nu;
    if (!(cfg.dt > 0.0) || !(cfg.eps > 0.0))
        throw ConfigError("imex_step_homogeneous: need dt > 0 and eps > 0");

    const double mu = choose_mu(f, cfg.backend);
    const double phi = mu * cfg.dt / cfg.eps;
    const double lambda = cfg.eps / (mu * cfg.dt);
    const GridFunction M = maxwellian(moments(f), f.grid);
    const bool spectral = cfg.backend.kind == CollisionBackend::Kind::boltzmann_spectral;
    const std::vector<char> needs_g = stages_needing_g(pr);

    std::vector<GridFunction> Ghat(nu), Khat(nu);
    GridFunction F_last;
    for (int i = 0; i < nu; ++i) {
        GridFunction rhs = f;
        for (int j = 0; j < i; ++j)
            if (pr.ex.a(i, j) != 0.0) axpy(rhs, pr.ex.a(i, j), Ghat[j]);
        for (int j = 0; j < i; ++j)
            if (pr.im.a(i, j) != 0.0) axpy(rhs, pr.im.a(i, j), Khat[j]);

        const double aii = pr.im.a(i, i);
        GridFunction F;
        if (aii != 0.0) {
            const double s = phi / (1.0 + aii * phi);
            Khat[i] = GridFunction(f.grid);
            for (size_t n = 0; n < Khat[i].values.size(); ++n)
                Khat[i].values[n] = s * (M.values[n] - rhs.values[n]);
            F = rhs;
            axpy(F, aii, Khat[i]);
        } else {
            // Purely explicit stage; khat still records phi*(M - F) for later
            // stages and the final level.
            F = rhs;
            Khat[i] = GridFunction(f.grid);
            for (size_t n = 0; n < Khat[i].values.size(); ++n)
                Khat[i].values[n] = phi * (M.values[n] - F.values[n]);
        }
        check_finite(F, i + 1, lambda);

        Ghat[i] = GridFunction(f.grid);
        if (spectral && needs_g[i]) {
            // ghat_i = phi * g(F) with g = (Q + mu F)/mu - M[F]; in the
            // homogeneous case M[F^(i)] = M[f^n].
            const GridFunction Q = q_boltzmann(F, *cfg.backend.table);
            const double inv_mu = 1.0 / mu;
            for (size_t n = 0; n < Ghat[i].values.size(); ++n)
                Ghat[i].values[n] =
                    phi * ((Q.values[n] + mu * F.values[n]) * inv_mu - M.values[n]);
        }
        // BGK: g vanishes identically, ghat stays zero.
        if (i == nu - 1) F_last = std::move(F);
    }

    GridFunction out = f;
    for (int j = 0; j < nu; ++j)
        if (pr.ex.w[j] != 0.0) axpy(out, pr.ex.w[j], Ghat[j]);
    for (int j = 0; j < nu; ++j)
        if (pr.im.w[j] != 0.0) axpy(out, pr.im.w[j], Khat[j]);
    check_finite(out, nu + 1, lambda);

    if (diag) {
        diag->lambda = lambda;
        diag->mu = mu;
        diag->min_value = min_value(out);
        diag->gsa_gap = l1_distance(out, F_last);
    }
    return out;
}

std::vector<Moments> stage_moments_explicit(const IMEXPair& pair, const Moments& mn,
                                            double dt,
                                            const std::vector<Moments>& flux_div_moments) {
    const int nu = pair.nu;
    const Conserved base = conserved_of(mn);
    std::vector<Conserved> flux(nu);
    for (size_t j = 0; j < flux_div_moments.size() && j < static_cast<size_t>(nu); ++j)
        flux[j] = conserved_of(flux_div_moments[j]);

    std::vector<Moments> out;
    out.reserve(nu + 1);
    for (int i = 0; i < nu; ++i) {
        Conserved c = base;
        for (int j = 0; j < i; ++j) {
            const double a = pair.ex.a(i, j);
            if (a == 0.0) continue;
            c.rho -= dt * a * flux[j].rho;
            c.mx -= dt * a * flux[j].mx;
            c.my -= dt * a * flux[j].my;
            c.E -= dt * a * flux[j].E;
        }
        out.push_back(moments_of(c, "stage_moments_explicit"));
    }
    Conserved c = base;
    for (int j = 0; j < nu; ++j) {
        const double w = pair.ex.w[j];
        if (w == 0.0) continue;
        c.rho -= dt * w * flux[j].rho;
        c.mx -= dt * w * flux[j].mx;
        c.my -= dt * w * flux[j].my;
        c.E -= dt * w * flux[j].E;
    }
    out.push_back(moments_of(c, "stage_moments_explicit"));
    return out;
}

KineticState1D KineticState1D::make(int N_x, double x_max, BC bc,
                                    const VelocityGrid2D& vgrid) {
    if (N_x < 2 || !(x_max > 0.0))
        throw ConfigError("KineticState1D: need N_x >= 2 and x_max > 0");
    KineticState1D st;
    st.N_x = N_x;
    st.x_max = x_max;
    st.dx = x_max / N_x;
    st.bc = bc;
    st.vgrid = vgrid;
    st.cells.assign(N_x, GridFunction(vgrid));
    return st;
}

namespace {

// dt * v_x d_x f by first-order characteristic upwind on the sign of v_x.
GridFunction upwind_transport(const std::vector<GridFunction>& cells, int c,
                              const KineticState1D& st, double dt) {
    const int nx = st.N_x;
    int cm = c - 1, cp = c + 1;
    if (st.bc == KineticState1D::BC::periodic) {
        cm = (c - 1 + nx) % nx;
        cp = (c + 1) % nx;
    } else {
        cm = std::max(0, cm);
        cp = std::min(nx - 1, cp);
    }
    const GridFunction& fc = cells[c];
    const GridFunction& fm = cells[cm];
    const GridFunction& fp = cells[cp];
    GridFunction out(st.vgrid);
    const double r = dt / st.dx;
    const int N = st.vgrid.N_v;
    for (int j = 0; j < N; ++j) {
        const double vx = st.vgrid.nodes[j];
        if (vx > 0.0) {
            const double a = vx * r;
            for (int k = 0; k < N; ++k) out.at(j, k) = a * (fc.at(j, k) - fm.at(j, k));
        } else if (vx < 0.0) {
            const double a = vx * r;
            for (int k = 0; k < N; ++k) out.at(j, k) = a * (fp.at(j, k) - fc.at(j, k));
        }
    }
    return out;
}

}  // namespace

KineticState1D imex_step_1d(const KineticState1D& state, const StepperConfig& cfg) {
    const IMEXPair& pr = cfg.pair;
    const int nu = pr.nu;
    const int nx = state.N_x;
    if (state.cfl_number(cfg.dt) > 0.9 + 1e-12)
        throw ConfigError("imex_step_1d: CFL number " + std::to_string(state.cfl_number(cfg.dt)) +
                          " exceeds 0.9");
    const bool spectral = cfg.backend.kind == CollisionBackend::Kind::boltzmann_spectral;
    const std::vector<char> needs_g = stages_needing_g(pr);

    // Per-cell mu and phi frozen at f^n; per-cell base moments.
    std::vector<double> mu(nx), phi(nx), lambda(nx);
    std::vector<Conserved> base(nx);
    for (int c = 0; c < nx; ++c) {
        mu[c] = choose_mu(state.cells[c], cfg.backend);
        phi[c] = mu[c] * cfg.dt / cfg.eps;
        lambda[c] = cfg.eps / (mu[c] * cfg.dt);
        base[c] = conserved_of(moments(state.cells[c]));
    }

    std::vector<std::vector<GridFunction>> T(nu), Ghat(nu), Khat(nu);
    std::vector<std::vector<Conserved>> flux_mom(nu, std::vector<Conserved>(nx));
    std::vector<GridFunction> F(nx);

    for (int i = 0; i < nu; ++i) {
        const double aii = pr.im.a(i, i);
        Khat[i].resize(nx);
        for (int c = 0; c < nx; ++c) {
            GridFunction rhs = state.cells[c];
            for (int j = 0; j < i; ++j) {
                if (pr.ex.a(i, j) != 0.0) {
                    axpy(rhs, -pr.ex.a(i, j), T[j][c]);
                    if (spectral) axpy(rhs, pr.ex.a(i, j), Ghat[j][c]);
                }
                if (pr.im.a(i, j) != 0.0) axpy(rhs, pr.im.a(i, j), Khat[j][c]);
            }
            // Stage Maxwellian from the explicit moment scheme for this cell.
            Conserved cm = base[c];
            for (int j = 0; j < i; ++j) {
                const double a = pr.ex.a(i, j);
                if (a == 0.0) continue;
                cm.rho -= a * flux_mom[j][c].rho;
                cm.mx -= a * flux_mom[j][c].mx;
                cm.my -= a * flux_mom[j][c].my;
                cm.E -= a * flux_mom[j][c].E;
            }
            const GridFunction M = maxwellian(moments_of(cm, "imex_step_1d"), state.vgrid);

            Khat[i][c] = GridFunction(state.vgrid);
            if (aii != 0.0) {
                const double s = phi[c] / (1.0 + aii * phi[c]);
                for (size_t n = 0; n < rhs.values.size(); ++n)
                    Khat[i][c].values[n] = s * (M.values[n] - rhs.values[n]);
                F[c] = std::move(rhs);
                axpy(F[c], aii, Khat[i][c]);
            } else {
                F[c] = std::move(rhs);
                for (size_t n = 0; n < F[c].values.size(); ++n)
                    Khat[i][c].values[n] = phi[c] * (M.values[n] - F[c].values[n]);
            }
            check_finite(F[c], i + 1, lambda[c]);
        }

        // Transport of the completed stage (needs all cells), then collisions.
        T[i].resize(nx);
        for (int c = 0; c < nx; ++c) {
            T[i][c] = upwind_transport(F, c, state, cfg.dt);
            flux_mom[i][c] = raw_quadrature(T[i][c]);
        }
        Ghat[i].assign(nx, GridFunction());
        if (spectral) {
            for (int c = 0; c < nx; ++c) Ghat[i][c] = GridFunction(state.vgrid);
            if (needs_g[i]) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
                for (int c = 0; c < nx; ++c) {
                    const GridFunction Q = q_boltzmann(F[c], *cfg.backend.table);
                    Conserved cm = base[c];
                    for (int j = 0; j < i; ++j) {
                        const double a = pr.ex.a(i, j);
                        if (a == 0.0) continue;
                        cm.rho -= a * flux_mom[j][c].rho;
                        cm.mx -= a * flux_mom[j][c].mx;
                        cm.my -= a * flux_mom[j][c].my;
                        cm.E -= a * flux_mom[j][c].E;
                    }
                    const GridFunction M =
                        maxwellian(moments_of(cm, "imex_step_1d"), state.vgrid);
                    const double inv_mu = 1.0 / mu[c];
                    for (size_t n = 0; n < Ghat[i][c].values.size(); ++n)
                        Ghat[i][c].values[n] =
                            phi[c] *
                            ((Q.values[n] + mu[c] * F[c].values[n]) * inv_mu - M.values[n]);
                }
            }
        }
    }

    KineticState1D out = state;
    for (int c = 0; c < nx; ++c) {
        GridFunction& oc = out.cells[c];
        for (int j = 0; j < nu; ++j)
            if (pr.ex.w[j] != 0.0) {
                axpy(oc, -pr.ex.w[j], T[j][c]);
                if (spectral) axpy(oc, pr.ex.w[j], Ghat[j][c]);
            }
        for (int j = 0; j < nu; ++j)
            if (pr.im.w[j] != 0.0) axpy(oc, pr.im.w[j], Khat[j][c]);
        check_finite(oc, nu + 1, lambda[c]);
    }
    return out;
}

RelaxationResult run_relaxation(
    const GridFunction& f0, const StepperConfig& cfg, double t_end, int snapshot_stride,
    const std::function<double(const GridFunction&, double)>& error_metric) {
    if (!(t_end > 0.0)) throw ConfigError("run_relaxation: t_end must be positive");
    const int steps = static_cast<int>(std::llround(t_end / cfg.dt));
    if (steps < 1 || std::abs(steps * cfg.dt - t_end) > 1e-9 * std::max(1.0, t_end))
        throw ConfigError("run_relaxation: t_end must be an integer multiple of dt");

    RelaxationResult res;
    const Moments m0 = moments(f0);
    GridFunction f = f0;
    res.snapshots.emplace_back(0.0, f);
    for (int n = 1; n <= steps; ++n) {
        StepDiagnostics sd;
        f = imex_step_homogeneous(f, cfg, &sd);
        const double t = n * cfg.dt;
        const Moments m = moments(f);
        DiagnosticsRow row;
        row.t = t;
        row.lambda = sd.lambda;
        row.rho_drift = std::abs(m.rho - m0.rho);
        row.w_drift = std::hypot(m.wx - m0.wx, m.wy - m0.wy);
        row.E_drift = std::abs(m.E - m0.E);
        row.entropy = entropy_clipped(f);
        row.min_f = sd.min_value;
        if (error_metric) row.l1_error = error_metric(f, t);
        res.diagnostics.push_back(row);
        if ((snapshot_stride > 0 && n % snapshot_stride == 0) || n == steps)
            res.snapshots.emplace_back(t, f);
    }
    res.final = f;
    return res;
}

GridFunction rk4_collision_step(const GridFunction& f, const CollisionBackend& backend,
                                double dt) {
    const GridFunction k1 = q_collision(f, backend);
    GridFunction tmp = f;
    axpy(tmp, 0.5 * dt, k1);
    const GridFunction k2 = q_collision(tmp, backend);
    tmp = f;
    axpy(tmp, 0.5 * dt, k2);
    const GridFunction k3 = q_collision(tmp, backend);
    tmp = f;
    axpy(tmp, dt, k3);
    const GridFunction k4 = q_collision(tmp, backend);
    GridFunction out = f;
    axpy(out, dt / 6.0, k1);
    axpy(out, dt / 3.0, k2);
    axpy(out, dt / 3.0, k3);
    axpy(out, dt / 6.0, k4);
    return out;
}

double entropy_clipped(const GridFunction& f) {
    double s = 0.0;
    for (double x : f.values)
        if (x > 0.0) s += x * std::log(x);
    return s * f.grid.dv * f.grid.dv;
}

}  // namespace apkinetic
