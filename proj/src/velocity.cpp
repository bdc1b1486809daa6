#include "apkinetic/velocity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace apkinetic {

VelocityGrid2D VelocityGrid2D::make(int N_v, double v_max) {
    if (N_v < 8 || N_v % 2 != 0)
        throw ConfigError("velocity grid needs even N_v >= 8, got " + std::to_string(N_v));
    if (!(v_max > 0.0))
        throw ConfigError("velocity grid needs v_max > 0");
    VelocityGrid2D g;
    g.N_v = N_v;
    g.v_max = v_max;
    g.dv = 2.0 * v_max / N_v;
    g.nodes.resize(N_v);
    for (int j = 0; j < N_v; ++j) g.nodes[j] = -v_max + j * g.dv;
    return g;
}

Moments moments(const GridFunction& f) {
    const auto& g = f.grid;
    const double w2 = g.dv * g.dv;
    double rho = 0.0, mx = 0.0, my = 0.0, e = 0.0;
    for (int j = 0; j < g.N_v; ++j) {
        const double vx = g.nodes[j];
        for (int k = 0; k < g.N_v; ++k) {
            const double vy = g.nodes[k];
            const double fv = f.at(j, k);
            rho += fv;
            mx += fv * vx;
            my += fv * vy;
            e += fv * 0.5 * (vx * vx + vy * vy);
        }
    }
    Moments m;
    m.rho = rho * w2;
    if (m.rho <= 1e-14)
        throw DegenerateStateError("moments: density " + std::to_string(m.rho) +
                                   " too small, temperature undefined");
    m.wx = mx * w2 / m.rho;
    m.wy = my * w2 / m.rho;
    m.E = e * w2;
    m.T = (2.0 * m.E - m.rho * (m.wx * m.wx + m.wy * m.wy)) / (2.0 * m.rho);
    return m;
}

GridFunction maxwellian(const Moments& m, const VelocityGrid2D& grid) {
    if (!(m.rho > 0.0) || !(m.T > 0.0))
        throw InvalidMomentsError("maxwellian: need rho > 0 and T > 0, got rho=" +
                                  std::to_string(m.rho) + ", T=" + std::to_string(m.T));
    GridFunction f(grid);
    const double pref = m.rho / (2.0 * std::numbers::pi * m.T);
    const double inv2T = 1.0 / (2.0 * m.T);
    for (int j = 0; j < grid.N_v; ++j) {
        const double dx = grid.nodes[j] - m.wx;
        for (int k = 0; k < grid.N_v; ++k) {
            const double dy = grid.nodes[k] - m.wy;
            f.at(j, k) = pref * std::exp(-(dx * dx + dy * dy) * inv2T);
        }
    }
    return f;
}

double l1_distance(const GridFunction& f, const GridFunction& g) {
    if (!f.grid.same_as(g.grid))
        throw GridMismatchError("l1_distance: grids differ");
    double s = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i) s += std::abs(f.values[i] - g.values[i]);
    return s * f.grid.dv * f.grid.dv;
}

double entropy(const GridFunction& f) {
    double s = 0.0;
    for (double x : f.values) {
        if (x < -1e-12)
            throw NegativeDensityError("entropy: negative density value " + std::to_string(x));
        if (x > 0.0) s += x * std::log(x);
    }
    return s * f.grid.dv * f.grid.dv;
}

void axpy(GridFunction& y, double a, const GridFunction& x) {
    if (!y.grid.same_as(x.grid))
        throw GridMismatchError("axpy: grids differ");
    for (size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

double min_value(const GridFunction& f) {
    double m = f.values.empty() ? 0.0 : f.values[0];
    for (double x : f.values) m = std::min(m, x);
    return m;
}

bool all_finite(const GridFunction& f) {
    for (double x : f.values)
        if (!std::isfinite(x)) return false;
    return true;
}

void write_snapshot(const GridFunction& f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write snapshot " + path.string());
    char buf[40];
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", f.grid.N_v, f.grid.v_max);
    out << buf;
    for (int j = 0; j < f.grid.N_v; ++j) {
        for (int k = 0; k < f.grid.N_v; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", f.at(j, k));
            out << buf << (k + 1 == f.grid.N_v ? "\n" : ",");
        }
    }
    if (!out) throw IoError("write failed for snapshot " + path.string());
}

GridFunction read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open snapshot " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty snapshot " + path.string());
    int N_v = 0;
    double v_max = 0.0;
    if (std::sscanf(line.c_str(), "%d,%lg", &N_v, &v_max) != 2)
        throw IoError("bad snapshot header in " + path.string());
    GridFunction f(VelocityGrid2D::make(N_v, v_max));
    for (int j = 0; j < N_v; ++j) {
        if (!std::getline(in, line)) throw IoError("truncated snapshot " + path.string());
        std::istringstream row(line);
        std::string cell;
        for (int k = 0; k < N_v; ++k) {
            if (!std::getline(row, cell, ','))
                throw IoError("short row " + std::to_string(j) + " in " + path.string());
            f.at(j, k) = std::strtod(cell.c_str(), nullptr);
        }
    }
    return f;
}

}  // namespace apkinetic
