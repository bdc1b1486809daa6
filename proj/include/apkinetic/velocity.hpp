#pragma once

#include <filesystem>
#include <vector>

#include "apkinetic/errors.hpp"

namespace apkinetic {

/// Uniform periodic velocity grid on [-v_max, v_max)^2 with N_v nodes per
/// dimension, node j at -v_max + j*dv. Quadrature weight dv^2 at every node.
struct VelocityGrid2D {
    int N_v = 0;
    double v_max = 0.0;
    double dv = 0.0;
    std::vector<double> nodes;  // N_v coordinates, shared by both dimensions

    static VelocityGrid2D make(int N_v, double v_max);
    bool same_as(const VelocityGrid2D& other) const {
        return N_v == other.N_v && v_max == other.v_max;
    }
    size_t size() const { return static_cast<size_t>(N_v) * N_v; }
};

/// A distribution function sampled on a velocity grid; value type.
/// Index (j, k) means v = (nodes[j], nodes[k]).
struct GridFunction {
    VelocityGrid2D grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const VelocityGrid2D& g) : grid(g), values(g.size(), 0.0) {}

    double& at(int j, int k) { return values[static_cast<size_t>(j) * grid.N_v + k]; }
    double at(int j, int k) const { return values[static_cast<size_t>(j) * grid.N_v + k]; }
};

/// Hydrodynamic moments (rho, w, E) with the 2D temperature
/// T = (2E - rho*|w|^2) / (2 rho), so that E = rho*|w|^2/2 + rho*T.
struct Moments {
    double rho = 0.0;
    double wx = 0.0;
    double wy = 0.0;
    double E = 0.0;
    double T = 0.0;
};

Moments moments(const GridFunction& f);
GridFunction maxwellian(const Moments& m, const VelocityGrid2D& grid);
double l1_distance(const GridFunction& f, const GridFunction& g);
double entropy(const GridFunction& f);

// Elementwise helpers used throughout the steppers; all demand matching grids.
void axpy(GridFunction& y, double a, const GridFunction& x);  // y += a*x
double min_value(const GridFunction& f);
bool all_finite(const GridFunction& f);

// Snapshot format: a CSV dump with an "N_v,v_max" header line, then one row
// of N_v comma-separated values per j index.
void write_snapshot(const GridFunction& f, const std::filesystem::path& path);
GridFunction read_snapshot(const std::filesystem::path& path);

}  // namespace apkinetic
