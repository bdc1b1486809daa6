#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "apkinetic/velocity.hpp"

namespace apkinetic {

/// Precomputed mode-coupling table for the Fourier-Galerkin collision operator
/// with the constant (Maxwell-molecule) 2D kernel b0.
///
/// Modes live in the symmetric box [-h, h]^2 with h = N_v/2 - 1; the asymmetric
/// Nyquist row/column is dropped so the truncated operator preserves parity
/// exactly. The gain coefficient depends only on |l+m|^2 and |l-m|^2, so the
/// table stores one dense matrix G over the achievable squared norms plus a
/// squared-norm -> index map. The loss coefficient is beta(m,m) = G(4|m|^2, 0).
struct SpectralKernelTable {
    VelocityGrid2D grid;
    double R = 0.0;   // support radius, R = 2/(3+sqrt(2)) * v_max
    double b0 = 0.0;  // kernel constant
    int n_angular = 0;
    int n_radial = 0;
    int h = 0;

    std::vector<long long> ach;  // sorted achievable squared norms {x^2+y^2 : 0<=x,y<=2h}
    std::vector<int> sq2idx;     // size 8h^2+1; index into ach, -1 when absent
    std::vector<double> G;       // ach.size() x ach.size(), row-major
    std::vector<double> loss;    // (2h+1)^2, index (m1+h)*(2h+1)+(m2+h)

    /// Gain coefficient beta(l, m) for modes with components in [-2h, 2h] range.
    double beta(int l1, int l2, int m1, int m2) const;
};

/// Builds the kernel table by angle x radius product quadrature. Order 0
/// requests the defaults max(32, 4*N_v) angular and max(64, 4*N_v) radial.
SpectralKernelTable precompute_kernel(const VelocityGrid2D& grid, double b0,
                                      int n_angular = 0, int n_radial = 0);

/// Direct O(N^4) spectral convolution; the k=0 mode of the result is exactly
/// zero (discrete mass conservation).
GridFunction q_boltzmann(const GridFunction& f, const SpectralKernelTable& table);

/// BGK surrogate mu*(M[f] - f).
GridFunction q_bgk(const GridFunction& f, double mu);

/// The exact Maxwell-molecule kernel constant, sigma^2/(2*pi). With it the
/// collision frequency is mu = 2*pi*b0*rho = sigma^2*rho, matching the BKW
/// relaxation rate S(t) = 1 - exp(-sigma^2 t/8)/2.
double default_b0(double sigma = 1.0);

struct CollisionBackend {
    enum class Kind { boltzmann_spectral, bgk };
    Kind kind = Kind::bgk;
    std::shared_ptr<const SpectralKernelTable> table;  // set for the spectral kind
    double b0 = 0.0;
    double kappa = 1.0;  // mu policy safety factor, >= 1

    double b0_tot() const;  // angular integral of the kernel constant, 2*pi*b0
};

CollisionBackend make_bgk_backend(double b0 = default_b0(), double kappa = 1.0);
CollisionBackend make_boltzmann_backend(std::shared_ptr<const SpectralKernelTable> table,
                                        double kappa = 1.0);

/// Penalization weight mu = kappa * b0_tot * rho(f).
double choose_mu(const GridFunction& f, const CollisionBackend& backend);

/// Q(f,f) through whichever backend is configured.
GridFunction q_collision(const GridFunction& f, const CollisionBackend& backend);

/// The decomposition Q = mu*g + mu*(M - f) with P = Q + mu*f, g = P/mu - M.
struct PenalizedSplit {
    GridFunction P;
    double mu = 0.0;
    GridFunction g;
    GridFunction M;
};

PenalizedSplit penalized_split(const GridFunction& f, const CollisionBackend& backend);

// Kernel-table cache. Files are keyed by (N_v, v_max, b0, quadrature orders)
// bit-exactly; a cache hit reproduces the recomputed table bit for bit.
void save_kernel_table(const SpectralKernelTable& table, const std::filesystem::path& path);
std::optional<SpectralKernelTable> load_kernel_table(const std::filesystem::path& path,
                                                     const VelocityGrid2D& grid, double b0,
                                                     int n_angular, int n_radial);

/// Returns a shared table for the given parameters, consulting the cache
/// directory named by APKINETIC_CACHE_DIR when that variable is set.
std::shared_ptr<const SpectralKernelTable> kernel_for(const VelocityGrid2D& grid, double b0,
                                                      int n_angular = 0, int n_radial = 0);

}  // namespace apkinetic
