#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <vector>

#include "apkinetic/collision.hpp"
#include "apkinetic/errors.hpp"
#include "apkinetic/limits.hpp"
#include "apkinetic/velocity.hpp"

using namespace apkinetic;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kVmax = 3.0 * kPi;

const VelocityGrid2D& grid_of(int N) {
    static VelocityGrid2D g8 = VelocityGrid2D::make(8, kVmax);
    static VelocityGrid2D g16 = VelocityGrid2D::make(16, kVmax);
    static VelocityGrid2D g32 = VelocityGrid2D::make(32, kVmax);
    static VelocityGrid2D g64 = VelocityGrid2D::make(64, kVmax);
    switch (N) {
        case 8: return g8;
        case 16: return g16;
        case 32: return g32;
        default: return g64;
    }
}

// Share one on-disk cache across every test binary so the expensive N=64
// table is built once per ctest run, not once per executable.
void ensure_shared_cache() {
    if (std::getenv("APKINETIC_CACHE_DIR") == nullptr) {
        static const std::string dir =
            (std::filesystem::temp_directory_path() / "apkinetic-shared-cache").string();
        setenv("APKINETIC_CACHE_DIR", dir.c_str(), 1);
    }
}

std::shared_ptr<const SpectralKernelTable> shared_kernel(int N) {
    ensure_shared_cache();
    return kernel_for(grid_of(N), default_b0());
}

// Raw midpoint sums; moments() rejects near-zero densities, and a collision
// output has (by design) nearly no mass at all.
struct RawMoments {
    double mass = 0.0;
    double momx = 0.0;
    double momy = 0.0;
    double energy = 0.0;
};

RawMoments raw_moments(const GridFunction& f) {
    RawMoments m;
    const int N = f.grid.N_v;
    const double dv2 = f.grid.dv * f.grid.dv;
    for (int j = 0; j < N; ++j) {
        const double vx = f.grid.nodes[j];
        for (int k = 0; k < N; ++k) {
            const double vy = f.grid.nodes[k];
            const double w = f.values[static_cast<size_t>(j) * N + k] * dv2;
            m.mass += w;
            m.momx += w * vx;
            m.momy += w * vy;
            m.energy += w * 0.5 * (vx * vx + vy * vy);
        }
    }
    return m;
}

// Second-order finite difference in t of the relaxation solution, used as the
// reference time derivative. One-sided at t=0 because the solution starts there.
GridFunction bkw_time_derivative(const VelocityGrid2D& grid, double t) {
    const double h = 1e-5;
    GridFunction d(grid);
    if (t >= 2.0 * h) {
        const GridFunction fp = bkw(grid, t + h);
        const GridFunction fm = bkw(grid, t - h);
        for (size_t i = 0; i < d.values.size(); ++i)
            d.values[i] = (fp.values[i] - fm.values[i]) / (2.0 * h);
    } else {
        const GridFunction f0 = bkw(grid, t);
        const GridFunction f1 = bkw(grid, t + h);
        const GridFunction f2 = bkw(grid, t + 2.0 * h);
        for (size_t i = 0; i < d.values.size(); ++i)
            d.values[i] =
                (-3.0 * f0.values[i] + 4.0 * f1.values[i] - f2.values[i]) / (2.0 * h);
    }
    return d;
}

double l1_norm(const GridFunction& f) {
    double s = 0.0;
    for (double x : f.values) s += std::abs(x);
    return s * f.grid.dv * f.grid.dv;
}

// Independent evaluation of the gain coefficient: composite Simpson on
// [0, 2R] with the library Bessel function, no shared code with the table.
double gain_reference(double s_sq, double t_sq, double R, double v_max, double b0) {
    const double a_s = kPi / (2.0 * v_max) * std::sqrt(s_sq);
    const double a_t = kPi / (2.0 * v_max) * std::sqrt(t_sq);
    const int n = 4000;  // intervals, even
    const double hr = 2.0 * R / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double r = i * hr;
        const double val =
            r * std::cyl_bessel_j(0.0, r * a_s) * std::cyl_bessel_j(0.0, r * a_t);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * val;
    }
    return 4.0 * kPi * kPi * b0 * acc * hr / 3.0;
}

}  // namespace

TEST_CASE("kernel table layout and loss consistency") {
    const SpectralKernelTable t = precompute_kernel(grid_of(8), default_b0());
    CHECK(t.h == 3);
    CHECK(t.n_angular == 32);
    CHECK(t.n_radial == 64);
    CHECK(t.R == doctest::Approx(2.0 / (3.0 + std::sqrt(2.0)) * kVmax).epsilon(1e-15));

    // ach holds the sorted distinct values of x^2+y^2 with 0 <= x,y <= 2h.
    REQUIRE(!t.ach.empty());
    CHECK(t.ach.front() == 0);
    CHECK(t.ach.back() == 72);
    for (size_t i = 1; i < t.ach.size(); ++i) CHECK(t.ach[i - 1] < t.ach[i]);
    for (size_t i = 0; i < t.ach.size(); ++i)
        CHECK(t.sq2idx[static_cast<size_t>(t.ach[i])] == static_cast<int>(i));
    CHECK(t.sq2idx[3] == -1);  // 3 is not a sum of two squares

    // The loss entry for mode m is the gain coefficient beta(m, m).
    const size_t nach = t.ach.size();
    const int zero = t.sq2idx[0];
    for (int m1 = -t.h; m1 <= t.h; ++m1)
        for (int m2 = -t.h; m2 <= t.h; ++m2) {
            const size_t idx =
                static_cast<size_t>(m1 + t.h) * (2 * t.h + 1) + (m2 + t.h);
            const long long sq = 4ll * (m1 * m1 + m2 * m2);
            const double expect =
                t.G[static_cast<size_t>(t.sq2idx[static_cast<size_t>(sq)]) * nach + zero];
            CHECK(t.loss[idx] == expect);
            CHECK(t.beta(m1, m2, m1, m2) == expect);
        }
}

TEST_CASE("kernel entries match an independent quadrature") {
    const SpectralKernelTable t = precompute_kernel(grid_of(8), default_b0());
    const size_t nach = t.ach.size();
    double worst = 0.0;
    for (size_t s = 0; s < nach; ++s)
        for (size_t u = 0; u < nach; ++u) {
            const double ref =
                gain_reference(static_cast<double>(t.ach[s]), static_cast<double>(t.ach[u]),
                               t.R, kVmax, t.b0);
            worst = std::max(worst, std::abs(t.G[s * nach + u] - ref));
        }
    CHECK(worst <= 1e-6);

    // Refining both quadratures 4x should not move the entries either.
    const SpectralKernelTable fine = precompute_kernel(grid_of(8), default_b0(), 128, 256);
    double drift = 0.0;
    for (size_t i = 0; i < t.G.size(); ++i)
        drift = std::max(drift, std::abs(t.G[i] - fine.G[i]));
    CHECK(drift <= 1e-6);
}

TEST_CASE("gain coefficient symmetries are exact") {
    const SpectralKernelTable t = precompute_kernel(grid_of(16), default_b0());
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> comp(-t.h, t.h);
    for (int it = 0; it < 100; ++it) {
        const int l1 = comp(rng), l2 = comp(rng), m1 = comp(rng), m2 = comp(rng);
        const double b = t.beta(l1, l2, m1, m2);
        CHECK(t.beta(m1, m2, l1, l2) == b);    // swap arguments
        CHECK(t.beta(-l1, -l2, -m1, -m2) == b);  // negate both modes
        CHECK(t.beta(l2, l1, m2, m1) == b);    // swap components
    }
}

TEST_CASE("collision of the relaxation state matches its time derivative") {
    auto table = shared_kernel(64);
    const VelocityGrid2D& g = grid_of(64);
    const GridFunction f0 = bkw(g, 0.0);
    const GridFunction q = q_boltzmann(f0, *table);
    const GridFunction dt = bkw_time_derivative(g, 0.0);

    GridFunction diff(g);
    for (size_t i = 0; i < diff.values.size(); ++i)
        diff.values[i] = q.values[i] - dt.values[i];
    CHECK(l1_norm(diff) <= 1e-8);

    // At the origin the derivative has the closed value 1/(4 pi).
    CHECK(std::abs(q.at(32, 32) - 0.07957747154594767) <= 1e-8);
}

TEST_CASE("moderate resolution keeps the derivative error small") {
    auto table = shared_kernel(32);
    const VelocityGrid2D& g = grid_of(32);
    for (const auto& [t, bound] : {std::pair{1.0, 1e-2}, std::pair{2.0, 5e-3}}) {
        const GridFunction q = q_boltzmann(bkw(g, t), *table);
        const GridFunction dt = bkw_time_derivative(g, t);
        GridFunction diff(g);
        for (size_t i = 0; i < diff.values.size(); ++i)
            diff.values[i] = q.values[i] - dt.values[i];
        CHECK(l1_norm(diff) <= bound);
    }
}

TEST_CASE("the maxwellian is a numerical equilibrium") {
    auto table = shared_kernel(32);
    Moments m;
    m.rho = 1.0;
    m.wx = 0.0;
    m.wy = 0.0;
    m.T = 1.0;
    m.E = 1.0;
    const GridFunction M = maxwellian(m, grid_of(32));
    CHECK(l1_norm(q_boltzmann(M, *table)) <= 1e-5);
}

TEST_CASE("collision output carries no mass") {
    auto table32 = shared_kernel(32);
    const GridFunction q_bkw = q_boltzmann(bkw(grid_of(32), 0.0), *table32);
    CHECK(std::abs(raw_moments(q_bkw).mass) <= 1e-12);

    const SpectralKernelTable t16 = precompute_kernel(grid_of(16), default_b0());
    GridFunction f(grid_of(16));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& x : f.values) x = u(rng);
    CHECK(std::abs(raw_moments(q_boltzmann(f, t16)).mass) <= 1e-12);
}

TEST_CASE("even inputs give even outputs") {
    auto table = shared_kernel(32);
    const int N = 32;

    auto evenness = [&](const GridFunction& q) {
        double worst = 0.0;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                worst = std::max(
                    worst, std::abs(q.at(j, k) - q.at((N - j) % N, (N - k) % N)));
        return worst;
    };

    CHECK(evenness(q_boltzmann(bkw(grid_of(32), 0.0), *table)) <= 1e-12);

    // A symmetrized random function is even to the bit; the operator must
    // preserve that up to rounding.
    GridFunction r(grid_of(32));
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (double& x : r.values) x = u(rng);
    GridFunction e(grid_of(32));
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
            e.at(j, k) = 0.5 * (r.at(j, k) + r.at((N - j) % N, (N - k) % N));
    CHECK(evenness(q_boltzmann(e, *table)) <= 1e-12);
}

TEST_CASE("momentum and energy of the collision output decay with resolution") {
    auto table64 = shared_kernel(64);
    for (double t : {0.0, 1.0}) {
        const RawMoments m = raw_moments(q_boltzmann(bkw(grid_of(64), t), *table64));
        CHECK(std::abs(m.momx) <= 1e-6);
        CHECK(std::abs(m.momy) <= 1e-6);
        CHECK(std::abs(m.energy) <= 1e-6);
    }

    // At N=32 the smooth-but-wide relaxation state is underresolved and the
    // defect sits at the 1e-3 scale; pin that so regressions are visible.
    auto table32 = shared_kernel(32);
    const RawMoments m32 = raw_moments(q_boltzmann(bkw(grid_of(32), 0.0), *table32));
    CHECK(std::abs(m32.momx) <= 5e-3);
    CHECK(std::abs(m32.energy) <= 5e-3);
}

TEST_CASE("choose_mu follows the density policy") {
    CHECK(default_b0() == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
    CHECK(default_b0(2.0) == doctest::Approx(2.0 / kPi).epsilon(1e-15));

    // b0 = 1/(2 pi) makes b0_tot = 1, so mu = kappa * rho.
    Moments m;
    m.rho = 1.0;
    m.T = 1.0;
    m.E = 1.0;
    const GridFunction f1 = maxwellian(m, grid_of(32));
    CHECK(choose_mu(f1, make_bgk_backend(1.0 / (2.0 * kPi), 1.0)) ==
          doctest::Approx(1.0).epsilon(1e-8));

    m.rho = 2.0;
    m.E = 2.0;
    const GridFunction f2 = maxwellian(m, grid_of(32));
    CHECK(choose_mu(f2, make_bgk_backend(1.0 / (2.0 * kPi), 1.5)) ==
          doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("penalized gain stays nearly nonnegative at kappa=1") {
    const CollisionBackend b32 = make_boltzmann_backend(shared_kernel(32), 1.0);
    const PenalizedSplit s32 = penalized_split(bkw(grid_of(32), 0.0), b32);
    CHECK(s32.mu == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(min_value(s32.P) >= -1e-3);

    const CollisionBackend b64 = make_boltzmann_backend(shared_kernel(64), 1.0);
    const PenalizedSplit s64 = penalized_split(bkw(grid_of(64), 0.0), b64);
    CHECK(min_value(s64.P) >= -1e-6);
}

TEST_CASE("penalized split identities") {
    const CollisionBackend backend = make_boltzmann_backend(shared_kernel(32), 1.0);
    const GridFunction f = bkw(grid_of(32), 0.5);
    const PenalizedSplit s = penalized_split(f, backend);
    const GridFunction q = q_boltzmann(f, *backend.table);

    // mu*g + mu*(M - f) reconstructs Q.
    GridFunction recon(f.grid);
    for (size_t i = 0; i < recon.values.size(); ++i)
        recon.values[i] =
            s.mu * s.g.values[i] + s.mu * (s.M.values[i] - f.values[i]);
    CHECK(l1_distance(recon, q) <= 1e-12);

    // g loses its mass exactly and its momentum/energy at the resolution of Q.
    const RawMoments mg = raw_moments(s.g);
    CHECK(std::abs(mg.mass) <= 1e-10);
    CHECK(std::abs(mg.momx) <= 5e-3);
    CHECK(std::abs(mg.energy) <= 5e-3);

    // P/mu shares the density of f.
    const RawMoments mp = raw_moments(s.P);
    CHECK(mp.mass / s.mu == doctest::Approx(raw_moments(f).mass).epsilon(1e-12));

    // At N=64 the shared-moment property reaches spectral accuracy.
    const CollisionBackend b64 = make_boltzmann_backend(shared_kernel(64), 1.0);
    const PenalizedSplit s64 = penalized_split(bkw(grid_of(64), 0.5), b64);
    const RawMoments mg64 = raw_moments(s64.g);
    CHECK(std::abs(mg64.mass) <= 1e-8);
    CHECK(std::abs(mg64.momx) <= 1e-8);
    CHECK(std::abs(mg64.energy) <= 1e-8);
}

TEST_CASE("bgk split is exact") {
    const CollisionBackend backend = make_bgk_backend(default_b0(), 1.0);
    const PenalizedSplit s = penalized_split(bkw(grid_of(32), 0.0), backend);
    for (double x : s.g.values) CHECK(x == 0.0);
    for (size_t i = 0; i < s.P.values.size(); ++i)
        CHECK(s.P.values[i] == s.mu * s.M.values[i]);
}

TEST_CASE("bgk surrogate properties") {
    Moments m;
    m.rho = 1.0;
    m.wx = 0.3;
    m.wy = -0.2;
    m.T = 0.8;
    m.E = 0.5 * (0.3 * 0.3 + 0.2 * 0.2) + 0.8;
    const GridFunction f = maxwellian(m, grid_of(32));

    // A Maxwellian is its own equilibrium.
    const GridFunction q = q_bgk(f, 1.7);
    double linf = 0.0;
    for (double x : q.values) linf = std::max(linf, std::abs(x));
    CHECK(linf <= 1e-8);

    // The surrogate conserves all moments for any input.
    const GridFunction g = bkw(grid_of(32), 0.25);
    const RawMoments mq = raw_moments(q_bgk(g, 2.3));
    CHECK(std::abs(mq.mass) <= 1e-8);
    CHECK(std::abs(mq.momx) <= 1e-8);
    CHECK(std::abs(mq.momy) <= 1e-8);
    CHECK(std::abs(mq.energy) <= 1e-8);

    // Exact linearity in mu.
    const GridFunction q1 = q_bgk(g, 0.7);
    const GridFunction q2 = q_bgk(g, 1.4);
    for (size_t i = 0; i < q1.values.size(); ++i)
        CHECK(q2.values[i] == 2.0 * q1.values[i]);
}

TEST_CASE("configuration guards") {
    CHECK_THROWS_AS(make_bgk_backend(default_b0(), 0.5), ConfigError);
    CHECK_THROWS_AS(make_boltzmann_backend(nullptr, 1.0), ConfigError);
    const SpectralKernelTable t8 = precompute_kernel(grid_of(8), default_b0());
    CHECK_THROWS_AS(
        make_boltzmann_backend(std::make_shared<SpectralKernelTable>(t8), 0.9),
        ConfigError);
    CHECK_THROWS_AS(precompute_kernel(grid_of(8), default_b0(), 16, 64), ConfigError);
    CHECK_THROWS_AS(precompute_kernel(grid_of(8), default_b0(), 32, 32), ConfigError);

    GridFunction f16(grid_of(16));
    std::fill(f16.values.begin(), f16.values.end(), 1.0);
    CHECK_THROWS_AS(q_boltzmann(f16, t8), GridMismatchError);
}

TEST_CASE("kernel cache round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "apkinetic-cache-roundtrip";
    fs::remove_all(dir);

    const char* old = std::getenv("APKINETIC_CACHE_DIR");
    const std::string saved = old ? old : "";
    setenv("APKINETIC_CACHE_DIR", dir.string().c_str(), 1);

    auto first = kernel_for(grid_of(16), default_b0());
    bool wrote_file = false;
    if (fs::exists(dir))
        for (const auto& entry : fs::directory_iterator(dir))
            wrote_file = wrote_file || entry.path().extension() == ".apkn";
    CHECK(wrote_file);

    auto second = kernel_for(grid_of(16), default_b0());
    CHECK(second->G == first->G);
    CHECK(second->loss == first->loss);
    CHECK(second->ach == first->ach);

    // Direct save/load honours the parameter key.
    const fs::path file = dir / "manual.apkn";
    save_kernel_table(*first, file);
    auto loaded = load_kernel_table(file, grid_of(16), default_b0(), 0, 0);
    REQUIRE(loaded.has_value());
    CHECK(loaded->G == first->G);
    CHECK(loaded->loss == first->loss);
    CHECK(load_kernel_table(file, grid_of(16), default_b0(2.0), 0, 0) == std::nullopt);
    CHECK(load_kernel_table(file, grid_of(16), default_b0(), 128, 0) == std::nullopt);
    CHECK(load_kernel_table(dir / "missing.apkn", grid_of(16), default_b0(), 0, 0) ==
          std::nullopt);

    if (old)
        setenv("APKINETIC_CACHE_DIR", saved.c_str(), 1);
    else
        unsetenv("APKINETIC_CACHE_DIR");
    fs::remove_all(dir);
}
