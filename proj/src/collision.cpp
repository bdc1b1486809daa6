#include "apkinetic/collision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

#include <fftw3.h>

namespace apkinetic {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on (-1, 1) by Newton iteration on the
// three-term recurrence; standard and accurate to machine precision.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// J0(x) as the uniform angle average of cos(x cos(theta)); converges
// spectrally in the number of angles, which is what makes the quadrature
// refinement test meaningful.
double j0_angle(double x, int n_angular) {
    double s = 0.0;
    for (int j = 0; j < n_angular; ++j) {
        const double th = 2.0 * kPi * j / n_angular;
        s += std::cos(x * std::cos(th));
    }
    return s / n_angular;
}

int default_angular(int N_v) { return std::max(32, 4 * N_v); }
int default_radial(int N_v) { return std::max(64, 4 * N_v); }

size_t mode_index(int h, int m1, int m2) {
    return static_cast<size_t>(m1 + h) * (2 * h + 1) + (m2 + h);
}

}  // namespace

double SpectralKernelTable::beta(int l1, int l2, int m1, int m2) const {
    const long long sp = static_cast<long long>(l1 + m1) * (l1 + m1) +
                         static_cast<long long>(l2 + m2) * (l2 + m2);
    const long long sm = static_cast<long long>(l1 - m1) * (l1 - m1) +
                         static_cast<long long>(l2 - m2) * (l2 - m2);
    const int ip = sq2idx[static_cast<size_t>(sp)];
    const int im = sq2idx[static_cast<size_t>(sm)];
    return G[static_cast<size_t>(ip) * ach.size() + im];
}

SpectralKernelTable precompute_kernel(const VelocityGrid2D& grid, double b0,
                                      int n_angular, int n_radial) {
    if (grid.N_v % 2 != 0)
        throw ConfigError("precompute_kernel: N_v must be even, got " +
                          std::to_string(grid.N_v));
    if (n_angular == 0) n_angular = default_angular(grid.N_v);
    if (n_radial == 0) n_radial = default_radial(grid.N_v);
    if (n_angular < 32 || n_radial < 64)
        throw ConfigError("precompute_kernel: quadrature orders below the 32x64 floor");

    SpectralKernelTable t;
    t.grid = grid;
    t.b0 = b0;
    t.n_angular = n_angular;
    t.n_radial = n_radial;
    t.h = grid.N_v / 2 - 1;
    t.R = 2.0 / (3.0 + std::sqrt(2.0)) * grid.v_max;
    const int h = t.h;
    const double L = grid.v_max;

    // Achievable squared norms of the index vectors the table is consulted
    // with: |l+m|^2, |l-m|^2 and 4|m|^2 all have components in [0, 2h].
    std::set<long long> norms;
    for (int x = 0; x <= 2 * h; ++x)
        for (int y = x; y <= 2 * h; ++y) norms.insert(static_cast<long long>(x) * x +
                                                      static_cast<long long>(y) * y);
    t.ach.assign(norms.begin(), norms.end());
    const size_t nach = t.ach.size();
    t.sq2idx.assign(static_cast<size_t>(8) * h * h + 1, -1);
    for (size_t i = 0; i < nach; ++i) t.sq2idx[static_cast<size_t>(t.ach[i])] = static_cast<int>(i);

    // Radial Gauss-Legendre on [0, 2R] times the J0 angle factors:
    //   G(s, t) = 4 pi^2 b0 * Int_0^{2R} r J0(r a_s) J0(r a_t) dr,
    // with a_s = (pi / 2 v_max) sqrt(s).
    std::vector<double> xg, wg;
    gauss_legendre(n_radial, xg, wg);
    std::vector<double> r(n_radial), wr(n_radial);
    for (int i = 0; i < n_radial; ++i) {
        r[i] = (xg[i] + 1.0) * t.R;
        wr[i] = wg[i] * t.R;
    }
    std::vector<double> J(static_cast<size_t>(n_radial) * nach);
    for (size_t s = 0; s < nach; ++s) {
        const double a = (kPi / (2.0 * L)) * std::sqrt(static_cast<double>(t.ach[s]));
        for (int i = 0; i < n_radial; ++i)
            J[static_cast<size_t>(i) * nach + s] = j0_angle(r[i] * a, n_angular);
    }
    t.G.assign(nach * nach, 0.0);
    const double pref = 4.0 * kPi * kPi * b0;
    for (int i = 0; i < n_radial; ++i) {
        const double wri = pref * wr[i] * r[i];
        const double* Ji = &J[static_cast<size_t>(i) * nach];
        for (size_t s = 0; s < nach; ++s) {
            const double c = wri * Ji[s];
            double* Gs = &t.G[s * nach];
            for (size_t u = 0; u < nach; ++u) Gs[u] += c * Ji[u];
        }
    }

    const int side = 2 * h + 1;
    t.loss.assign(static_cast<size_t>(side) * side, 0.0);
    const int zero_idx = t.sq2idx[0];
    for (int m1 = -h; m1 <= h; ++m1)
        for (int m2 = -h; m2 <= h; ++m2) {
            const long long sq = 4ll * (static_cast<long long>(m1) * m1 +
                                        static_cast<long long>(m2) * m2);
            t.loss[mode_index(h, m1, m2)] =
                t.G[static_cast<size_t>(t.sq2idx[static_cast<size_t>(sq)]) * nach + zero_idx];
        }
    return t;
}

GridFunction q_boltzmann(const GridFunction& f, const SpectralKernelTable& table) {
    if (!f.grid.same_as(table.grid))
        throw GridMismatchError("q_boltzmann: function grid differs from table grid");
    const int N = f.grid.N_v;
    const int h = table.h;
    const int side = 2 * h + 1;
    const size_t nach = table.ach.size();

    // Forward transform, normalized so F_k are the Fourier coefficients.
    std::vector<std::complex<double>> buf(static_cast<size_t>(N) * N);
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = f.values[i];
    fftw_plan fwd = fftw_plan_dft_2d(N, N, reinterpret_cast<fftw_complex*>(buf.data()),
                                     reinterpret_cast<fftw_complex*>(buf.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
    const double invN2 = 1.0 / (static_cast<double>(N) * N);

    // Gather the symmetric mode box and pre-multiply the loss factors.
    std::vector<std::complex<double>> Fh(static_cast<size_t>(side) * side);
    std::vector<std::complex<double>> Floss(Fh.size());
    for (int m1 = -h; m1 <= h; ++m1)
        for (int m2 = -h; m2 <= h; ++m2) {
            const size_t src = static_cast<size_t>((m1 + N) % N) * N + (m2 + N) % N;
            const size_t dst = mode_index(h, m1, m2);
            Fh[dst] = buf[src] * invN2;
            Floss[dst] = Fh[dst] * table.loss[dst];
        }

    std::vector<std::complex<double>> Qh(Fh.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int k1 = -h; k1 <= h; ++k1) {
        for (int k2 = -h; k2 <= h; ++k2) {
            const int sp = table.sq2idx[static_cast<size_t>(
                static_cast<long long>(k1) * k1 + static_cast<long long>(k2) * k2)];
            const double* Grow = &table.G[static_cast<size_t>(sp) * nach];
            std::complex<double> acc(0.0, 0.0);
            const int lo1 = std::max(-h, k1 - h), hi1 = std::min(h, k1 + h);
            const int lo2 = std::max(-h, k2 - h), hi2 = std::min(h, k2 + h);
            for (int l1 = lo1; l1 <= hi1; ++l1) {
                const int m1 = k1 - l1;
                const long long d1sq = static_cast<long long>(l1 - m1) * (l1 - m1);
                const std::complex<double>* Fl = &Fh[mode_index(h, l1, -h)];
                const std::complex<double>* Fm = &Fh[mode_index(h, m1, -h)];
                const std::complex<double>* Fs = &Floss[mode_index(h, m1, -h)];
                for (int l2 = lo2; l2 <= hi2; ++l2) {
                    const int m2 = k2 - l2;
                    const int d2 = l2 - m2;
                    const double beta =
                        Grow[table.sq2idx[static_cast<size_t>(d1sq + static_cast<long long>(d2) * d2)]];
                    acc += Fl[l2 + h] * (beta * Fm[m2 + h] - Fs[m2 + h]);
                }
            }
            Qh[mode_index(h, k1, k2)] = acc;
        }
    }

    // Scatter back into the full spectrum (Nyquist stays zero) and invert.
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int k1 = -h; k1 <= h; ++k1)
        for (int k2 = -h; k2 <= h; ++k2)
            buf[static_cast<size_t>((k1 + N) % N) * N + (k2 + N) % N] =
                Qh[mode_index(h, k1, k2)];
    fftw_plan bwd = fftw_plan_dft_2d(N, N, reinterpret_cast<fftw_complex*>(buf.data()),
                                     reinterpret_cast<fftw_complex*>(buf.data()),
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);

    GridFunction q(f.grid);
    for (size_t i = 0; i < q.values.size(); ++i) q.values[i] = buf[i].real();
    return q;
}

GridFunction q_bgk(const GridFunction& f, double mu) {
    const Moments m = moments(f);
    GridFunction q = maxwellian(m, f.grid);
    for (size_t i = 0; i < q.values.size(); ++i)
        q.values[i] = mu * (q.values[i] - f.values[i]);
    return q;
}

double default_b0(double sigma) { return sigma * sigma / (2.0 * kPi); }

double CollisionBackend::b0_tot() const { return 2.0 * kPi * b0; }

CollisionBackend make_bgk_backend(double b0, double kappa) {
    if (kappa < 1.0) throw ConfigError("mu policy needs kappa >= 1");
    CollisionBackend b;
    b.kind = CollisionBackend::Kind::bgk;
    b.b0 = b0;
    b.kappa = kappa;
    return b;
}

CollisionBackend make_boltzmann_backend(std::shared_ptr<const SpectralKernelTable> table,
                                        double kappa) {
    if (!table) throw ConfigError("boltzmann backend needs a kernel table");
    if (kappa < 1.0) throw ConfigError("mu policy needs kappa >= 1");
    CollisionBackend b;
    b.kind = CollisionBackend::Kind::boltzmann_spectral;
    b.table = std::move(table);
    b.b0 = b.table->b0;
    b.kappa = kappa;
    return b;
}

double choose_mu(const GridFunction& f, const CollisionBackend& backend) {
    return backend.kappa * backend.b0_tot() * moments(f).rho;
}

GridFunction q_collision(const GridFunction& f, const CollisionBackend& backend) {
    if (backend.kind == CollisionBackend::Kind::boltzmann_spectral)
        return q_boltzmann(f, *backend.table);
    return q_bgk(f, choose_mu(f, backend));
}

PenalizedSplit penalized_split(const GridFunction& f, const CollisionBackend& backend) {
    PenalizedSplit s;
    s.mu = choose_mu(f, backend);
    s.M = maxwellian(moments(f), f.grid);
    if (backend.kind == CollisionBackend::Kind::bgk) {
        // Q = mu (M - f) makes P = mu M and g = 0 exactly.
        s.P = s.M;
        for (double& x : s.P.values) x *= s.mu;
        s.g = GridFunction(f.grid);
        return s;
    }
    s.P = q_boltzmann(f, *backend.table);
    for (size_t i = 0; i < s.P.values.size(); ++i) s.P.values[i] += s.mu * f.values[i];
    s.g = s.P;
    const double inv_mu = 1.0 / s.mu;
    for (size_t i = 0; i < s.g.values.size(); ++i)
        s.g.values[i] = s.g.values[i] * inv_mu - s.M.values[i];
    return s;
}

namespace {

constexpr char kMagic[4] = {'A', 'P', 'K', 'N'};
constexpr uint32_t kVersion = 1;

struct CacheHeader {
    char magic[4];
    uint32_t version;
    int32_t N_v;
    int32_t n_angular;
    int32_t n_radial;
    int32_t h;
    uint64_t vmax_bits;
    uint64_t b0_bits;
    uint64_t nach;
};

}  // namespace

void save_kernel_table(const SpectralKernelTable& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write kernel cache " + path.string());
    CacheHeader hd{};
    std::copy(std::begin(kMagic), std::end(kMagic), hd.magic);
    hd.version = kVersion;
    hd.N_v = t.grid.N_v;
    hd.n_angular = t.n_angular;
    hd.n_radial = t.n_radial;
    hd.h = t.h;
    hd.vmax_bits = std::bit_cast<uint64_t>(t.grid.v_max);
    hd.b0_bits = std::bit_cast<uint64_t>(t.b0);
    hd.nach = t.ach.size();
    out.write(reinterpret_cast<const char*>(&hd), sizeof hd);
    out.write(reinterpret_cast<const char*>(t.ach.data()),
              static_cast<std::streamsize>(t.ach.size() * sizeof(long long)));
    out.write(reinterpret_cast<const char*>(t.G.data()),
              static_cast<std::streamsize>(t.G.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(t.loss.data()),
              static_cast<std::streamsize>(t.loss.size() * sizeof(double)));
    if (!out) throw IoError("write failed for kernel cache " + path.string());
}

std::optional<SpectralKernelTable> load_kernel_table(const std::filesystem::path& path,
                                                     const VelocityGrid2D& grid, double b0,
                                                     int n_angular, int n_radial) {
    if (n_angular == 0) n_angular = default_angular(grid.N_v);
    if (n_radial == 0) n_radial = default_radial(grid.N_v);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    CacheHeader hd{};
    in.read(reinterpret_cast<char*>(&hd), sizeof hd);
    if (!in || !std::equal(std::begin(kMagic), std::end(kMagic), hd.magic) ||
        hd.version != kVersion || hd.N_v != grid.N_v ||
        hd.vmax_bits != std::bit_cast<uint64_t>(grid.v_max) ||
        hd.b0_bits != std::bit_cast<uint64_t>(b0) || hd.n_angular != n_angular ||
        hd.n_radial != n_radial || hd.h != grid.N_v / 2 - 1)
        return std::nullopt;

    SpectralKernelTable t;
    t.grid = grid;
    t.b0 = b0;
    t.n_angular = n_angular;
    t.n_radial = n_radial;
    t.h = hd.h;
    t.R = 2.0 / (3.0 + std::sqrt(2.0)) * grid.v_max;
    t.ach.resize(hd.nach);
    t.G.resize(hd.nach * hd.nach);
    const size_t side = static_cast<size_t>(2 * t.h + 1);
    t.loss.resize(side * side);
    in.read(reinterpret_cast<char*>(t.ach.data()),
            static_cast<std::streamsize>(t.ach.size() * sizeof(long long)));
    in.read(reinterpret_cast<char*>(t.G.data()),
            static_cast<std::streamsize>(t.G.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(t.loss.data()),
            static_cast<std::streamsize>(t.loss.size() * sizeof(double)));
    if (!in) return std::nullopt;
    t.sq2idx.assign(static_cast<size_t>(8) * t.h * t.h + 1, -1);
    for (size_t i = 0; i < t.ach.size(); ++i)
        t.sq2idx[static_cast<size_t>(t.ach[i])] = static_cast<int>(i);
    return t;
}

std::shared_ptr<const SpectralKernelTable> kernel_for(const VelocityGrid2D& grid, double b0,
                                                      int n_angular, int n_radial) {
    if (n_angular == 0) n_angular = default_angular(grid.N_v);
    if (n_radial == 0) n_radial = default_radial(grid.N_v);
    const char* dir = std::getenv("APKINETIC_CACHE_DIR");
    if (dir && *dir) {
        char name[128];
        std::snprintf(name, sizeof name, "kernel-n%d-v%016llx-b%016llx-a%d-r%d.apkn",
                      grid.N_v,
                      static_cast<unsigned long long>(std::bit_cast<uint64_t>(grid.v_max)),
                      static_cast<unsigned long long>(std::bit_cast<uint64_t>(b0)), n_angular,
                      n_radial);
        const std::filesystem::path path = std::filesystem::path(dir) / name;
        if (auto t = load_kernel_table(path, grid, b0, n_angular, n_radial))
            return std::make_shared<SpectralKernelTable>(std::move(*t));
        auto t = std::make_shared<SpectralKernelTable>(
            precompute_kernel(grid, b0, n_angular, n_radial));
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (!ec) save_kernel_table(*t, path);
        return t;
    }
    return std::make_shared<SpectralKernelTable>(
        precompute_kernel(grid, b0, n_angular, n_radial));
}

}  // namespace apkinetic
