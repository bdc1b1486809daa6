// Acceptance gate: one line per criterion, exit code = number of failures.
// Everything runs at desk scale (N_v=32, v_max=3*pi, sigma=1) unless noted.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "apkinetic/errors.hpp"
#include "apkinetic/harness.hpp"

using namespace apkinetic;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

int g_failures = 0;

void report(int n, const char* title, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s -- %s\n", ok ? "PASS" : "FAIL", n, title,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void note(const std::string& line) {
    std::printf("        %s\n", line.c_str());
    std::fflush(stdout);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3e", x);
    return buf;
}

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

void ensure_shared_cache() {
    if (std::getenv("APKINETIC_CACHE_DIR") == nullptr) {
        static const std::string dir =
            (fs::temp_directory_path() / "apkinetic-shared-cache").string();
        setenv("APKINETIC_CACHE_DIR", dir.c_str(), 1);
    }
}

const VelocityGrid2D& grid32() {
    static const VelocityGrid2D g = VelocityGrid2D::make(32, 3.0 * kPi);
    return g;
}

double l1_norm(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += std::abs(v);
    return s * f.grid.dv * f.grid.dv;
}

double mass_of(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.dv * f.grid.dv;
}

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

void criterion_1() {
    double worst = 0.0;
    bool ok = true;
    auto take = [&](const ConditionReport& rep) {
        ok = ok && rep.satisfied;
        worst = std::max(worst, rep.worst_violation);
    };
    for (const std::string& name : builtin_pair_names()) {
        take(validate_pair(builtin_pair(name)));
    }
    take(is_globally_stiffly_accurate(builtin_pair("IMEX-BE(2,2,4)")));
    take(is_globally_stiffly_accurate(builtin_pair("IMEX-BE(3,5,5)")));
    take(order_conditions(builtin_pair("IMEX-BE(2,2,4)"), 2));
    take(order_conditions(builtin_pair("IMEX-BE(3,5,5)"), 3));
    ok = ok && worst <= 1e-12;
    report(1, "tableau structure, stiff accuracy, and order sums", ok,
           "max violation " + fmt(worst) + ", tolerance 1e-12");
}

void criterion_2() {
    const IMEXPair pair = builtin_pair("IMEX-BE(2,2,4)");
    bool low_ok = true;
    double worst_low = 0.0;
    for (double lam : {0.25, 0.5, 1.0}) {
        const ConditionReport rep = positivity_conditions(pair, lam);
        low_ok = low_ok && rep.satisfied;
        worst_low = std::max(worst_low, rep.worst_violation);
    }
    const ConditionReport beyond = positivity_conditions(pair, 2.0);
    std::string offender = "none";
    for (const ConditionEntry& e : beyond.entries) {
        if (!e.satisfied) {
            offender = e.label + " = " + fmt(e.value);
            break;
        }
    }
    const bool ok = low_ok && !beyond.satisfied;
    report(2, "positivity window of the second-order pair", ok,
           "satisfied for lambda in {1/4, 1/2, 1} (max violation " + fmt(worst_low) +
               "), violated at lambda=2");
    note("first out-of-[0,1] sum at lambda=2: " + offender);
}

void criterion_3() {
    Timer timer;
    const auto backend = make_boltzmann_backend(kernel_for(grid32(), default_b0()), 1.0);

    // The |v|^4 observable used by the calibration fit needs the resolved
    // kernel; at N_v=32 its relaxation rate is dominated by tail truncation.
    RunConfig ccfg;
    ccfg.N_v = 64;
    ccfg.backend = "boltzmann";
    ccfg.dt_list = {0.05};
    ccfg.t_end = 2.0;
    const CalibrationReport cal = calibrate_b0(ccfg);

    const double dt = 1e-3;
    GridFunction f = bkw(grid32(), 0.0);
    double max_err = 0.0;
    for (int s = 1; s <= 4000; ++s) {
        f = rk4_collision_step(f, backend, dt);
        if (s % 250 == 0) {
            max_err = std::max(max_err, l1_distance(f, bkw(grid32(), s * dt)));
        }
    }

    Moments m;
    m.rho = 1.0;
    m.T = 1.0;
    m.E = 1.0;
    const GridFunction M = maxwellian(m, grid32());
    const double qmm = l1_norm(q_collision(M, backend));
    const double qmass = std::abs(mass_of(q_collision(bkw(grid32(), 0.0), backend)));

    const bool ok = max_err <= 1e-3 && qmm <= 1e-5 && qmass <= 1e-12;
    report(3, "reference collision integration tracks the exact relaxation", ok,
           "max L1 tracking error " + fmt(max_err) + " (tolerance 1e-3), L1 Q(M,M) " +
               fmt(qmm) + " (tolerance 1e-5), |mass(Q)| " + fmt(qmass) +
               " (tolerance 1e-12)");
    note("kernel calibration at N_v=64: fitted rate " + fmt(cal.fit.rate) +
         ", implied scale " + fmt(cal.implied_scale) + " (exact 1)");
    note("the tracking gap is the N_v=32 quadrature floor of the collision operator, "
         "not a time-integration error:");

    const VelocityGrid2D g64 = VelocityGrid2D::make(64, 3.0 * kPi);
    const auto backend64 = make_boltzmann_backend(kernel_for(g64, default_b0()), 1.0);
    GridFunction f64 = bkw(g64, 0.0);
    double max_err64 = 0.0;
    const double dt64 = 0.02;
    for (int s = 1; s <= 200; ++s) {
        f64 = rk4_collision_step(f64, backend64, dt64);
        if (s % 25 == 0) {
            max_err64 = std::max(max_err64, l1_distance(f64, bkw(g64, s * dt64)));
        }
    }
    note("same trajectory at N_v=64 (dt=2e-2): max L1 error " + fmt(max_err64));
    note("runtime " + fmt(timer.seconds()) + " s");
}

void criterion_4() {
    Timer timer;
    const char* names[] = {"IMEX-EULER(1,1,1)", "IMEX-BE(2,2,4)", "IMEX-BE(3,5,5)"};
    const double lo[] = {0.8, 1.8, 2.7};
    const double hi[] = {1.2, 2.2, 3.3};
    const std::vector<double> dts = {0.4, 0.2, 0.1, 0.05};

    double slopes[3];
    std::string cell_notes[3];
    for (int i = 0; i < 3; ++i) {
        RunConfig cfg;
        cfg.experiment = ExperimentKind::convergence;
        cfg.scheme = names[i];
        cfg.backend = "boltzmann";
        cfg.N_v = 32;
        cfg.eps_list = {1.0};
        cfg.dt_list = dts;
        cfg.t_end = 2.0;
        const ConvergenceReport rep = run_convergence(cfg);
        slopes[i] = rep.fits[0].slope;
        std::ostringstream os;
        os << names[i] << " errors vs exact profile:";
        for (const ConvergenceCell& c : rep.cells) os << ' ' << fmt(c.l1_error);
        cell_notes[i] = os.str();
    }
    bool ok = true;
    std::ostringstream head;
    for (int i = 0; i < 3; ++i) {
        const bool in = slopes[i] >= lo[i] && slopes[i] <= hi[i];
        ok = ok && in;
        if (i) head << ", ";
        head << names[i] << " order " << fmt(slopes[i]) << " (want [" << lo[i] << ","
             << hi[i] << "])";
    }
    report(4, "observed orders against the exact relaxation profile", ok, head.str());
    for (int i = 0; i < 3; ++i) note(cell_notes[i]);
    note("errors flatten at the N_v=32 quadrature floor of the exact-profile "
         "comparison; a semidiscrete reference (RK4 on the same grid, far below "
         "these step sizes) removes that floor:");

    // Semidiscrete reference: the same spatial discretization integrated in
    // time far below the tested step sizes.
    const auto backend = make_boltzmann_backend(kernel_for(grid32(), default_b0()), 1.0);
    const GridFunction f0 = bkw(grid32(), 0.0);
    GridFunction ref = f0;
    for (int s = 0; s < 2000; ++s) ref = rk4_collision_step(ref, backend, 1e-3);

    std::ostringstream tail;
    for (int i = 0; i < 3; ++i) {
        std::vector<double> lx, ly;
        for (double dt : dts) {
            StepperConfig scfg;
            scfg.pair = builtin_pair(names[i]);
            scfg.dt = dt;
            scfg.eps = 1.0;
            scfg.backend = backend;
            GridFunction f = f0;
            const int n = static_cast<int>(std::llround(2.0 / dt));
            for (int s = 0; s < n; ++s) f = imex_step_homogeneous(f, scfg);
            lx.push_back(std::log(dt));
            ly.push_back(std::log(l1_distance(f, ref)));
        }
        const double slope = regression_slope(lx, ly);
        if (i) tail << ", ";
        tail << names[i] << " " << fmt(slope);
    }
    note("semidiscrete-reference orders: " + tail.str());

    // IMEX-EULER(1,1,1) and IMEX-BE(3,5,5) meet their bands against that
    // reference. IMEX-BE(2,2,4) does not at these step sizes: its implicit
    // diagonal is 2, so the update's rational approximant departs from exp(z)
    // with a large low-order constant and the scheme enters its asymptotic
    // regime slowly. Halving the step repeatedly shows the error ratio
    // climbing to the expected factor of 4 (ratio exponent 2).
    {
        std::ostringstream fine;
        fine << "IMEX-BE(2,2,4) is second order with a large error constant; "
                "halving dt from 0.05 gives errors";
        double prev = 0.0;
        for (double dt : {0.05, 0.025, 0.0125, 0.00625, 0.003125}) {
            StepperConfig scfg;
            scfg.pair = builtin_pair("IMEX-BE(2,2,4)");
            scfg.dt = dt;
            scfg.eps = 1.0;
            scfg.backend = backend;
            GridFunction f = f0;
            const int n = static_cast<int>(std::llround(2.0 / dt));
            for (int s = 0; s < n; ++s) f = imex_step_homogeneous(f, scfg);
            const double err = l1_distance(f, ref);
            fine << ' ' << fmt(err);
            if (prev > 0.0) {
                char r[24];
                std::snprintf(r, sizeof(r), " (r %.2f)", std::log2(prev / err));
                fine << r;
            }
            prev = err;
        }
        note(fine.str());
    }
    note("runtime " + fmt(timer.seconds()) + " s");
}

void criterion_5() {
    RunConfig cfg;
    cfg.experiment = ExperimentKind::ap_limit;
    cfg.scheme = "IMEX-BE(3,5,5)";
    cfg.backend = "boltzmann";
    cfg.N_v = 32;
    cfg.eps_list = {1.0, 1e-2, 1e-4, 1e-8};
    cfg.dt_list = {0.5};
    const ApLimitReport rep = run_ap_limit(cfg);
    const double last = rep.rows.back().distance;
    const bool ok = last <= 1e-6 && rep.monotone;
    report(5, "one-step collapse to the local Maxwellian", ok,
           "IMEX-BE(3,5,5) distance at eps=1e-8 " + fmt(last) +
               " (tolerance 1e-6), monotone " + (rep.monotone ? "yes" : "no"));
    std::ostringstream os;
    os << "ladder over eps {1, 1e-2, 1e-4, 1e-8}:";
    for (const ApLimitRow& r : rep.rows) os << ' ' << fmt(r.distance);
    note(os.str());
    note("the scheme's first stage is explicit, so with unprepared data the "
         "update keeps an O(1) deviation; the limit is reached by the fully "
         "implicit pair or by well-prepared data:");

    cfg.scheme = "IMEX-BE(2,2,4)";
    const ApLimitReport t1 = run_ap_limit(cfg);
    note("IMEX-BE(2,2,4), same ladder: distance at eps=1e-8 " +
         fmt(t1.rows.back().distance) + ", monotone " +
         (t1.monotone ? "yes" : "no"));

    const GridFunction f0 = bkw(grid32(), 0.0);
    const GridFunction M0 = maxwellian(moments(f0), grid32());
    GridFunction fp = M0;
    axpy(fp, 1e-8, f0);
    axpy(fp, -1e-8, M0);
    StepperConfig scfg;
    scfg.pair = builtin_pair("IMEX-BE(3,5,5)");
    scfg.dt = 0.5;
    scfg.eps = 1e-8;
    scfg.backend = make_boltzmann_backend(kernel_for(grid32(), default_b0()), 1.0);
    const double dprep = l1_distance(imex_step_homogeneous(fp, scfg), M0);
    note("IMEX-BE(3,5,5) from well-prepared data M + 1e-8 (f0 - M): distance " +
         fmt(dprep));
}

void criterion_6() {
    Timer timer;
    RunConfig cfg;
    cfg.experiment = ExperimentKind::ap_limit;
    cfg.variant = "sod";
    cfg.scheme = "IMEX-BE(2,2,4)";
    cfg.backend = "boltzmann";
    cfg.N_v = 32;
    cfg.N_x = 100;
    cfg.x_max = 1.0;
    cfg.eps_list = {1e-8};
    cfg.dt_list = {9e-4};
    cfg.t_end = 0.09;  // 100 steps
    const ApLimitReport rep = run_ap_limit(cfg);
    const double d = rep.rows[0].distance;
    const bool ok = !rep.rows[0].blew_up && d <= 1e-3;
    report(6, "1D shock-tube kinetic run matches the explicit Euler limit solver", ok,
           "L1(rho) gap after 100 steps " + fmt(d) + " (tolerance 1e-3)");
    if (!rep.details.empty()) note(rep.details[0]);
    note("runtime " + fmt(timer.seconds()) + " s");
}

void criterion_7() {
    RunConfig cfg;
    cfg.experiment = ExperimentKind::relaxation;
    cfg.scheme = "IMEX-BE(2,2,4)";
    cfg.backend = "bgk";
    cfg.N_v = 32;
    cfg.eps_list = {1.0};
    cfg.dt_list = {1.0};
    cfg.t_end = 4.0;
    const RelaxationReport rep = run_relaxation_experiment(cfg);
    const double lambda = rep.rows.empty() ? 0.0 : rep.rows.front().lambda;
    const bool ok = rep.rho_drift_max <= 1e-12 && rep.w_drift_max <= 1e-6 &&
                    rep.E_drift_max <= 1e-6 && rep.min_f_min >= -1e-15 &&
                    rep.entropy_nonincreasing;
    report(7, "conservation, positivity, and entropy decay (BGK, lambda=1)", ok,
           "rho drift " + fmt(rep.rho_drift_max) + " (tolerance 1e-12), momentum drift " +
               fmt(rep.w_drift_max) + ", energy drift " + fmt(rep.E_drift_max) +
               " (tolerance 1e-6), min f " + fmt(rep.min_f_min) +
               " (tolerance -1e-15), entropy nonincreasing " +
               (rep.entropy_nonincreasing ? "yes" : "no"));
    note("step stiffness ratio lambda = " + fmt(lambda));
}

void criterion_8() {
    const auto backend = make_boltzmann_backend(kernel_for(grid32(), default_b0()), 1.0);
    const GridFunction f0 = bkw(grid32(), 0.0);
    const GridFunction M0 = maxwellian(moments(f0), grid32());

    double max_gap = 0.0;
    for (const char* name : {"IMEX-BE(2,2,4)", "IMEX-BE(3,5,5)"}) {
        for (double eps : {1.0, 1e-10}) {
            StepperConfig scfg;
            scfg.pair = builtin_pair(name);
            scfg.dt = 0.25;
            scfg.eps = eps;
            scfg.backend = backend;
            GridFunction f = f0;
            for (int s = 0; s < 4; ++s) {
                StepDiagnostics sd;
                f = imex_step_homogeneous(f, scfg, &sd);
                max_gap = std::max(max_gap, sd.gsa_gap);
            }
        }
    }
    const bool identity_ok = max_gap <= 1e-12;

    StepperConfig scfg;
    scfg.pair = builtin_pair("IMEX-BE(3,5,5)");
    scfg.dt = 0.5;
    scfg.eps = 1e-10;
    scfg.backend = backend;
    const double d_gsa = l1_distance(imex_step_homogeneous(f0, scfg), M0);

    scfg.pair.ex.w[0] += 0.1;
    scfg.pair.ex.w[2] -= 0.1;
    bool negative_ok = false;
    std::string neg_detail;
    try {
        const double d_pert = l1_distance(imex_step_homogeneous(f0, scfg), M0);
        const double amp = d_pert / d_gsa;
        negative_ok = amp >= 1e3;
        neg_detail = "amplification " + fmt(amp) + " (want >= 1e3 or blow-up)";
    } catch (const BlowUpError& e) {
        negative_ok = true;
        neg_detail = std::string("blow-up detected: ") + e.what();
    }

    report(8, "stiffly accurate update identity and non-GSA amplification",
           identity_ok && negative_ok,
           "max per-step update gap " + fmt(max_gap) + " (tolerance 1e-12); " +
               neg_detail);
}

#ifdef APK_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd =
        std::string("\"") + APK_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}
#endif

void criterion_9() {
#ifdef APK_CLI_PATH
    const fs::path base = fs::temp_directory_path() / "apkinetic-acceptance";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string common =
        "relax --backend boltzmann --nv 32 --dt 0.25 --tend 1 --snapshot-stride 2 "
        "--out \"";
    const int rc1 = run_cli(common + (base / "run1").string() + "\"");
    const int rc2 = run_cli(common + (base / "run2").string() + "\"");

    int compared = 0;
    bool identical = rc1 == 0 && rc2 == 0;
    if (identical) {
        for (const auto& entry : fs::directory_iterator(base / "run1")) {
            const fs::path twin = base / "run2" / entry.path().filename();
            identical = identical && fs::exists(twin) &&
                        slurp(entry.path()) == slurp(twin);
            ++compared;
        }
    }
    const bool ok = identical && compared >= 3;
    report(9, "identical config and seed reproduce byte-identical outputs", ok,
           "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) + ", " +
               std::to_string(compared) + " files compared byte for byte");
#else
    report(9, "identical config and seed reproduce byte-identical outputs", false,
           "CLI path not configured at build time");
#endif
}

}  // namespace

int main() {
    ensure_shared_cache();
    std::printf("acceptance run: N_v=32, v_max=3*pi, sigma=1 unless stated\n");
    const Timer total;

    struct Entry {
        int n;
        const char* title;
        void (*fn)();
    };
    const Entry entries[] = {
        {1, "tableau structure, stiff accuracy, and order sums", criterion_1},
        {2, "positivity window of the second-order pair", criterion_2},
        {3, "reference collision integration tracks the exact relaxation", criterion_3},
        {4, "observed orders against the exact relaxation profile", criterion_4},
        {5, "one-step collapse to the local Maxwellian", criterion_5},
        {6, "1D shock-tube kinetic run matches the explicit Euler limit solver",
         criterion_6},
        {7, "conservation, positivity, and entropy decay (BGK, lambda=1)", criterion_7},
        {8, "stiffly accurate update identity and non-GSA amplification", criterion_8},
        {9, "identical config and seed reproduce byte-identical outputs", criterion_9},
    };
    for (const Entry& e : entries) {
        try {
            e.fn();
        } catch (const std::exception& ex) {
            report(e.n, e.title, false, std::string("unexpected exception: ") + ex.what());
        }
    }

    std::printf("%d of 9 criteria passed, total runtime %.1f s\n", 9 - g_failures,
                total.seconds());
    return g_failures;
}
