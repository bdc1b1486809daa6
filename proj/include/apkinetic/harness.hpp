#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "apkinetic/collision.hpp"
#include "apkinetic/integrator.hpp"
#include "apkinetic/limits.hpp"
#include "apkinetic/tableau.hpp"

namespace apkinetic {

enum class ExperimentKind { relaxation, convergence, ap_limit, tableau_report };

ExperimentKind experiment_from_string(const std::string& s);
std::string to_string(ExperimentKind kind);

/// One experiment description. Loaded from a JSON file and/or overridden by
/// CLI flags; every run is fully determined by this struct (plus the seed),
/// which is what makes reruns byte-identical.
struct RunConfig {
    ExperimentKind experiment = ExperimentKind::relaxation;
    int N_v = 32;
    double v_max = 3.0 * 3.14159265358979323846;
    std::string scheme = "IMEX-BE(2,2,4)";
    std::string tableau_file;  // optional JSON pair file overriding scheme
    std::string backend = "boltzmann";  // "boltzmann" | "bgk"
    double kappa = 1.0;
    std::vector<double> eps_list{1.0};
    std::vector<double> dt_list{0.1};
    double t_end = 2.0;
    double sigma = 1.0;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool timings = false;  // measured runtime_ns columns instead of zeros
    int snapshot_stride = 0;
    // ap-limit only: "homogeneous" or "sod" (1D kinetic-vs-Euler comparison)
    std::string variant = "homogeneous";
    int N_x = 100;
    double x_max = 1.0;
};

RunConfig load_config(const std::filesystem::path& path);
void validate_config(const RunConfig& cfg);

IMEXPair pair_for(const RunConfig& cfg);
CollisionBackend backend_for(const RunConfig& cfg);

struct ConvergenceCell {
    double eps = 0.0;
    double dt = 0.0;
    double l1_error = -1.0;
    long long steps = 0;
    long long runtime_ns = 0;
    bool blew_up = false;
    std::string note;
};

struct OrderFit {
    double eps = 0.0;
    double slope = 0.0;
    double residual = 0.0;  // RMS residual of the log-log fit
    int n_points = 0;
    bool unreliable = false;  // n_points < 2 or residual > 0.1
};

struct ConvergenceReport {
    std::vector<ConvergenceCell> cells;
    std::vector<OrderFit> fits;
};

/// For each (eps, dt): evolve BKW(0) to t_end and record the L1 distance to
/// the exact BKW(t_end / eps) profile; per eps, least-squares log-log order.
/// Blow-ups are recorded in their cell and never abort the sweep.
ConvergenceReport run_convergence(const RunConfig& cfg);

struct ApLimitRow {
    double eps = 0.0;
    double distance = 0.0;
    bool blew_up = false;
};

struct ApLimitReport {
    std::string variant;
    std::vector<ApLimitRow> rows;
    bool monotone = true;  // nonincreasing along the configured eps order
    std::vector<std::string> details;  // extra summary lines (1D moment gaps)
};

/// Homogeneous variant: distance l1(f^1, M[f^0]) after one step per eps.
/// Sod variant: L1 density gap between the kinetic solver and the explicit
/// RK Euler solver with the same kinetic fluxes after round(t_end/dt) steps.
ApLimitReport run_ap_limit(const RunConfig& cfg);

struct RelaxationReport {
    std::vector<DiagnosticsRow> rows;
    std::vector<std::pair<double, GridFunction>> snapshots;
    double rho_drift_max = 0.0;
    double w_drift_max = 0.0;
    double E_drift_max = 0.0;
    double min_f_min = 0.0;
    bool entropy_nonincreasing = true;
    double final_l1_error = -1.0;
};

RelaxationReport run_relaxation_experiment(const RunConfig& cfg);

struct TableauReport {
    struct Row {
        std::string scheme;
        std::string condition;
        std::string label;
        double value = 0.0;
        double violation = 0.0;
        bool satisfied = true;
    };
    std::vector<Row> rows;
    bool all_satisfied = true;
};

/// Structure, global stiff accuracy, order conditions p=1..3, and the
/// positivity inequalities at lambda in {1/4, 1/2, 1, 2} per scheme.
/// scheme "all" reports every builtin pair.
TableauReport run_tableau_report(const RunConfig& cfg);

// Deterministic artifact writers; each returns the files it wrote.
// runtime_ns columns are zero unless cfg.timings is set.
std::vector<std::filesystem::path> emit_outputs(const ConvergenceReport& report,
                                                const RunConfig& cfg,
                                                const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_outputs(const ApLimitReport& report,
                                                const RunConfig& cfg,
                                                const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_outputs(const RelaxationReport& report,
                                                const RunConfig& cfg,
                                                const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_outputs(const TableauReport& report,
                                                const RunConfig& cfg,
                                                const std::filesystem::path& dir);

// Sod-type shock tube shared by the ap-limit 1D variant and the tests:
// (rho, w, T) = (1, 0, 1) on the left half, (1/8, 0, 4/5) on the right.
KineticState1D make_sod_kinetic(int N_x, double x_max, const VelocityGrid2D& vgrid);
EulerState1D make_sod_euler(int N_x, double x_max, const VelocityGrid2D& vgrid);

/// Least-squares fit of y(t) ~ A - B exp(-rate t) by Gauss-Newton.
struct ExpFit {
    double A = 0.0;
    double B = 0.0;
    double rate = 0.0;
    int iterations = 0;
    bool converged = false;
};

ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                       double rate_guess);

/// Kernel-normalization check: evolve BKW(0) with the reference RK4
/// integrator, fit the fourth-moment relaxation rate, and report the
/// multiplicative b0 correction the fit implies. For the exact constant
/// b0 = sigma^2/(2 pi) the implied scale is 1 up to grid resolution.
struct CalibrationReport {
    ExpFit fit;
    double expected_rate = 0.0;  // sigma^2 / 4 for the fourth moment
    double implied_scale = 0.0;  // expected_rate / fitted rate
    std::vector<std::pair<double, double>> samples;  // (t, m4)
};

CalibrationReport calibrate_b0(const RunConfig& cfg);

}  // namespace apkinetic
