// apkinetic: asymptotic-preserving IMEX Runge-Kutta schemes for the
// space-homogeneous (and 1D slab) Boltzmann equation.
//
// Subcommands: relax, converge, aplimit, tableau, calibrate.
// Exit codes: 0 success, 2 configuration error, 3 numerical blow-up in a
// non-sweep run.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apkinetic/errors.hpp"
#include "apkinetic/harness.hpp"

namespace {

struct CliOptions {
    std::string config;
    std::optional<std::string> scheme;
    std::optional<std::string> backend;
    std::optional<std::string> tableau_file;
    std::optional<int> nv;
    std::optional<double> vmax;
    std::vector<double> eps;
    std::vector<double> dt;
    std::optional<double> tend;
    std::optional<double> sigma;
    std::optional<double> kappa;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<int> nx;
    std::optional<double> xmax;
    std::optional<int> snapshot_stride;
    bool timings = false;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config, "JSON config file; flags override its values");
    cmd->add_option("--scheme", opt.scheme, "builtin scheme name (or 'all' for tableau)");
    cmd->add_option("--tableau-file", opt.tableau_file, "JSON tableau pair file");
    cmd->add_option("--backend", opt.backend, "collision backend: boltzmann | bgk");
    cmd->add_option("--nv", opt.nv, "velocity nodes per axis");
    cmd->add_option("--vmax", opt.vmax, "velocity box half-width");
    cmd->add_option("--eps", opt.eps, "Knudsen numbers");
    cmd->add_option("--dt", opt.dt, "time steps (decreasing)");
    cmd->add_option("--tend", opt.tend, "final time");
    cmd->add_option("--sigma", opt.sigma, "BKW temperature parameter");
    cmd->add_option("--kappa", opt.kappa, "penalization safety factor (>= 1)");
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--seed", opt.seed, "RNG seed recorded with the outputs");
    cmd->add_option("--variant", opt.variant, "ap-limit variant: homogeneous | sod");
    cmd->add_option("--nx", opt.nx, "spatial cells (sod variant)");
    cmd->add_option("--xmax", opt.xmax, "spatial domain length (sod variant)");
    cmd->add_option("--snapshot-stride", opt.snapshot_stride,
                    "write a snapshot every N steps (relax)");
    cmd->add_flag("--timings", opt.timings,
                  "write measured runtime_ns columns (breaks byte determinism)");
}

apkinetic::RunConfig resolve_config(const CliOptions& opt, apkinetic::ExperimentKind kind) {
    apkinetic::RunConfig cfg;
    if (!opt.config.empty()) cfg = apkinetic::load_config(opt.config);
    cfg.experiment = kind;
    if (opt.scheme) cfg.scheme = *opt.scheme;
    if (opt.tableau_file) cfg.tableau_file = *opt.tableau_file;
    if (opt.backend) cfg.backend = *opt.backend;
    if (opt.nv) cfg.N_v = *opt.nv;
    if (opt.vmax) cfg.v_max = *opt.vmax;
    if (!opt.eps.empty()) cfg.eps_list = opt.eps;
    if (!opt.dt.empty()) cfg.dt_list = opt.dt;
    if (opt.tend) cfg.t_end = *opt.tend;
    if (opt.sigma) cfg.sigma = *opt.sigma;
    if (opt.kappa) cfg.kappa = *opt.kappa;
    if (opt.out) cfg.out_dir = *opt.out;
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.variant) cfg.variant = *opt.variant;
    if (opt.nx) cfg.N_x = *opt.nx;
    if (opt.xmax) cfg.x_max = *opt.xmax;
    if (opt.snapshot_stride) cfg.snapshot_stride = *opt.snapshot_stride;
    if (opt.timings) cfg.timings = true;
    return cfg;
}

void report_files(const std::vector<std::filesystem::path>& files) {
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asymptotic-preserving IMEX Runge-Kutta kinetic solver"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* relax = app.add_subcommand("relax", "homogeneous relaxation run");
    CLI::App* converge = app.add_subcommand("converge", "dt-convergence sweep");
    CLI::App* aplimit = app.add_subcommand("aplimit", "asymptotic-limit comparison");
    CLI::App* tableau = app.add_subcommand("tableau", "tableau condition report");
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "kernel normalization check (m4 rate fit)");
    for (CLI::App* cmd : {relax, converge, aplimit, tableau, calibrate}) {
        add_common_flags(cmd, opt);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        using namespace apkinetic;
        if (relax->parsed()) {
            const RunConfig cfg = resolve_config(opt, ExperimentKind::relaxation);
            const RelaxationReport report = run_relaxation_experiment(cfg);
            report_files(emit_outputs(report, cfg, cfg.out_dir));
        } else if (converge->parsed()) {
            const RunConfig cfg = resolve_config(opt, ExperimentKind::convergence);
            const ConvergenceReport report = run_convergence(cfg);
            report_files(emit_outputs(report, cfg, cfg.out_dir));
            for (const OrderFit& f : report.fits) {
                std::printf("eps=%.3g observed_order=%.4f residual=%.4f%s\n", f.eps, f.slope,
                            f.residual, f.unreliable ? " (unreliable)" : "");
            }
        } else if (aplimit->parsed()) {
            const RunConfig cfg = resolve_config(opt, ExperimentKind::ap_limit);
            const ApLimitReport report = run_ap_limit(cfg);
            report_files(emit_outputs(report, cfg, cfg.out_dir));
            for (const ApLimitRow& r : report.rows) {
                std::printf("eps=%.3g distance=%.6e\n", r.eps, r.distance);
            }
        } else if (tableau->parsed()) {
            const RunConfig cfg = resolve_config(opt, ExperimentKind::tableau_report);
            const TableauReport report = run_tableau_report(cfg);
            report_files(emit_outputs(report, cfg, cfg.out_dir));
            std::printf("%zu conditions, all satisfied: %s\n", report.rows.size(),
                        report.all_satisfied ? "yes" : "no");
        } else if (calibrate->parsed()) {
            RunConfig cfg = resolve_config(opt, ExperimentKind::relaxation);
            if (opt.tend == std::nullopt && opt.config.empty()) cfg.t_end = 8.0;
            const CalibrationReport report = calibrate_b0(cfg);
            std::printf("fitted_rate=%.6f expected_rate=%.6f implied_scale=%.6f%s\n",
                        report.fit.rate, report.expected_rate, report.implied_scale,
                        report.fit.converged ? "" : " (fit did not converge)");
        }
    } catch (const apkinetic::BlowUpError& e) {
        std::cerr << "numerical blow-up: " << e.what() << "\n";
        return 3;
    } catch (const apkinetic::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
