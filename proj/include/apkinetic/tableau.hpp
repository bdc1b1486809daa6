#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "apkinetic/errors.hpp"

namespace apkinetic {

/// One Runge-Kutta tableau (A, w, c) with nu stages, A stored row-major.
struct ButcherTableau {
    int nu = 0;
    std::vector<double> A;  // nu*nu, row-major
    std::vector<double> w;  // nu
    std::vector<double> c;  // nu

    double a(int i, int j) const { return A[static_cast<size_t>(i) * nu + j]; }
    double& a(int i, int j) { return A[static_cast<size_t>(i) * nu + j]; }
};

/// A matched explicit / diagonally-implicit tableau pair sharing the stage count.
/// Following the usual convention, the explicit entries are the "tilde" ones.
struct IMEXPair {
    std::string name;
    int nu = 0;
    ButcherTableau ex;  // strictly lower triangular
    ButcherTableau im;  // lower triangular (DIRK)
};

struct ConditionEntry {
    std::string label;
    double value = 0.0;
    double violation = 0.0;
    bool satisfied = true;
};

/// Result of a structural check: every evaluated condition with its violation.
struct ConditionReport {
    std::string condition;
    bool satisfied = true;
    double worst_violation = 0.0;
    std::vector<ConditionEntry> entries;
    // Recorded by positivity_conditions: whether the pair is globally stiffly
    // accurate (the guarantees below assume it), reported rather than enforced.
    bool gsa_precondition = false;

    void add(const std::string& label, double value, double violation, double tol);
};

// Builtin pairs, exact rational entries.
IMEXPair builtin_pair(const std::string& name);
std::vector<std::string> builtin_pair_names();

// Structural checks.
ConditionReport validate_pair(const IMEXPair& pair);
ConditionReport is_globally_stiffly_accurate(const IMEXPair& pair);
ConditionReport order_conditions(const IMEXPair& pair, int p);

/// Elements of (lambda*I + A)^{-1} for the implicit tableau, row-major.
/// Throws SingularMatrixError when a diagonal pivot vanishes.
std::vector<double> bhat_matrix(const IMEXPair& pair, double lambda);

/// The three inequality families that guarantee positivity and entropy decay,
/// each sum required to lie in [0, 1]; lambda = eps/(mu*dt) must be positive.
ConditionReport positivity_conditions(const IMEXPair& pair, double lambda);

// Tableau file IO. Entries may be numbers, decimal strings, or exact "p/q"
// rational strings; rationals are converted without intermediate rounding.
IMEXPair load_pair_json(const std::filesystem::path& path);
void save_pair_json(const IMEXPair& pair, const std::filesystem::path& path);

}  // namespace apkinetic
