#include "apkinetic/tableau.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace apkinetic {

namespace {

constexpr double kStructTol = 1e-14;  // row sums, GSA, triangularity
constexpr double kCondTol = 1e-12;    // order and positivity conditions

ButcherTableau make_tableau(int nu, std::vector<double> A, std::vector<double> w,
                            std::vector<double> c) {
    ButcherTableau t;
    t.nu = nu;
    t.A = std::move(A);
    t.w = std::move(w);
    t.c = std::move(c);
    return t;
}

}  // namespace

void ConditionReport::add(const std::string& label, double value, double violation,
                          double tol) {
    ConditionEntry e;
    e.label = label;
    e.value = value;
    e.violation = violation;
    e.satisfied = violation <= tol;
    entries.push_back(e);
    worst_violation = std::max(worst_violation, violation);
    satisfied = satisfied && e.satisfied;
}

IMEXPair builtin_pair(const std::string& name) {
    if (name == "IMEX-EULER(1,1,1)") {
        IMEXPair p;
        p.name = name;
        p.nu = 1;
        p.ex = make_tableau(1, {0.0}, {1.0}, {0.0});
        p.im = make_tableau(1, {1.0}, {1.0}, {1.0});
        return p;
    }
    if (name == "IMEX-BE(2,2,4)") {
        IMEXPair p;
        p.name = name;
        p.nu = 4;
        p.ex = make_tableau(4,
                            {0, 0, 0, 0,
                             0, 0, 0, 0,
                             0, 1, 0, 0,
                             0, 0.5, 0.5, 0},
                            {0, 0.5, 0.5, 0}, {0, 0, 1, 1});
        p.im = make_tableau(4,
                            {2, 0, 0, 0,
                             -2, 2, 0, 0,
                             0, -1, 2, 0,
                             0, 0.5, -1.5, 2},
                            {0, 0.5, -1.5, 2}, {2, 0, 1, 1});
        return p;
    }
    if (name == "IMEX-BE(3,5,5)") {
        IMEXPair p;
        p.name = name;
        p.nu = 5;
        p.ex = make_tableau(5,
                            {0, 0, 0, 0, 0,
                             1, 0, 0, 0, 0,
                             4.0 / 9.0, 2.0 / 9.0, 0, 0, 0,
                             0.25, 0, 0.75, 0, 0,
                             0.25, 0, 0.75, 0, 0},
                            {0.25, 0, 0.75, 0, 0}, {0, 1, 2.0 / 3.0, 1, 1});
        p.im = make_tableau(5,
                            {0, 0, 0, 0, 0,
                             0.5, 0.5, 0, 0, 0,
                             5.0 / 18.0, -1.0 / 9.0, 0.5, 0, 0,
                             0.5, 0, 0, 0.5, 0,
                             0.25, 0, 0.75, -0.5, 0.5},
                            {0.25, 0, 0.75, -0.5, 0.5}, {0, 1, 2.0 / 3.0, 1, 1});
        return p;
    }
    std::string names;
    for (const auto& n : builtin_pair_names()) {
        if (!names.empty()) names += ", ";
        names += n;
    }
    throw ConfigError("unknown IMEX pair \"" + name + "\"; available: " + names);
}

std::vector<std::string> builtin_pair_names() {
    return {"IMEX-EULER(1,1,1)", "IMEX-BE(2,2,4)", "IMEX-BE(3,5,5)"};
}

ConditionReport validate_pair(const IMEXPair& pair) {
    ConditionReport rep;
    rep.condition = "validate_pair(" + pair.name + ")";
    const int nu = pair.nu;
    rep.add("stage counts match", static_cast<double>(pair.ex.nu),
            std::abs(pair.ex.nu - nu) + std::abs(pair.im.nu - nu), 0.0);

    // Explicit part strictly lower triangular, implicit lower triangular.
    double tri_ex = 0.0, tri_im = 0.0;
    for (int i = 0; i < nu; ++i) {
        for (int j = i; j < nu; ++j) tri_ex = std::max(tri_ex, std::abs(pair.ex.a(i, j)));
        for (int j = i + 1; j < nu; ++j) tri_im = std::max(tri_im, std::abs(pair.im.a(i, j)));
    }
    rep.add("explicit tableau strictly lower triangular", tri_ex, tri_ex, kStructTol);
    rep.add("implicit tableau lower triangular", tri_im, tri_im, kStructTol);

    // Row-sum consistency c_i = sum_j A_ij for both tableaux.
    for (int i = 0; i < nu; ++i) {
        double se = 0.0, si = 0.0;
        for (int j = 0; j < nu; ++j) {
            se += pair.ex.a(i, j);
            si += pair.im.a(i, j);
        }
        rep.add("explicit row sum i=" + std::to_string(i + 1), se,
                std::abs(se - pair.ex.c[i]), kStructTol);
        rep.add("implicit row sum i=" + std::to_string(i + 1), si,
                std::abs(si - pair.im.c[i]), kStructTol);
    }
    return rep;
}

ConditionReport is_globally_stiffly_accurate(const IMEXPair& pair) {
    ConditionReport rep;
    rep.condition = "is_globally_stiffly_accurate(" + pair.name + ")";
    const int nu = pair.nu;
    for (int i = 0; i < nu; ++i) {
        rep.add("w_" + std::to_string(i + 1) + " = a_nu," + std::to_string(i + 1),
                pair.im.w[i], std::abs(pair.im.w[i] - pair.im.a(nu - 1, i)), kStructTol);
        rep.add("w~_" + std::to_string(i + 1) + " = a~_nu," + std::to_string(i + 1),
                pair.ex.w[i], std::abs(pair.ex.w[i] - pair.ex.a(nu - 1, i)), kStructTol);
    }
    return rep;
}

ConditionReport order_conditions(const IMEXPair& pair, int p) {
    if (p < 1 || p > 3)
        throw ConfigError("order_conditions: unsupported order p=" + std::to_string(p) +
                          " (supported: 1, 2, 3)");
    ConditionReport rep;
    rep.condition = "order_conditions(" + pair.name + ", p=" + std::to_string(p) + ")";
    const int nu = pair.nu;
    const auto& w = pair.im.w;
    const auto& wt = pair.ex.w;
    const auto& c = pair.im.c;
    const auto& ct = pair.ex.c;

    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (int i = 0; i < nu; ++i) s += a[i] * b[i];
        return s;
    };
    auto matvec = [&](const ButcherTableau& T, const std::vector<double>& x) {
        std::vector<double> y(nu, 0.0);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nu; ++j) y[i] += T.a(i, j) * x[j];
        return y;
    };
    auto check = [&](const std::string& label, double value, double target) {
        rep.add(label + " = " + std::to_string(target), value, std::abs(value - target),
                kCondTol);
    };

    check("sum(w)", dot(w, std::vector<double>(nu, 1.0)), 1.0);
    check("sum(w~)", dot(wt, std::vector<double>(nu, 1.0)), 1.0);
    if (p < 2) return rep;

    check("w.c", dot(w, c), 0.5);
    check("w~.c~", dot(wt, ct), 0.5);
    check("w.c~", dot(w, ct), 0.5);
    check("w~.c", dot(wt, c), 0.5);
    if (p < 3) return rep;

    std::vector<double> cc(nu), ctct(nu), cct(nu);
    for (int i = 0; i < nu; ++i) {
        cc[i] = c[i] * c[i];
        ctct[i] = ct[i] * ct[i];
        cct[i] = c[i] * ct[i];
    }
    check("w.c^2", dot(w, cc), 1.0 / 3.0);
    check("w~.c~^2", dot(wt, ctct), 1.0 / 3.0);
    check("w.c~^2", dot(w, ctct), 1.0 / 3.0);
    check("w~.c^2", dot(wt, cc), 1.0 / 3.0);
    check("w.(c*c~)", dot(w, cct), 1.0 / 3.0);
    check("w~.(c*c~)", dot(wt, cct), 1.0 / 3.0);

    const struct {
        const char* label;
        const std::vector<double>& b;
        const ButcherTableau& T;
        const std::vector<double>& x;
    } prods[] = {
        {"w^T A c", w, pair.im, c},     {"w^T A c~", w, pair.im, ct},
        {"w^T A~ c", w, pair.ex, c},    {"w^T A~ c~", w, pair.ex, ct},
        {"w~^T A c", wt, pair.im, c},   {"w~^T A c~", wt, pair.im, ct},
        {"w~^T A~ c", wt, pair.ex, c},  {"w~^T A~ c~", wt, pair.ex, ct},
    };
    for (const auto& pr : prods) check(pr.label, dot(pr.b, matvec(pr.T, pr.x)), 1.0 / 6.0);
    return rep;
}

std::vector<double> bhat_matrix(const IMEXPair& pair, double lambda) {
    const int nu = pair.nu;
    const auto& A = pair.im;
    // Scale for the singularity test: the matrix is lower triangular, so the
    // determinant is the product of (lambda + a_ii).
    double scale = std::abs(lambda);
    for (int i = 0; i < nu; ++i) scale = std::max(scale, std::abs(A.a(i, i)));
    if (scale == 0.0) scale = 1.0;
    for (int i = 0; i < nu; ++i) {
        if (std::abs(lambda + A.a(i, i)) <= 1e-14 * scale)
            throw SingularMatrixError(
                "bhat_matrix(" + pair.name + "): lambda*I + A singular at diagonal " +
                    std::to_string(i + 1) + " (lambda=" + std::to_string(lambda) +
                    ", a_ii=" + std::to_string(A.a(i, i)) + ")",
                i + 1);
    }
    // Forward substitution, one unit-vector right-hand side per column.
    std::vector<double> B(static_cast<size_t>(nu) * nu, 0.0);
    for (int col = 0; col < nu; ++col) {
        for (int i = col; i < nu; ++i) {
            double s = (i == col) ? 1.0 : 0.0;
            for (int j = col; j < i; ++j) s -= A.a(i, j) * B[static_cast<size_t>(j) * nu + col];
            B[static_cast<size_t>(i) * nu + col] = s / (lambda + A.a(i, i));
        }
    }
    return B;
}

ConditionReport positivity_conditions(const IMEXPair& pair, double lambda) {
    if (lambda <= 0.0)
        throw ConfigError("positivity_conditions: lambda must be positive");
    ConditionReport rep;
    rep.condition = "positivity_conditions(" + pair.name + ", lambda=" +
                    std::to_string(lambda) + ")";
    rep.gsa_precondition = is_globally_stiffly_accurate(pair).satisfied;
    const int nu = pair.nu;
    const std::vector<double> B = bhat_matrix(pair, lambda);
    auto bhat = [&](int i, int h) { return B[static_cast<size_t>(i) * nu + h]; };

    auto interval = [&](const std::string& label, double v) {
        double viol = std::max({0.0 - v, v - 1.0, 0.0});
        rep.add(label + " in [0,1]", v, viol, kCondTol);
    };

    for (int i = 0; i < nu; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (int h = 0; h < nu; ++h) {
            s1 += bhat(i, h) * pair.im.c[h];
            s2 += bhat(i, h) * (pair.im.c[h] - pair.ex.c[h]);
        }
        interval("sum_h bhat_" + std::to_string(i + 1) + "h c_h", s1);
        interval("sum_h bhat_" + std::to_string(i + 1) + "h (c_h - c~_h)", s2);
    }
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < i; ++j) {
            double s3 = 0.0;
            for (int h = j + 1; h <= i; ++h) s3 += bhat(i, h) * pair.ex.a(h, j);
            interval("sum_{h=" + std::to_string(j + 2) + ".." + std::to_string(i + 1) +
                         "} bhat_" + std::to_string(i + 1) + "h a~_h" + std::to_string(j + 1),
                     s3);
        }
    }
    return rep;
}

namespace {

// Converts a tableau entry that may be a number, a decimal string, or an
// exact "p/q" rational string.
double parse_entry(const nlohmann::json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string())
        throw ConfigError("tableau entry at " + where + " must be a number or string");
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        const std::string ps = s.substr(0, slash);
        const std::string qs = s.substr(slash + 1);
        try {
            const long long pnum = std::stoll(ps);
            const long long qden = std::stoll(qs);
            if (qden == 0) throw ConfigError("zero denominator in \"" + s + "\" at " + where);
            return static_cast<double>(pnum) / static_cast<double>(qden);
        } catch (const std::invalid_argument&) {
            throw ConfigError("malformed rational \"" + s + "\" at " + where);
        } catch (const std::out_of_range&) {
            throw ConfigError("rational out of range \"" + s + "\" at " + where);
        }
    }
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("malformed numeric string \"" + s + "\" at " + where);
    return x;
}

ButcherTableau parse_tableau(const nlohmann::json& j, int nu, const std::string& which) {
    ButcherTableau t;
    t.nu = nu;
    const auto& A = j.at("A");
    if (!A.is_array() || static_cast<int>(A.size()) != nu)
        throw ConfigError("tableau " + which + ": A must be a " + std::to_string(nu) +
                          "-row matrix");
    t.A.resize(static_cast<size_t>(nu) * nu);
    for (int i = 0; i < nu; ++i) {
        const auto& row = A[i];
        if (!row.is_array() || static_cast<int>(row.size()) != nu)
            throw ConfigError("tableau " + which + ": row " + std::to_string(i + 1) +
                              " must have " + std::to_string(nu) + " entries");
        for (int jj = 0; jj < nu; ++jj)
            t.a(i, jj) = parse_entry(row[jj], which + ".A[" + std::to_string(i) + "][" +
                                                  std::to_string(jj) + "]");
    }
    const auto& w = j.at("w");
    const auto& c = j.at("c");
    if (static_cast<int>(w.size()) != nu || static_cast<int>(c.size()) != nu)
        throw ConfigError("tableau " + which + ": w and c must have " + std::to_string(nu) +
                          " entries");
    for (int i = 0; i < nu; ++i) {
        t.w.push_back(parse_entry(w[i], which + ".w[" + std::to_string(i) + "]"));
        t.c.push_back(parse_entry(c[i], which + ".c[" + std::to_string(i) + "]"));
    }
    return t;
}

}  // namespace

IMEXPair load_pair_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tableau file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("tableau file " + path.string() + ": " + e.what());
    }
    try {
        IMEXPair p;
        p.name = j.at("name").get<std::string>();
        p.nu = j.at("nu").get<int>();
        if (p.nu < 1) throw ConfigError("tableau file " + path.string() + ": nu must be >= 1");
        p.ex = parse_tableau(j.at("explicit"), p.nu, "explicit");
        p.im = parse_tableau(j.at("implicit"), p.nu, "implicit");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("tableau file " + path.string() + ": " + e.what());
    }
}

void save_pair_json(const IMEXPair& pair, const std::filesystem::path& path) {
    nlohmann::json j;
    j["name"] = pair.name;
    j["nu"] = pair.nu;
    auto dump = [&](const ButcherTableau& t) {
        nlohmann::json tj;
        for (int i = 0; i < t.nu; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int k = 0; k < t.nu; ++k) row.push_back(t.a(i, k));
            tj["A"].push_back(row);
        }
        tj["w"] = t.w;
        tj["c"] = t.c;
        return tj;
    };
    j["explicit"] = dump(pair.ex);
    j["implicit"] = dump(pair.im);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write tableau file " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace apkinetic
