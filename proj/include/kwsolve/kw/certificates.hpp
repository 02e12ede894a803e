#pragma once

// Checkable existence and non-existence statements for c < 0, plus the
// large-|c| asymptotics of the linearized problem.

#include <cmath>
#include <span>
#include <vector>

#include "kwsolve/kw/problem.hpp"

namespace kw::solver {

struct NecessaryResult {
    ScalarField phi0;
    bool positive = false;
    bool mean_negative = false;
    double min_phi0 = 0.0;
    double mean_phi = 0.0;

    bool passed() const { return positive && mean_negative; }
};

/// Solves laplacian phi0 + <alpha, d phi0> - c phi0 = -phi. A solution w of the
/// full problem forces phi0 > 0 and mean(phi) < 0, so a failure of either is a
/// certificate that no solution exists.
inline NecessaryResult necessary_check(const KWProblem& prob, const lin::LinearOptions& opts = {}) {
    if (!(prob.c < 0.0)) throw PreconditionError("necessary_check needs c < 0");
    NecessaryResult r{lin::solve_shifted(prob.alpha, -prob.c, -prob.phi, opts).u};
    r.min_phi0 = r.phi0.min();
    r.positive = r.min_phi0 > 0.0;
    r.mean_phi = ops::mean(prob.phi);
    r.mean_negative = r.mean_phi < 0.0;
    return r;
}

struct SufficientResult {
    bool certified = false;
    double alpha_star = 0.0;  // 0 when nothing certifies
    double margin = 0.0;      // relative margin (rhs - lhs) / rhs of alpha_star
};

/// Candidates -2^k * 2^-20 for k = 0..40, i.e. from about -1e-6 to -1e6.
inline std::vector<double> sufficient_candidates() {
    std::vector<double> out;
    for (int k = 0; k <= 40; ++k) out.push_back(-std::ldexp(1.0, k - 20));
    return out;
}

/// Certified when ||phi - a||_p < -a / (gamma (1 - 2c)) for some negative constant a.
inline SufficientResult sufficient_check(const KWProblem& prob, double gamma_hat, double p) {
    if (!(prob.c < 0.0)) throw PreconditionError("sufficient_check needs c < 0");
    if (!(gamma_hat > 0.0)) throw PreconditionError("sufficient_check needs gamma > 0");
    SufficientResult best;
    bool any = false;
    for (double a : sufficient_candidates()) {
        const double lhs = ops::lp_norm(prob.phi + (-a), p);
        const double rhs = -a / (gamma_hat * (1.0 - 2.0 * prob.c));
        if (lhs < rhs) {
            const double margin = (rhs - lhs) / rhs;
            if (!any || margin > best.margin) {
                best = {true, a, margin};
                any = true;
            }
        }
    }
    return best;
}

/// phi = -(laplacian psi + <lee, d psi>) + c (psi + alpha_const). By
/// construction necessary_check returns phi0 = psi + alpha_const, which changes
/// sign, while mean(phi) = c alpha_const < 0.
inline ScalarField construct_unsolvable(const ScalarField& psi, double alpha_const, double c, const OneForm& lee) {
    require_same_spec(psi.spec(), lee.spec(), "construct_unsolvable");
    if (!(c < 0.0)) throw PreconditionError("construct_unsolvable needs c < 0");
    const double m = ops::mean(psi);
    const double scale = std::max(1.0, psi.sup_norm());
    if (std::abs(m) > 1e-10 * scale) {
        throw PreconditionError("construct_unsolvable needs mean(psi) = 0, got " + std::to_string(m));
    }
    if (psi.sup_norm() == 0.0) throw PreconditionError("construct_unsolvable needs psi not identically zero");
    if (!(psi.min() + alpha_const < 0.0 && psi.max() + alpha_const > 0.0)) {
        throw PreconditionError("psi + alpha_const does not change sign");
    }
    ScalarField phi = -ops::chern_laplacian(lee, psi);
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] += c * (psi[i] + alpha_const);
    return phi;
}

struct AsymptoticRow {
    double c;
    double deviation;  // sup |c u - f|
};

/// For each c solves laplacian u + <alpha, du> - c u + f = 0 and records how
/// far c u is from f.
inline std::vector<AsymptoticRow> asymptotic_suite(const ScalarField& f, const OneForm& alpha,
                                                   std::span<const double> c_list,
                                                   const lin::LinearOptions& opts = {}) {
    require_same_spec(f.spec(), alpha.spec(), "asymptotic_suite");
    for (double c : c_list) {
        if (!(c < 0.0)) throw PreconditionError("asymptotic_suite needs every c < 0");
    }
    std::vector<AsymptoticRow> rows;
    for (double c : c_list) {
        const ScalarField u = lin::solve_shifted(alpha, -c, -f, opts).u;
        double dev = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) dev = std::max(dev, std::abs(c * u[i] - f[i]));
        rows.push_back({c, dev});
    }
    return rows;
}

} // namespace kw::solver
