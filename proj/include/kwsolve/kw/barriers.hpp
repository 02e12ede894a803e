#pragma once

// Constructive sub- and super-solutions for c < 0.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "kwsolve/kw/problem.hpp"

namespace kw::solver {

/// Constant sub-solution; negative enough that c - phi e^w <= 0 everywhere.
inline ScalarField build_subsolution(const KWProblem& prob) {
    if (!(prob.c < 0.0)) throw PreconditionError("build_subsolution needs c < 0");
    double neg_sup = 0.0;
    for (double v : prob.phi.values()) neg_sup = std::max(neg_sup, -v);
    const double w = neg_sup == 0.0 ? 0.0 : std::min(0.0, std::log(-prob.c / neg_sup) - 0.1);
    ScalarField out(prob.spec(), w);
    const auto check = is_subsolution(out, prob);
    if (!check.ok) {
        std::ostringstream os;
        os << "constant sub-solution " << w << " failed verification, margin " << check.margin;
        throw SolverError(os.str());
    }
    return out;
}

struct SupersolutionResult {
    std::optional<ScalarField> w;
    std::string failure;
    int branch = 0;   // 0: phi < 0 constant, 1: phi <= 0, 2: phi changes sign
    double a = 0.0;
    double b = 0.0;

    bool ok() const { return w.has_value(); }
};

namespace detail {

inline double oscillation(const ScalarField& v, double a) {
    double m = 0.0;
    for (double x : v.values()) m = std::max(m, std::abs(std::expm1(a * x)));
    return m;
}

} // namespace detail

/**
 * Super-solution for c < 0 and mean(phi) < 0.
 *
 * With v the mean-zero solution of laplacian v + <alpha, dv> = phi - mean(phi),
 * the candidate is w = a v + b. When phi is strictly negative the constant
 * log(c / max phi) already works and keeps the barrier tight; when phi has zeros
 * the pair a = 3c / mean(phi), b = log a - a min v + 0.1 works for every c;
 * when phi changes sign we look for the largest a whose oscillation
 * |e^{av} - 1| stays below -mean(phi) / (2 sup|phi|) and need a >= 2c / mean(phi).
 */
inline SupersolutionResult build_supersolution(const KWProblem& prob, const lin::LinearOptions& opts = {}) {
    if (!(prob.c < 0.0)) throw PreconditionError("build_supersolution needs c < 0");
    const double phibar = ops::mean(prob.phi);
    if (!(phibar < 0.0)) {
        throw PreconditionError("necessary condition violated: mean(phi) = " + std::to_string(phibar) +
                                " is not negative");
    }
    const double c = prob.c;
    SupersolutionResult res;

    auto verify = [&](ScalarField w) {
        const auto check = is_supersolution(w, prob);
        if (check.ok) {
            res.w = std::move(w);
        } else {
            std::ostringstream os;
            os << "cannot certify: candidate failed verification, margin " << check.margin;
            res.failure = os.str();
        }
        return res;
    };

    const double phimax = prob.phi.max();
    if (phimax < 0.0) {
        res.branch = 0;
        res.b = std::log(c / phimax) + 0.1;
        return verify(ScalarField(prob.spec(), res.b));
    }

    const ScalarField v = lin::solve_meanzero(prob.alpha, ops::subtract_mean(prob.phi), opts).u;

    if (phimax <= 0.0) {
        res.branch = 1;
        res.a = 3.0 * c / phibar;
        res.b = std::log(res.a) - res.a * v.min() + 0.1;
        return verify(map(v, [&](double x) { return res.a * x + res.b; }));
    }

    res.branch = 2;
    const double bound = -phibar / (2.0 * prob.phi.sup_norm());
    const double a_needed = 2.0 * c / phibar;
    if (v.sup_norm() == 0.0) {
        res.failure = "cannot certify: phi - mean(phi) has a trivial potential";
        return res;
    }
    // The oscillation grows monotonically in a, so bracket and bisect.
    double lo = 0.0, hi = 1.0;
    while (detail::oscillation(v, hi) <= bound) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::oscillation(v, mid) <= bound) lo = mid;
        else hi = mid;
    }
    res.a = lo;
    if (!(lo > 0.0) || lo < a_needed) {
        std::ostringstream os;
        os << "cannot certify: largest admissible a = " << lo << " but a >= " << a_needed << " is needed";
        res.failure = os.str();
        return res;
    }
    res.b = std::log(lo);
    return verify(map(v, [&](double x) { return res.a * x + res.b; }));
}

} // namespace kw::solver
