#pragma once

// Numerical bracket for the critical constant c_-(phi): the problem is
// solvable for c_-(phi) < c < 0 and not below it.

#include <cmath>
#include <optional>
#include <vector>

#include "kwsolve/kw/barriers.hpp"
#include "kwsolve/kw/certificates.hpp"
#include "kwsolve/kw/monotone.hpp"
#include "kwsolve/kw/newton.hpp"

namespace kw::solver {

enum class Evidence { solved, necessary_failed, solver_failed, search_limit };

inline const char* to_string(Evidence e) {
    switch (e) {
    case Evidence::solved: return "solved";
    case Evidence::necessary_failed: return "necessary-failed";
    case Evidence::solver_failed: return "solver-failed";
    case Evidence::search_limit: return "search-limit";
    }
    return "?";
}

struct Probe {
    double c;
    Evidence evidence;
};

struct Bracket {
    double c_lo = 0.0;
    double c_hi = 0.0;
    Evidence lo_evidence = Evidence::search_limit;
    Evidence hi_evidence = Evidence::solved;
    std::vector<Probe> probes;

    /// Every probe down to the search floor solved: read c_lo as minus infinity.
    bool minus_infinity() const { return lo_evidence == Evidence::search_limit; }
};

struct BracketOptions {
    double search_floor = -1e6;
    double start = -0.01;
    double relative_width = 0.01;
    KWOptions kw;
};

/// Solve attempt at a single c: certificate check, barriers and monotone
/// iteration, with Newton as the fallback when no barrier pair is available.
inline std::pair<Evidence, std::optional<ScalarField>> probe_solve(const ScalarField& phi, const OneForm& alpha,
                                                                   double c, const KWOptions& opts) {
    const KWProblem prob(alpha, c, phi);
    if (!necessary_check(prob, opts.lin).passed()) return {Evidence::necessary_failed, std::nullopt};
    try {
        const ScalarField w_minus = build_subsolution(prob);
        const auto super = build_supersolution(prob, opts.lin);
        ScalarField start(phi.spec(), std::log(c / ops::mean(phi)));
        if (super.ok()) {
            auto rep = monotone_solve(prob, w_minus, *super.w, opts);
            if (rep.converged()) return {Evidence::solved, std::move(rep.w)};
            start = rep.w;
        }
        auto rep = newton_solve(prob, start, opts);
        if (rep.converged()) return {Evidence::solved, std::move(rep.w)};
    } catch (const SolverError&) {
    }
    return {Evidence::solver_failed, std::nullopt};
}

inline Bracket critical_c_bracket(const ScalarField& phi, const OneForm& alpha, const BracketOptions& opts = {}) {
    require_same_spec(phi.spec(), alpha.spec(), "critical_c_bracket");
    const double phibar = ops::mean(phi);
    if (!(phibar < 0.0)) {
        throw PreconditionError("critical_c_bracket needs mean(phi) < 0, got " + std::to_string(phibar));
    }
    if (!(opts.search_floor < opts.start && opts.start < 0.0)) {
        throw PreconditionError("critical_c_bracket needs search_floor < start < 0");
    }

    Bracket br;
    auto attempt = [&](double c) {
        const Evidence e = probe_solve(phi, alpha, c, opts.kw).first;
        br.probes.push_back({c, e});
        return e;
    };

    // Find a solvable starting point, moving toward zero if needed.
    double c = opts.start;
    Evidence e = attempt(c);
    for (int tries = 0; e != Evidence::solved; ++tries) {
        if (tries >= 30) throw SolverError("critical_c_bracket found no solvable c near zero");
        c *= 0.5;
        e = attempt(c);
    }
    const double c_start = c;
    double last_ok = c;
    std::optional<double> first_fail;
    Evidence fail_evidence = Evidence::search_limit;

    // Geometric descent. One solver failure may be spurious; two in a row, or
    // any certificate failure, end the descent.
    int consecutive = 0;
    bool floor_done = false;
    while (!floor_done) {
        double next = c * 2.0;
        if (next <= opts.search_floor) {
            next = opts.search_floor;
            floor_done = true;
        }
        c = next;
        e = attempt(c);
        if (e == Evidence::solved) {
            last_ok = c;
            first_fail.reset();
            consecutive = 0;
            continue;
        }
        if (!first_fail) {
            first_fail = c;
            fail_evidence = e;
        }
        ++consecutive;
        if (e == Evidence::necessary_failed || consecutive >= 2) break;
    }

    if (!first_fail) {
        br.c_lo = opts.search_floor;
        br.c_hi = c_start;
        br.lo_evidence = Evidence::search_limit;
        br.hi_evidence = Evidence::solved;
        return br;
    }

    double hi = last_ok, lo = *first_fail;
    while (hi - lo > opts.relative_width * std::abs(hi)) {
        const double mid = 0.5 * (lo + hi);
        const Evidence m = attempt(mid);
        if (m == Evidence::solved) {
            hi = mid;
        } else {
            lo = mid;
            fail_evidence = m;
        }
    }
    br.c_lo = lo;
    br.c_hi = hi;
    br.lo_evidence = fail_evidence;
    br.hi_evidence = Evidence::solved;
    return br;
}

} // namespace kw::solver
