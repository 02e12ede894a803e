#pragma once

// End-to-end solve of  s + (k/2)(laplacian u + <alpha, du>) = s_hat e^u.

#include <cmath>
#include <optional>
#include <string>

#include "kwsolve/geometry.hpp"
#include "kwsolve/kw/barriers.hpp"
#include "kwsolve/kw/certificates.hpp"
#include "kwsolve/kw/monotone.hpp"
#include "kwsolve/kw/newton.hpp"
#include "kwsolve/kw/perturbative.hpp"

namespace kw::solver {

enum class Strategy { newton, fixed_point, continuation };

inline Strategy parse_strategy(const std::string& s) {
    if (s == "newton") return Strategy::newton;
    if (s == "fixed-point" || s == "fixed_point") return Strategy::fixed_point;
    if (s == "continuation") return Strategy::continuation;
    throw PreconditionError("unknown strategy '" + s + "' (newton, fixed-point, continuation)");
}

struct PipelineOptions {
    Strategy strategy = Strategy::newton;
    int continuation_steps = 10;
    double gauduchon_tol = geo::default_gauduchon_tol;
    KWOptions kw;
};

struct PrescribedResult {
    std::optional<ScalarField> u;          // absent unless the report converged
    SolveReport report;
    std::optional<geo::ReducedProblem> reduced;
    std::optional<NecessaryResult> necessary;
    std::optional<SupersolutionResult> super;
    double residual = 0.0;                 // sup-norm residual of the prescribed equation
};

inline constexpr double zero_c_threshold = 1e-12;

inline PrescribedResult solve_prescribed(const ScalarField& s, const ScalarField& s_hat, const OneForm& alpha,
                                         const geo::GeometrySetup& setup, const PipelineOptions& opts = {}) {
    require_same_spec(s.spec(), s_hat.spec(), "solve_prescribed");
    require_same_spec(s.spec(), alpha.spec(), "solve_prescribed");
    PrescribedResult out;

    auto finish = [&](ScalarField u) {
        out.residual = prescribed_residual(s, s_hat, alpha, setup, u).sup_norm();
        out.u = std::move(u);
    };

    if (setup.degenerate()) {
        ScalarField u = geo::degenerate_solve(s, s_hat);
        out.report.method = Method::pointwise;
        out.report.status = Status::converged;
        out.report.w = u;
        out.report.residual = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            out.report.residual = std::max(out.report.residual, std::abs(s[i] - s_hat[i] * std::exp(u[i])));
        }
        out.residual = out.report.residual;
        out.u = std::move(u);
        return out;
    }

    out.reduced = geo::reduce(s, s_hat, alpha, setup, opts.kw.lin, opts.gauduchon_tol);
    const geo::ReducedProblem& red = *out.reduced;
    const KWProblem prob(alpha, red.c, red.phi);

    if (red.c < -zero_c_threshold) {
        out.necessary = necessary_check(prob, opts.kw.lin);
        if (!out.necessary->passed()) {
            out.report.status = Status::certified_unsolvable;
            out.report.method = Method::monotone;
            out.report.message = out.necessary->mean_negative
                                     ? "necessary condition failed: phi0 is not positive"
                                     : "necessary condition failed: mean(phi) is not negative";
            return out;
        }
        const ScalarField w_minus = build_subsolution(prob);
        out.super = build_supersolution(prob, opts.kw.lin);
        if (out.super->ok()) {
            out.report = monotone_solve(prob, w_minus, *out.super->w, opts.kw);
        } else {
            // No barrier certificate: Newton from the constant solving the mean equation.
            out.report = newton_solve(prob, ScalarField(s.spec(), std::log(red.c / ops::mean(red.phi))), opts.kw);
            if (!out.report.converged()) {
                out.report.status = Status::not_certified;
                out.report.message = out.super->failure + "; " + out.report.message;
            }
        }
        if (out.report.converged()) finish(geo::recover_metric(out.report.w, red));
        return out;
    }

    if (std::abs(red.c) <= zero_c_threshold && s_hat.sup_norm() < zero_c_threshold) {
        // s_hat = 0 leaves the linear equation laplacian u + <alpha, du> = -(2/k) s.
        ScalarField rhs = ops::subtract_mean(s * (-2.0 / setup.k()));
        auto sol = lin::solve_meanzero(alpha, rhs, opts.kw.lin);
        out.report.method = Method::linear;
        out.report.status = Status::converged;
        out.report.iterations = sol.stats.iterations;
        out.report.w = sol.u;
        finish(std::move(sol.u));
        out.report.residual = out.residual;
        return out;
    }

    switch (opts.strategy) {
    case Strategy::newton: {
        // Start from u = 0, i.e. w = -g.
        out.report = newton_solve(prob, -red.g, opts.kw);
        if (out.report.converged()) finish(geo::recover_metric(out.report.w, red));
        break;
    }
    case Strategy::fixed_point:
        out.report = fixed_point_solve(s, s_hat, alpha, setup, opts.kw);
        if (out.report.converged()) finish(out.report.w);
        break;
    case Strategy::continuation:
        out.report = continuation_solve(s, s_hat, alpha, setup, opts.continuation_steps, opts.kw);
        if (out.report.converged()) finish(out.report.w);
        break;
    }
    return out;
}

} // namespace kw::solver
