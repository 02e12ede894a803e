#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "kwsolve/kw/problem.hpp"

namespace kw::solver {

namespace detail {

/// Exponential nonlinearity  F(w) = laplacian w + <alpha, dw> + a + b e^w
/// with pointwise coefficient fields a and b. Both the Kazdan-Warner problem
/// (a = c, b = -phi) and the homotopy steps of the continuation solver have
/// this shape.
struct ExpProblem {
    const OneForm& alpha;
    ScalarField a;
    ScalarField b;

    ScalarField residual(const ScalarField& w) const {
        ScalarField f = ops::chern_laplacian(alpha, w);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += a[i] + b[i] * std::exp(w[i]);
        return f;
    }

    double scale(const ScalarField& w) const {
        return 1.0 + a.sup_norm() + b.sup_norm() * std::exp(w.max());
    }
};

inline double norm2(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return std::sqrt(s);
}

/// Solves F'(w) delta = -F(w).
inline ScalarField newton_step(const ExpProblem& p, const ScalarField& w, const ScalarField& f,
                               const lin::LinearOptions& lin_opts) {
    ScalarField q(w.spec(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = p.b[i] * std::exp(w[i]);
    return lin::solve_reaction(p.alpha, q, -f, lin_opts).u;
}

/// sup|delta| of the next Newton correction, or infinity when the linearization cannot be solved.
inline double newton_correction(const ExpProblem& p, const ScalarField& w, const ScalarField& f,
                                const lin::LinearOptions& lin_opts) {
    if (f.sup_norm() == 0.0) return 0.0;
    try {
        return newton_step(p, w, f, lin_opts).sup_norm();
    } catch (const SolverError&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline SolveReport damped_newton(const ExpProblem& p, ScalarField w, double tol, int max_iter,
                                 const lin::LinearOptions& lin_opts) {
    SolveReport rep;
    rep.method = Method::newton;
    ScalarField f = p.residual(w);
    rep.residual = f.sup_norm();
    rep.residuals.push_back(rep.residual);
    rep.trace.push_back(w.max());

    for (int it = 0;; ++it) {
        if (!w.all_finite() || !std::isfinite(rep.residual)) {
            rep.status = Status::max_iter;
            rep.message = "Newton iterate became non-finite";
            break;
        }
        if (rep.residual <= tol * p.scale(w)) {
            // A small residual alone is not enough: when b e^w decays, F can be
            // tiny along a drift toward w = -infinity with no root nearby. A
            // genuine root is confirmed by a negligible Newton correction.
            const double correction = detail::newton_correction(p, w, f, lin_opts);
            if (correction <= 1e3 * tol * (1.0 + w.sup_norm())) {
                rep.status = Status::converged;
            } else {
                std::ostringstream os;
                os << "residual " << rep.residual << " is small but the Newton correction is " << correction
                   << ": the iterate is drifting, not converging";
                rep.message = os.str();
                rep.status = Status::max_iter;
            }
            break;
        }
        if (it >= max_iter) {
            std::ostringstream os;
            os << "Newton hit the cap of " << max_iter << " iterations, residual " << rep.residual;
            rep.message = os.str();
            rep.status = Status::max_iter;
            break;
        }

        ScalarField delta(w.spec(), 0.0);
        try {
            delta = newton_step(p, w, f, lin_opts);
        } catch (const SolverError& e) {
            rep.status = Status::max_iter;
            rep.message = std::string("Newton linear solve failed: ") + e.what();
            break;
        }

        const double f_norm = norm2(f);
        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            ScalarField trial = w;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += t * delta[i];
            ScalarField ft = p.residual(trial);
            const double n2 = norm2(ft);
            if (std::isfinite(n2) && n2 < f_norm) {
                rep.steps.push_back(t * delta.sup_norm());
                w = std::move(trial);
                f = std::move(ft);
                accepted = true;
                break;
            }
        }
        rep.iterations = it + 1;
        if (!accepted) {
            rep.status = Status::max_iter;
            rep.message = "Newton line search stalled";
            break;
        }
        rep.residual = f.sup_norm();
        rep.residuals.push_back(rep.residual);
        rep.trace.push_back(w.max());
    }
    rep.w = std::move(w);
    return rep;
}

} // namespace detail

/// Damped Newton on F(w) = laplacian w + <alpha, dw> + c - phi e^w.
inline SolveReport newton_solve(const KWProblem& prob, const ScalarField& w0, const KWOptions& opts = {}) {
    require_same_spec(prob.spec(), w0.spec(), "newton_solve");
    detail::ExpProblem p{prob.alpha, ScalarField(prob.spec(), prob.c), -prob.phi};
    return detail::damped_newton(p, w0, opts.tol, opts.newton_max_iter, opts.lin);
}

} // namespace kw::solver
