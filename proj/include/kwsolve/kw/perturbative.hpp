#pragma once

// Solvers for the prescribed-curvature equation
//     s + (k/2)(laplacian u + <alpha, du>) = s_hat e^u
// that do not rely on the sign of c: a Picard iteration for data with small
// oscillation and a homotopy in the data.

#include <cmath>
#include <sstream>

#include "kwsolve/geometry.hpp"
#include "kwsolve/kw/newton.hpp"

namespace kw::solver {

/// s + (k/2) chern_laplacian(alpha, u) - s_hat e^u.
inline ScalarField prescribed_residual(const ScalarField& s, const ScalarField& s_hat, const OneForm& alpha,
                                       const geo::GeometrySetup& setup, const ScalarField& u) {
    ScalarField r = ops::chern_laplacian(alpha, u);
    const double half_k = 0.5 * setup.k();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s[i] + half_k * r[i] - s_hat[i] * std::exp(u[i]);
    return r;
}

inline double prescribed_scale(const ScalarField& s, const ScalarField& s_hat, const ScalarField& u) {
    return 1.0 + s.sup_norm() + s_hat.sup_norm() * std::exp(u.max());
}

/**
 * Picard iteration u <- L^{-1}((2/k)[s_hat - s - s_hat (1 + u - e^u)]) with
 * L u = laplacian u + <alpha, du> - (2/k) s_hat u, from u = 0.
 */
inline SolveReport fixed_point_solve(const ScalarField& s, const ScalarField& s_hat, const OneForm& alpha,
                                     const geo::GeometrySetup& setup, const KWOptions& opts = {}) {
    require_same_spec(s.spec(), s_hat.spec(), "fixed_point_solve");
    require_same_spec(s.spec(), alpha.spec(), "fixed_point_solve");
    if (setup.degenerate()) throw PreconditionError("degenerate parameter: fixed-point solve needs k != 0");
    if (s_hat.sup_norm() < 1e-12) {
        throw SolverError("fixed-point operator is singular: s_hat vanishes identically");
    }
    const double scale = 2.0 / setup.k();
    const ScalarField q = s_hat * (-scale);

    SolveReport rep;
    rep.method = Method::fixed_point;
    rep.w = ScalarField(s.spec(), 0.0);
    rep.trace.push_back(0.0);
    ScalarField rhs(s.spec(), 0.0);
    int growth = 0;
    for (int it = 1; it <= opts.fixed_point_max_iter; ++it) {
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            const double u = rep.w[i];
            rhs[i] = scale * (s_hat[i] - s[i] - s_hat[i] * (1.0 + u - std::exp(u)));
        }
        ScalarField next = lin::solve_reaction(alpha, q, rhs, opts.lin, &rep.w).u;
        const double step = sup_diff(next, rep.w);
        rep.w = std::move(next);
        rep.iterations = it;
        growth = !rep.steps.empty() && step > rep.steps.back() ? growth + 1 : 0;
        rep.steps.push_back(step);
        rep.trace.push_back(rep.w.max());
        if (!rep.w.all_finite()) {
            rep.status = Status::max_iter;
            rep.message = "fixed-point iterate became non-finite";
            return rep;
        }
        if (step <= opts.tol) {
            rep.residual = prescribed_residual(s, s_hat, alpha, setup, rep.w).sup_norm();
            rep.residuals.push_back(rep.residual);
            rep.status = Status::converged;
            return rep;
        }
        if (growth >= 10) {
            rep.status = Status::max_iter;
            rep.message = "fixed-point iteration diverging: step grew for 10 consecutive iterations";
            break;
        }
    }
    rep.residual = prescribed_residual(s, s_hat, alpha, setup, rep.w).sup_norm();
    if (rep.message.empty()) {
        std::ostringstream os;
        os << "fixed-point iteration hit the cap of " << opts.fixed_point_max_iter << " iterations";
        rep.message = os.str();
    }
    rep.status = Status::max_iter;
    return rep;
}

/// Homotopy (tau s, tau s_hat), tau = 1/steps, ..., 1, Newton-corrected at
/// each stage from the previous solution and from u = 0 at tau = 0.
inline SolveReport continuation_solve(const ScalarField& s, const ScalarField& s_hat, const OneForm& alpha,
                                      const geo::GeometrySetup& setup, int steps, const KWOptions& opts = {}) {
    require_same_spec(s.spec(), s_hat.spec(), "continuation_solve");
    require_same_spec(s.spec(), alpha.spec(), "continuation_solve");
    if (steps < 1) throw PreconditionError("continuation needs steps >= 1");
    if (setup.degenerate()) throw PreconditionError("degenerate parameter: continuation needs k != 0");
    const double scale = 2.0 / setup.k();

    SolveReport rep;
    rep.method = Method::continuation;
    rep.w = ScalarField(s.spec(), 0.0);
    rep.trace.push_back(0.0);
    for (int j = 1; j <= steps; ++j) {
        const double tau = static_cast<double>(j) / steps;
        // F(u) = laplacian u + <alpha, du> + (2/k) tau (s - s_hat e^u)
        detail::ExpProblem p{alpha, s * (scale * tau), s_hat * (-scale * tau)};
        SolveReport stage = detail::damped_newton(p, rep.w, opts.tol, opts.newton_max_iter, opts.lin);
        rep.iterations += stage.iterations;
        if (!stage.converged()) {
            std::ostringstream os;
            os << "continuation failed at tau = " << tau << " (reached " << rep.tau_reached << "): " << stage.message;
            rep.message = os.str();
            rep.status = Status::max_iter;
            rep.residual = prescribed_residual(s, s_hat, alpha, setup, rep.w).sup_norm();
            return rep;
        }
        rep.steps.push_back(sup_diff(stage.w, rep.w));
        rep.w = std::move(stage.w);
        rep.tau_reached = tau;
        rep.trace.push_back(rep.w.max());
        rep.residuals.push_back(stage.residual);
    }
    rep.residual = prescribed_residual(s, s_hat, alpha, setup, rep.w).sup_norm();
    rep.status = Status::converged;
    return rep;
}

} // namespace kw::solver
