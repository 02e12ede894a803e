#pragma once

#include <cmath>
#include <functional>
#include <sstream>

#include "kwsolve/kw/problem.hpp"

namespace kw::solver {

/// Called with (iteration, iterate) for w_0 = w_minus and every later iterate
/// of the increasing sequence.
using IterateObserver = std::function<void(int, const ScalarField&)>;

namespace detail {

inline void require_barrier_pair(const KWProblem& prob, const ScalarField& w_minus, const ScalarField& w_plus) {
    require_same_spec(prob.spec(), w_minus.spec(), "monotone_solve");
    require_same_spec(prob.spec(), w_plus.spec(), "monotone_solve");
    for (std::size_t i = 0; i < w_minus.size(); ++i) {
        if (w_minus[i] > w_plus[i]) {
            throw PreconditionError("sub-solution exceeds super-solution at " + prob.spec().describe_point(i));
        }
    }
    if (const auto sub = is_subsolution(w_minus, prob); !sub.ok) {
        throw PreconditionError("w_minus is not a sub-solution, margin " + std::to_string(sub.margin));
    }
    if (const auto super = is_supersolution(w_plus, prob); !super.ok) {
        throw PreconditionError("w_plus is not a super-solution, margin " + std::to_string(super.margin));
    }
}

/// rhs = phi e^w - c + lambda w, for a scalar or pointwise lambda.
inline void monotone_rhs(const KWProblem& prob, const ScalarField& w, const ScalarField* lambda_field,
                         double lambda, ScalarField& rhs) {
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        const double l = lambda_field ? (*lambda_field)[i] : lambda;
        rhs[i] = prob.phi[i] * std::exp(w[i]) - prob.c + l * w[i];
    }
}

} // namespace detail

/**
 * Sub/super-solution iteration
 *
 *     laplacian w_{i+1} + <alpha, dw_{i+1}> + lambda w_{i+1} = phi e^{w_i} - c + lambda w_i
 *
 * from w_0 = w_minus. lambda must exceed -phi e^w between the barriers, which
 * makes the right-hand side increasing in w_i and the iterates increasing in i.
 *
 * With a fixed lambda (`adaptive_lambda` off, or `lambda_override` set) this
 * is the textbook scheme with lambda = 1 + e^{sup w_plus} sup(phi^-). That
 * bound is tuned to the worst point of the barrier and the iteration then
 * contracts like 1 - |c| / lambda, which can take thousands of steps.
 *
 * The adaptive scheme also iterates downward from w_plus. Every downward
 * iterate U_i is again a super-solution lying above the solution and above
 * the upward iterates, so lambda_i(x) = 1 + phi^-(x) e^{U_i(x)} keeps the map
 * monotone on [w_i, U_i] while shrinking toward 1 + phi^- e^w.
 */
inline SolveReport monotone_solve(const KWProblem& prob, const ScalarField& w_minus, const ScalarField& w_plus,
                                  const KWOptions& opts = {}, const IterateObserver& observer = {}) {
    detail::require_barrier_pair(prob, w_minus, w_plus);

    double neg_sup = 0.0;
    for (double v : prob.phi.values()) neg_sup = std::max(neg_sup, -v);
    const bool adaptive = opts.adaptive_lambda && !opts.lambda_override;
    const double lambda = opts.lambda_override ? *opts.lambda_override : 1.0 + std::exp(w_plus.max()) * neg_sup;
    if (!(lambda > 0.0)) throw PreconditionError("monotone iteration needs lambda > 0");

    SolveReport rep;
    rep.method = Method::monotone;
    rep.lambda = lambda;
    rep.w = w_minus;
    rep.trace.push_back(rep.w.max());
    if (observer) observer(0, rep.w);

    ScalarField upper = w_plus;
    ScalarField lambda_field(prob.spec(), lambda);
    ScalarField rhs(prob.spec(), 0.0);
    for (int it = 1; it <= opts.monotone_max_iter; ++it) {
        ScalarField next(prob.spec(), 0.0);
        if (adaptive) {
            for (std::size_t i = 0; i < lambda_field.size(); ++i) {
                lambda_field[i] = 1.0 + std::max(-prob.phi[i], 0.0) * std::exp(upper[i]);
            }
            detail::monotone_rhs(prob, rep.w, &lambda_field, 0.0, rhs);
            next = lin::solve_reaction(prob.alpha, lambda_field, rhs, opts.lin, &rep.w).u;
            detail::monotone_rhs(prob, upper, &lambda_field, 0.0, rhs);
            upper = lin::solve_reaction(prob.alpha, lambda_field, rhs, opts.lin, &upper).u;
        } else {
            detail::monotone_rhs(prob, rep.w, nullptr, lambda, rhs);
            next = lin::solve_shifted(prob.alpha, lambda, rhs, opts.lin, &rep.w).u;
        }
        const double step = sup_diff(next, rep.w);
        rep.w = std::move(next);
        rep.iterations = it;
        rep.steps.push_back(step);
        rep.trace.push_back(rep.w.max());
        if (observer) observer(it, rep.w);

        // The residual costs an operator application; only look once the steps are small.
        if (step <= opts.tol) {
            rep.residual = kw_residual(prob, rep.w).sup_norm();
            rep.residuals.push_back(rep.residual);
            if (rep.residual <= opts.tol * residual_scale(prob, rep.w)) {
                rep.status = Status::converged;
                return rep;
            }
        }
    }
    rep.residual = kw_residual(prob, rep.w).sup_norm();
    std::ostringstream os;
    os << "monotone iteration hit the cap of " << opts.monotone_max_iter << " iterations, residual "
       << rep.residual;
    rep.message = os.str();
    rep.status = Status::max_iter;
    return rep;
}

} // namespace kw::solver
