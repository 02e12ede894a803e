#pragma once

// The Kazdan-Warner problem  laplacian w + <alpha, dw> + c = phi e^w  and the
// report type shared by all of its solvers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kwsolve/error.hpp"
#include "kwsolve/grid.hpp"
#include "kwsolve/linsolve.hpp"
#include "kwsolve/operators.hpp"

namespace kw::solver {

struct KWProblem {
    OneForm alpha;
    double c = 0.0;
    ScalarField phi;

    KWProblem(OneForm a, double c_, ScalarField p) : alpha(std::move(a)), c(c_), phi(std::move(p)) {
        require_same_spec(alpha.spec(), phi.spec(), "KWProblem");
    }

    const GridSpec& spec() const { return phi.spec(); }
};

enum class Status { converged, max_iter, certified_unsolvable, not_certified };
enum class Method { monotone, newton, fixed_point, continuation, pointwise, linear };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::converged: return "converged";
    case Status::max_iter: return "max-iter";
    case Status::certified_unsolvable: return "certified-unsolvable";
    case Status::not_certified: return "not-certified";
    }
    return "?";
}

inline const char* to_string(Method m) {
    switch (m) {
    case Method::monotone: return "monotone";
    case Method::newton: return "newton";
    case Method::fixed_point: return "fixed-point";
    case Method::continuation: return "continuation";
    case Method::pointwise: return "pointwise";
    case Method::linear: return "linear";
    }
    return "?";
}

struct KWOptions {
    double tol = 1e-9;              // sup-step for monotone and Picard, scaled residual for Newton
    int monotone_max_iter = 500;
    int newton_max_iter = 50;
    int fixed_point_max_iter = 200;
    std::optional<double> lambda_override;
    bool adaptive_lambda = true;    // see monotone_solve
    lin::LinearOptions lin;
};

struct SolveReport {
    ScalarField w;
    Status status = Status::max_iter;
    Method method = Method::monotone;
    std::vector<double> trace;      // sup_x of each iterate, starting with the initial one
    std::vector<double> steps;      // sup|w_{i+1} - w_i|
    std::vector<double> residuals;  // sup-norm residual per iterate when computed
    int iterations = 0;
    double residual = 0.0;
    double tau_reached = 0.0;       // continuation only
    double lambda = 0.0;            // monotone only
    std::string message;

    bool converged() const { return status == Status::converged; }
};

/// F(w) = laplacian w + <alpha, dw> + c - phi e^w.
inline ScalarField kw_residual(const KWProblem& prob, const ScalarField& w) {
    require_same_spec(prob.spec(), w.spec(), "kw_residual");
    ScalarField f = ops::chern_laplacian(prob.alpha, w);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += prob.c - prob.phi[i] * std::exp(w[i]);
    return f;
}

/// Natural size of the terms of F, used to make residual tolerances relative.
inline double residual_scale(const KWProblem& prob, const ScalarField& w) {
    return 1.0 + std::abs(prob.c) + prob.phi.sup_norm() * std::exp(w.max());
}

struct BarrierCheck {
    bool ok = false;
    double margin = 0.0;  // max F for a sub-solution test, min F for a super-solution test
};

inline constexpr double default_barrier_tol = 1e-10;

inline BarrierCheck is_subsolution(const ScalarField& w, const KWProblem& prob,
                                   double tol = default_barrier_tol) {
    const double m = kw_residual(prob, w).max();
    return {m <= tol, m};
}

inline BarrierCheck is_supersolution(const ScalarField& w, const KWProblem& prob,
                                     double tol = default_barrier_tol) {
    const double m = kw_residual(prob, w).min();
    return {m >= -tol, m};
}

inline double sup_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace kw::solver
