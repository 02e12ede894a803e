#pragma once

// Conformal change of the Gauduchon scalar curvatures on the flat torus and
// the reduction of the prescribed-curvature equation
//
//     s + (k/2) (laplacian u + <alpha, du>) = s_hat e^u,     k = n t - t + 1,
//
// to the Kazdan-Warner form  laplacian w + <alpha, dw> + c = phi e^w  via
// u = w + g.

#include <cmath>
#include <sstream>
#include <string>

#include "kwsolve/error.hpp"
#include "kwsolve/grid.hpp"
#include "kwsolve/linsolve.hpp"
#include "kwsolve/operators.hpp"

namespace kw::geo {

inline constexpr double degenerate_threshold = 1e-12;
inline constexpr double default_gauduchon_tol = 1e-6;

inline double coefficient(int n, double t) {
    if (n < 1) throw PreconditionError("complex dimension n must be >= 1");
    return n * t - t + 1.0;
}

class GeometrySetup {
public:
    GeometrySetup(int n, double t) : n_(n), t_(t), k_(coefficient(n, t)) {}

    int n() const noexcept { return n_; }
    double t() const noexcept { return t_; }
    double k() const noexcept { return k_; }
    bool degenerate() const noexcept { return std::abs(k_) < degenerate_threshold; }

private:
    int n_;
    double t_;
    double k_;
};

struct ReducedProblem {
    double c;
    ScalarField g;
    ScalarField phi;
    GeometrySetup setup;
};

/// s_hat = e^{-u} (s + (k/2) chern_laplacian(alpha, u)).
inline ScalarField transform_s(const ScalarField& s, const ScalarField& u, const OneForm& alpha,
                               const GeometrySetup& setup) {
    require_same_spec(s.spec(), u.spec(), "transform_s");
    require_same_spec(s.spec(), alpha.spec(), "transform_s");
    ScalarField out = ops::chern_laplacian(alpha, u);
    const double half_k = 0.5 * setup.k();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(-u[i]) * (s[i] + half_k * out[i]);
    return out;
}

/// Second curvature law under the conformal factor e^{2f}.
inline ScalarField transform_s2(const ScalarField& s2, const ScalarField& f, const OneForm& alpha,
                                const GeometrySetup& setup) {
    require_same_spec(s2.spec(), f.spec(), "transform_s2");
    require_same_spec(s2.spec(), alpha.spec(), "transform_s2");
    const double n = setup.n();
    const double t = setup.t();
    const double one_t2 = (1.0 - t) * (1.0 - t);
    const double c_lap = n * (1.0 - t) + t;
    const double c_grad = one_t2 * (1.0 - n * n) / 2.0;
    const double c_lee = n * (1.0 - t) + t - (n + 1.0) * one_t2 / 2.0;

    const ScalarField lap = ops::laplacian(f);
    const ScalarField grad2 = ops::gradient_squared(f);
    const ScalarField lee = ops::lee_pairing(alpha, f);
    ScalarField out(s2.spec(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(-2.0 * f[i]) * (s2[i] + c_lap * lap[i] + c_grad * grad2[i] + c_lee * lee[i]);
    }
    return out;
}

/// Integral of s against the unit-volume measure.
inline double gauduchon_degree(const ScalarField& s) { return ops::mean(s); }

inline void require_gauduchon(const OneForm& alpha, double tol) {
    if (alpha.gauduchon_validated()) return;
    const double div = ops::divergence(alpha).sup_norm();
    if (div > tol) {
        std::ostringstream os;
        os << "Lee form is not Gauduchon: sup|div alpha| = " << div << " exceeds " << tol;
        throw PreconditionError(os.str());
    }
}

inline ReducedProblem reduce(const ScalarField& s, const ScalarField& s_hat, const OneForm& alpha,
                             const GeometrySetup& setup, const lin::LinearOptions& opts = {},
                             double gauduchon_tol = default_gauduchon_tol) {
    require_same_spec(s.spec(), s_hat.spec(), "reduce");
    require_same_spec(s.spec(), alpha.spec(), "reduce");
    if (setup.degenerate()) {
        throw PreconditionError("degenerate parameter: n t - t + 1 = 0, use the pointwise solve");
    }
    require_gauduchon(alpha, gauduchon_tol);

    const double scale = 2.0 / setup.k();
    const double sbar = gauduchon_degree(s);
    ScalarField rhs = map(s, [&](double v) { return scale * (sbar - v); });
    // The rhs mean is zero analytically; remove rounding so the solvability
    // check only ever sees genuine violations.
    rhs = ops::subtract_mean(std::move(rhs));
    ScalarField g = lin::solve_meanzero(alpha, rhs, opts).u;
    ScalarField phi = zip(g, s_hat, [&](double gv, double sh) { return scale * std::exp(gv) * sh; });
    return {scale * sbar, std::move(g), std::move(phi), setup};
}

/// Log-conformal factor u = w + g.
inline ScalarField recover_metric(const ScalarField& w, const ReducedProblem& problem) {
    require_same_spec(w.spec(), problem.g.spec(), "recover_metric");
    return w + problem.g;
}

/// When k vanishes the equation is pointwise: s = s_hat e^u.
inline ScalarField degenerate_solve(const ScalarField& s, const ScalarField& s_hat) {
    require_same_spec(s.spec(), s_hat.spec(), "degenerate_solve");
    ScalarField u(s.spec(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(s_hat[i]) < 1e-10) {
            throw PreconditionError("s_hat vanishes at " + s.spec().describe_point(i));
        }
        const double ratio = s[i] / s_hat[i];
        if (!(ratio > 0.0)) {
            throw PreconditionError("non-positive ratio s/s_hat at " + s.spec().describe_point(i));
        }
        u[i] = std::log(ratio);
    }
    return u;
}

} // namespace kw::geo
