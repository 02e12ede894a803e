#pragma once

// Matrix-free linear elliptic solves for
//
//     L u = laplacian(u) + <alpha, du> + mu u  (+ q u for a variable reaction)
//
// in three flavours: the singular mean-zero problem (mu = 0, kernel = the
// constants when alpha is divergence-free), the coercive shifted problem
// (mu > 0) and a variable-coefficient problem used by the Newton and
// fixed-point iterations. All of them run restarted GMRES with an FFT
// preconditioner built from the constant part of the operator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kwsolve/error.hpp"
#include "kwsolve/grid.hpp"
#include "kwsolve/krylov.hpp"
#include "kwsolve/operators.hpp"
#include "kwsolve/random_fields.hpp"
#include "kwsolve/spectral.hpp"

namespace kw::lin {

struct LinearOptions {
    double tol = 1e-10;
    int max_iter = 20000;
    int restart = 50;
    bool precondition = true;
};

struct SolveStats {
    int iterations = 0;
    double residual_sup = 0.0;
    double residual_rms = 0.0;
    bool converged = false;
};

struct LinearSolution {
    ScalarField u;
    SolveStats stats;
};

/// u -> laplacian(u) + <alpha, du> + shift u.
struct LinearOperatorSpec {
    OneForm alpha;
    double shift = 0.0;

    bool singular() const { return shift == 0.0; }
};

namespace detail {

inline void apply_operator(const OneForm& alpha, double shift, const ScalarField* reaction,
                           std::span<const double> in, std::span<double> out) {
    const GridSpec& spec = alpha.spec();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = shift * in[i];
    if (reaction) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] += (*reaction)[i] * in[i];
    }
    for (std::size_t a = 0; a < spec.rank(); ++a) {
        ops::detail::add_second_derivative(spec, a, in.data(), out.data(), -1.0);
        ops::detail::add_first_derivative(spec, a, in.data(), out.data(), alpha[a].values().data(), 1.0);
    }
}

inline std::vector<double> mean_alpha(const OneForm& alpha) {
    std::vector<double> m(alpha.rank());
    for (std::size_t a = 0; a < alpha.rank(); ++a) m[a] = ops::mean(alpha[a]);
    return m;
}

inline void remove_mean(std::span<double> v) {
    const double m = ops::sum(v) / static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

struct SystemSpec {
    const OneForm& alpha;
    double shift;
    const ScalarField* reaction;
    double precond_shift;
    bool project_mean;
};

inline LinearSolution run(const SystemSpec& sys, const ScalarField& f, const LinearOptions& opts,
                          const ScalarField* guess) {
    const GridSpec& spec = f.spec();
    ScalarField u = guess ? *guess : ScalarField(spec, 0.0);
    if (guess) require_same_spec(spec, guess->spec(), "linear solve guess");
    ScalarField rhs = f;
    if (sys.project_mean) {
        detail::remove_mean(rhs.values());
        detail::remove_mean(u.values());
    }

    std::optional<spectral::Preconditioner> precond;
    if (opts.precondition) {
        const auto abar = mean_alpha(sys.alpha);
        precond.emplace(spec, abar, sys.precond_shift, sys.project_mean);
    }

    auto apply_a = [&](std::span<const double> in, std::span<double> out) {
        apply_operator(sys.alpha, sys.shift, sys.reaction, in, out);
    };
    auto apply_m = [&](std::span<const double> in, std::span<double> out) {
        if (precond) precond->apply(in, out);
        else std::copy(in.begin(), in.end(), out.begin());
    };
    auto project = [&](std::span<double> v) {
        if (sys.project_mean) remove_mean(v);
    };

    krylov::Options kopts{opts.tol, opts.max_iter, opts.restart};
    const auto r = krylov::gmres(apply_a, apply_m, project, rhs.values(), u.values(), kopts);
    SolveStats stats{r.iterations, r.residual_sup, r.residual_rms, r.converged};
    return {std::move(u), stats};
}

inline void require_converged(const LinearSolution& s, const char* what) {
    if (!s.stats.converged) {
        throw SolverError(std::string(what) + ": Krylov solve did not converge after " +
                          std::to_string(s.stats.iterations) + " iterations (residual " +
                          std::to_string(s.stats.residual_sup) + ")");
    }
}

} // namespace detail

inline ScalarField apply(const LinearOperatorSpec& op, const ScalarField& u) {
    require_same_spec(op.alpha.spec(), u.spec(), "apply");
    ScalarField out(u.spec(), 0.0);
    detail::apply_operator(op.alpha, op.shift, nullptr, u.values(), out.values());
    return out;
}

/// Mean-zero g with laplacian(g) + <alpha, dg> = f. Requires mean(f) = 0.
inline LinearSolution solve_meanzero(const OneForm& alpha, const ScalarField& f,
                                     const LinearOptions& opts = {}) {
    require_same_spec(alpha.spec(), f.spec(), "solve_meanzero");
    const double m = ops::mean(f);
    if (std::abs(m) > 1e-10 * std::max(1.0, f.sup_norm())) {
        throw PreconditionError("solvability violated: right-hand side has mean " + std::to_string(m));
    }
    if (f.sup_norm() == 0.0) return {ScalarField(f.spec(), 0.0), SolveStats{0, 0.0, 0.0, true}};
    auto sol = detail::run({alpha, 0.0, nullptr, 0.0, true}, f, opts, nullptr);
    detail::require_converged(sol, "solve_meanzero");
    return sol;
}

/// Unique u with laplacian(u) + <alpha, du> + mu u = f, for mu > 0.
inline LinearSolution solve_shifted(const OneForm& alpha, double mu, const ScalarField& f,
                                    const LinearOptions& opts = {},
                                    const ScalarField* guess = nullptr) {
    require_same_spec(alpha.spec(), f.spec(), "solve_shifted");
    if (!(mu > 0.0)) throw PreconditionError("solve_shifted needs mu > 0, got " + std::to_string(mu));
    auto sol = detail::run({alpha, mu, nullptr, mu, false}, f, opts, guess);
    detail::require_converged(sol, "solve_shifted");
    return sol;
}

/// laplacian(u) + <alpha, du> + q u = f with a variable reaction coefficient q.
/// The caller is responsible for the operator being invertible.
inline LinearSolution solve_reaction(const OneForm& alpha, const ScalarField& q, const ScalarField& f,
                                     const LinearOptions& opts = {},
                                     const ScalarField* guess = nullptr) {
    require_same_spec(alpha.spec(), f.spec(), "solve_reaction");
    require_same_spec(q.spec(), f.spec(), "solve_reaction");
    double pshift = std::abs(ops::mean(q));
    if (pshift < 1e-12) {
        double m = 0.0;
        for (double v : q.values()) m += std::abs(v);
        pshift = m / static_cast<double>(q.size());
    }
    auto sol = detail::run({alpha, 0.0, &q, pshift, false}, f, opts, guess);
    detail::require_converged(sol, "solve_reaction");
    return sol;
}

/// (||u||_inf + ||grad u||_inf) / ||f||_p for L u = f, L = Delta + <alpha,d.> - c.
/// Returns nullopt for a zero probe.
inline std::optional<double> gamma_ratio(const OneForm& alpha, double c, double p, const ScalarField& probe,
                                         const LinearOptions& opts = {}) {
    const double denom = ops::lp_norm(probe, p);
    if (denom == 0.0) return std::nullopt;
    const auto sol = solve_shifted(alpha, -c, probe, opts);
    return (sol.u.sup_norm() + ops::gradient_sup(sol.u)) / denom;
}

inline constexpr double gamma_safety_factor = 2.0;

/**
 * Heuristic estimate of the a-priori constant gamma in
 * ||u||_inf + ||grad u||_inf <= gamma ||L u||_p, from explicit probes.
 *
 * This is a sampled lower bound on the true constant, inflated by a safety
 * factor of 2; it is not a certified bound. Zero probes are skipped.
 */
inline double estimate_gamma_from_probes(const OneForm& alpha, double c, double p,
                                         std::span<const ScalarField> probes,
                                         const LinearOptions& opts = {}) {
    if (!(c < 0.0)) throw PreconditionError("estimate_gamma needs c < 0");
    double best = 0.0;
    for (const auto& f : probes) {
        if (auto r = gamma_ratio(alpha, c, p, f, opts)) best = std::max(best, *r);
    }
    return gamma_safety_factor * best;
}

/// Heuristic gamma estimate from the constant probe plus `samples - 1`
/// random band-limited fields drawn from `seed`.
inline double estimate_gamma(const OneForm& alpha, double c, double p, int samples,
                             std::uint64_t seed = 1, const LinearOptions& opts = {}) {
    if (samples < 1) throw PreconditionError("estimate_gamma needs at least one sample");
    if (!(p > static_cast<double>(alpha.spec().rank()))) {
        throw PreconditionError("estimate_gamma needs p > rank");
    }
    std::mt19937_64 rng(seed);
    std::vector<ScalarField> probes;
    probes.emplace_back(alpha.spec(), 1.0);
    for (int k = 1; k < samples; ++k) probes.push_back(random_smooth_field(alpha.spec(), rng));
    return estimate_gamma_from_probes(alpha, c, p, probes, opts);
}

} // namespace kw::lin
