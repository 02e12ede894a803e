#pragma once

// Restarted GMRES with right preconditioning, matrix-free.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace kw::krylov {

struct Options {
    double tol = 1e-10;     ///< converged when sup|b - Ax| <= tol * (1 + sup|b|)
    int max_iter = 20000;   ///< total inner iterations over all restarts
    int restart = 50;
};

struct Result {
    int iterations = 0;
    double residual_sup = 0.0;
    double residual_rms = 0.0;
    bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sup(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

} // namespace detail

/**
 * Solves A x = b. `x` holds the initial guess on entry.
 *
 * `apply_a(in, out)` and `apply_m(in, out)` compute out = A in and
 * out = M^{-1} in. `project(v)` is applied to every residual, Krylov vector
 * and correction; pass a no-op for nonsingular systems, or a mean-removal for
 * systems whose kernel is the constants.
 */
template <typename ApplyA, typename ApplyM, typename Project>
Result gmres(ApplyA&& apply_a, ApplyM&& apply_m, Project&& project, std::span<const double> b,
             std::span<double> x, const Options& opts) {
    const std::size_t n = b.size();
    const int m = std::max(1, opts.restart);
    const double target_sup = opts.tol * (1.0 + detail::sup(b));
    // The Arnoldi estimate is a 2-norm; aim below the sup target.
    const double target_2 = 0.25 * target_sup * std::sqrt(static_cast<double>(n));

    Result res;
    std::vector<double> r(n), w(n), z(n);
    std::vector<std::vector<double>> basis;
    std::vector<double> h(static_cast<std::size_t>((m + 1) * m));
    std::vector<double> cs(m), sn(m), g(m + 1), y(m);
    auto H = [&](int i, int j) -> double& { return h[static_cast<std::size_t>(i * m + j)]; };

    auto true_residual = [&]() {
        apply_a(std::span<const double>(x), std::span<double>(w));
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
        project(std::span<double>(r));
    };

    true_residual();
    for (;;) {
        res.residual_sup = detail::sup(r);
        res.residual_rms = std::sqrt(detail::dot(r, r) / static_cast<double>(n));
        if (res.residual_sup <= target_sup) {
            res.converged = true;
            return res;
        }
        if (res.iterations >= opts.max_iter) return res;

        const double beta = std::sqrt(detail::dot(r, r));
        basis.resize(1);
        basis[0].assign(r.begin(), r.end());
        for (double& v : basis[0]) v /= beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int k = 0;
        for (; k < m && res.iterations < opts.max_iter; ++k) {
            ++res.iterations;
            apply_m(std::span<const double>(basis[k]), std::span<double>(z));
            project(std::span<double>(z));
            apply_a(std::span<const double>(z), std::span<double>(w));
            project(std::span<double>(w));
            for (int i = 0; i <= k; ++i) {
                const double hij = detail::dot(w, basis[i]);
                H(i, k) = hij;
                for (std::size_t t = 0; t < n; ++t) w[t] -= hij * basis[i][t];
            }
            const double hnext = std::sqrt(detail::dot(w, w));

            // H(k+1, k) = hnext is eliminated below and never stored.
            for (int i = 0; i < k; ++i) {
                const double upper = H(i, k), lower = H(i + 1, k);
                H(i, k) = cs[i] * upper + sn[i] * lower;
                H(i + 1, k) = -sn[i] * upper + cs[i] * lower;
            }
            const double a = H(k, k);
            const double denom = std::hypot(a, hnext);
            cs[k] = denom == 0.0 ? 1.0 : a / denom;
            sn[k] = denom == 0.0 ? 0.0 : hnext / denom;
            H(k, k) = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];

            const bool breakdown = hnext <= 1e-300;
            if (!breakdown) {
                basis.emplace_back(w);
                for (double& v : basis.back()) v /= hnext;
            }
            if (std::abs(g[k + 1]) <= target_2 || breakdown) {
                ++k;
                break;
            }
        }

        // Back substitution, then x += M^{-1} (V y).
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
            y[i] = H(i, i) == 0.0 ? 0.0 : s / H(i, i);
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int j = 0; j < k; ++j) {
            for (std::size_t t = 0; t < n; ++t) w[t] += y[j] * basis[j][t];
        }
        apply_m(std::span<const double>(w), std::span<double>(z));
        project(std::span<double>(z));
        for (std::size_t t = 0; t < n; ++t) x[t] += z[t];
        true_residual();
    }
}

} // namespace kw::krylov
