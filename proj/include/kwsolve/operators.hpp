#pragma once

// Fourth-order periodic finite-difference operators.
//
// Sign convention: `laplacian` is the Hodge Laplacian on functions,
// Delta_d f = -sum_i d^2 f / dx_i^2, so its spectrum is nonnegative and its
// kernel is the constants. Both centered stencils are skew/self-adjoint on the
// periodic lattice, which makes the discrete identity
// mean(<alpha, df>) = -mean(f * div alpha) hold to rounding.

#include <cmath>
#include <cstddef>
#include <vector>

#include "kwsolve/grid.hpp"

namespace kw::ops {

namespace detail {

/// Calls fn(base, jm2, jm1, j, jp1, jp2, inner) for every line along `axis`.
/// `base` is the offset of the line's first point, the j-offsets are already
/// multiplied by the axis stride, and `inner` is the number of contiguous
/// lines sharing those offsets.
template <typename Fn>
void for_each_stencil(const GridSpec& spec, std::size_t axis, Fn&& fn) {
    const std::size_t n = spec.dim(axis);
    const std::size_t inner = spec.stride(axis);
    const std::size_t outer = spec.size() / (n * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const std::size_t base = o * n * inner;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jm2 = ((j + n - 2) % n) * inner;
            const std::size_t jm1 = ((j + n - 1) % n) * inner;
            const std::size_t jp1 = ((j + 1) % n) * inner;
            const std::size_t jp2 = ((j + 2) % n) * inner;
            fn(base, jm2, jm1, j * inner, jp1, jp2, inner);
        }
    }
}

/// out += scale * d^2 f / dx_axis^2
inline void add_second_derivative(const GridSpec& spec, std::size_t axis, const double* f,
                                  double* out, double scale) {
    const double h = spec.spacing(axis);
    const double c = scale / (12.0 * h * h);
    for_each_stencil(spec, axis, [&](std::size_t base, std::size_t m2, std::size_t m1, std::size_t j0,
                                     std::size_t p1, std::size_t p2, std::size_t inner) {
        const double* fm2 = f + base + m2;
        const double* fm1 = f + base + m1;
        const double* f0 = f + base + j0;
        const double* fp1 = f + base + p1;
        const double* fp2 = f + base + p2;
        double* o = out + base + j0;
        for (std::size_t i = 0; i < inner; ++i) {
            // Written in differences so constants cancel exactly.
            const double z = f0[i];
            o[i] += c * (16.0 * ((fm1[i] - z) + (fp1[i] - z)) - ((fm2[i] - z) + (fp2[i] - z)));
        }
    });
}

/// out += weight * d f / dx_axis, with weight a field (pointer) or scalar.
inline void add_first_derivative(const GridSpec& spec, std::size_t axis, const double* f,
                                 double* out, const double* weight, double scale) {
    const double c = scale / (12.0 * spec.spacing(axis));
    for_each_stencil(spec, axis, [&](std::size_t base, std::size_t m2, std::size_t m1, std::size_t j0,
                                     std::size_t p1, std::size_t p2, std::size_t inner) {
        const double* fm2 = f + base + m2;
        const double* fm1 = f + base + m1;
        const double* fp1 = f + base + p1;
        const double* fp2 = f + base + p2;
        double* o = out + base + j0;
        if (weight) {
            const double* w = weight + base + j0;
            for (std::size_t i = 0; i < inner; ++i) {
                o[i] += c * w[i] * (8.0 * (fp1[i] - fm1[i]) - (fp2[i] - fm2[i]));
            }
        } else {
            for (std::size_t i = 0; i < inner; ++i) {
                o[i] += c * (8.0 * (fp1[i] - fm1[i]) - (fp2[i] - fm2[i]));
            }
        }
    });
}

} // namespace detail

/// Hodge Laplacian, geometer's sign: -sum_i d^2/dx_i^2.
inline ScalarField laplacian(const ScalarField& f) {
    ScalarField out(f.spec(), 0.0);
    for (std::size_t a = 0; a < f.spec().rank(); ++a) {
        detail::add_second_derivative(f.spec(), a, f.values().data(), out.values().data(), -1.0);
    }
    return out;
}

inline ScalarField partial(const ScalarField& f, std::size_t axis) {
    ScalarField out(f.spec(), 0.0);
    detail::add_first_derivative(f.spec(), axis, f.values().data(), out.values().data(), nullptr, 1.0);
    return out;
}

/// <alpha, df> = sum_i alpha_i d_i f.
inline ScalarField lee_pairing(const OneForm& alpha, const ScalarField& f) {
    require_same_spec(alpha.spec(), f.spec(), "lee_pairing");
    ScalarField out(f.spec(), 0.0);
    for (std::size_t a = 0; a < f.spec().rank(); ++a) {
        detail::add_first_derivative(f.spec(), a, f.values().data(), out.values().data(),
                                     alpha[a].values().data(), 1.0);
    }
    return out;
}

/// sum_i d_i alpha_i (the codifferential up to sign).
inline ScalarField divergence(const OneForm& alpha) {
    ScalarField out(alpha.spec(), 0.0);
    for (std::size_t a = 0; a < alpha.rank(); ++a) {
        detail::add_first_derivative(alpha.spec(), a, alpha[a].values().data(), out.values().data(),
                                     nullptr, 1.0);
    }
    return out;
}

/// |df|^2 = sum_i (d_i f)^2.
inline ScalarField gradient_squared(const ScalarField& f) {
    ScalarField out(f.spec(), 0.0);
    for (std::size_t a = 0; a < f.spec().rank(); ++a) {
        const ScalarField d = partial(f, a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i] * d[i];
    }
    return out;
}

/// Chern Laplacian: laplacian(f) + <alpha, df>.
inline ScalarField chern_laplacian(const OneForm& alpha, const ScalarField& f) {
    require_same_spec(alpha.spec(), f.spec(), "chern_laplacian");
    ScalarField out = laplacian(f);
    for (std::size_t a = 0; a < f.spec().rank(); ++a) {
        detail::add_first_derivative(f.spec(), a, f.values().data(), out.values().data(),
                                     alpha[a].values().data(), 1.0);
    }
    return out;
}

/// Compensated sum; fixed order, so results are reproducible.
inline double sum(std::span<const double> v) {
    double s = 0.0, comp = 0.0;
    for (double x : v) {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x)) comp += (s - t) + x;
        else comp += (x - t) + s;
        s = t;
    }
    return s + comp;
}

/// Integral against the unit-volume measure.
inline double mean(const ScalarField& f) {
    return sum(f.values()) / static_cast<double>(f.size());
}

inline ScalarField subtract_mean(ScalarField f) {
    const double m = mean(f);
    for (double& v : f.values()) v -= m;
    return f;
}

/// Discrete L^p norm on the unit-volume measure: mean(|f|^p)^(1/p).
inline double lp_norm(const ScalarField& f, double p) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    if (m == 0.0) return 0.0;
    std::vector<double> pw(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) pw[i] = std::pow(std::abs(f[i]) / m, p);
    return m * std::pow(sum(pw) / static_cast<double>(f.size()), 1.0 / p);
}

/// Root-mean-square norm (L^2 on the unit-volume measure).
inline double rms(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// sup_x |grad f|.
inline double gradient_sup(const ScalarField& f) {
    const ScalarField g2 = gradient_squared(f);
    return std::sqrt(g2.max());
}

/// Sup-norm of the discrete divergence; marks alpha as Gauduchon when it is
/// below `tol`.
inline double validate_gauduchon(OneForm& alpha, double tol) {
    const double div = divergence(alpha).sup_norm();
    alpha.mark_gauduchon(div <= tol);
    return div;
}

/// Divergence-free one-form from a stream function psi on axes (a, b):
/// alpha_a = d_b psi, alpha_b = -d_a psi, other components zero. The
/// discrete divergence vanishes to rounding since the stencils commute.
inline OneForm stream_one_form(const ScalarField& psi, std::size_t a, std::size_t b) {
    const GridSpec& spec = psi.spec();
    if (a >= spec.rank() || b >= spec.rank() || a == b) {
        throw PreconditionError("stream_one_form needs two distinct axes below the rank");
    }
    std::vector<ScalarField> comps(spec.rank(), ScalarField(spec, 0.0));
    comps[a] = partial(psi, b);
    comps[b] = -partial(psi, a);
    return OneForm(std::move(comps));
}

} // namespace kw::ops
