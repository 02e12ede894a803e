#pragma once

// Constant-coefficient inverse of the discrete operator
//   u -> laplacian(u) + <abar, du> + shift * u
// applied through real FFTs. Used as a right preconditioner for the Krylov
// solver; abar is the mean of the Lee form, so the preconditioner is exact
// whenever the Lee form and the reaction coefficient are constant.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include "kwsolve/grid.hpp"

namespace kw::spectral {

namespace detail {

/// FFTW's planner is not re-entrant.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace detail

/// Symbol of the geometer's Laplacian stencil for angle theta = k h.
inline double laplacian_symbol(double theta, double h) {
    return (30.0 - 32.0 * std::cos(theta) + 2.0 * std::cos(2.0 * theta)) / (12.0 * h * h);
}

/// Imaginary part of the first-derivative stencil symbol.
inline double derivative_symbol(double theta, double h) {
    return (8.0 * std::sin(theta) - std::sin(2.0 * theta)) / (6.0 * h);
}

class Preconditioner {
public:
    /// `project_mean` zeroes the constant mode (singular mean-zero solves).
    /// Otherwise the constant mode is scaled by 1/shift, or left alone when
    /// shift is zero.
    Preconditioner(const GridSpec& spec, std::span<const double> mean_alpha, double shift,
                   bool project_mean)
        : spec_(spec) {
        const std::size_t rank = spec.rank();
        std::vector<int> n(rank);
        for (std::size_t a = 0; a < rank; ++a) n[a] = static_cast<int>(spec.dim(a));
        const std::size_t last_half = spec.dim(rank - 1) / 2 + 1;
        complex_size_ = spec.size() / spec.dim(rank - 1) * last_half;

        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * spec.size()));
        freq_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * complex_size_));
        {
            std::lock_guard<std::mutex> lock(detail::planner_mutex());
            forward_ = fftw_plan_dft_r2c(static_cast<int>(rank), n.data(), real_, freq_, FFTW_ESTIMATE);
            backward_ = fftw_plan_dft_c2r(static_cast<int>(rank), n.data(), freq_, real_,
                                          FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
        }

        // Per-axis symbol tables, then the full inverse symbol.
        std::vector<std::vector<double>> lap(rank), drift(rank);
        std::vector<std::size_t> extent(rank);
        for (std::size_t a = 0; a < rank; ++a) {
            const std::size_t na = spec.dim(a);
            extent[a] = a + 1 == rank ? last_half : na;
            const double h = spec.spacing(a);
            const double abar = a < mean_alpha.size() ? mean_alpha[a] : 0.0;
            for (std::size_t i = 0; i < extent[a]; ++i) {
                const long k = i <= na / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(na);
                const double theta = static_cast<double>(k) * h;
                lap[a].push_back(laplacian_symbol(theta, h));
                drift[a].push_back(abar * derivative_symbol(theta, h));
            }
        }
        const double norm = 1.0 / static_cast<double>(spec.size());
        inverse_.resize(complex_size_);
        std::vector<std::size_t> idx(rank, 0);
        for (std::size_t m = 0; m < complex_size_; ++m) {
            std::size_t rem = m;
            for (std::size_t a = rank; a-- > 0;) {
                idx[a] = rem % extent[a];
                rem /= extent[a];
            }
            double re = shift, im = 0.0;
            bool zero_mode = true;
            for (std::size_t a = 0; a < rank; ++a) {
                re += lap[a][idx[a]];
                im += drift[a][idx[a]];
                zero_mode = zero_mode && idx[a] == 0;
            }
            std::complex<double> inv;
            if (zero_mode) {
                inv = project_mean ? 0.0 : (shift != 0.0 ? 1.0 / shift : 1.0);
            } else {
                inv = 1.0 / std::complex<double>(re, im);
            }
            inverse_[m] = inv * norm;
        }
    }

    Preconditioner(const Preconditioner&) = delete;
    Preconditioner& operator=(const Preconditioner&) = delete;

    ~Preconditioner() {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(real_);
        fftw_free(freq_);
    }

    /// out = M^{-1} in. `in` and `out` may alias.
    void apply(std::span<const double> in, std::span<double> out) {
        std::copy(in.begin(), in.end(), real_);
        fftw_execute(forward_);
        for (std::size_t m = 0; m < complex_size_; ++m) {
            const std::complex<double> v(freq_[m][0], freq_[m][1]);
            const std::complex<double> r = v * inverse_[m];
            freq_[m][0] = r.real();
            freq_[m][1] = r.imag();
        }
        fftw_execute(backward_);
        std::copy(real_, real_ + spec_.size(), out.begin());
    }

private:
    GridSpec spec_;
    std::size_t complex_size_ = 0;
    double* real_ = nullptr;
    fftw_complex* freq_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
    std::vector<std::complex<double>> inverse_;
};

} // namespace kw::spectral
