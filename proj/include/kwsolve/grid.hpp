#pragma once

// Periodic sampling lattice on [0, 2pi)^rank and the field containers
// built on top of it.
//
// Values are stored row-major with the last axis fastest. All integrals in the
// library use the normalized measure (total volume 1), so the integral of a
// field is its arithmetic mean.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kwsolve/error.hpp"

namespace kw {

inline constexpr std::size_t max_rank = 4;
inline constexpr std::size_t min_points_per_axis = 8;

using MultiIndex = std::array<std::size_t, max_rank>;

class GridSpec {
public:
    GridSpec() = default;

    /// Throws PreconditionError unless 1 <= rank <= 4 and every N_i >= 8 is even.
    explicit GridSpec(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty() || dims_.size() > max_rank) {
            throw PreconditionError("grid rank must be between 1 and 4, got " +
                                    std::to_string(dims_.size()));
        }
        size_ = 1;
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            const std::size_t n = dims_[a];
            if (n < min_points_per_axis) {
                throw PreconditionError("axis " + std::to_string(a) + " has " +
                                        std::to_string(n) + " points; at least 8 required");
            }
            if (n % 2 != 0) {
                throw PreconditionError("axis " + std::to_string(a) + " has odd size " +
                                        std::to_string(n));
            }
            size_ *= n;
        }
        strides_.assign(dims_.size(), 1);
        for (std::size_t a = dims_.size() - 1; a > 0; --a) {
            strides_[a - 1] = strides_[a] * dims_[a];
        }
    }

    /// Same point count on every axis.
    static GridSpec uniform(std::size_t rank, std::size_t n) {
        return GridSpec(std::vector<std::size_t>(rank, n));
    }

    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return size_; }
    std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    std::size_t stride(std::size_t axis) const { return strides_.at(axis); }
    std::span<const std::size_t> dims() const noexcept { return dims_; }

    double spacing(std::size_t axis) const {
        return 2.0 * std::numbers::pi / static_cast<double>(dims_.at(axis));
    }

    double coordinate(std::size_t axis, std::size_t j) const {
        return static_cast<double>(j) * spacing(axis);
    }

    MultiIndex unravel(std::size_t flat) const {
        MultiIndex idx{};
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            idx[a] = (flat / strides_[a]) % dims_[a];
        }
        return idx;
    }

    std::size_t ravel(const MultiIndex& idx) const {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            flat += idx[a] * strides_[a];
        }
        return flat;
    }

    /// Coordinates of a point, as "(x0, x1, ...)".
    std::string describe_point(std::size_t flat) const {
        const MultiIndex idx = unravel(flat);
        std::string out = "(";
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            if (a) out += ", ";
            out += std::to_string(coordinate(a, idx[a]));
        }
        return out + ")";
    }

    std::string describe() const {
        std::string out;
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            if (a) out += "x";
            out += std::to_string(dims_[a]);
        }
        return out;
    }

    bool valid() const noexcept { return !dims_.empty(); }

    friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.dims_ == b.dims_; }

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

inline void require_same_spec(const GridSpec& a, const GridSpec& b, const char* context) {
    if (!(a == b)) {
        throw PreconditionError(std::string(context) + ": grid mismatch (" + a.describe() +
                                " vs " + b.describe() + ")");
    }
}

/// Real value per grid point.
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(GridSpec spec, double fill)
        : spec_(std::move(spec)), values_(spec_.size(), fill) {
        if (!spec_.valid()) throw PreconditionError("field needs a valid grid");
    }

    ScalarField(GridSpec spec, std::vector<double> values)
        : spec_(std::move(spec)), values_(std::move(values)) {
        if (!spec_.valid()) throw PreconditionError("field needs a valid grid");
        if (values_.size() != spec_.size()) {
            throw PreconditionError("field has " + std::to_string(values_.size()) +
                                    " values, grid " + spec_.describe() + " needs " +
                                    std::to_string(spec_.size()));
        }
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    /// Throws PreconditionError naming the first non-finite point.
    void require_finite(const char* context) const {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw PreconditionError(std::string(context) + ": non-finite value at " +
                                        spec_.describe_point(i));
            }
        }
    }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_spec(spec_, o.spec_, "field +=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require_same_spec(spec_, o.spec_, "field -=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    ScalarField& operator+=(double s) {
        for (double& v : values_) v += s;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
    friend ScalarField operator+(ScalarField a, double s) { return a += s; }
    friend ScalarField operator-(ScalarField a) { return a *= -1.0; }

private:
    GridSpec spec_;
    std::vector<double> values_;
};

inline ScalarField make_field(const GridSpec& spec, double fill) { return ScalarField(spec, fill); }

inline ScalarField make_field(const std::vector<std::size_t>& dims, double fill) {
    return ScalarField(GridSpec(dims), fill);
}

/// Samples `fn(x)` at every grid point; x holds the point's coordinates.
template <typename Fn>
ScalarField sample(const GridSpec& spec, Fn&& fn) {
    std::vector<double> values(spec.size());
    std::array<double, max_rank> x{};
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const MultiIndex idx = spec.unravel(i);
        for (std::size_t a = 0; a < spec.rank(); ++a) x[a] = spec.coordinate(a, idx[a]);
        values[i] = fn(std::span<const double>(x.data(), spec.rank()));
    }
    return ScalarField(spec, std::move(values));
}

/// Pointwise map.
template <typename Fn>
ScalarField map(const ScalarField& f, Fn&& fn) {
    ScalarField out = f;
    for (double& v : out.values()) v = fn(v);
    return out;
}

/// Pointwise binary map over two fields on the same grid.
template <typename Fn>
ScalarField zip(const ScalarField& a, const ScalarField& b, Fn&& fn) {
    require_same_spec(a.spec(), b.spec(), "zip");
    ScalarField out = a;
    auto dst = out.values();
    auto rhs = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = fn(dst[i], rhs[i]);
    return out;
}

inline ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
    return zip(a, b, [](double x, double y) { return x * y; });
}

inline ScalarField exp_field(const ScalarField& f) {
    return map(f, [](double v) { return std::exp(v); });
}

/// Covector field in flat orthonormal coordinates, one component per axis.
class OneForm {
public:
    OneForm() = default;

    explicit OneForm(std::vector<ScalarField> components)
        : components_(std::move(components)) {
        if (components_.empty()) throw PreconditionError("one-form needs components");
        spec_ = components_.front().spec();
        if (components_.size() != spec_.rank()) {
            throw PreconditionError("one-form has " + std::to_string(components_.size()) +
                                    " components on a rank-" + std::to_string(spec_.rank()) +
                                    " grid");
        }
        for (const auto& c : components_) require_same_spec(spec_, c.spec(), "one-form");
    }

    static OneForm zero(const GridSpec& spec) {
        return OneForm(std::vector<ScalarField>(spec.rank(), ScalarField(spec, 0.0)));
    }

    /// Constant covector; missing trailing components are zero.
    static OneForm constant(const GridSpec& spec, std::span<const double> values) {
        std::vector<ScalarField> comps;
        for (std::size_t a = 0; a < spec.rank(); ++a) {
            comps.emplace_back(spec, a < values.size() ? values[a] : 0.0);
        }
        return OneForm(std::move(comps));
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::size_t rank() const noexcept { return components_.size(); }
    const ScalarField& operator[](std::size_t axis) const { return components_.at(axis); }
    std::span<const ScalarField> components() const noexcept { return components_; }

    bool is_zero() const {
        return std::all_of(components_.begin(), components_.end(),
                           [](const ScalarField& c) { return c.sup_norm() == 0.0; });
    }

    /// Set only through ops::validate_gauduchon.
    bool gauduchon_validated() const noexcept { return gauduchon_validated_; }
    void mark_gauduchon(bool ok) noexcept { gauduchon_validated_ = ok; }

private:
    GridSpec spec_;
    std::vector<ScalarField> components_;
    bool gauduchon_validated_ = false;
};

} // namespace kw
