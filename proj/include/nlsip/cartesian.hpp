#ifndef NLSIP_CARTESIAN_HPP
#define NLSIP_CARTESIAN_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <sstream>
#include <vector>

#include "error.hpp"
#include "params.hpp"

namespace nlsip {

using Index3 = std::array<int, 3>;
using Point3 = std::array<double, 3>;

/// Cell-centred box [-L, L]^3 with n cells per axis; x_i = -L + (i + 1/2) h.
/// With n even the origin is a cell corner and never a node.
class CartesianGrid {
public:
    static constexpr int max_cells = 64;

    static std::shared_ptr<const CartesianGrid> build(const ProblemParams& params, double half_width, int n) {
        validate(params);
        require(params.d == 3, errc::parameter, "the Cartesian grid is three-dimensional");
        require(half_width > 0.0, errc::parameter, "box half-width must be positive");
        require(n >= 8 && n <= max_cells && n % 2 == 0, errc::resolution,
                "cells per axis must be even and within [8, 64]");
        auto g = std::shared_ptr<CartesianGrid>(new CartesianGrid());
        g->params_ = params;
        g->L_ = half_width;
        g->n_ = n;
        g->h_ = 2.0 * half_width / n;
        return g;
    }

    const ProblemParams& params() const { return params_; }
    int cells() const { return n_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }
    double half_width() const { return L_; }
    double spacing() const { return h_; }
    double cell_volume() const { return h_ * h_ * h_; }

    double coordinate(int i) const { return -L_ + (i + 0.5) * h_; }
    Point3 point(const Index3& i) const { return {coordinate(i[0]), coordinate(i[1]), coordinate(i[2])}; }

    std::size_t flat(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    std::size_t flat(const Index3& i) const { return flat(i[0], i[1], i[2]); }
    Index3 unflat(std::size_t f) const {
        const int k = static_cast<int>(f % n_);
        const int j = static_cast<int>((f / n_) % n_);
        const int i = static_cast<int>(f / (static_cast<std::size_t>(n_) * n_));
        return {i, j, k};
    }
    bool inside(const Index3& i) const {
        for (int a : i)
            if (a < 0 || a >= n_) return false;
        return true;
    }

    /// Node closest to the origin from the positive octant.
    Index3 centre() const { return {n_ / 2, n_ / 2, n_ / 2}; }

    /// Physical shift as a whole number of cells; parameter error otherwise.
    Index3 cells_of(const Point3& shift) const {
        Index3 out{};
        for (int a = 0; a < 3; ++a) {
            const double m = shift[a] / h_;
            const double r = std::round(m);
            if (std::abs(m - r) > 1e-9) {
                std::ostringstream os;
                os << "shift component " << shift[a] << " is not a multiple of h = " << h_;
                fail(errc::parameter, os.str());
            }
            out[a] = static_cast<int>(r);
        }
        return out;
    }

private:
    CartesianGrid() = default;
    ProblemParams params_{};
    double L_ = 0.0;
    int n_ = 0;
    double h_ = 0.0;
};

using CartesianGridPtr = std::shared_ptr<const CartesianGrid>;

class CartesianField {
public:
    CartesianField() = default;
    CartesianField(CartesianGridPtr grid, std::vector<std::complex<double>> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        require(grid_ != nullptr, errc::consistency, "field without grid");
        require(values_.size() == grid_->size(), errc::consistency, "sample count does not match n^3");
        for (const auto& v : values_)
            require(std::isfinite(v.real()) && std::isfinite(v.imag()), errc::numerical, "field sample is not finite");
    }

    static CartesianField zeros(CartesianGridPtr grid) {
        std::vector<std::complex<double>> v(grid->size());
        return CartesianField(std::move(grid), std::move(v));
    }

    template <typename F>
    static CartesianField from_function(CartesianGridPtr grid, F&& f) {
        std::vector<std::complex<double>> v(grid->size());
        const int n = grid->cells();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    v[grid->flat(i, j, k)] = std::complex<double>(f(grid->point({i, j, k})));
        return CartesianField(std::move(grid), std::move(v));
    }

    const CartesianGridPtr& grid_ptr() const { return grid_; }
    const CartesianGrid& grid() const { return *grid_; }
    const std::vector<std::complex<double>>& values() const { return values_; }
    std::vector<std::complex<double>>& mutable_values() { return values_; }
    std::size_t size() const { return values_.size(); }
    const std::complex<double>& operator[](std::size_t f) const { return values_[f]; }
    std::complex<double> at(const Index3& i) const { return grid_->inside(i) ? values_[grid_->flat(i)] : 0.0; }

    /// u(· - shift cells); samples leaving the box are dropped, entering ones are 0.
    CartesianField translated(const Index3& shift) const {
        const int n = grid_->cells();
        std::vector<std::complex<double>> v(values_.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    v[grid_->flat(i, j, k)] = at({i - shift[0], j - shift[1], k - shift[2]});
        return CartesianField(grid_, std::move(v));
    }

    /// Mass of u that a translation by `shift` would push out of the box.
    double mass_lost_by(const Index3& shift) const {
        const int n = grid_->cells();
        double lost = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const Index3 to{i + shift[0], j + shift[1], k + shift[2]};
                    if (!grid_->inside(to)) lost += std::norm(values_[grid_->flat(i, j, k)]);
                }
        return lost * grid_->cell_volume();
    }

    CartesianField& operator+=(const CartesianField& o) {
        require(grid_ == o.grid_, errc::consistency, "fields on different grids");
        for (std::size_t f = 0; f < values_.size(); ++f) values_[f] += o.values_[f];
        return *this;
    }
    CartesianField& operator-=(const CartesianField& o) {
        require(grid_ == o.grid_, errc::consistency, "fields on different grids");
        for (std::size_t f = 0; f < values_.size(); ++f) values_[f] -= o.values_[f];
        return *this;
    }
    CartesianField& operator*=(std::complex<double> s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

private:
    CartesianGridPtr grid_;
    std::vector<std::complex<double>> values_;
};

inline CartesianField operator+(CartesianField a, const CartesianField& b) { return a += b; }
inline CartesianField operator-(CartesianField a, const CartesianField& b) { return a -= b; }

namespace cartesian {

inline double lp_integral(const CartesianField& u, double p) {
    double s = 0.0;
    for (const auto& v : u.values()) s += std::pow(std::abs(v), p);
    return s * u.grid().cell_volume();
}

inline double mass(const CartesianField& u) { return lp_integral(u, 2.0); }

/// Energy density Σ_a |u(x + h e_a) - u(x)|² / h² assigned to the lower node,
/// with u = 0 outside the box; summing it gives ∫|∇u|² minus the faces on the
/// lower boundary, which boundary_gradient_sq adds back.
inline std::vector<double> gradient_density(const CartesianField& u) {
    const auto& g = u.grid();
    const int n = g.cells();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> e(u.size(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const auto f = g.flat(i, j, k);
                const auto v = u[f];
                e[f] = (std::norm(u.at({i + 1, j, k}) - v) + std::norm(u.at({i, j + 1, k}) - v) +
                        std::norm(u.at({i, j, k + 1}) - v)) *
                       inv_h2;
            }
    return e;
}

inline double boundary_gradient_sq(const CartesianField& u) {
    const auto& g = u.grid();
    const int n = g.cells();
    double s = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            s += std::norm(u.at({0, a, b})) + std::norm(u.at({a, 0, b})) + std::norm(u.at({a, b, 0}));
    return s / (g.spacing() * g.spacing()) * g.cell_volume();
}

/// ∫|∇u|² by forward differences with homogeneous Dirichlet data.
inline double gradient_sq(const CartesianField& u) {
    double s = 0.0;
    for (double e : gradient_density(u)) s += e;
    return s * u.grid().cell_volume() + boundary_gradient_sq(u);
}

/// Real part of ∫∇u·∇v̄ with the same stencil.
inline double gradient_inner(const CartesianField& u, const CartesianField& v) {
    const auto& g = u.grid();
    const int n = g.cells();
    double s = 0.0;
    for (int i = -1; i < n; ++i)
        for (int j = -1; j < n; ++j)
            for (int k = -1; k < n; ++k) {
                const Index3 x{i, j, k};
                const auto ux = u.at(x);
                const auto vx = v.at(x);
                const Index3 nb[3] = {{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}};
                for (const auto& y : nb) {
                    if (!g.inside(x) && !g.inside(y)) continue;
                    s += std::real((u.at(y) - ux) * std::conj(v.at(y) - vx));
                }
            }
    return s / (g.spacing() * g.spacing()) * g.cell_volume();
}

inline double hardy_integral(const CartesianField& u) {
    const auto& g = u.grid();
    double s = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f) {
        const auto x = g.point(g.unflat(f));
        s += std::norm(u[f]) / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    }
    return s * g.cell_volume();
}

/// ∫|x|^{-2} u v̄.
inline std::complex<double> hardy_inner(const CartesianField& u, const CartesianField& v) {
    const auto& g = u.grid();
    std::complex<double> s = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f) {
        const auto x = g.point(g.unflat(f));
        s += u[f] * std::conj(v[f]) / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    }
    return s * g.cell_volume();
}

inline double h1c_sq(const CartesianField& u, double c) { return gradient_sq(u) - c * hardy_integral(u); }

inline double h1c_sq(const CartesianField& u) { return h1c_sq(u, u.grid().params().c); }

inline double weinstein(const CartesianField& u) {
    const auto& p = u.grid().params();
    const double m = mass(u);
    require(m > 0.0, errc::domain, "Weinstein functional of the zero field");
    const double h = h1c_sq(u);
    require(h > 0.0, errc::singular_functional, "non-positive Ḣ¹_c norm");
    return lp_integral(u, p.critical_exponent()) / (std::pow(m, 2.0 / p.d) * h);
}

} // namespace cartesian

} // namespace nlsip

#endif
