#ifndef NLSIP_RADIAL_FIELD_HPP
#define NLSIP_RADIAL_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "error.hpp"
#include "radial_grid.hpp"

namespace nlsip {

using cplx = std::complex<double>;

/// Behaviour of a field as r -> 0. An indicial field behaves like a r^{-σ};
/// interpolation then works on r^σ u, which stays smooth.
struct BoundaryBehavior {
    enum class Kind { regular, indicial };
    Kind kind = Kind::regular;
    double sigma = 0.0;

    static BoundaryBehavior regular() { return {}; }
    static BoundaryBehavior indicial(double s) { return {Kind::indicial, s}; }
    double exponent() const { return kind == Kind::indicial ? sigma : 0.0; }
};

/// Complex samples of a radial function at the nodes of a RadialGrid.
class RadialField {
public:
    RadialField() = default;

    RadialField(GridPtr grid, std::vector<cplx> values,
                BoundaryBehavior behavior = BoundaryBehavior::regular())
        : grid_(std::move(grid)), values_(std::move(values)), behavior_(behavior) {
        require(grid_ != nullptr, errc::consistency, "field without grid");
        require(values_.size() == grid_->size(), errc::consistency,
                "sample count does not match node count");
        for (const auto& v : values_) {
            require(std::isfinite(v.real()) && std::isfinite(v.imag()), errc::numerical,
                    "field sample is not finite");
        }
    }

    static RadialField zeros(GridPtr grid) {
        std::vector<cplx> v(grid->size(), cplx{});
        return RadialField(std::move(grid), std::move(v));
    }

    template <typename F>
    static RadialField from_function(GridPtr grid, F&& f,
                                     BoundaryBehavior behavior = BoundaryBehavior::regular()) {
        std::vector<cplx> v(grid->size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = cplx(f(grid->node(j)));
        return RadialField(std::move(grid), std::move(v), behavior);
    }

    const GridPtr& grid_ptr() const { return grid_; }
    const RadialGrid& grid() const { return *grid_; }
    const std::vector<cplx>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    const cplx& operator[](std::size_t j) const { return values_[j]; }
    const BoundaryBehavior& behavior() const { return behavior_; }

    RadialField scaled(cplx factor) const {
        std::vector<cplx> v(values_);
        for (auto& x : v) x *= factor;
        return RadialField(grid_, std::move(v), behavior_);
    }

    RadialField with_values(std::vector<cplx> v) const {
        return RadialField(grid_, std::move(v), behavior_);
    }

    RadialField on_grid(GridPtr g) const {
        require(g->same_nodes(*grid_), errc::consistency, "rebinding to a grid with other nodes");
        return RadialField(std::move(g), values_, behavior_);
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Cubic interpolation in the grid's native coordinate of r^σ u(r).
    /// Returns 0 at and beyond r_max (Dirichlet truncation).
    cplx value_at(double r) const {
        const RadialGrid& g = *grid_;
        const std::size_t n = g.size();
        if (r >= g.r_max()) return {};
        const double sigma = behavior_.exponent();
        auto smooth = [&](std::size_t j) {
            return sigma == 0.0 ? values_[j] : values_[j] * std::pow(g.node(j), sigma);
        };
        auto unsmooth = [&](cplx s) { return sigma == 0.0 ? s : s * std::pow(r, -sigma); };

        const double x = (g.coordinate(r) - g.coordinate_origin()) / g.coordinate_step() - 0.5;
        if (x < 0.0) {
            if (g.scheme() == GridScheme::graded) return unsmooth(smooth(0));
            // Radial functions are even in r: mirror nodes 0 and 1 through the origin.
            const double xs[4] = {-2.0, -1.0, 0.0, 1.0};
            const cplx ys[4] = {smooth(1), smooth(0), smooth(0), smooth(1)};
            return unsmooth(lagrange(xs, ys, x));
        }
        const auto base = static_cast<std::ptrdiff_t>(std::floor(x));
        std::ptrdiff_t first = std::clamp<std::ptrdiff_t>(base - 1, 0,
                                                          static_cast<std::ptrdiff_t>(n) - 4);
        double xs[4];
        cplx ys[4];
        for (int k = 0; k < 4; ++k) {
            const auto j = static_cast<std::size_t>(first + k);
            xs[k] = static_cast<double>(j);
            ys[k] = smooth(j);
        }
        return unsmooth(lagrange(xs, ys, x));
    }

private:
    static cplx lagrange(const double (&xs)[4], const cplx (&ys)[4], double x) {
        cplx sum{};
        for (int i = 0; i < 4; ++i) {
            double l = 1.0;
            for (int k = 0; k < 4; ++k) {
                if (k != i) l *= (x - xs[k]) / (xs[i] - xs[k]);
            }
            sum += l * ys[i];
        }
        return sum;
    }

    GridPtr grid_;
    std::vector<cplx> values_;
    BoundaryBehavior behavior_{};
};

/// Samples amplitude * u(scale * r_j) on the target grid.
inline RadialField resample(const RadialField& u, const GridPtr& target, double scale = 1.0,
                            cplx amplitude = 1.0) {
    std::vector<cplx> v(target->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = amplitude * u.value_at(scale * target->node(j));
    return RadialField(target, std::move(v), u.behavior());
}

} // namespace nlsip

#endif
