#ifndef NLSIP_RADIAL_GRID_HPP
#define NLSIP_RADIAL_GRID_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "params.hpp"

namespace nlsip {

enum class GridScheme {
    uniform_shifted, ///< r_j = (j + 1/2) h, h = r_max / n
    graded           ///< geometric cells between r_min and r_max
};

inline std::string_view to_string(GridScheme s) {
    return s == GridScheme::uniform_shifted ? "uniform-shifted" : "graded";
}

inline GridScheme parse_scheme(std::string_view name) {
    if (name == "uniform-shifted") return GridScheme::uniform_shifted;
    if (name == "graded") return GridScheme::graded;
    fail(errc::parameter, "unknown grid scheme '" + std::string(name) + "'");
}

/// Cell-centred radial grid on (0, r_max]. The origin is never a node.
///
/// Nodes are the centres of n cells whose faces are f_0 < f_1 < ... < f_n = r_max.
/// For the uniform scheme f_0 = 0; for the graded scheme f_0 = r_min and the
/// cells are geometric, so nodes are uniformly spaced in log r and a dilation by
/// the cell ratio is an exact index shift.
///
/// The discrete radial operator is the flux form
///   (L u)_j = [F_{j+1}(u_{j+1} - u_j) - F_j(u_j - u_{j-1})] / w_j
/// with zero flux through f_0 and u = 0 at r_max. It is symmetric in the
/// weighted inner product sum_j w_j conj(u_j) v_j and -<u, L u> equals the
/// discrete gradient energy exactly.
///
/// Near the origin fields follow the Friedrichs branch u ~ a r^{-σ}. The part
/// of ∫|∇u|^2 and ∫|x|^{-2}|u|^2 that the cells miss (the ball r < f_0 and
/// the singular part of the first cell) is closed by κσ²|u_0|^2 and κ|u_0|^2,
/// with κ fixed by requiring exactness on r^{-σ} (see core_closure).
class RadialGrid {
public:
    static constexpr std::size_t min_nodes = 16;

    static std::shared_ptr<const RadialGrid> build(const ProblemParams& params, double r_max,
                                                   std::size_t n, GridScheme scheme,
                                                   std::optional<double> r_min = std::nullopt) {
        validate(params);
        require(std::isfinite(r_max) && r_max > 0.0, errc::parameter, "r_max must be positive");
        if (n < min_nodes) {
            std::ostringstream os;
            os << "n = " << n << " is below the minimum of " << min_nodes << " nodes";
            fail(errc::resolution, os.str());
        }
        auto g = std::shared_ptr<RadialGrid>(new RadialGrid());
        g->params_ = params;
        g->scheme_ = scheme;
        g->r_max_ = r_max;
        g->faces_.resize(n + 1);
        g->nodes_.resize(n);
        if (scheme == GridScheme::uniform_shifted) {
            const double h = r_max / static_cast<double>(n);
            g->r_min_ = 0.0;
            g->coord_origin_ = 0.0;
            g->coord_step_ = h;
            for (std::size_t k = 0; k <= n; ++k) g->faces_[k] = h * static_cast<double>(k);
            for (std::size_t j = 0; j < n; ++j) g->nodes_[j] = h * (static_cast<double>(j) + 0.5);
            g->faces_[n] = r_max;
        } else {
            const double inner = r_min.value_or(r_max * default_graded_ratio);
            require(inner > 0.0 && inner < r_max, errc::parameter,
                    "graded grid needs 0 < r_min < r_max");
            const double log_min = std::log(inner);
            const double step = (std::log(r_max) - log_min) / static_cast<double>(n);
            g->r_min_ = inner;
            g->coord_origin_ = log_min;
            g->coord_step_ = step;
            for (std::size_t k = 0; k <= n; ++k)
                g->faces_[k] = std::exp(log_min + step * static_cast<double>(k));
            for (std::size_t j = 0; j < n; ++j)
                g->nodes_[j] = std::exp(log_min + step * (static_cast<double>(j) + 0.5));
            g->faces_[0] = inner;
            g->faces_[n] = r_max;
        }
        g->finish();
        return g;
    }

    /// Graded grids default to r_min = r_max * 1e-6.
    static constexpr double default_graded_ratio = 1e-6;

    const ProblemParams& params() const { return params_; }
    int dimension() const { return params_.d; }
    GridScheme scheme() const { return scheme_; }
    std::size_t size() const { return nodes_.size(); }
    double r_max() const { return r_max_; }
    /// Inner face radius (0 for the uniform scheme).
    double r_min() const { return r_min_; }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& faces() const { return faces_; }
    /// Cell widths Δ_j = f_{j+1} - f_j.
    const std::vector<double>& widths() const { return widths_; }
    /// Quadrature weights |S^{d-1}| r_j^{d-1} Δ_j. On graded grids node 0 also
    /// carries the ball r < r_min.
    const std::vector<double>& weights() const { return weights_; }
    /// Flux coefficients F_k, k = 0..n; F_0 = 0 and F_n couples the last node to r_max.
    const std::vector<double>& flux() const { return flux_; }

    double node(std::size_t j) const { return nodes_[j]; }
    double weight(std::size_t j) const { return weights_[j]; }

    /// Core closure κ for the first node.
    double core_coefficient() const { return core_; }
    double core_sigma() const { return core_sigma_; }

    /// Smallest distance between consecutive nodes.
    double h_min() const { return nodes_.size() > 1 ? nodes_[1] - nodes_[0] : r_max_; }

    /// Native coordinate in which nodes are equispaced: r (uniform) or ln r (graded).
    double coordinate(double r) const {
        return scheme_ == GridScheme::uniform_shifted ? r : std::log(r);
    }
    double coordinate_origin() const { return coord_origin_; }
    double coordinate_step() const { return coord_step_; }

    /// Ratio between consecutive nodes (graded only).
    double spacing_ratio() const { return std::exp(coord_step_); }

    /// Volume of the ball of radius r_max.
    double ball_volume() const {
        return sphere_area(params_.d) * std::pow(r_max_, params_.d) / params_.d;
    }

    /// Same nodes, different coupling. Used when a computation needs the
    /// c = 0 functionals of a field that lives on a c != 0 grid.
    std::shared_ptr<const RadialGrid> with_params(const ProblemParams& p) const {
        validate(p);
        require(p.d == params_.d, errc::consistency, "dimension change is not a reparametrisation");
        auto g = std::make_shared<RadialGrid>(*this);
        g->params_ = p;
        g->finish();
        return g;
    }

    bool same_nodes(const RadialGrid& other) const {
        return scheme_ == other.scheme_ && nodes_ == other.nodes_ && r_max_ == other.r_max_;
    }

private:
    RadialGrid() = default;

    void finish() {
        const std::size_t n = nodes_.size();
        const int d = params_.d;
        const double area = sphere_area(d);
        widths_.resize(n);
        weights_.resize(n);
        flux_.assign(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            widths_[j] = faces_[j + 1] - faces_[j];
            weights_[j] = area * std::pow(nodes_[j], d - 1) * widths_[j];
        }
        for (std::size_t k = 1; k < n; ++k)
            flux_[k] = area * std::pow(faces_[k], d - 1) / (nodes_[k] - nodes_[k - 1]);
        flux_[n] = area * std::pow(r_max_, d - 1) / (r_max_ - nodes_[n - 1]);
        core_sigma_ = indicial_exponent(params_);
        if (faces_[0] > 0.0) {
            // the ball r < f_0 belongs to node 0, with profile (r/r_0)^{-σ}
            const double f0 = faces_[0];
            weights_[0] = area * std::pow(nodes_[0], d - 1) * widths_[0] +
                          area * std::pow(f0, d) * std::pow(f0 / nodes_[0], -2.0 * core_sigma_) /
                              (d - 2.0 * core_sigma_);
        }
        core_ = core_closure();
    }

    // κ is chosen so that r^{-σ} is annihilated by Δ_h + c r^{-2} at node 0:
    // F_1 ((r_1/r_0)^{-σ} - 1) + c w_0 / r_0^2 + (c - σ^2) κ = 0.
    // At c = 0 (σ = 0) both sides vanish and κ is the limit c -> 0.
    double core_closure() const {
        if (nodes_.size() < 2) return 0.0;
        const double c = params_.c;
        const double sigma = core_sigma_;
        const double r0 = nodes_[0];
        const double log_ratio = std::log(nodes_[1] / r0);
        const double hardy_cell = weights_[0] / (r0 * r0);
        if (std::abs(sigma) < 1e-7) return flux_[1] * log_ratio / (params_.d - 2) - hardy_cell;
        const double num = flux_[1] * std::expm1(-sigma * log_ratio) + c * hardy_cell;
        return num / (sigma * sigma - c);
    }

    ProblemParams params_{};
    GridScheme scheme_ = GridScheme::uniform_shifted;
    double r_max_ = 0.0;
    double r_min_ = 0.0;
    double coord_origin_ = 0.0;
    double coord_step_ = 0.0;
    double core_ = 0.0;
    double core_sigma_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> faces_;
    std::vector<double> widths_;
    std::vector<double> weights_;
    std::vector<double> flux_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

} // namespace nlsip

#endif
