#ifndef NLSIP_FUNCTIONALS_HPP
#define NLSIP_FUNCTIONALS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>

#include "error.hpp"
#include "params.hpp"
#include "radial_field.hpp"

namespace nlsip {

/// Integral quantities of one radial field.
struct FunctionalLedger {
    double mass = 0.0;        ///< ∫|u|^2
    double gradient_sq = 0.0; ///< ∫|∇u|^2
    double hardy = 0.0;       ///< ∫|x|^{-2}|u|^2
    double h1c_sq = 0.0;      ///< gradient_sq - c hardy
    double energy = 0.0;
    double potential = 0.0;   ///< ∫|u|^{4/d+2}
    std::map<double, double> lp_norms; ///< exponent -> ‖u‖_{L^p}

    double grad_norm() const { return std::sqrt(gradient_sq); }
};

namespace detail {

inline void check_params(const RadialField& u, const ProblemParams& params) {
    require(u.grid().params() == params, errc::consistency,
            "field grid was built for different problem parameters");
}

} // namespace detail

/// ∫ |u|^p.
inline double lp_integral(const RadialField& u, double p) {
    const auto& g = u.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += g.weight(j) * std::pow(std::abs(u[j]), p);
    return s;
}

inline double lp_norm(const RadialField& u, double p) { return std::pow(lp_integral(u, p), 1.0 / p); }

inline double mass(const RadialField& u) { return lp_integral(u, 2.0); }

/// Discrete ∫|∇u|^2 from differences across cell faces; u = 0 beyond r_max.
inline double gradient_sq(const RadialField& u) {
    const auto& g = u.grid();
    const auto& f = g.flux();
    const std::size_t n = u.size();
    const double sigma = g.core_sigma();
    double s = sigma * sigma * g.core_coefficient() * std::norm(u[0]);
    for (std::size_t k = 1; k < n; ++k) s += f[k] * std::norm(u[k] - u[k - 1]);
    s += f[n] * std::norm(u[n - 1]);
    return s;
}

inline double hardy_integral(const RadialField& u) {
    const auto& g = u.grid();
    double s = g.core_coefficient() * std::norm(u[0]);
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double r = g.node(j);
        s += g.weight(j) * std::norm(u[j]) / (r * r);
    }
    return s;
}

/// ∫ |x|^k |u|^2.
inline double radial_moment(const RadialField& u, double k) {
    const auto& g = u.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += g.weight(j) * std::pow(g.node(j), k) * std::norm(u[j]);
    return s;
}

/// Virial ∫|x|^2|u|^2.
inline double virial(const RadialField& u) { return radial_moment(u, 2.0); }

/// ∫_{|x| <= a} |u|^2, with the cell straddling a counted by its volume fraction.
inline double ball_mass(const RadialField& u, double a) {
    const auto& g = u.grid();
    const int d = g.dimension();
    const auto& f = g.faces();
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (f[j] >= a) break;
        double frac = 1.0;
        if (f[j + 1] > a) {
            const double lo = std::pow(f[j], d);
            frac = (std::pow(a, d) - lo) / (std::pow(f[j + 1], d) - lo);
        }
        s += frac * g.weight(j) * std::norm(u[j]);
    }
    return s;
}

inline FunctionalLedger functionals(const RadialField& u, const ProblemParams& params) {
    detail::check_params(u, params);
    const double p = params.critical_exponent();
    FunctionalLedger led;
    led.mass = mass(u);
    led.gradient_sq = gradient_sq(u);
    led.hardy = hardy_integral(u);
    led.h1c_sq = led.gradient_sq - params.c * led.hardy;
    led.potential = lp_integral(u, p);
    led.energy = 0.5 * led.gradient_sq - 0.5 * params.c * led.hardy -
                 params.d / (2.0 * params.d + 4.0) * led.potential;
    led.lp_norms[2.0] = std::sqrt(led.mass);
    led.lp_norms[p] = std::pow(led.potential, 1.0 / p);
    return led;
}

inline double energy(const RadialField& u) {
    return functionals(u, u.grid().params()).energy;
}

/// Weinstein functional ‖u‖_p^p / (‖u‖_2^{4/d} ‖u‖_{Ḣ¹_c}^2), p = 4/d + 2.
inline double weinstein(const RadialField& u, const ProblemParams& params) {
    detail::check_params(u, params);
    const double m = mass(u);
    require(m > 0.0, errc::domain, "Weinstein functional of the zero field");
    const double h1c = gradient_sq(u) - params.c * hardy_integral(u);
    require(h1c > 0.0, errc::singular_functional,
            "non-positive Ḣ¹_c norm; the grid does not resolve the Hardy term");
    return lp_integral(u, params.critical_exponent()) / (std::pow(m, 2.0 / params.d) * h1c);
}

/// ‖u - v‖_{L²} / ‖v‖_{L²} for fields on the same grid.
inline double relative_l2_distance(const RadialField& u, const RadialField& v) {
    require(u.grid().same_nodes(v.grid()), errc::consistency, "fields live on different grids");
    const auto& g = u.grid();
    double diff = 0.0, ref = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        diff += g.weight(j) * std::norm(u[j] - v[j]);
        ref += g.weight(j) * std::norm(v[j]);
    }
    require(ref > 0.0, errc::domain, "reference field is zero");
    return std::sqrt(diff / ref);
}

} // namespace nlsip

#endif
