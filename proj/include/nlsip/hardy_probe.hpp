#ifndef NLSIP_HARDY_PROBE_HPP
#define NLSIP_HARDY_PROBE_HPP

#include <cmath>

#include "error.hpp"
#include "functionals.hpp"

namespace nlsip {

/// Smooth cutoff used by the Hardy probe: 1 for r <= 1, 0 for r >= e^ℓ, with
/// a C^∞ transition in ln r. The logarithmic transition keeps the cutoff's
/// gradient energy small against the Hardy integral of r^{-(d-2)/2+ε}.
struct LogCutoff {
    double log_width = 8.0; ///< ℓ

    static double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
    static double smooth_step(double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double a = bump(t);
        return a / (a + bump(1.0 - t));
    }

    double outer_radius() const { return std::exp(log_width); }
    double operator()(double r) const { return 1.0 - smooth_step(std::log(r) / log_width); }
};

/// f_ε(r) = r^{-(d-2)/2+ε} χ(r).
inline RadialField hardy_probe_field(const GridPtr& grid, double eps, LogCutoff chi = {}) {
    const double a = 0.5 * (grid->dimension() - 2) - eps;
    return RadialField::from_function(grid, [&](double r) { return std::pow(r, -a) * chi(r); },
                                      BoundaryBehavior::indicial(a));
}

/// gradient_sq / hardy for f_ε; tends to λ(d) from above as ε -> 0.
///
/// The grid must be graded with a small enough r_min: the Hardy integrand is
/// r^{2ε-1} near the origin, so the part inside r_min is a fraction r_min^{2ε}.
inline double hardy_sharpness_probe(const ProblemParams& params, double eps, const GridPtr& grid,
                                    LogCutoff chi = {}) {
    validate(params);
    require(eps > 0.0 && eps < 0.5, errc::parameter, "probe exponent must lie in (0, 1/2)");
    require(grid->params().d == params.d, errc::consistency, "grid dimension mismatch");
    require(grid->r_max() >= chi.outer_radius(), errc::resolution,
            "grid does not contain the cutoff support");
    const auto f = hardy_probe_field(grid, eps, chi);
    return gradient_sq(f) / hardy_integral(f);
}

} // namespace nlsip

#endif
