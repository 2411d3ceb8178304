#ifndef NLSIP_PARAMS_HPP
#define NLSIP_PARAMS_HPP

#include <cmath>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace nlsip {

/// Sharp Hardy constant ((d-2)/2)^2.
inline double hardy_constant(int d) {
    const double half = 0.5 * (d - 2);
    return half * half;
}

/// Surface area of the unit sphere S^{d-1}.
inline double sphere_area(int d) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Dimension and inverse-square coupling of i u_t + Δu + c|x|^{-2}u = -|u|^{4/d}u.
struct ProblemParams {
    int d = 3;
    double c = 0.0;

    double lambda() const { return hardy_constant(d); }
    /// Exponent p = 4/d + 2 of the potential-energy Lebesgue norm.
    double critical_exponent() const { return 4.0 / d + 2.0; }
    /// Exponent 4/d of |u| in the nonlinearity.
    double nonlinear_power() const { return 4.0 / d; }
    double c_bar() const { return c > 0.0 ? c : 0.0; }

    friend bool operator==(const ProblemParams&, const ProblemParams&) = default;
};

/// Throws errc::parameter unless d >= 3 and c < λ(d). c = 0 is admitted as a
/// reference configuration; operations restricted to c != 0 check separately.
inline void validate(const ProblemParams& p) {
    if (p.d < 3) {
        std::ostringstream os;
        os << "dimension d = " << p.d << " violates d >= 3";
        fail(errc::parameter, os.str());
    }
    if (!std::isfinite(p.c) || !(p.c < p.lambda())) {
        std::ostringstream os;
        os << "coupling c = " << p.c << " violates c < lambda(d) = " << p.lambda();
        fail(errc::parameter, os.str());
    }
}

/// Less singular root σ = (d-2)/2 - sqrt(λ(d) - c) of σ^2 - (d-2)σ + c = 0.
/// Solutions of the Friedrichs extension behave like a r^{-σ} at the origin.
inline double indicial_exponent(const ProblemParams& params) {
    validate(params);
    return 0.5 * (params.d - 2) - std::sqrt(params.lambda() - params.c);
}

inline ProblemParams make_params(int d, double c) {
    ProblemParams p{d, c};
    validate(p);
    return p;
}

} // namespace nlsip

#endif
