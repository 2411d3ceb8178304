#ifndef NLSIP_TRANSLATED_BUMP_HPP
#define NLSIP_TRANSLATED_BUMP_HPP

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "cartesian.hpp"
#include "error.hpp"
#include "ground_state.hpp"

namespace nlsip {

struct TranslatedBumpValue {
    double shift = 0.0;
    double j_c = 0.0;     ///< J_c of Q_0(· - s e₁)
    double j_0 = 0.0;     ///< J_0 of the same embedding (quadrature check of C_GN(0))
    double edge_ratio = 0.0; ///< Q_0 at the nearest box face over max Q_0
};

struct TranslatedBumpOptions {
    double half_width = 18.0;
    int cells = 64;
    double edge_tolerance = 1e-3; ///< largest admissible edge_ratio
};

namespace detail {

/// Radial derivative of the interpolated profile.
inline double radial_slope(const RadialField& q, double r) {
    const double h = 1e-5 * std::max(r, 1e-3);
    return (q.value_at(r + h).real() - q.value_at(std::max(r - h, 0.0)).real()) / (r + h - std::max(r - h, 0.0));
}

} // namespace detail

/// J_c(Q_0(· - s e₁)) for c < 0 on the Cartesian grid. Values and gradients of
/// the embedding are sampled from the radial profile (∇u = Q_0'(ρ) (x - s e₁)/ρ)
/// and integrated by the midpoint rule.
inline std::vector<TranslatedBumpValue> translated_bump_supremum(const ProblemParams& params, const GroundState& q0,
                                                                 const std::vector<double>& shifts,
                                                                 TranslatedBumpOptions opts = {}) {
    validate(params);
    require(params.c < 0.0, errc::parameter, "the translated-bump witness is for c < 0");
    require(q0.params.d == params.d && q0.params.c == 0.0, errc::consistency, "reference profile must be Q_0");
    const auto grid = CartesianGrid::build(params, opts.half_width, opts.cells);
    const int n = grid->cells();
    const double vol = grid->cell_volume();
    const double p = params.critical_exponent();
    const double q_max = q0.field.max_abs();
    std::vector<TranslatedBumpValue> out;
    for (double s : shifts) {
        TranslatedBumpValue v;
        v.shift = s;
        const double edge = opts.half_width - std::abs(s);
        v.edge_ratio = edge > 0.0 ? std::abs(q0.field.value_at(edge)) / q_max : 1.0;
        if (v.edge_ratio > opts.edge_tolerance) {
            std::ostringstream os;
            os << "shift " << s << " leaves Q_0 at " << v.edge_ratio << " of its maximum on the box face";
            fail(errc::truncation, os.str());
        }
        double m = 0.0, a = 0.0, grad = 0.0, hardy = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const auto x = grid->point({i, j, k});
                    const double dx = x[0] - s;
                    const double rho = std::sqrt(dx * dx + x[1] * x[1] + x[2] * x[2]);
                    const double u = q0.field.value_at(rho).real();
                    const double du = detail::radial_slope(q0.field, rho);
                    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                    m += u * u;
                    a += std::pow(std::abs(u), p);
                    grad += du * du;
                    hardy += u * u / r2;
                }
        m *= vol;
        a *= vol;
        grad *= vol;
        hardy *= vol;
        const double denom = std::pow(m, 2.0 / params.d);
        v.j_c = a / (denom * (grad - params.c * hardy));
        v.j_0 = a / (denom * grad);
        out.push_back(v);
    }
    return out;
}

} // namespace nlsip

#endif
