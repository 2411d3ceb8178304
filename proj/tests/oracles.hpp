#ifndef NLSIP_TESTS_ORACLES_HPP
#define NLSIP_TESTS_ORACLES_HPP

// Independent reference computations for the tests. Nothing here uses the
// library's grids or discrete operators.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

namespace oracle {

inline double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

/// ∫_0^∞ f(r) |S^{d-1}| r^{d-1} dr.
inline double radial_integral(int d, const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> q;
    return sphere_area(d) * q.integrate([&](double r) {
        const double v = f(r);
        return v == 0.0 ? 0.0 : v * std::pow(r, d - 1);
    });
}

/// ∫_a^b f by adaptive Gauss-Kronrod.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// Classical ground state of Q'' + (d-1)/r Q' - Q + Q^{1+4/d} = 0 by shooting
/// from the origin with an adaptive Dormand-Prince integrator and bisection on Q(0).
struct ShootingQ0 {
    int d = 3;
    double a = 0.0;    ///< Q(0)
    double mass = 0.0; ///< ∫|Q|^2 up to the point where the shot departs

    using state = std::array<double, 3>; // Q, Q', accumulated mass

    enum class Outcome { overshoot, undershoot };

    /// Samples the shot with Q(0) = amp at ascending radii; 0 beyond the point where it departs.
    Outcome shoot(double amp, double* mass_out = nullptr, const std::vector<double>* radii = nullptr,
                  std::vector<double>* values = nullptr) const {
        namespace ode = boost::numeric::odeint;
        const double p = 1.0 + 4.0 / d;
        const double area = sphere_area(d);
        const double r0 = 1e-6;
        state y{amp + (amp - std::pow(amp, p)) * r0 * r0 / (2.0 * d), (amp - std::pow(amp, p)) * r0 / d, 0.0};
        auto rhs = [&](const state& s, state& ds, double r) {
            const double q = s[0];
            ds[0] = s[1];
            ds[1] = -(d - 1) / r * s[1] + q - std::copysign(std::pow(std::abs(q), p), q);
            ds[2] = area * std::pow(r, d - 1) * q * q;
        };
        auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<state>());
        stepper.initialize(y, r0, 1e-4);
        Outcome out = Outcome::undershoot;
        double best_mass = 0.0;
        std::size_t next = 0;
        if (values) values->assign(radii->size(), 0.0);
        while (stepper.current_time() < 40.0) {
            stepper.do_step(rhs);
            const auto& s = stepper.current_state();
            if (s[0] >= 0.0 && s[1] <= 0.0) {
                while (values && next < radii->size() && (*radii)[next] <= stepper.current_time()) {
                    state x;
                    const double r = std::max((*radii)[next], r0);
                    stepper.calc_state(r, x);
                    (*values)[next++] = x[0];
                }
            }
            if (s[0] < 0.0) {
                out = Outcome::overshoot;
                break;
            }
            if (s[1] > 0.0) {
                out = Outcome::undershoot;
                break;
            }
            best_mass = s[2];
        }
        if (mass_out) *mass_out = best_mass;
        return out;
    }

    static ShootingQ0 solve(int d) {
        ShootingQ0 o;
        o.d = d;
        double lo = 1.0, hi = 10.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (o.shoot(mid) == Outcome::overshoot ? hi : lo) = mid;
        }
        o.a = 0.5 * (lo + hi);
        o.shoot(o.a, &o.mass);
        return o;
    }

    std::vector<double> sample(const std::vector<double>& radii) const {
        std::vector<double> v;
        shoot(a, nullptr, &radii, &v);
        return v;
    }
};

} // namespace oracle

#endif
