#ifndef NLSIP_GROUND_STATE_HPP
#define NLSIP_GROUND_STATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "field_io.hpp"
#include "functionals.hpp"
#include "radial_operator.hpp"
#include "tridiagonal.hpp"

namespace nlsip {

enum class GroundStateMethod { shooting, gradient_flow };

inline std::string_view to_string(GroundStateMethod m) {
    return m == GroundStateMethod::shooting ? "shooting" : "gradient-flow";
}

inline GroundStateMethod parse_method(std::string_view name) {
    if (name == "shooting") return GroundStateMethod::shooting;
    if (name == "gradient-flow") return GroundStateMethod::gradient_flow;
    fail(errc::parameter, "unknown ground-state method '" + std::string(name) + "'");
}

/// Positive radial solution of ΔQ + c|x|^{-2}Q - Q + Q^{1+4/d} = 0 on a grid.
struct GroundState {
    ProblemParams params;
    RadialField field;
    GroundStateMethod method = GroundStateMethod::shooting;
    double sigma = 0.0;
    double amplitude = 0.0;      ///< a in Q ≈ a r^{-σ} near 0
    double residual = 0.0;       ///< discrete L² norm of the elliptic residual
    std::array<double, 2> pohozaev{}; ///< (ρ1, ρ2)
    double mass = 0.0;           ///< ‖Q‖²_{L²}
    double h1c_sq = 0.0;
    double potential = 0.0;      ///< ‖Q‖^{4/d+2}_{L^{4/d+2}}
    double gn_constant = 0.0;    ///< (d+2)/d ‖Q‖_{L²}^{-4/d}
    double raw_mass = 0.0;       ///< mass of the method's own output before Newton polishing
    double raw_residual = 0.0;   ///< elliptic residual before polishing
    int newton_iterations = 0;

    double l2_norm() const { return std::sqrt(mass); }
    double h1c_norm() const { return std::sqrt(h1c_sq); }

    /// Pohozaev certification at the given relative tolerance.
    bool certified(double tol = 1e-4) const { return pohozaev[0] <= tol && pohozaev[1] <= tol; }
};

struct GroundStateOptions {
    double tol = 5e-7;             ///< elliptic residual target
    int max_newton = 60;
    // shooting
    double amplitude_lo = 1e-2;
    double amplitude_hi = 1e3;
    double amplitude_factor = 1.25;
    double bisection_rel = 1e-12;
    double blowup_cap = 1e3;
    double decay_floor = 1e-12;
    double max_log_step = 2e-3;    ///< RK4 step in ln r
    double max_radial_step = 5e-3; ///< RK4 step in r
    // gradient flow
    int max_ascent = 20000;
    double ascent_tol = 1e-10;
};

namespace detail {

/// Continuum ODE for P = r^σ Q in s = ln r: y = (P, r P').
struct ShootingOde {
    int d;
    double sigma;
    double k;      // d - 1 - 2σ
    double p;      // 1 + 4/d
    double nl_pow; // -4σ/d

    explicit ShootingOde(const ProblemParams& params)
        : d(params.d), sigma(indicial_exponent(params)), k(params.d - 1 - 2.0 * sigma),
          p(1.0 + 4.0 / params.d), nl_pow(-4.0 * sigma / params.d) {}

    std::array<double, 2> rhs(double s, const std::array<double, 2>& y) const {
        const double r = std::exp(s);
        const double P = y[0];
        const double nl = std::pow(r, nl_pow) * std::pow(std::abs(P), p - 1.0) * P;
        return {y[1], (1.0 - k) * y[1] + r * r * (P - nl)};
    }

    /// Two-term start P ≈ a(1 + β r² + γ r^m) with m = 2 - 4σ/d.
    std::array<double, 2> start(double a, double r) const {
        const double beta = 1.0 / (2.0 * (1.0 + k));
        const double m = 2.0 + nl_pow;
        const double gamma = -std::pow(a, p - 1.0) / (m * (m - 1.0 + k));
        const double P = a * (1.0 + beta * r * r + gamma * std::pow(r, m));
        const double rdP = a * (2.0 * beta * r * r + m * gamma * std::pow(r, m));
        return {P, rdP};
    }

    std::array<double, 2> rk4(double s, const std::array<double, 2>& y, double h) const {
        auto add = [](const std::array<double, 2>& a, const std::array<double, 2>& b, double f) {
            return std::array<double, 2>{a[0] + f * b[0], a[1] + f * b[1]};
        };
        const auto k1 = rhs(s, y);
        const auto k2 = rhs(s + 0.5 * h, add(y, k1, 0.5 * h));
        const auto k3 = rhs(s + 0.5 * h, add(y, k2, 0.5 * h));
        const auto k4 = rhs(s + h, add(y, k3, h));
        return {y[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
    }
};

enum class ShotOutcome { undershoot, overshoot, decayed };

struct Shot {
    ShotOutcome outcome = ShotOutcome::undershoot;
    std::vector<double> q; ///< Q at the nodes reached
    std::size_t valid = 0; ///< nodes before the trajectory departs from the decaying branch
};

/// Integrates from the first node outward, recording Q at each node.
inline Shot shoot(const ShootingOde& ode, const RadialGrid& g, double a, const GroundStateOptions& o) {
    Shot shot;
    const auto& r = g.nodes();
    const std::size_t n = r.size();
    shot.q.reserve(n);
    auto y = ode.start(a, r[0]);
    auto q_of = [&](const std::array<double, 2>& yy, double rr) { return std::pow(rr, -ode.sigma) * yy[0]; };
    // sign of Q' is the sign of rP' - σP
    auto slope = [&](const std::array<double, 2>& yy) { return yy[1] - ode.sigma * yy[0]; };
    bool descending = slope(y) < 0.0;
    double q_max = q_of(y, r[0]);
    shot.q.push_back(q_max);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double s0 = std::log(r[j]);
        const double s1 = std::log(r[j + 1]);
        const double allowed = std::min(o.max_log_step, o.max_radial_step / r[j + 1]);
        const int steps = std::max(1, static_cast<int>(std::ceil((s1 - s0) / allowed)));
        const double h = (s1 - s0) / steps;
        for (int m = 0; m < steps; ++m) {
            const double s = s0 + m * h;
            y = ode.rk4(s, y, h);
            const double rr = std::exp(s + h);
            const double q = q_of(y, rr);
            const double dq = slope(y);
            if (q <= 0.0) {
                shot.outcome = ShotOutcome::overshoot;
                return shot;
            }
            if (q > o.blowup_cap || (descending && dq > 0.0)) {
                shot.outcome = ShotOutcome::undershoot;
                return shot;
            }
            if (dq < 0.0) descending = true;
            q_max = std::max(q_max, q);
            if (descending && q < o.decay_floor * q_max) {
                shot.q.push_back(q);
                shot.valid = shot.q.size();
                shot.outcome = ShotOutcome::decayed;
                return shot;
            }
        }
        shot.q.push_back(q_of(y, r[j + 1]));
        shot.valid = shot.q.size();
    }
    shot.outcome = ShotOutcome::decayed;
    return shot;
}

inline double weighted_norm(const RadialGrid& g, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += g.weight(j) * f[j] * f[j];
    return std::sqrt(s);
}

/// Pointwise residual ΔQ + c r^{-2} Q - Q + |Q|^{4/d} Q with discrete operators.
inline std::vector<double> elliptic_residual_vector(const RadialGrid& g, double c, const std::vector<double>& q) {
    auto f = apply_operator(g, c, q);
    const double pw = 4.0 / g.dimension();
    for (std::size_t j = 0; j < q.size(); ++j) f[j] += -q[j] + std::pow(std::abs(q[j]), pw) * q[j];
    return f;
}

struct PolishResult {
    std::vector<double> q;
    double residual = 0.0;
    int iterations = 0;
};

/// Newton iteration on the discrete elliptic system; returns the best iterate.
inline PolishResult newton_iterate(const RadialGrid& g, double c, std::vector<double> q, double tol, int max_iter) {
    const std::size_t n = q.size();
    const double pw = 4.0 / g.dimension();
    const auto base = weighted_operator(g, c);
    PolishResult out;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_q = q;
    for (int it = 0; it <= max_iter; ++it) {
        const auto f = elliptic_residual_vector(g, c, q);
        const double res = weighted_norm(g, f);
        if (!std::isfinite(res)) fail(errc::numerical, "Newton iteration produced non-finite values");
        if (res < best) {
            best = res;
            best_q = q;
        }
        out.iterations = it;
        if (res <= tol) break;
        if (it == max_iter) break;
        Tridiagonal<double> jac = base;
        std::vector<double> rhs(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double w = g.weight(j);
            jac.diag[j] += w * (-1.0 + (1.0 + pw) * std::pow(std::abs(q[j]), pw));
            rhs[j] = w * f[j];
        }
        const auto delta = solve_pivoted(jac, rhs);
        for (std::size_t j = 0; j < n; ++j) q[j] -= delta[j];
    }
    out.q = std::move(best_q);
    out.residual = best;
    return out;
}

inline PolishResult newton_polish(const RadialGrid& g, double c, std::vector<double> q, double tol, int max_iter) {
    auto out = newton_iterate(g, c, std::move(q), tol, max_iter);
    const double best = out.residual;
    if (best > tol) {
        std::ostringstream os;
        os << "Newton polishing stalled at residual " << best << " > tol " << tol;
        fail(errc::convergence, os.str());
    }
    return out;
}

/// Decaying continuation Q(r) ≈ Q(r_c) (r_c/r)^{(d-1)/2} e^{-(r-r_c)} beyond the last trusted node.
inline void continue_tail(const RadialGrid& g, std::vector<double>& q, std::size_t valid) {
    const std::size_t n = g.size();
    q.resize(n, 0.0);
    if (valid == 0 || valid >= n) return;
    const std::size_t last = valid - 1;
    const double rc = g.node(last);
    const double qc = q[last];
    for (std::size_t j = valid; j < n; ++j) {
        const double r = g.node(j);
        q[j] = qc * std::pow(rc / r, 0.5 * (g.dimension() - 1)) * std::exp(-(r - rc));
    }
}

/// Trims a shot to the part where it still follows the decaying branch:
/// stop at the smallest Q reached before the trajectory turns away.
inline std::size_t trusted_prefix(const std::vector<double>& q, std::size_t valid) {
    if (valid < 3) return valid;
    std::size_t peak = 0;
    for (std::size_t j = 1; j < valid; ++j)
        if (q[j] > q[peak]) peak = j;
    std::size_t argmin = peak;
    for (std::size_t j = peak; j < valid; ++j) {
        if (q[j] < q[argmin]) argmin = j;
    }
    return argmin + 1;
}

struct ShootingResult {
    std::vector<double> q; ///< continuum samples at the nodes (tail continued analytically)
    double amplitude = 0.0;
};

/// Bisection on the amplitude between undershoot (Q turns up or exceeds the
/// blow-up cap) and overshoot (Q changes sign). The first bracket found while
/// scanning upward from amplitude_lo fixes the branch.
inline ShootingResult shooting_profile(const ProblemParams& params, const RadialGrid& g, const GroundStateOptions& o) {
    const ShootingOde ode(params);
    double lo = -1.0, hi = -1.0;
    for (double a = o.amplitude_lo; a <= o.amplitude_hi; a *= o.amplitude_factor) {
        const auto s = shoot(ode, g, a, o);
        if (s.outcome == ShotOutcome::undershoot) {
            lo = a;
        } else if (lo > 0.0) {
            hi = a;
            break;
        }
    }
    if (lo < 0.0 || hi < 0.0) {
        std::ostringstream os;
        os << "no undershoot/overshoot bracket for amplitudes in [" << o.amplitude_lo << ", "
           << o.amplitude_hi << "]";
        fail(errc::no_convergence, os.str());
    }
    Shot best;
    double a_best = 0.5 * (lo + hi);
    while ((hi - lo) > o.bisection_rel * hi) {
        const double mid = 0.5 * (lo + hi);
        auto s = shoot(ode, g, mid, o);
        if (s.outcome == ShotOutcome::decayed) {
            best = std::move(s);
            a_best = mid;
            lo = hi = mid;
            break;
        }
        (s.outcome == ShotOutcome::undershoot ? lo : hi) = mid;
    }
    if (best.q.empty()) {
        a_best = 0.5 * (lo + hi);
        best = shoot(ode, g, a_best, o);
        if (best.outcome != ShotOutcome::decayed) best.valid = best.q.size();
    }
    ShootingResult res;
    res.amplitude = a_best;
    res.q = best.q;
    const std::size_t keep = trusted_prefix(res.q, std::min(best.valid, res.q.size()));
    res.q.resize(keep);
    continue_tail(g, res.q, keep);
    return res;
}

struct AscentResult {
    std::vector<double> u;
    double weinstein = 0.0;
    int iterations = 0;
};

/// Preconditioned gradient ascent of log J_c at unit mass. The preconditioner
/// is (P_c + 1)^{-1}, so each step costs one tridiagonal solve.
inline AscentResult weinstein_ascent(const RadialGrid& g, double c, std::vector<double> u, const GroundStateOptions& o) {
    const std::size_t n = g.size();
    const int d = g.dimension();
    const double p = 4.0 / d + 2.0;
    const auto op = weighted_operator(g, c); // -(stiffness) + c W / r^2
    Tridiagonal<double> precond(n);
    for (std::size_t j = 0; j < n; ++j) {
        precond.diag[j] = -op.diag[j] + g.weight(j);
        if (j + 1 < n) {
            precond.upper[j] = -op.upper[j];
            precond.lower[j] = -op.lower[j];
        }
    }
    auto stats = [&](const std::vector<double>& v, double& m, double& h, double& a, std::vector<double>* lv) {
        m = 0.0;
        a = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            m += g.weight(j) * v[j] * v[j];
            a += g.weight(j) * std::pow(std::abs(v[j]), p);
        }
        auto kv = op.multiply(v);
        h = 0.0;
        for (std::size_t j = 0; j < n; ++j) h -= v[j] * kv[j];
        if (lv) *lv = std::move(kv);
    };
    auto log_j = [&](double m, double h, double a) { return std::log(a) - (2.0 / d) * std::log(m) - std::log(h); };
    auto normalise = [&](std::vector<double>& v) {
        double m = 0.0;
        for (std::size_t j = 0; j < n; ++j) m += g.weight(j) * v[j] * v[j];
        const double f = 1.0 / std::sqrt(m);
        for (auto& x : v) x *= f;
    };
    normalise(u);
    double m, h, a;
    std::vector<double> ku;
    stats(u, m, h, a, &ku);
    double lj = log_j(m, h, a);
    double tau = 0.5;
    AscentResult out;
    for (int it = 0; it < o.max_ascent; ++it) {
        // weighted gradient times W: W g = p W|u|^{p-2}u / A - (4/d) W u / M + 2 K_c u / H
        std::vector<double> wg(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double w = g.weight(j);
            wg[j] = p * w * std::pow(std::abs(u[j]), p - 2.0) * u[j] / a - (4.0 / d) * w * u[j] / m +
                    2.0 * ku[j] / h;
        }
        const auto dir = solve(precond, wg);
        double gnorm = 0.0;
        for (std::size_t j = 0; j < n; ++j) gnorm += dir[j] * wg[j];
        out.iterations = it;
        if (std::sqrt(std::max(gnorm, 0.0)) < o.ascent_tol) break;
        bool improved = false;
        for (int tries = 0; tries < 40; ++tries) {
            std::vector<double> trial(u);
            for (std::size_t j = 0; j < n; ++j) trial[j] += tau * dir[j];
            normalise(trial);
            double m2, h2, a2;
            std::vector<double> k2;
            stats(trial, m2, h2, a2, &k2);
            const double lj2 = log_j(m2, h2, a2);
            if (h2 > 0.0 && lj2 > lj) {
                u = std::move(trial);
                m = m2;
                h = h2;
                a = a2;
                ku = std::move(k2);
                improved = lj2 - lj > 1e-15 * std::abs(lj);
                lj = lj2;
                tau = std::min(tau * 1.5, 50.0);
                break;
            }
            tau *= 0.5;
        }
        if (!improved) break;
    }
    out.u = std::move(u);
    out.weinstein = std::exp(lj);
    return out;
}

inline double pohozaev_rho1(double mass, double h1c, int d) { return std::abs(mass - 2.0 / d * h1c) / mass; }
inline double pohozaev_rho2(double mass, double potential, int d) {
    return std::abs(mass - 2.0 / (d + 2.0) * potential) / mass;
}

inline GroundState assemble(const ProblemParams& params, const GridPtr& grid, std::vector<double> q,
                            GroundStateMethod method, double raw_mass, double raw_residual,
                            double residual, int iterations) {
    const double sigma = indicial_exponent(params);
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (!(q[j] > 0.0)) {
            std::ostringstream os;
            os << "ground state lost positivity at r = " << grid->node(j);
            fail(errc::numerical, os.str());
        }
    }
    std::vector<cplx> v(q.begin(), q.end());
    GroundState gs;
    gs.params = params;
    gs.field = RadialField(grid, std::move(v), BoundaryBehavior::indicial(sigma));
    gs.method = method;
    gs.sigma = sigma;
    gs.amplitude = q[0] * std::pow(grid->node(0), sigma);
    gs.residual = residual;
    gs.raw_mass = raw_mass;
    gs.raw_residual = raw_residual;
    gs.newton_iterations = iterations;
    const auto led = functionals(gs.field, params);
    gs.mass = led.mass;
    gs.h1c_sq = led.h1c_sq;
    gs.potential = led.potential;
    gs.pohozaev = {pohozaev_rho1(led.mass, led.h1c_sq, params.d), pohozaev_rho2(led.mass, led.potential, params.d)};
    gs.gn_constant = (params.d + 2.0) / params.d * std::pow(led.mass, -2.0 / params.d);
    return gs;
}

inline double sampled_mass(const RadialGrid& g, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += g.weight(j) * q[j] * q[j];
    return s;
}

} // namespace detail

/// Shooting profile sampled on the grid without Newton polishing; its discrete
/// residual measures the consistency error of the radial discretisation.
inline std::vector<double> shooting_samples(const ProblemParams& params, const GridPtr& grid,
                                            const GroundStateOptions& opts = {}) {
    validate(params);
    require(grid->params() == params, errc::consistency, "grid built for other parameters");
    return detail::shooting_profile(params, *grid, opts).q;
}

/// Discrete L² norm of ΔQ + c r^{-2}Q - Q + Q^{1+4/d} for real samples.
inline double elliptic_residual(const GridPtr& grid, const std::vector<double>& q) {
    return detail::weighted_norm(*grid, detail::elliptic_residual_vector(*grid, grid->params().c, q));
}

/// Q_c (0 < c < λ), Q_{c,rad} (c < 0) or the reference Q_0 (c = 0) on the grid.
/// Both methods finish with Newton iterations on the discrete equation, so the
/// returned state satisfies the discrete equation to `tol`.
inline GroundState solve_ground_state(const ProblemParams& params, const GridPtr& grid,
                                      GroundStateMethod method, GroundStateOptions opts = {}) {
    validate(params);
    require(grid->params() == params, errc::consistency, "grid built for other parameters");
    require(opts.tol > 0.0, errc::parameter, "tolerance must be positive");
    const auto& g = *grid;
    std::vector<double> q;
    if (method == GroundStateMethod::shooting) {
        q = detail::shooting_profile(params, g, opts).q;
    } else {
        const double sigma = indicial_exponent(params);
        std::vector<double> u0(g.size());
        for (std::size_t j = 0; j < u0.size(); ++j) {
            const double r = g.node(j);
            u0[j] = std::pow(r / (1.0 + r), -sigma) * std::exp(-r);
        }
        auto asc = detail::weinstein_ascent(g, params.c, std::move(u0), opts);
        // Lagrange normalisation: u solves L_c u - (2H/(dM)) u + (pH/(2A)) |u|^{4/d} u = 0,
        // so Q(r) = α u(βr) with β^{-2} = 2H/(dM) and α^{4/d} = pHβ²/(2A).
        RadialField uf(grid, std::vector<cplx>(asc.u.begin(), asc.u.end()), BoundaryBehavior::indicial(sigma));
        const int d = params.d;
        const double p = params.critical_exponent();
        const double m = mass(uf);
        const double h = gradient_sq(uf) - params.c * hardy_integral(uf);
        const double a = lp_integral(uf, p);
        const double beta = std::sqrt(d * m / (2.0 * h));
        const double alpha = std::pow(p * h * beta * beta / (2.0 * a), d / 4.0);
        const auto scaled = resample(uf, grid, beta, alpha);
        q.resize(g.size());
        for (std::size_t j = 0; j < q.size(); ++j) q[j] = scaled[j].real();
    }
    const double raw_mass = detail::sampled_mass(g, q);
    const double raw_res = elliptic_residual(grid, q);
    auto pol = detail::newton_polish(g, params.c, std::move(q), opts.tol, opts.max_newton);
    return detail::assemble(params, grid, std::move(pol.q), method, raw_mass, raw_res, pol.residual,
                            pol.iterations);
}

/// Refits a ground state onto another grid (interpolation followed by Newton).
inline GroundState transfer_ground_state(const GroundState& q, const GridPtr& grid, GroundStateOptions opts = {}) {
    require(grid->params() == q.params, errc::consistency, "grid built for other parameters");
    const auto moved = resample(q.field, grid);
    std::vector<double> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::max(moved[j].real(), 0.0);
    const double raw_mass = detail::sampled_mass(*grid, v);
    const double raw_res = elliptic_residual(grid, v);
    auto pol = detail::newton_polish(*grid, q.params.c, std::move(v), opts.tol, opts.max_newton);
    return detail::assemble(q.params, grid, std::move(pol.q), q.method, raw_mass, raw_res, pol.residual,
                            pol.iterations);
}

struct GnConstantReport {
    double from_mass = 0.0;      ///< (d+2)/d ‖Q‖_{L²}^{-4/d}
    double from_weinstein = 0.0; ///< J_c(Q)
    double relative_gap() const { return std::abs(from_mass - from_weinstein) / from_mass; }
};

inline GnConstantReport gn_constant_report(const GroundState& q) {
    return {q.gn_constant, weinstein(q.field, q.params)};
}

inline json diagnostics_json(const GroundState& q) {
    return {{"sigma", q.sigma},
            {"residual", q.residual},
            {"pohozaev", {q.pohozaev[0], q.pohozaev[1]}},
            {"mass", q.mass},
            {"gn_constant", q.gn_constant},
            {"d", q.params.d},
            {"c", q.params.c},
            {"method", std::string(to_string(q.method))},
            {"amplitude", q.amplitude},
            {"h1c_sq", q.h1c_sq},
            {"potential", q.potential}};
}

} // namespace nlsip

#endif
