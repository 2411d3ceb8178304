#ifndef NLSIP_BLOWUP_HPP
#define NLSIP_BLOWUP_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "evolution.hpp"
#include "field_io.hpp"
#include "functionals.hpp"
#include "ground_state.hpp"

namespace nlsip {

/// Parameters of S_{Q,T,θ,λ}(t,x) = e^{iθ} e^{iλ²/(T-t)} e^{-i|x|²/(4(T-t))}
///   (λ/(T-t))^{d/2} Q(λx/(T-t)).
struct PseudoConformalParams {
    GroundState Q;
    double T = 1.0;
    double theta = 0.0;
    double lambda = 1.0;

    void validate() const {
        require(std::isfinite(T) && T > 0.0, errc::parameter, "blow-up time T must be positive");
        require(std::isfinite(lambda) && lambda > 0.0, errc::parameter, "scale lambda must be positive");
        require(std::isfinite(theta), errc::parameter, "phase theta must be finite");
    }

    /// Spatial scale (T-t)/λ of S(t).
    double width(double t) const { return (T - t) / lambda; }
};

inline RadialField pseudo_conformal_field(const PseudoConformalParams& p, double t, const GridPtr& grid) {
    p.validate();
    require(grid->params() == p.Q.params, errc::consistency, "grid built for other parameters");
    if (!(t < p.T) || t < 0.0) fail(errc::domain, "pseudo-conformal field needs 0 <= t < T");
    const double tau = p.T - t;
    const double scale = p.lambda / tau;
    const int d = p.Q.params.d;
    const double amp = std::pow(scale, 0.5 * d);
    std::vector<cplx> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double r = grid->node(j);
        const double phase = p.theta + p.lambda * p.lambda / tau - r * r / (4.0 * tau);
        v[j] = amp * p.Q.field.value_at(scale * r) * cplx(std::cos(phase), std::sin(phase));
    }
    return RadialField(grid, std::move(v), p.Q.field.behavior());
}

/// u0 = S(0): the minimal-mass initial datum.
inline RadialField minimal_mass_initial(const PseudoConformalParams& p, const GridPtr& grid) {
    return pseudo_conformal_field(p, 0.0, grid);
}

inline RadialField minimal_mass_initial(const PseudoConformalParams& p) {
    return minimal_mass_initial(p, p.Q.field.grid_ptr());
}

/// u e^{iβ|x|²}.
inline RadialField chirp(const RadialField& u, double beta) {
    std::vector<cplx> v(u.values());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double r = u.grid().node(j);
        v[j] *= cplx(std::cos(beta * r * r), std::sin(beta * r * r));
    }
    return u.with_values(std::move(v));
}

/// ∫ x·Im(u ∇ū), with the product evaluated across cell faces.
inline double momentum_term(const RadialField& u) {
    const auto& g = u.grid();
    const auto& f = g.faces();
    const double area = sphere_area(g.dimension());
    double s = 0.0;
    for (std::size_t k = 1; k < u.size(); ++k)
        s += area * std::pow(f[k], g.dimension()) * std::imag(u[k - 1] * std::conj(u[k]));
    return s;
}

// ---------------------------------------------------------------- virial

struct VirialCheck {
    double energy = 0.0;              ///< E(u0)
    double momentum = 0.0;            ///< ∫x·Im(u0∇ū0)
    double virial0 = 0.0;             ///< ∫|x|²|u0|²
    std::vector<double> second_difference; ///< central second differences at interior snapshots
    double second_difference_error = 0.0;  ///< max relative deviation from 16E
    std::array<double, 3> fit{};      ///< quadratic fit (a2, a1, a0): V ≈ a2 t² + a1 t + a0
    std::array<double, 3> expected{}; ///< (8E, -4 momentum, virial0)
    std::array<double, 3> fit_error{}; ///< relative deviations
    double fit_residual = 0.0;        ///< rms of the fit residual

    double value_at(double t) const { return fit[0] * t * t + fit[1] * t + fit[2]; }
};

namespace detail {

/// Least-squares quadratic via normal equations on centred, scaled abscissae.
inline std::array<double, 3> fit_quadratic(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    double mean = 0.0;
    for (double x : t) mean += x;
    mean /= static_cast<double>(n);
    double span = 0.0;
    for (double x : t) span = std::max(span, std::abs(x - mean));
    if (span == 0.0) span = 1.0;
    double a[3][4] = {};
    for (std::size_t i = 0; i < n; ++i) {
        const double s = (t[i] - mean) / span;
        const double b[3] = {s * s, s, 1.0};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) a[r][c] += b[r] * b[c];
            a[r][3] += b[r] * y[i];
        }
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        require(std::abs(a[col][col]) > 0.0, errc::numerical, "degenerate quadratic fit");
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
        }
    }
    const double q2 = a[0][3] / a[0][0];
    const double q1 = a[1][3] / a[1][1];
    const double q0 = a[2][3] / a[2][2];
    // back to V = A t² + B t + C
    const double A = q2 / (span * span);
    const double B = q1 / span - 2.0 * A * mean;
    const double C = q0 - q1 * mean / span + A * mean * mean;
    return {A, B, C};
}

inline double relative_error(double value, double expected, double scale) {
    return std::abs(value - expected) / std::max(std::abs(expected), scale);
}

} // namespace detail

/// Checks d²/dt² ∫|x|²|u|² = 16E(u0) and
/// ∫|x|²|u(t)|² = ∫|x|²|u0|² - 4t ∫x·Im(u0∇ū0) + 8t²E(u0).
/// Coefficients that vanish exactly (zero momentum of real data) are compared
/// on the scale of the virial itself: |a1| T / V0 and |a2| T² / V0.
inline VirialCheck virial_series_check(const Trajectory& traj) {
    const auto& snaps = traj.snapshots;
    if (snaps.size() < 5) fail(errc::insufficient_data, "virial check needs at least 5 snapshots");
    VirialCheck out;
    const auto& u0 = snaps.front().field;
    out.energy = snaps.front().ledger.energy;
    out.momentum = momentum_term(u0);
    out.virial0 = snaps.front().virial;
    std::vector<double> t, v;
    for (const auto& s : snaps) {
        t.push_back(s.t);
        v.push_back(s.virial);
    }
    const double span = t.back() - t.front();
    const double target = 16.0 * out.energy;
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
        const double h1 = t[k] - t[k - 1];
        const double h2 = t[k + 1] - t[k];
        const double d2 = 2.0 * (h1 * (v[k + 1] - v[k]) - h2 * (v[k] - v[k - 1])) / (h1 * h2 * (h1 + h2));
        out.second_difference.push_back(d2);
        out.second_difference_error = std::max(out.second_difference_error,
                                               detail::relative_error(d2, target, 2.0 * out.virial0 / (span * span)));
    }
    out.fit = detail::fit_quadratic(t, v);
    out.expected = {8.0 * out.energy, -4.0 * out.momentum, out.virial0};
    const double scale[3] = {out.virial0 / (span * span), out.virial0 / span, out.virial0};
    for (int i = 0; i < 3; ++i) out.fit_error[i] = detail::relative_error(out.fit[i], out.expected[i], scale[i]);
    double rss = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) rss += std::pow(out.value_at(t[k]) - v[k], 2);
    out.fit_residual = std::sqrt(rss / static_cast<double>(t.size()));
    return out;
}

inline json to_json(const VirialCheck& v) {
    return {{"energy", v.energy},
            {"momentum", v.momentum},
            {"virial0", v.virial0},
            {"fit", v.fit},
            {"expected", v.expected},
            {"fit_error", v.fit_error},
            {"fit_residual", v.fit_residual},
            {"second_difference_error", v.second_difference_error}};
}

// ---------------------------------------------------------------- concentration

enum class WindowRule { sqrt_remaining, quarter_remaining, custom };

inline std::string_view to_string(WindowRule r) {
    switch (r) {
    case WindowRule::sqrt_remaining: return "sqrt";
    case WindowRule::quarter_remaining: return "quarter";
    case WindowRule::custom: return "custom";
    }
    return "?";
}

inline WindowRule parse_window_rule(std::string_view s) {
    if (s == "sqrt") return WindowRule::sqrt_remaining;
    if (s == "quarter") return WindowRule::quarter_remaining;
    if (s == "custom") return WindowRule::custom;
    fail(errc::parameter, "unknown window rule '" + std::string(s) + "'");
}

struct WindowFunction {
    WindowRule rule = WindowRule::sqrt_remaining;
    std::function<double(double)> custom; ///< a(T - t) for the custom rule

    double operator()(double remaining) const {
        switch (rule) {
        case WindowRule::sqrt_remaining: return std::sqrt(remaining);
        case WindowRule::quarter_remaining: return std::pow(remaining, 0.25);
        case WindowRule::custom:
            require(static_cast<bool>(custom), errc::parameter, "custom window rule without a function");
            return custom(remaining);
        }
        return 0.0;
    }
};

struct ConcentrationScan {
    std::vector<double> t;
    std::vector<double> a;
    std::vector<double> center; ///< always 0 for radial sources
    std::vector<double> captured;
    double reference_mass = 0.0;
    double total_mass = 0.0;
    std::vector<std::string> warnings;

    /// captured / reference at the last time.
    double tail_fraction() const { return captured.empty() ? 0.0 : captured.back() / reference_mass; }
};

namespace detail {

inline void scan_point(ConcentrationScan& scan, double t, double a, const RadialField& u) {
    if (a > u.grid().r_max()) {
        scan.warnings.push_back("window radius " + std::to_string(a) + " exceeds r_max at t = " + std::to_string(t));
    }
    scan.t.push_back(t);
    scan.a.push_back(a);
    scan.center.push_back(0.0);
    scan.captured.push_back(ball_mass(u, a));
}

} // namespace detail

/// Captured mass ∫_{|x| <= a(t)} |u|² along a trajectory with blow-up time T.
inline ConcentrationScan concentration_scan(const Trajectory& traj, double T, const WindowFunction& window,
                                            double reference_mass) {
    ConcentrationScan scan;
    scan.reference_mass = reference_mass;
    scan.total_mass = traj.front().ledger.mass;
    for (const auto& s : traj.snapshots) {
        if (s.t >= T) break;
        detail::scan_point(scan, s.t, window(T - s.t), s.field);
    }
    return scan;
}

/// Captured mass of the exact solution S at the given times, sampled on `grid`.
inline ConcentrationScan concentration_scan(const PseudoConformalParams& p, const std::vector<double>& times,
                                            const WindowFunction& window, const GridPtr& grid) {
    ConcentrationScan scan;
    scan.reference_mass = p.Q.mass;
    scan.total_mass = p.Q.mass;
    for (double t : times) detail::scan_point(scan, t, window(p.T - t), pseudo_conformal_field(p, t, grid));
    return scan;
}

inline void write_scan_csv(std::ostream& os, const ConcentrationScan& scan) {
    os << "t,a,captured_mass,reference_mass\n";
    os.precision(17);
    for (std::size_t k = 0; k < scan.t.size(); ++k)
        os << scan.t[k] << ',' << scan.a[k] << ',' << scan.captured[k] << ',' << scan.reference_mass << '\n';
}

inline void save_scan_csv(const std::string& path, const ConcentrationScan& scan) {
    std::ofstream os(path);
    require(static_cast<bool>(os), errc::config, "cannot write " + path);
    write_scan_csv(os, scan);
}

// ---------------------------------------------------------------- blow-up rate

struct RateSample {
    double t = 0.0;
    double grad_norm = 0.0;
};

struct RateFit {
    double T_est = 0.0;
    double C = 0.0;            ///< min over the tail of grad_norm √(T - t)
    double rate_constant = 0.0; ///< mean over the tail of grad_norm (T - t)
    double rate_spread = 0.0;   ///< (max - min) / mean of grad_norm (T - t) over the tail
    std::size_t tail_size = 0;
};

inline std::vector<RateSample> rate_samples(const Trajectory& traj) {
    std::vector<RateSample> s;
    for (const auto& snap : traj.snapshots) s.push_back({snap.t, snap.grad_norm});
    return s;
}

/// T from a linear fit of 1/grad_norm against t over the last five samples.
inline double extrapolate_blowup_time(const std::vector<RateSample>& samples) {
    if (samples.size() < 5) fail(errc::insufficient_data, "T extrapolation needs at least 5 samples");
    double st = 0, sy = 0, stt = 0, sty = 0;
    const std::size_t first = samples.size() - 5;
    for (std::size_t k = first; k < samples.size(); ++k) {
        const double t = samples[k].t;
        const double y = 1.0 / samples[k].grad_norm;
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double slope = (5.0 * sty - st * sy) / (5.0 * stt - st * st);
    const double icpt = (sy - slope * st) / 5.0;
    if (!(slope < 0.0)) fail(errc::not_applicable, "1/grad_norm is not decreasing; no blow-up to extrapolate");
    return -icpt / slope;
}

/// Tail = samples with T - t <= tail_factor (T - t_last).
inline RateFit blowup_rate_fit(const std::vector<RateSample>& samples, double T_est, double tail_factor = 2.0) {
    require(!samples.empty(), errc::insufficient_data, "no samples");
    const double last_gap = T_est - samples.back().t;
    if (!(last_gap > 0.0)) fail(errc::not_applicable, "estimated blow-up time precedes the last sample");
    RateFit fit;
    fit.T_est = T_est;
    fit.C = std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    for (const auto& s : samples) {
        const double gap = T_est - s.t;
        if (gap > tail_factor * last_gap) continue;
        fit.C = std::min(fit.C, s.grad_norm * std::sqrt(gap));
        const double k = s.grad_norm * gap;
        lo = std::min(lo, k);
        hi = std::max(hi, k);
        sum += k;
        ++fit.tail_size;
    }
    fit.rate_constant = sum / static_cast<double>(fit.tail_size);
    fit.rate_spread = (hi - lo) / fit.rate_constant;
    return fit;
}

inline RateFit blowup_rate_fit(const Trajectory& traj, double T_est, double tail_factor = 2.0) {
    if (traj.stop_reason != StopReason::blowup_detected)
        fail(errc::not_applicable, "blow-up rate fit needs a blow-up trajectory");
    return blowup_rate_fit(rate_samples(traj), T_est, tail_factor);
}

/// Samples (t, ‖∇S(t)‖) of the exact solution.
inline std::vector<RateSample> rate_samples(const PseudoConformalParams& p, const std::vector<double>& times,
                                            const GridPtr& grid) {
    std::vector<RateSample> s;
    for (double t : times) s.push_back({t, std::sqrt(gradient_sq(pseudo_conformal_field(p, t, grid)))});
    return s;
}

inline json to_json(const RateFit& f) {
    return {{"T_est", f.T_est}, {"C", f.C}, {"rate_constant", f.rate_constant},
            {"rate_spread", f.rate_spread}, {"tail_size", f.tail_size}};
}

// ---------------------------------------------------------------- Banica

/// φ(x) = |x|² for |x| < 1, flattened by a cubic smoothstep on 1 <= |x| <= 2
/// and constant beyond; φ_R = R² φ(x/R).
struct BanicaWeight {
    double R = 1.0;

    static double profile(double x) {
        if (x <= 1.0) return x * x;
        const double t = std::min(x - 1.0, 1.0);
        return 1.0 + 2.0 * (t + t * t / 2.0 - t * t * t - t * t * t * t / 4.0 + 2.0 * std::pow(t, 5) / 5.0);
    }
    static double profile_derivative(double x) {
        if (x <= 1.0) return 2.0 * x;
        if (x >= 2.0) return 0.0;
        const double t = x - 1.0;
        return 2.0 * x * (1.0 - 3.0 * t * t + 2.0 * t * t * t);
    }
    double operator()(double r) const { return R * R * profile(r / R); }
    double derivative(double r) const { return R * profile_derivative(r / R); }
};

struct BanicaResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double energy = 0.0;
    bool holds(double slack = 1e-6) const { return lhs <= rhs * (1.0 + slack); }
};

/// |∫∇φ·Im(u∇ū)| against √(2E(u)) (∫|∇φ|²|u|²)^{1/2}. Both integrals are
/// taken across cell faces with ∇φ = Δφ/Δr there, which makes the discrete
/// statement follow from E(|u|) >= 0 exactly as in the continuum.
inline BanicaResult banica_check(const RadialField& u, const BanicaWeight& phi, double minimal_mass,
                                 double mass_tolerance = 0.01) {
    const ProblemParams& params = u.grid().params();
    const double m = mass(u);
    if (std::abs(m - minimal_mass) > mass_tolerance * minimal_mass) {
        std::ostringstream os;
        os << "mass " << m << " is not the minimal mass " << minimal_mass;
        fail(errc::precondition, os.str());
    }
    const auto& g = u.grid();
    const auto& f = g.faces();
    const auto& nodes = g.nodes();
    const double area = sphere_area(g.dimension());
    double lhs = 0.0, weight = 0.0;
    for (std::size_t k = 1; k < u.size(); ++k) {
        const double dr = nodes[k] - nodes[k - 1];
        const double grad_phi = (phi(nodes[k]) - phi(nodes[k - 1])) / dr;
        const double surface = area * std::pow(f[k], g.dimension() - 1);
        lhs += surface * grad_phi * std::imag(u[k - 1] * std::conj(u[k]));
        weight += surface * dr * grad_phi * grad_phi * std::abs(u[k - 1]) * std::abs(u[k]);
    }
    BanicaResult out;
    out.energy = functionals(u, params).energy;
    out.lhs = std::abs(lhs);
    out.rhs = std::sqrt(2.0 * std::max(out.energy, 0.0)) * std::sqrt(weight);
    return out;
}

// ---------------------------------------------------------------- renormalisation

struct Renormalized {
    RadialField v;
    double lambda = 0.0;
    double energy = 0.0;      ///< E(v_n)
    double h1_distance = 0.0; ///< min over α of ‖e^{iα}v - Q‖_{H¹}
    double phase = 0.0;       ///< minimising α
};

namespace detail {

/// H¹ inner product ∫ u v̄ + ∫ ∇u·∇v̄ consistent with mass and gradient_sq.
inline cplx h1_inner(const RadialField& u, const RadialField& v) {
    const auto& g = u.grid();
    const auto& f = g.flux();
    const std::size_t n = u.size();
    const double sigma = g.core_sigma();
    cplx s = sigma * sigma * g.core_coefficient() * u[0] * std::conj(v[0]);
    for (std::size_t j = 0; j < n; ++j) s += g.weight(j) * u[j] * std::conj(v[j]);
    for (std::size_t k = 1; k < n; ++k) s += f[k] * (u[k] - u[k - 1]) * std::conj(v[k] - v[k - 1]);
    s += f[n] * u[n - 1] * std::conj(v[n - 1]);
    return s;
}

} // namespace detail

/// v_n = λ_n^{d/2} u(t_n, λ_n ·) on the reference grid, λ_n = ‖Q‖_{Ḣ¹c}/‖u(t_n)‖_{Ḣ¹c}.
inline Renormalized renormalize_snapshot(const Trajectory& traj, std::size_t n, const GroundState& reference) {
    require(n < traj.snapshots.size(), errc::parameter, "snapshot index out of range");
    const auto& snap = traj.snapshots[n];
    const auto& params = reference.params;
    require(snap.field.grid().params() == params, errc::consistency, "trajectory and reference differ in (d, c)");
    require(snap.ledger.h1c_sq > 0.0, errc::singular_functional, "snapshot has non-positive Ḣ¹_c norm");
    Renormalized out;
    out.lambda = std::sqrt(reference.h1c_sq / snap.ledger.h1c_sq);
    const auto& target = reference.field.grid_ptr();
    if (out.lambda * target->r_max() > snap.field.grid().r_max() * (1.0 + 1e-12) &&
        reference.field.value_at(snap.field.grid().r_max() / out.lambda) != cplx{}) {
        fail(errc::regrid, "renormalised snapshot needs samples beyond the trajectory grid");
    }
    out.v = resample(snap.field, target, out.lambda, std::pow(out.lambda, 0.5 * params.d));
    out.energy = functionals(out.v, params).energy;
    const cplx cross = detail::h1_inner(out.v, reference.field);
    out.phase = -std::arg(cross);
    const double vv = detail::h1_inner(out.v, out.v).real();
    const double qq = detail::h1_inner(reference.field, reference.field).real();
    out.h1_distance = std::sqrt(std::max(vv + qq - 2.0 * std::abs(cross), 0.0));
    return out;
}

} // namespace nlsip

#endif
