#ifndef NLSIP_EVOLUTION_HPP
#define NLSIP_EVOLUTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
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

enum class StopReason { completed, blowup_detected, instability };

inline std::string_view to_string(StopReason s) {
    switch (s) {
    case StopReason::completed: return "completed";
    case StopReason::blowup_detected: return "blowup-detected";
    case StopReason::instability: return "instability";
    }
    return "?";
}

enum class Direction { forward, backward };

struct Snapshot {
    double t = 0.0;
    RadialField field;
    FunctionalLedger ledger;
    double virial = 0.0;
    double grad_norm = 0.0;

    Snapshot() = default;
    Snapshot(double time, RadialField u, const ProblemParams& params)
        : t(time), field(std::move(u)), ledger(functionals(field, params)), virial(nlsip::virial(field)),
          grad_norm(ledger.grad_norm()) {}
};

struct Trajectory {
    ProblemParams params;
    std::vector<Snapshot> snapshots;
    double dt = 0.0;
    StopReason stop_reason = StopReason::completed;
    std::string diagnostic;
    std::size_t steps = 0;

    const Snapshot& front() const { return snapshots.front(); }
    const Snapshot& back() const { return snapshots.back(); }

    /// max_n |M(t_n) - M(0)| / M(0).
    double mass_drift() const {
        const double m0 = front().ledger.mass;
        double worst = 0.0;
        for (const auto& s : snapshots) worst = std::max(worst, std::abs(s.ledger.mass - m0) / m0);
        return worst;
    }

    /// max_n |E(t_n) - E(0)| relative to max(|E(0)|, ½‖u0‖²_{Ḣ¹c}). Ground states
    /// have E = 0, so the kinetic scale is the only meaningful reference.
    double energy_drift() const {
        const auto& l0 = front().ledger;
        const double scale = std::max(std::abs(l0.energy), 0.5 * l0.h1c_sq);
        double worst = 0.0;
        for (const auto& s : snapshots) worst = std::max(worst, std::abs(s.ledger.energy - l0.energy) / scale);
        return worst;
    }
};

/// Default time-step bound 0.5 h_min² of the splitting error budget.
inline double dt_limit(const RadialGrid& g, double factor = 0.5) { return factor * g.h_min() * g.h_min(); }

struct StepOptions {
    bool check_dt = true;
    double dt_factor = 0.5;
};

/// Strang splitting N(dt/2) L(dt) N(dt/2) for i u_t + (Δ + c r^{-2}) u = -|u|^{4/d} u.
/// N rotates the phase by |u|^{4/d} dt/2 exactly; L is Crank-Nicolson
/// (W - i dt/2 K) u⁺ = (W + i dt/2 K) u with K = W (Δ_h + c r^{-2}).
class StrangStepper {
public:
    StrangStepper(GridPtr grid, double dt, StepOptions opts = {}) : grid_(std::move(grid)), dt_(dt) {
        require(std::isfinite(dt) && dt > 0.0, errc::parameter, "time step must be positive");
        if (opts.check_dt) {
            const double limit = dt_limit(*grid_, opts.dt_factor);
            if (dt > limit) {
                std::ostringstream os;
                os << "dt = " << dt << " exceeds the bound " << opts.dt_factor << " h_min^2 = " << limit;
                fail(errc::stability, os.str());
            }
        }
        const auto& g = *grid_;
        const std::size_t n = g.size();
        const auto k = weighted_operator(g, g.params().c);
        for (int dir = 0; dir < 2; ++dir) {
            const double h = dir == 0 ? dt : -dt;
            const cplx half(0.0, 0.5 * h);
            Tridiagonal<cplx> lhs(n), rhs(n);
            for (std::size_t j = 0; j < n; ++j) {
                lhs.diag[j] = g.weight(j) - half * k.diag[j];
                rhs.diag[j] = g.weight(j) + half * k.diag[j];
                if (j + 1 < n) {
                    lhs.upper[j] = -half * k.upper[j];
                    lhs.lower[j] = -half * k.lower[j];
                    rhs.upper[j] = half * k.upper[j];
                    rhs.lower[j] = half * k.lower[j];
                }
            }
            lhs_[dir] = std::move(lhs);
            rhs_[dir] = std::move(rhs);
        }
        power_ = g.params().nonlinear_power();
    }

    double dt() const { return dt_; }
    const GridPtr& grid_ptr() const { return grid_; }

    void step(std::vector<cplx>& u, Direction direction = Direction::forward) const {
        const int dir = direction == Direction::forward ? 0 : 1;
        const double h = dir == 0 ? dt_ : -dt_;
        rotate(u, 0.5 * h);
        u = solve(lhs_[dir], rhs_[dir].multiply(u));
        rotate(u, 0.5 * h);
    }

    /// Linear part only (used for linear reference propagation).
    void linear_step(std::vector<cplx>& u, Direction direction = Direction::forward) const {
        const int dir = direction == Direction::forward ? 0 : 1;
        u = solve(lhs_[dir], rhs_[dir].multiply(u));
    }

private:
    void rotate(std::vector<cplx>& u, double h) const {
        for (auto& x : u) {
            const double phase = std::pow(std::abs(x), power_) * h;
            x *= cplx(std::cos(phase), std::sin(phase));
        }
    }

    GridPtr grid_;
    double dt_;
    double power_ = 0.0;
    Tridiagonal<cplx> lhs_[2];
    Tridiagonal<cplx> rhs_[2];
};

inline RadialField strang_step(const RadialField& u, double dt, const ProblemParams& params,
                               StepOptions opts = {}, Direction direction = Direction::forward) {
    require(u.grid().params() == params, errc::consistency, "field grid was built for other parameters");
    StrangStepper stepper(u.grid_ptr(), dt, opts);
    auto v = u.values();
    stepper.step(v, direction);
    for (const auto& x : v) {
        require(std::isfinite(x.real()) && std::isfinite(x.imag()), errc::numerical, "linear solve produced non-finite values");
    }
    return u.with_values(std::move(v));
}

struct EvolveOptions {
    std::size_t snapshot_stride = 1; ///< steps between retained snapshots
    StepOptions step{};
    double focus_cells = 5.0;        ///< stop once ‖u‖/‖∇u‖ spans fewer cells than this
    bool linear = false;             ///< drop the nonlinearity (reference runs)
};

namespace detail {

/// Width of the cell containing radius r.
inline double cell_width_at(const RadialGrid& g, double r) {
    const auto& f = g.faces();
    auto it = std::upper_bound(f.begin(), f.end(), r);
    std::size_t j = it == f.begin() ? 0 : static_cast<std::size_t>(it - f.begin()) - 1;
    j = std::min(j, g.size() - 1);
    return g.widths()[j];
}

} // namespace detail

/// Integrates to t_end, or until grad_norm exceeds blowup_threshold or the
/// focusing scale ‖u‖/‖∇u‖ is no longer resolved (both report blowup-detected).
inline Trajectory evolve(const RadialField& u0, const ProblemParams& params, double dt, double t_end,
                         double blowup_threshold, EvolveOptions opts = {}) {
    require(u0.grid().params() == params, errc::consistency, "field grid was built for other parameters");
    require(t_end > 0.0, errc::parameter, "t_end must be positive");
    require(opts.snapshot_stride >= 1, errc::parameter, "snapshot stride must be at least 1");
    Trajectory traj;
    traj.params = params;
    traj.dt = dt;
    traj.snapshots.emplace_back(0.0, u0, params);
    require(blowup_threshold > traj.snapshots.front().grad_norm, errc::parameter,
            "blow-up threshold must exceed the initial gradient norm");
    const StrangStepper stepper(u0.grid_ptr(), dt, opts.step);
    const auto& g = u0.grid();
    auto v = u0.values();
    const auto total = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    for (std::size_t k = 1; k <= total; ++k) {
        if (opts.linear)
            stepper.linear_step(v);
        else
            stepper.step(v);
        traj.steps = k;
        const double t = static_cast<double>(k) * dt;
        bool finite = true;
        for (const auto& x : v) finite = finite && std::isfinite(x.real()) && std::isfinite(x.imag());
        if (!finite) {
            traj.stop_reason = StopReason::instability;
            std::ostringstream os;
            os << "non-finite samples after step " << k << " (t = " << t << ")";
            traj.diagnostic = os.str();
            return traj;
        }
        const bool keep = k % opts.snapshot_stride == 0 || k == total;
        // blow-up monitors are cheap; evaluate them every step
        RadialField u(u0.grid_ptr(), v, u0.behavior());
        const double grad = std::sqrt(gradient_sq(u));
        const double scale = std::sqrt(mass(u)) / grad;
        const bool blowup = grad > blowup_threshold || scale < opts.focus_cells * detail::cell_width_at(g, scale);
        if (keep || blowup) traj.snapshots.emplace_back(t, std::move(u), params);
        if (blowup) {
            traj.stop_reason = StopReason::blowup_detected;
            std::ostringstream os;
            os << "t = " << t << ": grad_norm = " << grad << ", focusing scale = " << scale;
            traj.diagnostic = os.str();
            return traj;
        }
    }
    traj.stop_reason = StopReason::completed;
    return traj;
}

inline void write_timeseries_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,mass,energy,grad_norm,hardy,virial\n";
    os.precision(17);
    for (const auto& s : traj.snapshots) {
        os << s.t << ',' << s.ledger.mass << ',' << s.ledger.energy << ',' << s.grad_norm << ','
           << s.ledger.hardy << ',' << s.virial << '\n';
    }
}

inline void save_timeseries_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream os(path);
    require(static_cast<bool>(os), errc::config, "cannot write " + path);
    write_timeseries_csv(os, traj);
}

inline json manifest_json(const Trajectory& traj) {
    const auto& g = traj.front().field.grid();
    json grid = {{"r_max", g.r_max()}, {"n", g.size()}, {"scheme", std::string(to_string(g.scheme()))}};
    if (g.scheme() == GridScheme::graded) grid["r_min"] = g.r_min();
    return {{"d", traj.params.d},
            {"c", traj.params.c},
            {"grid", grid},
            {"dt", traj.dt},
            {"steps", traj.steps},
            {"t_final", traj.back().t},
            {"snapshots", traj.snapshots.size()},
            {"stop_reason", std::string(to_string(traj.stop_reason))},
            {"diagnostic", traj.diagnostic},
            {"mass_drift", traj.mass_drift()},
            {"energy_drift", traj.energy_drift()}};
}

} // namespace nlsip

#endif
