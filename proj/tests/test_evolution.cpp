#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <nlsip/nlsip.hpp>

using namespace nlsip;

namespace {

const StepOptions unchecked{false};

GridPtr default_grid(const ProblemParams& p) { return RadialGrid::build(p, 30.0, 4000, GridScheme::graded); }

const GroundState& ground_state(double c) {
    static std::map<double, GroundState> cache;
    auto it = cache.find(c);
    if (it == cache.end()) {
        const auto p = make_params(3, c);
        it = cache.emplace(c, solve_ground_state(p, default_grid(p), GroundStateMethod::shooting)).first;
    }
    return it->second;
}

EvolveOptions stride(std::size_t k) {
    EvolveOptions o;
    o.snapshot_stride = k;
    o.step = unchecked;
    return o;
}

template <typename F>
void expect_error(errc code, F&& f) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code) << " error";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

/// Method-of-lines reference: the semi-discrete system i u' = -(Δ_h + c r^{-2}) u - |u|^{4/d} u
/// integrated by adaptive Dormand-Prince at tight tolerance.
RadialField semi_discrete_flow(const RadialField& u0, double t) {
    using state = std::vector<double>;
    const auto& g = u0.grid();
    const std::size_t n = g.size();
    const double c = g.params().c, pw = g.params().nonlinear_power();
    state y(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = u0[j].real();
        y[n + j] = u0[j].imag();
    }
    auto rhs = [&](const state& s, state& ds, double) {
        std::vector<cplx> u(n);
        for (std::size_t j = 0; j < n; ++j) u[j] = {s[j], s[n + j]};
        const auto lu = apply_operator(g, c, u);
        for (std::size_t j = 0; j < n; ++j) {
            const cplx v = cplx(0.0, 1.0) * (lu[j] + std::pow(std::abs(u[j]), pw) * u[j]);
            ds[j] = v.real();
            ds[n + j] = v.imag();
        }
    };
    namespace ode = boost::numeric::odeint;
    ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<state>()), rhs, y, 0.0, t,
                            t / 100.0);
    std::vector<cplx> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = {y[j], y[n + j]};
    return u0.with_values(std::move(v));
}

} // namespace

TEST(StrangStep, ZeroStaysZero) {
    const auto p = make_params(3, 0.125);
    const auto u = strang_step(RadialField::zeros(default_grid(p)), 1e-3, p, unchecked);
    EXPECT_EQ(u.max_abs(), 0.0);
}

TEST(StrangStep, LocalErrorIsThirdOrder) {
    const auto p = make_params(3, 0.0);
    const auto g = RadialGrid::build(p, 10.0, 100, GridScheme::uniform_shifted);
    const auto u0 = RadialField::from_function(g, [](double r) { return std::exp(-0.5 * r * r); });
    double prev = 0.0;
    for (double dt : {5e-4, 2.5e-4, 1.25e-4}) {
        const double err = relative_l2_distance(strang_step(u0, dt, p, unchecked), semi_discrete_flow(u0, dt));
        if (prev > 0.0) {
            EXPECT_GT(prev / err, 7.0) << "dt=" << dt;
            EXPECT_LT(prev / err, 9.0) << "dt=" << dt;
        }
        prev = err;
    }
}

TEST(StrangStep, TimeReversal) {
    const auto p = make_params(3, 0.125);
    const auto u0 = RadialField::from_function(default_grid(p), [](double r) { return 1.5 * std::exp(-r * r) * cplx(1.0, 0.3 * r); });
    auto u = u0;
    for (int k = 0; k < 10; ++k) u = strang_step(u, 1e-3, p, unchecked);
    EXPECT_GT(relative_l2_distance(u, u0), 1e-4);
    for (int k = 0; k < 10; ++k) u = strang_step(u, 1e-3, p, unchecked, Direction::backward);
    EXPECT_LT(relative_l2_distance(u, u0), 1e-10);
}

TEST(StrangStep, ConservesMassPerStep) {
    const auto p = make_params(3, -1.0);
    const auto u0 = RadialField::from_function(default_grid(p), [](double r) { return 2.0 * r * std::exp(-r * r); });
    const auto u = strang_step(u0, 1e-2, p, unchecked);
    EXPECT_LT(std::abs(mass(u) - mass(u0)) / mass(u0), 1e-12);
}

TEST(StrangStep, TimeStepBound) {
    const auto p = make_params(3, 0.125);
    const auto g = default_grid(p);
    const auto u0 = RadialField::from_function(g, [](double r) { return std::exp(-r * r); });
    expect_error(errc::stability, [&] { strang_step(u0, 1e-3, p); });
    EXPECT_NO_THROW(strang_step(u0, 0.9 * dt_limit(*g), p));
    expect_error(errc::parameter, [&] { strang_step(u0, 0.0, p, unchecked); });
    expect_error(errc::consistency, [&] { strang_step(u0, 1e-3, make_params(3, 0.0), unchecked); });
}

TEST(Evolve, StandingWaveKeepsModulus) {
    const auto& q = ground_state(0.125);
    const auto traj = evolve(q.field, q.params, 5e-5, 1.0, 1e6, stride(2000));
    ASSERT_EQ(traj.stop_reason, StopReason::completed);
    ASSERT_NEAR(traj.back().t, 1.0, 1e-12);
    const double peak = q.field.max_abs();
    double worst = 0.0;
    for (const auto& s : traj.snapshots)
        for (std::size_t j = 0; j < s.field.size(); ++j)
            worst = std::max(worst, std::abs(std::abs(s.field[j]) - std::abs(q.field[j])) / peak);
    EXPECT_LE(worst, 1e-6);
    // and the phase rotates as e^{it}
    EXPECT_LT(relative_l2_distance(traj.back().field, q.field.scaled(std::polar(1.0, 1.0))), 1e-6);
}

TEST(Evolve, ConservationOnGroundStates) {
    for (double c : {0.125, -1.0}) {
        const auto& q = ground_state(c);
        const auto traj = evolve(q.field, q.params, 1e-3, 1.0, 1e6, stride(100));
        EXPECT_EQ(traj.stop_reason, StopReason::completed);
        EXPECT_LE(traj.mass_drift(), 1e-8);
        EXPECT_LE(traj.energy_drift(), 1e-6);
        EXPECT_EQ(traj.snapshots.size(), 11u);
        for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
            EXPECT_GT(traj.snapshots[k].t, traj.snapshots[k - 1].t);
            const auto led = functionals(traj.snapshots[k].field, q.params);
            EXPECT_EQ(led.energy, traj.snapshots[k].ledger.energy);
        }
    }
}

TEST(Evolve, SecondOrderInTime) {
    const auto p = make_params(3, -1.0);
    const auto g = RadialGrid::build(p, 20.0, 1000, GridScheme::graded);
    // data must follow the r^{-σ} branch at the origin, otherwise (Δ + c r^{-2}) u0 is singular
    const double sigma = indicial_exponent(p);
    const auto u0 = RadialField::from_function(
        g, [&](double r) { return 1.5 * std::pow(r, -sigma) * std::exp(-0.5 * r * r); },
        BoundaryBehavior::indicial(sigma));
    auto final_field = [&](double dt) { return evolve(u0, p, dt, 0.25, 1e6, stride(1000000)).back().field; };
    const auto ref = final_field(0.01 / 64);
    const double e1 = relative_l2_distance(final_field(0.01), ref);
    const double e2 = relative_l2_distance(final_field(0.005), ref);
    const double e3 = relative_l2_distance(final_field(0.0025), ref);
    EXPECT_GT(e1 / e2, 3.5);
    EXPECT_LT(e1 / e2, 4.5);
    EXPECT_GT(e2 / e3, 3.5);
    EXPECT_LT(e2 / e3, 4.5);
}

TEST(Evolve, LinearRegimeMatchesLinearReference) {
    const auto& q = ground_state(0.125);
    PseudoConformalParams pc{q, 1.0, 0.0, 1.0};
    const auto u0 = minimal_mass_initial(pc).scaled(1e-6);
    const auto nonlinear = evolve(u0, q.params, 1e-3, 0.5, 1e6, stride(100));
    auto lin = stride(100);
    lin.linear = true;
    const auto linear = evolve(u0, q.params, 1e-3, 0.5, 1e6, lin);
    EXPECT_EQ(nonlinear.stop_reason, StopReason::completed);
    EXPECT_EQ(linear.stop_reason, StopReason::completed);
    EXPECT_LT(relative_l2_distance(nonlinear.back().field, linear.back().field), 1e-6);
    // the linear reference is itself the Crank-Nicolson propagator applied step by step
    StrangStepper stepper(u0.grid_ptr(), 1e-3, unchecked);
    auto v = u0.values();
    for (int k = 0; k < 500; ++k) stepper.linear_step(v);
    EXPECT_LT(relative_l2_distance(u0.with_values(v), linear.back().field), 1e-12);
}

TEST(Evolve, ExactBlowupSolutionIsDetected) {
    const auto& q = ground_state(0.125);
    PseudoConformalParams pc{q, 1.0, 0.0, 1.0};
    const auto u0 = minimal_mass_initial(pc);
    const double g0 = std::sqrt(gradient_sq(u0));
    const auto traj = evolve(u0, q.params, 5e-4, 1.0, 8.0 * g0, stride(100));
    EXPECT_EQ(traj.stop_reason, StopReason::blowup_detected);
    EXPECT_LT(traj.back().t, 1.0);
    EXPECT_FALSE(traj.diagnostic.empty());
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k)
        EXPECT_GT(traj.snapshots[k].grad_norm, traj.snapshots[k - 1].grad_norm);
    EXPECT_LT(traj.mass_drift(), 1e-8);
}

TEST(Evolve, RejectsBadArguments) {
    const auto& q = ground_state(0.125);
    const double g0 = std::sqrt(gradient_sq(q.field));
    expect_error(errc::parameter, [&] { evolve(q.field, q.params, 1e-3, 1.0, 0.5 * g0, stride(1)); });
    expect_error(errc::parameter, [&] { evolve(q.field, q.params, 1e-3, -1.0, 1e6, stride(1)); });
    expect_error(errc::parameter, [&] { evolve(q.field, q.params, 1e-3, 1.0, 1e6, stride(0)); });
    expect_error(errc::stability, [&] { evolve(q.field, q.params, 1e-3, 1.0, 1e6); });
}

TEST(Evolve, Exports) {
    const auto& q = ground_state(0.125);
    const auto traj = evolve(q.field, q.params, 1e-2, 0.05, 1e6, stride(1));
    std::ostringstream os;
    write_timeseries_csv(os, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,mass,energy,grad_norm,hardy,virial");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, traj.snapshots.size());
    const auto m = manifest_json(traj);
    EXPECT_EQ(m["stop_reason"], "completed");
    EXPECT_EQ(m["d"], 3);
    EXPECT_DOUBLE_EQ(m["c"].get<double>(), 0.125);
    EXPECT_DOUBLE_EQ(m["dt"].get<double>(), 1e-2);
    EXPECT_EQ(m["grid"]["n"], 4000);
    EXPECT_EQ(m["steps"], 5);
}
