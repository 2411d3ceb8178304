#include <cmath>
#include <map>
#include <utility>

#include <gtest/gtest.h>

#include <nlsip/nlsip.hpp>

#include "oracles.hpp"

using namespace nlsip;

namespace {

GridPtr default_grid(const ProblemParams& p, double r_max = 30.0, std::size_t n = 4000) {
    return RadialGrid::build(p, r_max, n, GridScheme::graded);
}

const GroundState& cached(int d, double c, GroundStateMethod m = GroundStateMethod::shooting) {
    static std::map<std::tuple<int, double, int>, GroundState> cache;
    const auto key = std::make_tuple(d, c, static_cast<int>(m));
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto p = make_params(d, c);
        it = cache.emplace(key, solve_ground_state(p, default_grid(p), m)).first;
    }
    return it->second;
}

const oracle::ShootingQ0& q0_oracle() {
    static const auto o = oracle::ShootingQ0::solve(3);
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

} // namespace

TEST(GroundState, ClassicalMassMatchesShootingOracle) {
    const auto& o = q0_oracle();
    const auto& q = cached(3, 0.0);
    EXPECT_LT(std::abs(q.mass - o.mass) / o.mass, 1e-3) << "solver " << q.mass << " oracle " << o.mass;
    EXPECT_NEAR(q.field.value_at(1e-3).real(), o.a, 1e-3 * o.a);
}

TEST(GroundState, ShippedPairsAreCertified) {
    for (auto [d, c] : {std::pair{3, 0.125}, {3, 0.0625}, {3, -1.0}, {3, -2.0}, {3, 0.0}, {4, 0.5}}) {
        const auto& q = cached(d, c);
        EXPECT_LE(q.pohozaev[0], 1e-4) << d << ' ' << c;
        EXPECT_LE(q.pohozaev[1], 1e-4) << d << ' ' << c;
        EXPECT_TRUE(q.certified());
        EXPECT_LE(q.residual, 5e-7);
        EXPECT_NEAR(q.sigma, indicial_exponent(q.params), 1e-15);
        // mass-critical ground states have zero energy; Pohozaev gives A = (d+2)/d ‖Q‖²_{Ḣ¹c}
        const auto led = functionals(q.field, q.params);
        EXPECT_LT(std::abs(led.energy), 1e-4 * led.h1c_sq);
        EXPECT_LT(std::abs(led.potential - (d + 2.0) / d * led.h1c_sq), 1e-4 * led.potential);
        EXPECT_LT(std::abs(led.mass - 2.0 / d * led.h1c_sq), 1e-4 * led.mass);
    }
}

TEST(GroundState, GagliardoNirenbergConstantAgreement) {
    for (double c : {0.125, -1.0, 0.0}) {
        const auto& q = cached(3, c);
        const auto rep = gn_constant_report(q);
        EXPECT_LE(rep.relative_gap(), 1e-4) << "c=" << c;
        EXPECT_DOUBLE_EQ(rep.from_mass, 5.0 / 3.0 * std::pow(q.mass, -2.0 / 3.0));
    }
}

TEST(GroundState, MassOrdering) {
    const double m0 = cached(3, 0.0).mass;
    EXPECT_LT(m0, cached(3, -1.0).mass);
    EXPECT_LT(cached(3, -1.0).mass, cached(3, -2.0).mass);
    EXPECT_GT(m0, cached(3, 0.0625).mass);
    EXPECT_GT(cached(3, 0.0625).mass, cached(3, 0.125).mass);
}

TEST(GroundState, DoubledDomainChangesLittle) {
    for (double c : {0.125, -1.0}) {
        const auto p = make_params(3, c);
        const auto& q = cached(3, c);
        const auto big = solve_ground_state(p, default_grid(p, 60.0, 4200), GroundStateMethod::shooting);
        EXPECT_LT(std::abs(big.mass - q.mass) / q.mass, 1e-3);
        EXPECT_LT(std::abs(big.gn_constant - q.gn_constant) / q.gn_constant, 1e-3);
        EXPECT_LT(std::abs(weinstein(big.field, p) - weinstein(q.field, p)) / q.gn_constant, 1e-3);
    }
}

TEST(GroundState, ShootingAndGradientFlowAgree) {
    for (double c : {0.125, 0.0, -1.0}) {
        const auto& s = cached(3, c);
        const auto& g = cached(3, c, GroundStateMethod::gradient_flow);
        EXPECT_EQ(g.method, GroundStateMethod::gradient_flow);
        EXPECT_LT(std::abs(s.l2_norm() - g.l2_norm()) / s.l2_norm(), 1e-3) << "c=" << c;
        EXPECT_TRUE(g.certified());
    }
}

TEST(GroundState, PositiveAndMonotoneBeyondMaximum) {
    for (double c : {0.125, -1.0, -2.0}) {
        const auto& q = cached(3, c);
        std::size_t peak = 0;
        for (std::size_t j = 0; j < q.field.size(); ++j) {
            EXPECT_GE(q.field[j].real(), 0.0);
            EXPECT_EQ(q.field[j].imag(), 0.0);
            if (q.field[j].real() > q.field[peak].real()) peak = j;
        }
        if (c > 0) EXPECT_EQ(peak, 0u);
        if (c < 0) EXPECT_GT(q.field.grid().node(peak), 0.1);
        for (std::size_t j = peak + 1; j < q.field.size(); ++j) {
            if (q.field[j - 1].real() < 1e-12) break;
            EXPECT_LE(q.field[j].real(), q.field[j - 1].real()) << "j=" << j;
        }
    }
}

TEST(GroundState, ResidualOfExactProfileIsSecondOrder) {
    const auto& o = q0_oracle();
    const auto p = make_params(3, 0.0);
    auto residual = [&](const GridPtr& g) { return elliptic_residual(g, o.sample(g->nodes())); };
    // the uniform grid's origin cell is only consistent to O(1) locally, so its
    // weighted residual falls like h^{3/2}
    const double u1 = residual(RadialGrid::build(p, 20.0, 500, GridScheme::uniform_shifted));
    const double u2 = residual(RadialGrid::build(p, 20.0, 1000, GridScheme::uniform_shifted));
    const double u3 = residual(RadialGrid::build(p, 20.0, 2000, GridScheme::uniform_shifted));
    EXPECT_GT(u1 / u2, 2.5);
    EXPECT_GT(u2 / u3, 2.5);
    const double g1 = residual(default_grid(p, 30.0, 1000));
    const double g2 = residual(default_grid(p, 30.0, 2000));
    const double g3 = residual(default_grid(p, 30.0, 4000));
    EXPECT_GT(g1 / g2, 3.5);
    EXPECT_LT(g1 / g2, 4.5);
    EXPECT_GT(g2 / g3, 3.5);
    EXPECT_LT(g2 / g3, 4.5);
}

TEST(GroundState, SolverMassConvergesUnderRefinement) {
    const auto p = make_params(3, 0.125);
    double m[3];
    std::size_t n = 1000;
    for (double& v : m) {
        v = solve_ground_state(p, default_grid(p, 30.0, n), GroundStateMethod::shooting).mass;
        n *= 2;
    }
    EXPECT_GT(std::abs(m[0] - m[1]) / std::abs(m[1] - m[2]), 3.0);
}

TEST(GroundState, TransferAndDiagnostics) {
    const auto& q = cached(3, 0.125);
    const auto p = q.params;
    const auto moved = transfer_ground_state(q, RadialGrid::build(p, 25.0, 3000, GridScheme::graded));
    EXPECT_LT(std::abs(moved.mass - q.mass) / q.mass, 1e-4);
    const auto j = diagnostics_json(q);
    for (const char* key : {"sigma", "residual", "pohozaev", "mass", "gn_constant", "d", "c", "method"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["method"], "shooting");
    EXPECT_EQ(parse_method("gradient-flow"), GroundStateMethod::gradient_flow);
    expect_error(errc::parameter, [] { parse_method("annealing"); });
}

TEST(GroundState, Errors) {
    const auto p = make_params(3, 0.125);
    const auto g = RadialGrid::build(p, 30.0, 1000, GridScheme::graded);
    GroundStateOptions narrow;
    narrow.amplitude_lo = 1e-3;
    narrow.amplitude_hi = 2e-3;
    expect_error(errc::no_convergence, [&] { solve_ground_state(p, g, GroundStateMethod::shooting, narrow); });
    GroundStateOptions strict;
    strict.tol = 1e-16;
    strict.max_newton = 2;
    expect_error(errc::convergence, [&] { solve_ground_state(p, g, GroundStateMethod::shooting, strict); });
    expect_error(errc::consistency, [&] { solve_ground_state(make_params(3, 0.0), g, GroundStateMethod::shooting); });
    expect_error(errc::parameter, [&] { solve_ground_state(ProblemParams{3, 0.25}, g, GroundStateMethod::shooting); });
}

TEST(TranslatedBump, IncreasesTowardClassicalConstant) {
    const auto& q0 = cached(3, 0.0);
    const double cgn0 = q0.gn_constant;
    for (double c : {-1.0, -2.0}) {
        const auto vals = translated_bump_supremum(make_params(3, c), q0, {0.0, 4.0, 8.0, 12.0});
        ASSERT_EQ(vals.size(), 4u);
        for (std::size_t k = 0; k < vals.size(); ++k) {
            EXPECT_LT(vals[k].j_c, cgn0);
            // the Hardy term only lowers the functional
            EXPECT_LT(vals[k].j_c, vals[k].j_0);
            EXPECT_LT(std::abs(vals[k].j_0 - cgn0) / cgn0, 5e-3) << "quadrature of J_0 at s=" << vals[k].shift;
            if (k > 0) EXPECT_GT(vals[k].j_c, vals[k - 1].j_c);
        }
        EXPECT_LT((cgn0 - vals.back().j_c) / cgn0, 0.05);
        // the radial ground state at the same c sits strictly below the non-radial supremum
        EXPECT_LT(cached(3, c).gn_constant, cgn0);
    }
}

TEST(TranslatedBump, Errors) {
    const auto& q0 = cached(3, 0.0);
    expect_error(errc::truncation, [&] { translated_bump_supremum(make_params(3, -1.0), q0, {17.0}); });
    expect_error(errc::parameter, [&] { translated_bump_supremum(make_params(3, 0.1), q0, {4.0}); });
    expect_error(errc::consistency, [&] { translated_bump_supremum(make_params(3, -1.0), cached(3, -1.0), {4.0}); });
}
