#include <cmath>

#include <gtest/gtest.h>

#include <nlsip/nlsip.hpp>

using namespace nlsip;

namespace {

const ProblemParams params = make_params(3, -1.0);

CartesianGridPtr box(int n = 64, double L = 8.0) { return CartesianGrid::build(params, L, n); }

template <typename F>
void expect_error(errc code, F&& f) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code) << " error";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

ProfileSuite demo_suite(std::size_t N = 16) {
    auto s = default_profile_suite();
    s.params = params;
    s.seed = 7;
    s.N = N;
    return s;
}

const SuiteRun& demo_run() {
    static const SuiteRun run = run_profile_suite(demo_suite());
    return run;
}

} // namespace

TEST(Synth, CleanSingleProfileIsPureTranslate) {
    const auto g = box();
    const auto V = make_profile(g, {ProfileSpec::Kind::gaussian, 1.0, 0.6});
    const auto seq = synth_sequence({V}, {ShiftRule::Kind::diagonals, 1}, 4, 0.0, 3);
    ASSERT_EQ(seq.size(), 4u);
    for (std::size_t n = 1; n <= 4; ++n) {
        const int s = static_cast<int>(n);
        EXPECT_EQ(seq.shifts[0][n - 1], (Index3{s, s, s}));
        EXPECT_EQ(seq.members[n - 1].values(), V.translated({s, s, s}).values());
    }
}

TEST(Synth, BumpsOnAxesSeparateLinearly) {
    const auto g = box();
    const ProfileSpec bump{ProfileSpec::Kind::bump, 1.0, 1.0};
    const auto V = make_profile(g, bump);
    const auto seq = synth_sequence({V, V}, {ShiftRule::Kind::axes, 8}, 3, 0.0);
    const double h = g->spacing();
    double prev = 0.0;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto a = seq.shifts[0][n - 1], b = seq.shifts[1][n - 1];
        const double dist = h * std::hypot(double(a[0] - b[0]), double(a[1] - b[1]), double(a[2] - b[2]));
        EXPECT_DOUBLE_EQ(dist, 16.0 * n * h);
        EXPECT_GT(dist, prev);
        prev = dist;
    }
}

TEST(Synth, NoisyMassWithinCrossTermBound) {
    const auto g = box();
    const auto V1 = make_profile(g, {ProfileSpec::Kind::gaussian, 1.0, 0.6});
    const auto V2 = make_profile(g, {ProfileSpec::Kind::gaussian, 0.6, 0.5});
    const auto seq = synth_sequence({V1, V2}, {ShiftRule::Kind::diagonals, 1}, 6, 1e-3, 11);
    for (std::size_t n = 0; n < seq.size(); ++n) {
        std::vector<CartesianField> parts{V1.translated(seq.shifts[0][n]), V2.translated(seq.shifts[1][n]),
                                          seq.noise[n]};
        double sum = 0.0, bound = 0.0;
        for (std::size_t a = 0; a < parts.size(); ++a) {
            sum += cartesian::mass(parts[a]);
            for (std::size_t b = a + 1; b < parts.size(); ++b)
                bound += 2.0 * std::sqrt(cartesian::mass(parts[a]) * cartesian::mass(parts[b]));
        }
        EXPECT_LE(std::abs(cartesian::mass(seq.members[n]) - sum), bound * (1.0 + 1e-12));
        double peak = 0.0;
        for (const auto& v : seq.noise[n].values()) peak = std::max(peak, std::abs(v));
        EXPECT_NEAR(peak, 1e-3 / (n + 1.0), 1e-15);
    }
}

TEST(Synth, RejectsShiftsThatLeaveTheBox) {
    const auto g = box();
    const auto V = make_profile(g, {ProfileSpec::Kind::bump, 1.0, 1.0});
    expect_error(errc::generation, [&] { synth_sequence({V}, {ShiftRule::Kind::axes, 8}, 5, 0.0); });
    expect_error(errc::generation, [&] { synth_sequence({}, {}, 4, 0.0); });
    expect_error(errc::generation, [&] { synth_sequence({V}, {}, 0, 0.0); });
    expect_error(errc::generation, [&] { synth_sequence({V}, {}, 4, -1.0); });
}

TEST(Eta, ZeroFieldIsZero) { EXPECT_EQ(eta_surrogate(CartesianField::zeros(box()), 1.5).value, 0.0); }

TEST(Eta, LocatesBumpAndIsTranslationEquivariant) {
    const auto g = box();
    // a window narrower than the bump; the gradient part pulls the maximiser off the peak
    const auto V = make_profile(g, {ProfileSpec::Kind::bump, 1.0, 3.0});
    const auto e = eta_surrogate(V, 0.75);
    EXPECT_GT(e.value, 0.0);
    const auto c = g->point(g->centre());
    EXPECT_LT(std::hypot(e.best_point[0] - c[0], e.best_point[1] - c[1], e.best_point[2] - c[2]), 3.0);
    const Index3 s{3, -2, 1};
    const auto moved = eta_surrogate(V.translated(s), 0.75);
    EXPECT_NEAR(moved.value, e.value, 1e-12 * e.value);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(moved.best_center[a], e.best_center[a] + s[a]);
}

TEST(Eta, RejectsWindowBelowThreeCells) {
    const auto g = box();
    expect_error(errc::parameter, [&] { eta_surrogate(CartesianField::zeros(g), 2.0 * g->spacing()); });
}

TEST(Decompose, SingleCleanProfile) {
    const auto g = box();
    const auto V = make_profile(g, {ProfileSpec::Kind::gaussian, 1.0, 0.6});
    const auto seq = synth_sequence({V}, {ShiftRule::Kind::diagonals, 1}, 8, 0.0);
    const auto r = decompose(seq, 4, 0.05);
    ASSERT_EQ(r.profiles.size(), 1u);
    EXPECT_FALSE(r.stagnated);
    const double norm = std::sqrt(cartesian::mass(V));
    for (const auto& rem : r.remainders) EXPECT_LE(std::sqrt(cartesian::mass(rem)), 1e-6 * norm);
    const auto e = norm_expansion_check(r, seq, params);
    EXPECT_LE(e.l2_residual, 1e-6);
    EXPECT_LE(e.h1c_residual, 1e-6);
    const auto scores = score_against_truth(r, seq);
    ASSERT_EQ(scores.size(), 1u);
    EXPECT_LE(scores[0].l2_error, 1e-6);
}

TEST(Decompose, TwoProfileSuiteRecoversTruth) {
    const auto& run = demo_run();
    const auto& r = run.result;
    ASSERT_EQ(r.profiles.size(), 2u);
    EXPECT_FALSE(r.stagnated);
    ASSERT_EQ(run.scores.size(), 2u);
    EXPECT_NE(run.scores[0].truth, run.scores[1].truth);
    for (const auto& s : run.scores) EXPECT_LT(s.l2_error, 0.02);
    EXPECT_LE(run.expansion.l2_residual, 0.01);
    EXPECT_LE(run.expansion.h1c_residual, 0.01);
    EXPECT_LE(run.expansion.lq_ratio, 0.1);
    for (std::size_t k = 1; k < r.eta_history.size(); ++k) EXPECT_LE(r.eta_history[k], r.eta_history[k - 1]);
    const auto dist = pairwise_distances(r, 0, 1);
    ASSERT_EQ(dist.size(), 16u);
    for (std::size_t n = r.tail_begin + 1; n < dist.size(); ++n) EXPECT_GE(dist[n], dist[n - 1]);
}

TEST(Decompose, ResidualShrinksWithLongerSequence) {
    const auto short_run = run_profile_suite(demo_suite(8));
    EXPECT_GT(short_run.expansion.h1c_residual, demo_run().expansion.h1c_residual);
    EXPECT_GT(short_run.expansion.l2_residual, demo_run().expansion.l2_residual);
}

TEST(Decompose, Deterministic) {
    const auto again = run_profile_suite(demo_suite());
    EXPECT_EQ(to_json(again).dump(), to_json(demo_run()).dump());
}

TEST(Decompose, Errors) {
    const auto g = box();
    const auto seq = synth_sequence({make_profile(g, {})}, {}, 4, 0.0);
    expect_error(errc::parameter, [&] { decompose(seq, 0, 0.05); });
    expect_error(errc::parameter, [&] { decompose(seq, 2, 0.0); });
    expect_error(errc::parameter, [&] { pairwise_distances(decompose(seq, 2, 0.05), 0, 3); });
}

TEST(HardyCross, ZeroTestFunction) {
    const auto g = box();
    const auto V = make_profile(g, {ProfileSpec::Kind::bump, 1.0, 2.0});
    EXPECT_EQ(hardy_cross_term(V, CartesianField::zeros(g), {0.0, 0.0, 0.0}, params), 0.0);
    expect_error(errc::parameter, [&] { hardy_cross_term(V, V, {0.1, 0.0, 0.0}, params); });
}

TEST(HardyCross, DecaysAlongBothFamilies) {
    for (const auto& values : {hardy_cross_case1(params, {4.0, 8.0, 16.0}), hardy_cross_case2(params, {4.0, 8.0, 16.0})}) {
        ASSERT_EQ(values.size(), 3u);
        EXPECT_GT(std::abs(values[0]), std::abs(values[1]));
        EXPECT_GT(std::abs(values[1]), std::abs(values[2]));
    }
}

TEST(HardyCross, TracksHardyPartOfExpansion) {
    const auto& e = demo_run().expansion;
    // the Ḣ¹_c residual beyond the gradient cross terms is the Hardy cross term
    const double hardy_residual = std::abs(e.h1c_signed - e.gradient_signed);
    ASSERT_GT(std::abs(e.hardy_part), 0.0);
    EXPECT_LE(hardy_residual, 4.0 * std::abs(e.hardy_part));
    EXPECT_GE(hardy_residual, 0.25 * std::abs(e.hardy_part));
}

TEST(Suite, JsonRoundTrip) {
    const auto s = demo_suite();
    const auto back = suite_from_json(to_json(s));
    EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
    EXPECT_EQ(back.N, 16u);
    EXPECT_EQ(back.profiles.size(), 2u);
    auto bad = to_json(s);
    bad["profiles"][0]["kind"] = "sinc";
    expect_error(errc::config, [&] { suite_from_json(bad); });
}
