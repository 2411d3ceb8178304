#ifndef NLSIP_PROFILE_DECOMPOSITION_HPP
#define NLSIP_PROFILE_DECOMPOSITION_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cartesian.hpp"
#include "error.hpp"
#include "field_io.hpp"
#include "parallel.hpp"

namespace nlsip {

// ---------------------------------------------------------------- profiles --

/// Analytic profile centred on grid.centre(): a Gaussian A exp(-|y|²/(2w²)) or
/// a compact bump A exp(1 - 1/(1 - |y|²/w²)), y = x - x_centre.
struct ProfileSpec {
    enum class Kind { gaussian, bump };
    Kind kind = Kind::gaussian;
    double amplitude = 1.0;
    double width = 1.0;
};

inline std::string_view to_string(ProfileSpec::Kind k) { return k == ProfileSpec::Kind::gaussian ? "gaussian" : "bump"; }

inline double profile_value(const ProfileSpec& s, double r2) {
    const double w2 = s.width * s.width;
    if (s.kind == ProfileSpec::Kind::gaussian) return s.amplitude * std::exp(-0.5 * r2 / w2);
    if (r2 >= w2) return 0.0;
    return s.amplitude * std::exp(1.0 - 1.0 / (1.0 - r2 / w2));
}

inline CartesianField make_profile(const CartesianGridPtr& grid, const ProfileSpec& s) {
    require(s.width > 0.0 && std::isfinite(s.amplitude), errc::parameter, "profile width must be positive");
    const auto c = grid->point(grid->centre());
    return CartesianField::from_function(grid, [&](const Point3& x) {
        const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) + (x[2] - c[2]) * (x[2] - c[2]);
        return profile_value(s, r2);
    });
}

/// Radius about grid.centre() outside which |V| < rel_floor · max|V|.
inline double support_radius(const CartesianField& v, double rel_floor = 1e-8) {
    const auto& g = v.grid();
    const auto c = g.point(g.centre());
    double peak = 0.0;
    for (const auto& x : v.values()) peak = std::max(peak, std::abs(x));
    double r = 0.0;
    for (std::size_t f = 0; f < v.size(); ++f) {
        if (std::abs(v[f]) <= rel_floor * peak) continue;
        const auto x = g.point(g.unflat(f));
        r = std::max(r, std::hypot(x[0] - c[0], x[1] - c[1], x[2] - c[2]));
    }
    return r;
}

// --------------------------------------------------------- synthetic data --

/// x_n^j = n · step · dir_j (in cells). `axes` uses ±e_1, ±e_2, ±e_3 in the
/// order +e1, -e1, +e2, ...; `diagonals` uses ±(1,1,1), ±(1,-1,1), ...
struct ShiftRule {
    enum class Kind { axes, diagonals };
    Kind kind = Kind::diagonals;
    int step = 1;

    Index3 direction(std::size_t j) const {
        static constexpr Index3 ax[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        static constexpr Index3 dg[8] = {{1, 1, 1},  {-1, -1, -1}, {1, -1, 1},  {-1, 1, -1},
                                         {1, 1, -1}, {-1, -1, 1},  {-1, 1, 1}, {1, -1, -1}};
        if (kind == Kind::axes) {
            require(j < 6, errc::generation, "the axes rule supports at most 6 profiles");
            return ax[j];
        }
        require(j < 8, errc::generation, "the diagonals rule supports at most 8 profiles");
        return dg[j];
    }
    Index3 shift(std::size_t j, int n) const {
        const auto d = direction(j);
        return {n * step * d[0], n * step * d[1], n * step * d[2]};
    }
};

inline std::string_view to_string(ShiftRule::Kind k) { return k == ShiftRule::Kind::axes ? "axes" : "diagonals"; }

inline ShiftRule::Kind parse_shift_rule(std::string_view s) {
    if (s == "axes") return ShiftRule::Kind::axes;
    if (s == "diagonals") return ShiftRule::Kind::diagonals;
    fail(errc::config, "unknown shift rule '" + std::string(s) + "'");
}

struct SyntheticSequence {
    CartesianGridPtr grid;
    std::vector<CartesianField> members;           ///< v_1..v_N
    std::vector<CartesianField> profiles;          ///< ground truth V^j
    std::vector<std::vector<Index3>> shifts;       ///< shifts[j][n-1] = x_n^j in cells
    std::vector<CartesianField> noise;             ///< noise_n, ground truth

    std::size_t size() const { return members.size(); }
};

/// Smooth clutter vanishing on the box faces: an envelope Π_a cos(π x_a / 2L)
/// times a sum of random low Fourier modes, peak amplitude `amplitude`.
inline CartesianField smooth_noise(const CartesianGridPtr& grid, double amplitude, std::mt19937_64& rng) {
    if (amplitude == 0.0) return CartesianField::zeros(grid);
    constexpr int modes = 4;
    std::uniform_int_distribution<int> wave(1, 3);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double L = grid->half_width();
    const double k0 = std::numbers::pi / L;
    std::array<std::array<double, 4>, modes> m{};
    for (auto& mode : m) mode = {wave(rng) * k0, wave(rng) * k0, wave(rng) * k0, phase(rng)};
    auto f = CartesianField::from_function(grid, [&](const Point3& x) {
        double env = 1.0;
        for (double xa : x) env *= std::cos(0.5 * std::numbers::pi * xa / L);
        double s = 0.0;
        for (const auto& mode : m) s += std::cos(mode[0] * x[0] + mode[1] * x[1] + mode[2] * x[2] + mode[3]);
        return env * s;
    });
    double peak = 0.0;
    for (const auto& v : f.values()) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) f *= amplitude / peak;
    return f;
}

/// v_n = Σ_j V^j(· - x_n^j) + noise_n, n = 1..N, with noise_n of peak
/// amplitude noise / n (vanishing clutter).
inline SyntheticSequence synth_sequence(const std::vector<CartesianField>& profiles, ShiftRule rule, std::size_t N,
                                        double noise, std::uint64_t seed = 0) {
    require(!profiles.empty(), errc::generation, "at least one profile is required");
    require(N >= 1, errc::generation, "the sequence needs at least one member");
    require(noise >= 0.0 && std::isfinite(noise), errc::generation, "noise amplitude must be non-negative");
    require(rule.step >= 1, errc::generation, "shift step must be at least one cell");
    SyntheticSequence seq;
    seq.grid = profiles.front().grid_ptr();
    for (const auto& p : profiles)
        require(p.grid_ptr() == seq.grid, errc::generation, "profiles live on different grids");
    const auto& g = *seq.grid;
    const auto centre = g.point(g.centre());
    const double h = g.spacing();
    const double L = g.half_width();
    seq.profiles = profiles;
    seq.shifts.assign(profiles.size(), {});
    for (std::size_t j = 0; j < profiles.size(); ++j) {
        const double radius = support_radius(profiles[j]);
        for (std::size_t n = 1; n <= N; ++n) {
            const auto s = rule.shift(j, static_cast<int>(n));
            for (int a = 0; a < 3; ++a) {
                const double c = centre[a] + s[a] * h;
                if (c - radius < -L || c + radius > L) {
                    std::ostringstream os;
                    os << "profile " << j + 1 << " at member " << n << " needs margin " << radius
                       << " but sits " << std::min(c + L, L - c) << " from the box face";
                    fail(errc::generation, os.str());
                }
            }
            seq.shifts[j].push_back(s);
        }
    }
    std::mt19937_64 rng(seed);
    for (std::size_t n = 1; n <= N; ++n) {
        auto v = smooth_noise(seq.grid, noise / static_cast<double>(n), rng);
        seq.noise.push_back(v);
        for (std::size_t j = 0; j < profiles.size(); ++j) v += profiles[j].translated(seq.shifts[j][n - 1]);
        seq.members.push_back(std::move(v));
    }
    return seq;
}

// ------------------------------------------------------------- η surrogate --

struct EtaValue {
    double value = 0.0;
    Index3 best_center{};
    Point3 best_point{};
};

namespace detail {

/// Node-centred gradient density ½ Σ_a (|D⁺_a u|² + |D⁻_a u|²); sums to gradient_sq.
inline std::vector<double> symmetric_gradient_density(const CartesianField& u) {
    const auto& g = u.grid();
    const int n = g.cells();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> e(u.size(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const auto v = u[g.flat(i, j, k)];
                double s = 0.0;
                s += std::norm(u.at({i + 1, j, k}) - v) + std::norm(v - u.at({i - 1, j, k}));
                s += std::norm(u.at({i, j + 1, k}) - v) + std::norm(v - u.at({i, j - 1, k}));
                s += std::norm(u.at({i, j, k + 1}) - v) + std::norm(v - u.at({i, j, k - 1}));
                e[g.flat(i, j, k)] = 0.5 * s * inv_h2;
            }
    return e;
}

/// Summed-area table with one layer of zero padding: (n+1)^3 entries.
class SummedVolume {
public:
    SummedVolume(const std::vector<double>& density, int n) : n_(n + 1), s_(static_cast<std::size_t>(n_) * n_ * n_, 0.0) {
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                for (int k = 1; k <= n; ++k) {
                    const double d = density[(static_cast<std::size_t>(i - 1) * n + (j - 1)) * n + (k - 1)];
                    at(i, j, k) = d + at(i - 1, j, k) + at(i, j - 1, k) + at(i, j, k - 1) - at(i - 1, j - 1, k) -
                                  at(i - 1, j, k - 1) - at(i, j - 1, k - 1) + at(i - 1, j - 1, k - 1);
                }
    }

    /// Sum over nodes [lo, hi] (inclusive, already clipped).
    double box(const Index3& lo, const Index3& hi) const {
        const int i0 = lo[0], j0 = lo[1], k0 = lo[2];
        const int i1 = hi[0] + 1, j1 = hi[1] + 1, k1 = hi[2] + 1;
        return get(i1, j1, k1) - get(i0, j1, k1) - get(i1, j0, k1) - get(i1, j1, k0) + get(i0, j0, k1) +
               get(i0, j1, k0) + get(i1, j0, k0) - get(i0, j0, k0);
    }

private:
    double& at(int i, int j, int k) { return s_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k]; }
    double get(int i, int j, int k) const { return s_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k]; }
    int n_;
    std::vector<double> s_;
};

} // namespace detail

/// max over window centres of ‖u‖_{L²(W)} + ‖∇u‖_{L²(W)}, W the cube of
/// half-width `window` (rounded to cells) clipped to the box.
inline EtaValue eta_surrogate(const CartesianField& u, double window) {
    const auto& g = u.grid();
    require(window >= 3.0 * g.spacing() - 1e-12, errc::parameter, "η window must be at least 3h");
    const int n = g.cells();
    const int w = static_cast<int>(std::lround(window / g.spacing()));
    std::vector<double> m(u.size());
    for (std::size_t f = 0; f < u.size(); ++f) m[f] = std::norm(u[f]);
    const detail::SummedVolume mass_sat(m, n);
    const detail::SummedVolume grad_sat(detail::symmetric_gradient_density(u), n);
    const double vol = g.cell_volume();
    EtaValue best;
    best.value = -1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Index3 lo{std::max(i - w, 0), std::max(j - w, 0), std::max(k - w, 0)};
                const Index3 hi{std::min(i + w, n - 1), std::min(j + w, n - 1), std::min(k + w, n - 1)};
                const double v = std::sqrt(std::max(mass_sat.box(lo, hi), 0.0) * vol) +
                                 std::sqrt(std::max(grad_sat.box(lo, hi), 0.0) * vol);
                if (v > best.value + 1e-14 * std::max(1.0, best.value)) {
                    best.value = v;
                    best.best_center = {i, j, k};
                }
            }
    best.value = std::max(best.value, 0.0);
    best.best_point = g.point(best.best_center);
    return best;
}

// ------------------------------------------------------------ decomposition --

struct DecomposeOptions {
    double window = 1.5;              ///< η window half-width
    double localization_radius = 4.0; ///< cutoff applied to the tail average
    unsigned threads = 1;
};

struct ExtractedProfile {
    CartesianField profile;        ///< centred on grid.centre()
    std::vector<Index3> shifts;    ///< x_n^j in cells, n = 1..N
    double eta_before = 0.0;       ///< tail η of the remainder before extraction
    double eta_after = 0.0;
};

/// Per-member ledger for v_n = Σ_j V^j(· - x_n^j) + v_n^l.
struct MemberLedger {
    double mass = 0.0;             ///< ‖v_n‖²_{L²}
    double profile_mass = 0.0;     ///< Σ_j ‖V^j‖²_{L²}
    double remainder_mass = 0.0;   ///< ‖v_n^l‖²_{L²}
    double h1c = 0.0;              ///< ‖v_n‖²_{Ḣ¹c}
    double profile_h1c = 0.0;      ///< Σ_j ‖V^j(· - x_n^j)‖²_{Ḣ¹c}
    double remainder_h1c = 0.0;
    double lq_member = 0.0;        ///< ‖v_n‖_{L^q}, q = 4/d + 2
    double lq_remainder = 0.0;
};

struct DecompositionResult {
    CartesianGridPtr grid;
    std::vector<ExtractedProfile> profiles;
    std::vector<CartesianField> remainders;   ///< v_n^l after the last accepted extraction
    std::vector<MemberLedger> ledger;
    std::vector<double> eta_history;          ///< tail η of v^0, v^1, ...
    bool stagnated = false;
    std::string diagnostic;
    std::size_t tail_begin = 0;               ///< first tail member (0-based)
};

namespace detail {

inline std::size_t tail_begin(std::size_t N) { return N - std::max<std::size_t>(1, N / 2); }

inline double tail_eta(const std::vector<CartesianField>& v, std::size_t begin, double window, unsigned threads) {
    std::vector<double> eta(v.size() - begin);
    parallel_for(eta.size(), threads, [&](std::size_t i) { eta[i] = eta_surrogate(v[begin + i], window).value; });
    double s = 0.0;
    for (double e : eta) s += e;
    return s / static_cast<double>(eta.size());
}

inline Index3 difference(const Index3& a, const Index3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline CartesianField localize(CartesianField v, double radius) {
    const auto& g = v.grid();
    const auto c = g.point(g.centre());
    auto& vals = v.mutable_values();
    for (std::size_t f = 0; f < vals.size(); ++f) {
        const auto x = g.point(g.unflat(f));
        if (std::hypot(x[0] - c[0], x[1] - c[1], x[2] - c[2]) > radius) vals[f] = 0.0;
    }
    return v;
}

} // namespace detail

inline MemberLedger member_ledger(const CartesianField& v, const std::vector<CartesianField>& placed,
                                  const CartesianField& remainder, double c) {
    const double q = v.grid().params().critical_exponent();
    MemberLedger m;
    m.mass = cartesian::mass(v);
    m.h1c = cartesian::h1c_sq(v, c);
    for (const auto& p : placed) {
        m.profile_mass += cartesian::mass(p);
        m.profile_h1c += cartesian::h1c_sq(p, c);
    }
    m.remainder_mass = cartesian::mass(remainder);
    m.remainder_h1c = cartesian::h1c_sq(remainder, c);
    m.lq_member = std::pow(cartesian::lp_integral(v, q), 1.0 / q);
    m.lq_remainder = std::pow(cartesian::lp_integral(remainder, q), 1.0 / q);
    return m;
}

/// Iterative extraction: align tail members on their η centres, average them,
/// localize, subtract the translate from every member; stop when the tail η
/// falls below eps or after l_max profiles. An extraction that does not lower
/// the tail η is undone and reported as stagnation.
inline DecompositionResult decompose(const SyntheticSequence& seq, std::size_t l_max, double eps,
                                     DecomposeOptions opts = {}) {
    require(l_max >= 1, errc::parameter, "l_max must be at least 1");
    require(eps > 0.0, errc::parameter, "eps must be positive");
    require(seq.size() >= 1, errc::insufficient_data, "empty sequence");
    require(opts.localization_radius > 0.0, errc::parameter, "localization radius must be positive");
    const std::size_t N = seq.size();
    const auto& g = *seq.grid;
    const double c = g.params().c;
    DecompositionResult out;
    out.grid = seq.grid;
    out.tail_begin = detail::tail_begin(N);
    out.remainders = seq.members;
    double eta = detail::tail_eta(out.remainders, out.tail_begin, opts.window, opts.threads);
    out.eta_history.push_back(eta);
    while (out.profiles.size() < l_max && eta >= eps) {
        std::vector<Index3> centres(N);
        parallel_for(N, opts.threads,
                     [&](std::size_t n) { centres[n] = eta_surrogate(out.remainders[n], opts.window).best_center; });
        std::vector<Index3> shifts(N);
        for (std::size_t n = 0; n < N; ++n) shifts[n] = detail::difference(centres[n], g.centre());
        auto avg = CartesianField::zeros(seq.grid);
        for (std::size_t n = out.tail_begin; n < N; ++n) {
            const auto s = shifts[n];
            avg += out.remainders[n].translated({-s[0], -s[1], -s[2]});
        }
        avg *= 1.0 / static_cast<double>(N - out.tail_begin);
        auto profile = detail::localize(std::move(avg), opts.localization_radius);
        auto next = out.remainders;
        parallel_for(N, opts.threads, [&](std::size_t n) { next[n] -= profile.translated(shifts[n]); });
        const double eta_next = detail::tail_eta(next, out.tail_begin, opts.window, opts.threads);
        if (!(eta_next < eta)) {
            out.stagnated = true;
            std::ostringstream os;
            os << "extraction " << out.profiles.size() + 1 << " left the tail η at " << eta_next << " (was " << eta
               << ")";
            out.diagnostic = os.str();
            break;
        }
        out.profiles.push_back({std::move(profile), std::move(shifts), eta, eta_next});
        out.remainders = std::move(next);
        eta = eta_next;
        out.eta_history.push_back(eta);
    }
    out.ledger.resize(N);
    parallel_for(N, opts.threads, [&](std::size_t n) {
        std::vector<CartesianField> placed;
        for (const auto& p : out.profiles) placed.push_back(p.profile.translated(p.shifts[n]));
        out.ledger[n] = member_ledger(seq.members[n], placed, out.remainders[n], c);
    });
    return out;
}

/// Physical distance |x_n^j - x_n^k| for every member.
inline std::vector<double> pairwise_distances(const DecompositionResult& r, std::size_t j, std::size_t k) {
    require(j < r.profiles.size() && k < r.profiles.size(), errc::parameter, "profile index out of range");
    const double h = r.grid->spacing();
    std::vector<double> d;
    for (std::size_t n = 0; n < r.profiles[j].shifts.size(); ++n) {
        const auto a = r.profiles[j].shifts[n];
        const auto b = r.profiles[k].shifts[n];
        d.push_back(h * std::hypot(double(a[0] - b[0]), double(a[1] - b[1]), double(a[2] - b[2])));
    }
    return d;
}

// -------------------------------------------------------------- scoring --

struct ProfileScore {
    std::size_t truth = 0;   ///< matched ground-truth index
    double l2_error = 0.0;   ///< ‖V_extracted(· - δ) - V_true‖ / ‖V_true‖, best δ in {-1,0,1}³
    Index3 offset{};
};

/// Greedy matching of extracted to distinct true profiles.
inline std::vector<ProfileScore> score_against_truth(const DecompositionResult& r, const SyntheticSequence& seq) {
    std::vector<ProfileScore> out;
    std::vector<bool> used(seq.profiles.size(), false);
    for (const auto& e : r.profiles) {
        ProfileScore best;
        best.l2_error = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < seq.profiles.size(); ++t) {
            if (used[t]) continue;
            const double norm = std::sqrt(cartesian::mass(seq.profiles[t]));
            for (int a = -1; a <= 1; ++a)
                for (int b = -1; b <= 1; ++b)
                    for (int cc = -1; cc <= 1; ++cc) {
                        const double err =
                            std::sqrt(cartesian::mass(e.profile.translated({a, b, cc}) - seq.profiles[t])) / norm;
                        if (err < best.l2_error) best = {t, err, {a, b, cc}};
                    }
        }
        if (std::isfinite(best.l2_error)) used[best.truth] = true;
        out.push_back(best);
    }
    return out;
}

// ---------------------------------------------------------- cross terms --

/// Re ∫ |x|^{-2} V(x - shift) w̄(x) dx on the Cartesian grid; the half-cell
/// offset keeps the origin off the nodes. The shift must be a multiple of h.
inline double hardy_cross_term(const CartesianField& V, const CartesianField& w, const Point3& shift,
                               const ProblemParams& params) {
    validate(params);
    require(V.grid_ptr() == w.grid_ptr(), errc::consistency, "fields on different grids");
    const auto cells = V.grid().cells_of(shift);
    return cartesian::hardy_inner(V.translated(cells), w).real();
}

/// Case 1 family: V a compact bump of radius 2, w = (1 + |x|²)^{-1}, shifts
/// s e₁ on a 64³ box of half-width 64/3 (so every integer multiple of 2/3 is a
/// cell shift).
inline std::vector<double> hardy_cross_case1(const ProblemParams& params, const std::vector<double>& shifts) {
    const auto grid = CartesianGrid::build(params, 64.0 / 3.0, 64);
    const auto V = make_profile(grid, {ProfileSpec::Kind::bump, 1.0, 2.0});
    const auto w = CartesianField::from_function(
        grid, [](const Point3& x) { return 1.0 / (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); });
    std::vector<double> out;
    for (double s : shifts) out.push_back(hardy_cross_term(V, w, {s, 0.0, 0.0}, params));
    return out;
}

/// Case 2 family: zero shift, w_k = bump · e^{i k x₁} (weakly null as k grows),
/// on a 64³ box of half-width 4.
inline std::vector<double> hardy_cross_case2(const ProblemParams& params, const std::vector<double>& frequencies) {
    const auto grid = CartesianGrid::build(params, 4.0, 64);
    const ProfileSpec bump{ProfileSpec::Kind::bump, 1.0, 2.0};
    const auto V = make_profile(grid, bump);
    std::vector<double> out;
    for (double k : frequencies) {
        const auto w = CartesianField::from_function(grid, [&](const Point3& x) {
            const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            return profile_value(bump, r2) * std::complex<double>(std::cos(k * x[0]), std::sin(k * x[0]));
        });
        out.push_back(hardy_cross_term(V, w, {0.0, 0.0, 0.0}, params));
    }
    return out;
}

struct NormExpansion {
    double l2_residual = 0.0;        ///< |‖v_N‖² - Σ‖V^j‖² - ‖v_N^l‖²| / ‖v_N‖²
    double h1c_residual = 0.0;       ///< Ḣ¹_c analogue, relative
    double h1c_signed = 0.0;         ///< ‖v_N‖²_{Ḣ¹c} - Σ - ‖v_N^l‖²_{Ḣ¹c}, absolute
    double gradient_signed = 0.0;    ///< same expansion with c = 0, absolute
    double hardy_part = 0.0;         ///< -2c Re Σ of Hardy cross terms, absolute
    std::vector<double> l2_series;   ///< relative L² residual per member
    std::vector<double> h1c_series;
    double lq_ratio = 0.0;           ///< ‖v_N^l‖_{L^q} / max_n ‖v_n‖_{L^q}
};

/// Pythagorean residuals of the last member, the per-member series, and the
/// decomposition of the Ḣ¹_c residual into gradient and Hardy cross terms.
inline NormExpansion norm_expansion_check(const DecompositionResult& r, const SyntheticSequence& seq,
                                          const ProblemParams& params) {
    validate(params);
    require(!r.ledger.empty(), errc::precondition, "decomposition has no ledger");
    const double c = params.c;
    const std::size_t N = r.ledger.size();
    NormExpansion e;
    for (std::size_t n = 0; n < N; ++n) {
        std::vector<CartesianField> placed;
        for (const auto& p : r.profiles) placed.push_back(p.profile.translated(p.shifts[n]));
        const auto m = member_ledger(seq.members[n], placed, r.remainders[n], c);
        e.l2_series.push_back(std::abs(m.mass - m.profile_mass - m.remainder_mass) / m.mass);
        e.h1c_series.push_back(std::abs(m.h1c - m.profile_h1c - m.remainder_h1c) / m.h1c);
        e.lq_ratio = std::max(e.lq_ratio, m.lq_member);
        if (n + 1 < N) continue;
        e.h1c_signed = m.h1c - m.profile_h1c - m.remainder_h1c;
        const auto g = member_ledger(seq.members[n], placed, r.remainders[n], 0.0);
        e.gradient_signed = g.h1c - g.profile_h1c - g.remainder_h1c;
        double cross = 0.0;
        for (std::size_t j = 0; j < r.profiles.size(); ++j) {
            const auto& pj = r.profiles[j];
            const auto xj = pj.shifts[n];
            const auto& grid = *r.grid;
            const Point3 sj{xj[0] * grid.spacing(), xj[1] * grid.spacing(), xj[2] * grid.spacing()};
            cross += hardy_cross_term(pj.profile, r.remainders[n], sj, params);
            for (std::size_t k = j + 1; k < r.profiles.size(); ++k)
                cross += hardy_cross_term(pj.profile, placed[k], sj, params);
        }
        e.hardy_part = -2.0 * c * cross;
        e.lq_ratio = m.lq_remainder / e.lq_ratio;
    }
    e.l2_residual = e.l2_series.back();
    e.h1c_residual = e.h1c_series.back();
    return e;
}

// ------------------------------------------------------------- manifest --

struct ProfileSuite {
    ProblemParams params{3, 0.0};
    int n = 64;
    double L = 8.0;
    std::vector<ProfileSpec> profiles;
    ShiftRule shift_rule{};
    std::size_t N = 16;
    double noise = 1e-3;
    double eps = 0.05;
    std::size_t l_max = 4;
    std::uint64_t seed = 0;
    DecomposeOptions options{};
};

inline ProfileSuite default_profile_suite() {
    ProfileSuite s;
    s.params = {3, -1.0};
    s.profiles = {{ProfileSpec::Kind::gaussian, 1.0, 0.6}, {ProfileSpec::Kind::gaussian, 0.6, 0.5}};
    return s;
}

inline ProfileSuite suite_from_json(const json& j) {
    try {
        ProfileSuite s;
        s.params = {j.value("d", 3), j.value("c", 0.0)};
        s.n = j.value("n", s.n);
        s.L = j.value("L", s.L);
        for (const auto& p : j.at("profiles")) {
            ProfileSpec spec;
            const auto kind = p.value("kind", std::string("gaussian"));
            if (kind == "gaussian")
                spec.kind = ProfileSpec::Kind::gaussian;
            else if (kind == "bump")
                spec.kind = ProfileSpec::Kind::bump;
            else
                fail(errc::config, "unknown profile kind '" + kind + "'");
            spec.amplitude = p.value("amplitude", 1.0);
            spec.width = p.at("width").get<double>();
            s.profiles.push_back(spec);
        }
        if (j.contains("shift_rule")) {
            const auto& r = j["shift_rule"];
            if (r.is_string()) {
                s.shift_rule.kind = parse_shift_rule(r.get<std::string>());
            } else {
                s.shift_rule.kind = parse_shift_rule(r.value("kind", std::string("diagonals")));
                s.shift_rule.step = r.value("step", 1);
            }
        }
        s.N = j.value("N", s.N);
        s.noise = j.value("noise", s.noise);
        s.eps = j.value("eps", s.eps);
        s.l_max = j.value("l_max", s.l_max);
        s.seed = j.value("seed", s.seed);
        s.options.window = j.value("window", s.options.window);
        s.options.localization_radius = j.value("localization_radius", s.options.localization_radius);
        validate(s.params);
        return s;
    } catch (const json::exception& e) {
        fail(errc::config, std::string("malformed profile suite: ") + e.what());
    }
}

inline json to_json(const ProfileSuite& s) {
    json profiles = json::array();
    for (const auto& p : s.profiles)
        profiles.push_back({{"kind", std::string(to_string(p.kind))}, {"amplitude", p.amplitude}, {"width", p.width}});
    return {{"d", s.params.d},
            {"c", s.params.c},
            {"n", s.n},
            {"L", s.L},
            {"profiles", profiles},
            {"shift_rule", {{"kind", std::string(to_string(s.shift_rule.kind))}, {"step", s.shift_rule.step}}},
            {"N", s.N},
            {"noise", s.noise},
            {"eps", s.eps},
            {"l_max", s.l_max},
            {"seed", s.seed},
            {"window", s.options.window},
            {"localization_radius", s.options.localization_radius}};
}

struct SuiteRun {
    SyntheticSequence sequence;
    DecompositionResult result;
    std::vector<ProfileScore> scores;
    NormExpansion expansion;
};

inline SuiteRun run_profile_suite(const ProfileSuite& s) {
    const auto grid = CartesianGrid::build(s.params, s.L, s.n);
    std::vector<CartesianField> profiles;
    for (const auto& p : s.profiles) profiles.push_back(make_profile(grid, p));
    SuiteRun run;
    run.sequence = synth_sequence(profiles, s.shift_rule, s.N, s.noise, s.seed);
    run.result = decompose(run.sequence, s.l_max, s.eps, s.options);
    run.scores = score_against_truth(run.result, run.sequence);
    run.expansion = norm_expansion_check(run.result, run.sequence, s.params);
    return run;
}

inline json to_json(const SuiteRun& run) {
    const auto& r = run.result;
    const double h = r.grid->spacing();
    json profiles = json::array();
    for (std::size_t j = 0; j < r.profiles.size(); ++j) {
        const auto& p = r.profiles[j];
        json shifts = json::array();
        for (const auto& s : p.shifts) shifts.push_back({s[0] * h, s[1] * h, s[2] * h});
        json entry = {{"mass", cartesian::mass(p.profile)},
                      {"eta_before", p.eta_before},
                      {"eta_after", p.eta_after},
                      {"shifts", shifts}};
        if (j < run.scores.size())
            entry["score"] = {{"truth", run.scores[j].truth}, {"l2_error", run.scores[j].l2_error}};
        profiles.push_back(entry);
    }
    json ledger = json::array();
    for (const auto& m : r.ledger)
        ledger.push_back({{"mass", m.mass},
                          {"profile_mass", m.profile_mass},
                          {"remainder_mass", m.remainder_mass},
                          {"h1c", m.h1c},
                          {"profile_h1c", m.profile_h1c},
                          {"remainder_h1c", m.remainder_h1c},
                          {"lq_member", m.lq_member},
                          {"lq_remainder", m.lq_remainder}});
    const auto& e = run.expansion;
    return {{"profiles", profiles},
            {"ledger", ledger},
            {"eta_history", r.eta_history},
            {"stagnated", r.stagnated},
            {"diagnostic", r.diagnostic},
            {"expansion",
             {{"l2_residual", e.l2_residual},
              {"h1c_residual", e.h1c_residual},
              {"h1c_signed", e.h1c_signed},
              {"gradient_signed", e.gradient_signed},
              {"hardy_part", e.hardy_part},
              {"lq_ratio", e.lq_ratio},
              {"l2_series", e.l2_series},
              {"h1c_series", e.h1c_series}}}};
}

} // namespace nlsip

#endif
