#include "doctest.h"

#include <cmath>

#include "fractal/concentration.hpp"
#include "oracles.hpp"

using namespace fractal;

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
const double kE = std::exp(1.0);
} // namespace

TEST_CASE("make_params enforces the exponent constraints") {
    CHECK_NOTHROW(make_params(0.63, 0.4, 0.1));
    CHECK_THROWS_AS(make_params(0.5, 0.5, 0.1), std::invalid_argument);  // t < s
    CHECK_THROWS_AS(make_params(0.5, 0.4, 0.06), std::invalid_argument); // 2 eps < s - t
    CHECK_THROWS_AS(make_params(0.5, 0.4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_params(0.5, 0.4, 0.04, 0.0), std::invalid_argument);
}

TEST_CASE("event G holds on chains and fails for tiny R on full density") {
    // chain: s = 0, so t < 0; bound R P_n r^{t+1} + r_n >= sqrt2 r_n for R >= 2
    const GridSequence chain_seq = GridSequence::constant(3, 1, 4);
    const Construction chain = generate(chain_seq, 4, 9);
    const BoundParams p = make_params(0.0, -0.5, 0.2, 2.0);
    for (std::size_t n = 1; n <= 4; ++n) CHECK(event_G(chain, n, p));

    const Construction full = oracles::full_grid({2});
    const BoundParams tiny = make_params(2.0, 0.0, 0.5, 1e-12);
    CHECK(!event_G(full, 1, tiny));

    // monotone in R
    const BoundParams big = make_params(2.0, 0.0, 0.5, 64.0);
    CHECK(event_G(full, 1, big));
}

TEST_CASE("strip event threshold formula and the count cap") {
    GridSequence seq;
    seq.M = {2, 2};
    seq.N = {2, 2};
    const BoundParams p = make_params(2.0, 0.5, 0.5, 1.0);
    const double w = 0.17;
    const double got = strip_event_threshold(seq, 2, w, p, true);
    CHECK(got == doctest::Approx(500.0 * std::sqrt(5.0) * 4.0 * std::sqrt(w)).epsilon(1e-12));

    // Z <= P_n always, so the event holds whenever 500 * 5^t R w^t >= 1
    const Construction c = generate(seq, 2, 4);
    CHECK(event_A(c, 2, p));
    const BoundParams bigger = make_params(2.0, 0.5, 0.5, 2.0);
    CHECK(event_A(c, 2, bigger));  // monotone in R
    CHECK_THROWS_AS(event_A(c, 1, p), std::invalid_argument);
}

TEST_CASE("chernoff strip rhs: zero count, no clamping, big-float oracle") {
    const GridSequence seq = GridSequence::constant(4, 8, 3);
    const BoundParams p = make_params(1.5, 0.3, 0.25, 1.0);
    const LevelReals lv2 = level_reals(seq, 2);
    CHECK(chernoff_strip_log_rhs(lv2.r, 1, 0, seq, p) < 0.0);
    // a huge conditional count dominates; the evaluator must report rhs >= 1
    CHECK(chernoff_strip_log_rhs(lv2.r, 1, 100'000, seq, p) > 0.0);
    CHECK_THROWS_AS(chernoff_strip_log_rhs(10.0, 1, 0, seq, p), std::invalid_argument);

    // reference configuration: event at level 3 conditional on F_2, w = r_2
    const Construction c = generate(seq, 2, 123);
    const Strip s{Line::through_points({0.0, 0.12}, {1.0, 0.74}), lv2.r};
    const std::uint64_t zn = strip_count(c, 2, s);
    const double got = chernoff_strip_log_rhs(lv2.r, 2, zn, seq, p);
    const double oracle = oracles::chernoff_rhs_bigfloat(lv2.r, p.R, p.t, lv2.P * 8.0,
                                                         lv2.r, 8.0, zn);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("exact strip MGF: degenerate cases and conditional Monte-Carlo") {
    CHECK(mgf_strip_bound({0, 0, 0}, 4, 3, 0.5).log_exact == 0.0);
    CHECK(mgf_strip_bound({16}, 4, 5, 0.5).log_exact == doctest::Approx(5.0));
    CHECK_THROWS_AS(mgf_strip_bound({17}, 4, 1, 0.5), std::invalid_argument);

    // two parents with m = 8 of 16 children hitting a horizontal band
    GridSequence seq;
    seq.M = {2, 4};
    seq.N = {2, 2};
    Construction c;
    c.seq = seq;
    c.seed = 0;
    Generation g1;
    SquareAddr a1, a2;
    a1.digits = {{0, 0}};
    a2.digits = {{1, 0}};
    g1.entries = {a1, a2};
    c.levels.push_back(g1);

    const Strip band{Line(0.0, 0.125), 0.25};  // touches child rows 0 and 1 exactly
    std::vector<std::uint32_t> m_counts;
    for (const SquareAddr& addr : c.generation(1).entries) {
        std::uint32_t m_i = 0;
        const RectD parent = square_rect_d(addr, seq);
        const double cs = parent.side / 4;
        for (std::uint32_t row = 0; row < 4; ++row)
            for (std::uint32_t col = 0; col < 4; ++col)
                if (square_meets_strip(RectD{parent.x0 + col * cs, parent.y0 + row * cs, cs}, band))
                    ++m_i;
        m_counts.push_back(m_i);
    }
    REQUIRE(m_counts == std::vector<std::uint32_t>{8, 8});

    const MgfStripBound mgf = mgf_strip_bound(m_counts, 4, 2, band.width / 0.5);
    CHECK(mgf.log_exact == doctest::Approx(4.0 * std::log1p((kE - 1.0) / 2.0)).epsilon(1e-12));
    CHECK(mgf.log_exact <= mgf.log_paper_bound);

    // Monte-Carlo mean of e^Z within 3 sigma of the exact MGF
    const std::uint64_t trials = 100'000;
    double sum = 0, sum_sq = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const double v = std::exp(static_cast<double>(
            resampled_strip_count(c, 1, band, derive_key(0x4D6Fu, t))));
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / trials;
    const double sd = std::sqrt(std::max(0.0, sum_sq / trials - mean * mean));
    const double exact = std::exp(mgf.log_exact);
    CHECK(std::abs(mean - exact) <= 3 * sd / std::sqrt(static_cast<double>(trials)));

    // Markov step: empirical P(Z > a) <= e^{-a} * exact MGF
    for (double a : {2.0, 4.0, 6.0}) {
        std::uint64_t over = 0;
        for (std::uint64_t t = 0; t < 20'000; ++t) {
            if (static_cast<double>(resampled_strip_count(c, 1, band, derive_key(0x77, t))) > a)
                ++over;
        }
        CHECK(static_cast<double>(over) / 20'000 <= std::exp(-a) * exact + 1e-9);
    }
}

TEST_CASE("line MGF rhs behavior over the admissible tilt range") {
    const GridSequence seq = GridSequence::constant(4, 8, 3);
    const BoundParams p = make_params(1.5, 0.3, 0.25, 1.0);
    // len = 0: pure decay
    const double lr = mgf_line_log_rhs(0.0, 3.0, 1, seq, p);
    const LevelReals lv2 = level_reals(seq, 2);
    CHECK(lr == doctest::Approx(-3.0 * p.R * std::exp(lv2.log_P + 1.3 * lv2.log_r)));
    // lambda -> 0+ gives rhs -> 1
    CHECK(std::abs(mgf_line_log_rhs(1.5, 1e-9, 1, seq, p)) <= 1e-6);
    const double lambda_max = 1.0 / (lv2.r * kSqrt2);
    CHECK_THROWS_AS(mgf_line_log_rhs(1.0, lambda_max, 1, seq, p), std::invalid_argument);
    CHECK_THROWS_AS(mgf_line_log_rhs(1.0, 0.0, 1, seq, p), std::invalid_argument);

    // the proof's tilt lambda = r^{-1+eps} yields rhs < 1 at calibrated R
    const Construction c = generate(seq, 2, 5);
    const double len1 = line_total_length(c, 1, Line::through_points({0, 0.3}, {1, 0.7}));
    const double lambda = std::exp((p.eps - 1.0) * lv2.log_r);
    CHECK(mgf_line_log_rhs(len1, lambda, 1, seq, p) < 0.0);
}

TEST_CASE("level failure bounds decay and partial products converge") {
    const GridSequence seq = GridSequence::constant(3, 2, 61);
    BoundParams p = make_params(std::log(2.0) / std::log(3.0), 0.2, 0.2, 1.0);
    p.C2 = fit_C2(seq, p, 1, 12);
    p.C3 = fit_C3(seq, p, 1, 12);
    CHECK(p.C2 > 0);
    CHECK(p.C3 > 0);
    CHECK(decay_warnings(p).empty());

    std::size_t first_ok = 0;
    double prevA = 1e300, prevG = 1e300;
    bool tail_monotone = true;
    for (std::size_t n = 1; n <= 60; ++n) {
        const LevelBounds lb = level_failure_bounds(n, seq, p, 16.0);
        if (!lb.vacuousA && !lb.vacuousG && first_ok == 0) first_ok = n;
        if (first_ok != 0 && n > first_ok) {
            tail_monotone = tail_monotone && lb.log_boundA < prevA && lb.log_boundG < prevG;
        }
        prevA = lb.log_boundA;
        prevG = lb.log_boundG;
    }
    REQUIRE(first_ok > 0);
    CHECK(tail_monotone);
    const double lp = log_partial_product(seq, p, 16.0, first_ok, 60);
    CHECK(std::isfinite(lp));
    CHECK(lp < 0.0);

    BoundParams flat = p;
    flat.eps = 0.0;
    CHECK(!decay_warnings(flat).empty());
}

TEST_CASE("wilson interval sanity") {
    const WilsonInterval w0 = wilson_interval(0, 1000);
    CHECK(w0.p_hat == 0.0);
    CHECK(w0.lo == 0.0);
    CHECK(w0.hi == doctest::Approx(3.8415 / (1000 + 3.8415)).epsilon(1e-3));
    const WilsonInterval w = wilson_interval(500, 1000);
    CHECK(w.lo < 0.5);
    CHECK(w.hi > 0.5);
}

TEST_CASE("fast conditional recount equals resample_level plus full recount") {
    const GridSequence seq = GridSequence::constant(3, 4, 3);
    const Construction c = generate(seq, 3, 21);
    SeqRng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec2 anchor{rng.unit(), rng.unit()};
        const double theta = rng.range(0.0, 3.14159265358979323846);
        const Line line(theta, Line(theta, 0).signed_dist(anchor));
        const Strip s{line, rng.range(0.01, 0.3)};
        const std::uint64_t key = derive_key(0xFA57u, rep);
        for (std::size_t n = 1; n + 1 <= 3; ++n) {
            const Construction re = resample_level(c, n, key);
            CHECK(resampled_strip_count(c, n, s, key) == strip_count(re, n + 1, s));
            CHECK(resampled_line_length(c, n, line, key) ==
                  doctest::Approx(line_total_length(re, n + 1, line)).epsilon(1e-9));
        }
    }
}

TEST_CASE("conditional failure estimate: impossible event and determinism") {
    // single-chain next level with huge R never fails either event
    GridSequence seq;
    seq.M = {3, 3};
    seq.N = {2, 1};
    const Construction c = generate(seq, 2, 31);
    const BoundParams p = make_params(dim_s(seq, 2) + 0.5, -1.0, 0.2, 4096.0);
    const ConditionalEstimate est =
        conditional_failure_estimate(c, 1, p, EventKind::A, 150, 77);
    CHECK(est.p_hat == 0.0);
    const ConditionalEstimate est2 =
        conditional_failure_estimate(c, 1, p, EventKind::A, 150, 77);
    CHECK(est.failures == est2.failures);
    CHECK(est.ci.hi == est2.ci.hi);
    CHECK_THROWS_AS(conditional_failure_estimate(c, 1, p, EventKind::A, 99, 1),
                    std::invalid_argument);
}

TEST_CASE("audit points land in valid states and scored points pass") {
    const GridSequence seq = GridSequence::constant(4, 8, 2);
    const Construction c = generate(seq, 2, 2025);
    const BoundParams p = make_params(1.5, 0.5, 0.2, 4.0);
    AuditOptions opts;
    opts.n_points = 6;
    opts.max_trials = 50'000;
    const auto strips = audit_strip_bound(c, 1, p, 404, opts);
    const auto lines = audit_line_bound(c, 1, p, 404, opts);
    CHECK(strips.size() == 6);
    CHECK(lines.size() == 6);
    std::size_t scored = 0;
    for (const auto& ap : strips) {
        if (ap.status == AuditStatus::Scored) {
            ++scored;
            CHECK(ap.pass);
            CHECK(ap.log_rhs < 0.0);
        }
    }
    for (const auto& ap : lines) {
        if (ap.status == AuditStatus::Scored) {
            ++scored;
            CHECK(ap.pass);
        }
        if (ap.status == AuditStatus::Vacuous) CHECK(ap.log_rhs >= 0.0);
    }
    CHECK(scored > 0);
}

TEST_CASE("calibration returns a power of two meeting the quorum") {
    const GridSequence seq = GridSequence::constant(3, 2, 2);
    FamilyEventOptions opts;
    opts.max_lines = 20'000;
    const CalibrationResult cal =
        calibrate_R(seq, 2, std::log(2.0) / std::log(3.0), 0.4, 0.1, 40, 0.95, 1 << 16, opts);
    CHECK(cal.R >= 1.0);
    CHECK(std::exp2(std::round(std::log2(cal.R))) == cal.R);
    CHECK(cal.success_fraction >= 0.95);

    // calibrated R makes the events hold on a fresh seed most of the time
    const BoundParams p = make_params(std::log(2.0) / std::log(3.0), 0.4, 0.1, cal.R);
    std::size_t hold = 0;
    for (std::uint64_t s = 1000; s < 1020; ++s) {
        const Construction c = generate(seq, 2, derive_key(0xCA1u, s));
        FamilyEventOptions fo;
        fo.coarsen_to_fit = true;
        fo.max_lines = 20'000;
        if (event_G(c, 1, p, fo) && event_G(c, 2, p, fo) && event_A(c, 2, p, fo)) ++hold;
    }
    CHECK(hold >= 17);
}
