#include "doctest.h"

#include <cmath>

#include "fractal/counting.hpp"
#include "fractal/experiments.hpp"
#include "fractal/geometry.hpp"
#include "fractal/rng.hpp"
#include "oracles.hpp"

using namespace fractal;

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kHalfPi = 1.57079632679489661923;

Line horizontal(double y) { return Line(0.0, y); }
} // namespace

TEST_CASE("line canonical form") {
    const Line l(3.14159265358979323846 + 0.3, 0.25);
    CHECK(l.theta() == doctest::Approx(0.3));
    CHECK(l.rho() == doctest::Approx(-0.25));
    const Line v = Line::through_points({0.5, 0.0}, {0.5, 1.0});
    CHECK(v.theta() == doctest::Approx(kHalfPi));
    CHECK(std::abs(v.signed_dist({0.5, 0.77})) <= 1e-12);
}

TEST_CASE("chord lengths through the unit square") {
    const RectD unit{0, 0, 1};
    CHECK(line_square_length(horizontal(0.5), unit) == doctest::Approx(1.0).epsilon(1e-10));
    const Line diag = Line::through_points({0, 0}, {1, 1});
    CHECK(line_square_length(diag, unit) == doctest::Approx(kSqrt2).epsilon(1e-10));
    CHECK(line_square_length(horizontal(2.0), unit) == 0.0);
    // touching a corner has zero length
    const Line corner = Line::through_points({-1, 1}, {1, -1});
    CHECK(line_square_length(corner, unit) <= 1e-10);
}

TEST_CASE("strip areas and membership") {
    const RectD unit{0, 0, 1};
    const Strip band{horizontal(0.5), 0.2};
    CHECK(strip_rect_area(band, unit) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(square_meets_strip(RectD{0, 0.4, 0.1}, band));
    CHECK(!square_meets_strip(RectD{0, 0.8, 0.1}, band));
    // open strip: squares at exactly width/2 distance do not meet
    // (values chosen exactly representable in binary)
    const Strip wide{horizontal(0.5), 0.25};
    CHECK(!square_meets_strip(RectD{0.0, 0.625, 0.25}, wide));
    CHECK(square_meets_strip_slack(RectD{0.0, 0.625, 0.25}, wide, 1e-9));
}

TEST_CASE("strip_contains on nested and crossing strips") {
    const Strip s{Line::through_points({0, 0.3}, {1, 0.6}), 0.2};
    CHECK(strip_contains(s, s));
    const Strip wider{s.line, 0.5};
    CHECK(strip_contains(wider, s));
    CHECK(!strip_contains(s, wider));
    const Strip perp{Line::through_points({0.5, 0}, {0.5, 1}), 0.05};
    CHECK(!strip_contains(Strip{horizontal(0.5), 0.05}, perp));
}

TEST_CASE("lengthtonum bound values") {
    CHECK(lengthtonum_bound(0.0, 0.25) == 0.0);
    const double v = lengthtonum_bound(kSqrt2, 1.0 / 3.0);
    CHECK(v == doctest::Approx(2.0 * (1.0 + 2.0 * kSqrt2) * 3.0 * kSqrt2).epsilon(1e-12));
    CHECK(v == doctest::Approx(32.49).epsilon(2e-4));
    CHECK(lengthtonum_bound(2.0, 0.5) == doctest::Approx(2 * lengthtonum_bound(1.0, 0.5)));
}

TEST_CASE("line family: counts, monotonicity, guard") {
    const LineFamily f1 = line_family(Rational(1));
    CHECK(f1.lines.size() <= 16);
    const LineFamily f2 = line_family(Rational(1, 2));
    CHECK(f2.lines.size() <= 256);  // 16 * (1/2)^-4
    const LineFamily f4 = line_family(Rational(1, 4));
    CHECK(f4.lines.size() <= 16 * 256);
    CHECK(f1.lines.size() <= f2.lines.size());
    CHECK(f2.lines.size() <= f4.lines.size());
    CHECK_THROWS_AS(line_family(Rational(1, 4096)), guard_error);
    const LineFamily capped = line_family_capped(Rational(1, 4096), 20'000);
    CHECK(capped.lines.size() <= 20'000);
    CHECK(capped.spacing > Rational(1, 4096));
    // empirical constant of the pair family stays below the stated cap
    CHECK(f2.empirical_constant() <= 16.0);
}

TEST_CASE("strip family: size bound, first width class, covering") {
    for (std::uint32_t M : {2u, 5u}) {
        const StripFamily fam = strip_family(M);
        CHECK(fam.size() <= 16ull * M * M * M);
        for (std::size_t li = 0; li < fam.lines.size(); ++li)
            CHECK(fam.strip(li, 1).width == doctest::Approx(5.0 / M));
    }
    const StripFamily fam = strip_family(8);
    SeqRng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 anchor{rng.range(0.02, 0.98), rng.range(0.02, 0.98)};
        const double theta = rng.range(0.0, 3.14159265358979323846);
        const Line line(theta, Line(theta, 0).signed_dist(anchor));
        const double w = rng.range(1.0 / 8, 2.0 / 8);  // width class i = 1
        const auto cover = find_covering_strip(fam, Strip{line, w});
        REQUIRE(cover.has_value());
        CHECK(cover->width <= 5 * w + 1e-12);
        CHECK(strip_contains(*cover, Strip{line, w}));
    }
}

TEST_CASE("line_total_length: full grid equals the chord, multiset doubles") {
    const Construction full = oracles::full_grid({3, 3});
    const Line diag = Line::through_points({0, 0.1}, {1, 0.8});
    const RectD unit{0, 0, 1};
    CHECK(line_total_length(full, 2, diag) ==
          doctest::Approx(line_square_length(diag, unit)).epsilon(1e-9));

    const Construction dup = oracles::one_level(3, {{1, 1}, {1, 1}});
    const Construction single = oracles::one_level(3, {{1, 1}});
    const Line l = Line::through_points({0.34, 0.2}, {0.8, 0.61});
    CHECK(line_total_length(dup, 1, l) == doctest::Approx(2 * line_total_length(single, 1, l)));

    const Construction chain = oracles::chain({4, 4}, {3, 3});
    CHECK(line_total_length(chain, 2, horizontal(0.2)) == 0.0);
}

TEST_CASE("strip_count examples and pruning equivalence") {
    const Construction full = oracles::full_grid({4});
    const Strip whole{horizontal(0.5), 10.0};
    CHECK(strip_count(full, 1, whole) == 16);
    const Strip band{horizontal(0.5), 0.1};
    CHECK(strip_count(full, 1, band) == 8);  // two grid rows meet the band
    const Strip far{horizontal(5.0), 1e-6};
    CHECK(strip_count(full, 1, far) == 0);

    SeqRng rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        GridSequence seq;
        const std::size_t depth = 1 + rng.below(3);
        for (std::size_t k = 0; k < depth; ++k) {
            const std::uint32_t m = 2 + static_cast<std::uint32_t>(rng.below(4));
            seq.M.push_back(m);
            seq.N.push_back(1 + static_cast<std::uint32_t>(rng.below(m * m)));
        }
        const Construction c = generate(seq, depth, derive_key(55, rep));
        const Vec2 anchor{rng.unit(), rng.unit()};
        const double theta = rng.range(0.0, 3.14159265358979323846);
        const Line line(theta, Line(theta, 0).signed_dist(anchor));
        const Strip s{line, rng.range(0.001, 0.3)};
        CHECK(strip_count(c, depth, s) == strip_count_naive(c, depth, s));
        CHECK(line_total_length(c, depth, line) ==
              doctest::Approx(line_total_length_naive(c, depth, line)).epsilon(1e-9));
    }
}

TEST_CASE("sup_line_length bounds") {
    const Construction full = oracles::full_grid({3, 3});
    SupLineOptions opts;
    const SupLineResult sup = sup_line_length(full, 2, opts);
    CHECK(sup.value >= kSqrt2);  // the diagonal is in the family

    const Construction chain = oracles::chain({3, 3}, {1, 2});
    const SupLineResult chain_sup = sup_line_length(chain, 2, opts);
    const double r2 = 1.0 / 9.0;
    CHECK(chain_sup.value <= kSqrt2 * r2 + r2 + 1e-12);
}

TEST_CASE("total length is invariant under the square symmetries") {
    const GridSequence seq = GridSequence::constant(3, 3, 3);
    const Construction c = generate(seq, 3, 17);
    const Line line = Line::through_points({0.1, 0.02}, {0.95, 0.73});
    const double base = line_total_length(c, 3, line);
    for (int sym = 0; sym < 8; ++sym) {
        const Construction tc = oracles::apply_symmetry(sym, c);
        const Line tl = oracles::apply_symmetry(sym, line);
        CHECK(line_total_length(tc, 3, tl) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("random probe lines stay below the family sup proxy") {
    const fractal::CheckReport rep = fractal::check_line_family_slack(
        GridSequence::constant(3, 2, 3), 3, 2000, 2, 99, 40'000, 2);
    CHECK(rep.checked == 4000);
    CHECK(rep.violations == 0);
}

TEST_CASE("family CSV export shapes") {
    const LineFamily fam = line_family(Rational(1, 2));
    const std::string csv = lines_to_csv(fam.lines);
    CHECK(csv.rfind("theta,rho,width\r\n", 0) == 0);
    const StripFamily sf = strip_family(2);
    const std::string scsv = strips_to_csv(sf);
    CHECK(std::count(scsv.begin(), scsv.end(), '\n') == static_cast<long>(sf.size()) + 1);
}
