#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fractal/grid.hpp"
#include "fractal/rational.hpp"

namespace fractal {

struct Vec2 {
    double x = 0, y = 0;
};

// Line in canonical (theta, rho) form: direction d = (cos theta, sin theta)
// with theta in [0, pi), unit normal n = (-sin theta, cos theta), and the
// line is { p : p.n = rho }.
class Line {
public:
    Line() : Line(0.0, 0.0) {}
    Line(double theta, double rho);

    static Line through_points(Vec2 a, Vec2 b);

    double theta() const { return theta_; }
    double rho() const { return rho_; }
    Vec2 direction() const { return {dx_, dy_}; }
    Vec2 normal() const { return {nx_, ny_}; }

    // Signed distance from p to the line (positive on the normal side).
    double signed_dist(Vec2 p) const { return p.x * nx_ + p.y * ny_ - rho_; }
    // Coordinate of the orthogonal projection of p along the line direction.
    double project_coord(Vec2 p) const { return p.x * dx_ + p.y * dy_; }
    Vec2 point_at(double coord) const { return {rho_ * nx_ + coord * dx_, rho_ * ny_ + coord * dy_}; }

    bool almost_equal(const Line& other, double tol = 1e-12) const;

private:
    double theta_, rho_;
    double dx_, dy_, nx_, ny_;
};

// Open tubular neighbourhood of a line restricted to the unit square:
// S = { x in [0,1]^2 : dist(x, line) < width/2 }.
struct Strip {
    Line line;
    double width = 0;
};

// H^1 length of the chord line ∩ [x0,x1]x[y0,y1].
double line_rect_length(const Line& line, const RectD& rect);
inline double line_square_length(const Line& line, const RectD& rect) {
    return line_rect_length(line, rect);
}

// Area of rect ∩ slab(|dist| <= width/2). The strip definition is open but
// the boundary has zero area.
double strip_rect_area(const Strip& strip, const RectD& rect);

// Closed square meets the open strip.
bool square_meets_strip(const RectD& rect, const Strip& strip);
// Relaxed test used for hierarchical pruning; never false when any
// descendant square could meet the strip.
bool square_meets_strip_slack(const RectD& rect, const Strip& strip, double slack = 1e-12);

// Convex polygon with a small fixed capacity (square clipped by two
// half-planes has at most 8 vertices).
struct ClipPolygon {
    static constexpr int kMax = 12;
    Vec2 pts[kMax];
    int n = 0;
    double area() const;
};

// Unit square clipped to the closed slab of the strip.
ClipPolygon strip_polygon(const Strip& strip);

// Containment test behind the strip-family covering property: every vertex
// of (inner ∩ [0,1]^2) lies within outer.width/2 of the outer line.
bool strip_contains(const Strip& outer, const Strip& inner, double tol = 1e-12);

// Deterministic counting bound: a uniform length bound V for all lines caps
// strip hit-counts at width <= r_n.
double lengthtonum_bound(double V, double r_n);

// Family of candidate extremal lines: all lines through pairs of distinct
// boundary-grid points at the given spacing on the four sides of the unit
// square. Exact integer de-duplication; deterministic order.
struct LineFamily {
    std::vector<Line> lines;
    Rational spacing;
    std::size_t point_count = 0;
    double empirical_constant() const;  // |family| * spacing^4
};

std::size_t line_family_size_estimate(const Rational& spacing);
LineFamily line_family(const Rational& resolution, std::size_t max_lines = 10'000'000);
// Coarsens spacing to the smallest integer multiple of resolution that fits
// the cap; the coarse point grid is a subset of the fine one.
LineFamily line_family_capped(const Rational& resolution, std::size_t max_lines);

// Deduplicated lines through pairs of the boundary collection points
// (0, k/M), (1, k/M), (k/M, 0), (k/M, 1), k = 1..M.
std::vector<Line> boundary_pair_lines(std::uint32_t M, std::size_t max_lines = 10'000'000);

// Strip approximation family: for each line through two boundary points at
// spacing 1/M, strips of widths 5i/M for i = 1..M. Any strip of width in
// [1/M, 1] is contained in a member at most 5x wider.
struct StripFamily {
    std::uint32_t M = 0;
    std::vector<Line> lines;
    // strip (line_idx, i) has width 5*i/M, i in [1, M]
    std::size_t size() const { return lines.size() * M; }
    Strip strip(std::size_t line_idx, std::uint32_t i) const {
        return Strip{lines[line_idx], 5.0 * i / M};
    }
};

StripFamily strip_family(std::uint32_t M, std::size_t max_strips = 50'000'000);

// Covering search: returns a family strip containing s with width <= 5 w(s),
// or nullopt if the scan fails. Tries snapped candidates first, then falls
// back to scanning the width class.
std::optional<Strip> find_covering_strip(const StripFamily& fam, const Strip& s);

// CSV export (theta, rho, width; width 0 for bare lines).
std::string lines_to_csv(const std::vector<Line>& lines);
std::string strips_to_csv(const StripFamily& fam);

} // namespace fractal
