#include "fractal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "fractal/csv.hpp"

namespace fractal {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_theta(double theta, double& rho) {
    while (theta >= kPi) {
        theta -= kPi;
        rho = -rho;
    }
    while (theta < 0) {
        theta += kPi;
        rho = -rho;
    }
    return theta;
}
} // namespace

Line::Line(double theta, double rho) {
    theta = wrap_theta(theta, rho);
    theta_ = theta;
    rho_ = rho;
    dx_ = std::cos(theta);
    dy_ = std::sin(theta);
    nx_ = -dy_;
    ny_ = dx_;
}

Line Line::through_points(Vec2 a, Vec2 b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    if (dx == 0 && dy == 0) throw std::invalid_argument("Line::through_points: coincident points");
    if (dy < 0 || (dy == 0 && dx < 0)) {
        dx = -dx;
        dy = -dy;
    }
    const double theta = std::atan2(dy, dx);
    const double len = std::hypot(dx, dy);
    const double rho = (a.x * (-dy) + a.y * dx) / len;
    return Line(theta, rho);
}

bool Line::almost_equal(const Line& other, double tol) const {
    return std::abs(theta_ - other.theta_) <= tol && std::abs(rho_ - other.rho_) <= tol;
}

double line_rect_length(const Line& line, const RectD& rect) {
    // Liang-Barsky clip of p(u) = rho*n + u*d against the rectangle slabs.
    const Vec2 d = line.direction();
    const Vec2 n = line.normal();
    const double bx = line.rho() * n.x;
    const double by = line.rho() * n.y;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const auto clip_axis = [&](double base, double dir, double a0, double a1) {
        if (dir == 0.0) return base >= a0 && base <= a1;
        double t0 = (a0 - base) / dir;
        double t1 = (a1 - base) / dir;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
        return true;
    };
    if (!clip_axis(bx, d.x, rect.x0, rect.x1())) return 0.0;
    if (!clip_axis(by, d.y, rect.y0, rect.y1())) return 0.0;
    return std::max(0.0, hi - lo);
}

namespace {

ClipPolygon clip_half_plane(const ClipPolygon& poly, double a, double b, double c) {
    // Keep the side a*x + b*y <= c.
    ClipPolygon out;
    if (poly.n == 0) return out;
    for (int i = 0; i < poly.n; ++i) {
        const Vec2 p = poly.pts[i];
        const Vec2 q = poly.pts[(i + 1) % poly.n];
        const double dp = a * p.x + b * p.y - c;
        const double dq = a * q.x + b * q.y - c;
        if (dp <= 0) {
            out.pts[out.n++] = p;
            if (dq > 0) {
                const double t = dp / (dp - dq);
                out.pts[out.n++] = {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
            }
        } else if (dq <= 0) {
            const double t = dp / (dp - dq);
            out.pts[out.n++] = {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        }
    }
    return out;
}

ClipPolygon clip_to_slab(ClipPolygon poly, const Line& line, double half_width) {
    const Vec2 n = line.normal();
    poly = clip_half_plane(poly, n.x, n.y, line.rho() + half_width);
    poly = clip_half_plane(poly, -n.x, -n.y, -(line.rho() - half_width));
    return poly;
}

ClipPolygon rect_polygon(const RectD& r) {
    ClipPolygon p;
    p.n = 4;
    p.pts[0] = {r.x0, r.y0};
    p.pts[1] = {r.x1(), r.y0};
    p.pts[2] = {r.x1(), r.y1()};
    p.pts[3] = {r.x0, r.y1()};
    return p;
}

} // namespace

double ClipPolygon::area() const {
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % n];
        sum += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(sum);
}

double strip_rect_area(const Strip& strip, const RectD& rect) {
    return clip_to_slab(rect_polygon(rect), strip.line, strip.width / 2).area();
}

namespace {
// min and max of signed distance over the closed rectangle (attained at corners)
std::pair<double, double> corner_dist_range(const RectD& rect, const Line& line) {
    const double d00 = line.signed_dist({rect.x0, rect.y0});
    const double d10 = line.signed_dist({rect.x1(), rect.y0});
    const double d01 = line.signed_dist({rect.x0, rect.y1()});
    const double d11 = line.signed_dist({rect.x1(), rect.y1()});
    return {std::min(std::min(d00, d10), std::min(d01, d11)),
            std::max(std::max(d00, d10), std::max(d01, d11))};
}
} // namespace

bool square_meets_strip(const RectD& rect, const Strip& strip) {
    const auto [lo, hi] = corner_dist_range(rect, strip.line);
    if (lo <= 0 && hi >= 0) return true;  // the line crosses the square
    const double dist = std::min(std::abs(lo), std::abs(hi));
    return dist < strip.width / 2;
}

bool square_meets_strip_slack(const RectD& rect, const Strip& strip, double slack) {
    const auto [lo, hi] = corner_dist_range(rect, strip.line);
    if (lo <= slack && hi >= -slack) return true;
    const double dist = std::min(std::abs(lo), std::abs(hi));
    return dist < strip.width / 2 + slack;
}

ClipPolygon strip_polygon(const Strip& strip) {
    return clip_to_slab(rect_polygon(RectD{0, 0, 1}), strip.line, strip.width / 2);
}

bool strip_contains(const Strip& outer, const Strip& inner, double tol) {
    const ClipPolygon poly = strip_polygon(inner);
    const double half = outer.width / 2 + tol;
    for (int i = 0; i < poly.n; ++i) {
        if (std::abs(outer.line.signed_dist(poly.pts[i])) > half) return false;
    }
    return true;
}

double lengthtonum_bound(double V, double r_n) {
    return 2.0 * (1.0 + 2.0 * std::sqrt(2.0)) * V / r_n;
}

namespace {

struct IntPoint {
    long long x, y;  // coordinates over a common denominator G
    bool operator<(const IntPoint& o) const { return std::tie(x, y) < std::tie(o.x, o.y); }
};

struct LineKey {
    long long dx, dy, c;
    bool operator<(const LineKey& o) const { return std::tie(dx, dy, c) < std::tie(o.dx, o.dy, o.c); }
};

LineKey canonical_key(const IntPoint& p, const IntPoint& q) {
    long long dx = q.x - p.x, dy = q.y - p.y;
    const long long g = std::gcd(std::abs(dx), std::abs(dy));
    dx /= g;
    dy /= g;
    if (dy < 0 || (dy == 0 && dx < 0)) {
        dx = -dx;
        dy = -dy;
    }
    return LineKey{dx, dy, p.x * dy - p.y * dx};
}

std::vector<IntPoint> boundary_grid_points(long long G, long long step) {
    std::set<IntPoint> pts;
    for (long long o = 0; o <= G; o += step) {
        pts.insert({0, o});
        pts.insert({G, o});
        pts.insert({o, 0});
        pts.insert({o, G});
    }
    // endpoint included even when the step does not divide G
    pts.insert({0, G});
    pts.insert({G, G});
    pts.insert({G, 0});
    return {pts.begin(), pts.end()};
}

LineFamily build_line_family(const BigInt& G_big, const BigInt& step_big, const Rational& spacing,
                             std::size_t max_lines) {
    const long long G = G_big.convert_to<long long>();
    const long long step = step_big.convert_to<long long>();
    const auto pts = boundary_grid_points(G, step);
    const std::size_t np = pts.size();
    if (np * (np - 1) / 2 > max_lines * 4)  // generous pre-check before dedup
        throw guard_error("line_family: family size guard exceeded");
    std::set<LineKey> keys;
    std::vector<std::pair<LineKey, std::pair<IntPoint, IntPoint>>> reps;
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = i + 1; j < np; ++j) {
            const LineKey k = canonical_key(pts[i], pts[j]);
            if (keys.insert(k).second) reps.push_back({k, {pts[i], pts[j]}});
        }
    }
    if (reps.size() > max_lines) throw guard_error("line_family: family size guard exceeded");
    std::sort(reps.begin(), reps.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    LineFamily fam;
    fam.spacing = spacing;
    fam.point_count = np;
    fam.lines.reserve(reps.size());
    const double Gd = static_cast<double>(G);
    for (const auto& [key, pq] : reps) {
        fam.lines.push_back(Line::through_points({pq.first.x / Gd, pq.first.y / Gd},
                                                 {pq.second.x / Gd, pq.second.y / Gd}));
    }
    return fam;
}

} // namespace

double LineFamily::empirical_constant() const {
    const double s = to_double(spacing);
    return static_cast<double>(lines.size()) * s * s * s * s;
}

std::size_t line_family_size_estimate(const Rational& spacing) {
    const double per_side = 1.0 / to_double(spacing);
    const double np = 4.0 * per_side + 4.0;
    return static_cast<std::size_t>(np * (np - 1) / 2.0);
}

LineFamily line_family(const Rational& resolution, std::size_t max_lines) {
    if (resolution <= 0 || resolution > 1)
        throw std::invalid_argument("line_family: resolution must be in (0, 1]");
    if (line_family_size_estimate(resolution) > max_lines)
        throw guard_error("line_family: family size guard exceeded");
    const BigInt G = denominator(resolution);
    const BigInt step = numerator(resolution);
    return build_line_family(G, step, resolution, max_lines);
}

LineFamily line_family_capped(const Rational& resolution, std::size_t max_lines) {
    BigInt k = 1;
    while (line_family_size_estimate(resolution * k) > max_lines && resolution * k < 1) k += 1;
    Rational spacing = resolution * k;
    if (spacing > 1) spacing = 1;
    const BigInt G = denominator(resolution);
    const BigInt step = numerator(spacing) * (G / denominator(spacing));
    return build_line_family(G, step, spacing, max_lines);
}

std::vector<Line> boundary_pair_lines(std::uint32_t M, std::size_t max_lines) {
    if (M < 2) throw std::invalid_argument("boundary_pair_lines: M must be >= 2");
    // pre-check on the raw pair count; the deduplicated count is checked below
    if (8ull * M * M > 8 * max_lines)
        throw guard_error("boundary_pair_lines: line guard exceeded");
    // The four point sets (0,k/M), (1,k/M), (k/M,0), (k/M,1) for k = 1..M.
    std::set<IntPoint> pts;
    for (long long k = 1; k <= M; ++k) {
        pts.insert({0, k});
        pts.insert({M, k});
        pts.insert({k, 0});
        pts.insert({k, M});
    }
    std::set<LineKey> keys;
    std::vector<std::pair<LineKey, std::pair<IntPoint, IntPoint>>> reps;
    std::vector<IntPoint> pv(pts.begin(), pts.end());
    for (std::size_t i = 0; i < pv.size(); ++i) {
        for (std::size_t j = i + 1; j < pv.size(); ++j) {
            const LineKey k = canonical_key(pv[i], pv[j]);
            if (keys.insert(k).second) reps.push_back({k, {pv[i], pv[j]}});
        }
    }
    if (reps.size() > max_lines) throw guard_error("boundary_pair_lines: line guard exceeded");
    std::sort(reps.begin(), reps.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Line> lines;
    lines.reserve(reps.size());
    const double Md = static_cast<double>(M);
    for (const auto& [key, pq] : reps) {
        lines.push_back(Line::through_points({pq.first.x / Md, pq.first.y / Md},
                                             {pq.second.x / Md, pq.second.y / Md}));
    }
    return lines;
}

StripFamily strip_family(std::uint32_t M, std::size_t max_strips) {
    if (16ull * M * M * M > max_strips) throw guard_error("strip_family: size guard exceeded");
    StripFamily fam;
    fam.M = M;
    fam.lines = boundary_pair_lines(M, max_strips);
    return fam;
}

namespace {

// Chord endpoints of a line against the unit square boundary, if any.
std::optional<std::pair<Vec2, Vec2>> unit_square_chord(const Line& line) {
    const Vec2 d = line.direction();
    const Vec2 n = line.normal();
    const double bx = line.rho() * n.x;
    const double by = line.rho() * n.y;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const auto clip_axis = [&](double base, double dir) {
        if (dir == 0.0) return base >= 0.0 && base <= 1.0;
        double t0 = (0.0 - base) / dir;
        double t1 = (1.0 - base) / dir;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
        return true;
    };
    if (!clip_axis(bx, d.x) || !clip_axis(by, d.y) || lo > hi) return std::nullopt;
    return std::make_pair(Vec2{bx + lo * d.x, by + lo * d.y}, Vec2{bx + hi * d.x, by + hi * d.y});
}

// Collection points on the four sides nearest to p (both rounding choices
// per side, offsets clamped to {1/M..1}).
void candidate_points(std::uint32_t M, Vec2 p, std::vector<Vec2>& out) {
    const double Md = static_cast<double>(M);
    const auto clamp_k = [&](double v) {
        long long k = std::llround(v * Md);
        return std::clamp(k, 1ll, static_cast<long long>(M));
    };
    const auto push_side = [&](double coord_along) {
        const long long k = clamp_k(coord_along);
        for (long long kk : {k - 1, k, k + 1}) {
            if (kk < 1 || kk > static_cast<long long>(M)) continue;
            out.push_back({0.0, kk / Md});
            out.push_back({1.0, kk / Md});
            out.push_back({kk / Md, 0.0});
            out.push_back({kk / Md, 1.0});
        }
    };
    push_side(p.x);
    if (clamp_k(p.y) != clamp_k(p.x)) push_side(p.y);
}

} // namespace

std::optional<Strip> find_covering_strip(const StripFamily& fam, const Strip& s) {
    const double w = s.width;
    const std::uint32_t M = fam.M;
    if (w * M < 1.0 - 1e-12) return std::nullopt;  // below the family's width range
    std::uint32_t i = static_cast<std::uint32_t>(std::floor(w * M));
    i = std::min<std::uint32_t>(std::max<std::uint32_t>(i, 1), M);
    const double wide = 5.0 * i / M;

    // candidate pass: lines through snapped chord endpoints
    if (auto chord = unit_square_chord(s.line)) {
        std::vector<Vec2> ca, cb;
        candidate_points(M, chord->first, ca);
        candidate_points(M, chord->second, cb);
        for (const Vec2& a : ca) {
            for (const Vec2& b : cb) {
                if (std::abs(a.x - b.x) < 1e-15 && std::abs(a.y - b.y) < 1e-15) continue;
                const Strip cand{Line::through_points(a, b), wide};
                if (strip_contains(cand, s)) return cand;
            }
        }
    }
    // fallback: scan the whole width class
    for (std::size_t li = 0; li < fam.lines.size(); ++li) {
        const Strip cand = fam.strip(li, i);
        if (strip_contains(cand, s)) return cand;
    }
    return std::nullopt;
}

std::string lines_to_csv(const std::vector<Line>& lines) {
    CsvWriter csv({"theta", "rho", "width"});
    for (const Line& l : lines) csv.row(l.theta(), l.rho(), 0.0);
    return csv.str();
}

std::string strips_to_csv(const StripFamily& fam) {
    CsvWriter csv({"theta", "rho", "width"});
    for (std::uint32_t i = 1; i <= fam.M; ++i) {
        for (std::size_t li = 0; li < fam.lines.size(); ++li) {
            const Strip s = fam.strip(li, i);
            csv.row(s.line.theta(), s.line.rho(), s.width);
        }
    }
    return csv.str();
}

} // namespace fractal
