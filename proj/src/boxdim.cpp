#include "fractal/boxdim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fractal/csv.hpp"
#include "fractal/parallel.hpp"
#include "fractal/rng.hpp"

namespace fractal {

namespace {

struct Interval {
    double lo, hi;
};

// Projections of the level squares onto the line direction, merged.
std::vector<Interval> projected_intervals(const Construction& c, std::size_t level,
                                          const Line& line) {
    const Vec2 d = line.direction();
    std::vector<Interval> iv;
    iv.reserve(c.generation(level).entries.size());
    for (const SquareAddr& addr : c.generation(level).entries) {
        const RectD r = square_rect_d(addr, c.seq);
        // extremes of x*dx + y*dy over the square
        const double base = r.x0 * d.x + r.y0 * d.y;
        const double ex = r.side * d.x;
        const double ey = r.side * d.y;
        const double lo = base + std::min(0.0, ex) + std::min(0.0, ey);
        const double hi = base + std::max(0.0, ex) + std::max(0.0, ey);
        iv.push_back({lo, hi});
    }
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const Interval& s : iv) {
        if (!merged.empty() && s.lo <= merged.back().hi) {
            merged.back().hi = std::max(merged.back().hi, s.hi);
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

std::uint64_t count_cells_anchored(const std::vector<Interval>& merged, double eps,
                                   double anchor) {
    std::uint64_t count = 0;
    long long prev_hi = std::numeric_limits<long long>::min();
    for (const Interval& s : merged) {
        if (s.hi <= s.lo) continue;
        long long lo = static_cast<long long>(std::floor((s.lo - anchor) / eps));
        const long long hi = static_cast<long long>(std::ceil((s.hi - anchor) / eps)) - 1;
        if (lo <= prev_hi) lo = prev_hi + 1;
        if (hi >= lo) {
            count += static_cast<std::uint64_t>(hi - lo + 1);
            prev_hi = hi;
        }
    }
    return count;
}

// Cells [j eps, (j+1) eps) meeting the half-open intervals [lo, hi). The mesh
// is anchored at the left end of the union and the count canonicalized over
// the two orientations, so counts are invariant under translations and
// reflections of the projection axis.
std::uint64_t count_mesh_cells(const std::vector<Interval>& merged, double eps) {
    if (merged.empty()) return 0;
    const std::uint64_t forward = count_cells_anchored(merged, eps, merged.front().lo);
    std::vector<Interval> mirrored;
    mirrored.reserve(merged.size());
    for (auto it = merged.rbegin(); it != merged.rend(); ++it)
        mirrored.push_back({-it->hi, -it->lo});
    const std::uint64_t backward = count_cells_anchored(mirrored, eps, mirrored.front().lo);
    return std::min(forward, backward);
}

void least_squares(const std::vector<double>& mesh, const std::vector<std::uint64_t>& counts,
                   double& slope, double& r2) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (counts[i] == 0) continue;
        xs.push_back(std::log(1.0 / mesh[i]));
        ys.push_back(std::log(static_cast<double>(counts[i])));
    }
    if (xs.size() < 2) throw std::invalid_argument("direction_sweep: degenerate fit (single mesh)");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (slope * xs[i] + intercept);
        ss_res += e * e;
    }
    r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

constexpr double kPi = 3.14159265358979323846;

} // namespace

std::uint64_t boxcount_projection(const Construction& c, std::size_t level, const Line& line,
                                  double eps) {
    if (eps <= 0) throw std::invalid_argument("boxcount_projection: eps must be positive");
    return count_mesh_cells(projected_intervals(c, level, line), eps);
}

std::vector<double> construction_mesh(const GridSequence& seq, std::size_t level, std::size_t drop) {
    std::vector<double> mesh;
    double r = 1.0;
    for (std::size_t k = 1; k <= level; ++k) {
        r /= seq.M[k - 1];
        if (k > drop) mesh.push_back(r);
    }
    return mesh;
}

SweepResult direction_sweep(const Construction& c, std::size_t level, std::size_t directions,
                            const std::vector<double>& mesh, int threads) {
    if (directions < 2) throw std::invalid_argument("direction_sweep: need at least 2 directions");
    if (mesh.size() < 2) throw std::invalid_argument("direction_sweep: degenerate fit (single mesh)");
    SweepResult out;
    out.reports.resize(directions);
    parallel_for(directions, threads, [&](std::size_t j) {
        SlopeReport rep;
        rep.theta = static_cast<double>(j) * kPi / static_cast<double>(directions);
        const Line line(rep.theta, 0.0);
        const auto merged = projected_intervals(c, level, line);
        rep.mesh = mesh;
        rep.counts.reserve(mesh.size());
        for (double eps : mesh) rep.counts.push_back(count_mesh_cells(merged, eps));
        least_squares(rep.mesh, rep.counts, rep.slope, rep.r2);
        out.reports[j] = std::move(rep);
    });
    out.min_slope = out.reports[0].slope;
    out.argmin_theta = out.reports[0].theta;
    for (const SlopeReport& rep : out.reports) {
        if (rep.slope < out.min_slope) {
            out.min_slope = rep.slope;
            out.argmin_theta = rep.theta;
        }
    }
    return out;
}

std::vector<LocalDimViolation> local_dim_scan(const Construction& c, std::size_t level,
                                              const BoundParams& p, std::size_t samples,
                                              std::uint64_t seed) {
    std::vector<LocalDimViolation> out;
    SeqRng rng(derive_key(seed, 0x10CA1));
    const double C0 = p.C0;
    const double r_min = level_reals(c.seq, level).r / 10.0;
    const auto& entries = c.generation(level).entries;
    for (std::size_t i = 0; i < samples; ++i) {
        const double theta = rng.range(0.0, kPi);
        const Line line(theta, rng.range(-0.2, 1.2));
        // center the interval on the projection of a support point, so every
        // sample probes where the measure actually lives
        const RectD q = square_rect_d(entries[rng.below(entries.size())], c.seq);
        const Vec2 anchor{q.x0 + q.side * rng.unit(), q.y0 + q.side * rng.unit()};
        const double x = line.project_coord(anchor);
        const double r = r_min * std::pow(2.0 / r_min, rng.unit());  // log-uniform up to 2
        const double mass = project_mass_interval(c, level, line, x, r);
        const double bound = C0 * std::pow(r, p.t);
        if (mass > bound) out.push_back({line, x, r, mass, bound});
    }
    return out;
}

ClosingBoundResult closing_bound_check(const Construction& c, std::size_t n, const BoundParams& p,
                                       std::size_t max_strips_per_level, std::uint64_t seed) {
    ClosingBoundResult out;
    if (n + 1 > c.depth()) throw std::out_of_range("closing_bound_check: level n+1 not built");
    const LevelReals lv_next = level_reals(c.seq, n + 1);
    const std::uint32_t width_classes = c.seq.M[n];
    const double factor = 500.0 * std::pow(5.0, p.t) * p.R;

    // family lines at the next-level strip grid, subsampled when too many
    const BigInt inv_r = grid_denominator(c.seq, n + 1);
    const BigInt M_fam_big = 5 * inv_r;
    std::vector<Line> lines;
    if (M_fam_big <= 64) {
        lines = event_A_lines(c.seq, n + 1);
    } else {
        const double M_fam = M_fam_big.convert_to<double>();
        SeqRng rng(derive_key(seed, n));
        const std::size_t want = max_strips_per_level / std::max<std::uint32_t>(width_classes, 1);
        for (std::size_t i = 0; i < want; ++i) {
            // random pair of boundary-grid points at spacing 1/M_fam
            const auto boundary_point = [&](double offset, std::uint64_t side) -> Vec2 {
                switch (side) {
                    case 0: return {0.0, offset};
                    case 1: return {1.0, offset};
                    case 2: return {offset, 0.0};
                    default: return {offset, 1.0};
                }
            };
            const double o1 = static_cast<double>(1 + rng.below(static_cast<std::uint64_t>(M_fam))) / M_fam;
            const double o2 = static_cast<double>(1 + rng.below(static_cast<std::uint64_t>(M_fam))) / M_fam;
            const std::uint64_t s1 = rng.below(4), s2 = rng.below(4);
            const Vec2 a = boundary_point(o1, s1), b = boundary_point(o2, s2);
            if (std::abs(a.x - b.x) < 1e-12 && std::abs(a.y - b.y) < 1e-12) continue;
            lines.push_back(Line::through_points(a, b));
        }
    }

    for (const Line& line : lines) {
        for (std::uint32_t i = 1; i <= width_classes; ++i) {
            const Strip S{line, i * lv_next.r};
            const double threshold = factor * lv_next.P * std::pow(S.width, p.t);
            if (static_cast<double>(strip_count(c, n + 1, S)) > threshold) {
                ++out.skipped;  // A(S, n+1) false, not scored
                continue;
            }
            ++out.checked;
            const double mass = measure_mass(c, n + 1, S);
            const double bound = factor * std::pow(S.width, p.t);
            if (mass > bound) out.violations.push_back({n, S, mass, bound});
        }
    }
    return out;
}

std::string slope_reports_to_csv(const std::vector<SlopeReport>& reports) {
    CsvWriter csv({"theta", "eps", "count", "slope", "r2"});
    for (const SlopeReport& rep : reports) {
        for (std::size_t i = 0; i < rep.mesh.size(); ++i)
            csv.row(rep.theta, rep.mesh[i], rep.counts[i], rep.slope, rep.r2);
    }
    return csv.str();
}

std::string slope_report_to_svg(const SlopeReport& report) {
    const double width = 480, height = 360, margin = 48;
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "'>\n";
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < report.mesh.size(); ++i) {
        if (report.counts[i] == 0) continue;
        const double x = std::log10(1.0 / report.mesh[i]);
        const double y = std::log10(static_cast<double>(report.counts[i]));
        pts.push_back({x, y});
        x_lo = std::min(x_lo, x), x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y), y_hi = std::max(y_hi, y);
    }
    if (pts.size() >= 2 && x_hi > x_lo && y_hi > y_lo) {
        const auto sx = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
        const auto sy = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };
        os << "<polyline fill='none' stroke='black' points='";
        for (const auto& [x, y] : pts) os << sx(x) << ',' << sy(y) << ' ';
        os << "'/>\n";
        for (const auto& [x, y] : pts)
            os << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='3'/>\n";
    }
    os << "<text x='" << margin << "' y='20'>theta=" << format_number(report.theta)
       << " slope=" << format_number(report.slope) << " r2=" << format_number(report.r2)
       << "</text>\n</svg>\n";
    return os.str();
}

} // namespace fractal
