#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fractal/cantor.hpp"
#include "fractal/concentration.hpp"
#include "fractal/counting.hpp"
#include "fractal/geometry.hpp"

namespace fractal {

// Log-log box-count fit for one projection direction.
struct SlopeReport {
    double theta = 0;
    std::vector<double> mesh;
    std::vector<std::uint64_t> counts;
    double slope = 0;
    double r2 = 0;
};

// Number of eps-mesh cells on the line meeting the union of the projected
// level-n entry squares (projections merged as half-open intervals).
std::uint64_t boxcount_projection(const Construction& c, std::size_t level, const Line& line,
                                  double eps);

struct SweepResult {
    std::vector<SlopeReport> reports;
    double min_slope = 0;
    double argmin_theta = 0;
};

// Box-count slopes over directions theta_j = j pi / K; the minimum over
// directions is the quantity expected to match the construction dimension.
SweepResult direction_sweep(const Construction& c, std::size_t level, std::size_t directions,
                            const std::vector<double>& mesh, int threads = 1);

// Mesh tied to construction scales, coarsest `drop` levels removed.
std::vector<double> construction_mesh(const GridSequence& seq, std::size_t level,
                                      std::size_t drop = 2);

// One projected-mass sample that violates mass <= C0 * r^t.
struct LocalDimViolation {
    Line line;
    double x = 0;
    double r = 0;
    double mass = 0;
    double bound = 0;
};

// Samples (line, point, radius) triples plus the level strip families and
// reports every projected-mass bound violation (empty = the local-dimension
// event holds on the tested family).
std::vector<LocalDimViolation> local_dim_scan(const Construction& c, std::size_t level,
                                              const BoundParams& p, std::size_t samples,
                                              std::uint64_t seed);

// Closing-bound cross-check: for strips of the next-level family with the
// per-strip event true, mu_{n+1}(S) <= 500 * 5^t * R * w(S)^t. Returns
// violation descriptors (expected none).
struct ClosingBoundViolation {
    std::size_t level = 0;
    Strip strip;
    double mass = 0;
    double bound = 0;
};
struct ClosingBoundResult {
    std::vector<ClosingBoundViolation> violations;
    std::uint64_t checked = 0;  // strips with the per-strip event true
    std::uint64_t skipped = 0;  // strips where the event failed (not scored)
};
ClosingBoundResult closing_bound_check(const Construction& c, std::size_t n, const BoundParams& p,
                                       std::size_t max_strips_per_level, std::uint64_t seed);

std::string slope_reports_to_csv(const std::vector<SlopeReport>& reports);
// Minimal log-log SVG plot of one report.
std::string slope_report_to_svg(const SlopeReport& report);

} // namespace fractal
