#include "fractal/counting.hpp"

#include <algorithm>

#include "fractal/parallel.hpp"

namespace fractal {

namespace {

// Depth-first walk over the implicit tree: entry i of generation k has
// children [i*N_{k+1}, (i+1)*N_{k+1}) in generation k+1. Child rectangles are
// derived from the parent rectangle and the child's last digit.
template <typename Prune, typename Leaf>
void walk(const Construction& c, std::size_t target_level, std::size_t level, std::size_t index,
          const RectD& rect, const Prune& prune, const Leaf& leaf) {
    if (level == target_level) {
        leaf(rect);
        return;
    }
    const std::uint32_t m = c.seq.M[level];
    const std::uint32_t n_children = c.seq.N[level];
    const Generation& next = c.levels[level];
    const double child_side = rect.side / m;
    const std::size_t first = index * n_children;
    for (std::size_t j = 0; j < n_children; ++j) {
        const std::size_t child = first + j;
        const auto [col, row] = next.entries[child].digits[level];
        const RectD child_rect{rect.x0 + col * child_side, rect.y0 + row * child_side, child_side};
        if (!prune(child_rect)) walk(c, target_level, level + 1, child, child_rect, prune, leaf);
    }
}

constexpr double kPruneSlack = 1e-12;

} // namespace

double line_total_length(const Construction& c, std::size_t level, const Line& line) {
    if (level < 1 || level > c.depth()) throw std::out_of_range("line_total_length: level not built");
    double total = 0;
    const auto prune = [&](const RectD& r) {
        // keep subtrees whose square the line touches or nearly touches
        const Strip hairline{line, 0.0};
        return !square_meets_strip_slack(r, hairline, kPruneSlack);
    };
    walk(c, level, 0, 0, RectD{0, 0, 1}, prune,
         [&](const RectD& r) { total += line_rect_length(line, r); });
    return total;
}

double line_total_length_naive(const Construction& c, std::size_t level, const Line& line) {
    if (level < 1 || level > c.depth()) throw std::out_of_range("line_total_length: level not built");
    double total = 0;
    for (const SquareAddr& addr : c.generation(level).entries)
        total += line_rect_length(line, square_rect_d(addr, c.seq));
    return total;
}

std::uint64_t strip_count(const Construction& c, std::size_t level, const Strip& strip) {
    if (level < 1 || level > c.depth()) throw std::out_of_range("strip_count: level not built");
    std::uint64_t count = 0;
    const auto prune = [&](const RectD& r) { return !square_meets_strip_slack(r, strip, kPruneSlack); };
    walk(c, level, 0, 0, RectD{0, 0, 1}, prune, [&](const RectD& r) {
        if (square_meets_strip(r, strip)) ++count;
    });
    return count;
}

std::uint64_t strip_count_naive(const Construction& c, std::size_t level, const Strip& strip) {
    if (level < 1 || level > c.depth()) throw std::out_of_range("strip_count: level not built");
    std::uint64_t count = 0;
    for (const SquareAddr& addr : c.generation(level).entries)
        if (square_meets_strip(square_rect_d(addr, c.seq), strip)) ++count;
    return count;
}

SupLineResult sup_line_length(const Construction& c, std::size_t level, const SupLineOptions& opts) {
    const Scales sc = derive_scales(c.seq, level);
    const LineFamily fam = opts.coarsen_to_fit ? line_family_capped(sc.r, opts.max_lines)
                                               : line_family(sc.r, opts.max_lines);
    std::vector<double> lengths(fam.lines.size());
    parallel_for(fam.lines.size(), opts.threads,
                 [&](std::size_t i) { lengths[i] = line_total_length(c, level, fam.lines[i]); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < lengths.size(); ++i)
        if (lengths[i] > lengths[best]) best = i;
    SupLineResult res;
    res.value = lengths.empty() ? to_double(sc.r) : lengths[best] + to_double(sc.r);
    res.argmax = lengths.empty() ? Line() : fam.lines[best];
    res.family_size = fam.lines.size();
    res.spacing = fam.spacing;
    return res;
}

} // namespace fractal
