#pragma once

#include <cstddef>
#include <cstdint>

#include "fractal/cantor.hpp"
#include "fractal/geometry.hpp"

namespace fractal {

// Sum over level-n entries (with multiplicity) of the chord length in each
// entry square. Hierarchical pruning; equals the naive sum to 1e-9.
double line_total_length(const Construction& c, std::size_t level, const Line& line);
double line_total_length_naive(const Construction& c, std::size_t level, const Line& line);

// Z(S, n): number of level-n entries (with multiplicity) whose closed square
// meets the open strip. Pruned descent equals brute force exactly.
std::uint64_t strip_count(const Construction& c, std::size_t level, const Strip& strip);
std::uint64_t strip_count_naive(const Construction& c, std::size_t level, const Strip& strip);

struct SupLineOptions {
    std::size_t max_lines = 10'000'000;
    // When set, the family spacing is coarsened (integer multiples of r_n)
    // until the family fits max_lines instead of failing the guard.
    bool coarsen_to_fit = false;
    int threads = 1;
};

struct SupLineResult {
    double value = 0;       // max over the family of |l ∩ F_n| plus r_n
    Line argmax;
    std::size_t family_size = 0;
    Rational spacing;       // effective boundary-grid spacing used
};

// Upper proxy for sup over all lines of |l ∩ F_n| via the boundary-grid line
// family at resolution r_n.
SupLineResult sup_line_length(const Construction& c, std::size_t level,
                              const SupLineOptions& opts = {});

} // namespace fractal
