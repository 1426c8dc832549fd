#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fractal/geometry.hpp"
#include "fractal/grid.hpp"
#include "fractal/rng.hpp"

namespace fractal {

// Ordered multiset of chosen squares at one level. Duplicates are kept and
// count with multiplicity everywhere.
struct Generation {
    std::vector<SquareAddr> entries;
};

struct GenerateGuards {
    unsigned max_denom_bits = kDefaultDenomBits;
    std::uint64_t max_total_entries = 20'000'000;
};

// Immutable sampled construction F_1..F_depth. Generation n+1 lists, for each
// parent entry in order, its N_{n+1} child draws consecutively; the nested
// tree is implicit in that layout.
struct Construction {
    GridSequence seq;
    std::vector<Generation> levels;  // levels[k] holds F_{k+1}
    std::uint64_t seed = 0;

    std::size_t depth() const { return levels.size(); }
    const Generation& generation(std::size_t level) const { return levels.at(level - 1); }
};

// Child draws are keyed by (seed, level, parent index, draw index); identical
// inputs reproduce the construction bit for bit on any thread count.
Construction generate(const GridSequence& seq, std::size_t depth, std::uint64_t seed,
                      const GenerateGuards& guards = {});

// Keeps levels <= n, redraws deeper levels under seed2.
Construction resample_level(const Construction& c, std::size_t n, std::uint64_t seed2,
                            const GenerateGuards& guards = {});

// mu_n mass of an axis-aligned rational rectangle, computed exactly.
Rational measure_mass_exact(const Construction& c, std::size_t level, const RatBox& region);

// mu_n mass of a strip region (double path, convex clipping per entry).
double measure_mass(const Construction& c, std::size_t level, const Strip& region);

// Mass that the projection to the line assigns to the interval of radius r
// around coordinate x0 on the line: (pi_l)_* mu_n (B(x0, r)).
double project_mass_interval(const Construction& c, std::size_t level, const Line& line,
                             double x0, double r);

// JSON-lines persistence: one generation per line, addresses as digit arrays.
void dump_jsonl(const Construction& c, std::ostream& os);
Construction load_jsonl(std::istream& is);

} // namespace fractal
