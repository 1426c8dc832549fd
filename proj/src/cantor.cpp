#include "fractal/cantor.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "fractal/parallel.hpp"
#include "json.hpp"

namespace fractal {

namespace {

// Child draws are keyed by (seed, level, parent, draw), so parents can be
// expanded in parallel into disjoint slots without changing the result.
void append_level(Construction& c, std::size_t level, std::uint64_t key,
                  const GenerateGuards& guards) {
    const std::uint32_t m = c.seq.M[level - 1];
    const std::uint32_t n_draws = c.seq.N[level - 1];
    const std::uint64_t m2 = static_cast<std::uint64_t>(m) * m;
    const std::size_t parent_count = level == 1 ? 1 : c.levels[level - 2].entries.size();
    const std::uint64_t total = static_cast<std::uint64_t>(parent_count) * n_draws;
    if (total > guards.max_total_entries)
        throw guard_error("generate: total entry guard exceeded at level " + std::to_string(level));

    Generation gen;
    gen.entries.resize(total);
    const std::uint32_t word0 = stream_word(RngStream::ChildDraw, static_cast<std::uint32_t>(level));
    static const SquareAddr kRootAddr{};
    const int workers = total >= 65536 ? default_threads() : 1;
    parallel_for(parent_count, workers, [&](std::size_t parent) {
        const SquareAddr& base = level == 1 ? kRootAddr : c.levels[level - 2].entries[parent];
        for (std::uint32_t draw = 0; draw < n_draws; ++draw) {
            const std::uint64_t v = uniform_below(key, word0, parent, draw, m2);
            SquareAddr child = base;
            child.digits.emplace_back(static_cast<std::uint32_t>(v % m),
                                      static_cast<std::uint32_t>(v / m));
            gen.entries[parent * n_draws + draw] = std::move(child);
        }
    });
    c.levels.push_back(std::move(gen));
}

} // namespace

Construction generate(const GridSequence& seq, std::size_t depth, std::uint64_t seed,
                      const GenerateGuards& guards) {
    seq.validate();
    if (depth > seq.depth()) throw std::out_of_range("generate: depth beyond sequence length");
    grid_denominator(seq, depth, guards.max_denom_bits);  // depth guard, fails loudly
    Construction c;
    c.seq = seq;
    c.seed = seed;
    for (std::size_t level = 1; level <= depth; ++level) append_level(c, level, seed, guards);
    return c;
}

Construction resample_level(const Construction& c, std::size_t n, std::uint64_t seed2,
                            const GenerateGuards& guards) {
    if (n < 1 || n >= c.depth())
        throw std::out_of_range("resample_level: level must satisfy 1 <= n < depth");
    Construction out;
    out.seq = c.seq;
    out.seed = seed2;
    out.levels.assign(c.levels.begin(), c.levels.begin() + n);
    for (std::size_t level = n + 1; level <= c.depth(); ++level)
        append_level(out, level, seed2, guards);
    return out;
}

Rational measure_mass_exact(const Construction& c, std::size_t level, const RatBox& region) {
    if (level > c.depth()) throw std::out_of_range("measure_mass_exact: level not built");
    const Scales sc = derive_scales(c.seq, level);
    const Rational rx0 = region.x0, rx1 = region.x0 + region.width;
    const Rational ry0 = region.y0, ry1 = region.y0 + region.height;
    const auto overlap = [](const Rational& a0, const Rational& a1, const Rational& b0,
                            const Rational& b1) -> Rational {
        const Rational lo = a0 > b0 ? a0 : b0;
        const Rational hi = a1 < b1 ? a1 : b1;
        return hi > lo ? hi - lo : Rational(0);
    };
    Rational total = 0;
    if (level == 0) return overlap(0, 1, rx0, rx1) * overlap(0, 1, ry0, ry1);
    for (const SquareAddr& addr : c.generation(level).entries) {
        const RatRect q = square_rect(addr, c.seq);
        const Rational w = overlap(q.x0, q.x0 + q.side, rx0, rx1);
        if (w == 0) continue;
        const Rational h = overlap(q.y0, q.y0 + q.side, ry0, ry1);
        total += w * h;
    }
    return total * sc.c;
}

double measure_mass(const Construction& c, std::size_t level, const Strip& region) {
    if (level > c.depth()) throw std::out_of_range("measure_mass: level not built");
    const Scales sc = derive_scales(c.seq, level);
    double area = 0;
    for (const SquareAddr& addr : c.generation(level).entries) {
        const RectD q = square_rect_d(addr, c.seq);
        if (!square_meets_strip_slack(q, region)) continue;
        area += strip_rect_area(region, q);
    }
    return area * to_double(sc.c);
}

double project_mass_interval(const Construction& c, std::size_t level, const Line& line,
                             double x0, double r) {
    if (r <= 0) throw std::invalid_argument("project_mass_interval: radius must be positive");
    // Preimage of B(x0, r) under projection to the line: the slab of width 2r
    // around the perpendicular line through the point at coordinate x0.
    constexpr double kHalfPi = 1.57079632679489661923;
    const Line perpendicular(line.theta() - kHalfPi, x0);
    return measure_mass(c, level, Strip{perpendicular, 2 * r});
}

void dump_jsonl(const Construction& c, std::ostream& os) {
    nlohmann::json head;
    head["seq"] = nlohmann::json::parse(c.seq.to_json());
    head["seed"] = c.seed;
    head["depth"] = c.depth();
    os << head.dump() << '\n';
    for (const Generation& gen : c.levels) {
        nlohmann::json row = nlohmann::json::array();
        for (const SquareAddr& addr : gen.entries) {
            nlohmann::json digits = nlohmann::json::array();
            for (const auto& [col, row_digit] : addr.digits)
                digits.push_back(nlohmann::json::array({col, row_digit}));
            row.push_back(std::move(digits));
        }
        os << row.dump() << '\n';
    }
}

Construction load_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("load_jsonl: empty stream");
    const nlohmann::json head = nlohmann::json::parse(line);
    Construction c;
    c.seq = GridSequence::from_json(head.at("seq").dump());
    c.seed = head.at("seed").get<std::uint64_t>();
    const std::size_t depth = head.at("depth").get<std::size_t>();
    for (std::size_t lv = 1; lv <= depth; ++lv) {
        if (!std::getline(is, line)) throw std::runtime_error("load_jsonl: truncated stream");
        const nlohmann::json row = nlohmann::json::parse(line);
        Generation gen;
        gen.entries.reserve(row.size());
        for (const auto& digits : row) {
            SquareAddr addr;
            for (const auto& d : digits)
                addr.digits.emplace_back(d.at(0).get<std::uint32_t>(), d.at(1).get<std::uint32_t>());
            gen.entries.push_back(std::move(addr));
        }
        c.levels.push_back(std::move(gen));
    }
    return c;
}

} // namespace fractal
