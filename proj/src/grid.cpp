#include "fractal/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace fractal {

GridSequence GridSequence::constant(std::uint32_t m, std::uint32_t n, std::size_t depth) {
    GridSequence seq;
    seq.M.assign(depth, m);
    seq.N.assign(depth, n);
    seq.validate();
    return seq;
}

GridSequence GridSequence::from_fn(const std::function<std::uint32_t(std::size_t)>& m_fn,
                                   const std::function<std::uint32_t(std::size_t)>& n_fn,
                                   std::size_t depth) {
    GridSequence seq;
    seq.M.reserve(depth);
    seq.N.reserve(depth);
    for (std::size_t k = 1; k <= depth; ++k) {
        seq.M.push_back(m_fn(k));
        seq.N.push_back(n_fn(k));
    }
    seq.validate();
    return seq;
}

void GridSequence::validate() const {
    if (M.size() != N.size()) throw std::invalid_argument("GridSequence: M and N lengths differ");
    for (std::size_t i = 0; i < M.size(); ++i) {
        if (M[i] < 2) throw std::invalid_argument("GridSequence: M_" + std::to_string(i + 1) + " < 2");
        const std::uint64_t cap = static_cast<std::uint64_t>(M[i]) * M[i];
        if (N[i] < 1 || N[i] > cap)
            throw std::invalid_argument("GridSequence: N_" + std::to_string(i + 1) +
                                        " outside [1, M^2]");
    }
}

std::string GridSequence::to_json() const {
    nlohmann::json j;
    j["M"] = M;
    j["N"] = N;
    return j.dump();
}

GridSequence GridSequence::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    GridSequence seq;
    seq.M = j.at("M").get<std::vector<std::uint32_t>>();
    seq.N = j.at("N").get<std::vector<std::uint32_t>>();
    seq.validate();
    return seq;
}

BigInt grid_denominator(const GridSequence& seq, std::size_t n, unsigned max_denom_bits) {
    if (n > seq.depth()) throw std::out_of_range("grid_denominator: level beyond sequence length");
    BigInt denom = 1;
    for (std::size_t i = 0; i < n; ++i) {
        denom *= seq.M[i];
        check_denominator_bits(denom, max_denom_bits, "grid_denominator");
    }
    return denom;
}

Scales derive_scales(const GridSequence& seq, std::size_t n, unsigned max_denom_bits) {
    if (n > seq.depth()) throw std::out_of_range("derive_scales: level beyond sequence length");
    const BigInt denom = grid_denominator(seq, n, max_denom_bits);
    BigInt P = 1;
    for (std::size_t i = 0; i < n; ++i) P *= seq.N[i];
    Scales s;
    s.r = Rational(1, denom);
    s.P = P;
    s.c = Rational(denom * denom, P);
    return s;
}

double dim_s(const GridSequence& seq, std::size_t n_terms) {
    if (n_terms < 1) throw std::invalid_argument("dim_s: n_terms must be >= 1");
    if (n_terms > seq.depth()) n_terms = seq.depth();
    double log_n_sum = 0.0, log_m_sum = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_terms; ++i) {
        log_n_sum += std::log(static_cast<double>(seq.N[i]));
        log_m_sum += std::log(static_cast<double>(seq.M[i]));
        best = std::min(best, log_n_sum / log_m_sum);
    }
    return best;
}

RatRect square_rect(const SquareAddr& addr, const GridSequence& seq, unsigned max_denom_bits) {
    if (addr.level() > seq.depth())
        throw std::out_of_range("square_rect: address deeper than sequence");
    BigInt denom = 1;
    BigInt xn = 0, yn = 0;
    for (std::size_t k = 0; k < addr.level(); ++k) {
        const std::uint32_t m = seq.M[k];
        const auto [col, row] = addr.digits[k];
        if (col >= m || row >= m) throw std::out_of_range("square_rect: digit out of range");
        denom *= m;
        check_denominator_bits(denom, max_denom_bits, "square_rect");
        xn = xn * m + col;
        yn = yn * m + row;
    }
    RatRect rect;
    rect.x0 = Rational(xn, denom);
    rect.y0 = Rational(yn, denom);
    rect.side = Rational(1, denom);
    return rect;
}

RectD square_rect_d(const SquareAddr& addr, const GridSequence& seq) {
    RectD r;
    double side = 1.0;
    double x = 0.0, y = 0.0;
    for (std::size_t k = 0; k < addr.level(); ++k) {
        side /= seq.M[k];
        x += addr.digits[k].first * side;
        y += addr.digits[k].second * side;
    }
    r.x0 = x;
    r.y0 = y;
    r.side = side;
    return r;
}

SquareAddr recover_address(const GridSequence& seq, std::size_t level,
                           const Rational& x0, const Rational& y0) {
    SquareAddr addr;
    Rational x = x0, y = y0;
    for (std::size_t k = 0; k < level; ++k) {
        const std::uint32_t m = seq.M[k];
        x *= m;
        y *= m;
        const BigInt cx = numerator(x) / denominator(x);
        const BigInt cy = numerator(y) / denominator(y);
        if (cx < 0 || cx >= m || cy < 0 || cy >= m)
            throw std::invalid_argument("recover_address: corner not on the level grid");
        addr.digits.emplace_back(cx.convert_to<std::uint32_t>(), cy.convert_to<std::uint32_t>());
        x -= cx;
        y -= cy;
    }
    if (x != 0 || y != 0)
        throw std::invalid_argument("recover_address: corner not exactly on the level grid");
    return addr;
}

} // namespace fractal
