#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fractal/rational.hpp"

namespace fractal {

constexpr unsigned kDefaultDenomBits = 256;

// Defining sequences (M_n), (N_n) of the nested construction: at level n the
// grid subdivides by M_n per axis and N_n subsquares are picked per parent.
struct GridSequence {
    std::vector<std::uint32_t> M;
    std::vector<std::uint32_t> N;

    std::size_t depth() const { return M.size(); }

    static GridSequence constant(std::uint32_t m, std::uint32_t n, std::size_t depth);
    // Generator-callback form: levels are 1-based.
    static GridSequence from_fn(const std::function<std::uint32_t(std::size_t)>& m_fn,
                                const std::function<std::uint32_t(std::size_t)>& n_fn,
                                std::size_t depth);

    // Enforces M_n >= 2 and 1 <= N_n <= M_n^2 at every level.
    void validate() const;

    std::string to_json() const;
    static GridSequence from_json(const std::string& text);
};

// Exact per-level scale data: r_n = 1/(M_1...M_n), P_n = N_1...N_n,
// c_n = r_n^{-2} P_n^{-1}.
struct Scales {
    Rational r;
    BigInt P;
    Rational c;
};

Scales derive_scales(const GridSequence& seq, std::size_t n,
                     unsigned max_denom_bits = kDefaultDenomBits);

// Grid resolution denominator 1/r_n as an exact integer.
BigInt grid_denominator(const GridSequence& seq, std::size_t n,
                        unsigned max_denom_bits = kDefaultDenomBits);

// Finite proxy for the liminf in the dimension formula: minimum over
// 1 <= m <= n_terms of sum(log N_i)/sum(log M_i).
double dim_s(const GridSequence& seq, std::size_t n_terms);

// Address of a level-n grid square: digit (column,row) pairs, one per level,
// each in [0, M_k-1]^2.
struct SquareAddr {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> digits;

    std::size_t level() const { return digits.size(); }
    bool operator==(const SquareAddr&) const = default;
};

// Axis-aligned square with exact rational corners, side = r_n.
struct RatRect {
    Rational x0, y0;
    Rational side;
};

// General axis-aligned rational rectangle (exact measure regions).
struct RatBox {
    Rational x0, y0;
    Rational width, height;

    RatBox() = default;
    RatBox(Rational x, Rational y, Rational w, Rational h)
        : x0(std::move(x)), y0(std::move(y)), width(std::move(w)), height(std::move(h)) {}
    RatBox(const RatRect& r) : x0(r.x0), y0(r.y0), width(r.side), height(r.side) {}
};

// Double-precision mirror for geometry paths tolerating 1e-12 grade error.
struct RectD {
    double x0 = 0, y0 = 0, side = 1;
    double x1() const { return x0 + side; }
    double y1() const { return y0 + side; }
};

RatRect square_rect(const SquareAddr& addr, const GridSequence& seq,
                    unsigned max_denom_bits = kDefaultDenomBits);
RectD square_rect_d(const SquareAddr& addr, const GridSequence& seq);

// Inverse of square_rect on exact lower-left corners.
SquareAddr recover_address(const GridSequence& seq, std::size_t level,
                           const Rational& x0, const Rational& y0);

} // namespace fractal
