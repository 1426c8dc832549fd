#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fractal/cantor.hpp"
#include "fractal/grid.hpp"

namespace fractal {

// Generating-set laws for random covering sets on the 2-torus. Power laws
// only; delta is the inscribed-ball radius law, rho the diameter law.
struct CoveringSpec {
    enum class Shape { Ball, Rectangle };
    Shape shape = Shape::Ball;
    double alpha = 1.5;  // ball: delta_n = rho_n = n^-alpha; rectangle: x-side exponent
    double beta = 0.0;   // rectangle: y-side exponent (beta > alpha)

    double delta(std::uint64_t n) const;
    double rho(std::uint64_t n) const;
    // ball-like condition: log rho_n / log delta_n -> 1
    double ball_like_ratio(std::uint64_t n) const;

    std::string to_json() const;
    static CoveringSpec from_json(const std::string& text);
};

// Uniform iid torus translations xi_1..xi_N (1-based indexing).
struct CoveringSample {
    CoveringSpec spec;
    std::uint64_t seed = 0;
    std::vector<double> xs, ys;

    std::uint64_t horizon() const { return xs.size(); }
    Vec2 xi(std::uint64_t n) const { return {xs[n - 1], ys[n - 1]}; }
};

CoveringSample sample_covering(const CoveringSpec& spec, std::uint64_t N, std::uint64_t seed);

// limsup proxy: max over 2 <= n <= n_max of log n / (-log rho_n).
double s0_value(const CoveringSpec& spec, std::uint64_t n_max);

struct NkResult {
    std::vector<std::uint64_t> nk;
    std::vector<double> delta_log_ratios;  // log delta_{n_{k-1}} / log delta_{n_k}
    double factor = 256.0;                 // growth constant actually used
    bool relaxed = false;                  // true when factor != 256 (outside paper constants)
};

// n_k = smallest integer >= factor * k^2 * n_{k-1}^2 * delta_{n_{k-1}}^{-2}
// that also attains the limsup proxy. factor = 256 reproduces the reference
// constants; smaller factors are desk-scale relaxations.
NkResult choose_nk(const CoveringSpec& spec, std::size_t k_max, std::uint64_t n1,
                   double factor = 256.0);

// Probability lower bound for the level-k extraction event:
// 1 - 256 * Ntilde_{k-1}^2 * delta_{n_{k-1}}^{-2} / n_k.
double omega_bound(std::size_t k, const std::vector<std::uint64_t>& nk, const CoveringSpec& spec,
                   std::uint64_t Ntilde_prev, double factor = 256.0);

struct LevelExtraction {
    std::uint64_t n_k = 0;
    std::uint32_t M_k = 0;
    std::uint64_t N_k = 0;
    std::uint64_t Ntilde = 0;
    std::uint64_t m_k = 0;  // block length, k >= 2
    bool omega_ok = true;
    std::vector<std::uint64_t> chosen_indices;  // I(k, .) flattened in parent order
    std::vector<SquareAddr> squares;            // C_k in the extracted grid
};

struct ExtractionResult {
    std::vector<LevelExtraction> levels;
    GridSequence seq;  // extracted (M_k, N_k) over completed levels
    bool all_omega = true;
    std::vector<double> q_bounds;  // q_1 = 1, then omega_bound per level
    std::uint64_t tie_breaks = 0;

    std::string to_json() const;
};

// Inductive extraction of a Cantor-like construction inside the covering
// balls. Stops at the first failed Omega_k. Throws on an invariant breach
// (a chosen square not inside its ball).
ExtractionResult extract_cantor(const CoveringSample& sample, const std::vector<std::uint64_t>& nk,
                                std::uint64_t tie_seed, double factor = 256.0);

// View of a completed extraction as a nested construction (parents have
// exactly N_k children each, in block order).
Construction to_construction(const ExtractionResult& r, std::uint64_t seed_tag = 0);

// Deterministic post-checks of the extraction inequalities; returns
// human-readable violation strings (empty = all inequalities hold).
std::vector<std::string> extraction_invariants(const ExtractionResult& r,
                                               const CoveringSample& sample, double factor = 256.0);

// Shortest wrapped distance on the torus.
double torus_dist(Vec2 a, Vec2 b);

// Directional box-count report of the projections of the stage-K horizon-N
// approximation of a rectangle covering set.
struct AnisoReport {
    double slope_x = 0, slope_y = 0;
    double r2_x = 0, r2_y = 0;
    std::vector<double> mesh;
    std::vector<std::uint64_t> counts_x, counts_y;
    double target_x = 0, target_y = 0;  // 1/alpha and 1/beta
};

AnisoReport aniso_experiment(double alpha, double beta, std::uint64_t N, std::uint64_t seed,
                             std::size_t stage_k = 3, std::size_t mesh_min_pow = 4,
                             std::size_t mesh_max_pow = 14);

// Binary columnar persistence: one JSON header line, then the columns
// n, xi_x, xi_y as little-endian float64.
void save_covering(const CoveringSample& sample, std::ostream& os);
CoveringSample load_covering(std::istream& is);

} // namespace fractal
