#include "fractal/covering.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fractal/rng.hpp"
#include "json.hpp"

namespace fractal {

double CoveringSpec::delta(std::uint64_t n) const {
    const double nd = static_cast<double>(n);
    if (shape == Shape::Ball) return std::pow(nd, -alpha);
    return 0.5 * std::pow(nd, -beta);  // rectangle inradius: half the short side
}

double CoveringSpec::rho(std::uint64_t n) const {
    const double nd = static_cast<double>(n);
    if (shape == Shape::Ball) return std::pow(nd, -alpha);
    return std::hypot(std::pow(nd, -alpha), std::pow(nd, -beta));
}

double CoveringSpec::ball_like_ratio(std::uint64_t n) const {
    return std::log(rho(n)) / std::log(delta(n));
}

std::string CoveringSpec::to_json() const {
    nlohmann::json j;
    j["shape"] = shape == Shape::Ball ? "ball" : "rectangle";
    j["alpha"] = alpha;
    if (shape == Shape::Rectangle) j["beta"] = beta;
    return j.dump();
}

CoveringSpec CoveringSpec::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    CoveringSpec spec;
    spec.shape = j.at("shape").get<std::string>() == "ball" ? Shape::Ball : Shape::Rectangle;
    spec.alpha = j.at("alpha").get<double>();
    if (spec.shape == Shape::Rectangle) spec.beta = j.at("beta").get<double>();
    return spec;
}

CoveringSample sample_covering(const CoveringSpec& spec, std::uint64_t N, std::uint64_t seed) {
    if (N < 1) throw std::invalid_argument("sample_covering: N must be >= 1");
    CoveringSample s;
    s.spec = spec;
    s.seed = seed;
    s.xs.resize(N);
    s.ys.resize(N);
    const std::uint32_t word0 = stream_word(RngStream::CoveringPoint, 0);
    for (std::uint64_t n = 1; n <= N; ++n) {
        const auto x = Philox4x32::block(seed, word0, static_cast<std::uint32_t>(n),
                                         static_cast<std::uint32_t>(n >> 32), 0);
        const std::uint64_t vx = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
        const std::uint64_t vy = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
        s.xs[n - 1] = static_cast<double>(vx >> 11) * 0x1.0p-53;
        s.ys[n - 1] = static_cast<double>(vy >> 11) * 0x1.0p-53;
    }
    return s;
}

double s0_value(const CoveringSpec& spec, std::uint64_t n_max) {
    if (n_max < 2) throw std::invalid_argument("s0_value: n_max must be >= 2");
    double best = 0;
    for (std::uint64_t n = 2; n <= n_max; ++n)
        best = std::max(best, std::log(static_cast<double>(n)) / (-std::log(spec.rho(n))));
    return best;
}

NkResult choose_nk(const CoveringSpec& spec, std::size_t k_max, std::uint64_t n1, double factor) {
    if (n1 < 2) throw std::invalid_argument("choose_nk: n1 must be >= 2");
    const double s0 = s0_value(spec, std::max<std::uint64_t>(n1, 1024));
    if (s0 >= 1.0) throw std::invalid_argument("choose_nk: requires s0 < 1");
    NkResult out;
    out.factor = factor;
    out.relaxed = factor != 256.0;
    out.nk.push_back(n1);

    // deterministic extraction ladder for the viability floor in relaxed
    // mode: each level needs blocks long enough for at least one hit per
    // parent cell, i.e. m_k >= 2 (prod M_j)^2
    double ntilde = static_cast<double>(n1 / 2);
    double grid = std::ceil(2.0 / spec.delta(n1));

    for (std::size_t k = 2; k <= k_max; ++k) {
        const std::uint64_t prev = out.nk.back();
        const double d = spec.delta(prev);
        double raw = factor * static_cast<double>(k) * k * static_cast<double>(prev) * prev /
                     (d * d);
        if (out.relaxed) {
            const double viability =
                static_cast<double>(prev) + ntilde * (2.0 * grid * grid + 2.0) * 1.3;
            raw = std::max(raw, viability);
        }
        if (!(raw < 9.0e18))
            throw guard_error("choose_nk: n_k exceeds the horizon guard at k=" + std::to_string(k));
        std::uint64_t cand = static_cast<std::uint64_t>(std::ceil(raw));
        if (cand <= prev) cand = prev + 1;
        // advance until the limsup proxy is attained at the chosen index
        const auto ratio = [&](std::uint64_t n) {
            return std::log(static_cast<double>(n)) / (-std::log(spec.delta(n)));
        };
        const double sup = ratio(prev);  // power laws keep this constant
        std::uint64_t scan = 0;
        while (ratio(cand) < sup - 1e-9 && scan++ < 1000) ++cand;
        out.nk.push_back(cand);
        out.delta_log_ratios.push_back(std::log(spec.delta(prev)) / std::log(spec.delta(cand)));

        const double m_k = std::floor(static_cast<double>(cand - prev) / ntilde);
        const double area = 1.0 / (grid * grid);
        ntilde *= std::max(1.0, std::floor(0.5 * m_k * area));
        grid *= std::max(2.0, std::ceil(2.0 / (spec.delta(cand) * grid)));
    }
    return out;
}

double omega_bound(std::size_t k, const std::vector<std::uint64_t>& nk, const CoveringSpec& spec,
                   std::uint64_t Ntilde_prev, double factor) {
    if (k < 2 || k > nk.size()) throw std::out_of_range("omega_bound: k out of range");
    const double d = spec.delta(nk[k - 2]);
    const double bound = 1.0 - factor * static_cast<double>(Ntilde_prev) * Ntilde_prev /
                                   (d * d * static_cast<double>(nk[k - 1]));
    return bound;
}

double torus_dist(Vec2 a, Vec2 b) {
    double dx = std::abs(a.x - b.x);
    double dy = std::abs(a.y - b.y);
    dx = std::min(dx, 1.0 - dx);
    dy = std::min(dy, 1.0 - dy);
    return std::hypot(dx, dy);
}

namespace {

// Digit of the containing grid cell along one axis; exact grid-line hits
// resolve to the lexicographically smaller cell and are counted.
std::uint32_t axis_digit(double frac, std::uint32_t m, std::uint64_t& ties) {
    const double scaled = frac * m;
    double digit = std::floor(scaled);
    if (digit == scaled && digit > 0) {
        --digit;  // boundary tie: lexicographically smallest admissible square
        ++ties;
    }
    if (digit >= m) digit = m - 1;
    return static_cast<std::uint32_t>(digit);
}

// Address of the point in the nested grid M_1..M_k.
SquareAddr point_address(Vec2 p, const std::vector<std::uint32_t>& M, std::uint64_t& ties) {
    SquareAddr addr;
    double fx = p.x, fy = p.y;
    for (std::uint32_t m : M) {
        const std::uint32_t cx = axis_digit(fx, m, ties);
        const std::uint32_t cy = axis_digit(fy, m, ties);
        addr.digits.emplace_back(cx, cy);
        fx = fx * m - cx;
        fy = fy * m - cy;
    }
    return addr;
}

bool is_prefix(const SquareAddr& prefix, const SquareAddr& addr) {
    if (prefix.level() > addr.level()) return false;
    for (std::size_t i = 0; i < prefix.level(); ++i)
        if (prefix.digits[i] != addr.digits[i]) return false;
    return true;
}

// Q subset of B(center, radius) on the torus: all corners within radius.
bool square_in_ball(const RectD& q, Vec2 center, double radius, double tol) {
    const Vec2 corners[4] = {{q.x0, q.y0}, {q.x1(), q.y0}, {q.x0, q.y1()}, {q.x1(), q.y1()}};
    for (const Vec2& c : corners)
        if (torus_dist(c, center) > radius + tol) return false;
    return true;
}

} // namespace

ExtractionResult extract_cantor(const CoveringSample& sample, const std::vector<std::uint64_t>& nk,
                                std::uint64_t tie_seed, double factor) {
    if (nk.empty()) throw std::invalid_argument("extract_cantor: empty n_k sequence");
    if (sample.horizon() < nk.back())
        throw std::invalid_argument("extract_cantor: sample horizon below last n_k");
    (void)tie_seed;  // ties resolve deterministically; the seed is recorded by the caller

    ExtractionResult res;
    std::vector<std::uint32_t> M_prefix;

    // level 1
    {
        LevelExtraction lv;
        lv.n_k = nk[0];
        lv.N_k = nk[0] / 2;  // floor(n_1 / 2)
        if (lv.N_k == 0) throw std::invalid_argument("extract_cantor: N_1 = 0 (n_1 too small)");
        lv.M_k = static_cast<std::uint32_t>(std::ceil(2.0 / sample.spec.delta(nk[0])));
        lv.Ntilde = lv.N_k;
        M_prefix.push_back(lv.M_k);
        for (std::uint64_t i = 1; i <= lv.N_k; ++i) {
            const Vec2 xi = sample.xi(i);
            const SquareAddr addr = point_address(xi, M_prefix, res.tie_breaks);
            const double side = 1.0 / lv.M_k;
            const RectD q{addr.digits[0].first * side, addr.digits[0].second * side, side};
            if (!square_in_ball(q, xi, sample.spec.delta(i), 1e-12))
                throw std::logic_error("extract_cantor: side-length violation at level 1");
            lv.chosen_indices.push_back(i);
            lv.squares.push_back(addr);
        }
        res.q_bounds.push_back(1.0);
        res.levels.push_back(std::move(lv));
    }

    for (std::size_t k = 2; k <= nk.size(); ++k) {
        const LevelExtraction& prev = res.levels.back();
        if (!prev.omega_ok) break;
        LevelExtraction lv;
        lv.n_k = nk[k - 1];
        lv.m_k = (nk[k - 1] - nk[k - 2]) / prev.Ntilde;
        double area = 1.0;
        for (std::uint32_t m : M_prefix) area /= static_cast<double>(m) * m;
        lv.N_k = static_cast<std::uint64_t>(std::floor(0.5 * static_cast<double>(lv.m_k) * area));
        if (lv.N_k == 0)
            throw std::invalid_argument("extract_cantor: N_k = 0 at level " + std::to_string(k));
        double g_prev = 1.0;
        for (std::uint32_t m : M_prefix) g_prev *= m;
        lv.M_k = static_cast<std::uint32_t>(std::ceil(2.0 / (sample.spec.delta(nk[k - 1]) * g_prev)));
        if (lv.M_k < 2) lv.M_k = 2;
        std::vector<std::uint32_t> M_next = M_prefix;
        M_next.push_back(lv.M_k);

        lv.omega_ok = true;
        for (std::size_t l = 1; l <= prev.squares.size(); ++l) {
            const SquareAddr& parent = prev.squares[l - 1];
            const std::uint64_t block_lo = nk[k - 2] + (l - 1) * lv.m_k + 1;
            const std::uint64_t block_hi = nk[k - 2] + l * lv.m_k;
            std::uint64_t found = 0;
            for (std::uint64_t j = block_lo; j <= block_hi && found < lv.N_k; ++j) {
                const Vec2 xi = sample.xi(j);
                const SquareAddr addr = point_address(xi, M_next, res.tie_breaks);
                if (!is_prefix(parent, addr)) continue;
                const RectD q = [&] {
                    RectD r{0, 0, 1};
                    for (std::size_t d = 0; d < addr.level(); ++d) {
                        r.side /= M_next[d];
                        r.x0 += addr.digits[d].first * r.side;
                        r.y0 += addr.digits[d].second * r.side;
                    }
                    return r;
                }();
                if (!square_in_ball(q, xi, sample.spec.delta(j), 1e-12))
                    throw std::logic_error("extract_cantor: side-length violation at level " +
                                           std::to_string(k));
                lv.chosen_indices.push_back(j);
                lv.squares.push_back(addr);
                ++found;
            }
            if (found < lv.N_k) {
                lv.omega_ok = false;
                break;
            }
        }
        lv.Ntilde = prev.Ntilde * lv.N_k;
        res.q_bounds.push_back(omega_bound(k, nk, sample.spec, prev.Ntilde, factor));
        const bool ok = lv.omega_ok;
        M_prefix = M_next;
        res.levels.push_back(std::move(lv));
        if (!ok) break;
    }

    res.all_omega = true;
    for (const auto& lv : res.levels) res.all_omega = res.all_omega && lv.omega_ok;
    GridSequence seq;
    for (const auto& lv : res.levels) {
        if (!lv.omega_ok) break;
        seq.M.push_back(lv.M_k);
        seq.N.push_back(static_cast<std::uint32_t>(std::min<std::uint64_t>(lv.N_k, 0xFFFFFFFFull)));
    }
    res.seq = seq;
    return res;
}

Construction to_construction(const ExtractionResult& r, std::uint64_t seed_tag) {
    Construction c;
    c.seq = r.seq;
    c.seed = seed_tag;
    for (const auto& lv : r.levels) {
        if (!lv.omega_ok) break;
        Generation gen;
        gen.entries = lv.squares;
        c.levels.push_back(std::move(gen));
    }
    return c;
}

std::vector<std::string> extraction_invariants(const ExtractionResult& r,
                                               const CoveringSample& sample, double factor) {
    std::vector<std::string> bad;
    double g = 1.0;
    std::uint64_t Ntilde_prev = 0;
    for (std::size_t k = 1; k <= r.levels.size(); ++k) {
        const auto& lv = r.levels[k - 1];
        if (!lv.omega_ok) break;
        g *= lv.M_k;
        const double dk = sample.spec.delta(lv.n_k);
        if (g > 4.0 / dk + 1e-9)
            bad.push_back("level " + std::to_string(k) + ": prod M_j exceeds 4/delta");
        if (1.0 / g > dk / 2 + 1e-15)
            bad.push_back("level " + std::to_string(k) + ": grid side exceeds delta/2");
        if (k >= 2) {
            const double d_prev = sample.spec.delta(r.levels[k - 2].n_k);
            const double nkc = factor * static_cast<double>(k) * k *
                               static_cast<double>(r.levels[k - 2].n_k) * r.levels[k - 2].n_k /
                               (d_prev * d_prev);
            if (static_cast<double>(lv.n_k) >= nkc - 1) {
                if (static_cast<double>(lv.m_k) <
                    static_cast<double>(lv.n_k) / (4.0 * static_cast<double>(Ntilde_prev)) - 1)
                    bad.push_back("level " + std::to_string(k) + ": m_k below n_k/(4 Ntilde)");
            }
            const double nk_bound = static_cast<double>(lv.n_k) * d_prev * d_prev * d_prev / 16.0;
            if (static_cast<double>(lv.N_k) < nk_bound - 1)
                bad.push_back("level " + std::to_string(k) + ": N_k below n_k delta^3 / 16");
        }
        // containment of every chosen square in its ball
        for (std::size_t idx = 0; idx < lv.squares.size(); ++idx) {
            RectD q{0, 0, 1};
            for (std::size_t d = 0; d < lv.squares[idx].level(); ++d) {
                q.side /= r.seq.M[d];
                q.x0 += lv.squares[idx].digits[d].first * q.side;
                q.y0 += lv.squares[idx].digits[d].second * q.side;
            }
            const std::uint64_t i = lv.chosen_indices[idx];
            const Vec2 xi = sample.xi(i);
            RectD qq = q;
            bool inside = true;
            const Vec2 corners[4] = {
                {qq.x0, qq.y0}, {qq.x1(), qq.y0}, {qq.x0, qq.y1()}, {qq.x1(), qq.y1()}};
            for (const Vec2& corner : corners)
                if (torus_dist(corner, xi) > sample.spec.delta(i) + 1e-12) inside = false;
            if (!inside)
                bad.push_back("level " + std::to_string(k) + ": square " + std::to_string(idx) +
                              " escapes its ball");
        }
        Ntilde_prev = lv.Ntilde;
    }
    return bad;
}

std::string ExtractionResult::to_json() const {
    nlohmann::json j;
    j["all_omega"] = all_omega;
    j["tie_breaks"] = tie_breaks;
    j["q_bounds"] = q_bounds;
    j["seq"] = nlohmann::json::parse(seq.to_json());
    nlohmann::json levels_json = nlohmann::json::array();
    for (const auto& lv : levels) {
        nlohmann::json lvj;
        lvj["n_k"] = lv.n_k;
        lvj["M_k"] = lv.M_k;
        lvj["N_k"] = lv.N_k;
        lvj["Ntilde"] = lv.Ntilde;
        lvj["m_k"] = lv.m_k;
        lvj["omega_ok"] = lv.omega_ok;
        lvj["chosen_indices"] = lv.chosen_indices;
        nlohmann::json squares = nlohmann::json::array();
        for (const auto& addr : lv.squares) {
            nlohmann::json digits = nlohmann::json::array();
            for (const auto& [cx, cy] : addr.digits) digits.push_back(nlohmann::json::array({cx, cy}));
            squares.push_back(std::move(digits));
        }
        lvj["squares"] = std::move(squares);
        levels_json.push_back(std::move(lvj));
    }
    j["levels"] = std::move(levels_json);
    return j.dump();
}

namespace {

struct Interval {
    double lo, hi;
};

// Union of torus-wrapped intervals -> merged disjoint segments in [0,1).
std::vector<Interval> merged_projection(const std::vector<Interval>& raw) {
    std::vector<Interval> segs;
    segs.reserve(raw.size() * 2);
    for (const Interval& iv : raw) {
        double lo = iv.lo - std::floor(iv.lo);
        const double len = iv.hi - iv.lo;
        if (len >= 1.0) return {{0.0, 1.0}};
        const double hi = lo + len;
        if (hi <= 1.0) {
            segs.push_back({lo, hi});
        } else {
            segs.push_back({lo, 1.0});
            segs.push_back({0.0, hi - 1.0});
        }
    }
    std::sort(segs.begin(), segs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const Interval& s : segs) {
        if (!merged.empty() && s.lo <= merged.back().hi) {
            merged.back().hi = std::max(merged.back().hi, s.hi);
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

// Number of epsilon cells [j eps, (j+1) eps) meeting the half-open segments.
std::uint64_t count_cells(const std::vector<Interval>& merged, double eps) {
    std::uint64_t count = 0;
    long long prev_hi = -1;
    for (const Interval& s : merged) {
        if (s.hi <= s.lo) continue;
        long long lo = static_cast<long long>(std::floor(s.lo / eps));
        const long long hi = static_cast<long long>(std::ceil(s.hi / eps)) - 1;
        if (lo <= prev_hi) lo = prev_hi + 1;
        if (hi >= lo) {
            count += static_cast<std::uint64_t>(hi - lo + 1);
            prev_hi = hi;
        }
    }
    return count;
}

void fit_slope(const std::vector<double>& mesh, const std::vector<std::uint64_t>& counts,
               double& slope, double& r2) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (counts[i] == 0) continue;
        xs.push_back(std::log(1.0 / mesh[i]));
        ys.push_back(std::log(static_cast<double>(counts[i])));
    }
    const std::size_t n = xs.size();
    if (n < 2) {
        slope = 0;
        r2 = 0;
        return;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double nd = static_cast<double>(n);
    const double denom = nd * sxx - sx * sx;
    slope = (nd * sxy - sx * sy) / denom;
    const double ss_tot = syy - sy * sy / nd;
    const double intercept = (sy - slope * sx) / nd;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - (slope * xs[i] + intercept);
        ss_res += e * e;
    }
    r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

} // namespace

AnisoReport aniso_experiment(double alpha, double beta, std::uint64_t N, std::uint64_t seed,
                             std::size_t stage_k, std::size_t mesh_min_pow,
                             std::size_t mesh_max_pow) {
    if (!(beta >= alpha) || !(alpha > 1.0))
        throw std::invalid_argument("aniso_experiment: requires beta >= alpha > 1");
    CoveringSpec spec;
    spec.shape = CoveringSpec::Shape::Rectangle;
    spec.alpha = alpha;
    spec.beta = beta;
    const CoveringSample sample = sample_covering(spec, N, seed);

    std::vector<Interval> raw_x, raw_y;
    raw_x.reserve(N);
    raw_y.reserve(N);
    for (std::uint64_t n = std::max<std::uint64_t>(stage_k, 1); n <= N; ++n) {
        const double hx = 0.5 * std::pow(static_cast<double>(n), -alpha);
        const double hy = 0.5 * std::pow(static_cast<double>(n), -beta);
        const Vec2 xi = sample.xi(n);
        raw_x.push_back({xi.x - hx, xi.x + hx});
        raw_y.push_back({xi.y - hy, xi.y + hy});
    }
    const auto merged_x = merged_projection(raw_x);
    const auto merged_y = merged_projection(raw_y);

    AnisoReport rep;
    rep.target_x = 1.0 / alpha;
    rep.target_y = 1.0 / beta;
    for (std::size_t p = mesh_min_pow; p <= mesh_max_pow; ++p) {
        const double eps = std::pow(2.0, -static_cast<double>(p));
        rep.mesh.push_back(eps);
        rep.counts_x.push_back(count_cells(merged_x, eps));
        rep.counts_y.push_back(count_cells(merged_y, eps));
    }
    fit_slope(rep.mesh, rep.counts_x, rep.slope_x, rep.r2_x);
    fit_slope(rep.mesh, rep.counts_y, rep.slope_y, rep.r2_y);
    return rep;
}

void save_covering(const CoveringSample& sample, std::ostream& os) {
    nlohmann::json head;
    head["spec"] = nlohmann::json::parse(sample.spec.to_json());
    head["seed"] = sample.seed;
    head["horizon"] = sample.horizon();
    os << head.dump() << '\n';
    const std::uint64_t n = sample.horizon();
    std::vector<double> col(n);
    for (std::uint64_t i = 0; i < n; ++i) col[i] = static_cast<double>(i + 1);
    os.write(reinterpret_cast<const char*>(col.data()), static_cast<std::streamsize>(n * 8));
    os.write(reinterpret_cast<const char*>(sample.xs.data()), static_cast<std::streamsize>(n * 8));
    os.write(reinterpret_cast<const char*>(sample.ys.data()), static_cast<std::streamsize>(n * 8));
}

CoveringSample load_covering(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("load_covering: missing header");
    const nlohmann::json head = nlohmann::json::parse(line);
    CoveringSample s;
    s.spec = CoveringSpec::from_json(head.at("spec").dump());
    s.seed = head.at("seed").get<std::uint64_t>();
    const std::uint64_t n = head.at("horizon").get<std::uint64_t>();
    std::vector<double> index_col(n);
    s.xs.resize(n);
    s.ys.resize(n);
    is.read(reinterpret_cast<char*>(index_col.data()), static_cast<std::streamsize>(n * 8));
    is.read(reinterpret_cast<char*>(s.xs.data()), static_cast<std::streamsize>(n * 8));
    is.read(reinterpret_cast<char*>(s.ys.data()), static_cast<std::streamsize>(n * 8));
    if (!is) throw std::runtime_error("load_covering: truncated columns");
    return s;
}

} // namespace fractal
