#include "fractal/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fractal/parallel.hpp"

namespace fractal {

namespace {
const double kE = std::exp(1.0);
constexpr double kSqrt2 = 1.41421356237309504880;

double pow_pos(double base, double expo) { return std::exp(expo * std::log(base)); }
} // namespace

BoundParams make_params(double s, double t, double eps, double R) {
    if (!(t < s)) throw std::invalid_argument("BoundParams: require t < s");
    if (!(eps > 0) || !(2 * eps < s - t))
        throw std::invalid_argument("BoundParams: require 0 < 2*eps < s - t");
    if (!(R > 0)) throw std::invalid_argument("BoundParams: require R > 0");
    BoundParams p;
    p.s = s;
    p.t = t;
    p.eps = eps;
    p.R = R;
    p.C0 = 500.0 * std::pow(5.0, t) * std::pow(2.0, t) * R;
    return p;
}

LevelReals level_reals(const GridSequence& seq, std::size_t n) {
    if (n > seq.depth()) throw std::out_of_range("level_reals: level beyond sequence length");
    LevelReals lv;
    for (std::size_t i = 0; i < n; ++i) {
        lv.log_r -= std::log(static_cast<double>(seq.M[i]));
        lv.log_P += std::log(static_cast<double>(seq.N[i]));
    }
    lv.r = std::exp(lv.log_r);
    lv.P = std::exp(lv.log_P);
    return lv;
}

double strip_event_threshold(const GridSequence& seq, std::size_t n, double w,
                             const BoundParams& p, bool family_slack) {
    const LevelReals lv = level_reals(seq, n);
    const double slack = family_slack ? std::pow(5.0, p.t) : 1.0;
    return 500.0 * slack * p.R * lv.P * pow_pos(w, p.t);
}

bool strip_event_A(const Construction& c, std::size_t n, const Strip& S, const BoundParams& p) {
    const double threshold = strip_event_threshold(c.seq, n, S.width, p, true);
    return static_cast<double>(strip_count(c, n, S)) <= threshold;
}

bool event_G(const Construction& c, std::size_t n, const BoundParams& p,
             const FamilyEventOptions& opts) {
    const Scales sc = derive_scales(c.seq, n);
    const LevelReals lv = level_reals(c.seq, n);
    const double bound = p.R * lv.P * pow_pos(lv.r, p.t + 1.0) + lv.r;
    const LineFamily fam = opts.coarsen_to_fit ? line_family_capped(sc.r, opts.max_lines)
                                               : line_family(sc.r, opts.max_lines);
    std::vector<char> ok(fam.lines.size(), 1);
    parallel_for(fam.lines.size(), opts.threads, [&](std::size_t i) {
        ok[i] = line_total_length(c, n, fam.lines[i]) <= bound;
    });
    return std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
}

std::vector<Line> event_A_lines(const GridSequence& seq, std::size_t n, std::size_t max_lines) {
    const BigInt inv_r = grid_denominator(seq, n);
    const BigInt M_fam = 5 * inv_r;
    if (M_fam > 100'000) throw guard_error("event_A: strip family grid too fine");
    return boundary_pair_lines(M_fam.convert_to<std::uint32_t>(), max_lines);
}

bool event_A(const Construction& c, std::size_t n, const BoundParams& p,
             const FamilyEventOptions& opts) {
    if (n < 2) throw std::invalid_argument("event_A: defined for levels n >= 2");
    const LevelReals lv = level_reals(c.seq, n);
    const std::vector<Line> lines = event_A_lines(c.seq, n, opts.max_lines);
    const std::uint32_t width_classes = c.seq.M[n - 1];  // widths i*r_n <= r_{n-1}
    std::vector<char> ok(lines.size(), 1);
    parallel_for(lines.size(), opts.threads, [&](std::size_t li) {
        for (std::uint32_t i = 1; i <= width_classes; ++i) {
            const Strip S{lines[li], i * lv.r};
            const double threshold = 500.0 * std::pow(5.0, p.t) * p.R * lv.P * pow_pos(S.width, p.t);
            if (static_cast<double>(strip_count(c, n, S)) > threshold) {
                ok[li] = 0;
                return;
            }
        }
    });
    return std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
}

double chernoff_strip_log_rhs(double w, std::size_t n, std::uint64_t Zn, const GridSequence& seq,
                              const BoundParams& p) {
    const LevelReals lv_n = level_reals(seq, n);
    const LevelReals lv_next = level_reals(seq, n + 1);
    if (!(w > lv_next.r * (1 - 1e-12)) || !(w <= lv_n.r * (1 + 1e-12)))
        throw std::invalid_argument("chernoff_strip_log_rhs: width outside (r_{n+1}, r_n]");
    const double N_next = static_cast<double>(seq.N[n]);
    return -500.0 * p.R * pow_pos(w, p.t) * lv_next.P +
           20.0 * w / lv_n.r * N_next * static_cast<double>(Zn);
}

MgfStripBound mgf_strip_bound(const std::vector<std::uint32_t>& m_counts, std::uint32_t M_next,
                              std::uint32_t N_next, double w_over_rn) {
    const double m2 = static_cast<double>(M_next) * M_next;
    double log_exact = 0;
    for (std::uint32_t m : m_counts) {
        if (m > m2) throw std::invalid_argument("mgf_strip_bound: m_i exceeds M^2");
        log_exact += N_next * std::log1p((kE - 1.0) * m / m2);
    }
    MgfStripBound out;
    out.log_exact = log_exact;
    out.log_paper_bound =
        (kE - 1.0) * 5.0 * kSqrt2 * w_over_rn * N_next * static_cast<double>(m_counts.size());
    return out;
}

double mgf_line_log_rhs(double len_n, double lambda, std::size_t n, const GridSequence& seq,
                        const BoundParams& p) {
    const LevelReals lv_next = level_reals(seq, n + 1);
    const double lambda_max = 1.0 / (lv_next.r * kSqrt2);
    if (!(lambda > 0) || !(lambda < lambda_max))
        throw std::invalid_argument("mgf_line_log_rhs: lambda outside (0, (r_{n+1} sqrt2)^{-1})");
    const double N_next = static_cast<double>(seq.N[n]);
    const double M_next = static_cast<double>(seq.M[n]);
    const double decay = -lambda * p.R * std::exp(lv_next.log_P + (p.t + 1.0) * lv_next.log_r);
    const double growth =
        2.0 * lambda * N_next * len_n / (M_next * M_next * (2.0 - lv_next.r * lambda * kSqrt2));
    return decay + growth;
}

LevelBounds level_failure_bounds(std::size_t n, const GridSequence& seq, const BoundParams& p,
                                 double line_family_constant) {
    const LevelReals lv_next = level_reals(seq, n + 1);
    const double inv_log_r = -lv_next.log_r;  // log(1/r_{n+1})
    const double decay = std::exp(p.eps * inv_log_r);  // r_{n+1}^{-eps}
    LevelBounds out;
    out.log_boundA = std::log(2000.0) + 3.0 * inv_log_r - p.C3 * decay;
    out.log_boundG = std::log(line_family_constant) + 4.0 * inv_log_r - p.C2 * decay;
    out.vacuousA = out.log_boundA >= 0;
    out.vacuousG = out.log_boundG >= 0;
    return out;
}

std::vector<std::string> decay_warnings(const BoundParams& p) {
    std::vector<std::string> warnings;
    if (p.eps <= 0)
        warnings.push_back("eps <= 0: failure bounds do not decay along levels");
    if (p.C2 <= 0) warnings.push_back("C2 <= 0: line-event bound cannot decay");
    if (p.C3 <= 0) warnings.push_back("C3 <= 0: strip-event bound cannot decay");
    return warnings;
}

double log_partial_product(const GridSequence& seq, const BoundParams& p,
                           double line_family_constant, std::size_t from_level,
                           std::size_t to_level) {
    double log_prod = 0;
    for (std::size_t n = from_level; n <= to_level; ++n) {
        const LevelBounds lb = level_failure_bounds(n, seq, p, line_family_constant);
        const double factor = 1.0 - std::exp(lb.log_boundA) - std::exp(lb.log_boundG);
        if (factor <= 0) return -std::numeric_limits<double>::infinity();
        log_prod += std::log(factor);
    }
    return log_prod;
}

WilsonInterval wilson_interval(std::uint64_t failures, std::uint64_t trials, double z) {
    if (trials == 0) return {};
    const double n = static_cast<double>(trials);
    const double p_hat = static_cast<double>(failures) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p_hat + z2 / (2 * n)) / denom;
    const double half = z * std::sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n)) / denom;
    WilsonInterval w;
    w.p_hat = p_hat;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

namespace {

double log_sum_exp(const std::vector<double>& logs) {
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(mx)) return mx;
    double acc = 0;
    for (double v : logs) acc += std::exp(v - mx);
    return mx + std::log(acc);
}

// Deterministic stride subsample; used where a full family is infeasible.
// The subsampled family defines both the tested event and its union bound,
// so the compared quantities stay coherent.
std::vector<Line> subsample_lines(std::vector<Line> lines, std::size_t max_lines) {
    if (lines.size() <= max_lines) return lines;
    const std::size_t stride = (lines.size() + max_lines - 1) / max_lines;
    std::vector<Line> out;
    out.reserve(max_lines);
    for (std::size_t i = 0; i < lines.size(); i += stride) out.push_back(lines[i]);
    return out;
}

} // namespace

ConditionalEstimate conditional_failure_estimate(const Construction& c, std::size_t n,
                                                 const BoundParams& p, EventKind kind,
                                                 std::uint64_t trials, std::uint64_t seed,
                                                 const FamilyEventOptions& opts,
                                                 bool with_analytic_bound) {
    if (trials < 100) throw std::invalid_argument("conditional_failure_estimate: trials < 100");
    if (n + 1 > c.depth())
        throw std::out_of_range("conditional_failure_estimate: level n+1 not built");

    const LevelReals lv_next = level_reals(c.seq, n + 1);

    // materialize the (possibly subsampled) family once; the same family
    // defines the per-trial event and the analytic union bound
    std::vector<Strip> strips;
    std::vector<Line> g_lines;
    if (kind == EventKind::A) {
        const std::vector<Line> lines =
            subsample_lines(event_A_lines(c.seq, n + 1, 100'000'000), opts.max_lines);
        const std::uint32_t width_classes = c.seq.M[n];
        strips.reserve(lines.size() * width_classes);
        for (const Line& line : lines)
            for (std::uint32_t i = 1; i <= width_classes; ++i)
                strips.push_back(Strip{line, i * lv_next.r});
    } else {
        const Scales sc_next = derive_scales(c.seq, n + 1);
        g_lines = line_family_capped(sc_next.r, opts.max_lines).lines;
    }

    const double g_bound = p.R * std::exp(lv_next.log_P + (p.t + 1.0) * lv_next.log_r) + lv_next.r;
    std::vector<char> failed(trials, 0);
    parallel_for(trials, opts.threads, [&](std::size_t trial) {
        const std::uint64_t key = derive_key(seed, trial);
        const Construction re = resample_level(c, n, key);
        bool ok = true;
        if (kind == EventKind::A) {
            for (const Strip& S : strips) {
                const double threshold =
                    500.0 * std::pow(5.0, p.t) * p.R * lv_next.P * std::pow(S.width, p.t);
                if (static_cast<double>(strip_count(re, n + 1, S)) > threshold) {
                    ok = false;
                    break;
                }
            }
        } else {
            for (const Line& line : g_lines) {
                if (line_total_length(re, n + 1, line) > g_bound) {
                    ok = false;
                    break;
                }
            }
        }
        failed[trial] = ok ? 0 : 1;
    });
    ConditionalEstimate est;
    est.trials = trials;
    est.failures = static_cast<std::uint64_t>(std::count(failed.begin(), failed.end(), 1));
    est.ci = wilson_interval(est.failures, trials);
    est.p_hat = est.ci.p_hat;

    if (with_analytic_bound) {
        std::vector<double> logs;
        if (kind == EventKind::A) {
            // Z(S, n) is deterministic given F_n
            for (const Strip& S : strips) {
                const std::uint64_t Zn = strip_count(c, n, S);
                logs.push_back(chernoff_strip_log_rhs(S.width, n, Zn, c.seq, p));
            }
        } else {
            const double lambda = std::exp((p.eps - 1.0) * lv_next.log_r);  // r^{-1+eps}
            for (const Line& line : g_lines) {
                const double len_n = line_total_length(c, n, line);
                logs.push_back(mgf_line_log_rhs(len_n, lambda, n, c.seq, p));
            }
        }
        const double log_bound = log_sum_exp(logs);
        est.log_analytic_bound = log_bound;
        est.vacuous = log_bound >= 0;
    }
    return est;
}

namespace {

// Parents at level n whose square can touch the region; children of other
// parents cannot contribute.
std::vector<std::pair<std::size_t, RectD>> touching_parents(const Construction& c, std::size_t n,
                                                            const Strip& region) {
    std::vector<std::pair<std::size_t, RectD>> out;
    const Generation& gen = c.generation(n);
    for (std::size_t i = 0; i < gen.entries.size(); ++i) {
        const RectD r = square_rect_d(gen.entries[i], c.seq);
        if (square_meets_strip_slack(r, region)) out.emplace_back(i, r);
    }
    return out;
}

} // namespace

std::uint64_t resampled_strip_count(const Construction& c, std::size_t n, const Strip& S,
                                    std::uint64_t trial_key) {
    const std::uint32_t m = c.seq.M[n];
    const std::uint32_t n_draws = c.seq.N[n];
    const std::uint64_t m2 = static_cast<std::uint64_t>(m) * m;
    const std::uint32_t word0 = stream_word(RngStream::ChildDraw, static_cast<std::uint32_t>(n + 1));
    const auto parents = touching_parents(c, n, S);
    std::uint64_t count = 0;
    for (const auto& [index, rect] : parents) {
        const double child_side = rect.side / m;
        for (std::uint32_t draw = 0; draw < n_draws; ++draw) {
            const std::uint64_t v = uniform_below(trial_key, word0, index, draw, m2);
            const RectD child{rect.x0 + static_cast<double>(v % m) * child_side,
                              rect.y0 + static_cast<double>(v / m) * child_side, child_side};
            if (square_meets_strip(child, S)) ++count;
        }
    }
    return count;
}

double resampled_line_length(const Construction& c, std::size_t n, const Line& line,
                             std::uint64_t trial_key) {
    const std::uint32_t m = c.seq.M[n];
    const std::uint32_t n_draws = c.seq.N[n];
    const std::uint64_t m2 = static_cast<std::uint64_t>(m) * m;
    const std::uint32_t word0 = stream_word(RngStream::ChildDraw, static_cast<std::uint32_t>(n + 1));
    const auto parents = touching_parents(c, n, Strip{line, 0.0});
    double total = 0;
    for (const auto& [index, rect] : parents) {
        const double child_side = rect.side / m;
        for (std::uint32_t draw = 0; draw < n_draws; ++draw) {
            const std::uint64_t v = uniform_below(trial_key, word0, index, draw, m2);
            const RectD child{rect.x0 + static_cast<double>(v % m) * child_side,
                              rect.y0 + static_cast<double>(v / m) * child_side, child_side};
            total += line_rect_length(line, child);
        }
    }
    return total;
}

CalibrationResult calibrate_R(const GridSequence& seq, std::size_t depth, double s, double t,
                              double eps, std::size_t n_seeds, double quorum, double R_max,
                              const FamilyEventOptions& opts) {
    make_params(s, t, eps);  // exponent constraints must hold before calibrating
    // Events are monotone in R, so compute each seed's minimal sufficient R
    // and pick the smallest power of two covering the quorum.
    std::vector<double> required(n_seeds, 0.0);
    std::vector<LineFamily> g_fams(depth);
    std::vector<std::vector<Line>> a_lines(depth + 1);
    for (std::size_t n = 1; n <= depth; ++n) {
        g_fams[n - 1] = line_family_capped(derive_scales(seq, n).r, opts.max_lines);
        if (n >= 2)
            a_lines[n] = subsample_lines(event_A_lines(seq, n, 100'000'000), opts.max_lines);
    }
    parallel_for(n_seeds, opts.threads, [&](std::size_t sidx) {
        const std::uint64_t seed = derive_key(0xCA11B8A7Eull, sidx);
        const Construction c = generate(seq, depth, seed);
        double req = 0;
        for (std::size_t n = 1; n <= depth; ++n) {
            const LevelReals lv = level_reals(seq, n);
            // G_n: R >= (max |l ∩ F_n| - r_n) / (P_n r_n^{t+1})
            double max_len = 0;
            for (const Line& line : g_fams[n - 1].lines)
                max_len = std::max(max_len, line_total_length(c, n, line));
            const double denomG = lv.P * pow_pos(lv.r, t + 1.0);
            req = std::max(req, (max_len - lv.r) / denomG);
            if (n >= 2) {
                // A_n: R >= Z(S,n) / (500 * 5^t * P_n * w^t)
                const std::vector<Line>& lines = a_lines[n];
                const std::uint32_t width_classes = seq.M[n - 1];
                for (const Line& line : lines) {
                    for (std::uint32_t i = 1; i <= width_classes; ++i) {
                        const Strip S{line, i * lv.r};
                        const double z = static_cast<double>(strip_count(c, n, S));
                        const double denomA =
                            500.0 * std::pow(5.0, t) * lv.P * pow_pos(S.width, t);
                        req = std::max(req, z / denomA);
                    }
                }
            }
        }
        required[sidx] = req;
    });
    std::vector<double> sorted = required;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t idx =
        std::min(n_seeds - 1, static_cast<std::size_t>(std::ceil(quorum * n_seeds)) - 1);
    const double need = sorted[idx];
    CalibrationResult res;
    double R = 1;
    while (R < need && R < R_max) R *= 2;
    res.R = R;
    for (double r = 1; r <= R; r *= 2) {
        const double frac =
            static_cast<double>(std::count_if(required.begin(), required.end(),
                                              [&](double v) { return v <= r; })) /
            static_cast<double>(n_seeds);
        res.tried_R.push_back(r);
        res.fractions.push_back(frac);
    }
    res.success_fraction = res.fractions.empty() ? 0 : res.fractions.back();
    return res;
}

double fit_C3(const GridSequence& seq, const BoundParams& p, std::size_t from_level,
              std::size_t to_level) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = from_level; n <= to_level; ++n) {
        const LevelReals lv_n = level_reals(seq, n);
        const LevelReals lv_next = level_reals(seq, n + 1);
        const std::uint32_t width_classes = seq.M[n];
        for (std::uint32_t i = 1; i <= width_classes; ++i) {
            const double w = i * lv_next.r;
            const double margin = 500.0 - 400.0 * pow_pos(w / lv_n.r, 1.0 - p.t);
            const double value = pow_pos(w, p.t) * lv_next.P * p.R * margin *
                                 std::exp(p.eps * lv_next.log_r);  // * r_{n+1}^{eps}
            best = std::min(best, value);
        }
    }
    return best;
}

double fit_C2(const GridSequence& seq, const BoundParams& p, std::size_t from_level,
              std::size_t to_level) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = from_level; n <= to_level; ++n) {
        const LevelReals lv_n = level_reals(seq, n);
        const LevelReals lv_next = level_reals(seq, n + 1);
        const double M_next = static_cast<double>(seq.M[n]);
        const double lambda_r = std::exp(p.eps * lv_next.log_r);  // r_{n+1} * lambda = r^{eps}
        const double denom = 2.0 - kSqrt2 * lambda_r;
        const double inv_tail = std::exp(-lv_n.log_P - p.t * lv_n.log_r) / p.R;  // (P_n R r_n^t)^{-1}
        const double factor = 1.0 - 2.0 * pow_pos(M_next, p.t - 1.0) * (1.0 + inv_tail) / denom;
        if (factor <= 0) continue;  // the margin only kicks in for large n
        // lambda * P_{n+1} * R * r^{t+1} * r^{eps} = R * P_{n+1} * r^{t+2 eps}
        const double value =
            factor * p.R * std::exp(lv_next.log_P + (p.t + 2.0 * p.eps) * lv_next.log_r);
        best = std::min(best, value);
    }
    return std::isfinite(best) ? best : 0.0;
}

namespace {

struct BandScan {
    double param = 0;       // width or lambda
    std::uint64_t Zn = 0;   // strips only
    double log_rhs = 0;
    AuditStatus status = AuditStatus::BelowResolution;
};

constexpr double kZ2 = 1.959963985 * 1.959963985;

std::uint64_t trials_for_rhs(double rhs, std::uint64_t max_trials) {
    // Wilson upper limit with zero failures is ~z^2/T; aim for rhs/2.
    const double need = 2.0 * kZ2 / rhs;
    const auto t = static_cast<std::uint64_t>(std::ceil(need));
    return std::clamp<std::uint64_t>(std::max<std::uint64_t>(t, 2000), 2000, max_trials);
}

bool resolvable(double log_rhs, std::uint64_t max_trials) {
    return log_rhs >= std::log(2.0 * kZ2 / static_cast<double>(max_trials));
}

} // namespace

std::vector<AuditPoint> audit_strip_bound(const Construction& c, std::size_t n,
                                          const BoundParams& p, std::uint64_t seed,
                                          const AuditOptions& opts) {
    if (n + 1 > c.depth()) throw std::out_of_range("audit_strip_bound: level n+1 not built");
    const LevelReals lv_n = level_reals(c.seq, n);
    const LevelReals lv_next = level_reals(c.seq, n + 1);
    const double log_lo = std::log(opts.band_lo), log_hi = std::log(opts.band_hi);
    SeqRng rng(derive_key(seed, 0xA0D17));
    std::vector<AuditPoint> points;

    for (std::size_t pt = 0; pt < opts.n_points; ++pt) {
        const Vec2 anchor{rng.range(0.05, 0.95), rng.range(0.05, 0.95)};
        const double theta = rng.range(0.0, 3.14159265358979323846);
        const Line line(theta, Line(theta, 0).signed_dist(anchor));

        // scan widths across (r_{n+1}, r_n] for a resolvable, non-vacuous rhs
        BandScan chosen;
        bool have_any = false;
        double best_dist = std::numeric_limits<double>::infinity();
        double min_log_rhs = std::numeric_limits<double>::infinity();
        BandScan min_point;
        const int grid = 48;
        for (int j = 0; j < grid; ++j) {
            const double frac = (j + 0.5) / grid;
            const double w = lv_next.r * std::pow(lv_n.r / lv_next.r, frac);
            if (!(w > lv_next.r) || !(w <= lv_n.r)) continue;
            const Strip S{line, w};
            const std::uint64_t Zn = strip_count(c, n, S);
            const double log_rhs = chernoff_strip_log_rhs(w, n, Zn, c.seq, p);
            if (log_rhs < min_log_rhs) {
                min_log_rhs = log_rhs;
                min_point = {w, Zn, log_rhs, AuditStatus::Scored};
            }
            if (log_rhs < 0 && resolvable(log_rhs, opts.max_trials)) {
                const double target = 0.5 * (log_lo + log_hi);
                const double dist = std::abs(log_rhs - target);
                if (dist < best_dist) {
                    best_dist = dist;
                    chosen = {w, Zn, log_rhs, AuditStatus::Scored};
                    have_any = true;
                }
            }
        }
        AuditPoint ap;
        ap.level = n;
        if (have_any) {
            ap.status = AuditStatus::Scored;
            ap.param = chosen.param;
            ap.Zn = chosen.Zn;
            ap.log_rhs = chosen.log_rhs;
        } else if (min_log_rhs >= 0) {
            ap.status = AuditStatus::Vacuous;
            ap.param = min_point.param;
            ap.Zn = min_point.Zn;
            ap.log_rhs = min_point.log_rhs;
        } else {
            ap.status = AuditStatus::BelowResolution;
            ap.param = min_point.param;
            ap.Zn = min_point.Zn;
            ap.log_rhs = min_point.log_rhs;
        }
        ap.strip = Strip{line, ap.param};

        const double rhs = std::exp(std::min(ap.log_rhs, 0.0));
        const std::uint64_t trials =
            ap.status == AuditStatus::Scored ? trials_for_rhs(rhs, opts.max_trials) : 2000;
        const double threshold =
            500.0 * p.R * pow_pos(ap.param, p.t) * lv_next.P;  // Z(S, n+1) tail threshold
        std::vector<char> failed(trials, 0);
        const Strip S = ap.strip;
        parallel_for(trials, opts.threads, [&](std::size_t trial) {
            const std::uint64_t key = derive_key(seed ^ (0x517A1B + pt), trial);
            const std::uint64_t z = resampled_strip_count(c, n, S, key);
            failed[trial] = static_cast<double>(z) > threshold ? 1 : 0;
        });
        ap.trials = trials;
        ap.failures = static_cast<std::uint64_t>(std::count(failed.begin(), failed.end(), 1));
        ap.ci = wilson_interval(ap.failures, ap.trials);
        ap.pass = ap.status != AuditStatus::Scored || ap.ci.hi <= std::exp(ap.log_rhs);
        points.push_back(ap);
    }
    return points;
}

std::vector<AuditPoint> audit_line_bound(const Construction& c, std::size_t n,
                                         const BoundParams& p, std::uint64_t seed,
                                         const AuditOptions& opts) {
    if (n + 1 > c.depth()) throw std::out_of_range("audit_line_bound: level n+1 not built");
    const LevelReals lv_next = level_reals(c.seq, n + 1);
    const double lambda_max = (1.0 - 1e-9) / (lv_next.r * kSqrt2);
    const double log_lo = std::log(opts.band_lo), log_hi = std::log(opts.band_hi);
    SeqRng rng(derive_key(seed, 0x11CE5));
    std::vector<AuditPoint> points;

    for (std::size_t pt = 0; pt < opts.n_points; ++pt) {
        const Vec2 anchor{rng.range(0.05, 0.95), rng.range(0.05, 0.95)};
        const double theta = rng.range(0.0, 3.14159265358979323846);
        const Line line(theta, Line(theta, 0).signed_dist(anchor));
        const double len_n = line_total_length(c, n, line);
        const auto g = [&](double lambda) { return mgf_line_log_rhs(len_n, lambda, n, c.seq, p); };

        // golden-section for the minimum of the convex log-rhs over lambda
        double a = lambda_max * 1e-12, b = lambda_max;
        for (int it = 0; it < 120; ++it) {
            const double m1 = a + (b - a) * 0.381966;
            const double m2 = b - (b - a) * 0.381966;
            if (g(m1) <= g(m2)) b = m2; else a = m1;
        }
        const double lambda_star = 0.5 * (a + b);
        const double g_star = g(lambda_star);

        AuditPoint ap;
        ap.level = n;
        ap.line = line;
        ap.len_n = len_n;
        if (g_star >= 0) {
            ap.status = AuditStatus::Vacuous;
            ap.param = lambda_star;
            ap.log_rhs = g_star;
        } else {
            // pick a tilt whose rhs sits in the resolvable band; g decreases
            // from 0 at lambda -> 0+ to g_star at lambda_star
            const double target = std::min(std::max(g_star, log_lo), log_hi);
            double lo = lambda_max * 1e-12, hi = lambda_star;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (g(mid) > target) lo = mid; else hi = mid;
            }
            ap.param = hi;
            ap.log_rhs = g(hi);
            ap.status = resolvable(ap.log_rhs, opts.max_trials) ? AuditStatus::Scored
                                                                : AuditStatus::BelowResolution;
        }

        const double rhs = std::exp(std::min(ap.log_rhs, 0.0));
        const std::uint64_t trials =
            ap.status == AuditStatus::Scored ? trials_for_rhs(rhs, opts.max_trials) : 2000;
        const double threshold = p.R * std::exp(lv_next.log_P + (p.t + 1.0) * lv_next.log_r);
        std::vector<char> failed(trials, 0);
        parallel_for(trials, opts.threads, [&](std::size_t trial) {
            const std::uint64_t key = derive_key(seed ^ (0x91AE37 + pt), trial);
            const double len = resampled_line_length(c, n, line, key);
            failed[trial] = len > threshold ? 1 : 0;
        });
        ap.trials = trials;
        ap.failures = static_cast<std::uint64_t>(std::count(failed.begin(), failed.end(), 1));
        ap.ci = wilson_interval(ap.failures, ap.trials);
        ap.pass = ap.status != AuditStatus::Scored || ap.ci.hi <= std::exp(ap.log_rhs);
        points.push_back(ap);
    }
    return points;
}

} // namespace fractal

