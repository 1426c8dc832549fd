#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fractal/cantor.hpp"
#include "fractal/counting.hpp"
#include "fractal/geometry.hpp"

namespace fractal {

// Parameters of the good events and probability bounds. t is the target
// exponent, eps the slack exponent, R the event constant; C2/C3 are the
// calibrated decay constants and C0 the local-dimension constant.
struct BoundParams {
    double s = 0;
    double t = 0;
    double eps = 0;
    double R = 1;
    double C0 = 0;
    double C2 = 0;
    double C3 = 0;
};

// Enforces t < s and 0 < 2 eps < s - t.
BoundParams make_params(double s, double t, double eps, double R = 1.0);

// Derived per-level reals kept in log form so deep levels cannot overflow.
struct LevelReals {
    double r = 1, log_r = 0;
    double P = 1, log_P = 0;
};
LevelReals level_reals(const GridSequence& seq, std::size_t n);

// Threshold of the strip event: 500 * (5^t if family_slack) * R * P_n * w^t.
double strip_event_threshold(const GridSequence& seq, std::size_t n, double w,
                             const BoundParams& p, bool family_slack);

// Per-strip event A(S, n): Z(S, n) <= 500 * 5^t * R * P_n * w(S)^t.
bool strip_event_A(const Construction& c, std::size_t n, const Strip& S, const BoundParams& p);

struct FamilyEventOptions {
    std::size_t max_lines = 10'000'000;
    bool coarsen_to_fit = false;
    int threads = 1;
};

// Event G_n over the level-n line family: every family line satisfies
// |l ∩ F_n| <= R P_n r_n^{t+1} + r_n.
bool event_G(const Construction& c, std::size_t n, const BoundParams& p,
             const FamilyEventOptions& opts = {});

// Event A_n over the width classes i*r_n, i = 1..M_n, of the strip family at
// grid 5/r_n (the finite surrogate for all strips of the matching widths).
bool event_A(const Construction& c, std::size_t n, const BoundParams& p,
             const FamilyEventOptions& opts = {});

// The strip family lines used by event_A at level n.
std::vector<Line> event_A_lines(const GridSequence& seq, std::size_t n,
                                std::size_t max_lines = 10'000'000);

// log of the conditional tail bound for Z(S, n+1) given F_n:
// exp(-500 R w^t P_{n+1} + 20 w r_n^{-1} N_{n+1} Z_n), valid for
// r_{n+1} < w <= r_n. Never clamped; values >= 1 signal a vacuous bound.
double chernoff_strip_log_rhs(double w, std::size_t n, std::uint64_t Zn,
                              const GridSequence& seq, const BoundParams& p);

struct MgfStripBound {
    double log_exact;        // log E(e^{Z(S,n+1)} | F_n), the exact product
    double log_paper_bound;  // (e-1) * 5 sqrt(2) * (w/r_n) * N_{n+1} * K
};

// Exact conditional MGF of the next-level strip hit count from the per-parent
// child hit counts m_i, plus the exponential upper bound for comparison.
MgfStripBound mgf_strip_bound(const std::vector<std::uint32_t>& m_counts, std::uint32_t M_next,
                              std::uint32_t N_next, double w_over_rn);

// log of the conditional tail bound for |l ∩ F_{n+1}| given F_n at tilt
// lambda in (0, (r_{n+1} sqrt 2)^{-1}).
double mgf_line_log_rhs(double len_n, double lambda, std::size_t n, const GridSequence& seq,
                        const BoundParams& p);

// Per-level failure bounds (log form):
//   boundA = 2000 r_{n+1}^{-3} exp(-C3 r_{n+1}^{-eps})
//   boundG = C    r_{n+1}^{-4} exp(-C2 r_{n+1}^{-eps})
// C is the empirical line-family constant. Both must decay along levels for
// valid parameters.
struct LevelBounds {
    double log_boundA;
    double log_boundG;
    bool vacuousA;
    bool vacuousG;
};
LevelBounds level_failure_bounds(std::size_t n, const GridSequence& seq, const BoundParams& p,
                                 double line_family_constant);

// Parameter-validation warnings (eps <= 0 means the bounds cannot decay).
std::vector<std::string> decay_warnings(const BoundParams& p);

// log prod_{m=from..to} (1 - boundA_m - boundG_m); -inf when a factor is
// nonpositive.
double log_partial_product(const GridSequence& seq, const BoundParams& p,
                           double line_family_constant, std::size_t from_level,
                           std::size_t to_level);

struct WilsonInterval {
    double p_hat = 0;
    double lo = 0;
    double hi = 1;
};
WilsonInterval wilson_interval(std::uint64_t failures, std::uint64_t trials, double z = 1.959963985);

enum class EventKind { A, G };

struct ConditionalEstimate {
    double p_hat = 0;
    WilsonInterval ci;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    // Union bound over the family from the per-strip / per-line lemma, when
    // finite; reported vacuous when >= 1.
    std::optional<double> log_analytic_bound;
    bool vacuous = false;
};

// Resamples level n+1 conditionally on F_n and estimates the failure
// probability of the family event. Deterministic in (c, seed). The analytic
// union bound over the family is attached when requested.
ConditionalEstimate conditional_failure_estimate(const Construction& c, std::size_t n,
                                                 const BoundParams& p, EventKind kind,
                                                 std::uint64_t trials, std::uint64_t seed,
                                                 const FamilyEventOptions& opts = {},
                                                 bool with_analytic_bound = true);

// Calibration: smallest power of two R such that events A_k (k=2..depth) and
// G_k (k=1..depth) all hold on at least `quorum` of the seeds.
struct CalibrationResult {
    double R = 1;
    double success_fraction = 0;
    std::vector<double> tried_R;
    std::vector<double> fractions;
};
CalibrationResult calibrate_R(const GridSequence& seq, std::size_t depth, double s, double t,
                              double eps, std::size_t n_seeds = 100, double quorum = 0.95,
                              double R_max = 1 << 20, const FamilyEventOptions& opts = {});

// Decay constants extracted from the proofs' inequalities at the configured
// sequence, over the audited levels.
double fit_C3(const GridSequence& seq, const BoundParams& p, std::size_t from_level,
              std::size_t to_level);
double fit_C2(const GridSequence& seq, const BoundParams& p, std::size_t from_level,
              std::size_t to_level);

// --- Monte-Carlo audit of the conditional bounds -------------------------
//
// A bound can only be checked empirically where it is neither vacuous
// (rhs >= 1) nor below Monte-Carlo resolution (rhs smaller than the Wilson
// floor of an affordable trial count). Audit points are therefore placed by
// a scan that lands the analytic rhs inside a resolvable band; the lemmas
// hold for every width / tilt, so this choice is free.

enum class AuditStatus { Scored, Vacuous, BelowResolution };

struct AuditPoint {
    std::size_t level = 0;  // conditioning level n; the event lives at n+1
    Strip strip;            // strip audits
    std::optional<Line> line;  // line audits
    double param = 0;       // strip: width; line: tilt lambda
    std::uint64_t Zn = 0;   // strip: Z(S, n); line unused
    double len_n = 0;       // line: |l ∩ F_n|
    double log_rhs = 0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    WilsonInterval ci;
    AuditStatus status = AuditStatus::Scored;
    bool pass = true;  // Wilson upper limit <= rhs (only meaningful when scored)
};

struct AuditOptions {
    std::size_t n_points = 12;
    std::uint64_t max_trials = 200'000;
    double band_lo = 1e-2;  // target rhs band for scored points
    double band_hi = 0.5;
    int threads = 1;
};

std::vector<AuditPoint> audit_strip_bound(const Construction& c, std::size_t n,
                                          const BoundParams& p, std::uint64_t seed,
                                          const AuditOptions& opts = {});
std::vector<AuditPoint> audit_line_bound(const Construction& c, std::size_t n,
                                         const BoundParams& p, std::uint64_t seed,
                                         const AuditOptions& opts = {});

// Exact single-trial recount of Z(S, n+1) (resp. |l ∩ F_{n+1}|) conditional
// on F_n under a trial key; agrees with resample_level + full recount.
std::uint64_t resampled_strip_count(const Construction& c, std::size_t n, const Strip& S,
                                    std::uint64_t trial_key);
double resampled_line_length(const Construction& c, std::size_t n, const Line& line,
                             std::uint64_t trial_key);

} // namespace fractal
