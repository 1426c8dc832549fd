#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fractal/boxdim.hpp"
#include "fractal/cantor.hpp"
#include "fractal/concentration.hpp"
#include "fractal/counting.hpp"
#include "fractal/covering.hpp"

namespace fractal {

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// One verified property: how many instances were checked and how many broke.
struct CheckReport {
    std::string name;
    std::uint64_t checked = 0;
    std::uint64_t violations = 0;
    std::string detail;
    bool pass() const { return violations == 0 && checked > 0; }
};

// --- reusable property checks (shared by the lemma suite and acceptance) --

// mu_n([0,1]^2) == 1 exactly (rational path), all seeds and levels.
CheckReport check_measure_normalization(const GridSequence& seq, std::size_t max_depth,
                                        std::size_t n_seeds, std::uint64_t seed0);

// |D| <= 16 M^3 and the covering property S ⊂ S~ with w(S~) <= 5 w(S) over
// random strips whose lines cross the unit square.
CheckReport check_strip_family_covering(std::uint32_t M, std::size_t n_strips, std::uint64_t seed0);

// Z(S,n) <= 2(1+2 sqrt 2) r_n^{-1} V* for random strips of width <= r_n.
CheckReport check_lengthtonum(const GridSequence& seq, std::size_t max_depth,
                              std::size_t strips_per_depth, std::size_t n_seeds,
                              std::uint64_t seed0, std::size_t family_cap, int threads);

// Exact conditional hit law: per-child hit probability m_i / M^2 versus
// Monte-Carlo frequency within 3 sigma.
CheckReport check_conditional_hit_law(std::size_t n_pairs, std::uint64_t draws, std::uint64_t seed0);

// MGF chain ordering: MC mean of e^Z <= exact product MGF <= exponential
// bound, plus the geometric inequality m_i M^{-2} <= 5 sqrt2 w / r_n.
CheckReport check_mgf_chain(std::size_t n_configs, std::uint64_t resamples, std::uint64_t seed0);

// Closing-bound identity on the next-level strip family.
CheckReport check_closing_bound(const GridSequence& seq, std::size_t max_next_level,
                                const BoundParams& p, std::size_t strips_per_level,
                                std::uint64_t seed0);

// Random lines never exceed the family sup proxy V*.
CheckReport check_line_family_slack(const GridSequence& seq, std::size_t depth,
                                    std::size_t n_lines, std::size_t n_seeds, std::uint64_t seed0,
                                    std::size_t family_cap, int threads);

// mu_n(Q) == mu_{n+1}(Q) exactly on level-n entry squares; total mass 1.
CheckReport check_mass_consistency(const GridSequence& seq, std::size_t depth,
                                   std::size_t n_seeds, std::uint64_t seed0);

// Pruned counting and length agree with brute force.
CheckReport check_pruned_vs_brute(std::size_t n_cases, std::uint64_t seed0);

// --- experiment runners ---------------------------------------------------

struct SweepRun {
    struct Row {
        std::uint64_t seed;
        double min_slope;
        double argmin_theta;
    };
    std::vector<Row> rows;
    double window_lo = 0, window_hi = 0;
    std::size_t in_window = 0;
    std::string csv;
    SweepResult first_sweep;  // full per-direction table of the first seed
};

SweepRun run_sweep(const GridSequence& seq, std::size_t depth, std::size_t directions,
                   std::size_t mesh_drop, std::uint64_t seed0, std::size_t n_seeds,
                   double window_lo, double window_hi, int threads);

struct AnisoRun {
    struct Row {
        std::uint64_t seed;
        double slope_x, slope_y, r2_x, r2_y;
    };
    std::vector<Row> rows;
    std::size_t ordered = 0;  // slope_y < slope_x
    double target_x = 0, target_y = 0;
    std::string csv;
};

AnisoRun run_aniso(double alpha, double beta, std::uint64_t horizon, std::size_t stage,
                   std::uint64_t seed0, std::size_t n_seeds, int threads);

struct CoveringRun {
    struct Row {
        std::uint64_t seed;
        bool omega_all;
        bool omega_last;
        std::uint64_t invariant_violations;
        std::uint64_t tie_breaks;
    };
    std::vector<Row> rows;
    std::vector<std::uint64_t> nk;
    double omega_rate = 0;     // success frequency of the last level event
    double omega_lower = 0;    // analytic lower bound for it
    std::uint64_t total_invariant_violations = 0;
    bool relaxed = false;
    std::string csv;
    std::string first_extraction_json;
};

CoveringRun run_covering_extract(const CoveringSpec& spec, std::uint64_t n1, std::size_t k_max,
                                 double factor, std::uint64_t seed0, std::size_t n_seeds,
                                 int threads);

struct AuditRun {
    BoundParams params;
    CalibrationResult calibration;
    std::vector<std::string> warnings;
    double line_family_constant = 16.0;
    // per audited level
    std::vector<AuditPoint> strip_points;
    std::vector<AuditPoint> line_points;
    std::vector<ConditionalEstimate> estimates;  // A then G at the first level
    std::vector<LevelBounds> bounds;             // levels 1..bound_scan
    double log_partial_product_value = 0;
    std::size_t scored = 0, scored_pass = 0, vacuous = 0, below_resolution = 0,
                below_resolution_failures = 0;
    std::string audit_csv;
    std::string bounds_csv;
    std::string calibration_csv;
};

struct AuditConfig {
    double t = 0.5;
    double eps = 0.2;
    double R = 0;  // 0 = calibrate
    std::size_t calib_seeds = 100;
    std::size_t calib_depth = 3;
    std::size_t audit_levels = 2;   // conditioning levels n = 1..audit_levels
    std::size_t points_per_level = 8;
    std::uint64_t max_trials = 200'000;
    std::uint64_t estimate_trials = 800;
    std::size_t bound_scan_levels = 40;
    std::size_t n_seeds = 2;
    std::uint64_t seed0 = 1;
    int threads = 1;
};

AuditRun run_concentration_audit(const GridSequence& seq, std::size_t depth,
                                 const AuditConfig& cfg);

// --- config-driven experiment entry point ---------------------------------

struct RunOutcome {
    bool pass = true;
    std::string summary;  // one line per scored property
};

// Parses the JSON config, executes the experiment, writes manifest.json,
// CSV reports and summary.txt under out_dir. Throws config_error for invalid
// configs and guard_error when a guard trips.
RunOutcome run_experiment(const std::string& config_json, const std::string& out_dir,
                          std::optional<std::uint64_t> seed_override = {},
                          std::optional<int> threads_override = {}, bool relaxed = false);

} // namespace fractal
