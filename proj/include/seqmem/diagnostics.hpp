#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqmem/eval_matrix.hpp"
#include "seqmem/runner.hpp"

namespace seqmem {

/// Exact rational value. den is always positive.
struct Fraction {
    long long num = 0;
    long long den = 1;
    double value() const;

    bool operator==(const Fraction&) const = default;
};

/// Sum of integer terms divided by how many there were. Keeps horizon means
/// exact until the final division.
struct MeanFrac {
    long long num = 0;
    long long count = 0;
    double value() const;

    bool operator==(const MeanFrac&) const = default;
};

/// Running mean of a 0/1 trace at every prefix length.
std::vector<double> cumulative_curve(const std::vector<int>& trace);

/// Extremes of the running mean located with integer cross-multiplication,
/// so ties break by earliest index regardless of rounding. Prefix sums are
/// reported so extreme values can be reconstructed exactly.
struct CurveExtremes {
    int length = 0;
    int argmax = 1;
    int argmin = 1;
    long long sum_at_max = 0;
    long long sum_at_min = 0;
    long long sum_total = 0;
};
CurveExtremes curve_extremes(const std::vector<int>& trace);

/// Final running mean, drop from its peak, rise from its minimum, and the
/// relative position of the minimum, as exact fractions of prefix sums.
Fraction online_acc_fraction(const std::vector<int>& trace);
Fraction ped_fraction(const std::vector<int>& trace);
Fraction mer_fraction(const std::vector<int>& trace);
Fraction r_min_fraction(const std::vector<int>& trace);

/// The same statistics scanned from an already-computed curve. Earliest
/// index wins ties.
double online_acc(const std::vector<double>& curve);
double ped(const std::vector<double>& curve);
double mer(const std::vector<double>& curve);
double r_min(const std::vector<double>& curve);

/// Final value of a hold-out trajectory. The trajectory must reach the last
/// step T.
double holdout_final(const std::vector<std::pair<int, double>>& points, int T);

/// Least-squares slope of the hold-out trajectory over normalized time
/// x = step / T. Needs at least two distinct steps.
double trend_ho(const std::vector<std::pair<int, double>>& points, int T);

/// Mean effect of t further memory updates on earlier tasks:
/// avg over admissible tasks of entry(task, task + t) minus its baseline.
MeanFrac bwt_fraction(const EvalMatrix& m, int t);
double bwt(const EvalMatrix& m, int t);

/// Backward transfer at the smallest configured horizon.
MeanFrac immediate_validity_fraction(const EvalMatrix& m, const std::vector<int>& horizons);
double immediate_validity(const EvalMatrix& m, const std::vector<int>& horizons);

/// Mean drop from the best score a task reached inside the window to its
/// score at the window end. The exact form needs every step of the window
/// on the grid; the approximate form maxes over the configured horizon
/// offsets (plus the endpoint) only.
MeanFrac forgetting_exact_fraction(const EvalMatrix& m, int t);
double forgetting_exact(const EvalMatrix& m, int t);
MeanFrac forgetting_approx_fraction(const EvalMatrix& m, const std::vector<int>& horizons,
                                    int t);
double forgetting_approx(const EvalMatrix& m, const std::vector<int>& horizons, int t);

/// Cutoffs for the qualitative trajectory patterns.
struct TrajectoryThresholds {
    double high = 0.05;          // mer/ped at or above this count as high
    double low = 0.02;           // strictly below this counts as low
    double early = 1.0 / 3.0;    // r_min below this is an early minimum
    double late = 2.0 / 3.0;     // r_min at or above this is a late minimum
    double flat_var = 1e-4;      // post-minimum variance below this is flat
};

enum class TrajectoryLabel {
    gradual_improvement,
    drop_then_recover,
    early_peak_then_degradation,
    rapid_drop_then_stabilization,
    stable_non_improving,
    highly_fluctuating,
};

std::string to_string(TrajectoryLabel label);
/// One-line reading of the label: preferred / acceptable / undesirable /
/// mixed, with the dynamic it indicates.
std::string preference_note(TrajectoryLabel label);

/// Pattern from the three scalar diagnostics alone. When both erosion and
/// recovery are high, an early or middle minimum reads as recovery rather
/// than volatility.
TrajectoryLabel classify_trajectory(double mer_value, double ped_value, double r_min_value,
                                    const TrajectoryThresholds& th = {});
/// Pattern with access to the full curve; distinguishes a degradation that
/// flattened out (low post-minimum variance) from one still in progress.
TrajectoryLabel classify_trajectory_curve(const std::vector<double>& curve,
                                          const TrajectoryThresholds& th = {});

struct HoldoutSummary {
    std::string source_dataset;
    DistributionTag tag = DistributionTag::in_distribution;
    double final_acc = 0.0;
    std::optional<double> trend;
};

/// Everything the reporting layer prints for one run. Horizon curves are
/// parallel to `horizons`; entries are empty where the grid cannot support
/// the statistic.
struct DiagnosticReport {
    std::string method;
    std::string dataset;
    double online_acc = 0.0;
    double ped = 0.0;
    double mer = 0.0;
    double r_min = 0.0;
    std::optional<double> holdout_acc;
    std::optional<double> trend_ho;
    std::vector<HoldoutSummary> holdout_sets;
    std::vector<int> horizons;
    std::vector<std::optional<double>> bwt_curve;
    std::vector<std::optional<double>> f_exact_curve;
    std::vector<std::optional<double>> f_approx_curve;
    std::optional<double> iv;
    long long tokens_total = 0;
    double runtime_s = 0.0;
    std::string pattern;
};

struct ReportOptions {
    bool alternative_baseline = false;
    TrajectoryThresholds thresholds{};
};

DiagnosticReport build_report(const RunLog& log, const ReportOptions& opts = {});

struct EfficiencySummary {
    long long tokens_total = 0;
    double runtime_s = 0.0;
};
EfficiencySummary efficiency_summary(const RunLog& log);

/// The five comparison dimensions, in report order.
extern const std::array<std::string, 5> kProfileDimensions;

struct MethodProfile {
    std::string method;
    std::array<double, 5> scores{};
    std::array<int, 5> ranks{};
};

/// Cross-method comparison: per metric min-max normalization with direction
/// handling, averaged into five dimension scores, then ranked per dimension
/// (ties share the better rank). Rank-based normalization is available for
/// robustness checks.
std::vector<MethodProfile> rank_profiles(const std::vector<DiagnosticReport>& reports,
                                         bool rank_based_normalization = false);

enum class Objective { online_accuracy, holdout_accuracy, tokens, runtime };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

/// Methods not strictly dominated on every chosen objective.
std::vector<std::string> pareto_filter(const std::vector<DiagnosticReport>& reports,
                                       const std::vector<Objective>& objectives);

} // namespace seqmem
