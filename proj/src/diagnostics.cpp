#include "seqmem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "seqmem/errors.hpp"

namespace seqmem {
namespace {

Fraction reduced(long long num, long long den) {
    if (den == 0) throw ArgumentError("fraction with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Fraction{num, den};
}

void require_binary_trace(const std::vector<int>& trace) {
    if (trace.empty()) throw ArgumentError("online trace is empty");
    for (int v : trace) {
        if (v != 0 && v != 1) throw ArgumentError("online trace must be 0/1");
    }
}

void require_curve(const std::vector<double>& curve) {
    if (curve.empty()) throw ArgumentError("cumulative curve is empty");
}

/// Offsets whose entries exist for task row tau; max of those entries.
/// Returns false when the endpoint entry is missing.
bool window_best(const EvalMatrix& m, int tau, const std::vector<int>& offsets, int t,
                 int* best, int* at_end) {
    const int end_step = tau + t;
    if (!m.has_column(end_step) || !m.has_entry(tau, end_step)) return false;
    *at_end = m.entry(tau, end_step);
    int acc = *at_end;
    for (int off : offsets) {
        const int step = tau + off;
        if (step == end_step) continue;
        if (m.has_column(step) && m.has_entry(tau, step)) {
            acc = std::max(acc, m.entry(tau, step));
        }
    }
    *best = acc;
    return true;
}

} // namespace

double Fraction::value() const {
    return static_cast<double>(num) / static_cast<double>(den);
}

double MeanFrac::value() const {
    if (count <= 0) throw ArgumentError("mean over zero terms");
    return static_cast<double>(num) / static_cast<double>(count);
}

std::vector<double> cumulative_curve(const std::vector<int>& trace) {
    require_binary_trace(trace);
    std::vector<double> curve(trace.size());
    long long sum = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        sum += trace[i];
        curve[i] = static_cast<double>(sum) / static_cast<double>(i + 1);
    }
    return curve;
}

CurveExtremes curve_extremes(const std::vector<int>& trace) {
    require_binary_trace(trace);
    CurveExtremes ex;
    ex.length = static_cast<int>(trace.size());
    long long sum = 0;
    for (int tau = 1; tau <= ex.length; ++tau) {
        sum += trace[static_cast<std::size_t>(tau - 1)];
        if (tau == 1) {
            ex.argmax = ex.argmin = 1;
            ex.sum_at_max = ex.sum_at_min = sum;
            continue;
        }
        // sum/tau > sum_at_max/argmax iff sum*argmax > sum_at_max*tau
        if (sum * ex.argmax > ex.sum_at_max * tau) {
            ex.argmax = tau;
            ex.sum_at_max = sum;
        }
        if (sum * ex.argmin < ex.sum_at_min * tau) {
            ex.argmin = tau;
            ex.sum_at_min = sum;
        }
    }
    ex.sum_total = sum;
    return ex;
}

Fraction online_acc_fraction(const std::vector<int>& trace) {
    const CurveExtremes ex = curve_extremes(trace);
    return reduced(ex.sum_total, ex.length);
}

Fraction ped_fraction(const std::vector<int>& trace) {
    const CurveExtremes ex = curve_extremes(trace);
    const long long m = ex.argmax;
    const long long T = ex.length;
    return reduced(ex.sum_at_max * T - ex.sum_total * m, m * T);
}

Fraction mer_fraction(const std::vector<int>& trace) {
    const CurveExtremes ex = curve_extremes(trace);
    const long long k = ex.argmin;
    const long long T = ex.length;
    return reduced(ex.sum_total * k - ex.sum_at_min * T, k * T);
}

Fraction r_min_fraction(const std::vector<int>& trace) {
    const CurveExtremes ex = curve_extremes(trace);
    return reduced(ex.argmin, ex.length);
}

double online_acc(const std::vector<double>& curve) {
    require_curve(curve);
    return curve.back();
}

double ped(const std::vector<double>& curve) {
    require_curve(curve);
    return *std::max_element(curve.begin(), curve.end()) - curve.back();
}

double mer(const std::vector<double>& curve) {
    require_curve(curve);
    return curve.back() - *std::min_element(curve.begin(), curve.end());
}

double r_min(const std::vector<double>& curve) {
    require_curve(curve);
    const auto it = std::min_element(curve.begin(), curve.end());
    const auto idx = static_cast<double>(std::distance(curve.begin(), it) + 1);
    return idx / static_cast<double>(curve.size());
}

double holdout_final(const std::vector<std::pair<int, double>>& points, int T) {
    for (const auto& [step, value] : points) {
        if (step == T) return value;
    }
    throw ArgumentError("hold-out trajectory has no point at the final step " +
                        std::to_string(T));
}

double trend_ho(const std::vector<std::pair<int, double>>& points, int T) {
    if (points.size() < 2) {
        throw ArgumentError("hold-out trend needs at least two points");
    }
    if (T < 1) throw ArgumentError("stream length must be positive");
    const double n = static_cast<double>(points.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [step, value] : points) {
        mean_x += static_cast<double>(step) / static_cast<double>(T);
        mean_y += value;
    }
    mean_x /= n;
    mean_y /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [step, value] : points) {
        const double dx = static_cast<double>(step) / static_cast<double>(T) - mean_x;
        sxy += dx * (value - mean_y);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw ArgumentError("hold-out trend undefined: all points share one step");
    return sxy / sxx;
}

MeanFrac bwt_fraction(const EvalMatrix& m, int t) {
    if (t < 1) throw ArgumentError("horizon must be positive");
    MeanFrac acc;
    for (int tau = 1; tau + t <= m.T; ++tau) {
        const int step = tau + t;
        if (!m.has_column(step) || !m.has_entry(tau, step) || !m.has_baseline(tau)) continue;
        acc.num += m.entry(tau, step) - m.baseline_at(tau);
        acc.count += 1;
    }
    if (acc.count == 0) {
        throw EmptyHorizonError("no admissible task/checkpoint pairs at horizon " +
                                std::to_string(t));
    }
    return acc;
}

double bwt(const EvalMatrix& m, int t) { return bwt_fraction(m, t).value(); }

MeanFrac immediate_validity_fraction(const EvalMatrix& m, const std::vector<int>& horizons) {
    if (horizons.empty()) throw ArgumentError("horizon grid is empty");
    return bwt_fraction(m, *std::min_element(horizons.begin(), horizons.end()));
}

double immediate_validity(const EvalMatrix& m, const std::vector<int>& horizons) {
    return immediate_validity_fraction(m, horizons).value();
}

MeanFrac forgetting_exact_fraction(const EvalMatrix& m, int t) {
    if (t < 1) throw ArgumentError("horizon must be positive");
    MeanFrac acc;
    for (int tau = 1; tau + t <= m.T; ++tau) {
        bool complete = true;
        int best = 0;
        for (int step = tau; step <= tau + t; ++step) {
            if (!m.has_column(step) || !m.has_entry(tau, step)) {
                complete = false;
                break;
            }
            best = std::max(best, m.entry(tau, step));
        }
        if (!complete) continue;
        acc.num += best - m.entry(tau, tau + t);
        acc.count += 1;
    }
    if (acc.count == 0) {
        throw EmptyHorizonError("no task has a fully gridded window at horizon " +
                                std::to_string(t));
    }
    return acc;
}

double forgetting_exact(const EvalMatrix& m, int t) {
    return forgetting_exact_fraction(m, t).value();
}

MeanFrac forgetting_approx_fraction(const EvalMatrix& m, const std::vector<int>& horizons,
                                    int t) {
    if (t < 1) throw ArgumentError("horizon must be positive");
    std::vector<int> offsets;
    for (int off : horizons) {
        if (off < 1) throw ArgumentError("horizon grid entries must be positive");
        if (off <= t) offsets.push_back(off);
    }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    MeanFrac acc;
    for (int tau = 1; tau + t <= m.T; ++tau) {
        int best = 0, at_end = 0;
        if (!window_best(m, tau, offsets, t, &best, &at_end)) continue;
        acc.num += best - at_end;
        acc.count += 1;
    }
    if (acc.count == 0) {
        throw EmptyHorizonError("no admissible windows at horizon " + std::to_string(t));
    }
    return acc;
}

double forgetting_approx(const EvalMatrix& m, const std::vector<int>& horizons, int t) {
    return forgetting_approx_fraction(m, horizons, t).value();
}

std::string to_string(TrajectoryLabel label) {
    switch (label) {
        case TrajectoryLabel::gradual_improvement: return "gradual improvement";
        case TrajectoryLabel::drop_then_recover: return "drop-then-recover";
        case TrajectoryLabel::early_peak_then_degradation:
            return "early peak then degradation";
        case TrajectoryLabel::rapid_drop_then_stabilization:
            return "rapid drop then stabilization";
        case TrajectoryLabel::stable_non_improving: return "stable but non-improving";
        case TrajectoryLabel::highly_fluctuating: return "highly fluctuating";
    }
    throw ArgumentError("unknown trajectory label");
}

std::string preference_note(TrajectoryLabel label) {
    switch (label) {
        case TrajectoryLabel::gradual_improvement:
            return "preferred: memory accumulates effectively";
        case TrajectoryLabel::drop_then_recover:
            return "acceptable: recovery after a delayed adjustment";
        case TrajectoryLabel::early_peak_then_degradation:
            return "undesirable: memory evolution is unstable";
        case TrajectoryLabel::rapid_drop_then_stabilization:
            return "undesirable: degradation persists after an early drop";
        case TrajectoryLabel::stable_non_improving:
            return "mixed: memory has limited effect";
        case TrajectoryLabel::highly_fluctuating:
            return "mixed: memory dynamics are volatile";
    }
    throw ArgumentError("unknown trajectory label");
}

TrajectoryLabel classify_trajectory(double mer_value, double ped_value, double r_min_value,
                                    const TrajectoryThresholds& th) {
    const bool mer_hi = mer_value >= th.high;
    const bool ped_hi = ped_value >= th.high;
    if (!mer_hi && !ped_hi) return TrajectoryLabel::stable_non_improving;
    if (mer_hi && !ped_hi) {
        return r_min_value < th.early ? TrajectoryLabel::gradual_improvement
                                      : TrajectoryLabel::drop_then_recover;
    }
    if (!mer_hi) return TrajectoryLabel::early_peak_then_degradation;
    return r_min_value < th.late ? TrajectoryLabel::drop_then_recover
                                 : TrajectoryLabel::highly_fluctuating;
}

TrajectoryLabel classify_trajectory_curve(const std::vector<double>& curve,
                                          const TrajectoryThresholds& th) {
    require_curve(curve);
    const double mer_value = mer(curve);
    const double ped_value = ped(curve);
    const double r_min_value = r_min(curve);
    const bool mer_hi = mer_value >= th.high;
    const bool ped_hi = ped_value >= th.high;
    if (!mer_hi && ped_hi) {
        const auto min_it = std::min_element(curve.begin(), curve.end());
        // A minimum sitting on the final step means the decline has not
        // levelled off; a one-point tail would read as flat otherwise.
        if (min_it == curve.end() - 1)
            return TrajectoryLabel::early_peak_then_degradation;
        double mean = 0.0;
        const auto n = static_cast<double>(std::distance(min_it, curve.end()));
        for (auto it = min_it; it != curve.end(); ++it) mean += *it;
        mean /= n;
        double var = 0.0;
        for (auto it = min_it; it != curve.end(); ++it) var += (*it - mean) * (*it - mean);
        var /= n;
        return var < th.flat_var ? TrajectoryLabel::rapid_drop_then_stabilization
                                 : TrajectoryLabel::early_peak_then_degradation;
    }
    return classify_trajectory(mer_value, ped_value, r_min_value, th);
}

EfficiencySummary efficiency_summary(const RunLog& log) {
    EfficiencySummary s;
    s.tokens_total = log.ledger.prompt_tokens_total + log.ledger.completion_tokens_total;
    s.runtime_s = log.ledger.wall_clock_ms_total / 1000.0;
    return s;
}

DiagnosticReport build_report(const RunLog& log, const ReportOptions& opts) {
    if (!log.completed) throw ArgumentError("run log is incomplete; cannot build a report");
    DiagnosticReport r;
    r.method = log.policy_id;
    r.dataset = log.dataset_name;

    const std::vector<int> trace = log.online_trace();
    r.online_acc = online_acc_fraction(trace).value();
    r.ped = ped_fraction(trace).value();
    r.mer = mer_fraction(trace).value();
    r.r_min = r_min_fraction(trace).value();

    for (const auto& [source, tag] : log.holdout_groups()) {
        const auto points = log.holdout_points(source, tag);
        HoldoutSummary hs;
        hs.source_dataset = source;
        hs.tag = tag;
        hs.final_acc = holdout_final(points, log.T);
        if (points.size() >= 2) hs.trend = trend_ho(points, log.T);
        r.holdout_sets.push_back(std::move(hs));
    }
    if (!r.holdout_sets.empty()) {
        r.holdout_acc = r.holdout_sets.front().final_acc;
        r.trend_ho = r.holdout_sets.front().trend;
    }

    r.horizons = log.horizons;
    std::sort(r.horizons.begin(), r.horizons.end());
    r.horizons.erase(std::unique(r.horizons.begin(), r.horizons.end()), r.horizons.end());

    const EvalMatrix matrix = log.eval_matrix(opts.alternative_baseline);
    for (int t : r.horizons) {
        std::optional<double> b, fe, fa;
        try {
            b = bwt(matrix, t);
        } catch (const EmptyHorizonError&) {
        }
        try {
            fe = forgetting_exact(matrix, t);
        } catch (const EmptyHorizonError&) {
        }
        try {
            fa = forgetting_approx(matrix, r.horizons, t);
        } catch (const EmptyHorizonError&) {
        }
        r.bwt_curve.push_back(b);
        r.f_exact_curve.push_back(fe);
        r.f_approx_curve.push_back(fa);
    }
    if (!r.horizons.empty() && r.bwt_curve.front().has_value()) {
        r.iv = immediate_validity(matrix, r.horizons);
    }

    const EfficiencySummary eff = efficiency_summary(log);
    r.tokens_total = eff.tokens_total;
    r.runtime_s = eff.runtime_s;
    r.pattern = to_string(classify_trajectory_curve(cumulative_curve(trace), opts.thresholds));

    auto in_range = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in_range(r.online_acc, 0, 1) || !in_range(r.ped, 0, 1) || !in_range(r.mer, 0, 1) ||
        r.r_min <= 0 || r.r_min > 1) {
        throw InvariantViolation("online diagnostics out of range");
    }
    for (const auto& b : r.bwt_curve) {
        if (b && !in_range(*b, -1, 1)) throw InvariantViolation("backward transfer out of range");
    }
    for (const auto& f : r.f_exact_curve) {
        if (f && *f < 0) throw InvariantViolation("forgetting must be non-negative");
    }
    for (const auto& f : r.f_approx_curve) {
        if (f && *f < 0) throw InvariantViolation("forgetting must be non-negative");
    }
    return r;
}

const std::array<std::string, 5> kProfileDimensions = {
    "online", "holdout", "backward_transfer", "forgetting", "efficiency"};

namespace {

struct MetricSpec {
    std::string name;
    bool higher_better = true;
    int dimension = 0;
    std::function<double(const DiagnosticReport&)> extract;
};

double mean_defined(const std::vector<std::optional<double>>& curve, const std::string& what,
                    const std::string& method) {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : curve) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) {
        throw ArgumentError("report for '" + method + "' has no defined " + what +
                            " values to rank");
    }
    return sum / n;
}

std::vector<MetricSpec> ranking_metrics() {
    auto opt = [](const std::optional<double>& v, const std::string& name,
                  const std::string& method) {
        if (!v) {
            throw ArgumentError("report for '" + method + "' is missing " + name +
                                "; rank comparison needs complete reports");
        }
        return *v;
    };
    return {
        {"online_acc", true, 0, [](const DiagnosticReport& r) { return r.online_acc; }},
        {"ped", false, 0, [](const DiagnosticReport& r) { return r.ped; }},
        {"mer", true, 0, [](const DiagnosticReport& r) { return r.mer; }},
        {"r_min", false, 0, [](const DiagnosticReport& r) { return r.r_min; }},
        {"holdout_acc", true, 1,
         [opt](const DiagnosticReport& r) { return opt(r.holdout_acc, "holdout_acc", r.method); }},
        {"trend_ho", true, 1,
         [opt](const DiagnosticReport& r) { return opt(r.trend_ho, "trend_ho", r.method); }},
        {"iv", true, 2,
         [opt](const DiagnosticReport& r) { return opt(r.iv, "iv", r.method); }},
        {"bwt_mean", true, 2,
         [](const DiagnosticReport& r) { return mean_defined(r.bwt_curve, "bwt", r.method); }},
        {"f_mean", false, 3,
         [](const DiagnosticReport& r) {
             return mean_defined(r.f_approx_curve, "forgetting", r.method);
         }},
        {"tokens", false, 4,
         [](const DiagnosticReport& r) { return static_cast<double>(r.tokens_total); }},
        {"runtime", false, 4, [](const DiagnosticReport& r) { return r.runtime_s; }},
    };
}

std::vector<double> normalize_metric(const std::vector<double>& values, bool higher_better,
                                     bool rank_based) {
    const std::size_t n = values.size();
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    std::vector<double> scores(n, 0.5);
    if (lo == hi) return scores;
    if (!rank_based) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = (values[i] - lo) / (hi - lo);
            scores[i] = higher_better ? s : 1.0 - s;
        }
        return scores;
    }
    for (std::size_t i = 0; i < n; ++i) {
        int better = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (higher_better ? values[j] > values[i] : values[j] < values[i]) ++better;
        }
        scores[i] = 1.0 - static_cast<double>(better) / static_cast<double>(n - 1);
    }
    return scores;
}

} // namespace

std::vector<MethodProfile> rank_profiles(const std::vector<DiagnosticReport>& reports,
                                         bool rank_based_normalization) {
    if (reports.size() < 2) throw ArgumentError("rank comparison needs at least two reports");
    const std::size_t n = reports.size();
    const std::vector<MetricSpec> metrics = ranking_metrics();

    std::vector<std::array<double, 5>> sums(n, {0, 0, 0, 0, 0});
    std::array<int, 5> counts{};
    for (const MetricSpec& spec : metrics) {
        std::vector<double> values;
        values.reserve(n);
        for (const DiagnosticReport& r : reports) values.push_back(spec.extract(r));
        const std::vector<double> scores =
            normalize_metric(values, spec.higher_better, rank_based_normalization);
        for (std::size_t i = 0; i < n; ++i) {
            sums[i][static_cast<std::size_t>(spec.dimension)] += scores[i];
        }
        counts[static_cast<std::size_t>(spec.dimension)] += 1;
    }

    std::vector<MethodProfile> profiles(n);
    for (std::size_t i = 0; i < n; ++i) {
        profiles[i].method = reports[i].method;
        for (std::size_t d = 0; d < 5; ++d) {
            profiles[i].scores[d] = sums[i][d] / counts[d];
        }
    }
    for (std::size_t d = 0; d < 5; ++d) {
        for (std::size_t i = 0; i < n; ++i) {
            int better = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (profiles[j].scores[d] > profiles[i].scores[d]) ++better;
            }
            profiles[i].ranks[d] = better + 1;
        }
    }
    return profiles;
}

std::string to_string(Objective o) {
    switch (o) {
        case Objective::online_accuracy: return "online_acc";
        case Objective::holdout_accuracy: return "holdout_acc";
        case Objective::tokens: return "tokens";
        case Objective::runtime: return "runtime";
    }
    throw ArgumentError("unknown objective");
}

Objective objective_from_string(const std::string& s) {
    if (s == "online_acc") return Objective::online_accuracy;
    if (s == "holdout_acc") return Objective::holdout_accuracy;
    if (s == "tokens") return Objective::tokens;
    if (s == "runtime") return Objective::runtime;
    throw ConfigError("unknown objective '" + s +
                      "' (valid: online_acc, holdout_acc, tokens, runtime)");
}

std::vector<std::string> pareto_filter(const std::vector<DiagnosticReport>& reports,
                                       const std::vector<Objective>& objectives) {
    if (objectives.empty()) throw ArgumentError("objective set is empty");
    auto value_of = [](const DiagnosticReport& r, Objective o) {
        switch (o) {
            case Objective::online_accuracy: return r.online_acc;
            case Objective::holdout_accuracy:
                if (!r.holdout_acc) {
                    throw ArgumentError("report for '" + r.method +
                                        "' has no hold-out accuracy");
                }
                return *r.holdout_acc;
            case Objective::tokens: return static_cast<double>(r.tokens_total);
            case Objective::runtime: return r.runtime_s;
        }
        throw ArgumentError("unknown objective");
    };
    auto maximize = [](Objective o) {
        return o == Objective::online_accuracy || o == Objective::holdout_accuracy;
    };
    auto dominates = [&](const DiagnosticReport& a, const DiagnosticReport& b) {
        bool strictly = false;
        for (Objective o : objectives) {
            double va = value_of(a, o), vb = value_of(b, o);
            if (!maximize(o)) {
                va = -va;
                vb = -vb;
            }
            if (va < vb) return false;
            if (va > vb) strictly = true;
        }
        return strictly;
    };
    std::vector<std::string> survivors;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < reports.size() && !dominated; ++j) {
            if (i != j && dominates(reports[j], reports[i])) dominated = true;
        }
        if (!dominated) survivors.push_back(reports[i].method);
    }
    return survivors;
}

} // namespace seqmem
