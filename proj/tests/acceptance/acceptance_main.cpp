// End-to-end acceptance gate. Each criterion prints exactly one line:
//   [PASS] criterion N: <what was verified>
//   [FAIL] criterion N: <what was verified>: <first failing check>
// The process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracle/metric_oracle.hpp"
#include "seqmem/config.hpp"
#include "seqmem/diagnostics.hpp"
#include "seqmem/errors.hpp"
#include "seqmem/eval_matrix.hpp"
#include "seqmem/gateway.hpp"
#include "seqmem/memory_state.hpp"
#include "seqmem/policies.hpp"
#include "seqmem/prompts.hpp"
#include "seqmem/report.hpp"
#include "seqmem/runner.hpp"
#include "seqmem/stream.hpp"

namespace {

using namespace seqmem;

constexpr double kTol = 1e-12;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

bool near(double a, double b) { return std::abs(a - b) <= kTol; }

void require_near(double a, double b, const std::string& what) {
    require(near(a, b), what + " (got " + std::to_string(a) + ", want " +
                            std::to_string(b) + ")");
}

void require_opt_near(const std::optional<double>& a, const std::optional<double>& b,
                      const std::string& what) {
    require(a.has_value() == b.has_value(), what + ": definedness mismatch");
    if (a) require_near(*a, *b, what);
}

// a/b == c/d with positive denominators, overflow-safe.
bool frac_eq(long long a, long long b, long long c, long long d) {
    return static_cast<__int128>(a) * d == static_cast<__int128>(c) * b;
}

std::string fmt2(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

std::string fmt3(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%03d", v);
    return buf;
}

Task make_task(std::string id, std::string prompt, std::string target) {
    Task t;
    t.id = std::move(id);
    t.prompt = std::move(prompt);
    t.target = std::move(target);
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::vector<int> random_trace(std::mt19937_64& rng, int T, double p) {
    std::bernoulli_distribution bit(p);
    std::vector<int> trace(static_cast<std::size_t>(T));
    for (int& b : trace) b = bit(rng) ? 1 : 0;
    return trace;
}

EvalMatrix random_matrix(std::mt19937_64& rng, int T, bool full_grid,
                         bool diagonal_baseline) {
    EvalMatrix m;
    m.T = T;
    std::bernoulli_distribution bit(0.5);
    std::bernoulli_distribution keep(0.6);
    for (int c = 1; c <= T; ++c) {
        if (!full_grid && c != T && !keep(rng)) continue;
        m.column_steps.push_back(c);
        for (int task = 1; task <= c; ++task) m.set_entry(task, c, bit(rng) ? 1 : 0);
    }
    for (int task = 1; task <= T; ++task) {
        if (diagonal_baseline) {
            m.set_baseline(task, m.entry(task, task));
        } else {
            m.set_baseline(task, bit(rng) ? 1 : 0);
        }
    }
    m.validate();
    return m;
}

oracle::Matrix to_oracle(const EvalMatrix& m) {
    oracle::Matrix om;
    om.T = m.T;
    om.entries = m.entries;
    om.baseline = m.baseline;
    return om;
}

template <typename F>
auto defined(F&& f) -> std::optional<decltype(f())> {
    try {
        return f();
    } catch (const EmptyHorizonError&) {
        return std::nullopt;
    }
}

// Horizon grids exercised against each matrix: endpoint only, endpoint plus
// the immediate offset, and a mid-window mix.
std::vector<std::vector<int>> horizon_grids(int t) {
    std::vector<std::vector<int>> grids;
    grids.push_back({t});
    if (t > 1) grids.push_back({1, t});
    if (t > 3) grids.push_back({1, t / 2, t});
    return grids;
}

// ------------------------------------------------------------- criterion 1

std::string criterion_oracle_equivalence() {
    const auto started = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0x5eed0001ull);
    std::uniform_int_distribution<int> trace_len(1, 200);
    std::uniform_real_distribution<double> bias(0.05, 0.95);

    for (int i = 0; i < 1000; ++i) {
        const int T = trace_len(rng);
        const std::vector<int> trace = random_trace(rng, T, bias(rng));

        const std::vector<double> curve = cumulative_curve(trace);
        const std::vector<double> ocurve = oracle::cumulative(trace);
        require(curve.size() == ocurve.size(), "cumulative curve length mismatch");
        for (std::size_t j = 0; j < curve.size(); ++j) {
            require_near(curve[j], ocurve[j], "cumulative curve value");
        }

        require_near(online_acc(curve), oracle::online_acc(trace), "online_acc");
        require_near(ped(curve), oracle::ped(trace), "ped");
        require_near(mer(curve), oracle::mer(trace), "mer");
        require_near(r_min(curve), oracle::r_min(trace), "r_min");

        const Fraction oa = online_acc_fraction(trace);
        const Fraction pf = ped_fraction(trace);
        const Fraction mf = mer_fraction(trace);
        const Fraction rf = r_min_fraction(trace);
        require(frac_eq(oa.num, oa.den,
                        std::accumulate(trace.begin(), trace.end(), 0LL), T),
                "online_acc_fraction is not the prefix sum over T");
        require(std::llround(oracle::ped(trace) * static_cast<double>(pf.den)) == pf.num,
                "ped_fraction disagrees with the oracle as an integer ratio");
        require(std::llround(oracle::mer(trace) * static_cast<double>(mf.den)) == mf.num,
                "mer_fraction disagrees with the oracle as an integer ratio");
        const long long oracle_argmin =
            std::llround(oracle::r_min(trace) * static_cast<double>(T));
        require(frac_eq(rf.num, rf.den, oracle_argmin, T),
                "r_min_fraction disagrees with the oracle argmin");
    }

    std::uniform_int_distribution<int> matrix_len(2, 50);
    for (int i = 0; i < 200; ++i) {
        const int T = matrix_len(rng);
        const EvalMatrix m = random_matrix(rng, T, i % 2 == 0, false);
        const oracle::Matrix om = to_oracle(m);

        for (int t = 1; t < T; ++t) {
            const auto ob = oracle::bwt(om, t);
            const auto eb = defined([&] { return bwt(m, t); });
            const auto ebf = defined([&] { return bwt_fraction(m, t); });
            require_opt_near(eb, ob, "bwt horizon " + std::to_string(t));
            if (ob) {
                require(std::llround(*ob * static_cast<double>(ebf->count)) == ebf->num,
                        "bwt_fraction disagrees with the oracle as an integer ratio");
            }

            const auto of = oracle::f_exact(om, t);
            const auto ef = defined([&] { return forgetting_exact(m, t); });
            const auto eff = defined([&] { return forgetting_exact_fraction(m, t); });
            require_opt_near(ef, of, "forgetting_exact horizon " + std::to_string(t));
            if (of) {
                require(std::llround(*of * static_cast<double>(eff->count)) == eff->num,
                        "forgetting_exact_fraction disagrees with the oracle");
            }

            for (const auto& grid : horizon_grids(t)) {
                const auto oa = oracle::f_approx(om, grid, t);
                const auto ea = defined([&] { return forgetting_approx(m, grid, t); });
                require_opt_near(ea, oa, "forgetting_approx horizon " + std::to_string(t));
            }
        }

        std::vector<int> horizons;
        for (int t : {1, 2, 5}) {
            if (t < T) horizons.push_back(t);
        }
        const auto oiv = oracle::immediate_validity(om, horizons);
        const auto eiv = defined([&] { return immediate_validity(m, horizons); });
        require_opt_near(eiv, oiv, "immediate_validity");
    }

    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    require(elapsed.count() < 30000, "oracle sweep exceeded 30 s");
    return "1000 traces, 200 matrices, " + std::to_string(elapsed.count()) + " ms";
}

// ------------------------------------------------------------- criterion 2

std::string criterion_metric_identities() {
    std::mt19937_64 rng(0x5eed0002ull);
    std::uniform_int_distribution<int> trace_len(1, 200);
    std::uniform_real_distribution<double> bias(0.05, 0.95);

    for (int i = 0; i < 400; ++i) {
        const int T = trace_len(rng);
        const std::vector<int> trace = random_trace(rng, T, bias(rng));
        const CurveExtremes ex = curve_extremes(trace);
        const Fraction pf = ped_fraction(trace);
        const Fraction mf = mer_fraction(trace);
        const Fraction rf = r_min_fraction(trace);

        require(pf.num >= 0 && pf.num <= pf.den, "ped outside [0,1]");
        require(mf.num >= 0 && mf.num <= mf.den, "mer outside [0,1]");
        require(rf.num >= 1 && rf.num <= rf.den, "r_min outside (0,1]");

        // ped + mer telescopes to the curve range max - min.
        const long long range_num =
            ex.sum_at_max * ex.argmin - ex.sum_at_min * ex.argmax;
        const long long range_den =
            static_cast<long long>(ex.argmax) * ex.argmin;
        const __int128 lhs_num = static_cast<__int128>(pf.num) * mf.den +
                                 static_cast<__int128>(mf.num) * pf.den;
        const __int128 lhs_den = static_cast<__int128>(pf.den) * mf.den;
        require(lhs_num * range_den == static_cast<__int128>(range_num) * lhs_den,
                "ped + mer != curve range (exact)");

        const std::vector<double> curve = cumulative_curve(trace);
        const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
        require(std::abs((ped(curve) + mer(curve)) - (*hi - *lo)) <= kTol,
                "ped + mer != curve range (double)");
    }

    std::uniform_int_distribution<int> matrix_len(2, 40);
    for (int i = 0; i < 200; ++i) {
        const int T = matrix_len(rng);
        const bool diagonal = i < 120;
        const EvalMatrix m = random_matrix(rng, T, true, diagonal);

        for (int t = 1; t < T; ++t) {
            const MeanFrac b = bwt_fraction(m, t);
            require(b.count == T - t, "bwt admissible count off on a full grid");
            require(b.num >= -b.count && b.num <= b.count, "bwt outside [-1,1]");
            require(bwt(m, t) >= -1.0 - kTol && bwt(m, t) <= 1.0 + kTol,
                    "bwt double outside [-1,1]");

            const MeanFrac fe = forgetting_exact_fraction(m, t);
            require(fe.num >= 0, "forgetting_exact negative");
            require(forgetting_exact(m, t) >= -kTol, "forgetting_exact double negative");

            for (const auto& grid : horizon_grids(t)) {
                const MeanFrac fa = forgetting_approx_fraction(m, grid, t);
                require(fa.num >= 0, "forgetting_approx negative");
                require(static_cast<__int128>(fa.num) * fe.count <=
                            static_cast<__int128>(fe.num) * fa.count,
                        "forgetting_approx exceeds forgetting_exact");
                require(forgetting_approx(m, grid, t) <= forgetting_exact(m, t) + kTol,
                        "forgetting_approx exceeds forgetting_exact (double)");
            }

            if (diagonal) {
                // Window max >= baseline, so forgetting absorbs any negative
                // transfer.
                require(static_cast<__int128>(fe.num) * b.count +
                                static_cast<__int128>(b.num) * fe.count >=
                            0,
                        "forgetting_exact + bwt negative under diagonal baseline");
                require(forgetting_exact(m, t) + bwt(m, t) >= -kTol,
                        "forgetting_exact + bwt negative (double)");
            }
        }
    }
    return "400 traces, 200 full-grid matrices, all horizons";
}

// ------------------------------------------------------------- criterion 3

std::string criterion_null_memory() {
    std::vector<Task> tasks;
    std::vector<ScriptedRule> rules;
    for (int i = 1; i <= 100; ++i) {
        tasks.push_back(make_task("n" + fmt3(i), "N" + fmt3(i), "T" + fmt3(i)));
        if (i % 3 != 0) {
            rules.push_back({{"Current task: N" + fmt3(i)}, "T" + fmt3(i)});
        }
    }
    HoldoutSet holdout;
    holdout.source_dataset = "null_holdout";
    for (int i = 1; i <= 3; ++i) {
        holdout.tasks.push_back(make_task("hn" + fmt3(i), "HN" + fmt3(i), "HT" + fmt3(i)));
        if (i <= 2) rules.push_back({{"Current task: HN" + fmt3(i)}, "HT" + fmt3(i)});
    }

    RunPlan plan;
    plan.stream = build_stream(tasks, std::nullopt);
    plan.policy_id = "memory_free";
    plan.dataset_name = "null_check";
    plan.checkpoint_schedule = make_schedule(100, 100);
    plan.horizons = {1, 2, 5, 10, 25};
    plan.holdouts = {holdout};
    plan.seed = 3;

    const auto policy = make_policy("memory_free", PolicyConfig{}, PromptLibrary::builtin(),
                                    GenerationDefaults{}, EvaluatorKind::exact_match);
    ScriptedGateway gateway({rules}, std::string("MISS"), 16);
    const RunLog log = run_sequential(plan, *policy, gateway);
    require(log.completed, "run did not complete");

    const std::vector<int> trace = log.online_trace();
    for (int i = 1; i <= 100; ++i) {
        require(trace[static_cast<std::size_t>(i - 1)] == (i % 3 != 0 ? 1 : 0),
                "unexpected online trace at step " + std::to_string(i));
    }

    const EvalMatrix m = log.eval_matrix();
    for (int t = 1; t < 100; ++t) {
        const MeanFrac b = bwt_fraction(m, t);
        require(b.num == 0, "bwt nonzero at horizon " + std::to_string(t));
        const MeanFrac f = forgetting_exact_fraction(m, t);
        require(f.num == 0, "forgetting nonzero at horizon " + std::to_string(t));
    }
    for (int t : plan.horizons) {
        const MeanFrac fa = forgetting_approx_fraction(m, plan.horizons, t);
        require(fa.num == 0, "approx forgetting nonzero at horizon " + std::to_string(t));
    }

    const auto points = log.holdout_points("null_holdout", DistributionTag::in_distribution);
    require(points.size() == 100, "expected one hold-out point per checkpoint");
    for (const auto& [step, acc] : points) {
        require(acc == points.front().second, "hold-out accuracy moved at step " +
                                                  std::to_string(step));
    }
    require_near(holdout_final(points, 100), 2.0 / 3.0, "hold-out final accuracy");
    require(std::abs(trend_ho(points, 100)) <= kTol, "hold-out trend not zero");

    const DiagnosticReport report = build_report(log);
    require(report.iv.has_value() && *report.iv == 0.0, "immediate validity not zero");
    for (std::size_t i = 0; i < report.horizons.size(); ++i) {
        require(report.bwt_curve[i].has_value() && *report.bwt_curve[i] == 0.0,
                "report bwt cell not zero");
        require(report.f_exact_curve[i].has_value() && *report.f_exact_curve[i] == 0.0,
                "report forgetting cell not zero");
        require(report.f_approx_curve[i].has_value() && *report.f_approx_curve[i] == 0.0,
                "report approx forgetting cell not zero");
    }
    require(report.trend_ho.has_value() && std::abs(*report.trend_ho) <= kTol,
            "report trend not zero");
    return "T=100 dense grid, 5 horizons, flat hold-out 2/3";
}

// ------------------------------------------------------------- criterion 4

struct GoldenScenario {
    // Tasks whose rule fires on the task text alone, and tasks with no rule
    // at all. Every other task is answerable only when the previous task's
    // stored experience is marked verified.
    std::set<int> easy{3, 8, 14};
    std::set<int> impossible{6, 12, 19};
    static constexpr int T = 20;

    std::vector<int> hand_trace() const {
        std::vector<int> trace(T + 1, 0);
        for (int t = 1; t <= T; ++t) {
            if (easy.count(t)) {
                trace[t] = 1;
            } else if (impossible.count(t)) {
                trace[t] = 0;
            } else {
                trace[t] = t == 1 ? 0 : trace[t - 1];
            }
        }
        return trace;
    }

    int hand_entry(int task, int step, const std::vector<int>& trace) const {
        if (easy.count(task)) return 1;
        if (impossible.count(task)) return 0;
        return trace[step];
    }
};

std::string criterion_golden_run() {
    const auto started = std::chrono::steady_clock::now();
    const GoldenScenario g;
    const std::vector<int> hand = g.hand_trace();

    const std::vector<int> frozen_trace = {0, 0, 1, 1, 1, 0, 0, 1, 1, 1,
                                           1, 0, 0, 1, 1, 1, 1, 1, 0, 0};
    for (int t = 1; t <= g.T; ++t) {
        require(hand[t] == frozen_trace[static_cast<std::size_t>(t - 1)],
                "hand simulation departed from the frozen trace");
    }

    oracle::Matrix hand_matrix;
    hand_matrix.T = g.T;
    for (int c = 1; c <= g.T; ++c) {
        for (int task = 1; task <= c; ++task) {
            hand_matrix.entries[{task, c}] = g.hand_entry(task, c, hand);
        }
    }
    for (int task = 1; task <= g.T; ++task) hand_matrix.baseline[task] = hand[task];

    const std::vector<int> horizons = {1, 2, 5};
    const std::vector<double> frozen_bwt = {0.0, -1.0 / 9.0, 0.0};
    const std::vector<double> frozen_f_exact = {3.0 / 19.0, 1.0 / 3.0, 4.0 / 15.0};
    const std::vector<double> frozen_f_approx = {0.0, 1.0 / 6.0, 4.0 / 15.0};

    const std::vector<int> flat(frozen_trace);
    require_near(oracle::online_acc(flat), 12.0 / 20.0, "oracle online_acc vs golden");
    require_near(oracle::ped(flat), 2.0 / 3.0 - 3.0 / 5.0, "oracle ped vs golden");
    require_near(oracle::mer(flat), 3.0 / 5.0, "oracle mer vs golden");
    require_near(oracle::r_min(flat), 1.0 / 20.0, "oracle r_min vs golden");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        require_opt_near(oracle::bwt(hand_matrix, horizons[i]), frozen_bwt[i],
                         "oracle bwt vs golden");
        require_opt_near(oracle::f_exact(hand_matrix, horizons[i]), frozen_f_exact[i],
                         "oracle f_exact vs golden");
        require_opt_near(oracle::f_approx(hand_matrix, horizons, horizons[i]),
                         frozen_f_approx[i], "oracle f_approx vs golden");
    }

    // The library run: answers for "easy" tasks fire on the task text alone,
    // "hint" tasks additionally need a verified experience in the window.
    std::vector<Task> tasks;
    std::vector<ScriptedRule> rules;
    for (int t = 1; t <= g.T; ++t) {
        const std::string qid = "q" + fmt2(t);
        const std::string prompt = "Q" + fmt2(t);
        const std::string answer = "A" + fmt2(t);
        tasks.push_back(make_task(qid, prompt, answer));
        if (g.easy.count(t)) {
            rules.push_back({{"Current task: " + prompt}, answer});
        } else if (!g.impossible.count(t)) {
            rules.push_back({{"Current task: " + prompt, "(verified)"}, answer});
        }
    }
    HoldoutSet holdout;
    holdout.source_dataset = "golden_holdout";
    holdout.tasks.push_back(make_task("hq1", "HQ01", "HANS1"));
    holdout.tasks.push_back(make_task("hq2", "HQ02", "HANS2"));
    holdout.tasks.push_back(make_task("hz1", "HZ01", "ZZ1"));
    holdout.tasks.push_back(make_task("hz2", "HZ02", "ZZ2"));
    rules.push_back({{"Current task: HQ01"}, "HANS1"});
    rules.push_back({{"Current task: HQ02"}, "HANS2"});

    RunPlan plan;
    plan.stream = build_stream(tasks, std::nullopt);
    plan.policy_id = "exp_recent";
    plan.dataset_name = "golden";
    plan.checkpoint_schedule = make_schedule(g.T, g.T);
    plan.horizons = horizons;
    plan.holdouts = {holdout};
    plan.seed = 7;

    PolicyConfig cfg;
    cfg.k = 1;
    const auto policy = make_policy("exp_recent", cfg, PromptLibrary::builtin(),
                                    GenerationDefaults{}, EvaluatorKind::exact_match);

    auto run_once = [&]() {
        ScriptedGateway gateway(rules, std::string("PASS"), 16);
        return run_sequential(plan, *policy, gateway);
    };
    const RunLog first = run_once();
    const RunLog second = run_once();
    require(first.to_jsonl() == second.to_jsonl(), "runs differ between repeats");

    require(first.online_trace() == frozen_trace, "engine trace departs from golden");
    const EvalMatrix m = first.eval_matrix();
    for (int c = 1; c <= g.T; ++c) {
        for (int task = 1; task <= c; ++task) {
            require(m.entry(task, c) == g.hand_entry(task, c, hand),
                    "matrix entry (" + std::to_string(task) + "," + std::to_string(c) +
                        ") departs from golden");
        }
    }

    const DiagnosticReport report = build_report(first);
    require_near(report.online_acc, 12.0 / 20.0, "online_acc");
    require_near(report.ped, 2.0 / 3.0 - 3.0 / 5.0, "ped");
    require_near(report.mer, 3.0 / 5.0, "mer");
    require_near(report.r_min, 1.0 / 20.0, "r_min");
    require(report.iv.has_value() && *report.iv == 0.0, "iv");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        require_opt_near(report.bwt_curve[i], frozen_bwt[i], "report bwt");
        require_opt_near(report.f_exact_curve[i], frozen_f_exact[i], "report f_exact");
        require_opt_near(report.f_approx_curve[i], frozen_f_approx[i], "report f_approx");
    }
    require(report.holdout_acc.has_value(), "hold-out accuracy missing");
    require_near(*report.holdout_acc, 0.5, "hold-out accuracy");
    require(report.trend_ho.has_value() && std::abs(*report.trend_ho) <= kTol,
            "hold-out trend");
    require(report.pattern == "drop-then-recover", "pattern label, got " + report.pattern);

    const Fraction pf = ped_fraction(frozen_trace);
    const Fraction mf = mer_fraction(frozen_trace);
    require(frac_eq(pf.num, pf.den, 1, 15), "ped != 1/15 exactly");
    require(frac_eq(mf.num, mf.den, 3, 5), "mer != 3/5 exactly");
    const MeanFrac b2 = bwt_fraction(m, 2);
    require(b2.count == 18 && frac_eq(b2.num, b2.count, -1, 9), "bwt(2) != -1/9 exactly");
    const MeanFrac f2 = forgetting_exact_fraction(m, 2);
    require(f2.count == 18 && frac_eq(f2.num, f2.count, 1, 3),
            "forgetting(2) != 1/3 exactly");

    const std::string csv_first = metrics_csv_text({report});
    const std::string csv_second = metrics_csv_text({build_report(second)});
    require(!csv_first.empty() && csv_first == csv_second, "metrics CSV differs between runs");

    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    require(elapsed.count() < 5000, "golden run exceeded 5 s");
    return "20-task stream, byte-identical CSV, " + std::to_string(elapsed.count()) + " ms";
}

// ------------------------------------------------------------- criterion 5

std::string criterion_splits() {
    std::vector<Task> dataset;
    for (int i = 1; i <= 164; ++i) {
        dataset.push_back(make_task("s" + fmt3(i), "S" + fmt3(i), "ANS"));
    }
    const auto [stream, holdout] = split_tail(dataset, 0.2, "split_check");
    require(stream.size() == 132, "tail split stream size " + std::to_string(stream.size()));
    require(holdout.tasks.size() == 32,
            "tail split hold-out size " + std::to_string(holdout.tasks.size()));
    require(stream.at(1).id == "s001" && stream.at(132).id == "s132",
            "tail split does not keep the prefix in order");
    require(holdout.tasks.front().id == "s133" && holdout.tasks.back().id == "s164",
            "tail split does not take the tail");

    std::vector<Task> pool;
    for (int i = 1; i <= 8; ++i) {
        Task t = make_task("a" + std::to_string(i), "PA" + std::to_string(i), "ANS");
        t.category = "alpha";
        pool.push_back(t);
    }
    for (int i = 1; i <= 2; ++i) {
        Task t = make_task("b" + std::to_string(i), "PB" + std::to_string(i), "ANS");
        t.category = "beta";
        pool.push_back(t);
    }
    const HoldoutSet sample = split_stratified(pool, 5, 17, "strat_check");
    require(sample.tasks.size() == 5, "stratified sample size");
    std::map<std::string, int> counts;
    for (const Task& t : sample.tasks) counts[t.category] += 1;
    require(counts["alpha"] == 4 && counts["beta"] == 1,
            "stratified counts alpha=" + std::to_string(counts["alpha"]) +
                " beta=" + std::to_string(counts["beta"]));
    return "164 -> 132+32; {8,2} pool size 5 -> {4,1}";
}

// ------------------------------------------------------------- criterion 6

std::string thirty_rules() {
    std::string text;
    for (int i = 1; i <= 30; ++i) {
        text += std::to_string(i) + ". insight " + std::to_string(i) + "\n";
    }
    return text;
}

template <typename Inspect>
MemoryState drive_policy(const std::string& id, const PolicyConfig& cfg,
                         const std::vector<Task>& tasks,
                         const std::vector<ScriptedRule>& rules,
                         const std::string& fallback, Inspect&& inspect) {
    const auto policy = make_policy(id, cfg, PromptLibrary::builtin(),
                                    GenerationDefaults{}, EvaluatorKind::exact_match);
    ScriptedGateway gateway(rules, fallback, 16);
    MemoryState state = policy->initial_state();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const StepOutcome out = policy->step(state, tasks[i], gateway);
        require(out.context.provenance.size() <= static_cast<std::size_t>(cfg.k),
                id + " context exceeded k provenance entries");
        state = out.next_state;
        inspect(state, i, out);
    }
    return state;
}

std::string criterion_policy_fidelity() {
    PolicyConfig cfg;
    const std::vector<ScriptedRule> adversarial = {
        {{"You extract reusable insights"}, thirty_rules()},
        {{"You refine an insight list"}, thirty_rules()},
        {{"You failed the task below"}, "Check the answer format before replying."},
        {{"Extract a reusable workflow"}, "Restate the task, then answer directly."},
    };

    std::vector<Task> easy;
    for (int i = 1; i <= 200; ++i) {
        easy.push_back(make_task("e" + fmt3(i), "E" + fmt3(i), "OK"));
    }
    const MemoryState expel_final = drive_policy(
        "expel_st", cfg, easy, adversarial, "OK",
        [&](const MemoryState& s, std::size_t, const StepOutcome&) {
            require(s.as<ExpelState>().insights.size() <= 20,
                    "expel_st insight list exceeded max_num_rules");
        });
    const auto& ex = expel_final.as<ExpelState>();
    require(ex.insights.size() == 20, "expel_st did not retain a full insight list");
    require(ex.pool.size() == 200, "expel_st pool size off");

    std::vector<Task> mixed;
    for (int i = 1; i <= 200; ++i) {
        mixed.push_back(make_task("w" + fmt3(i), "W" + fmt3(i), i % 2 == 0 ? "OK" : "NOPE"));
    }
    const MemoryState awm_final = drive_policy(
        "awm", cfg, mixed, adversarial, "OK",
        [&](const MemoryState& s, std::size_t, const StepOutcome&) {
            const auto& wfs = s.as<WorkflowSet>();
            require(wfs.workflows.size() == static_cast<std::size_t>(wfs.success_count),
                    "awm workflow count departed from success count");
        });
    require(awm_final.as<WorkflowSet>().success_count == 100, "awm success count off");

    drive_policy("dc_rs", cfg, easy, adversarial, "OK",
                 [&](const MemoryState& s, std::size_t i, const StepOutcome&) {
                     require(s.as<Cheatsheet>().history.size() == i + 1,
                             "dc_rs history length departed from steps processed");
                 });

    std::vector<Task> contested;
    std::vector<ScriptedRule> contested_rules = adversarial;
    for (int i = 1; i <= 60; ++i) {
        contested.push_back(make_task("m" + fmt2(i), "M" + fmt2(i), "OK"));
        if (i % 3 == 1) {
            contested_rules.push_back({{"Current task: M" + fmt2(i)}, "OK"});
        } else if (i % 3 == 0) {
            contested_rules.push_back({{"Current task: M" + fmt2(i), "Reflections:"}, "OK"});
        }
    }
    int recovered = 0;
    drive_policy("expel_mt", cfg, contested, contested_rules, "PASS",
                 [&](const MemoryState& s, std::size_t, const StepOutcome& out) {
                     require(s.as<ExpelState>().insights.size() <= 20,
                             "expel_mt insight list exceeded max_num_rules");
                     if (out.feedback.correct && out.tries_used > 1) ++recovered;
                 });
    require(recovered == 20, "expected 20 retry recoveries, got " + std::to_string(recovered));

    drive_policy("exp_rag", cfg, mixed, adversarial, "OK",
                 [](const MemoryState&, std::size_t, const StepOutcome&) {});
    return "caps held over 200 adversarial steps per policy";
}

// ------------------------------------------------------------- criterion 7

std::string criterion_ledger_conservation() {
    std::vector<Task> tasks;
    for (int i = 1; i <= 12; ++i) {
        tasks.push_back(make_task("l" + fmt2(i), "L" + fmt2(i), i % 2 == 0 ? "OK" : "NOPE"));
    }
    HoldoutSet holdout;
    holdout.source_dataset = "ledger_holdout";
    holdout.tasks.push_back(make_task("lh1", "LH01", "HOK"));
    holdout.tasks.push_back(make_task("lh2", "LH02", "HNO"));

    std::vector<ScriptedRule> rules = {
        {{"You extract reusable insights"}, thirty_rules()},
        {{"You refine an insight list"}, thirty_rules()},
        {{"You failed the task below"}, "Shorter answers score better."},
        {{"Extract a reusable workflow"}, "Answer with the expected token."},
        {{"Current task: LH01"}, "HOK"},
    };

    PolicyConfig cfg;
    cfg.batch_update_size = 4;

    long long policies_run = 0;
    for (const std::string& id : policy_ids()) {
        RunPlan plan;
        plan.stream = build_stream(tasks, std::nullopt);
        plan.policy_id = id;
        plan.dataset_name = "ledger_check";
        plan.checkpoint_schedule = make_schedule(12, 3);
        plan.horizons = {1, 2};
        plan.holdouts = {holdout};
        plan.seed = 9;

        const auto policy = make_policy(id, cfg, PromptLibrary::builtin(),
                                        GenerationDefaults{}, EvaluatorKind::exact_match);
        ScriptedGateway gateway(rules, std::string("OK"), 16);
        long long observed = 0;
        long long calls = 0;
        gateway.set_observer([&](const CallRecord& rec) {
            observed += rec.prompt_tokens + rec.completion_tokens;
            ++calls;
        });
        const RunLog log = run_sequential(plan, *policy, gateway);
        require(log.completed, id + " run did not complete");
        require(calls > 0, id + " issued no calls");

        const EfficiencySummary summary = efficiency_summary(log);
        require(summary.tokens_total == observed,
                id + " efficiency total " + std::to_string(summary.tokens_total) +
                    " != per-call sum " + std::to_string(observed));
        require(log.ledger.prompt_tokens_total + log.ledger.completion_tokens_total ==
                    observed,
                id + " ledger total departs from per-call sum");
        ++policies_run;
    }
    return std::to_string(policies_run) + " policies, exact integer totals";
}

// ------------------------------------------------------------- criterion 8

std::string criterion_resume_determinism() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "seqmem_acceptance_resume";
    fs::remove_all(base);
    fs::create_directories(base);

    std::vector<Task> tasks;
    std::vector<ScriptedRule> rules = {
        {{"You extract reusable insights"}, thirty_rules()},
        {{"You refine an insight list"}, thirty_rules()},
        {{"You failed the task below"}, "Mind the exact answer string."},
    };
    for (int i = 1; i <= 20; ++i) {
        const std::string prompt = "R" + fmt2(i);
        const std::string answer = "Ans" + fmt2(i);
        tasks.push_back(make_task("r" + fmt2(i), prompt, answer));
        if (i % 2 == 1) {
            rules.push_back({{"Current task: " + prompt}, answer});
        } else if (i <= 10) {
            rules.push_back({{"Current task: " + prompt, "Reflections:"}, answer});
        }
    }
    HoldoutSet holdout;
    holdout.source_dataset = "resume_holdout";
    holdout.tasks.push_back(make_task("hr1", "HR01", "HOK1"));
    holdout.tasks.push_back(make_task("hr2", "HR02", "HOK2"));
    rules.push_back({{"Current task: HR01"}, "HOK1"});

    const auto policy = make_policy("expel_mt", PolicyConfig{}, PromptLibrary::builtin(),
                                    GenerationDefaults{}, EvaluatorKind::exact_match);
    auto make_plan = [&](int T) {
        RunPlan plan;
        plan.stream = build_stream(
            std::vector<Task>(tasks.begin(), tasks.begin() + T), std::nullopt);
        plan.policy_id = "expel_mt";
        plan.dataset_name = "resume_check";
        plan.checkpoint_schedule = make_schedule(T, T / 5);
        plan.horizons = {1, 2};
        plan.holdouts = {holdout};
        plan.seed = 13;
        return plan;
    };
    const RunPlan plan20 = make_plan(20);

    const fs::path clean_dir = base / "clean";
    ScriptedGateway clean_gateway(rules, std::string("PASS"), 16);
    const RunLog clean = run_sequential(plan20, *policy, clean_gateway, clean_dir.string());
    require(clean.completed, "uninterrupted run did not complete");

    // A prefix run over the first 10 tasks consumes exactly the generation
    // calls the full run spends through step 10, checkpoint work included.
    ScriptedGateway probe_gateway(rules, std::string("PASS"), 16);
    long long generation_calls = 0;
    probe_gateway.set_observer([&](const CallRecord& rec) {
        if (rec.kind == CallRecord::Kind::generation) ++generation_calls;
    });
    run_sequential(make_plan(10), *policy, probe_gateway);
    require(generation_calls > 0, "probe run issued no generation calls");

    const fs::path resume_dir = base / "resumed";
    ScriptedGateway failing_gateway(rules, std::string("PASS"), 16);
    failing_gateway.fail_generation_after(generation_calls);
    bool aborted = false;
    try {
        run_sequential(plan20, *policy, failing_gateway, resume_dir.string());
    } catch (const RunAborted& e) {
        aborted = true;
        require(e.last_completed_step() == 10,
                "aborted at step " + std::to_string(e.last_completed_step()) +
                    " instead of 10");
    }
    require(aborted, "run did not abort at the injected failure");
    require(fs::exists(resume_dir / resume_token_filename()), "no resume token on disk");

    ScriptedGateway resume_gateway(rules, std::string("PASS"), 16);
    const RunLog resumed = resume_run(plan20, *policy, resume_gateway, resume_dir.string());
    require(resumed.completed, "resumed run did not complete");
    require(resumed.to_jsonl() == clean.to_jsonl(),
            "resumed run log differs from the uninterrupted run");
    require(read_file(clean_dir / run_log_filename()) ==
                read_file(resume_dir / run_log_filename()),
            "persisted run logs differ byte-for-byte");
    require(!fs::exists(resume_dir / resume_token_filename()),
            "resume token survived a completed run");

    fs::remove_all(base);
    return "abort at step 10 of 20, byte-identical run log after resume";
}

// ------------------------------------------------------------- criterion 9

std::string criterion_classifier_families() {
    const TrajectoryLabel improving = classify_trajectory(0.150, 0.122, 0.10);
    require(improving == TrajectoryLabel::gradual_improvement ||
                improving == TrajectoryLabel::drop_then_recover,
            "profile (0.150, 0.122, 0.10) labeled " + to_string(improving));
    const std::string improving_note = preference_note(improving);
    require(improving_note.rfind("preferred", 0) == 0 ||
                improving_note.rfind("acceptable", 0) == 0,
            "improvement-family note reads: " + improving_note);

    const TrajectoryLabel degrading = classify_trajectory(0.000, 0.486, 1.00);
    require(degrading == TrajectoryLabel::early_peak_then_degradation ||
                degrading == TrajectoryLabel::rapid_drop_then_stabilization,
            "profile (0.000, 0.486, 1.00) labeled " + to_string(degrading));
    require(preference_note(degrading).rfind("undesirable", 0) == 0,
            "degradation-family note reads: " + preference_note(degrading));
    return "\"" + to_string(improving) + "\" and \"" + to_string(degrading) + "\"";
}

struct Criterion {
    int number;
    std::string title;
    std::function<std::string()> body;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "engine metrics match the brute-force oracle", criterion_oracle_equivalence},
        {2, "metric identities hold on every generated curve", criterion_metric_identities},
        {3, "memory-free run shows zero transfer and zero forgetting", criterion_null_memory},
        {4, "golden 20-task run reproduces the hand-derived metrics", criterion_golden_run},
        {5, "dataset splits land on the pinned sizes", criterion_splits},
        {6, "policy state respects configured caps under adversarial outputs",
         criterion_policy_fidelity},
        {7, "efficiency totals equal the per-call token sums", criterion_ledger_conservation},
        {8, "aborted run resumes to a byte-identical log", criterion_resume_determinism},
        {9, "classifier places reference profiles in the expected families",
         criterion_classifier_families},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        try {
            const std::string detail = c.body();
            std::printf("[PASS] criterion %d: %s (%s)\n", c.number, c.title.c_str(),
                        detail.c_str());
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] criterion %d: %s: %s\n", c.number, c.title.c_str(), e.what());
        }
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
