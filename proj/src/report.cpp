#include "seqmem/report.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {
namespace {

using nlohmann::json;

std::string csv_cell(const std::string& raw) {
    if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string cell(double v) { return format_double(v); }

std::string cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

/// Horizon grid shared by a set of reports; reports must agree so the wide
/// table has one set of columns.
std::vector<int> shared_horizons(const std::vector<DiagnosticReport>& reports) {
    if (reports.empty()) throw ArgumentError("no reports to tabulate");
    for (const DiagnosticReport& r : reports) {
        if (r.horizons != reports.front().horizons) {
            throw ArgumentError("reports use different horizon grids; re-run with one grid");
        }
    }
    return reports.front().horizons;
}

struct PreparedRun {
    RunPlan plan;
    std::unique_ptr<MemoryPolicy> policy;
    std::unique_ptr<Gateway> gateway;
};

PreparedRun prepare_run(const RunConfig& config) {
    std::vector<Task> pool = load_dataset(config.dataset.path);

    std::vector<Task> stream_tasks;
    std::vector<HoldoutSet> holdouts;
    if (config.holdout && config.holdout->mode == SplitSpec::Mode::tail_fraction) {
        auto [stream, holdout] =
            split_tail(pool, config.holdout->fraction, config.dataset.name);
        stream_tasks = stream.tasks();
        holdouts.push_back(std::move(holdout));
    } else if (config.holdout) {
        HoldoutSet holdout = split_stratified(pool, config.holdout->size,
                                              config.holdout->seed, config.dataset.name);
        std::set<std::string> held;
        for (const Task& t : holdout.tasks) held.insert(t.id);
        for (Task& t : pool) {
            if (!held.count(t.id)) stream_tasks.push_back(std::move(t));
        }
        holdouts.push_back(std::move(holdout));
    } else {
        stream_tasks = std::move(pool);
    }

    for (const DatasetConfig& d : config.ood_holdouts) {
        HoldoutSet hs;
        hs.tasks = load_dataset(d.path);
        hs.source_dataset = d.name;
        hs.tag = DistributionTag::out_of_distribution;
        if (hs.tasks.empty()) throw ConfigError("hold-out dataset " + d.path + " is empty");
        holdouts.push_back(std::move(hs));
    }

    PreparedRun prepared;
    prepared.plan.stream = build_stream(std::move(stream_tasks), config.dataset.order_seed);
    const int T = prepared.plan.stream.size();
    const int n_checkpoints = std::min(config.schedule.n_checkpoints, T);
    prepared.plan.checkpoint_schedule = make_schedule(T, n_checkpoints);
    prepared.plan.horizons = config.schedule.horizons.empty()
                                 ? default_horizons(T, n_checkpoints)
                                 : config.schedule.horizons;
    prepared.plan.policy_id = config.policy_id;
    prepared.plan.dataset_name = config.dataset.name;
    prepared.plan.holdouts = std::move(holdouts);
    prepared.plan.replay_budget = config.schedule.replay_budget;
    prepared.plan.seed = config.seed;
    prepared.plan.max_in_flight = config.schedule.max_in_flight;
    prepared.plan.alternative_baseline = config.schedule.alternative_baseline;

    prepared.policy = make_policy(config.policy_id, config.policy,
                                  load_prompt_library(config), config.generation,
                                  config.evaluator);
    prepared.gateway = make_gateway(config.gateway);
    return prepared;
}

ReportBundle write_bundle(const std::string& out_dir, const RunLog& log,
                          const ReportOptions& options) {
    std::filesystem::create_directories(out_dir);
    ReportBundle bundle;
    bundle.out_dir = out_dir;
    bundle.report = build_report(log, options);

    const std::filesystem::path dir(out_dir);
    bundle.run_log_path = (dir / run_log_filename()).string();
    bundle.metrics_csv_path = (dir / "metrics.csv").string();
    bundle.horizons_csv_path = (dir / "horizons.csv").string();
    bundle.summary_path = (dir / "summary.txt").string();
    bundle.report_json_path = (dir / "report.json").string();

    if (!std::filesystem::exists(bundle.run_log_path)) {
        write_text_file(bundle.run_log_path, log.to_jsonl());
    }
    write_text_file(bundle.metrics_csv_path, metrics_csv_text({bundle.report}));
    write_text_file(bundle.horizons_csv_path, horizons_csv_text({bundle.report}));
    write_text_file(bundle.summary_path, summary_text(bundle.report));
    write_text_file(bundle.report_json_path, report_json_text(bundle.report));
    return bundle;
}

DiagnosticReport report_from_log_file(const std::string& path, const ReportOptions& options) {
    return build_report(RunLog::from_jsonl_file(path), options);
}

} // namespace

std::string metrics_csv_text(const std::vector<DiagnosticReport>& reports) {
    const std::vector<int> horizons = shared_horizons(reports);
    std::ostringstream out;
    out << "method,dataset,online_acc,ped,mer,r_min,holdout_acc,trend_ho,iv";
    for (int t : horizons) out << ",bwt_t" << t;
    for (int t : horizons) out << ",f_exact_t" << t;
    for (int t : horizons) out << ",f_approx_t" << t;
    out << ",tokens_total,runtime_s,pattern\n";
    for (const DiagnosticReport& r : reports) {
        out << csv_cell(r.method) << ',' << csv_cell(r.dataset) << ',' << cell(r.online_acc)
            << ',' << cell(r.ped) << ',' << cell(r.mer) << ',' << cell(r.r_min) << ','
            << cell(r.holdout_acc) << ',' << cell(r.trend_ho) << ',' << cell(r.iv);
        for (const auto& v : r.bwt_curve) out << ',' << cell(v);
        for (const auto& v : r.f_exact_curve) out << ',' << cell(v);
        for (const auto& v : r.f_approx_curve) out << ',' << cell(v);
        out << ',' << r.tokens_total << ',' << cell(r.runtime_s) << ','
            << csv_cell(r.pattern) << '\n';
    }
    return out.str();
}

std::string horizons_csv_text(const std::vector<DiagnosticReport>& reports) {
    std::ostringstream out;
    out << "method,dataset,horizon,bwt,f\n";
    for (const DiagnosticReport& r : reports) {
        for (std::size_t i = 0; i < r.horizons.size(); ++i) {
            out << csv_cell(r.method) << ',' << csv_cell(r.dataset) << ',' << r.horizons[i]
                << ',' << cell(r.bwt_curve[i]) << ',' << cell(r.f_approx_curve[i]) << '\n';
        }
    }
    return out.str();
}

std::string summary_text(const DiagnosticReport& r) {
    std::ostringstream out;
    out << r.method << " on " << r.dataset << "\n\n";
    out << "online:    acc " << cell(r.online_acc) << ", peak drop " << cell(r.ped)
        << ", rise from minimum " << cell(r.mer) << ", minimum at " << cell(r.r_min)
        << " of the stream\n";
    if (r.holdout_sets.empty()) {
        out << "hold-out:  (none configured)\n";
    }
    for (const HoldoutSummary& h : r.holdout_sets) {
        out << "hold-out:  " << h.source_dataset << " [" << to_string(h.tag) << "] final "
            << cell(h.final_acc);
        if (h.trend) out << ", trend " << cell(*h.trend);
        out << '\n';
    }
    out << "transfer:  immediate " << cell(r.iv) << '\n';
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
        out << "  t=" << r.horizons[i] << ": bwt " << cell(r.bwt_curve[i]) << ", forget "
            << cell(r.f_approx_curve[i]);
        if (r.f_exact_curve[i]) out << " (exact " << cell(r.f_exact_curve[i]) << ')';
        out << '\n';
    }
    out << "cost:      " << r.tokens_total << " tokens, " << cell(r.runtime_s) << " s\n\n";

    const std::string note = r.pattern.empty() ? "" : [&] {
        for (int label = 0; label <= static_cast<int>(TrajectoryLabel::highly_fluctuating);
             ++label) {
            if (to_string(static_cast<TrajectoryLabel>(label)) == r.pattern) {
                return preference_note(static_cast<TrajectoryLabel>(label));
            }
        }
        return std::string();
    }();
    const auto split = note.find(": ");
    out << "pattern: " << r.pattern << '\n';
    out << "preference: " << (split == std::string::npos ? note : note.substr(0, split))
        << '\n';
    out << "interpretation: "
        << (split == std::string::npos ? std::string() : note.substr(split + 2)) << '\n';
    return out.str();
}

std::string report_json_text(const DiagnosticReport& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    json holdouts = json::array();
    for (const HoldoutSummary& h : r.holdout_sets) {
        holdouts.push_back({{"source_dataset", h.source_dataset},
                            {"distribution_tag", to_string(h.tag)},
                            {"final_acc", h.final_acc},
                            {"trend", opt(h.trend)}});
    }
    auto curve = [&](const std::vector<std::optional<double>>& values) {
        json arr = json::array();
        for (const auto& v : values) arr.push_back(opt(v));
        return arr;
    };
    json j{{"method", r.method},
           {"dataset", r.dataset},
           {"online_acc", r.online_acc},
           {"ped", r.ped},
           {"mer", r.mer},
           {"r_min", r.r_min},
           {"holdout_acc", opt(r.holdout_acc)},
           {"trend_ho", opt(r.trend_ho)},
           {"holdout_sets", holdouts},
           {"horizons", r.horizons},
           {"bwt", curve(r.bwt_curve)},
           {"f_exact", curve(r.f_exact_curve)},
           {"f_approx", curve(r.f_approx_curve)},
           {"iv", opt(r.iv)},
           {"tokens_total", r.tokens_total},
           {"runtime_s", r.runtime_s},
           {"pattern", r.pattern}};
    return j.dump(2) + "\n";
}

std::string comparison_text(const std::vector<DiagnosticReport>& reports,
                            bool rank_based_normalization) {
    if (reports.size() < 2) throw ArgumentError("comparison needs at least two runs");
    for (const DiagnosticReport& r : reports) {
        if (r.dataset != reports.front().dataset) {
            throw ConfigError("runs cover different datasets ('" + reports.front().dataset +
                              "' vs '" + r.dataset + "'); compare runs on one dataset");
        }
    }
    const std::vector<MethodProfile> profiles =
        rank_profiles(reports, rank_based_normalization);

    std::ostringstream out;
    out << reports.size() << " methods on " << reports.front().dataset << "\n\n";
    out << "ranks per dimension (1 = best):\n";
    out << "method";
    for (const std::string& d : kProfileDimensions) out << ',' << d;
    out << ",pattern\n";
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        out << csv_cell(profiles[i].method);
        for (std::size_t d = 0; d < profiles[i].ranks.size(); ++d) {
            out << ',' << profiles[i].ranks[d];
        }
        out << ',' << csv_cell(reports[i].pattern) << '\n';
    }

    std::vector<Objective> objectives{Objective::online_accuracy, Objective::tokens,
                                      Objective::runtime};
    const bool all_have_holdout = std::all_of(
        reports.begin(), reports.end(),
        [](const DiagnosticReport& r) { return r.holdout_acc.has_value(); });
    if (all_have_holdout) {
        objectives.insert(objectives.begin() + 1, Objective::holdout_accuracy);
    }
    out << "\npareto survivors (";
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        if (i) out << ", ";
        out << to_string(objectives[i]);
    }
    out << "): ";
    const std::vector<std::string> survivors = pareto_filter(reports, objectives);
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        if (i) out << ", ";
        out << survivors[i];
    }
    out << '\n';
    return out.str();
}

ReportBundle cmd_run(const RunConfig& config) {
    PreparedRun prepared = prepare_run(config);
    const RunLog log =
        run_sequential(prepared.plan, *prepared.policy, *prepared.gateway, config.out_dir);
    return write_bundle(config.out_dir, log,
                        {config.schedule.alternative_baseline, config.thresholds});
}

ReportBundle cmd_resume(const RunConfig& config) {
    PreparedRun prepared = prepare_run(config);
    const RunLog log =
        resume_run(prepared.plan, *prepared.policy, *prepared.gateway, config.out_dir);
    return write_bundle(config.out_dir, log,
                        {config.schedule.alternative_baseline, config.thresholds});
}

ReportBundle cmd_metrics(const std::string& run_log_path, const std::string& out_dir,
                         const ReportOptions& options) {
    const RunLog log = RunLog::from_jsonl_file(run_log_path);
    std::string dir = out_dir;
    if (dir.empty()) {
        dir = std::filesystem::path(run_log_path).parent_path().string();
        if (dir.empty()) dir = ".";
    }
    return write_bundle(dir, log, options);
}

std::string cmd_compare(const std::vector<std::string>& run_log_paths,
                        const std::string& out_dir, bool rank_based_normalization) {
    if (run_log_paths.size() < 2) {
        throw ConfigError("compare needs at least two run logs");
    }
    std::vector<DiagnosticReport> reports;
    reports.reserve(run_log_paths.size());
    for (const std::string& path : run_log_paths) {
        reports.push_back(report_from_log_file(path, {}));
    }
    const std::string text = comparison_text(reports, rank_based_normalization);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text_file((std::filesystem::path(out_dir) / "compare.txt").string(), text);
    }
    return text;
}

} // namespace seqmem
