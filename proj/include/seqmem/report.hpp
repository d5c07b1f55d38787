#pragma once

#include <string>
#include <vector>

#include "seqmem/config.hpp"
#include "seqmem/diagnostics.hpp"
#include "seqmem/runner.hpp"

namespace seqmem {

/// Paths of everything one run emits, plus the computed diagnostics.
struct ReportBundle {
    std::string out_dir;
    std::string run_log_path;
    std::string metrics_csv_path;
    std::string horizons_csv_path;
    std::string summary_path;
    std::string report_json_path;
    DiagnosticReport report;
};

/// Wide per-run metric table. One row per report; horizon metrics fan out
/// into bwt_t{t} / f_exact_t{t} / f_approx_t{t} columns. Cells whose
/// statistic is undefined on the run's grid stay empty.
std::string metrics_csv_text(const std::vector<DiagnosticReport>& reports);
/// Long-format horizon table: method, dataset, horizon, bwt, f.
std::string horizons_csv_text(const std::vector<DiagnosticReport>& reports);
std::string summary_text(const DiagnosticReport& report);
std::string report_json_text(const DiagnosticReport& report);

/// Human-readable cross-method comparison: dimension ranks, Pareto
/// survivors, and each method's trajectory pattern.
std::string comparison_text(const std::vector<DiagnosticReport>& reports,
                            bool rank_based_normalization = false);

/// Executes a configured run end to end and writes the full bundle.
ReportBundle cmd_run(const RunConfig& config);
/// Continues an aborted run from its resume token, then writes the bundle.
ReportBundle cmd_resume(const RunConfig& config);
/// Recomputes diagnostics from a persisted run log; writes the bundle files
/// next to it (or into out_dir when given).
ReportBundle cmd_metrics(const std::string& run_log_path, const std::string& out_dir = "",
                         const ReportOptions& options = {});
/// Compares finished runs by their run logs; writes compare.txt into
/// out_dir when given. Returns the comparison text.
std::string cmd_compare(const std::vector<std::string>& run_log_paths,
                        const std::string& out_dir = "",
                        bool rank_based_normalization = false);

} // namespace seqmem
