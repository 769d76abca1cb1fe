#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/divergence.hpp"
#include "gaze_attn/regression.hpp"
#include "gaze_attn/report.hpp"
#include "gaze_attn/resemblance.hpp"
#include "gaze_attn_app/config.hpp"

namespace gaze_attn::app {

// Report file stems, in the order `report` merges them.
inline constexpr const char* kValidationReport = "validation";
inline constexpr const char* kDivergenceReport = "divergence";
inline constexpr const char* kSensitivityReport = "sensitivity";
inline constexpr const char* kResemblanceLayersReport = "resemblance_layers";
inline constexpr const char* kResemblanceSummaryReport = "resemblance_summary";
inline constexpr const char* kTrivialReport = "trivial";
inline constexpr const char* kStatsReport = "stats";
inline constexpr const char* kSummaryReport = "summary";

std::vector<std::string> merged_report_stems();

// Table layouts. Each builder appends rows for one library result.
ReportTable validation_table();
void add_findings(ReportTable& table, const std::string& source, const ValidationReport& report);

ReportTable divergence_table();
/// One row per unit; reference values (when attached) follow as rows with
/// condition "reference".
void add_divergence(ReportTable& table, const std::string& model_a, const std::string& model_b,
                    const std::string& condition, const DivergenceReport& report,
                    const ModelPair* reference = nullptr);

ReportTable resemblance_layers_table();
ReportTable resemblance_summary_table();
void add_resemblance(ReportTable& layers, ReportTable& summary, const ResemblanceScore& score);

ReportTable trivial_table();
void add_trivial(ReportTable& table, const std::string& entity_kind, const std::string& entity_id,
                 const FitResult& fit);

ReportTable stats_table();

/// Subject bundles of a saccade directory (*.json, ascending file name).
std::vector<SaccadeBundle> load_saccade_dir(const std::filesystem::path& dir, const Corpus& corpus);
std::vector<SubjectVector> subject_vectors(const std::vector<SaccadeBundle>& bundles, const Corpus& corpus);

// Commands. Each writes its reports under cfg.out and returns the exit code.
int cmd_validate(const AnalysisConfig& cfg);
int cmd_divergence(const AnalysisConfig& cfg);
int cmd_resemblance(const AnalysisConfig& cfg);
int cmd_trivial(const AnalysisConfig& cfg);
int cmd_stats(const AnalysisConfig& cfg);
int cmd_report(const AnalysisConfig& cfg);

/// Writes a synthetic workspace (corpus, runs, saccades, metrics sidecar and
/// config.json) described by a JSON spec file.
int cmd_synth(const std::filesystem::path& spec_file, const std::filesystem::path& out_dir);

}  // namespace gaze_attn::app
