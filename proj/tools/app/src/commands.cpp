#include "gaze_attn_app/commands.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "gaze_attn/error.hpp"
#include "gaze_attn/file_util.hpp"
#include "gaze_attn/stats.hpp"

namespace gaze_attn::app {
namespace fs = std::filesystem;

namespace {

fs::path report_path(const AnalysisConfig& cfg, const std::string& stem) {
  return cfg.out / (stem + std::string(extension(cfg.format)));
}

void emit(const AnalysisConfig& cfg, const std::string& stem, const ReportTable& table) {
  const fs::path file = report_path(cfg, stem);
  write_report(table, file, cfg.format);
  spdlog::info("wrote {} ({} rows)", file.string(), table.rows.size());
}

Cell opt_cell(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }

/// Loads each run once.
class RunCache {
 public:
  explicit RunCache(const AnalysisConfig& cfg) : cfg_(cfg) {}

  const AttentionRun& get(const std::string& model, const std::string& condition = "plain") {
    const auto key = std::make_pair(model, condition);
    auto it = runs_.find(key);
    if (it == runs_.end()) {
      const RunEntry& entry = cfg_.run(model, condition);
      spdlog::debug("loading run {} / {} from {}", model, condition, entry.path.string());
      AttentionRun run = load_attention(entry.path);
      run.meta.name = model;
      it = runs_.emplace(key, std::move(run)).first;
    }
    return it->second;
  }

 private:
  const AnalysisConfig& cfg_;
  std::map<std::pair<std::string, std::string>, AttentionRun> runs_;
};

std::vector<std::string> resemblance_models(const AnalysisConfig& cfg) {
  if (!cfg.resemblance_models.empty()) return cfg.resemblance_models;
  std::vector<std::string> models;
  for (const auto& r : cfg.runs) {
    if (r.condition == "plain") models.push_back(r.model);
  }
  return models;
}

std::vector<SubjectVector> configured_subjects(const AnalysisConfig& cfg, const Corpus& corpus) {
  if (!cfg.saccades) throw UsageError("config: 'saccades' is required for this command");
  return subject_vectors(load_saccade_dir(*cfg.saccades, corpus), corpus);
}

bool group_present(const std::vector<SubjectVector>& subjects, Group g) {
  return std::any_of(subjects.begin(), subjects.end(), [&](const SubjectVector& s) { return s.group == g; });
}

}  // namespace

std::vector<std::string> merged_report_stems() {
  return {kValidationReport,         kDivergenceReport, kSensitivityReport, kResemblanceLayersReport,
          kResemblanceSummaryReport, kTrivialReport,    kStatsReport};
}

ReportTable validation_table() { return ReportTable({"source", "severity", "location", "message"}); }

void add_findings(ReportTable& table, const std::string& source, const ValidationReport& report) {
  for (const auto& f : report.findings) {
    table.add_row({source, std::string(f.severity == Severity::error ? "error" : "warning"), f.location, f.message});
  }
}

ReportTable divergence_table() {
  return ReportTable({"model_a", "model_b", "condition", "granularity", "unit", "mean", "std", "n", "above_reference"});
}

void add_divergence(ReportTable& table, const std::string& model_a, const std::string& model_b,
                    const std::string& condition, const DivergenceReport& report, const ModelPair* reference) {
  const std::string granularity(to_string(report.granularity));
  auto add = [&](const std::string& a, const std::string& b, const std::string& cond, const DivergenceValue& v) {
    table.add_row({a, b, cond, granularity, static_cast<std::int64_t>(v.unit), v.mean, v.std,
                   static_cast<std::int64_t>(v.n_sentences),
                   v.above_reference ? Cell{*v.above_reference} : Cell{}});
  };
  for (const auto& v : report.values) add(model_a, model_b, condition, v);
  if (report.reference) {
    const std::string ra = reference ? reference->a : std::string();
    const std::string rb = reference ? reference->b : std::string();
    for (const auto& v : *report.reference) add(ra, rb, "reference", v);
  }
}

ReportTable resemblance_layers_table() {
  return ReportTable({"model", "group", "layer", "mean_r2", "n_subjects"});
}

ReportTable resemblance_summary_table() {
  return ReportTable({"model", "group", "r2_model", "r2_inter", "ratio_percent", "argmax_layer"});
}

void add_resemblance(ReportTable& layers, ReportTable& summary, const ResemblanceScore& score) {
  const std::string group(to_string(score.group));
  for (std::size_t l = 0; l < score.layer_mean_r2.size(); ++l) {
    layers.add_row({score.model, group, static_cast<std::int64_t>(l), score.layer_mean_r2[l],
                    static_cast<std::int64_t>(score.subject_ids.size())});
  }
  summary.add_row({score.model, group, score.r2_model, opt_cell(score.r2_inter), opt_cell(score.ratio_percent),
                   static_cast<std::int64_t>(score.argmax_layer)});
}

ReportTable trivial_table() { return ReportTable({"entity_kind", "entity_id", "r2"}); }

void add_trivial(ReportTable& table, const std::string& entity_kind, const std::string& entity_id,
                 const FitResult& fit) {
  table.add_row({entity_kind, entity_id, fit.r2});
}

ReportTable stats_table() {
  return ReportTable({"test_name", "statistic", "p_value", "df", "n", "threshold", "significant"});
}

std::vector<SaccadeBundle> load_saccade_dir(const fs::path& dir, const Corpus& corpus) {
  if (!fs::is_directory(dir)) throw DataError("saccade directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SaccadeBundle> bundles;
  for (const auto& f : files) bundles.push_back(load_saccade(f, corpus));
  return bundles;
}

std::vector<SubjectVector> subject_vectors(const std::vector<SaccadeBundle>& bundles, const Corpus& corpus) {
  std::vector<SubjectVector> out;
  for (const auto& b : bundles) out.push_back(build_subject_vector(b, corpus));
  return out;
}

int cmd_validate(const AnalysisConfig& cfg) {
  ReportTable table = validation_table();
  ValidationReport overall;
  auto record_failure = [&](const std::string& source, const std::exception& e) {
    ValidationReport r;
    r.error(source, e.what());
    add_findings(table, source, r);
    overall.error(source, e.what());
  };

  Corpus corpus;
  try {
    corpus = load_corpus(cfg.corpus);
  } catch (const DataError& e) {
    record_failure(cfg.corpus.string(), e);
  }
  if (!overall.has_errors()) {
    for (const auto& entry : cfg.runs) {
      const std::string source = entry.model + "/" + entry.condition;
      try {
        const ValidationReport r = validate_run(load_attention(entry.path), corpus);
        add_findings(table, source, r);
        for (const auto& f : r.findings) overall.findings.push_back(f);
      } catch (const DataError& e) {
        record_failure(source, e);
      }
    }
    if (cfg.saccades) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(*cfg.saccades)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        try {
          load_saccade(f, corpus);
        } catch (const DataError& e) {
          record_failure(f.filename().string(), e);
        }
      }
    }
  }
  if (cfg.metrics) {
    try {
      load_metrics(*cfg.metrics);
    } catch (const DataError& e) {
      record_failure(cfg.metrics->filename().string(), e);
    }
  }
  emit(cfg, kValidationReport, table);
  spdlog::info("validation: {} error(s), {} warning(s)", overall.error_count(), overall.warning_count());
  return overall.has_errors() ? 1 : 0;
}

int cmd_divergence(const AnalysisConfig& cfg) {
  if (cfg.divergence_pairs.empty() && cfg.sensitivity.empty()) {
    throw UsageError("config: no divergence pairs or sensitivity entries");
  }
  RunCache runs(cfg);
  DivergenceOptions options = cfg.divergence;
  options.jobs = cfg.jobs;

  ReportTable table = divergence_table();
  for (const auto& pair : cfg.divergence_pairs) {
    const AttentionRun& a = runs.get(pair.a);
    const AttentionRun& b = runs.get(pair.b);
    spdlog::info("divergence {} vs {}", pair.a, pair.b);
    if (!cfg.reference) {
      add_divergence(table, pair.a, pair.b, "plain", compare_runs(a, b, options, cfg.force_quarters));
      continue;
    }
    const AttentionRun& ra = runs.get(cfg.reference->a);
    const AttentionRun& rb = runs.get(cfg.reference->b);
    // Layerwise only when the pair and the reference share one depth.
    const bool layerwise = !cfg.force_quarters && a.meta.n_layers == b.meta.n_layers &&
                           ra.meta.n_layers == rb.meta.n_layers && ra.meta.n_layers == a.meta.n_layers;
    DivergenceReport report = layerwise ? layerwise_divergence(a, b, options) : quarterwise_divergence(a, b, options);
    const DivergenceReport ref =
        layerwise ? layerwise_divergence(ra, rb, options) : quarterwise_divergence(ra, rb, options);
    flag_against_reference(report, ref);
    add_divergence(table, pair.a, pair.b, "plain", report, &*cfg.reference);
  }
  if (!cfg.divergence_pairs.empty()) emit(cfg, kDivergenceReport, table);

  if (!cfg.sensitivity.empty()) {
    ReportTable sens = divergence_table();
    const AttentionRun& ra = runs.get(cfg.reference->a);
    const AttentionRun& rb = runs.get(cfg.reference->b);
    for (const auto& entry : cfg.sensitivity) {
      const AttentionRun& plain = runs.get(entry.model);
      const AttentionRun& prefixed = runs.get(entry.model, entry.condition);
      spdlog::info("instruction sensitivity {} / {}", entry.model, entry.condition);
      const bool layerwise = !cfg.force_quarters && ra.meta.n_layers == rb.meta.n_layers &&
                             ra.meta.n_layers == plain.meta.n_layers;
      const DivergenceReport ref =
          layerwise ? layerwise_divergence(ra, rb, options) : quarterwise_divergence(ra, rb, options);
      add_divergence(sens, entry.model, entry.model, entry.condition,
                     instruction_sensitivity(plain, prefixed, ref, options), &*cfg.reference);
    }
    emit(cfg, kSensitivityReport, sens);
  }
  return 0;
}

int cmd_resemblance(const AnalysisConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.corpus);
  const std::vector<SubjectVector> subjects = configured_subjects(cfg, corpus);
  RunCache runs(cfg);
  ReportTable layers = resemblance_layers_table();
  ReportTable summary = resemblance_summary_table();
  for (const auto& model : resemblance_models(cfg)) {
    for (Group g : {Group::L1, Group::L2}) {
      if (!group_present(subjects, g)) continue;
      spdlog::info("resemblance {} / {}", model, to_string(g));
      const ResemblanceScore score = model_resemblance(runs.get(model), subjects, g, cfg.jobs);
      for (const auto& w : score.warnings) spdlog::warn("{} / {}: {}", model, to_string(g), w);
      add_resemblance(layers, summary, score);
    }
  }
  emit(cfg, kResemblanceLayersReport, layers);
  emit(cfg, kResemblanceSummaryReport, summary);
  return 0;
}

int cmd_trivial(const AnalysisConfig& cfg) {
  RunCache runs(cfg);
  ReportTable table = trivial_table();
  for (const auto& model : resemblance_models(cfg)) {
    const auto fits = model_trivial_reliance(runs.get(model), cfg.jobs);
    for (std::size_t l = 0; l < fits.size(); ++l) {
      add_trivial(table, "model_layer", model + "/layer" + std::to_string(l), fits[l]);
    }
  }
  if (cfg.saccades) {
    const Corpus corpus = load_corpus(cfg.corpus);
    for (const auto& s : configured_subjects(cfg, corpus)) {
      add_trivial(table, "subject", s.subject_id, trivial_reliance(s.vector, corpus));
    }
  }
  emit(cfg, kTrivialReport, table);
  return 0;
}

int cmd_stats(const AnalysisConfig& cfg) {
  ReportTable table = stats_table();
  auto threshold = [&](std::size_t family_size) {
    return bonferroni(cfg.stats.alpha, cfg.stats.n_tests.value_or(family_size));
  };
  auto add_test = [&](const std::string& name, double statistic, std::optional<double> p, std::optional<double> df,
                      std::size_t n, std::optional<double> thr) {
    Cell sig;
    if (p && thr) sig = *p < *thr;
    table.add_row({name, statistic, opt_cell(p), opt_cell(df), static_cast<std::int64_t>(n), opt_cell(thr), sig});
  };

  if (cfg.stats.correlations || cfg.stats.scaling) {
    if (!cfg.metrics) throw DataError("stats: correlations and scaling need a metrics sidecar ('metrics')");
    const MetricsSidecar metrics = load_metrics(*cfg.metrics);
    const std::pair<const char*, std::optional<double> ModelMetrics::*> scores[] = {
        {"resemblance_l1", &ModelMetrics::resemblance_l1}, {"resemblance_l2", &ModelMetrics::resemblance_l2}};

    if (cfg.stats.correlations) {
      for (const auto& [name, field] : scores) {
        std::vector<double> loss, score;
        for (const auto& [model, m] : metrics) {
          if (m.ntp_loss && (m.*field)) {
            loss.push_back(*m.ntp_loss);
            score.push_back(*(m.*field));
          }
        }
        if (loss.size() < 3) {
          throw DataError(std::string("stats: missing sidecar fields; need ntp_loss and ") + name +
                          " for at least three models");
        }
        const CorrelationResult c = pearson(loss, score);
        add_test(std::string("pearson:ntp_loss~") + name, c.r, c.p_two_sided, static_cast<double>(c.n - 2), c.n,
                 threshold(2));
      }
    }
    if (cfg.stats.scaling) {
      for (const auto& [name, field] : scores) {
        std::vector<ScalingPoint> points;
        if (cfg.stats.scaling_models.empty()) {
          for (const auto& [model, m] : metrics) {
            if (m.param_count && (m.*field)) points.push_back({*m.param_count, *(m.*field)});
          }
        } else {
          for (const auto& model : cfg.stats.scaling_models) {
            auto it = metrics.find(model);
            if (it == metrics.end() || !it->second.param_count || !(it->second.*field)) {
              throw DataError("stats: missing sidecar fields for " + model + " (param_count, " + name + ")");
            }
            points.push_back({*it->second.param_count, *(it->second.*field)});
          }
        }
        if (points.size() < 2) {
          throw DataError(std::string("stats: missing sidecar fields; need param_count and ") + name +
                          " for at least two models");
        }
        const ScalingFit fit = scaling_fit(points);
        const std::size_t n = points.size();
        std::optional<double> df;
        if (n > 2) df.emplace(static_cast<double>(n - 2));
        add_test(std::string("scaling:") + name, fit.r, fit.p_two_sided, df, n,
                 fit.p_two_sided ? std::optional<double>(threshold(2)) : std::nullopt);
        add_test(std::string("scaling_slope:") + name, fit.slope, std::nullopt, std::nullopt, n, std::nullopt);
        add_test(std::string("scaling_intercept:") + name, fit.intercept, std::nullopt, std::nullopt, n, std::nullopt);
        add_test(std::string("scaling_predict:") + name + "@" + format_double(cfg.stats.predict_at),
                 scaling_predict(fit, cfg.stats.predict_at), std::nullopt, std::nullopt, n, std::nullopt);
      }
    }
  }

  if (!cfg.stats.paired.empty() || (cfg.stats.group_trivial && cfg.saccades)) {
    const Corpus corpus = load_corpus(cfg.corpus);
    const std::vector<SubjectVector> subjects = configured_subjects(cfg, corpus);
    RunCache runs(cfg);
    for (const auto& pair : cfg.stats.paired) {
      for (Group g : {Group::L1, Group::L2}) {
        if (!group_present(subjects, g)) continue;
        const ResemblanceScore a = model_resemblance(runs.get(pair.a), subjects, g, cfg.jobs);
        const ResemblanceScore b = model_resemblance(runs.get(pair.b), subjects, g, cfg.jobs);
        if (a.layer_mean_r2.size() != b.layer_mean_r2.size()) {
          throw UsageError("stats: paired test needs equal depth (" + pair.a + ", " + pair.b + ")");
        }
        const std::size_t n_layers = a.layer_mean_r2.size();
        for (std::size_t l = 0; l < n_layers; ++l) {
          const TTestResult t = t_test_paired(a.subject_r2[l], b.subject_r2[l]);
          add_test("paired:" + pair.a + "~" + pair.b + ":" + std::string(to_string(g)) + ":layer" + std::to_string(l),
                   t.t, t.p_two_sided, t.df, a.subject_r2[l].size(), threshold(n_layers));
        }
      }
    }
    if (cfg.stats.group_trivial) {
      std::vector<double> l1, l2;
      for (const auto& s : subjects) (s.group == Group::L1 ? l1 : l2).push_back(trivial_reliance(s.vector, corpus).r2);
      if (l1.size() >= 2 && l2.size() >= 2) {
        const TTestResult t = t_test_independent(l1, l2);
        add_test("welch:trivial_r2:L1~L2", t.t, t.p_two_sided, t.df, l1.size() + l2.size(), threshold(1));
      } else {
        spdlog::warn("stats: L1 vs L2 trivial-reliance test needs two subjects per group; skipped");
      }
    }
  }
  emit(cfg, kStatsReport, table);
  return 0;
}

int cmd_report(const AnalysisConfig& cfg) {
  ReportTable summary({"table", "row", "column", "value"});
  std::size_t merged = 0;
  for (const auto& stem : merged_report_stems()) {
    const fs::path file = report_path(cfg, stem);
    if (!fs::exists(file)) continue;
    const ReportTable t = read_report(file, cfg.format);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        summary.add_row({stem, static_cast<std::int64_t>(r), t.columns[c], t.rows[r][c]});
      }
    }
    ++merged;
  }
  if (merged == 0) throw DataError("report: no reports found in " + cfg.out.string());
  emit(cfg, kSummaryReport, summary);
  return 0;
}

}  // namespace gaze_attn::app
