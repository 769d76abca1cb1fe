#include "gaze_attn_app/config.hpp"

#include <set>

#include <json.hpp>

#include "gaze_attn/error.hpp"
#include "gaze_attn/file_util.hpp"

namespace gaze_attn::app {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config: field '") + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

ModelPair parse_pair(const json& j, const char* what) {
  if (j.is_array() && j.size() == 2 && j[0].is_string() && j[1].is_string()) {
    return {j[0].get<std::string>(), j[1].get<std::string>()};
  }
  if (j.is_object() && j.contains("a") && j.contains("b")) {
    return {get<std::string>(j, "a", ""), get<std::string>(j, "b", "")};
  }
  throw UsageError(std::string("config: ") + what + " must be [model_a, model_b]");
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw UsageError("config: " + what + " does not exist: " + p.string());
}

}  // namespace

const RunEntry& AnalysisConfig::run(const std::string& model, const std::string& condition) const {
  for (const auto& r : runs) {
    if (r.model == model && r.condition == condition) return r;
  }
  throw UsageError("config: no run for model '" + model + "' with condition '" + condition + "'");
}

AnalysisConfig parse_config(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.empty()) throw UsageError("config is empty");

  AnalysisConfig cfg;
  cfg.base_dir = base_dir;
  const std::string corpus = get<std::string>(doc, "corpus", "");
  if (corpus.empty()) throw UsageError("config: 'corpus' is required");
  cfg.corpus = resolve(base_dir, corpus);
  require_exists(cfg.corpus, "corpus");

  std::set<std::pair<std::string, std::string>> seen;
  for (const json& r : get<json>(doc, "runs", json::array())) {
    RunEntry e;
    e.model = get<std::string>(r, "model", "");
    e.condition = get<std::string>(r, "condition", "plain");
    const std::string path = get<std::string>(r, "path", "");
    if (e.model.empty() || path.empty()) throw UsageError("config: every run needs 'model' and 'path'");
    e.path = resolve(base_dir, path);
    require_exists(e.path, "run " + e.model);
    if (!seen.emplace(e.model, e.condition).second) {
      throw UsageError("config: duplicate run " + e.model + " / " + e.condition);
    }
    cfg.runs.push_back(std::move(e));
  }
  if (const auto s = get<std::string>(doc, "saccades", ""); !s.empty()) {
    cfg.saccades = resolve(base_dir, s);
    require_exists(*cfg.saccades, "saccade directory");
  }
  if (const auto m = get<std::string>(doc, "metrics", ""); !m.empty()) {
    cfg.metrics = resolve(base_dir, m);
    require_exists(*cfg.metrics, "metrics sidecar");
  }
  cfg.out = resolve(base_dir, get<std::string>(doc, "out", "reports"));
  cfg.format = parse_report_format(get<std::string>(doc, "format", "csv"));
  const auto jobs = get<std::int64_t>(doc, "jobs", 1);
  if (jobs < 1) throw UsageError("config: jobs must be >= 1");
  cfg.jobs = static_cast<std::size_t>(jobs);

  if (doc.contains("reference") && !doc.at("reference").is_null()) {
    cfg.reference = parse_pair(doc.at("reference"), "reference");
    cfg.run(cfg.reference->a);
    cfg.run(cfg.reference->b);
  }
  const json div = get<json>(doc, "divergence", json::object());
  for (const json& p : get<json>(div, "pairs", json::array())) {
    cfg.divergence_pairs.push_back(parse_pair(p, "divergence pair"));
    cfg.run(cfg.divergence_pairs.back().a);
    cfg.run(cfg.divergence_pairs.back().b);
  }
  cfg.divergence.metric = parse_divergence_metric(get<std::string>(div, "metric", "symmetrized_kl"));
  cfg.divergence.quarter_aggregation =
      parse_quarter_aggregation(get<std::string>(div, "quarter_aggregation", "mean_matrix"));
  cfg.force_quarters = get<bool>(div, "force_quarters", false);
  for (const json& s : get<json>(doc, "sensitivity", json::array())) {
    SensitivityEntry e{get<std::string>(s, "model", ""), get<std::string>(s, "condition", "")};
    cfg.run(e.model);
    cfg.run(e.model, e.condition);
    cfg.sensitivity.push_back(std::move(e));
  }
  if (!cfg.sensitivity.empty() && !cfg.reference) {
    throw UsageError("config: sensitivity analysis needs a reference pair");
  }

  const json res = get<json>(doc, "resemblance", json::object());
  cfg.resemblance_models = get<std::vector<std::string>>(res, "models", {});
  for (const auto& m : cfg.resemblance_models) cfg.run(m);

  const json st = get<json>(doc, "stats", json::object());
  cfg.stats.alpha = get<double>(st, "alpha", 0.05);
  if (!(cfg.stats.alpha > 0.0 && cfg.stats.alpha <= 1.0)) throw UsageError("config: alpha must be in (0, 1]");
  if (st.contains("n_tests") && !st.at("n_tests").is_null()) {
    const auto n = get<std::int64_t>(st, "n_tests", 1);
    if (n < 1) throw UsageError("config: n_tests must be >= 1");
    cfg.stats.n_tests = static_cast<std::size_t>(n);
  }
  cfg.stats.correlations = get<bool>(st, "correlations", true);
  cfg.stats.scaling = get<bool>(st, "scaling", true);
  cfg.stats.scaling_models = get<std::vector<std::string>>(st, "scaling_models", {});
  cfg.stats.predict_at = get<double>(st, "predict_at", 1e11);
  for (const json& p : get<json>(st, "paired", json::array())) {
    cfg.stats.paired.push_back(parse_pair(p, "paired test"));
    cfg.run(cfg.stats.paired.back().a);
    cfg.run(cfg.stats.paired.back().b);
  }
  cfg.stats.group_trivial = get<bool>(st, "group_trivial", true);
  return cfg;
}

AnalysisConfig load_config(const fs::path& file) {
  if (!fs::is_regular_file(file)) throw UsageError("config file not found: " + file.string());
  std::string text;
  try {
    text = read_file(file);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return parse_config(text, fs::absolute(file).parent_path());
}

}  // namespace gaze_attn::app
