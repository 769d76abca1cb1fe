#include <map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "gaze_attn/error.hpp"
#include "gaze_attn/file_util.hpp"
#include "gaze_attn/synth.hpp"
#include "gaze_attn_app/commands.hpp"

namespace gaze_attn::app {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("synth spec: field '") + key + "' has the wrong type");
  }
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw UsageError("synth spec: " + where + " needs '" + key + "'");
  return field<T>(obj, key, T{});
}

PatternMixture parse_mixture(const json& s) {
  PatternMixture mix;
  const auto w = field<std::vector<double>>(s, "weights", {0.0, 0.0, 0.0});
  if (w.size() != 3) throw UsageError("synth spec: pattern_mixture needs three weights");
  std::copy(w.begin(), w.end(), mix.weights.begin());
  mix.sigma = field<double>(s, "sigma", 0.0);
  return mix;
}

PlantedStructure parse_model_structure(const json& s) {
  const std::string kind = field<std::string>(s, "kind", "independent_random");
  if (kind == "independent_random") return IndependentRandom{};
  if (kind == "pattern_mixture") return parse_mixture(s);
  throw UsageError("synth spec: model structure must be independent_random or pattern_mixture, got '" + kind + "'");
}

std::string run_dir_name(const std::string& model, const std::string& condition) {
  return condition == "plain" ? model : model + "@" + condition;
}

}  // namespace

int cmd_synth(const fs::path& spec_file, const fs::path& out_dir) {
  if (!fs::is_regular_file(spec_file)) throw UsageError("synth spec not found: " + spec_file.string());
  json spec;
  try {
    spec = json::parse(read_file(spec_file));
  } catch (const json::exception& e) {
    throw UsageError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  if (!spec.is_object()) throw UsageError("synth spec must be a JSON object");

  const auto seed = field<std::uint64_t>(spec, "seed", 1);
  const json corpus_spec = field<json>(spec, "corpus", json::object());
  CorpusShape shape;
  shape.seed = field<std::uint64_t>(corpus_spec, "seed", seed);
  shape.n_sentences = field<std::size_t>(corpus_spec, "n_sentences", shape.n_sentences);
  shape.min_words = field<std::size_t>(corpus_spec, "min_words", shape.min_words);
  shape.max_words = field<std::size_t>(corpus_spec, "max_words", shape.max_words);
  shape.article = field<std::string>(corpus_spec, "article", shape.article);
  const Corpus corpus = gen_corpus(shape);
  write_corpus(corpus, out_dir / "corpus.json");

  ordered_json runs = ordered_json::array();
  MetricsSidecar metrics;
  std::map<std::string, AttentionRun> plain_runs;
  const json models = field<json>(spec, "models", json::array());
  if (models.empty()) throw UsageError("synth spec: at least one model is required");
  for (std::size_t k = 0; k < models.size(); ++k) {
    const json& m = models[k];
    SynthSpec s;
    s.model_name = required<std::string>(m, "name", "model " + std::to_string(k));
    s.seed = field<std::uint64_t>(m, "seed", seed + 1 + k);
    s.param_count = static_cast<std::uint64_t>(field<double>(m, "param_count", 1e6));
    s.n_layers = field<std::uint32_t>(m, "n_layers", s.n_layers);
    s.n_heads = field<std::uint32_t>(m, "n_heads", s.n_heads);
    s.split_probability = field<double>(m, "split_probability", s.split_probability);
    s.structure = parse_model_structure(field<json>(m, "structure", json::object()));
    if (plain_runs.contains(s.model_name)) throw UsageError("synth spec: duplicate model " + s.model_name);

    SynthRun synth = gen_attention_run(s, corpus);
    if (m.contains("ntp_loss")) synth.run.meta.ntp_loss = field<double>(m, "ntp_loss", 0.0);
    write_attention(synth.run, out_dir / "runs" / run_dir_name(s.model_name, "plain"));
    runs.push_back({{"model", s.model_name}, {"condition", "plain"}, {"path", "runs/" + s.model_name}});

    ModelMetrics& mm = metrics[s.model_name];
    mm.param_count = static_cast<double>(s.param_count);
    mm.ntp_loss = synth.run.meta.ntp_loss;

    for (const json& p : field<json>(m, "prefixed", json::array())) {
      PrefixVariant v;
      const std::string condition = field<std::string>(p, "condition", "instruction_prefixed");
      v.kind = parse_condition_kind(condition);
      v.prefix_text = field<std::string>(p, "prefix", std::string(kTranslatePrefix));
      v.n_prefix_words = field<std::size_t>(p, "n_prefix_words", 1);
      if (p.contains("perturb_from_layer")) v.perturb_from_layer = field<std::size_t>(p, "perturb_from_layer", 0);
      v.seed = field<std::uint64_t>(p, "seed", s.seed ^ 0x5bd1e995ULL);
      const std::string dir = run_dir_name(s.model_name, condition);
      write_attention(gen_prefixed_run(synth.run, v), out_dir / "runs" / dir);
      runs.push_back({{"model", s.model_name}, {"condition", condition}, {"path", "runs/" + dir}});
    }
    plain_runs.emplace(s.model_name, std::move(synth.run));
  }

  const json subjects = field<json>(spec, "subjects", json::array());
  for (std::size_t k = 0; k < subjects.size(); ++k) {
    const json& sub = subjects[k];
    SynthSpec s;
    s.subject_id = required<std::string>(sub, "id", "subject " + std::to_string(k));
    s.group = parse_group(field<std::string>(sub, "group", "L1"));
    s.seed = field<std::uint64_t>(sub, "seed", seed * 1000 + k);
    const json st = field<json>(sub, "structure", json::object());
    const std::string kind = field<std::string>(st, "kind", "independent_random");
    SaccadeBundle bundle;
    if (kind == "linear_combo") {
      const std::string model = required<std::string>(st, "model", "linear_combo subject " + s.subject_id);
      auto it = plain_runs.find(model);
      if (it == plain_runs.end()) throw UsageError("synth spec: subject " + s.subject_id + " names unknown model");
      LinearCombo combo;
      combo.target_layer = field<std::size_t>(st, "target_layer", 0);
      combo.head_weights = field<std::vector<double>>(st, "head_weights", {});
      combo.intercept = field<double>(st, "intercept", 0.0);
      combo.sigma = field<double>(st, "sigma", 0.0);
      combo.count_scale = field<double>(st, "count_scale", combo.count_scale);
      s.structure = combo;
      bundle = gen_saccade_from_run(s, it->second);
    } else if (kind == "pattern_mixture") {
      s.structure = parse_mixture(st);
      bundle = gen_saccade(s, corpus);
    } else if (kind == "independent_random") {
      bundle = gen_saccade(s, corpus);
    } else {
      throw UsageError("synth spec: unknown subject structure '" + kind + "'");
    }
    write_saccade(bundle, out_dir / "saccades" / (s.subject_id + ".json"));
  }

  // Extra sidecar fields are copied verbatim.
  const json extra_metrics = field<json>(spec, "metrics", json::object());
  for (const auto& [model, fields] : extra_metrics.items()) {
    ModelMetrics& mm = metrics[model];
    for (const auto& [key, value] : fields.items()) {
      if (!value.is_number()) throw UsageError("synth spec: metrics." + model + "." + key + " must be numeric");
      const double v = value.get<double>();
      if (key == "ntp_loss") mm.ntp_loss = v;
      else if (key == "param_count") mm.param_count = v;
      else if (key == "resemblance_l1") mm.resemblance_l1 = v;
      else if (key == "resemblance_l2") mm.resemblance_l2 = v;
      else mm.extra[key] = v;
    }
  }
  write_metrics(metrics, out_dir / "metrics.json");

  ordered_json config;
  config["corpus"] = "corpus.json";
  config["runs"] = std::move(runs);
  if (!subjects.empty()) config["saccades"] = "saccades";
  config["metrics"] = "metrics.json";
  config["out"] = "reports";
  config.update(field<json>(spec, "config", json::object()));
  write_file_atomic(out_dir / "config.json", config.dump(2) + "\n");
  spdlog::info("synthetic workspace written to {}", out_dir.string());
  return 0;
}

}  // namespace gaze_attn::app
