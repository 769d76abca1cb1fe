#include "gaze_attn/synth.hpp"

#include <algorithm>
#include <cmath>

#include "gaze_attn/align.hpp"
#include "gaze_attn/error.hpp"
#include "gaze_attn/rng.hpp"

namespace gaze_attn {
namespace {

constexpr std::uint64_t kNoiseStreamTag = 0xD1B54A32D192ED03ULL;

std::string random_word(SplitMix64& rng) {
  const std::size_t length = 2 + rng.below(7);
  std::string word;
  for (std::size_t c = 0; c < length; ++c) word.push_back(static_cast<char>('a' + rng.below(26)));
  return word;
}

void fill_row(std::vector<double>& row, std::size_t i, const PlantedStructure& structure, SplitMix64& rng) {
  std::fill(row.begin(), row.end(), 0.0);
  if (const auto* mix = std::get_if<PatternMixture>(&structure)) {
    // Token 0 is BOS, token 1 the first sentence token.
    for (std::size_t j = 0; j <= i; ++j) {
      double v = 0.01 + mix->sigma * std::abs(rng.normal());
      if (j == 1 || (i == 0 && j == 0)) v += mix->weights[0];
      if (i >= 1 && j == i - 1) v += mix->weights[1];
      if (j == i) v += mix->weights[2];
      row[j] = std::max(v, 1e-6);
    }
  } else {
    for (std::size_t j = 0; j <= i; ++j) row[j] = 0.05 + rng.uniform();
  }
  double sum = 0.0;
  for (std::size_t j = 0; j <= i; ++j) sum += row[j];
  for (std::size_t j = 0; j <= i; ++j) row[j] /= sum;
}

void check_shapes(const SynthSpec& spec) {
  if (spec.n_layers < 1 || spec.n_heads < 1) throw UsageError("synthetic model needs layers and heads");
  if (!(spec.split_probability >= 0.0 && spec.split_probability <= 1.0)) {
    throw UsageError("split_probability must be in [0, 1]");
  }
  if (const auto* combo = std::get_if<LinearCombo>(&spec.structure)) {
    if (combo->target_layer >= spec.n_layers) throw UsageError("linear_combo target layer out of range");
    if (combo->head_weights.size() != spec.n_heads) {
      throw UsageError("linear_combo needs one weight per head");
    }
    if (!(combo->sigma >= 0.0)) throw UsageError("sigma must be >= 0");
  }
  if (const auto* mix = std::get_if<PatternMixture>(&spec.structure)) {
    if (!(mix->sigma >= 0.0)) throw UsageError("sigma must be >= 0");
    for (double w : mix->weights) {
      if (!std::isfinite(w)) throw UsageError("pattern weights must be finite");
    }
  }
}

}  // namespace

Corpus gen_corpus(const CorpusShape& shape) {
  if (shape.n_sentences < 1) throw UsageError("corpus needs at least one sentence");
  if (shape.min_words < 1 || shape.max_words < shape.min_words) {
    throw UsageError("corpus word range must satisfy 1 <= min_words <= max_words");
  }
  Corpus corpus;
  for (std::size_t k = 0; k < shape.n_sentences; ++k) {
    SplitMix64 rng(shape.seed ^ k);
    SentenceRecord record;
    record.id = SentenceId{shape.article, static_cast<std::uint32_t>(k)};
    const std::size_t n = shape.min_words + rng.below(shape.max_words - shape.min_words + 1);
    for (std::size_t w = 0; w < n; ++w) record.words.push_back(random_word(rng));
    corpus.push_back(std::move(record));
  }
  return corpus;
}

SynthRun gen_attention_run(const SynthSpec& spec) { return gen_attention_run(spec, gen_corpus(spec.corpus)); }

SynthRun gen_attention_run(const SynthSpec& spec, const Corpus& corpus) {
  check_shapes(spec);
  SynthRun out;
  out.corpus = corpus;
  std::sort(out.corpus.begin(), out.corpus.end(),
            [](const SentenceRecord& a, const SentenceRecord& b) { return a.id < b.id; });
  out.run.meta = ModelMeta{spec.model_name, spec.param_count, spec.n_layers, spec.n_heads, std::nullopt};
  out.run.condition = Condition{};

  for (std::size_t k = 0; k < out.corpus.size(); ++k) {
    const SentenceRecord& record = out.corpus[k];
    SplitMix64 rng(spec.seed ^ k);
    SentenceAttention sentence;
    sentence.token_map.tokens.push_back({-1, SpanRole::bos});
    for (std::size_t w = 0; w < record.n_words(); ++w) {
      std::size_t pieces = 1;
      if (rng.uniform() < spec.split_probability) pieces = 2 + rng.below(2);
      for (std::size_t p = 0; p < pieces; ++p) {
        sentence.token_map.tokens.push_back({static_cast<int>(w), SpanRole::sentence});
      }
    }
    const auto n_tok = static_cast<std::uint32_t>(sentence.token_map.size());
    sentence.tensor = AttentionTensor(spec.n_layers, spec.n_heads, n_tok);
    std::vector<double> row(n_tok);
    for (std::size_t l = 0; l < spec.n_layers; ++l) {
      for (std::size_t h = 0; h < spec.n_heads; ++h) {
        for (std::size_t i = 0; i < n_tok; ++i) {
          fill_row(row, i, spec.structure, rng);
          for (std::size_t j = 0; j < n_tok; ++j) sentence.tensor.at(l, h, i, j) = static_cast<float>(row[j]);
        }
      }
    }
    out.run.sentences.emplace(record.id, std::move(sentence));
  }

  if (const auto* combo = std::get_if<LinearCombo>(&spec.structure)) {
    const LayerDesign design = build_layer_design(out.run, combo->target_layer);
    SplitMix64 noise(spec.seed ^ kNoiseStreamTag);
    SubjectVector subject;
    subject.subject_id = spec.subject_id;
    subject.group = spec.group;
    subject.vector.resize(design.design.rows());
    for (std::size_t r = 0; r < design.design.rows(); ++r) {
      double v = combo->intercept;
      for (std::size_t h = 0; h < spec.n_heads; ++h) v += combo->head_weights[h] * design.design.values(r, h);
      subject.vector[r] = v + combo->sigma * noise.normal();
    }
    out.planted_subject = std::move(subject);
  }
  return out;
}

SaccadeBundle gen_saccade(const SynthSpec& spec) { return gen_saccade(spec, gen_corpus(spec.corpus)); }

SaccadeBundle gen_saccade(const SynthSpec& spec, const Corpus& corpus) {
  if (std::holds_alternative<LinearCombo>(spec.structure)) {
    throw UsageError("linear_combo saccades are generated from a run (gen_saccade_from_run)");
  }
  const auto* mix = std::get_if<PatternMixture>(&spec.structure);
  if (mix != nullptr) {
    if (!(mix->sigma >= 0.0)) throw UsageError("sigma must be >= 0");
    if (mix->sigma == 0.0 && std::any_of(mix->weights.begin(), mix->weights.end(), [](double w) { return w < 0.0; })) {
      throw UsageError("negative pattern weights with sigma = 0 would produce negative counts");
    }
  }

  std::vector<const SentenceRecord*> records;
  for (const auto& r : corpus) records.push_back(&r);
  std::sort(records.begin(), records.end(),
            [](const SentenceRecord* a, const SentenceRecord* b) { return a->id < b->id; });

  SaccadeBundle bundle;
  bundle.subject_id = spec.subject_id;
  bundle.group = spec.group;
  for (std::size_t k = 0; k < records.size(); ++k) {
    SplitMix64 rng(spec.seed ^ k);
    const std::size_t n = records[k]->n_words();
    SaccadeMatrix counts(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (mix == nullptr) {
          counts[i][j] = static_cast<std::int64_t>(rng.below(4));
          continue;
        }
        double v = mix->sigma * rng.normal();
        if (j == 0) v += mix->weights[0];
        if (i >= 1 && j == i - 1) v += mix->weights[1];
        if (j == i) v += mix->weights[2];
        counts[i][j] = std::max<std::int64_t>(0, std::llround(v));
      }
    }
    bundle.sentences.emplace(records[k]->id, std::move(counts));
  }
  return bundle;
}

AttentionRun gen_prefixed_run(const AttentionRun& plain, const PrefixVariant& variant) {
  if (plain.condition.prefixed()) throw UsageError("gen_prefixed_run needs a plain run");
  if (variant.kind == ConditionKind::plain) throw UsageError("prefix variant needs a prefixed condition");
  if (variant.n_prefix_words < 1) throw UsageError("prefix variant needs at least one prefix word");

  AttentionRun out;
  out.meta = plain.meta;
  out.condition = Condition{variant.kind, variant.prefix_text};
  const std::size_t m = variant.n_prefix_words;
  std::size_t k = 0;
  for (const auto& [id, sentence] : plain.sentences) {
    SplitMix64 rng(variant.seed ^ k++);
    const AttentionTensor& src = sentence.tensor;
    if (!sentence.token_map.has_bos() || sentence.token_map.prefix_words() > 0) {
      throw DataError("sentence " + id.str() + " has no plain token map");
    }
    const std::size_t n = src.tokens();
    const std::size_t n_tok = n + m;

    SentenceAttention prefixed;
    prefixed.token_map.tokens.push_back({-1, SpanRole::bos});
    for (std::size_t p = 0; p < m; ++p) prefixed.token_map.tokens.push_back({static_cast<int>(p), SpanRole::prefix});
    for (std::size_t t = 1; t < n; ++t) prefixed.token_map.tokens.push_back(sentence.token_map.tokens[t]);
    prefixed.tensor = AttentionTensor(src.layers(), src.heads(), static_cast<std::uint32_t>(n_tok));
    AttentionTensor& dst = prefixed.tensor;

    std::vector<double> row(n_tok);
    for (std::size_t l = 0; l < src.layers(); ++l) {
      const bool perturbed = variant.perturb_from_layer && l >= *variant.perturb_from_layer;
      for (std::size_t h = 0; h < src.heads(); ++h) {
        for (std::size_t i = 0; i < n_tok; ++i) {
          if (perturbed || i <= m) {
            fill_row(row, i, IndependentRandom{}, rng);
            for (std::size_t j = 0; j <= i; ++j) dst.at(l, h, i, j) = static_cast<float>(row[j]);
            continue;
          }
          const std::size_t from = i - m;
          const float bos = src.at(l, h, from, 0);
          dst.at(l, h, i, 0) = bos * 0.5f;
          for (std::size_t p = 0; p < m; ++p) dst.at(l, h, i, 1 + p) = bos * 0.5f / static_cast<float>(m);
          for (std::size_t j = 1; j <= from; ++j) dst.at(l, h, i, j + m) = src.at(l, h, from, j);
        }
      }
    }
    out.sentences.emplace(id, std::move(prefixed));
  }
  return out;
}

SaccadeBundle gen_saccade_from_run(const SynthSpec& spec, const AttentionRun& run) {
  const auto* combo = std::get_if<LinearCombo>(&spec.structure);
  if (combo == nullptr) throw UsageError("gen_saccade_from_run needs a linear_combo structure");
  if (combo->target_layer >= run.meta.n_layers) throw UsageError("linear_combo target layer out of range");
  if (combo->head_weights.size() != run.meta.n_heads) throw UsageError("linear_combo needs one weight per head");

  SaccadeBundle bundle;
  bundle.subject_id = spec.subject_id;
  bundle.group = spec.group;
  std::size_t k = 0;
  for (const auto& [id, sentence] : run.sentences) {
    SplitMix64 rng(spec.seed ^ k++);
    std::vector<Matrix> heads;
    for (std::size_t h = 0; h < run.meta.n_heads; ++h) {
      heads.push_back(resemblance_view(id, sentence, combo->target_layer, h).matrix);
    }
    const std::size_t n = heads.front().rows();
    SaccadeMatrix counts(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double v = combo->intercept;
        for (std::size_t h = 0; h < heads.size(); ++h) v += combo->head_weights[h] * heads[h](i, j);
        v += combo->sigma * rng.normal();
        counts[i][j] = std::max<std::int64_t>(0, std::llround(combo->count_scale * v));
      }
    }
    bundle.sentences.emplace(id, std::move(counts));
  }
  return bundle;
}

}  // namespace gaze_attn
