#pragma once

// Seeded synthetic attention runs and saccade bundles with planted structure.
// Sentence k of a corpus draws from its own stream seeded with seed ^ k, so
// output does not depend on generation order or worker count.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/resemblance.hpp"

namespace gaze_attn {

struct CorpusShape {
  std::uint64_t seed = 1;
  std::size_t n_sentences = 8;
  std::size_t min_words = 4;
  std::size_t max_words = 10;
  std::string article = "synth";
};

/// Weights over (first_word, prev_word, self) plus Gaussian noise.
struct PatternMixture {
  std::array<double, 3> weights{0.0, 0.0, 0.0};
  double sigma = 0.0;
};

/// Target = heads of `target_layer` combined with `head_weights`, plus an
/// intercept and Gaussian noise. `count_scale` converts the real-valued
/// target into saccade counts when a bundle is generated from it.
struct LinearCombo {
  std::size_t target_layer = 0;
  std::vector<double> head_weights;
  double intercept = 0.0;
  double sigma = 0.0;
  double count_scale = 20.0;
};

struct IndependentRandom {};

using PlantedStructure = std::variant<IndependentRandom, PatternMixture, LinearCombo>;

struct SynthSpec {
  std::uint64_t seed = 0;
  CorpusShape corpus;
  std::string model_name = "synth";
  std::uint64_t param_count = 1'000'000;
  std::uint32_t n_layers = 4;
  std::uint32_t n_heads = 4;
  double split_probability = 0.3;  // chance that a word spans 2-3 tokens
  std::string subject_id = "subject";
  Group group = Group::L1;
  PlantedStructure structure;
};

struct SynthRun {
  AttentionRun run;
  Corpus corpus;
  std::optional<SubjectVector> planted_subject;  // set for LinearCombo
};

Corpus gen_corpus(const CorpusShape& shape);

/// Causal row-stochastic attention for every sentence of the corpus.
SynthRun gen_attention_run(const SynthSpec& spec);
SynthRun gen_attention_run(const SynthSpec& spec, const Corpus& corpus);

/// PatternMixture or IndependentRandom saccade counts over the corpus.
SaccadeBundle gen_saccade(const SynthSpec& spec);
SaccadeBundle gen_saccade(const SynthSpec& spec, const Corpus& corpus);

/// Prefixed variant of a plain run. Prefix tokens are inserted after BOS and
/// the BOS mass of every sentence row is shared with them; all sentence-token
/// values are copied unchanged, so the sentence span is identical to the
/// plain run. Layers from `perturb_from_layer` on are redrawn at random.
struct PrefixVariant {
  ConditionKind kind = ConditionKind::instruction_prefixed;
  std::string prefix_text;
  std::size_t n_prefix_words = 1;
  std::optional<std::size_t> perturb_from_layer;
  std::uint64_t seed = 0;
};

AttentionRun gen_prefixed_run(const AttentionRun& plain, const PrefixVariant& variant);

/// LinearCombo saccade counts: round(count_scale * (combination + noise)),
/// clamped at zero, on the lower triangle of every sentence.
SaccadeBundle gen_saccade_from_run(const SynthSpec& spec, const AttentionRun& run);

}  // namespace gaze_attn
