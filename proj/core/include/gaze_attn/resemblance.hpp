#pragma once

// Human resemblance of model attention, the inter-subject ceiling, and
// reliance on trivial attention patterns.
//
// Every vector here is built the same way: per sentence, the lower triangle
// (diagonal included) of a word x word matrix, row by row, concatenated in
// ascending sentence id order.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/matrix.hpp"
#include "gaze_attn/regression.hpp"

namespace gaze_attn {

struct SubjectVector {
  std::string subject_id;
  Group group = Group::L1;
  std::vector<double> vector;
};

/// One column per head of one layer.
struct LayerDesign {
  std::string model;
  std::size_t layer = 0;
  DesignMatrix design;
};

struct ResemblanceScore {
  std::string model;
  Group group = Group::L1;
  std::vector<double> layer_mean_r2;           // per layer, mean over included subjects
  std::vector<std::vector<double>> subject_r2;  // [layer][subject], included subjects only
  std::vector<std::string> subject_ids;        // included subjects, ascending id
  std::size_t argmax_layer = 0;                // ties resolve to the smallest index
  double r2_model = 0.0;
  std::optional<double> r2_inter;
  std::optional<double> ratio_percent;  // 100 * r2_model / r2_inter
  std::vector<std::string> warnings;
};

struct TrivialPatterns {
  Matrix first_word;  // (i, 0) = 1
  Matrix prev_word;   // (i, i-1) = 1
  Matrix self;        // (i, i) = 1
};

/// Lengths of the corpus sentences in ascending id order.
std::vector<std::size_t> sentence_lengths(const Corpus& corpus);

SubjectVector build_subject_vector(const SaccadeBundle& bundle, const Corpus& corpus);

/// Per head: word_align -> drop_bos (no renormalization) -> flatten -> concat.
LayerDesign build_layer_design(const AttentionRun& run, std::size_t layer);

/// Heads-averaged, BOS-dropped, unnormalized attention of one layer as a
/// flattened vector (model-side target for trivial-pattern reliance).
std::vector<double> layer_attention_vector(const AttentionRun& run, std::size_t layer);

/// Mean R^2 over subjects from regressing each subject on the group mean.
/// Subjects with a zero-variance vector are excluded (with a warning appended
/// to `warnings` when given). Needs at least two usable subjects.
double intersubject_ceiling(const std::vector<SubjectVector>& subjects,
                            std::vector<std::string>* warnings = nullptr);

/// Fits every layer design against every subject of `group`; R^2_model is
/// the best layer's mean. The ceiling is computed from the same subjects
/// when at least two are usable.
ResemblanceScore model_resemblance(const AttentionRun& run, const std::vector<SubjectVector>& subjects,
                                   Group group, std::size_t jobs = 1);

TrivialPatterns build_trivial_patterns(std::size_t n_words);

/// Three-column design (first_word, prev_word, self) over the given sentence
/// lengths, in order.
DesignMatrix trivial_design(const std::vector<std::size_t>& lengths);

FitResult trivial_reliance(const std::vector<double>& target, const std::vector<std::size_t>& lengths);
FitResult trivial_reliance(const std::vector<double>& target, const Corpus& corpus);

/// One fit per layer on the heads-averaged attention vector.
std::vector<FitResult> model_trivial_reliance(const AttentionRun& run, std::size_t jobs = 1);

}  // namespace gaze_attn
