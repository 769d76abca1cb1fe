#pragma once

// Token-level attention -> word-level attention.
//
// Columns of a split word are summed ("to" side) and rows are averaged
// ("from" side). Divergence works on heads-averaged, BOS-dropped,
// row-renormalized matrices; resemblance works on per-head, BOS-dropped,
// unnormalized matrices. The two policies are distinct types.

#include <cstddef>
#include <optional>
#include <vector>

#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/matrix.hpp"
#include "gaze_attn/sentence_id.hpp"

namespace gaze_attn {

enum class Normalization { raw_after_bos_drop, row_renormalized };

template <Normalization N>
struct WordAttention {
  static constexpr Normalization normalization = N;

  SentenceId sentence_id;
  std::size_t layer = 0;
  std::optional<std::size_t> head;  // empty = heads-averaged
  Matrix matrix;
};

/// BOS removed, rows keep their mass relative to the dropped BOS column.
using RawWordAttention = WordAttention<Normalization::raw_after_bos_drop>;
/// Every row sums to one over its causal support.
using NormalizedWordAttention = WordAttention<Normalization::row_renormalized>;

/// Word-group index of every token: BOS -> 0 (when present), then prefix
/// words, then sentence words.
struct TokenGrouping {
  std::vector<std::size_t> group_of_token;
  std::size_t n_groups = 0;
  std::size_t first_sentence_group = 0;
};

TokenGrouping group_tokens(const TokenMap& map);

Matrix head_matrix(const AttentionTensor& tensor, std::size_t layer, std::size_t head);
/// Arithmetic mean over heads of one layer.
Matrix heads_average(const AttentionTensor& tensor, std::size_t layer);

/// Sums the columns belonging to each group (n_rows x n_groups).
Matrix sum_columns(const Matrix& m, const TokenGrouping& grouping);
/// Averages the rows belonging to each group (n_groups x n_cols).
Matrix mean_rows(const Matrix& m, const TokenGrouping& grouping);

/// Sum over "to" tokens then mean over "from" tokens. Output index 0 is the
/// BOS slot when the map has a BOS token.
Matrix word_align(const Matrix& token_matrix, const TokenMap& map);

/// Removes row 0 and column 0; values are left untouched.
RawWordAttention drop_bos(const Matrix& word_matrix);

/// Divides every row by its causal-support sum (j <= i); entries above the
/// diagonal are zero in the result. Throws DataError("degenerate row") when a
/// row has no support mass.
NormalizedWordAttention renormalize_rows(const Matrix& word_matrix);
NormalizedWordAttention renormalize_rows(const RawWordAttention& attention);

/// Word-aligns a token matrix and keeps the sentence-role block (rows and
/// columns). For a plain map this equals drop_bos(word_align(...)).
Matrix sentence_span_matrix(const Matrix& token_matrix, const TokenMap& map);

/// Word-aligns a (possibly prefixed) token matrix, keeps only sentence-role
/// words, and row-renormalizes. BOS and prefix mass are discarded.
NormalizedWordAttention extract_sentence_span(const Matrix& token_matrix, const TokenMap& map);

/// Divergence view of one layer: heads_average -> word_align -> drop_bos ->
/// renormalize_rows, or extract_sentence_span for prefixed token maps.
NormalizedWordAttention divergence_view(const SentenceId& id, const SentenceAttention& sentence,
                                        std::size_t layer);

/// Unnormalized word-level view of one layer: per head, or heads-averaged
/// when `head` is empty. word_align -> drop_bos.
RawWordAttention resemblance_view(const SentenceId& id, const SentenceAttention& sentence,
                                  std::size_t layer, std::optional<std::size_t> head);

}  // namespace gaze_attn
