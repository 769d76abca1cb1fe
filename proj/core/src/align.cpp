#include "gaze_attn/align.hpp"

#include <algorithm>

#include "gaze_attn/error.hpp"

namespace gaze_attn {

TokenGrouping group_tokens(const TokenMap& map) {
  TokenGrouping grouping;
  const std::size_t bos_slots = map.has_bos() ? 1 : 0;
  const std::size_t prefix_words = map.prefix_words();
  grouping.first_sentence_group = bos_slots + prefix_words;
  grouping.n_groups = grouping.first_sentence_group + map.sentence_words();
  grouping.group_of_token.reserve(map.size());
  for (const Token& t : map.tokens) {
    switch (t.role) {
      case SpanRole::bos:
        grouping.group_of_token.push_back(0);
        break;
      case SpanRole::prefix:
        if (t.word_index < 0) throw DataError("negative prefix word index");
        grouping.group_of_token.push_back(bos_slots + static_cast<std::size_t>(t.word_index));
        break;
      case SpanRole::sentence:
        if (t.word_index < 0) throw DataError("negative sentence word index");
        grouping.group_of_token.push_back(grouping.first_sentence_group +
                                          static_cast<std::size_t>(t.word_index));
        break;
    }
  }
  return grouping;
}

Matrix head_matrix(const AttentionTensor& tensor, std::size_t layer, std::size_t head) {
  if (layer >= tensor.layers() || head >= tensor.heads()) throw UsageError("layer/head out of range");
  const std::size_t n = tensor.tokens();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = tensor.at(layer, head, i, j);
  }
  return m;
}

Matrix heads_average(const AttentionTensor& tensor, std::size_t layer) {
  if (layer >= tensor.layers()) throw UsageError("layer out of range");
  const std::size_t n = tensor.tokens();
  const std::size_t heads = tensor.heads();
  Matrix m(n, n);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) m(i, j) += tensor.at(layer, h, i, j);
    }
  }
  for (double& v : m.data()) v /= static_cast<double>(heads);
  return m;
}

Matrix sum_columns(const Matrix& m, const TokenGrouping& grouping) {
  if (m.cols() != grouping.group_of_token.size()) {
    throw DataError("token map length does not match attention matrix");
  }
  Matrix out(m.rows(), grouping.n_groups);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, grouping.group_of_token[j]) += m(i, j);
  }
  return out;
}

Matrix mean_rows(const Matrix& m, const TokenGrouping& grouping) {
  if (m.rows() != grouping.group_of_token.size()) {
    throw DataError("token map length does not match attention matrix");
  }
  Matrix out(grouping.n_groups, m.cols());
  std::vector<std::size_t> counts(grouping.n_groups, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::size_t g = grouping.group_of_token[i];
    ++counts[g];
    for (std::size_t j = 0; j < m.cols(); ++j) out(g, j) += m(i, j);
  }
  for (std::size_t g = 0; g < grouping.n_groups; ++g) {
    if (counts[g] == 0) throw DataError("word group " + std::to_string(g) + " has no tokens");
    for (double& v : out.row(g)) v /= static_cast<double>(counts[g]);
  }
  return out;
}

Matrix word_align(const Matrix& token_matrix, const TokenMap& map) {
  if (!token_matrix.square() || token_matrix.rows() != map.size()) {
    throw DataError("token map length does not match attention matrix");
  }
  const TokenGrouping grouping = group_tokens(map);
  return mean_rows(sum_columns(token_matrix, grouping), grouping);
}

RawWordAttention drop_bos(const Matrix& word_matrix) {
  if (!word_matrix.square() || word_matrix.rows() < 2) {
    throw DataError("drop_bos needs a square matrix of at least 2x2");
  }
  const std::size_t n = word_matrix.rows() - 1;
  RawWordAttention out;
  out.matrix = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.matrix(i, j) = word_matrix(i + 1, j + 1);
  }
  return out;
}

NormalizedWordAttention renormalize_rows(const Matrix& word_matrix) {
  if (!word_matrix.square() || word_matrix.empty()) throw DataError("renormalize_rows needs a square matrix");
  const std::size_t n = word_matrix.rows();
  NormalizedWordAttention out;
  out.matrix = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j <= i; ++j) mass += word_matrix(i, j);
    if (!(mass > 0.0)) throw DataError("degenerate row " + std::to_string(i) + " (no causal-support mass)");
    for (std::size_t j = 0; j <= i; ++j) out.matrix(i, j) = word_matrix(i, j) / mass;
  }
  return out;
}

NormalizedWordAttention renormalize_rows(const RawWordAttention& attention) {
  NormalizedWordAttention out = renormalize_rows(attention.matrix);
  out.sentence_id = attention.sentence_id;
  out.layer = attention.layer;
  out.head = attention.head;
  return out;
}

Matrix sentence_span_matrix(const Matrix& token_matrix, const TokenMap& map) {
  const TokenGrouping grouping = group_tokens(map);
  const std::size_t first = grouping.first_sentence_group;
  const std::size_t n = grouping.n_groups - first;
  if (n == 0) throw DataError("empty sentence span");
  const Matrix words = word_align(token_matrix, map);
  Matrix span(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) span(i, j) = words(first + i, first + j);
  }
  return span;
}

NormalizedWordAttention extract_sentence_span(const Matrix& token_matrix, const TokenMap& map) {
  return renormalize_rows(sentence_span_matrix(token_matrix, map));
}

NormalizedWordAttention divergence_view(const SentenceId& id, const SentenceAttention& sentence,
                                        std::size_t layer) {
  NormalizedWordAttention out = extract_sentence_span(heads_average(sentence.tensor, layer), sentence.token_map);
  out.sentence_id = id;
  out.layer = layer;
  return out;
}

RawWordAttention resemblance_view(const SentenceId& id, const SentenceAttention& sentence,
                                  std::size_t layer, std::optional<std::size_t> head) {
  if (sentence.token_map.prefix_words() > 0) {
    throw UsageError("resemblance view of " + id.str() + " requires a run without prefix tokens");
  }
  const Matrix tokens = head ? head_matrix(sentence.tensor, layer, *head) : heads_average(sentence.tensor, layer);
  RawWordAttention out = drop_bos(word_align(tokens, sentence.token_map));
  out.sentence_id = id;
  out.layer = layer;
  out.head = head;
  return out;
}

}  // namespace gaze_attn
