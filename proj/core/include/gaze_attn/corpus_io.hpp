#pragma once

// Interchange formats for attention runs, saccade bundles, sentence corpora
// and the per-model metrics sidecar.
//
// Attention run (a directory):
//   manifest.json        model metadata, condition, sentence list, token maps
//   <sentence_id>.attn   "ATTN" | u32 version=1 | u32 layers | u32 heads |
//                        u32 n_tok | u32 n_tok | f32 payload
// All integers and floats are little-endian; the payload is row-major in
// [layer][head][from][to] order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaze_attn/sentence_id.hpp"

namespace gaze_attn {

inline constexpr std::string_view kTranslatePrefix = "Please translate this sentence into German:";
inline constexpr std::string_view kParaphrasePrefix = "Please paraphrase this sentence:";
inline constexpr std::string_view kNoisePrefix = "Cigarette first steel convenience champion.";

/// Tolerance on causal-support row sums of stored attention (f32 softmax noise).
inline constexpr double kRowSumTolerance = 1e-4;

struct ModelMeta {
  std::string name;
  std::uint64_t param_count = 0;
  std::uint32_t n_layers = 0;
  std::uint32_t n_heads = 0;
  std::optional<double> ntp_loss;  // nats per token

  bool operator==(const ModelMeta&) const = default;
};

enum class ConditionKind { plain, instruction_prefixed, noise_prefixed };

struct Condition {
  ConditionKind kind = ConditionKind::plain;
  std::string prefix_text;  // empty for plain

  bool prefixed() const noexcept { return kind != ConditionKind::plain; }
  bool operator==(const Condition&) const = default;
};

std::string_view to_string(ConditionKind kind);
ConditionKind parse_condition_kind(std::string_view text);

enum class SpanRole { bos, prefix, sentence };

std::string_view to_string(SpanRole role);
SpanRole parse_span_role(std::string_view text);

struct Token {
  int word_index = 0;  // -1 for BOS; prefix tokens index prefix words
  SpanRole role = SpanRole::sentence;

  bool operator==(const Token&) const = default;
};

struct TokenMap {
  std::vector<Token> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool has_bos() const noexcept;
  /// 1 + largest sentence word index (0 when there are no sentence tokens).
  std::size_t sentence_words() const noexcept;
  std::size_t prefix_words() const noexcept;

  /// One BOS token followed by one token per word.
  static TokenMap one_token_per_word(std::size_t n_words);

  bool operator==(const TokenMap&) const = default;
};

/// Attention tensor [layer][head][from][to] holding the raw f32 payload.
class AttentionTensor {
 public:
  AttentionTensor() = default;
  AttentionTensor(std::uint32_t layers, std::uint32_t heads, std::uint32_t n_tok);
  AttentionTensor(std::uint32_t layers, std::uint32_t heads, std::uint32_t n_tok,
                  std::vector<float> payload);

  std::uint32_t layers() const noexcept { return layers_; }
  std::uint32_t heads() const noexcept { return heads_; }
  std::uint32_t tokens() const noexcept { return n_tok_; }

  float& at(std::size_t layer, std::size_t head, std::size_t from, std::size_t to) noexcept {
    return payload_[offset(layer, head, from, to)];
  }
  float at(std::size_t layer, std::size_t head, std::size_t from, std::size_t to) const noexcept {
    return payload_[offset(layer, head, from, to)];
  }

  std::span<const float> payload() const noexcept { return payload_; }
  std::span<float> payload() noexcept { return payload_; }

  bool operator==(const AttentionTensor& other) const;  // bitwise on payload

 private:
  std::size_t offset(std::size_t l, std::size_t h, std::size_t i, std::size_t j) const noexcept {
    return ((l * heads_ + h) * n_tok_ + i) * n_tok_ + j;
  }

  std::uint32_t layers_ = 0;
  std::uint32_t heads_ = 0;
  std::uint32_t n_tok_ = 0;
  std::vector<float> payload_;
};

struct SentenceAttention {
  TokenMap token_map;
  AttentionTensor tensor;

  bool operator==(const SentenceAttention&) const = default;
};

struct AttentionRun {
  ModelMeta meta;
  Condition condition;
  std::map<SentenceId, SentenceAttention> sentences;

  bool operator==(const AttentionRun&) const = default;
};

struct SentenceRecord {
  SentenceId id;
  std::vector<std::string> words;

  std::size_t n_words() const noexcept { return words.size(); }
  bool operator==(const SentenceRecord&) const = default;
};

/// Sentences in ascending SentenceId order.
using Corpus = std::vector<SentenceRecord>;

enum class Group { L1, L2 };

std::string_view to_string(Group group);
Group parse_group(std::string_view text);

using SaccadeMatrix = std::vector<std::vector<std::int64_t>>;

struct SaccadeBundle {
  std::string subject_id;
  Group group = Group::L1;
  std::map<SentenceId, SaccadeMatrix> sentences;

  bool operator==(const SaccadeBundle&) const = default;
};

enum class Severity { error, warning };

struct Finding {
  Severity severity = Severity::error;
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  void error(std::string location, std::string message);
  void warning(std::string location, std::string message);
  std::size_t error_count() const noexcept;
  std::size_t warning_count() const noexcept;
  bool has_errors() const noexcept { return error_count() > 0; }
  bool empty() const noexcept { return findings.empty(); }
};

/// Scalar per-model metrics (NTP loss, size, published resemblance scores).
struct ModelMetrics {
  std::optional<double> ntp_loss;
  std::optional<double> param_count;
  std::optional<double> resemblance_l1;
  std::optional<double> resemblance_l2;
  std::map<std::string, double> extra;

  bool operator==(const ModelMetrics&) const = default;
};

using MetricsSidecar = std::map<std::string, ModelMetrics>;

// Attention runs.
AttentionRun load_attention(const std::filesystem::path& dir);
void write_attention(const AttentionRun& run, const std::filesystem::path& dir);
AttentionTensor read_tensor_file(const std::filesystem::path& file);
void write_tensor_file(const AttentionTensor& tensor, const std::filesystem::path& file);
std::string tensor_file_name(const SentenceId& id);

/// Checks every AttentionRun invariant plus consistency with the corpus.
/// Findings are returned, never thrown.
ValidationReport validate_run(const AttentionRun& run, const Corpus& corpus);

// Saccade bundles.
SaccadeBundle load_saccade(const std::filesystem::path& file);
/// Also rejects sentence ids absent from the corpus and word-count mismatches.
SaccadeBundle load_saccade(const std::filesystem::path& file, const Corpus& corpus);
void write_saccade(const SaccadeBundle& bundle, const std::filesystem::path& file);

// Corpus.
Corpus load_corpus(const std::filesystem::path& file);
void write_corpus(const Corpus& corpus, const std::filesystem::path& file);
const SentenceRecord* find_sentence(const Corpus& corpus, const SentenceId& id);

// Metrics sidecar.
MetricsSidecar load_metrics(const std::filesystem::path& file);
void write_metrics(const MetricsSidecar& metrics, const std::filesystem::path& file);

}  // namespace gaze_attn
