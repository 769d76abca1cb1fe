#include "gaze_attn/corpus_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include <json.hpp>

#include "gaze_attn/error.hpp"
#include "gaze_attn/file_util.hpp"

namespace gaze_attn {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<char, 4> kMagic{'A', 'T', 'T', 'N'};
constexpr std::uint32_t kTensorVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 5 * 4;
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kManifestFormat = "gaze-attn-run";

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + k])) << (8 * k);
  }
  return v;
}

json parse_json_file(const fs::path& file, const char* what) {
  const std::string text = read_file(file);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt ") + what + " " + file.string() + ": " + e.what());
  }
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(where + ": field '" + key + "' has the wrong type");
  }
}

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace

std::string_view to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::plain: return "plain";
    case ConditionKind::instruction_prefixed: return "instruction_prefixed";
    case ConditionKind::noise_prefixed: return "noise_prefixed";
  }
  return "plain";
}

ConditionKind parse_condition_kind(std::string_view text) {
  if (text == "plain") return ConditionKind::plain;
  if (text == "instruction_prefixed") return ConditionKind::instruction_prefixed;
  if (text == "noise_prefixed") return ConditionKind::noise_prefixed;
  throw DataError("unknown condition kind '" + std::string(text) + "'");
}

std::string_view to_string(SpanRole role) {
  switch (role) {
    case SpanRole::bos: return "bos";
    case SpanRole::prefix: return "prefix";
    case SpanRole::sentence: return "sentence";
  }
  return "sentence";
}

SpanRole parse_span_role(std::string_view text) {
  if (text == "bos") return SpanRole::bos;
  if (text == "prefix") return SpanRole::prefix;
  if (text == "sentence") return SpanRole::sentence;
  throw DataError("unknown span role '" + std::string(text) + "'");
}

std::string_view to_string(Group group) { return group == Group::L1 ? "L1" : "L2"; }

Group parse_group(std::string_view text) {
  if (text == "L1") return Group::L1;
  if (text == "L2") return Group::L2;
  throw DataError("unknown subject group '" + std::string(text) + "'");
}

bool TokenMap::has_bos() const noexcept {
  return std::any_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return t.role == SpanRole::bos; });
}

std::size_t TokenMap::sentence_words() const noexcept {
  int last = -1;
  for (const auto& t : tokens) {
    if (t.role == SpanRole::sentence) last = std::max(last, t.word_index);
  }
  return static_cast<std::size_t>(last + 1);
}

std::size_t TokenMap::prefix_words() const noexcept {
  int last = -1;
  for (const auto& t : tokens) {
    if (t.role == SpanRole::prefix) last = std::max(last, t.word_index);
  }
  return static_cast<std::size_t>(last + 1);
}

TokenMap TokenMap::one_token_per_word(std::size_t n_words) {
  TokenMap map;
  map.tokens.push_back({-1, SpanRole::bos});
  for (std::size_t w = 0; w < n_words; ++w) {
    map.tokens.push_back({static_cast<int>(w), SpanRole::sentence});
  }
  return map;
}

AttentionTensor::AttentionTensor(std::uint32_t layers, std::uint32_t heads, std::uint32_t n_tok)
    : layers_(layers),
      heads_(heads),
      n_tok_(n_tok),
      payload_(static_cast<std::size_t>(layers) * heads * n_tok * n_tok, 0.0f) {}

AttentionTensor::AttentionTensor(std::uint32_t layers, std::uint32_t heads, std::uint32_t n_tok,
                                 std::vector<float> payload)
    : layers_(layers), heads_(heads), n_tok_(n_tok), payload_(std::move(payload)) {
  if (payload_.size() != static_cast<std::size_t>(layers) * heads * n_tok * n_tok) {
    throw DataError("dimension mismatch: payload size does not match tensor dims");
  }
}

bool AttentionTensor::operator==(const AttentionTensor& other) const {
  return layers_ == other.layers_ && heads_ == other.heads_ && n_tok_ == other.n_tok_ &&
         payload_.size() == other.payload_.size() &&
         std::memcmp(payload_.data(), other.payload_.data(), payload_.size() * sizeof(float)) == 0;
}

void ValidationReport::error(std::string location, std::string message) {
  findings.push_back({Severity::error, std::move(location), std::move(message)});
}

void ValidationReport::warning(std::string location, std::string message) {
  findings.push_back({Severity::warning, std::move(location), std::move(message)});
}

std::size_t ValidationReport::error_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
    return f.severity == Severity::error;
  }));
}

std::size_t ValidationReport::warning_count() const noexcept {
  return findings.size() - error_count();
}

// ---------------------------------------------------------------------------
// Tensor files

std::string tensor_file_name(const SentenceId& id) { return id.str() + ".attn"; }

void write_tensor_file(const AttentionTensor& tensor, const fs::path& file) {
  if (!all_finite(tensor.payload())) throw DataError("non-finite value in tensor for " + file.string());
  std::string bytes;
  bytes.reserve(kHeaderBytes + tensor.payload().size() * 4);
  bytes.append(kMagic.data(), kMagic.size());
  put_u32(bytes, kTensorVersion);
  put_u32(bytes, tensor.layers());
  put_u32(bytes, tensor.heads());
  put_u32(bytes, tensor.tokens());
  put_u32(bytes, tensor.tokens());
  for (float v : tensor.payload()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  write_file_atomic(file, bytes);
}

AttentionTensor read_tensor_file(const fs::path& file) {
  const std::string bytes = read_file(file);
  const std::string where = file.string();
  if (bytes.size() < kHeaderBytes) throw DataError(where + ": truncated header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw DataError(where + ": magic-number mismatch");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kTensorVersion) {
    throw DataError(where + ": unsupported format version " + std::to_string(version));
  }
  const std::uint32_t layers = get_u32(bytes, 8);
  const std::uint32_t heads = get_u32(bytes, 12);
  const std::uint32_t rows = get_u32(bytes, 16);
  const std::uint32_t cols = get_u32(bytes, 20);
  if (rows != cols) throw DataError(where + ": dimension mismatch (non-square attention)");
  const std::size_t count = static_cast<std::size_t>(layers) * heads * rows * cols;
  if (bytes.size() != kHeaderBytes + count * 4) {
    throw DataError(where + ": dimension mismatch (payload has " +
                    std::to_string((bytes.size() - kHeaderBytes) / 4) + " values, header implies " +
                    std::to_string(count) + ")");
  }
  std::vector<float> payload(count);
  for (std::size_t k = 0; k < count; ++k) {
    payload[k] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * k));
  }
  if (!all_finite(payload)) throw DataError(where + ": non-finite value");
  return AttentionTensor(layers, heads, rows, std::move(payload));
}

// ---------------------------------------------------------------------------
// Attention runs

void write_attention(const AttentionRun& run, const fs::path& dir) {
  for (const auto& [id, sentence] : run.sentences) {
    if (!all_finite(sentence.tensor.payload())) {
      throw DataError("non-finite value in sentence " + id.str());
    }
  }

  ordered_json meta;
  meta["name"] = run.meta.name;
  meta["param_count"] = run.meta.param_count;
  meta["n_layers"] = run.meta.n_layers;
  meta["n_heads"] = run.meta.n_heads;
  if (run.meta.ntp_loss) meta["ntp_loss"] = *run.meta.ntp_loss;

  ordered_json sentences = ordered_json::array();
  for (const auto& [id, sentence] : run.sentences) {
    ordered_json entry;
    entry["sentence_id"] = id.str();
    entry["tensor"] = tensor_file_name(id);
    ordered_json words = ordered_json::array();
    ordered_json roles = ordered_json::array();
    for (const auto& t : sentence.token_map.tokens) {
      words.push_back(t.word_index);
      roles.push_back(to_string(t.role));
    }
    entry["word_index"] = std::move(words);
    entry["role"] = std::move(roles);
    sentences.push_back(std::move(entry));
    write_tensor_file(sentence.tensor, dir / tensor_file_name(id));
  }

  ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = 1;
  manifest["meta"] = std::move(meta);
  manifest["condition"] = {{"kind", to_string(run.condition.kind)},
                           {"prefix", run.condition.prefix_text}};
  manifest["sentences"] = std::move(sentences);
  write_file_atomic(dir / kManifestName, manifest.dump(2) + "\n");
}

AttentionRun load_attention(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw DataError("missing manifest: " + manifest_path.string());
  const json manifest = parse_json_file(manifest_path, "manifest");
  const std::string where = manifest_path.string();
  if (!manifest.is_object()) throw DataError("corrupt manifest " + where + ": not an object");
  if (manifest.value("format", std::string()) != kManifestFormat) {
    throw DataError("corrupt manifest " + where + ": unexpected format tag");
  }

  AttentionRun run;
  const json meta = required<json>(manifest, "meta", where);
  run.meta.name = required<std::string>(meta, "name", where + " meta");
  run.meta.param_count = required<std::uint64_t>(meta, "param_count", where + " meta");
  run.meta.n_layers = required<std::uint32_t>(meta, "n_layers", where + " meta");
  run.meta.n_heads = required<std::uint32_t>(meta, "n_heads", where + " meta");
  if (meta.contains("ntp_loss") && !meta.at("ntp_loss").is_null()) {
    run.meta.ntp_loss = required<double>(meta, "ntp_loss", where + " meta");
  }

  const json condition = required<json>(manifest, "condition", where);
  run.condition.kind = parse_condition_kind(required<std::string>(condition, "kind", where));
  run.condition.prefix_text = condition.value("prefix", std::string());

  for (const json& entry : required<json>(manifest, "sentences", where)) {
    const auto id = SentenceId::parse(required<std::string>(entry, "sentence_id", where));
    const std::string loc = where + " sentence " + id.str();
    const auto words = required<std::vector<int>>(entry, "word_index", loc);
    const auto roles = required<std::vector<std::string>>(entry, "role", loc);
    if (words.size() != roles.size()) throw DataError(loc + ": word_index/role length mismatch");

    SentenceAttention sentence;
    for (std::size_t k = 0; k < words.size(); ++k) {
      sentence.token_map.tokens.push_back({words[k], parse_span_role(roles[k])});
    }
    sentence.tensor = read_tensor_file(dir / required<std::string>(entry, "tensor", loc));
    if (sentence.tensor.layers() != run.meta.n_layers || sentence.tensor.heads() != run.meta.n_heads) {
      throw DataError(loc + ": dimension mismatch (manifest " + std::to_string(run.meta.n_layers) + "x" +
                      std::to_string(run.meta.n_heads) + ", tensor " +
                      std::to_string(sentence.tensor.layers()) + "x" +
                      std::to_string(sentence.tensor.heads()) + ")");
    }
    if (sentence.tensor.tokens() != sentence.token_map.size()) {
      throw DataError(loc + ": dimension mismatch (token map has " +
                      std::to_string(sentence.token_map.size()) + " tokens, tensor " +
                      std::to_string(sentence.tensor.tokens()) + ")");
    }
    if (!run.sentences.emplace(id, std::move(sentence)).second) {
      throw DataError(loc + ": duplicate sentence_id");
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void validate_token_map(const TokenMap& map, const Condition& condition, const std::string& loc,
                        ValidationReport& report) {
  const auto& tokens = map.tokens;
  const auto bos_count = std::count_if(tokens.begin(), tokens.end(),
                                       [](const Token& t) { return t.role == SpanRole::bos; });
  if (bos_count != 1 || tokens.empty() || tokens.front().role != SpanRole::bos) {
    report.error(loc, "token map must contain exactly one bos token, at position 0");
  } else if (tokens.front().word_index != -1) {
    report.error(loc, "bos token must have word_index -1");
  }

  bool seen_sentence = false;
  int last_prefix = -1;
  int last_sentence = -1;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const Token& t = tokens[k];
    if (t.role == SpanRole::bos) continue;
    if (t.word_index < 0) {
      report.error(loc, "negative word_index on non-bos token " + std::to_string(k));
      return;
    }
    if (t.role == SpanRole::prefix) {
      if (!condition.prefixed()) {
        report.error(loc, "prefix token in a plain-condition run");
        return;
      }
      if (seen_sentence) {
        report.error(loc, "prefix tokens must precede the sentence span");
        return;
      }
      if (t.word_index < last_prefix || t.word_index > last_prefix + 1) {
        report.error(loc, "prefix word indices not contiguous");
        return;
      }
      last_prefix = t.word_index;
    } else {
      seen_sentence = true;
      if (t.word_index < last_sentence) {
        report.error(loc, "word indices not non-decreasing");
        return;
      }
      if (t.word_index > last_sentence + 1) {
        report.error(loc, "word indices not contiguous");
        return;
      }
      last_sentence = t.word_index;
    }
  }
  if (!seen_sentence) report.error(loc, "token map has no sentence tokens");
}

void validate_tensor(const AttentionTensor& tensor, const std::string& loc, ValidationReport& report) {
  std::size_t negative = 0;
  std::size_t non_finite = 0;
  std::size_t above_diagonal = 0;
  std::size_t bad_rows = 0;
  std::string first_bad_row;
  const std::size_t n = tensor.tokens();
  for (std::size_t l = 0; l < tensor.layers(); ++l) {
    for (std::size_t h = 0; h < tensor.heads(); ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const float v = tensor.at(l, h, i, j);
          if (!std::isfinite(v)) {
            ++non_finite;
            continue;
          }
          if (v < 0.0f) ++negative;
          if (j <= i) {
            sum += v;
          } else if (v != 0.0f) {
            ++above_diagonal;
          }
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
          if (bad_rows++ == 0) {
            first_bad_row = "layer " + std::to_string(l) + " head " + std::to_string(h) + " row " +
                            std::to_string(i) + " sums to " + format_double(sum);
          }
        }
      }
    }
  }
  if (non_finite > 0) report.error(loc, std::to_string(non_finite) + " non-finite value(s)");
  if (negative > 0) report.error(loc, std::to_string(negative) + " negative attention value(s)");
  if (above_diagonal > 0) {
    report.warning(loc, std::to_string(above_diagonal) + " nonzero value(s) above the causal diagonal");
  }
  if (bad_rows > 0) {
    report.warning(loc, "row-sum tolerance exceeded in " + std::to_string(bad_rows) +
                            " row(s); first: " + first_bad_row);
  }
}

}  // namespace

ValidationReport validate_run(const AttentionRun& run, const Corpus& corpus) {
  ValidationReport report;
  const std::string model = run.meta.name.empty() ? std::string("<unnamed>") : run.meta.name;
  if (run.meta.name.empty()) report.error(model, "model name is empty");
  if (run.meta.n_layers < 1) report.error(model, "n_layers must be >= 1");
  if (run.meta.n_heads < 1) report.error(model, "n_heads must be >= 1");
  if (run.meta.param_count == 0) report.error(model, "param_count must be > 0");
  if (run.meta.ntp_loss && !(std::isfinite(*run.meta.ntp_loss) && *run.meta.ntp_loss >= 0.0)) {
    report.error(model, "ntp_loss must be finite and non-negative");
  }
  if (run.condition.prefixed() && run.condition.prefix_text.empty()) {
    report.warning(model, "prefixed condition without prefix text");
  }

  for (const auto& [id, sentence] : run.sentences) {
    const std::string loc = id.str();
    const auto& tensor = sentence.tensor;
    if (tensor.layers() != run.meta.n_layers || tensor.heads() != run.meta.n_heads) {
      report.error(loc, "dimension mismatch between tensor and model metadata");
    }
    if (tensor.tokens() != sentence.token_map.size()) {
      report.error(loc, "dimension mismatch between tensor and token map");
    }
    validate_token_map(sentence.token_map, run.condition, loc, report);
    if (run.condition.prefixed() && sentence.token_map.prefix_words() == 0) {
      report.warning(loc, "prefixed run has an empty prefix span");
    }
    validate_tensor(tensor, loc, report);

    const SentenceRecord* record = find_sentence(corpus, id);
    if (record == nullptr) {
      report.warning(loc, "sentence not in corpus");
    } else if (record->n_words() != sentence.token_map.sentence_words()) {
      report.error(loc, "word count mismatch: corpus has " + std::to_string(record->n_words()) +
                            " words, token map covers " +
                            std::to_string(sentence.token_map.sentence_words()));
    }
  }
  for (const auto& record : corpus) {
    if (!run.sentences.contains(record.id)) report.error(record.id.str(), "missing sentence " + record.id.str());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Saccade bundles

namespace {

SaccadeBundle parse_saccade(const json& doc, const std::string& where, const Corpus* corpus) {
  SaccadeBundle bundle;
  bundle.subject_id = required<std::string>(doc, "subject_id", where);
  bundle.group = parse_group(required<std::string>(doc, "group", where));
  for (const json& entry : required<json>(doc, "sentences", where)) {
    const auto id = SentenceId::parse(required<std::string>(entry, "sentence_id", where));
    const std::string loc = where + " sentence " + id.str();
    const json& rows = entry.contains("matrix") ? entry.at("matrix") : json();
    if (!rows.is_array()) throw DataError(loc + ": missing matrix");

    SaccadeMatrix matrix;
    for (const json& row : rows) {
      if (!row.is_array()) throw DataError(loc + ": matrix rows must be arrays");
      auto& out = matrix.emplace_back();
      for (const json& v : row) {
        if (!v.is_number_integer()) throw DataError(loc + ": saccade counts must be integers");
        const auto count = v.get<std::int64_t>();
        if (count < 0) throw DataError(loc + ": negative saccade count");
        out.push_back(count);
      }
    }
    for (const auto& row : matrix) {
      if (row.size() != matrix.size()) throw DataError(loc + ": matrix not square");
    }
    if (matrix.empty()) throw DataError(loc + ": empty matrix");
    if (entry.contains("n_words") && entry.at("n_words").get<std::size_t>() != matrix.size()) {
      throw DataError(loc + ": n_words does not match matrix size");
    }
    if (corpus != nullptr) {
      const SentenceRecord* record = find_sentence(*corpus, id);
      if (record == nullptr) throw DataError(loc + ": unknown sentence_id");
      if (record->n_words() != matrix.size()) {
        throw DataError(loc + ": word count mismatch with corpus");
      }
    }
    if (!bundle.sentences.emplace(id, std::move(matrix)).second) {
      throw DataError(loc + ": duplicate sentence_id");
    }
  }
  return bundle;
}

}  // namespace

SaccadeBundle load_saccade(const fs::path& file) {
  return parse_saccade(parse_json_file(file, "saccade bundle"), file.string(), nullptr);
}

SaccadeBundle load_saccade(const fs::path& file, const Corpus& corpus) {
  return parse_saccade(parse_json_file(file, "saccade bundle"), file.string(), &corpus);
}

void write_saccade(const SaccadeBundle& bundle, const fs::path& file) {
  ordered_json doc;
  doc["subject_id"] = bundle.subject_id;
  doc["group"] = to_string(bundle.group);
  ordered_json sentences = ordered_json::array();
  for (const auto& [id, matrix] : bundle.sentences) {
    for (const auto& row : matrix) {
      if (row.size() != matrix.size()) throw DataError(id.str() + ": matrix not square");
      for (auto v : row) {
        if (v < 0) throw DataError(id.str() + ": negative saccade count");
      }
    }
    ordered_json entry;
    entry["sentence_id"] = id.str();
    entry["n_words"] = matrix.size();
    entry["matrix"] = matrix;
    sentences.push_back(std::move(entry));
  }
  doc["sentences"] = std::move(sentences);
  write_file_atomic(file, doc.dump() + "\n");
}

// ---------------------------------------------------------------------------
// Corpus

Corpus load_corpus(const fs::path& file) {
  const json doc = parse_json_file(file, "corpus");
  const std::string where = file.string();
  if (!doc.is_array()) throw DataError(where + ": corpus must be a JSON array");
  Corpus corpus;
  for (const json& entry : doc) {
    SentenceRecord record;
    record.id = SentenceId::parse(required<std::string>(entry, "sentence_id", where));
    record.words = required<std::vector<std::string>>(entry, "words", where + " " + record.id.str());
    if (record.words.empty()) throw DataError(where + " " + record.id.str() + ": sentence has no words");
    if (entry.contains("n_words") && entry.at("n_words").get<std::size_t>() != record.words.size()) {
      throw DataError(where + " " + record.id.str() + ": n_words does not match words");
    }
    corpus.push_back(std::move(record));
  }
  std::sort(corpus.begin(), corpus.end(),
            [](const SentenceRecord& a, const SentenceRecord& b) { return a.id < b.id; });
  for (std::size_t k = 1; k < corpus.size(); ++k) {
    if (corpus[k].id == corpus[k - 1].id) {
      throw DataError(where + ": duplicate sentence_id " + corpus[k].id.str());
    }
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const fs::path& file) {
  ordered_json doc = ordered_json::array();
  for (const auto& record : corpus) {
    ordered_json entry;
    entry["sentence_id"] = record.id.str();
    entry["words"] = record.words;
    entry["n_words"] = record.n_words();
    doc.push_back(std::move(entry));
  }
  write_file_atomic(file, doc.dump(2) + "\n");
}

const SentenceRecord* find_sentence(const Corpus& corpus, const SentenceId& id) {
  auto it = std::lower_bound(corpus.begin(), corpus.end(), id,
                             [](const SentenceRecord& r, const SentenceId& key) { return r.id < key; });
  if (it != corpus.end() && it->id == id) return &*it;
  // Tolerate unsorted, hand-built corpora.
  auto linear = std::find_if(corpus.begin(), corpus.end(), [&](const SentenceRecord& r) { return r.id == id; });
  return linear == corpus.end() ? nullptr : &*linear;
}

// ---------------------------------------------------------------------------
// Metrics sidecar

MetricsSidecar load_metrics(const fs::path& file) {
  const json doc = parse_json_file(file, "metrics sidecar");
  const std::string where = file.string();
  if (!doc.is_object()) throw DataError(where + ": metrics sidecar must be a JSON object");
  MetricsSidecar metrics;
  for (const auto& [model, fields] : doc.items()) {
    if (!fields.is_object()) throw DataError(where + ": entry for " + model + " must be an object");
    ModelMetrics m;
    for (const auto& [key, value] : fields.items()) {
      if (value.is_null()) continue;
      if (!value.is_number()) throw DataError(where + ": " + model + "." + key + " must be numeric");
      const double v = value.get<double>();
      if (key == "ntp_loss") m.ntp_loss = v;
      else if (key == "param_count") m.param_count = v;
      else if (key == "resemblance_l1") m.resemblance_l1 = v;
      else if (key == "resemblance_l2") m.resemblance_l2 = v;
      else m.extra.emplace(key, v);
    }
    metrics.emplace(model, std::move(m));
  }
  return metrics;
}

void write_metrics(const MetricsSidecar& metrics, const fs::path& file) {
  ordered_json doc = ordered_json::object();
  for (const auto& [model, m] : metrics) {
    ordered_json entry = ordered_json::object();
    if (m.ntp_loss) entry["ntp_loss"] = *m.ntp_loss;
    if (m.param_count) entry["param_count"] = *m.param_count;
    if (m.resemblance_l1) entry["resemblance_l1"] = *m.resemblance_l1;
    if (m.resemblance_l2) entry["resemblance_l2"] = *m.resemblance_l2;
    for (const auto& [key, value] : m.extra) entry[key] = value;
    doc[model] = std::move(entry);
  }
  write_file_atomic(file, doc.dump(2) + "\n");
}

}  // namespace gaze_attn
