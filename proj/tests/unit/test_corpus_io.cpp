#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gaze_attn/error.hpp"
#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/file_util.hpp"
#include "gaze_attn/synth.hpp"
#include "test_support.hpp"

using namespace gaze_attn;
using testing::TempDir;

namespace {

bool has_finding(const ValidationReport& report, Severity severity, const std::string& needle) {
  for (const auto& f : report.findings) {
    if (f.severity == severity && f.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "<no DataError>";
}

void patch_manifest(const std::filesystem::path& dir, auto&& edit) {
  auto doc = nlohmann::json::parse(read_file(dir / "manifest.json"));
  edit(doc);
  write_file_atomic(dir / "manifest.json", doc.dump());
}

}  // namespace

TEST_CASE("attention run round trip is bit exact") {
  TempDir dir;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.corpus.seed = seed + 100;
    spec.n_layers = 3;
    spec.n_heads = 2;
    auto synth = gen_attention_run(spec);
    synth.run.meta.ntp_loss = 0.25;
    const auto path = dir / ("run" + std::to_string(seed));
    write_attention(synth.run, path);
    CHECK(load_attention(path) == synth.run);
    CHECK(validate_run(synth.run, synth.corpus).empty());
  }
}

TEST_CASE("prefixed run round trip keeps roles and prefix text") {
  TempDir dir;
  AttentionRun run = testing::make_plain_run("m", 2, 2, {3}, 9);
  run.condition = Condition{ConditionKind::instruction_prefixed, std::string(kTranslatePrefix)};
  auto& s = run.sentences.begin()->second;
  s.token_map.tokens.insert(s.token_map.tokens.begin() + 1, Token{0, SpanRole::prefix});
  AttentionTensor t(2, 2, 5);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t i = 0; i < 5; ++i) t.at(l, h, i, 0) = 1.0f;
  s.tensor = t;
  write_attention(run, dir / "p");
  CHECK(load_attention(dir / "p") == run);
}

TEST_CASE("load errors") {
  TempDir dir;
  const AttentionRun run = testing::make_plain_run("m", 2, 4, {3, 2}, 1);
  write_attention(run, dir / "run");
  const auto tensor_file = dir / "run" / tensor_file_name(SentenceId{"art", 0});

  SUBCASE("missing manifest") {
    CHECK(error_of([&] { load_attention(dir / "nowhere"); }).find("missing manifest") != std::string::npos);
  }
  SUBCASE("corrupt manifest") {
    write_file_atomic(dir / "run/manifest.json", "{ not json");
    CHECK(error_of([&] { load_attention(dir / "run"); }).find("corrupt manifest") != std::string::npos);
  }
  SUBCASE("manifest head count disagrees with tensor") {
    patch_manifest(dir / "run", [](auto& doc) { doc["meta"]["n_heads"] = 8; });
    CHECK(error_of([&] { load_attention(dir / "run"); }).find("dimension mismatch") != std::string::npos);
  }
  SUBCASE("magic number") {
    std::string bytes = read_file(tensor_file);
    bytes[0] = 'X';
    write_file_atomic(tensor_file, bytes);
    CHECK(error_of([&] { load_attention(dir / "run"); }).find("magic-number mismatch") != std::string::npos);
  }
  SUBCASE("truncated header") {
    write_file_atomic(tensor_file, "ATTN");
    CHECK(error_of([&] { read_tensor_file(tensor_file); }).find("truncated header") != std::string::npos);
  }
  SUBCASE("truncated payload") {
    std::string bytes = read_file(tensor_file);
    bytes.resize(bytes.size() - 4);
    write_file_atomic(tensor_file, bytes);
    CHECK(error_of([&] { read_tensor_file(tensor_file); }).find("dimension mismatch") != std::string::npos);
  }
  SUBCASE("non-finite payload") {
    std::string bytes = read_file(tensor_file);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
    write_file_atomic(tensor_file, bytes);
    CHECK(error_of([&] { load_attention(dir / "run"); }).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("tensor header layout") {
  TempDir dir;
  AttentionTensor t(1, 1, 2, {1.0f, 0.0f, 0.25f, 0.75f});
  write_tensor_file(t, dir / "t.attn");
  const std::string bytes = read_file(dir / "t.attn");
  REQUIRE(bytes.size() == 4 + 5 * 4 + 4 * 4);
  CHECK(bytes.substr(0, 4) == "ATTN");
  const unsigned char version_lsb = static_cast<unsigned char>(bytes[4]);
  CHECK(version_lsb == 1);
  const unsigned char n_tok_lsb = static_cast<unsigned char>(bytes[16]);
  CHECK(n_tok_lsb == 2);
  // 0.25f = 0x3E800000, little-endian
  CHECK(static_cast<unsigned char>(bytes[24 + 8 + 3]) == 0x3E);
  CHECK(static_cast<unsigned char>(bytes[24 + 8 + 2]) == 0x80);
  CHECK(read_tensor_file(dir / "t.attn") == t);
}

TEST_CASE("validator: perturbed row is a warning, not an error") {
  AttentionRun run = testing::make_plain_run("m", 2, 2, {4}, 3);
  const Corpus corpus = testing::make_corpus({4});
  auto& tensor = run.sentences.begin()->second.tensor;
  // Row 3 of layer 1, head 0 scaled to sum 0.90.
  for (std::size_t j = 0; j <= 3; ++j) tensor.at(1, 0, 3, j) *= 0.9f;
  const auto report = validate_run(run, corpus);
  CHECK_FALSE(report.has_errors());
  CHECK(has_finding(report, Severity::warning, "row-sum tolerance exceeded"));
}

TEST_CASE("validator: errors") {
  const Corpus corpus = testing::make_corpus({3, 2});
  AttentionRun run = testing::make_plain_run("m", 1, 1, {3, 2}, 4);
  CHECK(validate_run(run, corpus).empty());

  SUBCASE("gap in word indices") {
    run.sentences.begin()->second.token_map.tokens[2].word_index = 2;
    run.sentences.begin()->second.token_map.tokens[3].word_index = 3;
    CHECK(has_finding(validate_run(run, corpus), Severity::error, "word indices not contiguous"));
  }
  SUBCASE("negative value") {
    run.sentences.begin()->second.tensor.at(0, 0, 1, 0) = -0.5f;
    CHECK(has_finding(validate_run(run, corpus), Severity::error, "negative"));
  }
  SUBCASE("missing sentence") {
    run.sentences.erase(run.sentences.begin());
    CHECK(has_finding(validate_run(run, corpus), Severity::error, "missing sentence art:0"));
  }
  SUBCASE("word count mismatch") {
    CHECK(has_finding(validate_run(run, testing::make_corpus({3, 3})), Severity::error, "word count mismatch"));
  }
  SUBCASE("bos must lead") {
    std::swap(run.sentences.begin()->second.token_map.tokens[0], run.sentences.begin()->second.token_map.tokens[1]);
    CHECK(validate_run(run, corpus).has_errors());
  }
  SUBCASE("mass above the diagonal is a warning") {
    run.sentences.begin()->second.tensor.at(0, 0, 0, 2) = 0.5f;
    const auto report = validate_run(run, corpus);
    CHECK(has_finding(report, Severity::warning, "above the causal diagonal"));
  }
}

TEST_CASE("saccade bundles") {
  TempDir dir;
  const auto file = dir / "s.json";
  auto write = [&](const std::string& matrix) {
    write_file_atomic(file, R"({"subject_id":"s1","group":"L2","sentences":[{"sentence_id":"art:0","n_words":2,"matrix":)" +
                                matrix + "}]}");
  };

  write("[[0,1],[2,0]]");
  const SaccadeBundle b = load_saccade(file);
  CHECK(b.subject_id == "s1");
  CHECK(b.group == Group::L2);
  CHECK(b.sentences.at(SentenceId{"art", 0}) == SaccadeMatrix{{0, 1}, {2, 0}});
  CHECK(load_saccade(file, testing::make_corpus({2})) == b);

  write("[[0,-1],[2,0]]");
  CHECK(error_of([&] { load_saccade(file); }).find("negative saccade count") != std::string::npos);
  write("[[0,1],[2,0],[1,1]]");
  CHECK(error_of([&] { load_saccade(file); }).find("matrix not square") != std::string::npos);
  write("[[0,1.5],[2,0]]");
  CHECK_THROWS_AS(load_saccade(file), DataError);
  write("[[0,1],[2,0]]");
  CHECK(error_of([&] { load_saccade(file, testing::make_corpus({2}, "other")); }).find("unknown sentence_id") !=
        std::string::npos);

  write_saccade(b, dir / "again.json");
  CHECK(load_saccade(dir / "again.json") == b);
}

TEST_CASE("corpus and metrics round trip") {
  TempDir dir;
  Corpus corpus = testing::make_corpus({3, 1, 2});
  write_corpus(corpus, dir / "corpus.json");
  CHECK(load_corpus(dir / "corpus.json") == corpus);
  CHECK(find_sentence(corpus, SentenceId{"art", 1})->n_words() == 1);
  CHECK(find_sentence(corpus, SentenceId{"art", 9}) == nullptr);

  MetricsSidecar metrics;
  metrics["llama-7b"].ntp_loss = 0.2408;
  metrics["llama-7b"].param_count = 7e9;
  metrics["llama-7b"].resemblance_l1 = 53.04;
  metrics["llama-7b"].extra["custom"] = 1.5;
  metrics["gpt2"].resemblance_l2 = 40.03;
  write_metrics(metrics, dir / "metrics.json");
  CHECK(load_metrics(dir / "metrics.json") == metrics);

  write_file_atomic(dir / "bad.json", R"({"m":{"ntp_loss":"high"}})");
  CHECK_THROWS_AS(load_metrics(dir / "bad.json"), DataError);
}
