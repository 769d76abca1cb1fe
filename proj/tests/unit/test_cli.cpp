#include "doctest.h"

#include <string>
#include <vector>

#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/file_util.hpp"
#include "gaze_attn/stats.hpp"
#include "gaze_attn_app/cli.hpp"
#include "gaze_attn_app/commands.hpp"
#include "test_support.hpp"

using namespace gaze_attn;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gaze-attn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return app::run_cli(static_cast<int>(argv.size()), argv.data());
}

const fs::path kSpec = fs::path(GAZE_ATTN_TEST_DATA_DIR) / "workspace_spec.json";

/// Synthetic workspace shared by the tests of this file.
struct Workspace {
  testing::TempDir dir{"gaze_attn_cli"};
  fs::path root = dir / "ws";
  fs::path config = root / "config.json";

  Workspace() { REQUIRE(cli({"synth", kSpec.string(), "--out", root.string()}) == 0); }

  int run(const std::string& command, const fs::path& out, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{command, "--config", config.string(), "--out", out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  }
};

const Workspace& workspace() {
  static Workspace ws;
  return ws;
}

std::size_t find_row(const ReportTable& t, std::size_t column, const std::string& value) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (std::get<std::string>(t.rows[r][column]) == value) return r;
  }
  FAIL("row not found: " << value);
  return 0;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  testing::TempDir dir;
  CHECK(cli({}) == 2);
  CHECK(cli({"bogus"}) == 2);
  CHECK(cli({"validate"}) == 2);
  write_file_atomic(dir / "empty.json", "{}");
  CHECK(cli({"validate", "--config", (dir / "empty.json").string()}) == 2);
  write_file_atomic(dir / "blank.json", "");
  CHECK(cli({"validate", "--config", (dir / "blank.json").string()}) == 2);
  CHECK(cli({"validate", "--config", (dir / "missing.json").string()}) == 2);
  CHECK(cli({"validate", "--config", workspace().config.string(), "--format", "xml"}) == 2);
  CHECK(cli({"synth", kSpec.string()}) == 2);
}

TEST_CASE("validate: clean workspace, then a corrupted tensor") {
  testing::TempDir out;
  CHECK(workspace().run("validate", out.path()) == 0);

  testing::TempDir copy;
  fs::copy(workspace().root, copy / "ws", fs::copy_options::recursive);
  const fs::path victim = copy / "ws/runs/tuned-7b" / tensor_file_name(SentenceId{"synth", 3});
  std::string bytes = read_file(victim);
  bytes[1] = '?';
  write_file_atomic(victim, bytes);
  CHECK(cli({"validate", "--config", (copy / "ws/config.json").string(), "--out", out.path().string()}) == 1);
  const ReportTable t = read_report(out / "validation.csv", ReportFormat::csv);
  REQUIRE(t.rows.size() == 1);
  CHECK(std::get<std::string>(t.rows[0][0]) == "tuned-7b/plain");
  CHECK(std::get<std::string>(t.rows[0][1]) == "error");
  CHECK(std::get<std::string>(t.rows[0][3]).find(victim.filename().string()) != std::string::npos);
}

TEST_CASE("divergence report equals the library result") {
  testing::TempDir out;
  REQUIRE(workspace().run("divergence", out.path()) == 0);
  const ReportTable got = read_report(out / "divergence.csv", ReportFormat::csv);

  const auto cfg = app::load_config(workspace().config);
  const AttentionRun base = load_attention(cfg.run("base-7b").path);
  const AttentionRun tuned = load_attention(cfg.run("tuned-7b").path);
  const AttentionRun big = load_attention(cfg.run("base-13b").path);
  const AttentionRun r0 = load_attention(cfg.run("ref-v0").path);
  const AttentionRun r1 = load_attention(cfg.run("ref-v1").path);

  ReportTable expect = app::divergence_table();
  const app::ModelPair ref{"ref-v0", "ref-v1"};
  DivergenceReport d = layerwise_divergence(base, tuned);
  flag_against_reference(d, layerwise_divergence(r0, r1));
  app::add_divergence(expect, "base-7b", "tuned-7b", "plain", d, &ref);
  DivergenceReport self = layerwise_divergence(base, base);
  flag_against_reference(self, layerwise_divergence(r0, r1));
  app::add_divergence(expect, "base-7b", "base-7b", "plain", self, &ref);
  DivergenceReport q = quarterwise_divergence(base, big);
  flag_against_reference(q, quarterwise_divergence(r0, r1));
  app::add_divergence(expect, "base-7b", "base-13b", "plain", q, &ref);
  CHECK(got == expect);

  for (const auto& v : self.values) CHECK(v.mean == 0.0);
  CHECK(q.granularity == Granularity::quarter);

  const ReportTable sens = read_report(out / "sensitivity.csv", ReportFormat::csv);
  const AttentionRun prefixed = load_attention(cfg.run("base-7b", "instruction_prefixed").path);
  ReportTable sens_expect = app::divergence_table();
  app::add_divergence(sens_expect, "base-7b", "base-7b", "instruction_prefixed",
                      instruction_sensitivity(base, prefixed, layerwise_divergence(r0, r1)), &ref);
  CHECK(sens == sens_expect);
  // Layers before the perturbation see an unchanged sentence span.
  for (std::size_t l = 0; l < 6; ++l) CHECK(std::get<double>(sens.rows[l][5]) == 0.0);
}

TEST_CASE("json output parses to the same table") {
  testing::TempDir csv, json;
  REQUIRE(workspace().run("divergence", csv.path()) == 0);
  REQUIRE(workspace().run("divergence", json.path(), {"--format", "json"}) == 0);
  CHECK(read_report(csv / "divergence.csv", ReportFormat::csv) ==
        read_report(json / "divergence.json", ReportFormat::json));
}

TEST_CASE("resemblance recovers the planted layer") {
  testing::TempDir out;
  REQUIRE(workspace().run("resemblance", out.path()) == 0);
  const ReportTable summary = read_report(out / "resemblance_summary.csv", ReportFormat::csv);
  const std::size_t row = find_row(summary, 0, "base-7b");
  CHECK(std::get<std::string>(summary.rows[row][1]) == "L1");
  CHECK(std::get<std::int64_t>(summary.rows[row][5]) == 5);

  const auto cfg = app::load_config(workspace().config);
  const Corpus corpus = load_corpus(cfg.corpus);
  const auto subjects = app::subject_vectors(app::load_saccade_dir(*cfg.saccades, corpus), corpus);
  AttentionRun base = load_attention(cfg.run("base-7b").path);
  const auto score = model_resemblance(base, subjects, Group::L1);
  ReportTable layers = app::resemblance_layers_table(), expect = app::resemblance_summary_table();
  app::add_resemblance(layers, expect, score);
  CHECK(summary.rows[row] == expect.rows[0]);
}

TEST_CASE("trivial and stats") {
  testing::TempDir out;
  REQUIRE(workspace().run("trivial", out.path()) == 0);
  const ReportTable trivial = read_report(out / "trivial.csv", ReportFormat::csv);
  CHECK(trivial.rows.size() == 8 + 8 + 6);

  REQUIRE(workspace().run("stats", out.path()) == 0);
  const ReportTable stats = read_report(out / "stats.csv", ReportFormat::csv);
  const std::size_t l1 = find_row(stats, 0, "pearson:ntp_loss~resemblance_l1");
  CHECK(std::get<double>(stats.rows[l1][1]) == doctest::Approx(-0.875).epsilon(0.01 / 0.875));
  CHECK(std::get<double>(stats.rows[l1][2]) < 0.002);
  CHECK(std::get<std::int64_t>(stats.rows[l1][4]) == 9);
  const std::size_t l2 = find_row(stats, 0, "pearson:ntp_loss~resemblance_l2");
  CHECK(std::get<double>(stats.rows[l2][1]) == doctest::Approx(-0.917).epsilon(0.01 / 0.917));
  find_row(stats, 0, "paired:base-7b~tuned-7b:L1:layer7");
  find_row(stats, 0, "welch:trivial_r2:L1~L2");
  const std::size_t layer0 = find_row(stats, 0, "paired:base-7b~tuned-7b:L1:layer0");
  CHECK(std::get<double>(stats.rows[layer0][5]) == bonferroni(0.05, 8));
}

TEST_CASE("stats without a sidecar field is a data error") {
  testing::TempDir dir;
  write_file_atomic(dir / "metrics.json", R"({"m": {"ntp_loss": 0.3}})");
  write_corpus(testing::make_corpus({2}), dir / "corpus.json");
  write_file_atomic(dir / "config.json", R"({"corpus": "corpus.json", "metrics": "metrics.json"})");
  CHECK(cli({"stats", "--config", (dir / "config.json").string()}) == 1);
}

TEST_CASE("every command is byte-for-byte deterministic") {
  testing::TempDir a, b, c;
  const std::vector<std::string> commands{"validate", "divergence", "resemblance", "trivial", "stats", "report"};
  for (const auto& cmd : commands) {
    REQUIRE(workspace().run(cmd, a.path()) == 0);
    REQUIRE(workspace().run(cmd, b.path()) == 0);
    REQUIRE(workspace().run(cmd, c.path(), {"--jobs", "4"}) == 0);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a.path())) {
    const auto name = entry.path().filename();
    CAPTURE(name);
    CHECK(testing::read_bytes(entry.path()) == testing::read_bytes(b / name.string()));
    CHECK(testing::read_bytes(entry.path()) == testing::read_bytes(c / name.string()));
    ++files;
  }
  CHECK(files == 8);

  testing::TempDir s1, s2;
  REQUIRE(cli({"synth", kSpec.string(), "--out", (s1 / "ws").string()}) == 0);
  REQUIRE(cli({"synth", kSpec.string(), "--out", (s2 / "ws").string()}) == 0);
  for (const auto& entry : fs::recursive_directory_iterator(s1 / "ws")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), s1 / "ws");
    CHECK(testing::read_bytes(entry.path()) == testing::read_bytes(s2 / "ws" / rel));
  }
}

TEST_CASE("report merges every table") {
  testing::TempDir out;
  REQUIRE(workspace().run("trivial", out.path()) == 0);
  REQUIRE(workspace().run("report", out.path()) == 0);
  const ReportTable summary = read_report(out / "summary.csv", ReportFormat::csv);
  const ReportTable trivial = read_report(out / "trivial.csv", ReportFormat::csv);
  CHECK(summary.rows.size() == trivial.rows.size() * 3);
  CHECK(summary.rows[2][3] == trivial.rows[0][2]);
  testing::TempDir empty;
  CHECK(workspace().run("report", empty.path()) == 1);
}
