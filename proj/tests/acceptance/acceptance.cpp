// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every hard criterion passes; soft checks are reported but not gated.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gaze_attn/align.hpp"
#include "gaze_attn/divergence.hpp"
#include "gaze_attn/file_util.hpp"
#include "gaze_attn/regression.hpp"
#include "gaze_attn/resemblance.hpp"
#include "gaze_attn/rng.hpp"
#include "gaze_attn/stats.hpp"
#include "gaze_attn/synth.hpp"
#include "gaze_attn_app/cli.hpp"
#include "oracles.hpp"
#include "published_fixtures.hpp"
#include "test_support.hpp"

using namespace gaze_attn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

bool g_soft_failed = false;

Outcome loss_correlation() {
  std::vector<double> loss, l1, l2;
  for (const auto& row : fixtures::kLossTable) {
    loss.push_back(row.loss);
    l1.push_back(row.l1);
    l2.push_back(row.l2);
  }
  const auto c1 = pearson(loss, l1);
  const auto c2 = pearson(loss, l2);
  Outcome o;
  o.pass = std::abs(c1.r + 0.875) <= 0.01 && c1.p_two_sided < 0.002 && std::abs(c2.r + 0.917) <= 0.01 &&
           c2.p_two_sided < 0.0005;
  o.detail = fmt("L1 r=%.4f p=%.3g; L2 r=%.4f p=%.3g", c1.r, c1.p_two_sided, c2.r, c2.p_two_sided);
  return o;
}

Outcome scaling_correlation() {
  std::vector<ScalingPoint> p1, p2;
  for (const auto& row : fixtures::kScaleTable) {
    p1.push_back({row.params, row.l1});
    p2.push_back({row.params, row.l2});
  }
  const ScalingFit f1 = scaling_fit(p1);
  const ScalingFit f2 = scaling_fit(p2);
  Outcome o;
  o.pass = std::abs(f1.r - 0.989) <= 0.005 && std::abs(f2.r - 0.964) <= 0.005;
  o.detail = fmt("L1 r=%.4f; L2 r=%.4f", f1.r, f2.r);

  const double y1 = scaling_predict(f1, 1e11);
  const double y2 = scaling_predict(f2, 1e11);
  const bool soft = std::abs(y1 - fixtures::kPublishedPrediction100BL1) <= 1.5 &&
                    std::abs(y2 - fixtures::kPublishedPrediction100BL2) <= 1.5;
  g_soft_failed = !soft;
  std::printf("[%s] 2s  soft: 1e11-parameter prediction within 1.5 of 88.82 (L1) / 98.80 (L2): L1 %.2f, L2 %.2f\n",
              soft ? "PASS" : "SOFT-FAIL", y1, y2);
  return o;
}

Outcome divergence_oracle() {
  SplitMix64 rng(0xD1FF);
  double worst = 0.0;
  bool symmetric = true;
  double worst_self = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Matrix a = testing::random_causal_stochastic(5, rng);
    const Matrix b = testing::random_causal_stochastic(5, rng);
    const auto na = renormalize_rows(a);
    const auto nb = renormalize_rows(b);
    const double d = sentence_divergence(na, nb);
    worst = std::max(worst, std::abs(d - oracle::jeffreys_bruteforce(a, b)));
    symmetric = symmetric && d == sentence_divergence(nb, na);
    worst_self = std::max(worst_self, sentence_divergence(na, na));
  }
  Outcome o;
  o.pass = worst <= 1e-9 && symmetric && worst_self < 1e-12;
  o.detail = fmt("max |D - brute| = %.2e, symmetric=%s, max self = %.2e", worst, symmetric ? "yes" : "no",
                 worst_self);
  return o;
}

Outcome ols_oracle() {
  SplitMix64 rng(0x015);
  double worst_w = 0.0, worst_r2 = 0.0, worst_drop = 0.0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t p = 1 + rng.below(8);
    const std::size_t n = p + 2 + rng.below(60 - p - 1);
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    for (auto& c : cols)
      for (double& v : c) v = rng.normal();
    std::vector<double> y(n);
    for (double& v : y) v = rng.normal();
    const auto x = DesignMatrix::from_columns(cols);
    const FitResult fit = ols_fit(x, y);
    const auto ref = oracle::ols_normal_equations(x.values, y);
    for (std::size_t c = 0; c < p; ++c) worst_w = std::max(worst_w, std::abs(fit.weights[c] - ref.weights[c]));
    worst_w = std::max(worst_w, std::abs(fit.intercept - ref.intercept));
    worst_r2 = std::max(worst_r2, std::abs(fit.r2 - ref.r2));

    double previous = 0.0;
    for (std::size_t q = 1; q <= p; ++q) {
      const std::vector<std::vector<double>> sub(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(q));
      const double r2 = ols_fit(DesignMatrix::from_columns(sub), y).r2;
      worst_drop = std::max(worst_drop, previous - r2);
      previous = r2;
    }
  }
  Outcome o;
  o.pass = worst_w <= 1e-8 && worst_r2 <= 1e-10 && worst_drop <= 1e-10;
  o.detail = fmt("max weight err %.2e, max R2 err %.2e, max R2 drop on feature addition %.2e", worst_w, worst_r2,
                 worst_drop);
  return o;
}

Outcome alignment_property() {
  SplitMix64 rng(0xA11);
  double worst_mass = 0.0, worst_commute = 0.0;
  for (int k = 0; k < 1000; ++k) {
    TokenMap map;
    map.tokens.push_back({-1, SpanRole::bos});
    const std::size_t n_prefix = k % 4 == 0 ? 1 + rng.below(3) : 0;
    for (std::size_t w = 0; w < n_prefix; ++w) {
      for (std::size_t t = 0, pieces = 1 + rng.below(2); t < pieces; ++t)
        map.tokens.push_back({static_cast<int>(w), SpanRole::prefix});
    }
    const std::size_t n_words = 1 + rng.below(10);
    for (std::size_t w = 0; w < n_words; ++w) {
      for (std::size_t t = 0, pieces = 1 + rng.below(3); t < pieces; ++t)
        map.tokens.push_back({static_cast<int>(w), SpanRole::sentence});
    }
    // Half stochastic, half arbitrary non-negative matrices.
    const Matrix m = k % 2 == 0 ? testing::random_causal_stochastic(map.size(), rng)
                                : testing::random_dense(map.size(), rng);
    const TokenGrouping g = group_tokens(map);
    const Matrix w = word_align(m, map);
    for (std::size_t gi = 0; gi < g.n_groups; ++gi) {
      double token_mass = 0.0;
      std::size_t members = 0;
      for (std::size_t t = 0; t < map.size(); ++t) {
        if (g.group_of_token[t] != gi) continue;
        const auto r = m.row(t);
        token_mass += std::accumulate(r.begin(), r.end(), 0.0);
        ++members;
      }
      const auto wr = w.row(gi);
      worst_mass = std::max(worst_mass, std::abs(std::accumulate(wr.begin(), wr.end(), 0.0) - token_mass / members));
    }
    worst_commute = std::max(worst_commute, max_abs_diff(w, oracle::word_align_rows_first(m, map)));
  }
  Outcome o;
  o.pass = worst_mass <= 1e-9 && worst_commute <= 1e-12;
  o.detail = fmt("max row-mass error %.2e, max order difference %.2e", worst_mass, worst_commute);
  return o;
}

Outcome planted_recovery() {
  Outcome o;
  std::ostringstream detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    double previous = 2.0;
    for (double sigma : {0.0, 0.1, 1.0}) {
      SynthSpec spec;
      spec.seed = seed;
      spec.corpus.seed = seed + 1000;
      spec.corpus.n_sentences = 20;
      spec.n_layers = 6;
      spec.n_heads = 4;
      spec.structure = LinearCombo{3, {1.0, -0.5, 0.25, 2.0}, 0.1, sigma, 20.0};
      const SynthRun synth = gen_attention_run(spec);
      const ResemblanceScore s = model_resemblance(synth.run, {*synth.planted_subject}, Group::L1);
      if (sigma == 0.0 && (s.argmax_layer != 3 || std::abs(s.layer_mean_r2[3] - 1.0) > 1e-9)) {
        o.pass = false;
        detail << "seed " << seed << ": argmax " << s.argmax_layer << " R2 " << s.layer_mean_r2[3] << "; ";
      }
      if (!(s.r2_model < previous)) {
        o.pass = false;
        detail << "seed " << seed << ": R2 not decreasing at sigma " << sigma << "; ";
      }
      previous = s.r2_model;
    }
  }
  double worst_pattern = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.corpus.seed = seed + 2000;
    spec.structure = PatternMixture{{2.0, 3.0, 1.0}, 0.0};
    const Corpus corpus = gen_corpus(spec.corpus);
    const auto subject = build_subject_vector(gen_saccade(spec, corpus), corpus);
    worst_pattern = std::max(worst_pattern, std::abs(trivial_reliance(subject.vector, corpus).r2 - 1.0));
  }
  double worst_noise = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.corpus.seed = seed + 3000;
    spec.corpus.n_sentences = 500;
    spec.structure = PatternMixture{{0.0, 0.0, 0.0}, 5.0};
    const Corpus corpus = gen_corpus(spec.corpus);
    const auto subject = build_subject_vector(gen_saccade(spec, corpus), corpus);
    worst_noise = std::max(worst_noise, trivial_reliance(subject.vector, corpus).r2);
  }
  o.pass = o.pass && worst_pattern <= 1e-9 && worst_noise < 0.05;
  detail << fmt("pattern |R2-1| max %.2e, noise R2 max %.4f", worst_pattern, worst_noise);
  o.detail = detail.str();
  return o;
}

Outcome instruction_sensitivity_protocol() {
  SynthSpec spec;
  spec.seed = 77;
  spec.corpus.n_sentences = 10;
  spec.n_layers = 8;
  spec.n_heads = 4;
  const SynthRun plain = gen_attention_run(spec);
  PrefixVariant variant{ConditionKind::instruction_prefixed, std::string(kTranslatePrefix), 7, std::nullopt, 5};
  const AttentionRun same_span = gen_prefixed_run(plain.run, variant);
  const DivergenceReport layer_zero{Granularity::layer, std::vector<DivergenceValue>(8), std::nullopt};
  const DivergenceReport quarter_zero{Granularity::quarter, std::vector<DivergenceValue>(4), std::nullopt};

  bool zeros = true;
  for (const auto& v : instruction_sensitivity(plain.run, same_span, layer_zero).values) zeros = zeros && v.mean == 0.0;
  for (const auto& v : instruction_sensitivity(plain.run, same_span, quarter_zero).values) zeros = zeros && v.mean == 0.0;

  variant.perturb_from_layer = 6;
  const AttentionRun perturbed = gen_prefixed_run(plain.run, variant);
  bool flags = true;
  const auto layers = instruction_sensitivity(plain.run, perturbed, layer_zero);
  for (std::size_t l = 0; l < 8; ++l) flags = flags && layers.values[l].above_reference == (l >= 6);
  const auto quarters = instruction_sensitivity(plain.run, perturbed, quarter_zero);
  for (std::size_t q = 0; q < 4; ++q) flags = flags && quarters.values[q].above_reference == (q == 3);

  Outcome o;
  o.pass = zeros && flags;
  o.detail = fmt("unchanged span all zero: %s; flags exactly on perturbed layers 6-7 / quarter 3: %s",
                 zeros ? "yes" : "no", flags ? "yes" : "no");
  return o;
}

Outcome statistics_oracles() {
  constexpr std::size_t kPerm = 100000;
  SplitMix64 rng(0x57A7);
  double worst = 0.0;
  int counts[3] = {0, 0, 0};
  for (int trial = 0; trial < 400 && (counts[0] < 4 || counts[1] < 4 || counts[2] < 4); ++trial) {
    const int kind = trial % 3;
    const std::size_t n = 30;
    const double effect = 0.1 + 0.05 * static_cast<double>((trial / 3) % 6);
    std::vector<double> a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = rng.normal();
      b[k] = (kind == 0 ? effect * a[k] : effect) + rng.normal();
    }
    double analytic = 0.0;
    if (kind == 0) analytic = pearson(a, b).p_two_sided;
    if (kind == 1) analytic = t_test_paired(a, b).p_two_sided;
    if (kind == 2) analytic = t_test_independent(a, b).p_two_sided;
    if (analytic < 0.01 || analytic > 0.5 || counts[kind] >= 4) continue;
    double permuted = 0.0;
    if (kind == 0) permuted = oracle::permutation_pearson_p(a, b, kPerm, trial);
    if (kind == 1) permuted = oracle::permutation_paired_p(a, b, kPerm, trial);
    if (kind == 2) permuted = oracle::permutation_welch_p(a, b, kPerm, trial);
    worst = std::max(worst, std::abs(analytic - permuted));
    ++counts[kind];
  }
  bool bonf = true;
  for (std::size_t n = 1; n <= 100; ++n) {
    // Exact up to the single rounding of the quotient.
    const double q = bonferroni(0.05, n);
    const double residual = std::fma(q, static_cast<double>(n), -0.05);
    bonf = bonf && q == 0.05 / static_cast<double>(n) &&
           std::abs(residual) <= 0.5 * (std::nextafter(q, 1.0) - q) * static_cast<double>(n);
  }
  Outcome o;
  o.pass = worst <= 0.01 && counts[0] == 4 && counts[1] == 4 && counts[2] == 4 && bonf;
  o.detail = fmt("%d pearson / %d paired / %d welch cases, max |p - p_perm| = %.4f; bonferroni n=1..100 %s",
                 counts[0], counts[1], counts[2], worst, bonf ? "exact" : "WRONG");
  return o;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gaze-attn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return app::run_cli(static_cast<int>(argv.size()), argv.data());
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  bool same = true;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path other = b / fs::relative(entry.path(), a);
    same = same && fs::exists(other) && testing::read_bytes(entry.path()) == testing::read_bytes(other);
    ++files;
  }
  return same;
}

Outcome end_to_end_determinism() {
  testing::TempDir dir("gaze_attn_acceptance");
  const std::string spec = (fs::path(GAZE_ATTN_TEST_DATA_DIR) / "workspace_spec.json").string();
  bool ok = cli({"synth", spec, "--out", (dir / "ws1").string()}) == 0 &&
            cli({"synth", spec, "--out", (dir / "ws2").string()}) == 0;
  std::size_t synth_files = 0;
  ok = ok && same_tree(dir / "ws1", dir / "ws2", synth_files);

  const std::string config = (dir / "ws1/config.json").string();
  for (const char* cmd : {"validate", "divergence", "resemblance", "trivial", "stats", "report"}) {
    for (const char* format : {"csv", "json"}) {
      ok = ok && cli({cmd, "--config", config, "--format", format, "--out", (dir / "out1").string()}) == 0;
      ok = ok && cli({cmd, "--config", config, "--format", format, "--out", (dir / "out2").string()}) == 0;
    }
  }
  std::size_t report_files = 0;
  ok = ok && same_tree(dir / "out1", dir / "out2", report_files);

  int round_trips = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SynthSpec s;
    s.seed = seed;
    s.corpus.seed = seed * 7 + 1;
    s.corpus.n_sentences = 3 + seed % 4;
    s.n_layers = 1 + static_cast<std::uint32_t>(seed % 5);
    s.n_heads = 1 + static_cast<std::uint32_t>(seed % 3);
    SynthRun synth = gen_attention_run(s);
    if (seed % 3 == 0) synth.run.meta.ntp_loss = 0.1 + 0.01 * static_cast<double>(seed);
    AttentionRun run = synth.run;
    if (seed % 5 == 1) {
      run = gen_prefixed_run(synth.run, PrefixVariant{ConditionKind::noise_prefixed, std::string(kNoisePrefix), 5,
                                                     std::nullopt, seed});
    }
    const fs::path path = dir / ("rt" + std::to_string(seed));
    write_attention(run, path);
    if (load_attention(path) == run) ++round_trips;
  }
  Outcome o;
  o.pass = ok && report_files == 16 && round_trips == 50;
  o.detail = fmt("synth files identical (%zu), report files identical (%zu), round trips %d/50",
                 synth_files, report_files, round_trips);
  return o;
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "loss/resemblance correlation fixture", 1.0, loss_correlation},
      {2, "scaling fixture", 1.0, scaling_correlation},
      {3, "divergence oracle", 5.0, divergence_oracle},
      {4, "OLS oracle", 30.0, ols_oracle},
      {5, "alignment properties", 10.0, alignment_property},
      {6, "planted-structure recovery", 60.0, planted_recovery},
      {7, "instruction-sensitivity protocol", 10.0, instruction_sensitivity_protocol},
      {8, "statistics oracles", 60.0, statistics_oracles},
      {9, "end-to-end determinism", 30.0, end_to_end_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %d   %s: %s (%.2f s of %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                seconds, c.budget_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of 9 criteria passed%s\n", 9 - failures,
              g_soft_failed ? "; soft check 2s did not pass (not gated)" : "");
  return failures == 0 ? 0 : 1;
}
