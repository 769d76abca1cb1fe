#include "gaze_attn/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaze_attn/error.hpp"
#include "gaze_attn/parallel.hpp"

namespace gaze_attn {

std::string_view to_string(DivergenceMetric metric) {
  return metric == DivergenceMetric::symmetrized_kl ? "symmetrized_kl" : "jensen_shannon";
}

DivergenceMetric parse_divergence_metric(std::string_view text) {
  if (text == "symmetrized_kl") return DivergenceMetric::symmetrized_kl;
  if (text == "jensen_shannon") return DivergenceMetric::jensen_shannon;
  throw UsageError("unknown divergence metric '" + std::string(text) + "'");
}

std::string_view to_string(Granularity granularity) {
  return granularity == Granularity::layer ? "layer" : "quarter";
}

std::string_view to_string(QuarterAggregation aggregation) {
  return aggregation == QuarterAggregation::mean_matrix ? "mean_matrix" : "mean_divergence";
}

QuarterAggregation parse_quarter_aggregation(std::string_view text) {
  if (text == "mean_matrix") return QuarterAggregation::mean_matrix;
  if (text == "mean_divergence") return QuarterAggregation::mean_divergence;
  throw UsageError("unknown quarter aggregation '" + std::string(text) + "'");
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw DataError(std::string(name) + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw DataError(std::string(name) + " does not sum to 1");
}

double kl_unchecked(std::span<const double> p, std::span<const double> q, const KlOptions& options) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    double denom = q[k];
    if (options.apply_floor) {
      denom = std::max(denom, options.floor);
    } else if (denom == 0.0) {
      throw DataError("absolute continuity violated");
    }
    total += p[k] * std::log(p[k] / denom);
  }
  return std::max(total, 0.0);
}

double row_divergence(std::span<const double> a, std::span<const double> b, DivergenceMetric metric) {
  const KlOptions options;
  if (metric == DivergenceMetric::symmetrized_kl) {
    return 0.5 * (kl_unchecked(a, b, options) + kl_unchecked(b, a, options));
  }
  std::vector<double> mixture(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) mixture[k] = 0.5 * (a[k] + b[k]);
  return 0.5 * (kl_unchecked(a, mixture, options) + kl_unchecked(b, mixture, options));
}

DivergenceValue summarize(std::size_t unit, const std::vector<double>& samples) {
  DivergenceValue value;
  value.unit = unit;
  value.n_sentences = samples.size();
  if (samples.empty()) return value;
  double sum = 0.0;
  for (double s : samples) sum += s;
  value.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - value.mean) * (s - value.mean);
    value.std = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  return value;
}

std::vector<SentenceId> shared_sentences(const AttentionRun& a, const AttentionRun& b) {
  if (a.sentences.size() != b.sentences.size()) {
    throw DataError("corpus mismatch: runs cover " + std::to_string(a.sentences.size()) + " and " +
                    std::to_string(b.sentences.size()) + " sentences");
  }
  std::vector<SentenceId> ids;
  ids.reserve(a.sentences.size());
  for (const auto& [id, sentence] : a.sentences) {
    if (!b.sentences.contains(id)) throw DataError("corpus mismatch: " + id.str() + " missing from second run");
    ids.push_back(id);
  }
  if (ids.empty()) throw DataError("runs contain no sentences");
  return ids;
}

/// Unnormalized span-restricted word matrix averaged over layers [begin, end).
Matrix mean_span_matrix(const SentenceAttention& sentence, std::size_t begin, std::size_t end) {
  Matrix sum;
  for (std::size_t l = begin; l < end; ++l) {
    Matrix m = sentence_span_matrix(heads_average(sentence.tensor, l), sentence.token_map);
    if (sum.empty()) {
      sum = std::move(m);
    } else {
      auto dst = sum.data();
      auto src = m.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  for (double& v : sum.data()) v /= static_cast<double>(end - begin);
  return sum;
}

}  // namespace

double kl_row(std::span<const double> p, std::span<const double> q, KlOptions options) {
  if (p.size() != q.size()) throw DataError("kl_row: length mismatch");
  check_distribution(p, "p");
  check_distribution(q, "q");
  return kl_unchecked(p, q, options);
}

double sentence_divergence(const NormalizedWordAttention& a, const NormalizedWordAttention& b,
                           DivergenceMetric metric) {
  const Matrix& ma = a.matrix;
  const Matrix& mb = b.matrix;
  if (ma.rows() != mb.rows() || ma.cols() != mb.cols() || !ma.square()) {
    throw DataError("shape mismatch in sentence_divergence (" + std::to_string(ma.rows()) + " vs " +
                    std::to_string(mb.rows()) + " words)");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ma.rows(); ++i) {
    total += row_divergence(ma.row(i).first(i + 1), mb.row(i).first(i + 1), metric);
  }
  return total;
}

std::vector<std::pair<std::size_t, std::size_t>> quarter_bounds(std::size_t n_layers) {
  if (n_layers < 4) throw UsageError("too few layers to quarter (" + std::to_string(n_layers) + ")");
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  for (std::size_t k = 0; k < 4; ++k) bounds.emplace_back(k * n_layers / 4, (k + 1) * n_layers / 4);
  return bounds;
}

DivergenceReport layerwise_divergence(const AttentionRun& a, const AttentionRun& b,
                                      const DivergenceOptions& options) {
  if (a.meta.n_layers != b.meta.n_layers) {
    throw UsageError("layer-count mismatch (" + std::to_string(a.meta.n_layers) + " vs " +
                     std::to_string(b.meta.n_layers) + "); use quarterwise comparison");
  }
  const auto ids = shared_sentences(a, b);
  DivergenceReport report;
  report.granularity = Granularity::layer;
  report.values.resize(a.meta.n_layers);
  parallel_for(a.meta.n_layers, options.jobs, [&](std::size_t layer) {
    std::vector<double> samples;
    samples.reserve(ids.size());
    for (const auto& id : ids) {
      samples.push_back(sentence_divergence(divergence_view(id, a.sentences.at(id), layer),
                                            divergence_view(id, b.sentences.at(id), layer), options.metric));
    }
    report.values[layer] = summarize(layer, samples);
  });
  return report;
}

DivergenceReport quarterwise_divergence(const AttentionRun& a, const AttentionRun& b,
                                        const DivergenceOptions& options) {
  const auto qa = quarter_bounds(a.meta.n_layers);
  const auto qb = quarter_bounds(b.meta.n_layers);
  const auto ids = shared_sentences(a, b);

  // samples[quarter][sentence]
  std::vector<std::vector<double>> samples(4, std::vector<double>(ids.size()));
  parallel_for(ids.size(), options.jobs, [&](std::size_t s) {
    const auto& id = ids[s];
    const auto& sa = a.sentences.at(id);
    const auto& sb = b.sentences.at(id);
    for (std::size_t q = 0; q < 4; ++q) {
      if (options.quarter_aggregation == QuarterAggregation::mean_matrix) {
        samples[q][s] = sentence_divergence(renormalize_rows(mean_span_matrix(sa, qa[q].first, qa[q].second)),
                                            renormalize_rows(mean_span_matrix(sb, qb[q].first, qb[q].second)),
                                            options.metric);
        continue;
      }
      double sum = 0.0;
      std::size_t pairs = 0;
      for (std::size_t la = qa[q].first; la < qa[q].second; ++la) {
        const auto view_a = divergence_view(id, sa, la);
        for (std::size_t lb = qb[q].first; lb < qb[q].second; ++lb) {
          sum += sentence_divergence(view_a, divergence_view(id, sb, lb), options.metric);
          ++pairs;
        }
      }
      samples[q][s] = sum / static_cast<double>(pairs);
    }
  });

  DivergenceReport report;
  report.granularity = Granularity::quarter;
  for (std::size_t q = 0; q < 4; ++q) report.values.push_back(summarize(q, samples[q]));
  return report;
}

DivergenceReport compare_runs(const AttentionRun& a, const AttentionRun& b, const DivergenceOptions& options,
                              bool force_quarters) {
  if (!force_quarters && a.meta.n_layers == b.meta.n_layers) return layerwise_divergence(a, b, options);
  return quarterwise_divergence(a, b, options);
}

void flag_against_reference(DivergenceReport& report, const DivergenceReport& reference) {
  if (report.granularity != reference.granularity || report.values.size() != reference.values.size()) {
    throw UsageError("reference report does not match granularity/units (" +
                     std::string(to_string(report.granularity)) + " x" + std::to_string(report.values.size()) +
                     " vs " + std::string(to_string(reference.granularity)) + " x" +
                     std::to_string(reference.values.size()) + ")");
  }
  for (std::size_t k = 0; k < report.values.size(); ++k) {
    report.values[k].above_reference = report.values[k].mean > reference.values[k].mean;
  }
  report.reference = reference.values;
}

DivergenceReport instruction_sensitivity(const AttentionRun& plain, const AttentionRun& prefixed,
                                         const DivergenceReport& reference, const DivergenceOptions& options) {
  for (const auto& [id, sentence] : plain.sentences) {
    if (sentence.token_map.prefix_words() > 0) {
      throw DataError("plain run " + plain.meta.name + " carries prefix tokens in " + id.str());
    }
  }
  const bool has_prefix = std::any_of(prefixed.sentences.begin(), prefixed.sentences.end(),
                                      [](const auto& entry) { return entry.second.token_map.prefix_words() > 0; });
  if (!prefixed.condition.prefixed() || !has_prefix) {
    throw DataError("prefix spans absent in run " + prefixed.meta.name);
  }
  if (plain.meta.n_layers != prefixed.meta.n_layers) {
    throw DataError("plain and prefixed runs have different depths");
  }

  DivergenceReport report;
  if (reference.granularity == Granularity::layer) {
    if (reference.values.size() != plain.meta.n_layers) {
      throw UsageError("layerwise reference has " + std::to_string(reference.values.size()) +
                       " layers; the model has " + std::to_string(plain.meta.n_layers) +
                       " (use a quarterwise reference)");
    }
    report = layerwise_divergence(plain, prefixed, options);
  } else {
    report = quarterwise_divergence(plain, prefixed, options);
  }
  flag_against_reference(report, reference);
  return report;
}

}  // namespace gaze_attn
