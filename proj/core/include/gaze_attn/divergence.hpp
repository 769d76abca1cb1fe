#pragma once

// Attention divergence between models (or conditions of one model).
//
// The default metric is the row-summed symmetrized KL divergence
//   D(A, B) = 1/2 * sum_i [ KL(A_i || B_i) + KL(B_i || A_i) ]
// over row-renormalized word-level matrices, each row restricted to its
// causal support j <= i. Natural log throughout.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gaze_attn/align.hpp"
#include "gaze_attn/corpus_io.hpp"

namespace gaze_attn {

/// Floor applied to the second KL argument to absorb f32 underflow.
inline constexpr double kProbabilityFloor = 1e-12;

enum class DivergenceMetric {
  symmetrized_kl,  // the default, named "J-S" in the literature this follows
  jensen_shannon,  // mixture-based Jensen-Shannon, for robustness studies
};

enum class Granularity { layer, quarter };

enum class QuarterAggregation {
  mean_matrix,      // average the quarter's word-level matrices, renormalize, compare
  mean_divergence,  // average divergences over all layer pairs of the two quarters
};

std::string_view to_string(DivergenceMetric metric);
DivergenceMetric parse_divergence_metric(std::string_view text);
std::string_view to_string(Granularity granularity);
std::string_view to_string(QuarterAggregation aggregation);
QuarterAggregation parse_quarter_aggregation(std::string_view text);

struct KlOptions {
  bool apply_floor = true;
  double floor = kProbabilityFloor;
};

/// KL(p || q) = sum p_i ln(p_i / q_i), with 0 ln 0 = 0. Both inputs must be
/// probability vectors (sum 1 within 1e-6). Without the floor, q_i = 0 where
/// p_i > 0 throws DataError("absolute continuity violated").
double kl_row(std::span<const double> p, std::span<const double> q, KlOptions options = {});

/// Row-summed divergence between two row-renormalized word matrices.
/// Symmetric in its arguments bit for bit.
double sentence_divergence(const NormalizedWordAttention& a, const NormalizedWordAttention& b,
                           DivergenceMetric metric = DivergenceMetric::symmetrized_kl);

struct DivergenceValue {
  std::size_t unit = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over sentences
  std::size_t n_sentences = 0;
  std::optional<bool> above_reference;

  bool operator==(const DivergenceValue&) const = default;
};

struct DivergenceReport {
  Granularity granularity = Granularity::layer;
  std::vector<DivergenceValue> values;
  std::optional<std::vector<DivergenceValue>> reference;

  bool operator==(const DivergenceReport&) const = default;
};

struct DivergenceOptions {
  DivergenceMetric metric = DivergenceMetric::symmetrized_kl;
  QuarterAggregation quarter_aggregation = QuarterAggregation::mean_matrix;
  std::size_t jobs = 1;
};

/// Layer ranges [begin, end) of the four quarters: quarter k covers layers
/// floor(kL/4) .. floor((k+1)L/4) - 1. Throws UsageError when L < 4.
std::vector<std::pair<std::size_t, std::size_t>> quarter_bounds(std::size_t n_layers);

/// Requires equal depth; one value per layer.
DivergenceReport layerwise_divergence(const AttentionRun& a, const AttentionRun& b,
                                      const DivergenceOptions& options = {});

/// Any depths >= 4; one value per quarter.
DivergenceReport quarterwise_divergence(const AttentionRun& a, const AttentionRun& b,
                                        const DivergenceOptions& options = {});

/// Layerwise when depths match (and quarters are not forced), else quarterwise.
DivergenceReport compare_runs(const AttentionRun& a, const AttentionRun& b,
                              const DivergenceOptions& options = {}, bool force_quarters = false);

/// Attaches `reference` and sets above_reference = mean > reference mean per
/// unit. Granularity and unit count must agree.
void flag_against_reference(DivergenceReport& report, const DivergenceReport& reference);

/// Divergence between the span-restricted prefixed run and the plain run of
/// the same model, flagged against the reference. The granularity follows
/// the reference: layerwise when depths agree, quarterwise otherwise.
DivergenceReport instruction_sensitivity(const AttentionRun& plain, const AttentionRun& prefixed,
                                         const DivergenceReport& reference,
                                         const DivergenceOptions& options = {});

}  // namespace gaze_attn
