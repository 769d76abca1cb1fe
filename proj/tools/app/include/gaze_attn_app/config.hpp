#pragma once

// Analysis configuration (JSON). Relative paths resolve against the
// directory of the config file.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gaze_attn/divergence.hpp"
#include "gaze_attn/report.hpp"

namespace gaze_attn::app {

struct RunEntry {
  std::string model;
  std::string condition = "plain";
  std::filesystem::path path;
};

struct ModelPair {
  std::string a;
  std::string b;
};

struct SensitivityEntry {
  std::string model;
  std::string condition;  // condition key of the prefixed run
};

struct StatsOptions {
  double alpha = 0.05;
  std::optional<std::size_t> n_tests;      // Bonferroni denominator; default per test family
  bool correlations = true;                 // NTP loss vs resemblance from the sidecar
  bool scaling = true;
  std::vector<std::string> scaling_models;  // empty = every sidecar model with a size
  double predict_at = 1e11;
  std::vector<ModelPair> paired;            // per-layer paired t-tests over subjects
  bool group_trivial = true;                // Welch L1 vs L2 on subject trivial reliance
};

struct AnalysisConfig {
  std::filesystem::path base_dir;
  std::filesystem::path corpus;
  std::vector<RunEntry> runs;
  std::optional<std::filesystem::path> saccades;  // directory of bundles
  std::optional<std::filesystem::path> metrics;
  std::filesystem::path out = "reports";
  ReportFormat format = ReportFormat::csv;
  std::size_t jobs = 1;

  std::optional<ModelPair> reference;
  std::vector<ModelPair> divergence_pairs;
  std::vector<SensitivityEntry> sensitivity;
  DivergenceOptions divergence;
  bool force_quarters = false;

  std::vector<std::string> resemblance_models;  // empty = every plain run
  StatsOptions stats;

  const RunEntry& run(const std::string& model, const std::string& condition = "plain") const;
};

/// Parses and checks a config; referenced paths must exist. Throws
/// UsageError on any problem.
AnalysisConfig load_config(const std::filesystem::path& file);
AnalysisConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

}  // namespace gaze_attn::app
