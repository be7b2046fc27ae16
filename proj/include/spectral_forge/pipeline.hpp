#pragma once

// File-level workflows behind the CLI subcommands. Every function reads its
// inputs from disk, writes its primary outputs, and embeds the configuration
// it ran with in a "provenance" block of each JSON report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectral_forge/augment.hpp"
#include "spectral_forge/metrics.hpp"

namespace sforge::pipeline {

namespace fs = std::filesystem;

void calibrate_files(const fs::path& raw, const fs::path& white, const fs::path& dark, const fs::path& out);

void rgb_file(const fs::path& in, const fs::path& out, const std::optional<fs::path>& bands_json);

struct AugmentJob {
  fs::path manifest;
  augment::AugmentationConfig config;
  fs::path out_dir;
  std::optional<fs::path> records;
  std::size_t batch_size = 5;
  unsigned threads = 1;
};

/// Cuts the manifest into consecutive batches, augments each, writes the
/// scenes plus `manifest.json` into out_dir and optionally the records.
void augment_manifest(const AugmentJob& job);

struct SynthesizeJob {
  fs::path manifest;
  std::string mode;
  fs::path out_dir;
  /// Background image cube; its mask (`background_mask`) marks which pixels
  /// may be sampled. Without a mask every pixel counts as background.
  std::optional<fs::path> background;
  std::optional<fs::path> background_mask;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void synthesize_manifest(const SynthesizeJob& job);

struct EvaluateJob {
  fs::path pred_manifest;
  fs::path ref_manifest;
  std::vector<metrics::Metric> metrics{metrics::Metric::Dsc, metrics::Metric::Nsd};
  std::optional<fs::path> thresholds;
  fs::path out;
  std::string algorithm;
  std::string dataset;
  /// Baseline report for the removal impact matrix (removal datasets only).
  std::optional<fs::path> impact_baseline;
  std::optional<fs::path> impact_csv;
  unsigned threads = 1;
};

/// Scores predictions against references matched by image_id. Reference
/// scenes produced by a removal mode are aggregated with the minimum rule.
void evaluate_manifests(const EvaluateJob& job);

struct RankJob {
  std::vector<fs::path> reports;
  std::string metric = "dsc";
  std::size_t n_boot = 1000;
  std::uint64_t seed = 0;
  fs::path out;
  std::optional<fs::path> csv;
};

void rank_reports(const RankJob& job);

struct DemoTrainJob {
  fs::path world;
  std::vector<double> p_grid{0.2, 0.4, 0.6, 0.8, 1.0};
  fs::path out_csv;
  std::optional<std::size_t> epochs;
  std::optional<fs::path> world_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void demo_train(const DemoTrainJob& job);

}  // namespace sforge::pipeline
