#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spectral_forge/augment.hpp"
#include "spectral_forge/metrics.hpp"
#include "spectral_forge/scene.hpp"

namespace sforge::toy {

/// Half-width of the square context window (5 x 5).
inline constexpr std::size_t kContextRadius = 2;

/// Per-pixel features: the pixel's own spectrum followed by the mean spectrum
/// of its 5 x 5 neighbourhood (coordinates clamped at the image edge).
struct Features {
  std::size_t pixels = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // pixels x dim

  [[nodiscard]] std::span<const double> row(std::size_t p) const { return {data.data() + p * dim, dim}; }
};

Features extract_features(const SpectralCube& cube);

/// Linear pixel classifier over Features: logits = W f + b.
struct ToyModel {
  std::size_t n_classes = 0;
  std::size_t channels = 0;
  std::vector<double> weights;  // n_classes x (2 * channels), row-major
  std::vector<double> bias;     // n_classes

  static ToyModel zeros(std::size_t n_classes, std::size_t channels);
  [[nodiscard]] std::size_t feature_dim() const noexcept { return 2 * channels; }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }
  /// Flat view helpers for optimisers and gradient checks: weights then bias.
  [[nodiscard]] double param(std::size_t i) const;
  double& param(std::size_t i);

  std::string to_json() const;
  static ToyModel from_json(const std::string& text);

  bool operator==(const ToyModel&) const = default;
};

/// Row-wise softmax of logits for every pixel (pixels x n_classes).
std::vector<double> predict_probabilities(const ToyModel& model, const Features& features);

/// Argmax per pixel, ties to the lowest class id. Throws ChannelMismatch.
SemanticMask predict(const ToyModel& model, const LabeledScene& scene);

inline constexpr double kDiceSmoothing = 1e-6;

/// Mean over classes present in `labels` of (2 sum p y + eps) / (sum p + sum y + eps).
double soft_dice(std::span<const double> probs, std::span<const ClassId> labels, std::size_t n_classes);
/// Mean negative log-likelihood of the true class.
double cross_entropy(std::span<const double> probs, std::span<const ClassId> labels, std::size_t n_classes);

struct LossWeights {
  double dice = 0.5;
  double ce = 0.5;
};

struct Sample {
  Features features;
  std::vector<ClassId> labels;
};

Sample make_sample(const LabeledScene& scene);

/// Mean over samples of dice_w * (1 - soft_dice) + ce_w * CE. When `grad` is
/// non-null it receives d loss / d params, shaped like the model.
double loss(const ToyModel& model, std::span<const Sample> batch, const LossWeights& weights,
            ToyModel* grad = nullptr);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 5;
  double learning_rate = 0.05;
  double lr_decay = 0.97;  // multiplicative, per epoch
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LossWeights loss_weights;
  augment::AugmentationConfig augmentation;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument.
  void validate() const;

  /// Defaults overridden by the optional "train" object of a world file:
  /// {"epochs", "batch_size", "learning_rate", "lr_decay"}.
  static TrainConfig from_world_json(const std::string& text);
};

struct TrainResult {
  ToyModel model;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Adam on the combined loss. Each epoch shuffles the scenes, cuts batches,
/// runs them through augment::apply (epoch and batch index key the streams)
/// and takes one step per batch. Throws EmptyInput or DivergenceDetected.
TrainResult train(ToyModel model, std::span<const LabeledScene> scenes, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Synthetic world

/// Scenes where organs come in pairs (A_i, B_i): A_i is always drawn as a thin
/// strip sharing an edge with B_i. Each A organ's spectrum is a slightly offset
/// copy of another pair's B organ, so its identity is cheap to read from the
/// neighbourhood and expensive to read from the pixel itself.
struct SyntheticWorldConfig {
  std::size_t n_classes = 7;  // background + pairs, must be odd and >= 3
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 8;
  std::size_t train_subjects = 10;
  std::size_t test_subjects = 4;
  std::size_t scenes_per_subject = 4;
  double noise_sigma = 0.02;
  /// Per-channel offset between an A organ and the B organ it imitates.
  double a_separation = 0.04;
  /// Strip thickness; at most 2 keeps every A pixel within the 5 x 5 window
  /// of its partner.
  std::size_t strip_min = 1;
  std::size_t strip_max = 2;
  /// Optional explicit mean spectra (n_classes x channels); generated when empty.
  std::vector<std::vector<double>> class_spectra;
  std::uint64_t seed = 0;

  void validate() const;
  static SyntheticWorldConfig from_json(const std::string& text);
  [[nodiscard]] std::string to_json() const;

  /// Designated neighbour of a class (its pair partner); background maps to
  /// itself.
  [[nodiscard]] ClassId partner(ClassId c) const;
  [[nodiscard]] std::vector<std::vector<double>> mean_spectra() const;
};

struct World {
  LabelSetPtr labels;
  std::vector<LabeledScene> train;
  std::vector<LabeledScene> test;          // in-distribution
  std::vector<LabeledScene> test_isolation;  // isolation_zero built from `test`
};

World generate_world(const SyntheticWorldConfig& cfg);

/// True when every non-background class present shares at least one
/// 4-neighbour edge with its partner.
bool adjacency_holds(const SemanticMask& mask, const SyntheticWorldConfig& cfg);

/// Writes train/test/isolation scenes and a manifest per split under `dir`.
void write_world(const World& world, const std::string& dir);

struct SweepRow {
  double p = 0.0;
  double in_dist_dsc = 0.0;
  double ood_dsc = 0.0;
  double in_dist_nsd = 0.0;
  double ood_nsd = 0.0;
  std::vector<double> epoch_loss;
};

/// Hierarchically aggregated report of a model on a scene set.
metrics::MetricReport evaluate(const ToyModel& model, std::span<const LabeledScene> scenes, metrics::Metric metric,
                               const metrics::NsdThresholds& thresholds = {});

/// Trains a p = 0 baseline plus one Organ Transplantation model per grid
/// value and scores each on the in-distribution and isolation test sets.
std::vector<SweepRow> sweep_p(const World& world, std::span<const double> p_grid, const TrainConfig& base,
                              unsigned threads = 1);

std::string sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace sforge::toy
