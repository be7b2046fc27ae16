#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectral_forge/rng.hpp"
#include "spectral_forge/scene.hpp"

namespace sforge::augment {

enum class Kind {
  GeometricOnly,
  HideAndSeek,
  RandomErasing,
  Jigsaw,
  CutMix,
  CutPas,
  OrganTransplantation,
};

std::string_view kind_name(Kind kind) noexcept;
/// Accepts the snake_case names (e.g. "organ_transplantation").
Kind parse_kind(std::string_view name);

struct Range {
  double low = 0.0;
  double high = 0.0;
};

/// One concrete spatial transform. Shifts are fractions of the image extent;
/// rotation is in degrees, positive turns pixel (r, c) towards (c, H-1-r).
struct GeometricParams {
  double shift_rows = 0.0;
  double shift_cols = 0.0;
  double scale = 1.0;
  double rotation_deg = 0.0;
  bool flip_horizontal = false;
  bool flip_vertical = false;

  [[nodiscard]] bool is_identity() const;
  bool operator==(const GeometricParams&) const = default;
};

/// Sampling ranges for the shared geometric stage. Each of shift, scale,
/// rotation, horizontal flip and vertical flip is applied independently with
/// `apply_prob`.
struct GeometricConfig {
  bool enabled = true;
  double max_shift_fraction = 0.1;
  Range scale{0.9, 1.1};
  double max_rotation_deg = 45.0;
  double apply_prob = 0.5;
};

struct AugmentationConfig {
  Kind kind = Kind::OrganTransplantation;
  double probability = 1.0;
  GeometricConfig geometric;

  std::size_t grid_rows = 4;
  std::size_t grid_cols = 4;
  double patch_drop_prob = 0.5;  // hide-and-seek
  double patch_swap_prob = 0.5;  // jigsaw
  Range erase_area{0.02, 0.33};
  Range erase_aspect{0.3, 3.3};
  Range cutmix_area{0.0, 1.0};
  std::size_t n_transplant_classes = 1;
  /// Classes eligible for transplantation; empty means every class.
  std::vector<ClassId> class_pool;
  /// CutPas: scenes with at least this fraction of background pixels form
  /// the recipient pool.
  double bg_fraction = 0.5;
  /// Noise transforms: write `ignore_label` under blacked-out pixels instead
  /// of keeping the original labels.
  bool relabel_erased = false;
  ClassId ignore_label = 255;

  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;

  /// Throws InvalidArgument.
  void validate() const;

  static AugmentationConfig from_json(const std::string& text);
  [[nodiscard]] std::string to_json() const;
};

struct AugmentationRecord {
  std::string image_id;
  bool applied = false;
  std::vector<std::string> donor_image_ids;
  std::vector<ClassId> transplanted_classes;
  /// Pixels whose value (any channel) or label differs from the stage input.
  std::size_t affected_pixels = 0;
  std::string note;
  std::optional<GeometricParams> geometric;

  bool operator==(const AugmentationRecord&) const = default;
};

std::string records_to_json(std::span<const AugmentationRecord> records);

struct AugmentResult {
  Batch batch;
  std::vector<AugmentationRecord> records;
};

/// Random streams. Every scene owns one stream per stage, keyed by
/// (seed, stage, epoch, batch index, scene index), so scenes can be processed
/// in any order or in parallel with identical results.
enum class Stage : std::uint64_t { Geometric = 1, Kind = 2 };
Rng scene_stream(std::uint64_t seed, Stage stage, std::uint64_t epoch, std::uint64_t batch_index,
                 std::uint64_t scene_index);

GeometricParams sample_geometric(const GeometricConfig& cfg, Rng& rng);

/// Applies the same spatial transform to cube (bilinear) and mask (nearest
/// neighbour). Out-of-canvas pixels become zero spectra with the background
/// label.
LabeledScene geometric_baseline(const LabeledScene& scene, const GeometricParams& params);

// Kind-specific stages. Each scene is selected independently with
// cfg.probability; the first draw of its Kind stream decides selection.

AugmentResult hide_and_seek(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0,
                            unsigned threads = 1);
AugmentResult random_erasing(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0,
                             unsigned threads = 1);
/// Throws BatchTooSmall.
AugmentResult jigsaw(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0);
/// Throws BatchTooSmall.
AugmentResult cutmix(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0,
                     unsigned threads = 1);
/// Throws BatchTooSmall.
AugmentResult organ_transplantation(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0,
                                    unsigned threads = 1);
/// Each selected scene acts as an object source: its chosen non-background
/// classes are pasted into a recipient drawn from the background-dominant
/// pool. Throws BatchTooSmall, or EmptyBackgroundPool when a scene is
/// selected but no scene qualifies for the pool.
AugmentResult cutpas(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0);

/// Geometric stage (if enabled) followed by the configured kind.
AugmentResult apply(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index = 0,
                    unsigned threads = 1);

/// Deterministic kernels the stages are built from.
namespace kernels {

struct Rect {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  [[nodiscard]] std::size_t area() const { return height * width; }
};

/// Grid cell (row, col) of a rows x cols tiling; tiles are ceil(H/rows) tall
/// and ceil(W/cols) wide, trailing tiles may be smaller or empty.
Rect grid_cell(std::size_t height, std::size_t width, std::size_t rows, std::size_t cols, std::size_t row,
               std::size_t col);

/// Zeros all channels inside the rectangle; optionally relabels.
void black_out(LabeledScene& scene, const Rect& rect, std::optional<ClassId> relabel = std::nullopt);
/// Copies cube pixels and labels inside the rectangle from donor.
void paste_rect(LabeledScene& recipient, const LabeledScene& donor, const Rect& rect);
/// Exchanges cube pixels and labels inside the rectangle.
void swap_rect(LabeledScene& a, LabeledScene& b, const Rect& rect);
/// For every donor pixel whose label is in `classes`, copies spectrum and
/// label into the recipient at the same coordinates. Returns the number of
/// pixels written.
std::size_t transplant(LabeledScene& recipient, const LabeledScene& donor, std::span<const ClassId> classes);

/// Pixels where any channel or the label differs.
std::size_t count_changed(const LabeledScene& before, const LabeledScene& after);

}  // namespace kernels

}  // namespace sforge::augment
