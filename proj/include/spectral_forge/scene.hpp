#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sforge {

using ClassId = std::uint8_t;

/// Class-label registry. Ids are contiguous from 0.
class LabelSet {
 public:
  struct Entry {
    ClassId id;
    std::string name;
  };

  LabelSet(std::vector<Entry> entries, ClassId background_id);

  /// Background plus the 18 surgical tissue classes.
  static std::shared_ptr<const LabelSet> surgical_default();
  /// Background (id 0) plus `n - 1` generic classes named class_1 ... class_{n-1}.
  static std::shared_ptr<const LabelSet> generic(std::size_t n);

  static std::shared_ptr<const LabelSet> from_json(const std::string& text);
  [[nodiscard]] std::string to_json() const;

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] ClassId background_id() const noexcept { return background_; }
  [[nodiscard]] bool contains(ClassId id) const noexcept { return id < entries_.size(); }
  [[nodiscard]] const std::string& name(ClassId id) const { return entries_.at(id).name; }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::optional<ClassId> find(const std::string& name) const;

  bool operator==(const LabelSet& other) const;

 private:
  std::vector<Entry> entries_;
  ClassId background_;
};

using LabelSetPtr = std::shared_ptr<const LabelSet>;

/// H x W x C reflectance array, row-major with channels innermost.
struct SpectralCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::optional<std::vector<double>> wavelengths_nm;
  std::vector<float> data;

  SpectralCube() = default;
  SpectralCube(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0F)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  [[nodiscard]] std::size_t pixels() const noexcept { return height * width; }
  [[nodiscard]] std::size_t index(std::size_t r, std::size_t c, std::size_t ch) const noexcept {
    return (r * width + c) * channels + ch;
  }
  float& at(std::size_t r, std::size_t c, std::size_t ch) { return data[index(r, c, ch)]; }
  [[nodiscard]] float at(std::size_t r, std::size_t c, std::size_t ch) const { return data[index(r, c, ch)]; }

  std::span<float> pixel(std::size_t flat) { return {data.data() + flat * channels, channels}; }
  [[nodiscard]] std::span<const float> pixel(std::size_t flat) const {
    return {data.data() + flat * channels, channels};
  }

  /// Throws NonFiniteValue, HeaderMismatch or InvalidArgument.
  void validate() const;

  bool operator==(const SpectralCube& other) const = default;
};

struct SemanticMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<ClassId> labels;
  LabelSetPtr label_set;

  SemanticMask() = default;
  SemanticMask(std::size_t h, std::size_t w, LabelSetPtr set, ClassId fill = 0)
      : height(h), width(w), labels(h * w, fill), label_set(std::move(set)) {}

  [[nodiscard]] std::size_t pixels() const noexcept { return height * width; }
  ClassId& at(std::size_t r, std::size_t c) { return labels[r * width + c]; }
  [[nodiscard]] ClassId at(std::size_t r, std::size_t c) const { return labels[r * width + c]; }

  /// Sorted distinct class ids present.
  [[nodiscard]] std::vector<ClassId> present_classes() const;
  [[nodiscard]] std::size_t count(ClassId id) const;

  /// Throws UnknownClassId or HeaderMismatch.
  void validate() const;

  bool operator==(const SemanticMask& other) const;
};

struct LabeledScene {
  SpectralCube cube;
  SemanticMask mask;
  std::string subject_id;
  std::string image_id;

  /// Checks both payloads and that their dimensions agree.
  void validate() const;

  bool operator==(const LabeledScene& other) const = default;
};

/// Scenes processed jointly by augmentations. Invariant (checked by
/// validate_batch): non-empty, shared label set and channel count.
using Batch = std::vector<LabeledScene>;

void validate_batch(std::span<const LabeledScene> batch);

}  // namespace sforge
