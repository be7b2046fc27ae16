#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectral_forge/scene.hpp"

namespace sforge::metrics {

enum class Metric { Dsc, Nsd };

std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);

/// 2|P & R| / (|P| + |R|) for P = {pred == l}, R = {ref == l}; nullopt when
/// both sets are empty. Throws DimensionMismatch.
std::optional<double> dsc(const SemanticMask& pred, const SemanticMask& ref, ClassId l);

/// Foreground pixels of class l with at least one 4-neighbour that is not
/// class l; pixels outside the image count as not class l.
std::vector<std::uint8_t> boundary(const SemanticMask& mask, ClassId l);

/// Exact squared Euclidean distance from every pixel to the nearest nonzero
/// seed (separable lower-envelope algorithm). Pixels are +infinity when there
/// is no seed at all.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> seeds, std::size_t height,
                                               std::size_t width);

/// Normalized surface distance at tolerance tau (pixels). nullopt when both
/// boundaries are empty, 0 when exactly one is. Throws DimensionMismatch or
/// InvalidArgument (negative tau).
std::optional<double> nsd(const SemanticMask& pred, const SemanticMask& ref, ClassId l, double tau);

/// Per-class NSD tolerances in pixels.
struct NsdThresholds {
  double default_tau = 2.0;
  std::map<ClassId, double> per_class;

  [[nodiscard]] double tau(ClassId l) const;
  /// {"default": 2.0, "classes": {"3": 1.5, ...}}. Class keys may be ids or
  /// names when a label set is supplied.
  static NsdThresholds from_json(const std::string& text, const LabelSet* labels = nullptr);
  [[nodiscard]] std::string to_json() const;
};

struct ClassImageScore {
  std::string image_id;
  std::string subject_id;
  ClassId class_id = 0;
  Metric metric = Metric::Dsc;
  std::optional<double> value;
};

/// Scores for every class present in pred or ref (absent classes omitted).
std::vector<ClassImageScore> score_image(const SemanticMask& pred, const SemanticMask& ref, std::string_view image_id,
                                         std::string_view subject_id, std::span<const Metric> which,
                                         const NsdThresholds& thresholds);

struct SubjectClassValue {
  std::string subject_id;
  ClassId class_id = 0;
  double value = 0.0;
  std::size_t n_images = 0;
};

struct ClassValue {
  ClassId class_id = 0;
  double value = 0.0;
  std::size_t n_subjects = 0;
};

/// Hierarchical aggregate: images -> (subject, class) means -> class means
/// across subjects -> grand mean over classes.
struct MetricReport {
  Metric metric = Metric::Dsc;
  std::vector<ClassImageScore> images;       // leaves (present values only), canonical order
  std::vector<SubjectClassValue> subjects;   // sorted by (subject, class)
  std::vector<ClassValue> classes;           // sorted by class
  double grand_mean = 0.0;

  [[nodiscard]] std::optional<double> class_value(ClassId l) const;
};

/// Requires one metric across all scores. Absent values are skipped at every
/// level. Throws EmptyInput when no present value remains.
MetricReport aggregate(std::span<const ClassImageScore> scores);

/// Score of class `score.class_id` in the image `score.image_id` after the
/// class `removed` was taken out of it.
struct RemovalScore {
  ClassImageScore score;
  ClassId removed = 0;
};

/// Per (image, class): minimum over removal variants (variants where the
/// observed class is the removed one are ignored), then aggregate().
MetricReport aggregate_removal(std::span<const RemovalScore> scores);

/// Delta[removed r][observed l] = aggregated metric of l under removal of r
/// minus the baseline aggregate of l.
struct ImpactMatrix {
  std::vector<ClassId> removed;
  std::vector<ClassId> observed;
  std::vector<std::optional<double>> delta;  // row-major, removed x observed

  static constexpr double kNegligible = 0.01;

  [[nodiscard]] std::optional<double> at(ClassId r, ClassId l) const;
  [[nodiscard]] static bool negligible(double d) { return d > -kNegligible && d < kNegligible; }
  /// removed,observed,delta,negligible rows; absent entries are skipped.
  [[nodiscard]] std::string to_csv(const LabelSet* labels = nullptr) const;
};

/// Throws ClassMismatch when a removal score observes a class the baseline
/// does not report, or when the metrics differ.
ImpactMatrix removal_impact_matrix(const MetricReport& baseline, std::span<const RemovalScore> removal);

}  // namespace sforge::metrics
