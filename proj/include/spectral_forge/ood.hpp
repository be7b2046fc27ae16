#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "spectral_forge/io.hpp"
#include "spectral_forge/scene.hpp"

namespace sforge::ood {

enum class Mode { IsolationZero, IsolationBgr, RemovalZero, RemovalBgr };

std::string_view mode_name(Mode mode) noexcept;
Mode parse_mode(std::string_view name);
[[nodiscard]] constexpr bool is_isolation(Mode m) noexcept { return m == Mode::IsolationZero || m == Mode::IsolationBgr; }
[[nodiscard]] constexpr bool uses_background(Mode m) noexcept { return m == Mode::IsolationBgr || m == Mode::RemovalBgr; }

struct SynthesisSpec {
  Mode mode = Mode::IsolationZero;
  ClassId target = 0;
  /// Source of replacement spectra for the *_bgr modes: its background-labelled
  /// pixels are sampled uniformly with replacement, per replaced pixel.
  const LabeledScene* background_source = nullptr;
  std::uint64_t seed = 0;
};

/// Keeps pixels labelled `spec.target`; every other pixel gets a zero or
/// background spectrum and the background label.
/// Throws TargetAbsent, InsufficientBackground or InvalidArgument.
LabeledScene isolate(const LabeledScene& scene, const SynthesisSpec& spec);

/// Replaces pixels labelled `spec.target` with zero or background spectra and
/// relabels them background. Throws TargetAbsent or InsufficientBackground.
LabeledScene remove(const LabeledScene& scene, const SynthesisSpec& spec);

/// Labels of `scene` that qualify as targets (non-background, present).
std::vector<ClassId> eligible_targets(const LabeledScene& scene);

/// Output file stem for one synthesized scene.
std::string synthesized_id(std::string_view image_id, Mode mode, ClassId target);

struct SynthesisOptions {
  Mode mode = Mode::IsolationZero;
  std::optional<LabeledScene> background;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Applies the mode to every scene and eligible label of the manifest,
/// writes cubes, masks and `manifest.json` into `out_dir`, and returns the
/// written manifest.
io::DatasetManifest synthesize_dataset(const io::DatasetManifest& manifest, const SynthesisOptions& options,
                                       const std::filesystem::path& out_dir);

}  // namespace sforge::ood
