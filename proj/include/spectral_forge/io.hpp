#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectral_forge/scene.hpp"

namespace sforge::io {

namespace fs = std::filesystem;

/// Cube files are raw little-endian float32 (H, W, C order) with a JSON
/// sidecar next to them at `<cube_path>.json`.
fs::path sidecar_path(const fs::path& cube_path);

SpectralCube load_cube(const fs::path& cube_path);
void save_cube(const SpectralCube& cube, const fs::path& cube_path);

/// 8-bit grayscale PNG, pixel value = class id.
SemanticMask load_mask(const fs::path& png_path, LabelSetPtr label_set);
void save_mask(const SemanticMask& mask, const fs::path& png_path);

LabeledScene load_scene(const fs::path& cube_path, const fs::path& mask_path, LabelSetPtr label_set,
                        std::string subject_id = {}, std::string image_id = {});
/// Validates before writing anything; a scene with non-finite values is
/// rejected with NonFiniteValue and no file is touched.
void save_scene(const LabeledScene& scene, const fs::path& cube_path, const fs::path& mask_path);

LabelSetPtr load_label_set(const fs::path& path);

enum class SplitTag { Unspecified, Train, Test, Fold };

/// Provenance of scenes produced by the OOD synthesizer.
struct OodOrigin {
  std::string mode;
  ClassId target_label = 0;
  std::string source_image_id;
};

struct SceneRecord {
  fs::path cube;  // relative to the manifest directory when written
  fs::path mask;
  std::string subject_id;
  std::string image_id;
  std::optional<OodOrigin> ood;
};

struct DatasetManifest {
  std::string name;
  SplitTag split = SplitTag::Unspecified;
  int fold = -1;  // meaningful only for SplitTag::Fold
  std::optional<fs::path> label_set_path;
  std::vector<SceneRecord> scenes;

  /// Directory the manifest was loaded from (paths resolve against it).
  fs::path base_dir;

  [[nodiscard]] fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
  [[nodiscard]] LabelSetPtr label_set() const;
  [[nodiscard]] LabeledScene load(std::size_t index, const LabelSetPtr& labels) const;
};

std::string split_tag_name(SplitTag tag, int fold = -1);

/// Accepts either a bare JSON list of scene records or an object with
/// "name", "split", "label_set" and "scenes".
DatasetManifest load_manifest(const fs::path& path);
/// Parses and checks that every referenced file exists and loads. Also
/// rejects duplicate (subject_id, image_id) pairs.
DatasetManifest load_and_verify_manifest(const fs::path& path);
void save_manifest(const DatasetManifest& manifest, const fs::path& path);

/// Throws SplitOverlap if a subject occurs in both.
void check_subject_split(const DatasetManifest& train, const DatasetManifest& test);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace sforge::io
