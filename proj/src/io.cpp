#include "spectral_forge/io.hpp"

#include <png.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spectral_forge/error.hpp"

namespace sforge::io {

using nlohmann::json;

namespace {

void require_exists(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) fail(ErrorCode::MissingFile, p.string());
}

json parse_json_file(const fs::path& p) {
  const std::string text = read_text(p);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::HeaderMismatch, p.string() + ": " + e.what());
  }
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00U) | ((v << 8) & 0xFF0000U) | (v << 24);
}

}  // namespace

std::string read_text(const fs::path& path) {
  require_exists(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

fs::path sidecar_path(const fs::path& cube_path) {
  fs::path p = cube_path;
  p += ".json";
  return p;
}

// ---------------------------------------------------------------------------
// Cubes

SpectralCube load_cube(const fs::path& cube_path) {
  require_exists(cube_path);
  const fs::path header_path = sidecar_path(cube_path);
  require_exists(header_path);
  const json header = parse_json_file(header_path);

  SpectralCube cube;
  try {
    const auto h = header.at("height").get<std::int64_t>();
    const auto w = header.at("width").get<std::int64_t>();
    const auto c = header.at("channels").get<std::int64_t>();
    if (h <= 0 || w <= 0 || c <= 0) fail(ErrorCode::HeaderMismatch, "non-positive dimension in " + header_path.string());
    cube.height = static_cast<std::size_t>(h);
    cube.width = static_cast<std::size_t>(w);
    cube.channels = static_cast<std::size_t>(c);
    if (header.contains("wavelengths_nm") && !header["wavelengths_nm"].is_null())
      cube.wavelengths_nm = header["wavelengths_nm"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::HeaderMismatch, header_path.string() + ": " + e.what());
  }

  const std::size_t n = cube.height * cube.width * cube.channels;
  std::error_code ec;
  const auto size = fs::file_size(cube_path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot stat " + cube_path.string());
  if (size != n * sizeof(float))
    fail(ErrorCode::HeaderMismatch, cube_path.string() + " holds " + std::to_string(size) + " bytes, header implies " +
                                        std::to_string(n * sizeof(float)));

  cube.data.resize(n);
  std::ifstream in(cube_path, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(cube.data.data()), static_cast<std::streamsize>(n * sizeof(float))))
    fail(ErrorCode::IoError, "short read on " + cube_path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (float& v : cube.data) v = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(v)));
  }
  cube.validate();
  return cube;
}

void save_cube(const SpectralCube& cube, const fs::path& cube_path) {
  cube.validate();
  json header{{"height", cube.height}, {"width", cube.width}, {"channels", cube.channels}};
  header["wavelengths_nm"] = cube.wavelengths_nm ? json(*cube.wavelengths_nm) : json(nullptr);

  std::ofstream out(cube_path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + cube_path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(cube.data.data()),
              static_cast<std::streamsize>(cube.data.size() * sizeof(float)));
  } else {
    for (float v : cube.data) {
      const std::uint32_t le = byteswap32(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + cube_path.string());
  out.close();
  write_text(sidecar_path(cube_path), header.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Masks

SemanticMask load_mask(const fs::path& png_path, LabelSetPtr label_set) {
  require_exists(png_path);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, png_path.string().c_str()) == 0)
    fail(ErrorCode::IoError, png_path.string() + ": " + image.message);
  if (image.format != PNG_FORMAT_GRAY) {
    png_image_free(&image);
    fail(ErrorCode::HeaderMismatch, png_path.string() + " is not an 8-bit single-channel PNG");
  }
  SemanticMask mask(image.height, image.width, std::move(label_set));
  if (png_image_finish_read(&image, nullptr, mask.labels.data(), 0, nullptr) == 0)
    fail(ErrorCode::IoError, png_path.string() + ": " + image.message);
  mask.validate();
  return mask;
}

void save_mask(const SemanticMask& mask, const fs::path& png_path) {
  mask.validate();
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width);
  image.height = static_cast<png_uint_32>(mask.height);
  image.format = PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&image, png_path.string().c_str(), 0, mask.labels.data(), 0, nullptr) == 0)
    fail(ErrorCode::IoError, png_path.string() + ": " + image.message);
}

// ---------------------------------------------------------------------------
// Scenes

LabeledScene load_scene(const fs::path& cube_path, const fs::path& mask_path, LabelSetPtr label_set,
                        std::string subject_id, std::string image_id) {
  require_exists(cube_path);
  require_exists(mask_path);
  LabeledScene scene;
  scene.cube = load_cube(cube_path);
  scene.mask = load_mask(mask_path, std::move(label_set));
  scene.subject_id = std::move(subject_id);
  scene.image_id = std::move(image_id);
  scene.validate();
  return scene;
}

void save_scene(const LabeledScene& scene, const fs::path& cube_path, const fs::path& mask_path) {
  scene.validate();
  save_cube(scene.cube, cube_path);
  save_mask(scene.mask, mask_path);
}

LabelSetPtr load_label_set(const fs::path& path) { return LabelSet::from_json(read_text(path)); }

// ---------------------------------------------------------------------------
// Manifests

std::string split_tag_name(SplitTag tag, int fold) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Test: return "test";
    case SplitTag::Fold: return "fold-" + std::to_string(fold);
    case SplitTag::Unspecified: break;
  }
  return "unspecified";
}

namespace {

void parse_split(const std::string& s, DatasetManifest& m) {
  if (s == "train") {
    m.split = SplitTag::Train;
  } else if (s == "test") {
    m.split = SplitTag::Test;
  } else if (s.rfind("fold-", 0) == 0) {
    m.split = SplitTag::Fold;
    try {
      m.fold = std::stoi(s.substr(5));
    } catch (const std::exception&) {
      fail(ErrorCode::HeaderMismatch, "bad fold tag '" + s + "'");
    }
  } else if (s == "unspecified") {
    m.split = SplitTag::Unspecified;
  } else {
    fail(ErrorCode::HeaderMismatch, "unknown split tag '" + s + "'");
  }
}

SceneRecord parse_record(const json& j) {
  SceneRecord r;
  // Prediction manifests may carry masks only.
  r.cube = j.value("cube", std::string());
  r.mask = j.at("mask").get<std::string>();
  r.subject_id = j.at("subject_id").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  if (j.contains("ood") && !j["ood"].is_null()) {
    const auto& o = j["ood"];
    OodOrigin origin;
    origin.mode = o.at("mode").get<std::string>();
    const int label = o.at("target_label").get<int>();
    if (label < 0 || label > 255) fail(ErrorCode::UnknownClassId, "ood target label out of range");
    origin.target_label = static_cast<ClassId>(label);
    origin.source_image_id = o.at("source_image_id").get<std::string>();
    r.ood = origin;
  }
  return r;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  const json j = parse_json_file(path);
  DatasetManifest m;
  m.base_dir = path.parent_path();
  try {
    const json* scenes = &j;
    if (j.is_object()) {
      m.name = j.value("name", path.stem().string());
      parse_split(j.value("split", std::string("unspecified")), m);
      if (j.contains("label_set") && !j["label_set"].is_null())
        m.label_set_path = fs::path(j["label_set"].get<std::string>());
      scenes = &j.at("scenes");
    } else {
      m.name = path.stem().string();
    }
    if (!scenes->is_array()) fail(ErrorCode::HeaderMismatch, path.string() + ": scenes must be a list");
    for (const auto& rec : *scenes) m.scenes.push_back(parse_record(rec));
  } catch (const json::exception& e) {
    fail(ErrorCode::HeaderMismatch, path.string() + ": " + e.what());
  }
  return m;
}

LabelSetPtr DatasetManifest::label_set() const {
  if (label_set_path) return load_label_set(resolve(*label_set_path));
  return LabelSet::surgical_default();
}

LabeledScene DatasetManifest::load(std::size_t index, const LabelSetPtr& labels) const {
  const SceneRecord& r = scenes.at(index);
  if (r.cube.empty()) fail(ErrorCode::MissingFile, "scene '" + r.image_id + "' has no cube path");
  return load_scene(resolve(r.cube), resolve(r.mask), labels, r.subject_id, r.image_id);
}

DatasetManifest load_and_verify_manifest(const fs::path& path) {
  DatasetManifest m = load_manifest(path);
  const LabelSetPtr labels = m.label_set();
  std::set<std::pair<std::string, std::string>> ids;
  for (std::size_t i = 0; i < m.scenes.size(); ++i) {
    if (!ids.emplace(m.scenes[i].subject_id, m.scenes[i].image_id).second)
      fail(ErrorCode::HeaderMismatch, "duplicate scene (" + m.scenes[i].subject_id + ", " + m.scenes[i].image_id + ")");
    (void)m.load(i, labels);
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json scenes = json::array();
  for (const auto& r : manifest.scenes) {
    json rec{{"cube", r.cube.generic_string()},
             {"mask", r.mask.generic_string()},
             {"subject_id", r.subject_id},
             {"image_id", r.image_id}};
    if (r.ood)
      rec["ood"] = {{"mode", r.ood->mode},
                    {"target_label", r.ood->target_label},
                    {"source_image_id", r.ood->source_image_id}};
    scenes.push_back(std::move(rec));
  }
  json j{{"name", manifest.name}, {"split", split_tag_name(manifest.split, manifest.fold)}, {"scenes", scenes}};
  j["label_set"] = manifest.label_set_path ? json(manifest.label_set_path->generic_string()) : json(nullptr);
  write_text(path, j.dump(2) + "\n");
}

void check_subject_split(const DatasetManifest& train, const DatasetManifest& test) {
  std::set<std::string> train_subjects;
  for (const auto& r : train.scenes) train_subjects.insert(r.subject_id);
  for (const auto& r : test.scenes)
    if (train_subjects.count(r.subject_id) != 0U)
      fail(ErrorCode::SplitOverlap, "subject '" + r.subject_id + "' appears in both " + train.name + " and " + test.name);
}

}  // namespace sforge::io
