#include "spectral_forge/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/rng.hpp"

namespace sforge {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::UnknownClassId: return "UnknownClassId";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateReference: return "DegenerateReference";
    case ErrorCode::MissingWavelengths: return "MissingWavelengths";
    case ErrorCode::EmptyBand: return "EmptyBand";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::EmptyBackgroundPool: return "EmptyBackgroundPool";
    case ErrorCode::TargetAbsent: return "TargetAbsent";
    case ErrorCode::InsufficientBackground: return "InsufficientBackground";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ClassMismatch: return "ClassMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AlgorithmSetMismatch: return "AlgorithmSetMismatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::SplitOverlap: return "SplitOverlap";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// LabelSet

LabelSet::LabelSet(std::vector<Entry> entries, ClassId background_id)
    : entries_(std::move(entries)), background_(background_id) {
  if (entries_.empty()) fail(ErrorCode::InvalidArgument, "label set is empty");
  if (entries_.size() > 256) fail(ErrorCode::InvalidArgument, "label set exceeds 256 classes");
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.id < b.id; });
  std::set<std::string> names;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != i) fail(ErrorCode::InvalidArgument, "class ids must be contiguous from 0 and unique");
    if (!names.insert(entries_[i].name).second)
      fail(ErrorCode::InvalidArgument, "duplicate class name '" + entries_[i].name + "'");
  }
  if (!contains(background_)) fail(ErrorCode::InvalidArgument, "background id is not a member of the label set");
}

LabelSetPtr LabelSet::surgical_default() {
  static const LabelSetPtr instance = [] {
    static constexpr std::array<const char*, 19> names = {
        "background",  "heart",          "lung",      "stomach",          "small_bowel",
        "colon",       "liver",          "gallbladder", "pancreas",       "kidney",
        "kidney_with_Gerotas_fascia",    "spleen",    "bladder",          "subcutaneous_fat",
        "skin",        "muscle",         "omentum",   "peritoneum",       "major_vein"};
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < names.size(); ++i) entries.push_back({static_cast<ClassId>(i), names[i]});
    return std::make_shared<const LabelSet>(std::move(entries), 0);
  }();
  return instance;
}

LabelSetPtr LabelSet::generic(std::size_t n) {
  if (n < 1 || n > 256) fail(ErrorCode::InvalidArgument, "generic label set needs 1..256 classes");
  std::vector<Entry> entries;
  entries.push_back({0, "background"});
  for (std::size_t i = 1; i < n; ++i) entries.push_back({static_cast<ClassId>(i), "class_" + std::to_string(i)});
  return std::make_shared<const LabelSet>(std::move(entries), 0);
}

LabelSetPtr LabelSet::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("label set JSON: ") + e.what());
  }
  try {
    std::vector<Entry> entries;
    for (const auto& e : j.at("classes")) {
      const int id = e.at("id").get<int>();
      if (id < 0 || id > 255) fail(ErrorCode::InvalidArgument, "class id out of range");
      entries.push_back({static_cast<ClassId>(id), e.at("name").get<std::string>()});
    }
    const int bg = j.value("background_id", 0);
    if (bg < 0 || bg > 255) fail(ErrorCode::InvalidArgument, "background id out of range");
    return std::make_shared<const LabelSet>(std::move(entries), static_cast<ClassId>(bg));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("label set JSON: ") + e.what());
  }
}

std::string LabelSet::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& e : entries_) classes.push_back({{"id", e.id}, {"name", e.name}});
  return nlohmann::json{{"background_id", background_}, {"classes", classes}}.dump(2);
}

std::optional<ClassId> LabelSet::find(const std::string& n) const {
  for (const auto& e : entries_)
    if (e.name == n) return e.id;
  return std::nullopt;
}

bool LabelSet::operator==(const LabelSet& other) const {
  if (background_ != other.background_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].id != other.entries_[i].id || entries_[i].name != other.entries_[i].name) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Payload validation

void SpectralCube::validate() const {
  if (height == 0 || width == 0 || channels == 0) fail(ErrorCode::InvalidArgument, "cube has a zero dimension");
  if (data.size() != height * width * channels)
    fail(ErrorCode::HeaderMismatch, "cube data length does not equal H*W*C");
  if (wavelengths_nm) {
    if (wavelengths_nm->size() != channels)
      fail(ErrorCode::HeaderMismatch, "wavelength list length does not equal channel count");
    for (std::size_t i = 1; i < wavelengths_nm->size(); ++i)
      if (!((*wavelengths_nm)[i] > (*wavelengths_nm)[i - 1]))
        fail(ErrorCode::InvalidArgument, "wavelengths must be strictly increasing");
  }
  for (float v : data)
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "cube contains a non-finite value");
}

std::vector<ClassId> SemanticMask::present_classes() const {
  std::array<bool, 256> seen{};
  for (ClassId l : labels) seen[l] = true;
  std::vector<ClassId> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(static_cast<ClassId>(i));
  return out;
}

std::size_t SemanticMask::count(ClassId id) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), id));
}

void SemanticMask::validate() const {
  if (!label_set) fail(ErrorCode::InvalidArgument, "mask has no label set");
  if (labels.size() != height * width) fail(ErrorCode::HeaderMismatch, "mask data length does not equal H*W");
  for (ClassId l : labels)
    if (!label_set->contains(l))
      fail(ErrorCode::UnknownClassId, "class id " + std::to_string(l) + " is not in the label set");
}

bool SemanticMask::operator==(const SemanticMask& other) const {
  if (height != other.height || width != other.width || labels != other.labels) return false;
  if (label_set == other.label_set) return true;
  return label_set && other.label_set && *label_set == *other.label_set;
}

void LabeledScene::validate() const {
  cube.validate();
  mask.validate();
  if (cube.height != mask.height || cube.width != mask.width)
    fail(ErrorCode::HeaderMismatch, "cube is " + std::to_string(cube.height) + "x" + std::to_string(cube.width) +
                                        " but mask is " + std::to_string(mask.height) + "x" +
                                        std::to_string(mask.width));
}

void validate_batch(std::span<const LabeledScene> batch) {
  if (batch.empty()) fail(ErrorCode::InvalidArgument, "batch is empty");
  const auto& first = batch.front();
  for (const auto& s : batch) {
    if (s.cube.channels != first.cube.channels)
      fail(ErrorCode::ChannelMismatch, "batch scenes differ in channel count");
    if (!s.mask.label_set || !first.mask.label_set || !(*s.mask.label_set == *first.mask.label_set))
      fail(ErrorCode::ClassMismatch, "batch scenes use different label sets");
  }
}

}  // namespace sforge
