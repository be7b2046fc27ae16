#include "spectral_forge/ood.hpp"

#include <algorithm>
#include <array>

#include "spectral_forge/error.hpp"
#include "spectral_forge/parallel.hpp"
#include "spectral_forge/rng.hpp"

namespace sforge::ood {

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 4> kModeNames = {{
    {Mode::IsolationZero, "isolation_zero"},
    {Mode::IsolationBgr, "isolation_bgr"},
    {Mode::RemovalZero, "removal_zero"},
    {Mode::RemovalBgr, "removal_bgr"},
}};

/// Replaces every pixel with replace[p] set. Fill spectra come from the
/// background source (bgr) or are zero.
LabeledScene replace_pixels(const LabeledScene& scene, const std::vector<bool>& replace, const SynthesisSpec& spec) {
  const ClassId bg = scene.mask.label_set->background_id();
  const std::size_t n_fill = static_cast<std::size_t>(std::count(replace.begin(), replace.end(), true));

  std::vector<std::size_t> source_pixels;
  if (uses_background(spec.mode)) {
    if (spec.background_source == nullptr)
      fail(ErrorCode::InvalidArgument, std::string(mode_name(spec.mode)) + " requires a background source scene");
    const LabeledScene& src = *spec.background_source;
    if (src.cube.channels != scene.cube.channels)
      fail(ErrorCode::ChannelMismatch, "background source channel count differs from the scene");
    const ClassId src_bg = src.mask.label_set->background_id();
    for (std::size_t p = 0; p < src.mask.labels.size(); ++p)
      if (src.mask.labels[p] == src_bg) source_pixels.push_back(p);
    if (source_pixels.size() < n_fill || source_pixels.empty())
      fail(ErrorCode::InsufficientBackground, "background source has " + std::to_string(source_pixels.size()) +
                                                  " background pixels, " + std::to_string(n_fill) + " needed");
  }

  LabeledScene out = scene;
  Rng rng = Rng::stream(spec.seed, spec.target, static_cast<std::uint64_t>(spec.mode));
  for (std::size_t p = 0; p < replace.size(); ++p) {
    if (!replace[p]) continue;
    auto dst = out.cube.pixel(p);
    if (source_pixels.empty()) {
      std::fill(dst.begin(), dst.end(), 0.0F);
    } else {
      const auto src = spec.background_source->cube.pixel(source_pixels[rng.below(source_pixels.size())]);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    out.mask.labels[p] = bg;
  }
  return out;
}

void require_target(const LabeledScene& scene, ClassId target) {
  if (scene.mask.count(target) == 0)
    fail(ErrorCode::TargetAbsent, "label " + std::to_string(target) + " is absent from scene '" + scene.image_id + "'");
}

}  // namespace

std::string_view mode_name(Mode mode) noexcept {
  for (const auto& [m, n] : kModeNames)
    if (m == mode) return n;
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (const auto& [m, n] : kModeNames)
    if (n == name) return m;
  fail(ErrorCode::InvalidArgument, "unknown synthesis mode '" + std::string(name) + "'");
}

LabeledScene isolate(const LabeledScene& scene, const SynthesisSpec& spec) {
  if (!is_isolation(spec.mode)) fail(ErrorCode::InvalidArgument, "isolate() needs an isolation mode");
  if (spec.target == scene.mask.label_set->background_id())
    fail(ErrorCode::InvalidArgument, "background cannot be an isolation target");
  require_target(scene, spec.target);
  std::vector<bool> replace(scene.mask.pixels());
  for (std::size_t p = 0; p < replace.size(); ++p) replace[p] = scene.mask.labels[p] != spec.target;
  return replace_pixels(scene, replace, spec);
}

LabeledScene remove(const LabeledScene& scene, const SynthesisSpec& spec) {
  if (is_isolation(spec.mode)) fail(ErrorCode::InvalidArgument, "remove() needs a removal mode");
  if (spec.target == scene.mask.label_set->background_id())
    fail(ErrorCode::InvalidArgument, "background cannot be a removal target");
  require_target(scene, spec.target);
  std::vector<bool> replace(scene.mask.pixels());
  for (std::size_t p = 0; p < replace.size(); ++p) replace[p] = scene.mask.labels[p] == spec.target;
  return replace_pixels(scene, replace, spec);
}

std::vector<ClassId> eligible_targets(const LabeledScene& scene) {
  auto present = scene.mask.present_classes();
  std::erase(present, scene.mask.label_set->background_id());
  return present;
}

std::string synthesized_id(std::string_view image_id, Mode mode, ClassId target) {
  return std::string(image_id) + "__" + std::string(mode_name(mode)) + "__" + std::to_string(target);
}

io::DatasetManifest synthesize_dataset(const io::DatasetManifest& manifest, const SynthesisOptions& options,
                                       const std::filesystem::path& out_dir) {
  if (uses_background(options.mode) && !options.background)
    fail(ErrorCode::InvalidArgument, std::string(mode_name(options.mode)) + " requires a background scene");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string());

  const LabelSetPtr labels = manifest.label_set();
  std::vector<std::vector<io::SceneRecord>> produced(manifest.scenes.size());

  parallel_for(manifest.scenes.size(), options.threads, [&](std::size_t i) {
    const LabeledScene scene = manifest.load(i, labels);
    for (ClassId target : eligible_targets(scene)) {
      SynthesisSpec spec;
      spec.mode = options.mode;
      spec.target = target;
      spec.background_source = options.background ? &*options.background : nullptr;
      spec.seed = mix64(options.seed ^ mix64(i));
      LabeledScene out = is_isolation(options.mode) ? isolate(scene, spec) : remove(scene, spec);
      const std::string id = synthesized_id(scene.image_id, options.mode, target);
      out.image_id = id;
      io::save_scene(out, out_dir / (id + ".cube"), out_dir / (id + ".png"));
      produced[i].push_back(io::SceneRecord{id + ".cube", id + ".png", scene.subject_id, id,
                                            io::OodOrigin{std::string(mode_name(options.mode)), target,
                                                          scene.image_id}});
    }
  });

  io::DatasetManifest out;
  out.name = manifest.name + "_" + std::string(mode_name(options.mode));
  out.split = manifest.split;
  out.fold = manifest.fold;
  out.base_dir = out_dir;
  if (manifest.label_set_path) {
    io::write_text(out_dir / "labels.json", labels->to_json() + "\n");
    out.label_set_path = "labels.json";
  }
  for (auto& recs : produced)
    for (auto& r : recs) out.scenes.push_back(std::move(r));
  io::save_manifest(out, out_dir / "manifest.json");
  return out;
}

}  // namespace sforge::ood
