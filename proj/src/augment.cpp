#include "spectral_forge/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/parallel.hpp"

namespace sforge::augment {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 7> kKindNames = {{
    {Kind::GeometricOnly, "geometric_only"},
    {Kind::HideAndSeek, "hide_and_seek"},
    {Kind::RandomErasing, "random_erasing"},
    {Kind::Jigsaw, "jigsaw"},
    {Kind::CutMix, "cutmix"},
    {Kind::CutPas, "cutpas"},
    {Kind::OrganTransplantation, "organ_transplantation"},
}};

constexpr int kMaxEraseAttempts = 100;

void require_same_geometry(const Batch& batch) {
  validate_batch(batch);
  for (const auto& s : batch)
    if (s.cube.height != batch.front().cube.height || s.cube.width != batch.front().cube.width)
      fail(ErrorCode::DimensionMismatch, "mixing transforms need equally sized scenes");
}

void require_mixable(const Batch& batch) {
  if (batch.size() < 2) fail(ErrorCode::BatchTooSmall, "mixing transforms need at least two scenes");
  require_same_geometry(batch);
}

AugmentationRecord blank_record(const LabeledScene& s) {
  AugmentationRecord r;
  r.image_id = s.image_id;
  return r;
}

/// Uniform choice among the other batch members.
std::size_t draw_other(Rng& rng, std::size_t self, std::size_t n) {
  std::size_t j = rng.below(n - 1);
  return j >= self ? j + 1 : j;
}

/// Draws min(n, pool.size()) distinct entries (partial Fisher-Yates), then
/// sorts them.
std::vector<ClassId> draw_classes(Rng& rng, std::vector<ClassId> pool, std::size_t n) {
  const std::size_t take = std::min(n, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<ClassId> eligible_classes(const LabeledScene& donor, const AugmentationConfig& cfg, bool allow_background) {
  std::vector<ClassId> out;
  const ClassId bg = donor.mask.label_set->background_id();
  for (ClassId c : donor.mask.present_classes()) {
    if (!allow_background && c == bg) continue;
    if (!cfg.class_pool.empty() && std::find(cfg.class_pool.begin(), cfg.class_pool.end(), c) == cfg.class_pool.end())
      continue;
    out.push_back(c);
  }
  return out;
}

void finalize_counts(const Batch& before, AugmentResult& result) {
  for (std::size_t i = 0; i < before.size(); ++i)
    result.records[i].affected_pixels = kernels::count_changed(before[i], result.batch[i]);
}

Range read_range(const json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::array<double, 2>>();
  return Range{v[0], v[1]};
}

}  // namespace

std::string_view kind_name(Kind kind) noexcept {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  fail(ErrorCode::InvalidArgument, "unknown augmentation kind '" + std::string(name) + "'");
}

bool GeometricParams::is_identity() const {
  return shift_rows == 0.0 && shift_cols == 0.0 && scale == 1.0 && std::fmod(rotation_deg, 360.0) == 0.0 &&
         !flip_horizontal && !flip_vertical;
}

// ---------------------------------------------------------------------------
// Config

void AugmentationConfig::validate() const {
  auto check_prob = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidArgument, std::string(what) + " must lie in [0, 1]");
  };
  auto check_range = [](Range r, double lo, double hi, const char* what) {
    if (!(r.low >= lo && r.high <= hi && r.low <= r.high))
      fail(ErrorCode::InvalidArgument, std::string(what) + " must satisfy " + std::to_string(lo) +
                                           " <= low <= high <= " + std::to_string(hi));
  };
  check_prob(probability, "probability");
  check_prob(patch_drop_prob, "patch_drop_prob");
  check_prob(patch_swap_prob, "patch_swap_prob");
  check_prob(geometric.apply_prob, "geometric.apply_prob");
  check_prob(bg_fraction, "bg_fraction");
  if (grid_rows == 0 || grid_cols == 0) fail(ErrorCode::InvalidArgument, "grid must have at least one row and column");
  check_range(erase_area, 0.0, 1.0, "erase_area");
  if (!(erase_area.low > 0.0)) fail(ErrorCode::InvalidArgument, "erase_area must be positive");
  check_range(erase_aspect, 1e-9, 1e9, "erase_aspect");
  check_range(cutmix_area, 0.0, 1.0, "cutmix_area");
  check_range(geometric.scale, 1e-3, 1e3, "geometric.scale");
  if (!(geometric.max_shift_fraction >= 0.0 && geometric.max_shift_fraction <= 1.0))
    fail(ErrorCode::InvalidArgument, "geometric.max_shift_fraction must lie in [0, 1]");
  if (!(geometric.max_rotation_deg >= 0.0 && geometric.max_rotation_deg <= 180.0))
    fail(ErrorCode::InvalidArgument, "geometric.max_rotation_deg must lie in [0, 180]");
}

AugmentationConfig AugmentationConfig::from_json(const std::string& text) {
  AugmentationConfig cfg;
  try {
    const json j = json::parse(text);
    if (j.contains("kind")) cfg.kind = parse_kind(j["kind"].get<std::string>());
    cfg.probability = j.value("p", cfg.probability);
    cfg.grid_rows = j.value("grid_rows", cfg.grid_rows);
    cfg.grid_cols = j.value("grid_cols", cfg.grid_cols);
    cfg.patch_drop_prob = j.value("patch_drop_prob", cfg.patch_drop_prob);
    cfg.patch_swap_prob = j.value("patch_swap_prob", cfg.patch_swap_prob);
    cfg.erase_area = read_range(j, "erase_area_range", cfg.erase_area);
    cfg.erase_aspect = read_range(j, "erase_aspect_range", cfg.erase_aspect);
    cfg.cutmix_area = read_range(j, "cutmix_area_range", cfg.cutmix_area);
    cfg.n_transplant_classes = j.value("n_transplant_classes", cfg.n_transplant_classes);
    if (j.contains("class_pool")) {
      cfg.class_pool.clear();
      for (int c : j["class_pool"].get<std::vector<int>>()) {
        if (c < 0 || c > 255) fail(ErrorCode::InvalidArgument, "class_pool entry out of range");
        cfg.class_pool.push_back(static_cast<ClassId>(c));
      }
    }
    cfg.bg_fraction = j.value("bg_fraction", cfg.bg_fraction);
    cfg.relabel_erased = j.value("relabel_erased", cfg.relabel_erased);
    if (j.contains("ignore_label")) cfg.ignore_label = static_cast<ClassId>(j["ignore_label"].get<int>());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.epoch = j.value("epoch", cfg.epoch);
    if (j.contains("geometric")) {
      const json& g = j["geometric"];
      cfg.geometric.enabled = g.value("enabled", cfg.geometric.enabled);
      cfg.geometric.max_shift_fraction = g.value("max_shift_fraction", cfg.geometric.max_shift_fraction);
      cfg.geometric.scale = read_range(g, "scale_range", cfg.geometric.scale);
      cfg.geometric.max_rotation_deg = g.value("max_rotation_deg", cfg.geometric.max_rotation_deg);
      cfg.geometric.apply_prob = g.value("apply_prob", cfg.geometric.apply_prob);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("augmentation config JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string AugmentationConfig::to_json() const {
  json j{{"kind", kind_name(kind)},
         {"p", probability},
         {"grid_rows", grid_rows},
         {"grid_cols", grid_cols},
         {"patch_drop_prob", patch_drop_prob},
         {"patch_swap_prob", patch_swap_prob},
         {"erase_area_range", {erase_area.low, erase_area.high}},
         {"erase_aspect_range", {erase_aspect.low, erase_aspect.high}},
         {"cutmix_area_range", {cutmix_area.low, cutmix_area.high}},
         {"n_transplant_classes", n_transplant_classes},
         {"class_pool", class_pool},
         {"bg_fraction", bg_fraction},
         {"relabel_erased", relabel_erased},
         {"ignore_label", ignore_label},
         {"seed", seed},
         {"epoch", epoch},
         {"geometric",
          {{"enabled", geometric.enabled},
           {"max_shift_fraction", geometric.max_shift_fraction},
           {"scale_range", {geometric.scale.low, geometric.scale.high}},
           {"max_rotation_deg", geometric.max_rotation_deg},
           {"apply_prob", geometric.apply_prob}}}};
  return j.dump();
}

std::string records_to_json(std::span<const AugmentationRecord> records) {
  json out = json::array();
  for (const auto& r : records) {
    json rec{{"image_id", r.image_id},
             {"applied", r.applied},
             {"donor_image_ids", r.donor_image_ids},
             {"transplanted_classes", r.transplanted_classes},
             {"affected_pixels", r.affected_pixels},
             {"note", r.note}};
    if (r.geometric) {
      const auto& g = *r.geometric;
      rec["geometric"] = {{"shift_rows", g.shift_rows},     {"shift_cols", g.shift_cols},
                          {"scale", g.scale},               {"rotation_deg", g.rotation_deg},
                          {"flip_horizontal", g.flip_horizontal}, {"flip_vertical", g.flip_vertical}};
    } else {
      rec["geometric"] = nullptr;
    }
    out.push_back(std::move(rec));
  }
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// Streams and geometric stage

Rng scene_stream(std::uint64_t seed, Stage stage, std::uint64_t epoch, std::uint64_t batch_index,
                 std::uint64_t scene_index) {
  return Rng::stream(mix64(seed) ^ static_cast<std::uint64_t>(stage), epoch, batch_index, scene_index);
}

GeometricParams sample_geometric(const GeometricConfig& cfg, Rng& rng) {
  // All values are drawn unconditionally so the stream layout does not depend
  // on which transforms fire.
  GeometricParams p;
  const bool do_shift = rng.bernoulli(cfg.apply_prob);
  const double sr = rng.uniform(-cfg.max_shift_fraction, cfg.max_shift_fraction);
  const double sc = rng.uniform(-cfg.max_shift_fraction, cfg.max_shift_fraction);
  const bool do_scale = rng.bernoulli(cfg.apply_prob);
  const double scale = rng.uniform(cfg.scale.low, cfg.scale.high);
  const bool do_rotate = rng.bernoulli(cfg.apply_prob);
  const double angle = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
  const bool hflip = rng.bernoulli(cfg.apply_prob);
  const bool vflip = rng.bernoulli(cfg.apply_prob);
  if (do_shift) {
    p.shift_rows = sr;
    p.shift_cols = sc;
  }
  if (do_scale) p.scale = scale;
  if (do_rotate) p.rotation_deg = angle;
  p.flip_horizontal = hflip;
  p.flip_vertical = vflip;
  return p;
}

LabeledScene geometric_baseline(const LabeledScene& scene, const GeometricParams& params) {
  if (params.is_identity()) return scene;
  const std::size_t H = scene.cube.height;
  const std::size_t W = scene.cube.width;
  const std::size_t C = scene.cube.channels;
  const double cr = (static_cast<double>(H) - 1.0) / 2.0;
  const double cc = (static_cast<double>(W) - 1.0) / 2.0;
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const ClassId bg = scene.mask.label_set->background_id();

  auto snap = [](double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-6 ? r : x;
  };

  LabeledScene out = scene;
  std::fill(out.cube.data.begin(), out.cube.data.end(), 0.0F);
  std::fill(out.mask.labels.begin(), out.mask.labels.end(), bg);

  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      // Invert: shift, then rotate/scale about the centre, then flip.
      const double dr2 = static_cast<double>(r) - cr - params.shift_rows * static_cast<double>(H);
      const double dc2 = static_cast<double>(c) - cc - params.shift_cols * static_cast<double>(W);
      double sr = snap(cr + (cos_t * dr2 - sin_t * dc2) / params.scale);
      double sc = snap(cc + (sin_t * dr2 + cos_t * dc2) / params.scale);
      if (params.flip_vertical) sr = static_cast<double>(H) - 1.0 - sr;
      if (params.flip_horizontal) sc = static_cast<double>(W) - 1.0 - sc;

      const double nr = std::round(sr);
      const double nc = std::round(sc);
      if (nr < 0.0 || nc < 0.0 || nr > static_cast<double>(H - 1) || nc > static_cast<double>(W - 1)) continue;
      out.mask.at(r, c) = scene.mask.at(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));

      const double fr0 = std::clamp(sr, 0.0, static_cast<double>(H - 1));
      const double fc0 = std::clamp(sc, 0.0, static_cast<double>(W - 1));
      const auto r0 = static_cast<std::size_t>(std::floor(fr0));
      const auto c0 = static_cast<std::size_t>(std::floor(fc0));
      const std::size_t r1 = std::min(r0 + 1, H - 1);
      const std::size_t c1 = std::min(c0 + 1, W - 1);
      const double fr = fr0 - static_cast<double>(r0);
      const double fc = fc0 - static_cast<double>(c0);
      for (std::size_t ch = 0; ch < C; ++ch) {
        const double v = (1.0 - fr) * ((1.0 - fc) * scene.cube.at(r0, c0, ch) + fc * scene.cube.at(r0, c1, ch)) +
                         fr * ((1.0 - fc) * scene.cube.at(r1, c0, ch) + fc * scene.cube.at(r1, c1, ch));
        out.cube.at(r, c, ch) = static_cast<float>(v);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

namespace kernels {

Rect grid_cell(std::size_t height, std::size_t width, std::size_t rows, std::size_t cols, std::size_t row,
               std::size_t col) {
  const std::size_t th = (height + rows - 1) / rows;
  const std::size_t tw = (width + cols - 1) / cols;
  const std::size_t top = std::min(row * th, height);
  const std::size_t left = std::min(col * tw, width);
  return Rect{top, left, std::min(top + th, height) - top, std::min(left + tw, width) - left};
}

void black_out(LabeledScene& scene, const Rect& rect, std::optional<ClassId> relabel) {
  for (std::size_t r = rect.top; r < rect.top + rect.height; ++r) {
    for (std::size_t c = rect.left; c < rect.left + rect.width; ++c) {
      auto px = scene.cube.pixel(r * scene.cube.width + c);
      std::fill(px.begin(), px.end(), 0.0F);
      if (relabel) scene.mask.at(r, c) = *relabel;
    }
  }
}

void paste_rect(LabeledScene& recipient, const LabeledScene& donor, const Rect& rect) {
  const std::size_t C = recipient.cube.channels;
  for (std::size_t r = rect.top; r < rect.top + rect.height; ++r) {
    const std::size_t row = r * recipient.cube.width;
    std::copy_n(donor.cube.data.begin() + static_cast<std::ptrdiff_t>((row + rect.left) * C), rect.width * C,
                recipient.cube.data.begin() + static_cast<std::ptrdiff_t>((row + rect.left) * C));
    std::copy_n(donor.mask.labels.begin() + static_cast<std::ptrdiff_t>(row + rect.left), rect.width,
                recipient.mask.labels.begin() + static_cast<std::ptrdiff_t>(row + rect.left));
  }
}

void swap_rect(LabeledScene& a, LabeledScene& b, const Rect& rect) {
  const std::size_t C = a.cube.channels;
  for (std::size_t r = rect.top; r < rect.top + rect.height; ++r) {
    const std::size_t row = r * a.cube.width;
    std::swap_ranges(a.cube.data.begin() + static_cast<std::ptrdiff_t>((row + rect.left) * C),
                     a.cube.data.begin() + static_cast<std::ptrdiff_t>((row + rect.left + rect.width) * C),
                     b.cube.data.begin() + static_cast<std::ptrdiff_t>((row + rect.left) * C));
    std::swap_ranges(a.mask.labels.begin() + static_cast<std::ptrdiff_t>(row + rect.left),
                     a.mask.labels.begin() + static_cast<std::ptrdiff_t>(row + rect.left + rect.width),
                     b.mask.labels.begin() + static_cast<std::ptrdiff_t>(row + rect.left));
  }
}

std::size_t transplant(LabeledScene& recipient, const LabeledScene& donor, std::span<const ClassId> classes) {
  std::array<bool, 256> chosen{};
  for (ClassId c : classes) chosen[c] = true;
  std::size_t written = 0;
  for (std::size_t p = 0; p < donor.mask.labels.size(); ++p) {
    const ClassId label = donor.mask.labels[p];
    if (!chosen[label]) continue;
    const auto src = donor.cube.pixel(p);
    std::copy(src.begin(), src.end(), recipient.cube.pixel(p).begin());
    recipient.mask.labels[p] = label;
    ++written;
  }
  return written;
}

std::size_t count_changed(const LabeledScene& before, const LabeledScene& after) {
  std::size_t changed = 0;
  for (std::size_t p = 0; p < before.mask.labels.size(); ++p) {
    const auto a = before.cube.pixel(p);
    const auto b = after.cube.pixel(p);
    if (before.mask.labels[p] != after.mask.labels[p] || !std::equal(a.begin(), a.end(), b.begin())) ++changed;
  }
  return changed;
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Noise transforms

AugmentResult hide_and_seek(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index,
                            unsigned threads) {
  cfg.validate();
  validate_batch(batch);
  AugmentResult result{batch, {}};
  for (const auto& s : batch) result.records.push_back(blank_record(s));
  const std::optional<ClassId> relabel = cfg.relabel_erased ? std::optional(cfg.ignore_label) : std::nullopt;

  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Rng rng = scene_stream(cfg.seed, Stage::Kind, cfg.epoch, batch_index, i);
    if (!rng.bernoulli(cfg.probability)) return;
    LabeledScene& scene = result.batch[i];
    std::size_t dropped = 0;
    for (std::size_t gr = 0; gr < cfg.grid_rows; ++gr) {
      for (std::size_t gc = 0; gc < cfg.grid_cols; ++gc) {
        if (!rng.bernoulli(cfg.patch_drop_prob)) continue;
        const auto cell = kernels::grid_cell(scene.cube.height, scene.cube.width, cfg.grid_rows, cfg.grid_cols, gr, gc);
        kernels::black_out(scene, cell, relabel);
        ++dropped;
      }
    }
    result.records[i].applied = dropped > 0;
  });
  finalize_counts(batch, result);
  return result;
}

AugmentResult random_erasing(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index,
                             unsigned threads) {
  cfg.validate();
  validate_batch(batch);
  AugmentResult result{batch, {}};
  for (const auto& s : batch) result.records.push_back(blank_record(s));
  const std::optional<ClassId> relabel = cfg.relabel_erased ? std::optional(cfg.ignore_label) : std::nullopt;

  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Rng rng = scene_stream(cfg.seed, Stage::Kind, cfg.epoch, batch_index, i);
    if (!rng.bernoulli(cfg.probability)) return;
    LabeledScene& scene = result.batch[i];
    const double H = static_cast<double>(scene.cube.height);
    const double W = static_cast<double>(scene.cube.width);
    for (int attempt = 0; attempt < kMaxEraseAttempts; ++attempt) {
      const double area = rng.uniform(cfg.erase_area.low, cfg.erase_area.high) * H * W;
      const double aspect = rng.uniform(cfg.erase_aspect.low, cfg.erase_aspect.high);
      const double h = std::round(std::sqrt(area * aspect));
      const double w = std::round(std::sqrt(area / aspect));
      if (h < 1.0 || w < 1.0 || h > H || w > W) continue;
      kernels::Rect rect;
      rect.height = static_cast<std::size_t>(h);
      rect.width = static_cast<std::size_t>(w);
      rect.top = rng.below(scene.cube.height - rect.height + 1);
      rect.left = rng.below(scene.cube.width - rect.width + 1);
      kernels::black_out(scene, rect, relabel);
      result.records[i].applied = true;
      return;
    }
    result.records[i].note = "RejectionOverflow";
  });
  finalize_counts(batch, result);
  return result;
}

// ---------------------------------------------------------------------------
// Mixing transforms

AugmentResult jigsaw(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index) {
  cfg.validate();
  require_mixable(batch);
  AugmentResult result{batch, {}};
  for (const auto& s : batch) result.records.push_back(blank_record(s));
  const std::size_t H = batch.front().cube.height;
  const std::size_t W = batch.front().cube.width;

  // Swaps run sequentially in scene order on the working batch; every swap
  // is a transposition, so per-cell content is conserved across the batch.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng = scene_stream(cfg.seed, Stage::Kind, cfg.epoch, batch_index, i);
    if (!rng.bernoulli(cfg.probability)) continue;
    for (std::size_t gr = 0; gr < cfg.grid_rows; ++gr) {
      for (std::size_t gc = 0; gc < cfg.grid_cols; ++gc) {
        if (!rng.bernoulli(cfg.patch_swap_prob)) continue;
        const std::size_t j = draw_other(rng, i, batch.size());
        const auto cell = kernels::grid_cell(H, W, cfg.grid_rows, cfg.grid_cols, gr, gc);
        if (cell.area() == 0) continue;
        kernels::swap_rect(result.batch[i], result.batch[j], cell);
        for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
          auto& donors = result.records[a].donor_image_ids;
          if (std::find(donors.begin(), donors.end(), batch[b].image_id) == donors.end())
            donors.push_back(batch[b].image_id);
          result.records[a].applied = true;
        }
      }
    }
  }
  finalize_counts(batch, result);
  return result;
}

AugmentResult cutmix(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index, unsigned threads) {
  cfg.validate();
  require_mixable(batch);
  AugmentResult result{batch, {}};
  for (const auto& s : batch) result.records.push_back(blank_record(s));

  // Donor content is read from the untouched input batch.
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Rng rng = scene_stream(cfg.seed, Stage::Kind, cfg.epoch, batch_index, i);
    if (!rng.bernoulli(cfg.probability)) return;
    const std::size_t donor = draw_other(rng, i, batch.size());
    const double area = rng.uniform(cfg.cutmix_area.low, cfg.cutmix_area.high);
    const std::size_t H = batch[i].cube.height;
    const std::size_t W = batch[i].cube.width;
    kernels::Rect rect;
    rect.height = std::min(H, static_cast<std::size_t>(std::round(static_cast<double>(H) * std::sqrt(area))));
    rect.width = std::min(W, static_cast<std::size_t>(std::round(static_cast<double>(W) * std::sqrt(area))));
    rect.top = rng.below(H - rect.height + 1);
    rect.left = rng.below(W - rect.width + 1);
    if (rect.area() == 0) return;
    kernels::paste_rect(result.batch[i], batch[donor], rect);
    result.records[i].applied = true;
    result.records[i].donor_image_ids.push_back(batch[donor].image_id);
  });
  finalize_counts(batch, result);
  return result;
}

AugmentResult organ_transplantation(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index,
                                    unsigned threads) {
  cfg.validate();
  require_mixable(batch);
  AugmentResult result{batch, {}};
  for (const auto& s : batch) result.records.push_back(blank_record(s));

  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Rng rng = scene_stream(cfg.seed, Stage::Kind, cfg.epoch, batch_index, i);
    if (!rng.bernoulli(cfg.probability)) return;
    const std::size_t donor = draw_other(rng, i, batch.size());
    auto& record = result.records[i];
    record.donor_image_ids.push_back(batch[donor].image_id);
    const auto pool = eligible_classes(batch[donor], cfg, /*allow_background=*/true);
    if (pool.empty()) {
      record.note = "NoDonorClasses";
      return;
    }
    record.transplanted_classes = draw_classes(rng, pool, cfg.n_transplant_classes);
    kernels::transplant(result.batch[i], batch[donor], record.transplanted_classes);
    record.applied = true;
  });
  finalize_counts(batch, result);
  return result;
}

AugmentResult cutpas(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index) {
  cfg.validate();
  require_mixable(batch);
  AugmentResult result{batch, {}};
  for (const auto& s : batch) result.records.push_back(blank_record(s));

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& m = batch[i].mask;
    const double frac = static_cast<double>(m.count(m.label_set->background_id())) / static_cast<double>(m.pixels());
    if (frac >= cfg.bg_fraction) pool.push_back(i);
  }

  // Several sources may target the same recipient, so pastes run in scene
  // order; source content always comes from the input batch.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng = scene_stream(cfg.seed, Stage::Kind, cfg.epoch, batch_index, i);
    if (!rng.bernoulli(cfg.probability)) continue;
    if (pool.empty()) fail(ErrorCode::EmptyBackgroundPool, "no scene has a background fraction >= bg_fraction");
    std::vector<std::size_t> candidates;
    for (std::size_t k : pool)
      if (k != i) candidates.push_back(k);
    if (candidates.empty()) {
      result.records[i].note = "NoRecipient";
      continue;
    }
    const std::size_t recipient = candidates[rng.below(candidates.size())];
    const auto classes = eligible_classes(batch[i], cfg, /*allow_background=*/false);
    if (classes.empty()) {
      result.records[i].note = "NoDonorClasses";
      continue;
    }
    const auto chosen = draw_classes(rng, classes, cfg.n_transplant_classes);
    kernels::transplant(result.batch[recipient], batch[i], chosen);
    auto& record = result.records[recipient];
    record.applied = true;
    record.donor_image_ids.push_back(batch[i].image_id);
    for (ClassId c : chosen)
      if (std::find(record.transplanted_classes.begin(), record.transplanted_classes.end(), c) ==
          record.transplanted_classes.end())
        record.transplanted_classes.push_back(c);
    std::sort(record.transplanted_classes.begin(), record.transplanted_classes.end());
  }
  finalize_counts(batch, result);
  return result;
}

// ---------------------------------------------------------------------------

AugmentResult apply(const Batch& batch, const AugmentationConfig& cfg, std::uint64_t batch_index, unsigned threads) {
  cfg.validate();
  validate_batch(batch);
  Batch staged = batch;
  std::vector<GeometricParams> params(batch.size());
  if (cfg.geometric.enabled) {
    parallel_for(batch.size(), threads, [&](std::size_t i) {
      Rng rng = scene_stream(cfg.seed, Stage::Geometric, cfg.epoch, batch_index, i);
      params[i] = sample_geometric(cfg.geometric, rng);
      staged[i] = geometric_baseline(batch[i], params[i]);
    });
  }

  AugmentResult result;
  switch (cfg.kind) {
    case Kind::GeometricOnly:
      result.batch = std::move(staged);
      for (const auto& s : result.batch) result.records.push_back(blank_record(s));
      break;
    case Kind::HideAndSeek: result = hide_and_seek(staged, cfg, batch_index, threads); break;
    case Kind::RandomErasing: result = random_erasing(staged, cfg, batch_index, threads); break;
    case Kind::Jigsaw: result = jigsaw(staged, cfg, batch_index); break;
    case Kind::CutMix: result = cutmix(staged, cfg, batch_index, threads); break;
    case Kind::CutPas: result = cutpas(staged, cfg, batch_index); break;
    case Kind::OrganTransplantation: result = organ_transplantation(staged, cfg, batch_index, threads); break;
  }
  if (cfg.geometric.enabled)
    for (std::size_t i = 0; i < batch.size(); ++i) result.records[i].geometric = params[i];
  return result;
}

}  // namespace sforge::augment
