#include <doctest.h>

#include "helpers.hpp"
#include "invariants.hpp"
#include "spectral_forge/augment.hpp"
#include "spectral_forge/error.hpp"

using namespace sforge;
using namespace sforge::augment;

namespace {

AugmentationConfig plain(Kind kind, double p = 1.0, std::uint64_t seed = 7) {
  AugmentationConfig cfg;
  cfg.kind = kind;
  cfg.probability = p;
  cfg.seed = seed;
  cfg.geometric.enabled = false;
  return cfg;
}

constexpr Kind kAllKinds[] = {Kind::GeometricOnly, Kind::HideAndSeek, Kind::RandomErasing, Kind::Jigsaw,
                              Kind::CutMix,        Kind::CutPas,      Kind::OrganTransplantation};
constexpr Kind kMixing[] = {Kind::Jigsaw, Kind::CutMix, Kind::CutPas, Kind::OrganTransplantation};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST_SUITE("augment") {
  TEST_CASE("kind names round trip") {
    for (Kind k : kAllKinds) CHECK(parse_kind(kind_name(k)) == k);
    CHECK(code_of([] { parse_kind("mixup"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("config JSON round trip and validation") {
    AugmentationConfig cfg = plain(Kind::CutMix, 0.3, 99);
    cfg.class_pool = {1, 2};
    cfg.geometric.max_rotation_deg = 10;
    const auto back = AugmentationConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(code_of([] { AugmentationConfig::from_json(R"({"p": 1.5})"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { AugmentationConfig::from_json(R"({"grid_rows": 0})"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("grid cells tile the image") {
    std::vector<int> hits(7 * 9, 0);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        const auto cell = kernels::grid_cell(7, 9, 4, 4, r, c);
        for (std::size_t y = cell.top; y < cell.top + cell.height; ++y)
          for (std::size_t x = cell.left; x < cell.left + cell.width; ++x) ++hits[y * 9 + x];
      }
    for (int h : hits) CHECK(h == 1);
  }

  TEST_CASE("transplant kernel copies exactly the chosen classes") {
    Rng rng(1);
    auto labels = LabelSet::generic(4);
    auto a = testing::random_scene(rng, 6, 6, 3, labels, "a");
    const auto b = testing::random_scene(rng, 6, 6, 3, labels, "b");
    const auto before = a;
    const ClassId cls[] = {2};
    const std::size_t n = kernels::transplant(a, b, cls);
    CHECK(n == b.mask.count(2));
    for (std::size_t p = 0; p < 36; ++p)
      CHECK(testing::same_pixel(a, p, b.mask.labels[p] == 2 ? b : before, p));
  }

  TEST_CASE("p = 0 leaves every batch untouched") {
    Rng rng(2);
    auto labels = LabelSet::generic(4);
    const auto batch = testing::random_batch(rng, 4, 8, 8, 3, labels);
    for (Kind k : kAllKinds) {
      CAPTURE(kind_name(k));
      CHECK(testing::check_identity(batch, augment::apply(batch, plain(k, 0.0))) == "");
    }
  }

  TEST_CASE("same seed gives identical output, any thread count") {
    Rng rng(3);
    auto labels = LabelSet::generic(4);
    const auto batch = testing::random_batch(rng, 5, 10, 9, 3, labels);
    for (Kind k : kAllKinds) {
      CAPTURE(kind_name(k));
      AugmentationConfig cfg = plain(k, 0.7);
      cfg.geometric.enabled = true;
      cfg.bg_fraction = 0.0;
      const auto a = augment::apply(batch, cfg, 3, 1);
      const auto b = augment::apply(batch, cfg, 3, 4);
      CHECK(a.batch == b.batch);
      CHECK(a.records == b.records);
      cfg.seed += 1;
      const auto c = augment::apply(batch, cfg, 3, 1);
      CHECK((c.batch != a.batch || c.records != a.records));
    }
  }

  TEST_CASE("mixing transforms keep spectra and labels together") {
    Rng rng(4);
    auto labels = LabelSet::generic(5);
    const auto batch = testing::random_batch(rng, 5, 8, 8, 2, labels);
    for (Kind k : kMixing) {
      CAPTURE(kind_name(k));
      auto cfg = plain(k);
      cfg.bg_fraction = 0.0;
      CHECK(testing::check_label_consistency(batch, augment::apply(batch, cfg)) == "");
    }
  }

  TEST_CASE("organ transplantation: donor content copied verbatim") {
    Rng rng(5);
    auto labels = LabelSet::generic(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto batch = testing::random_batch(rng, 4, 7, 7, 2, labels);
      auto cfg = plain(Kind::OrganTransplantation, 0.8, trial);
      cfg.n_transplant_classes = 1 + trial % 3;
      CHECK(testing::check_transplant(batch, augment::apply(batch, cfg)) == "");
    }
  }

  TEST_CASE("organ transplantation respects the class pool") {
    Rng rng(6);
    auto labels = LabelSet::generic(5);
    const auto batch = testing::random_batch(rng, 4, 8, 8, 2, labels);
    auto cfg = plain(Kind::OrganTransplantation);
    cfg.class_pool = {3};
    const auto out = augment::apply(batch, cfg);
    for (const auto& r : out.records)
      for (ClassId c : r.transplanted_classes) CHECK(c == 3);
  }

  TEST_CASE("jigsaw conserves the per-pixel multiset") {
    Rng rng(7);
    auto labels = LabelSet::generic(4);
    const auto batch = testing::random_batch(rng, 3, 9, 11, 2, labels);
    auto cfg = plain(Kind::Jigsaw);
    cfg.patch_swap_prob = 1.0;
    const auto out = augment::apply(batch, cfg);
    CHECK(testing::check_multiset(batch, out) == "");
    CHECK(out.batch != batch);
  }

  TEST_CASE("hide-and-seek blacks out whole grid cells") {
    Rng rng(8);
    auto labels = LabelSet::generic(3);
    const auto batch = testing::random_batch(rng, 1, 8, 8, 2, labels);
    auto cfg = plain(Kind::HideAndSeek);
    cfg.patch_drop_prob = 1.0;
    const auto out = augment::apply(batch, cfg);
    for (float v : out.batch[0].cube.data) CHECK(v == 0.0F);
    CHECK(out.batch[0].mask == batch[0].mask);
    cfg.relabel_erased = true;
    const auto relabelled = augment::apply(batch, cfg);
    for (ClassId l : relabelled.batch[0].mask.labels) CHECK(l == 255);
  }

  TEST_CASE("random erasing stays inside the area bounds") {
    Rng rng(9);
    auto labels = LabelSet::generic(3);
    auto batch = testing::random_batch(rng, 6, 20, 20, 1, labels);
    for (auto& s : batch)
      for (auto& v : s.cube.data) v = 1.0F;
    const auto out = augment::apply(batch, plain(Kind::RandomErasing));
    for (const auto& r : out.records) {
      if (!r.note.empty()) continue;
      CHECK(r.affected_pixels > 0);
      CHECK(r.affected_pixels <= static_cast<std::size_t>(0.33 * 400 * 1.25 + 1));
    }
  }

  TEST_CASE("cutmix pastes one rectangle from a donor") {
    Rng rng(10);
    auto labels = LabelSet::generic(3);
    const auto batch = testing::random_batch(rng, 3, 12, 12, 2, labels);
    const auto out = augment::apply(batch, plain(Kind::CutMix));
    for (std::size_t i = 0; i < 3; ++i)
      if (out.records[i].applied) CHECK(out.records[i].donor_image_ids.size() == 1);
  }

  TEST_CASE("cutpas pastes objects into a background-dominant recipient") {
    Rng rng(11);
    auto labels = LabelSet::generic(3);
    Batch batch = testing::random_batch(rng, 3, 8, 8, 2, labels);
    for (auto& l : batch[0].mask.labels) l = 0;  // the only background-heavy scene
    for (auto& s : {1, 2})
      for (auto& l : batch[s].mask.labels) l = 1;
    auto cfg = plain(Kind::CutPas);
    cfg.bg_fraction = 0.9;
    const auto out = augment::apply(batch, cfg);
    CHECK(out.batch[1] == batch[1]);
    CHECK(out.batch[2] == batch[2]);
    CHECK(out.records[0].applied);
    CHECK(out.batch[0].mask.count(1) == 64);
  }

  TEST_CASE("mixing preconditions") {
    Rng rng(12);
    auto labels = LabelSet::generic(3);
    const auto one = testing::random_batch(rng, 1, 4, 4, 2, labels);
    for (Kind k : kMixing) CHECK(code_of([&] { augment::apply(one, plain(k)); }) == ErrorCode::BatchTooSmall);
    auto two = testing::random_batch(rng, 2, 4, 4, 2, labels);
    two[1] = testing::random_scene(rng, 5, 4, 2, labels, "odd");
    CHECK(code_of([&] { augment::apply(two, plain(Kind::CutMix)); }) == ErrorCode::DimensionMismatch);
    auto no_bg = testing::random_batch(rng, 2, 4, 4, 2, labels);
    for (auto& s : no_bg)
      for (auto& l : s.mask.labels) l = 1;
    auto cfg = plain(Kind::CutPas);
    cfg.bg_fraction = 0.5;
    CHECK(code_of([&] { augment::apply(no_bg, cfg); }) == ErrorCode::EmptyBackgroundPool);
  }

  TEST_CASE("geometric stage") {
    auto labels = LabelSet::generic(3);
    LabeledScene s;
    s.cube = SpectralCube(4, 4, 1);
    s.mask = SemanticMask(4, 4, labels);
    for (std::size_t p = 0; p < 16; ++p) {
      s.cube.data[p] = static_cast<float>(p);
      s.mask.labels[p] = static_cast<ClassId>(p % 3);
    }
    CHECK(geometric_baseline(s, {}) == s);

    GeometricParams rot;
    rot.rotation_deg = 90;
    const auto r = geometric_baseline(s, rot);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) {
        CHECK(r.mask.at(x, 3 - y) == s.mask.at(y, x));
        CHECK(r.cube.at(x, 3 - y, 0) == doctest::Approx(s.cube.at(y, x, 0)));
      }

    GeometricParams flip;
    flip.flip_horizontal = true;
    const auto f = geometric_baseline(s, flip);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) CHECK(f.mask.at(y, 3 - x) == s.mask.at(y, x));

    GeometricParams shift;
    shift.shift_cols = 0.5;
    const auto sh = geometric_baseline(s, shift);
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(sh.mask.at(y, 0) == labels->background_id());
      CHECK(sh.cube.at(y, 0, 0) == 0.0F);
      CHECK(sh.mask.at(y, 2) == s.mask.at(y, 0));
    }
  }

  TEST_CASE("records serialise") {
    Rng rng(13);
    auto labels = LabelSet::generic(3);
    const auto batch = testing::random_batch(rng, 2, 4, 4, 2, labels);
    const auto out = augment::apply(batch, plain(Kind::OrganTransplantation));
    const auto text = records_to_json(out.records);
    CHECK(text.find("\"image_id\"") != std::string::npos);
    CHECK(text.find("\"affected_pixels\"") != std::string::npos);
  }
}
