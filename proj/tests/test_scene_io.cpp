#include <doctest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "spectral_forge/error.hpp"
#include "spectral_forge/io.hpp"

using namespace sforge;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST_SUITE("scene_model") {
  TEST_CASE("surgical label set") {
    auto set = LabelSet::surgical_default();
    CHECK(set->size() == 19);
    CHECK(set->background_id() == 0);
    CHECK(set->name(0) == "background");
    CHECK(set->find("kidney_with_Gerotas_fascia") == ClassId{10});
    CHECK(set->find("appendix") == std::nullopt);
  }

  TEST_CASE("label set JSON round trip and rejection") {
    auto set = LabelSet::generic(4);
    CHECK(*LabelSet::from_json(set->to_json()) == *set);
    CHECK(code_of([] { LabelSet({{0, "a"}, {2, "b"}}, 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { LabelSet({{0, "a"}, {1, "a"}}, 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { LabelSet({{0, "a"}}, 3); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("mask with unknown class id is rejected") {
    SemanticMask m(2, 2, LabelSet::generic(3));
    m.labels[3] = 7;
    CHECK(code_of([&] { m.validate(); }) == ErrorCode::UnknownClassId);
  }

  TEST_CASE("cube validation") {
    SpectralCube c(2, 2, 3, 0.5F);
    CHECK_NOTHROW(c.validate());
    c.data[4] = std::nanf("");
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::NonFiniteValue);
    SpectralCube w(1, 1, 2);
    w.wavelengths_nm = std::vector<double>{500.0};
    CHECK(code_of([&] { w.validate(); }) != ErrorCode::Ok);
  }

  TEST_CASE("scene dimension agreement") {
    LabeledScene s;
    s.cube = SpectralCube(2, 3, 1);
    s.mask = SemanticMask(3, 2, LabelSet::generic(2));
    CHECK(code_of([&] { s.validate(); }) != ErrorCode::Ok);
  }

  TEST_CASE("batch checks") {
    sforge::Rng rng(1);
    auto labels = LabelSet::generic(3);
    auto batch = testing::random_batch(rng, 2, 4, 4, 3, labels);
    CHECK_NOTHROW(validate_batch(batch));
    batch[1].cube = SpectralCube(4, 4, 2);
    CHECK(code_of([&] { validate_batch(batch); }) == ErrorCode::ChannelMismatch);
  }
}

TEST_SUITE("io") {
  TEST_CASE("cube and mask round trip") {
    auto dir = testing::scratch_dir("io_roundtrip");
    sforge::Rng rng(2);
    auto labels = LabelSet::surgical_default();
    auto s = testing::random_scene(rng, 5, 7, 4, labels, "a");
    s.cube.wavelengths_nm = std::vector<double>{500, 600, 700, 800};
    io::save_scene(s, dir / "a.cube", dir / "a.png");
    auto back = io::load_scene(dir / "a.cube", dir / "a.png", labels, "s0", "a");
    CHECK(back == s);
  }

  TEST_CASE("non-finite scene is rejected before anything is written") {
    auto dir = testing::scratch_dir("io_nan");
    sforge::Rng rng(3);
    auto s = testing::random_scene(rng, 3, 3, 2, LabelSet::generic(2), "a");
    s.cube.data[0] = std::numeric_limits<float>::infinity();
    CHECK(code_of([&] { io::save_scene(s, dir / "a.cube", dir / "a.png"); }) == ErrorCode::NonFiniteValue);
    CHECK_FALSE(std::filesystem::exists(dir / "a.cube"));
    CHECK_FALSE(std::filesystem::exists(dir / "a.png"));
  }

  TEST_CASE("header size mismatch and missing files") {
    auto dir = testing::scratch_dir("io_header");
    io::save_cube(SpectralCube(2, 2, 2, 1.0F), dir / "c.cube");
    io::write_text(io::sidecar_path(dir / "c.cube"), R"({"height":3,"width":2,"channels":2})");
    CHECK(code_of([&] { io::load_cube(dir / "c.cube"); }) == ErrorCode::HeaderMismatch);
    CHECK(code_of([&] { io::load_cube(dir / "nope.cube"); }) == ErrorCode::MissingFile);
  }

  TEST_CASE("mask with class outside the label set") {
    auto dir = testing::scratch_dir("io_mask");
    SemanticMask m(2, 2, LabelSet::generic(10));
    m.labels[1] = 9;
    io::save_mask(m, dir / "m.png");
    CHECK(code_of([&] { io::load_mask(dir / "m.png", LabelSet::generic(3)); }) == ErrorCode::UnknownClassId);
  }

  TEST_CASE("manifest round trip, bare list form and duplicates") {
    auto dir = testing::scratch_dir("io_manifest");
    sforge::Rng rng(4);
    auto labels = LabelSet::surgical_default();
    io::DatasetManifest m;
    m.name = "fx";
    m.split = io::SplitTag::Fold;
    m.fold = 2;
    for (int i = 0; i < 2; ++i) {
      auto s = testing::random_scene(rng, 3, 3, 2, labels, "img" + std::to_string(i), "pig1");
      io::save_scene(s, dir / (s.image_id + ".cube"), dir / (s.image_id + ".png"));
      m.scenes.push_back({s.image_id + ".cube", s.image_id + ".png", "pig1", s.image_id, std::nullopt});
    }
    io::save_manifest(m, dir / "manifest.json");
    auto back = io::load_and_verify_manifest(dir / "manifest.json");
    CHECK(back.name == "fx");
    CHECK(back.split == io::SplitTag::Fold);
    CHECK(back.fold == 2);
    REQUIRE(back.scenes.size() == 2);
    CHECK(back.load(1, labels).image_id == "img1");

    io::write_text(dir / "list.json",
                   R"([{"cube":"img0.cube","mask":"img0.png","subject_id":"pig1","image_id":"img0"}])");
    CHECK(io::load_and_verify_manifest(dir / "list.json").scenes.size() == 1);

    io::write_text(dir / "dup.json", R"([{"cube":"img0.cube","mask":"img0.png","subject_id":"pig1","image_id":"img0"},
                                          {"cube":"img1.cube","mask":"img1.png","subject_id":"pig1","image_id":"img0"}])");
    CHECK(code_of([&] { io::load_and_verify_manifest(dir / "dup.json"); }) == ErrorCode::HeaderMismatch);
  }

  TEST_CASE("subject split overlap") {
    io::DatasetManifest a, b;
    a.scenes.push_back({"x", "x", "pig1", "i1", std::nullopt});
    b.scenes.push_back({"y", "y", "pig2", "i2", std::nullopt});
    CHECK_NOTHROW(io::check_subject_split(a, b));
    b.scenes.push_back({"z", "z", "pig1", "i3", std::nullopt});
    CHECK(code_of([&] { io::check_subject_split(a, b); }) == ErrorCode::SplitOverlap);
  }

  TEST_CASE("shipped surgical label file matches the built-in set") {
    auto set = io::load_label_set(std::filesystem::path(SFORGE_SOURCE_DIR) / "data" / "labels_surgical.json");
    CHECK(*set == *LabelSet::surgical_default());
  }
}
