// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectral_forge/spectral_forge.h"

using nlohmann::json;

TEST_SUITE("c_api") {
  TEST_CASE("status names and families") {
    CHECK(std::string(sf_status_name(SF_TARGET_ABSENT)) == "TargetAbsent");
    CHECK(sf_status_family_of(SF_OK) == SF_FAMILY_OK);
    CHECK(sf_status_family_of(SF_INVALID_ARGUMENT) == SF_FAMILY_USAGE);
    CHECK(sf_status_family_of(SF_MISSING_FILE) == SF_FAMILY_DATA);
    CHECK(sf_status_family_of(SF_INTERNAL) == SF_FAMILY_INTERNAL);
    CHECK(std::string(sf_version()) == "0.3.0");
  }

  TEST_CASE("scene handles") {
    sf_label_set* labels = nullptr;
    REQUIRE(sf_label_set_surgical(&labels) == SF_OK);
    CHECK(sf_label_set_size(labels) == 19);
    sf_scene* scene = nullptr;
    REQUIRE(sf_scene_create(3, 4, 2, labels, &scene) == SF_OK);
    size_t h = 0, w = 0, c = 0;
    CHECK(sf_scene_dims(scene, &h, &w, &c) == SF_OK);
    CHECK((h == 3 && w == 4 && c == 2));
    sf_scene_cube(scene)[5] = 0.25F;
    sf_scene_mask(scene)[2] = 6;

    const auto dir = std::filesystem::temp_directory_path() / "sforge_c_api";
    std::filesystem::create_directories(dir);
    const auto cube = (dir / "s.cube").string(), mask = (dir / "s.png").string();
    CHECK(sf_scene_save(scene, cube.c_str(), mask.c_str()) == SF_OK);
    sf_scene* back = nullptr;
    REQUIRE(sf_scene_load(cube.c_str(), mask.c_str(), labels, &back) == SF_OK);
    CHECK(sf_scene_cube(back)[5] == 0.25F);
    CHECK(sf_scene_mask(back)[2] == 6);

    sf_scene_mask(scene)[0] = 200;
    CHECK(sf_scene_save(scene, cube.c_str(), mask.c_str()) == SF_UNKNOWN_CLASS_ID);
    CHECK(std::strlen(sf_last_error()) > 0);
    CHECK(sf_scene_load("/nonexistent.cube", mask.c_str(), labels, &back) != SF_OK);

    sf_scene_free(back);
    sf_scene_free(scene);
    sf_label_set_free(labels);
  }

  TEST_CASE("array augmentation is in place and deterministic") {
    const size_t n = 3, h = 6, w = 6, c = 2;
    std::vector<float> cubes(n * h * w * c);
    std::vector<uint8_t> masks(n * h * w);
    for (size_t i = 0; i < cubes.size(); ++i) cubes[i] = 0.01F * static_cast<float>(i % 50 + 1);
    for (size_t i = 0; i < masks.size(); ++i) masks[i] = static_cast<uint8_t>((i / 7) % 3);
    auto run = [&](std::vector<float> cb, std::vector<uint8_t> mk) {
      char* records = nullptr;
      REQUIRE(sf_augment_arrays(cb.data(), mk.data(), n, h, w, c, 3,
                                R"({"kind":"organ_transplantation","p":1.0,"seed":5})", 0, &records) == SF_OK);
      std::string rec(records);
      sf_string_free(records);
      return std::tuple{cb, mk, rec};
    };
    const auto a = run(cubes, masks), b = run(cubes, masks);
    CHECK(a == b);
    CHECK(json::parse(std::get<2>(a)).size() == n);
    CHECK(sf_augment_arrays(cubes.data(), masks.data(), n, h, w, c, 3, R"({"kind":"nope"})", 0, nullptr) ==
          SF_INVALID_ARGUMENT);
  }

  TEST_CASE("mask pair evaluation") {
    const uint8_t pred[4] = {0, 1, 1, 0}, ref[4] = {0, 1, 0, 0};
    char* out = nullptr;
    REQUIRE(sf_evaluate_masks(pred, ref, 2, 2, 2, nullptr, &out) == SF_OK);
    const auto j = json::parse(out);
    sf_string_free(out);
    bool seen = false;
    for (const auto& s : j)
      if (s["class_id"] == 1 && s["metric"] == "dsc") {
        CHECK(s["value"].get<double>() == doctest::Approx(2.0 / 3.0));
        seen = true;
      }
    CHECK(seen);
    const uint8_t bad[4] = {0, 9, 0, 0};
    CHECK(sf_evaluate_masks(bad, ref, 2, 2, 2, nullptr, &out) == SF_UNKNOWN_CLASS_ID);
  }

  TEST_CASE("workflow dispatch errors") {
    CHECK(sf_run("nope", "{}") == SF_INVALID_ARGUMENT);
    CHECK(sf_run("rank", "not json") == SF_INVALID_ARGUMENT);
    CHECK(sf_run("rank", R"({"reports":["/nonexistent.json"],"out":"/tmp/x.json"})") == SF_MISSING_FILE);
  }
}
