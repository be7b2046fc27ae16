#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "spectral_forge/error.hpp"
#include "spectral_forge/io.hpp"
#include "spectral_forge/pipeline.hpp"

using namespace sforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Four scenes from two subjects written as a dataset under `dir`.
fs::path write_fixture(const fs::path& dir, std::uint64_t seed) {
  Rng rng(seed);
  auto labels = LabelSet::surgical_default();
  io::DatasetManifest m;
  m.name = "fixture";
  for (int i = 0; i < 4; ++i) {
    auto s = testing::random_scene(rng, 12, 12, 3, labels, "img" + std::to_string(i), "pig" + std::to_string(i / 2));
    io::save_scene(s, dir / (s.image_id + ".cube"), dir / (s.image_id + ".png"));
    m.scenes.push_back({s.image_id + ".cube", s.image_id + ".png", s.subject_id, s.image_id, std::nullopt});
  }
  io::save_manifest(m, dir / "manifest.json");
  return dir / "manifest.json";
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("augment output does not depend on the thread count") {
    auto dir = testing::scratch_dir("pipe_aug");
    const auto manifest = write_fixture(dir, 1);
    pipeline::AugmentJob job;
    job.manifest = manifest;
    job.config.seed = 42;
    job.batch_size = 4;
    for (unsigned t : {1U, 3U}) {
      job.out_dir = dir / ("out" + std::to_string(t));
      job.records = dir / ("records" + std::to_string(t) + ".json");
      job.threads = t;
      pipeline::augment_manifest(job);
    }
    CHECK(io::read_text(dir / "records1.json") == io::read_text(dir / "records3.json"));
    for (int i = 0; i < 4; ++i) {
      const auto name = "img" + std::to_string(i);
      CHECK(io::read_text(dir / "out1" / (name + ".cube")) == io::read_text(dir / "out3" / (name + ".cube")));
      CHECK(io::read_text(dir / "out1" / (name + ".png")) == io::read_text(dir / "out3" / (name + ".png")));
    }
    CHECK(io::load_and_verify_manifest(dir / "out1" / "manifest.json").scenes.size() == 4);
  }

  TEST_CASE("perfect predictions score one; report carries provenance") {
    auto dir = testing::scratch_dir("pipe_eval");
    const auto manifest = write_fixture(dir, 2);
    pipeline::EvaluateJob job;
    job.pred_manifest = manifest;
    job.ref_manifest = manifest;
    job.out = dir / "report.json";
    job.algorithm = "oracle";
    job.dataset = "fixture";
    pipeline::evaluate_manifests(job);
    const auto j = json::parse(io::read_text(job.out));
    CHECK(j["metrics"]["dsc"]["grand_mean"] == 1.0);
    CHECK(j["metrics"]["nsd"]["grand_mean"] == 1.0);
    CHECK(j["provenance"]["command"] == "evaluate");
    CHECK(j["algorithm"] == "oracle");
  }

  TEST_CASE("missing prediction is a data error") {
    auto dir = testing::scratch_dir("pipe_missing");
    const auto manifest = write_fixture(dir, 3);
    io::write_text(dir / "pred.json", R"([{"mask":"img0.png","subject_id":"pig0","image_id":"img0"}])");
    pipeline::EvaluateJob job;
    job.pred_manifest = dir / "pred.json";
    job.ref_manifest = manifest;
    job.out = dir / "r.json";
    try {
      pipeline::evaluate_manifests(job);
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingFile);
    }
  }

  TEST_CASE("rank accepts plain class-value reports") {
    auto dir = testing::scratch_dir("pipe_rank");
    io::write_text(dir / "a.json", R"({"algorithm":"a","dataset":"d","class_values":[0.9,0.8,0.7]})");
    io::write_text(dir / "b.json", R"({"algorithm":"b","dataset":"d","class_values":[0.1,0.2,0.3]})");
    pipeline::RankJob job;
    job.reports = {dir / "a.json", dir / "b.json"};
    job.n_boot = 100;
    job.seed = 7;
    job.out = dir / "rank.json";
    job.csv = dir / "rank.csv";
    pipeline::rank_reports(job);
    const auto j = json::parse(io::read_text(job.out));
    CHECK(j["overall"][0]["algorithm"] == "a");
    const auto first = io::read_text(job.out);
    pipeline::rank_reports(job);
    CHECK(io::read_text(job.out) == first);
  }
}
