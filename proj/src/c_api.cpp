#include "spectral_forge/spectral_forge.h"

#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "spectral_forge/augment.hpp"
#include "spectral_forge/error.hpp"
#include "spectral_forge/io.hpp"
#include "spectral_forge/metrics.hpp"
#include "spectral_forge/parallel.hpp"
#include "spectral_forge/pipeline.hpp"

using nlohmann::json;
using namespace sforge;

struct sf_label_set {
  LabelSetPtr ptr;
};

struct sf_scene {
  LabeledScene scene;
};

namespace {

thread_local std::string g_last_error;

sf_status set_error(sf_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
sf_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return SF_OK;
  } catch (const Error& e) {
    return set_error(static_cast<sf_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(SF_INVALID_ARGUMENT, std::string("JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SF_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SF_INTERNAL, e.what());
  } catch (...) {
    return set_error(SF_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

std::optional<pipeline::fs::path> opt_path(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return pipeline::fs::path(j[key].get<std::string>());
}

unsigned threads_of(const json& j) {
  const unsigned t = j.value("threads", 0U);
  return t == 0 ? default_thread_count() : t;
}

void run_job(const std::string& command, const json& j) {
  namespace p = pipeline;
  if (command == "calibrate") {
    p::calibrate_files(j.at("raw").get<std::string>(), j.at("white").get<std::string>(),
                       j.at("dark").get<std::string>(), j.at("out").get<std::string>());
  } else if (command == "rgb") {
    p::rgb_file(j.at("in").get<std::string>(), j.at("out").get<std::string>(), opt_path(j, "bands"));
  } else if (command == "augment") {
    p::AugmentJob job;
    job.manifest = j.at("manifest").get<std::string>();
    job.config = augment::AugmentationConfig::from_json(j.value("config", json::object()).dump());
    job.out_dir = j.at("out_dir").get<std::string>();
    job.records = opt_path(j, "records");
    job.batch_size = j.value("batch_size", job.batch_size);
    job.threads = threads_of(j);
    p::augment_manifest(job);
  } else if (command == "synthesize") {
    p::SynthesizeJob job;
    job.manifest = j.at("manifest").get<std::string>();
    job.mode = j.at("mode").get<std::string>();
    job.out_dir = j.at("out_dir").get<std::string>();
    job.background = opt_path(j, "background");
    job.background_mask = opt_path(j, "background_mask");
    job.seed = j.value("seed", job.seed);
    job.threads = threads_of(j);
    p::synthesize_manifest(job);
  } else if (command == "evaluate") {
    p::EvaluateJob job;
    job.pred_manifest = j.at("pred").get<std::string>();
    job.ref_manifest = j.at("ref").get<std::string>();
    if (j.contains("metrics")) {
      job.metrics.clear();
      for (const auto& m : j["metrics"]) job.metrics.push_back(metrics::parse_metric(m.get<std::string>()));
    }
    job.thresholds = opt_path(j, "thresholds");
    job.out = j.at("out").get<std::string>();
    job.algorithm = j.value("algorithm", std::string("algorithm"));
    job.dataset = j.value("dataset", std::string("dataset"));
    job.impact_baseline = opt_path(j, "impact_baseline");
    job.impact_csv = opt_path(j, "impact_csv");
    job.threads = threads_of(j);
    p::evaluate_manifests(job);
  } else if (command == "rank") {
    p::RankJob job;
    for (const auto& r : j.at("reports")) job.reports.emplace_back(r.get<std::string>());
    job.metric = j.value("metric", job.metric);
    job.n_boot = j.value("n_boot", job.n_boot);
    job.seed = j.value("seed", job.seed);
    job.out = j.at("out").get<std::string>();
    job.csv = opt_path(j, "csv");
    p::rank_reports(job);
  } else if (command == "demo-train") {
    p::DemoTrainJob job;
    job.world = j.at("world").get<std::string>();
    if (j.contains("p_grid")) job.p_grid = j["p_grid"].get<std::vector<double>>();
    job.out_csv = j.at("out").get<std::string>();
    if (j.contains("epochs") && !j["epochs"].is_null()) job.epochs = j["epochs"].get<std::size_t>();
    job.world_dir = opt_path(j, "world_dir");
    job.seed = j.value("seed", job.seed);
    job.threads = threads_of(j);
    p::demo_train(job);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
  }
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "0.3.0"; }

const char* sf_status_name(sf_status status) {
  // error_code_name returns views of string literals.
  return error_code_name(static_cast<ErrorCode>(status)).data();
}

sf_status_family sf_status_family_of(sf_status status) {
  switch (status) {
    case SF_OK:
      return SF_FAMILY_OK;
    case SF_INVALID_ARGUMENT:
      return SF_FAMILY_USAGE;
    case SF_INTERNAL:
      return SF_FAMILY_INTERNAL;
    default:
      return SF_FAMILY_DATA;
  }
}

const char* sf_last_error(void) { return g_last_error.c_str(); }

void sf_string_free(char* s) { delete[] s; }

sf_status sf_label_set_surgical(sf_label_set** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new sf_label_set{LabelSet::surgical_default()};
  });
}

sf_status sf_label_set_generic(size_t n_classes, sf_label_set** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new sf_label_set{LabelSet::generic(n_classes)};
  });
}

sf_status sf_label_set_from_json(const char* text, sf_label_set** out) {
  return guarded([&] {
    require(out != nullptr && text != nullptr, "null argument");
    *out = new sf_label_set{LabelSet::from_json(text)};
  });
}

size_t sf_label_set_size(const sf_label_set* set) { return set ? set->ptr->size() : 0; }

void sf_label_set_free(sf_label_set* set) { delete set; }

sf_status sf_scene_create(size_t height, size_t width, size_t channels, const sf_label_set* labels,
                          sf_scene** out) {
  return guarded([&] {
    require(out != nullptr && labels != nullptr, "null argument");
    require(height > 0 && width > 0 && channels > 0, "scene dimensions must be positive");
    auto* s = new sf_scene;
    s->scene.cube = SpectralCube(height, width, channels);
    s->scene.mask = SemanticMask(height, width, labels->ptr, labels->ptr->background_id());
    *out = s;
  });
}

sf_status sf_scene_load(const char* cube_path, const char* mask_path, const sf_label_set* labels, sf_scene** out) {
  return guarded([&] {
    require(out != nullptr && cube_path != nullptr && mask_path != nullptr && labels != nullptr, "null argument");
    *out = new sf_scene{io::load_scene(cube_path, mask_path, labels->ptr)};
  });
}

sf_status sf_scene_save(const sf_scene* scene, const char* cube_path, const char* mask_path) {
  return guarded([&] {
    require(scene != nullptr && cube_path != nullptr && mask_path != nullptr, "null argument");
    io::save_scene(scene->scene, cube_path, mask_path);
  });
}

sf_status sf_scene_dims(const sf_scene* scene, size_t* height, size_t* width, size_t* channels) {
  return guarded([&] {
    require(scene != nullptr, "null scene");
    if (height) *height = scene->scene.cube.height;
    if (width) *width = scene->scene.cube.width;
    if (channels) *channels = scene->scene.cube.channels;
  });
}

float* sf_scene_cube(sf_scene* scene) { return scene ? scene->scene.cube.data.data() : nullptr; }

uint8_t* sf_scene_mask(sf_scene* scene) { return scene ? scene->scene.mask.labels.data() : nullptr; }

void sf_scene_free(sf_scene* scene) { delete scene; }

sf_status sf_augment_arrays(float* cubes, uint8_t* masks, size_t n, size_t h, size_t w, size_t c, size_t n_classes,
                            const char* config_json, uint64_t batch_index, char** records_json) {
  return guarded([&] {
    require(cubes != nullptr && masks != nullptr, "null array");
    require(n > 0 && h > 0 && w > 0 && c > 0, "array dimensions must be positive");
    const auto cfg = augment::AugmentationConfig::from_json(config_json ? config_json : "{}");
    const LabelSetPtr labels = LabelSet::generic(n_classes);
    const std::size_t cube_len = h * w * c;
    const std::size_t mask_len = h * w;
    Batch batch(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = batch[i];
      s.cube = SpectralCube(h, w, c);
      std::memcpy(s.cube.data.data(), cubes + i * cube_len, cube_len * sizeof(float));
      s.mask = SemanticMask(h, w, labels);
      std::memcpy(s.mask.labels.data(), masks + i * mask_len, mask_len);
      s.subject_id = "s" + std::to_string(i);
      s.image_id = std::to_string(i);
      s.validate();
    }
    auto result = augment::apply(batch, cfg, batch_index);
    for (std::size_t i = 0; i < n; ++i) {
      std::memcpy(cubes + i * cube_len, result.batch[i].cube.data.data(), cube_len * sizeof(float));
      std::memcpy(masks + i * mask_len, result.batch[i].mask.labels.data(), mask_len);
    }
    if (records_json) *records_json = dup_string(augment::records_to_json(result.records));
  });
}

sf_status sf_evaluate_masks(const uint8_t* pred, const uint8_t* ref, size_t h, size_t w, size_t n_classes,
                            const char* thresholds_json, char** scores_json) {
  return guarded([&] {
    require(pred != nullptr && ref != nullptr && scores_json != nullptr, "null argument");
    const LabelSetPtr labels = LabelSet::generic(n_classes);
    SemanticMask p(h, w, labels), r(h, w, labels);
    std::memcpy(p.labels.data(), pred, h * w);
    std::memcpy(r.labels.data(), ref, h * w);
    p.validate();
    r.validate();
    const auto thresholds = thresholds_json ? metrics::NsdThresholds::from_json(thresholds_json, labels.get())
                                            : metrics::NsdThresholds{};
    const metrics::Metric which[] = {metrics::Metric::Dsc, metrics::Metric::Nsd};
    json out = json::array();
    for (const auto& s : metrics::score_image(p, r, "image", "subject", which, thresholds)) {
      out.push_back({{"class_id", s.class_id},
                     {"metric", metrics::metric_name(s.metric)},
                     {"value", s.value ? json(*s.value) : json(nullptr)}});
    }
    *scores_json = dup_string(out.dump());
  });
}

sf_status sf_run(const char* command, const char* job_json) {
  return guarded([&] {
    require(command != nullptr && job_json != nullptr, "null argument");
    json j;
    try {
      j = json::parse(job_json);
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, std::string("job JSON: ") + e.what());
    }
    run_job(command, j);
  });
}

}  // extern "C"
