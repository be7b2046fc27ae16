#include "spectral_forge/pipeline.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/io.hpp"
#include "spectral_forge/ood.hpp"
#include "spectral_forge/parallel.hpp"
#include "spectral_forge/preprocess.hpp"
#include "spectral_forge/ranking.hpp"
#include "spectral_forge/toy.hpp"

namespace sforge::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kToolName = "spectral_forge";
constexpr const char* kToolVersion = "0.3.0";

json provenance(const std::string& command, json config) {
  return json{{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"config", std::move(config)}};
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
}

std::string opt_path(const std::optional<fs::path>& p) { return p ? p->generic_string() : std::string(); }

json report_to_json(const metrics::MetricReport& r, const LabelSet& labels, const std::string& aggregation) {
  auto name = [&](ClassId id) { return labels.contains(id) ? labels.name(id) : std::to_string(id); };
  json images = json::array();
  for (const auto& s : r.images)
    images.push_back({{"image_id", s.image_id}, {"subject_id", s.subject_id}, {"class_id", s.class_id}, {"value", *s.value}});
  json subjects = json::array();
  for (const auto& s : r.subjects)
    subjects.push_back(
        {{"subject_id", s.subject_id}, {"class_id", s.class_id}, {"value", s.value}, {"n_images", s.n_images}});
  json classes = json::array();
  for (const auto& c : r.classes)
    classes.push_back({{"class_id", c.class_id}, {"name", name(c.class_id)}, {"value", c.value}, {"n_subjects", c.n_subjects}});
  return json{{"aggregation", aggregation}, {"images", images},           {"subjects", subjects},
              {"classes", classes},         {"grand_mean", r.grand_mean}};
}

}  // namespace

// ---------------------------------------------------------------------------

void calibrate_files(const fs::path& raw, const fs::path& white, const fs::path& dark, const fs::path& out) {
  const SpectralCube raw_cube = io::load_cube(raw);
  const preprocess::CalibrationPair cal{io::load_cube(white), io::load_cube(dark)};
  io::save_cube(preprocess::calibrate(raw_cube, cal), out);
}

void rgb_file(const fs::path& in, const fs::path& out, const std::optional<fs::path>& bands_json) {
  const preprocess::RgbBands bands =
      bands_json ? preprocess::RgbBands::from_json(io::read_text(*bands_json)) : preprocess::RgbBands{};
  io::save_cube(preprocess::reconstruct_rgb(io::load_cube(in), bands), out);
}

void augment_manifest(const AugmentJob& job) {
  if (job.batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  job.config.validate();
  const io::DatasetManifest manifest = io::load_manifest(job.manifest);
  const LabelSetPtr labels = manifest.label_set();
  make_dir(job.out_dir);

  io::DatasetManifest out;
  out.name = manifest.name + "_" + std::string(augment::kind_name(job.config.kind));
  out.split = manifest.split;
  out.fold = manifest.fold;
  if (manifest.label_set_path) {
    io::write_text(job.out_dir / "labels.json", labels->to_json() + "\n");
    out.label_set_path = "labels.json";
  }
  std::vector<augment::AugmentationRecord> all_records;

  for (std::size_t start = 0, b = 0; start < manifest.scenes.size(); start += job.batch_size, ++b) {
    const std::size_t end = std::min(start + job.batch_size, manifest.scenes.size());
    Batch batch(end - start);
    parallel_for(batch.size(), job.threads, [&](std::size_t i) { batch[i] = manifest.load(start + i, labels); });
    const auto result = augment::apply(batch, job.config, b, job.threads);
    parallel_for(batch.size(), job.threads, [&](std::size_t i) {
      const auto& s = result.batch[i];
      // Relabelled masks may hold the ignore sentinel, which is outside the
      // label set; such masks are written without validation.
      io::save_cube(s.cube, job.out_dir / (s.image_id + ".cube"));
      if (job.config.relabel_erased) {
        SemanticMask m = s.mask;
        m.label_set = LabelSet::generic(256);
        io::save_mask(m, job.out_dir / (s.image_id + ".png"));
      } else {
        io::save_mask(s.mask, job.out_dir / (s.image_id + ".png"));
      }
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& rec = manifest.scenes[start + i];
      out.scenes.push_back({rec.image_id + ".cube", rec.image_id + ".png", rec.subject_id, rec.image_id, rec.ood});
    }
    all_records.insert(all_records.end(), result.records.begin(), result.records.end());
  }
  io::save_manifest(out, job.out_dir / "manifest.json");

  if (job.records) {
    json doc{{"provenance", provenance("augment", {{"manifest", job.manifest.generic_string()},
                                                    {"batch_size", job.batch_size},
                                                    {"augmentation", json::parse(job.config.to_json())}})},
             {"records", json::parse(augment::records_to_json(all_records))}};
    io::write_text(*job.records, doc.dump(2) + "\n");
  }
}

void synthesize_manifest(const SynthesizeJob& job) {
  ood::SynthesisOptions options;
  options.mode = ood::parse_mode(job.mode);
  options.seed = job.seed;
  options.threads = job.threads;
  const io::DatasetManifest manifest = io::load_manifest(job.manifest);
  if (job.background) {
    LabeledScene bg;
    bg.cube = io::load_cube(*job.background);
    const LabelSetPtr labels = manifest.label_set();
    bg.mask = job.background_mask ? io::load_mask(*job.background_mask, labels)
                                  : SemanticMask(bg.cube.height, bg.cube.width, labels, labels->background_id());
    bg.image_id = job.background->stem().string();
    bg.validate();
    options.background = std::move(bg);
  }
  ood::synthesize_dataset(manifest, options, job.out_dir);
}

void evaluate_manifests(const EvaluateJob& job) {
  if (job.metrics.empty()) fail(ErrorCode::InvalidArgument, "no metric selected");
  const io::DatasetManifest pred = io::load_manifest(job.pred_manifest);
  const io::DatasetManifest ref = io::load_manifest(job.ref_manifest);
  const LabelSetPtr labels = ref.label_set();
  const metrics::NsdThresholds thresholds =
      job.thresholds ? metrics::NsdThresholds::from_json(io::read_text(*job.thresholds), labels.get())
                     : metrics::NsdThresholds{};

  std::map<std::string, std::size_t> pred_index;
  for (std::size_t i = 0; i < pred.scenes.size(); ++i) pred_index[pred.scenes[i].image_id] = i;

  std::size_t n_removal = 0;
  for (const auto& r : ref.scenes)
    if (r.ood && r.ood->mode.rfind("removal", 0) == 0) ++n_removal;
  if (n_removal != 0 && n_removal != ref.scenes.size())
    fail(ErrorCode::InvalidArgument, "reference manifest mixes removal and non-removal scenes");
  const bool removal = n_removal != 0;

  std::vector<std::vector<metrics::ClassImageScore>> per_scene(ref.scenes.size());
  parallel_for(ref.scenes.size(), job.threads, [&](std::size_t i) {
    const auto& r = ref.scenes[i];
    const auto it = pred_index.find(r.image_id);
    if (it == pred_index.end()) fail(ErrorCode::MissingFile, "no prediction for image '" + r.image_id + "'");
    const SemanticMask ref_mask = io::load_mask(ref.resolve(r.mask), labels);
    const SemanticMask pred_mask = io::load_mask(pred.resolve(pred.scenes[it->second].mask), labels);
    const std::string image = removal ? r.ood->source_image_id : r.image_id;
    per_scene[i] = metrics::score_image(pred_mask, ref_mask, image, r.subject_id, job.metrics, thresholds);
  });

  json config{{"pred_manifest", job.pred_manifest.generic_string()},
              {"ref_manifest", job.ref_manifest.generic_string()},
              {"thresholds", json::parse(thresholds.to_json())},
              {"impact_baseline", opt_path(job.impact_baseline)}};
  json metrics_json = json::object();
  json doc{{"provenance", provenance("evaluate", config)}, {"algorithm", job.algorithm}, {"dataset", job.dataset}};

  for (metrics::Metric m : job.metrics) {
    const std::string name(metrics::metric_name(m));
    if (removal) {
      std::vector<metrics::RemovalScore> scores;
      for (std::size_t i = 0; i < ref.scenes.size(); ++i)
        for (const auto& s : per_scene[i])
          if (s.metric == m) scores.push_back({s, ref.scenes[i].ood->target_label});
      const auto report = metrics::aggregate_removal(scores);
      metrics_json[name] = report_to_json(report, *labels, "removal_minimum");

      if (job.impact_baseline && m == metrics::Metric::Dsc) {
        const json base = json::parse(io::read_text(*job.impact_baseline));
        metrics::MetricReport baseline;
        baseline.metric = m;
        for (const auto& c : base.at("metrics").at(name).at("classes"))
          baseline.classes.push_back({c.at("class_id").get<ClassId>(), c.at("value").get<double>(),
                                      c.at("n_subjects").get<std::size_t>()});
        const auto matrix = metrics::removal_impact_matrix(baseline, scores);
        if (job.impact_csv) io::write_text(*job.impact_csv, matrix.to_csv(labels.get()));
      }
    } else {
      std::vector<metrics::ClassImageScore> scores;
      for (const auto& v : per_scene)
        for (const auto& s : v)
          if (s.metric == m) scores.push_back(s);
      metrics_json[name] = report_to_json(metrics::aggregate(scores), *labels, "standard");
    }
  }
  doc["metrics"] = std::move(metrics_json);
  io::write_text(job.out, doc.dump(2) + "\n");
}

void rank_reports(const RankJob& job) {
  if (job.reports.empty()) fail(ErrorCode::EmptyInput, "no reports given");
  // dataset -> (algorithm -> class id -> value), in first-seen order
  std::vector<std::string> dataset_order;
  std::map<std::string, std::vector<std::pair<std::string, std::map<int, double>>>> by_dataset;
  for (const auto& path : job.reports) {
    const json j = json::parse(io::read_text(path));
    const std::string dataset = j.value("dataset", std::string());
    const std::string algorithm = j.value("algorithm", path.stem().string());
    std::map<int, double> values;
    try {
      if (j.contains("class_values")) {
        const auto v = j["class_values"].get<std::vector<double>>();
        for (std::size_t i = 0; i < v.size(); ++i) values[static_cast<int>(i)] = v[i];
      } else {
        for (const auto& c : j.at("metrics").at(job.metric).at("classes"))
          values[c.at("class_id").get<int>()] = c.at("value").get<double>();
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
    if (!by_dataset.count(dataset)) dataset_order.push_back(dataset);
    by_dataset[dataset].emplace_back(algorithm, std::move(values));
  }

  std::vector<ranking::DatasetRanking> rankings;
  for (const auto& dataset : dataset_order) {
    const auto& entries = by_dataset[dataset];
    std::vector<ranking::AlgorithmScores> scores;
    for (const auto& [algorithm, values] : entries) {
      if (values.size() != entries.front().second.size() ||
          !std::equal(values.begin(), values.end(), entries.front().second.begin(),
                      [](const auto& a, const auto& b) { return a.first == b.first; }))
        fail(ErrorCode::LengthMismatch, "algorithm '" + algorithm + "' reports a different class set on '" + dataset + "'");
      ranking::AlgorithmScores s{algorithm, dataset, {}};
      for (const auto& [id, v] : values) s.class_values.push_back(v);
      scores.push_back(std::move(s));
    }
    rankings.push_back(ranking::bootstrap_rank(scores, job.n_boot, job.seed));
  }
  const auto report = ranking::overall_ranking(std::move(rankings));

  json inputs = json::array();
  for (const auto& p : job.reports) inputs.push_back(p.generic_string());
  json doc = json::parse(ranking::to_json(report));
  doc["provenance"] =
      provenance("rank", {{"reports", inputs}, {"metric", job.metric}, {"n_boot", job.n_boot}, {"seed", job.seed}});
  io::write_text(job.out, doc.dump(2) + "\n");
  if (job.csv) io::write_text(*job.csv, ranking::to_csv(report));
}

void demo_train(const DemoTrainJob& job) {
  const std::string text = io::read_text(job.world);
  const auto world_cfg = toy::SyntheticWorldConfig::from_json(text);
  const toy::World world = toy::generate_world(world_cfg);
  if (job.world_dir) toy::write_world(world, job.world_dir->string());
  toy::TrainConfig cfg = toy::TrainConfig::from_world_json(text);
  cfg.seed = job.seed;
  if (job.epochs) cfg.epochs = *job.epochs;
  const auto rows = toy::sweep_p(world, job.p_grid, cfg, job.threads);
  io::write_text(job.out_csv, toy::sweep_to_csv(rows));
}

}  // namespace sforge::pipeline
