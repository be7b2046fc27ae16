// sforge: command-line front end over the spectral_forge C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectral_forge/spectral_forge.h"

using nlohmann::json;

namespace {

constexpr int kUsageError = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", e.what());
  }
}

int run(const std::string& command, const json& job) {
  const sf_status st = sf_run(command.c_str(), job.dump().c_str());
  if (st == SF_OK) return 0;
  std::fprintf(stderr, "sforge %s: %s\n", command.c_str(), sf_last_error());
  return static_cast<int>(sf_status_family_of(st));
}

// Drops unset optional strings so the library sees them as absent.
void put(json& j, const char* key, const std::string& value) {
  if (!value.empty()) j[key] = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral_forge: augmentation, OOD synthesis and evaluation for spectral segmentation"};
  app.set_version_flag("--version", std::string(sf_version()));
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (default: $SPECTRAL_FORGE_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  std::string command;
  json job;

  // calibrate
  std::string raw, white, dark, out;
  auto* calibrate = app.add_subcommand("calibrate", "white/dark reference calibration of a raw cube");
  calibrate->add_option("--raw", raw)->required();
  calibrate->add_option("--white", white)->required();
  calibrate->add_option("--dark", dark)->required();
  calibrate->add_option("--out", out)->required();

  // rgb
  std::string rgb_in, bands;
  auto* rgb = app.add_subcommand("rgb", "RGB reconstruction by band averaging");
  rgb->add_option("--in", rgb_in)->required();
  rgb->add_option("--out", out)->required();
  rgb->add_option("--bands", bands, "JSON file {\"red\":[lo,hi],\"green\":...,\"blue\":...} in nm");

  // augment
  std::string manifest, kind, config_path, records;
  double p = 1.0;
  std::uint64_t seed = 0;
  std::size_t batch_size = 5;
  auto* aug = app.add_subcommand("augment", "augment a dataset batch by batch");
  aug->add_option("--manifest", manifest)->required();
  auto* kind_opt = aug->add_option("--kind", kind, "geometric_only, hide_and_seek, random_erasing, jigsaw, cutmix, "
                                                   "cutpas or organ_transplantation");
  auto* p_opt = aug->add_option("--p", p, "per-scene application probability")->check(CLI::Range(0.0, 1.0));
  aug->add_option("--seed", seed)->required();
  aug->add_option("--out", out, "output directory")->required();
  aug->add_option("--records", records, "write augmentation records JSON here");
  aug->add_option("--config", config_path, "augmentation config JSON");
  aug->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);

  // synthesize
  std::string mode, background, background_mask;
  auto* syn = app.add_subcommand("synthesize", "build a geometric OOD dataset");
  syn->add_option("--manifest", manifest)->required();
  syn->add_option("--mode", mode, "isolation_zero, isolation_bgr, removal_zero or removal_bgr")->required();
  syn->add_option("--out", out, "output directory")->required();
  syn->add_option("--background", background, "background cube (bgr modes)");
  syn->add_option("--background-mask", background_mask, "mask of the background cube; default: all background");
  auto* syn_seed = syn->add_option("--seed", seed, "required by bgr modes");

  // evaluate
  std::string pred, ref, metric_list = "dsc,nsd", thresholds, algorithm = "algorithm", dataset = "dataset",
                          impact_baseline, impact_csv;
  auto* ev = app.add_subcommand("evaluate", "score predictions against references");
  ev->add_option("--pred-manifest", pred)->required();
  ev->add_option("--ref-manifest", ref)->required();
  ev->add_option("--metric", metric_list, "comma-separated: dsc,nsd");
  ev->add_option("--thresholds", thresholds, "NSD tolerance JSON");
  ev->add_option("--out", out)->required();
  ev->add_option("--algorithm", algorithm);
  ev->add_option("--dataset", dataset);
  ev->add_option("--impact-baseline", impact_baseline, "in-distribution report for the removal impact matrix");
  ev->add_option("--impact-csv", impact_csv);

  // rank
  std::vector<std::string> reports;
  std::string csv, rank_metric = "dsc";
  std::size_t n_boot = 1000;
  auto* rk = app.add_subcommand("rank", "bootstrap ranking across reports");
  rk->add_option("--reports", reports)->required()->expected(1, -1);
  rk->add_option("--metric", rank_metric);
  rk->add_option("--n-boot", n_boot)->check(CLI::PositiveNumber);
  rk->add_option("--seed", seed)->required();
  rk->add_option("--out", out)->required();
  rk->add_option("--csv", csv, "rank frequencies as CSV");

  // demo-train
  std::string world, p_grid = "0.2,0.4,0.6,0.8,1.0", world_dir;
  std::size_t epochs = 0;
  auto* demo = app.add_subcommand("demo-train", "toy segmenter sweep over the transplantation probability");
  demo->add_option("--world", world)->required();
  demo->add_option("--p-grid", p_grid);
  demo->add_option("--out", out)->required();
  demo->add_option("--seed", seed)->required();
  demo->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
  demo->add_option("--world-dir", world_dir, "also write the generated scenes here");

  try {
    app.parse(argc, argv);

    if (*calibrate) {
      command = "calibrate";
      job = {{"raw", raw}, {"white", white}, {"dark", dark}, {"out", out}};
    } else if (*rgb) {
      command = "rgb";
      job = {{"in", rgb_in}, {"out", out}};
      put(job, "bands", bands);
    } else if (*aug) {
      command = "augment";
      json cfg = config_path.empty() ? json::object() : read_json_file(config_path);
      if (*kind_opt) cfg["kind"] = kind;
      if (*p_opt) cfg["p"] = p;
      cfg["seed"] = seed;
      job = {{"manifest", manifest}, {"config", cfg}, {"out_dir", out}, {"batch_size", batch_size}};
      put(job, "records", records);
    } else if (*syn) {
      command = "synthesize";
      if (mode.size() > 4 && mode.compare(mode.size() - 4, 4, "_bgr") == 0) {
        if (!*syn_seed) throw CLI::RequiredError("--seed (bgr modes sample background pixels)");
        if (background.empty()) throw CLI::RequiredError("--background (bgr modes)");
      }
      job = {{"manifest", manifest}, {"mode", mode}, {"out_dir", out}, {"seed", seed}};
      put(job, "background", background);
      put(job, "background_mask", background_mask);
    } else if (*ev) {
      command = "evaluate";
      json metrics = json::array();
      std::stringstream ss(metric_list);
      for (std::string m; std::getline(ss, m, ',');)
        if (!m.empty()) metrics.push_back(m);
      job = {{"pred", pred},           {"ref", ref},         {"metrics", metrics},
             {"out", out},             {"algorithm", algorithm}, {"dataset", dataset}};
      put(job, "thresholds", thresholds);
      put(job, "impact_baseline", impact_baseline);
      put(job, "impact_csv", impact_csv);
    } else if (*rk) {
      command = "rank";
      job = {{"reports", reports}, {"metric", rank_metric}, {"n_boot", n_boot}, {"seed", seed}, {"out", out}};
      put(job, "csv", csv);
    } else if (*demo) {
      command = "demo-train";
      std::vector<double> grid;
      std::stringstream ss(p_grid);
      for (std::string v; std::getline(ss, v, ',');) {
        try {
          grid.push_back(std::stod(v));
        } catch (const std::exception&) {
          throw CLI::ValidationError("--p-grid", "not a number: " + v);
        }
      }
      job = {{"world", world}, {"p_grid", grid}, {"out", out}, {"seed", seed}};
      if (epochs > 0) job["epochs"] = epochs;
      put(job, "world_dir", world_dir);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (threads > 0) job["threads"] = threads;
  return run(command, job);
}
