#include "spectral_forge/toy.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/io.hpp"
#include "spectral_forge/ood.hpp"
#include "spectral_forge/parallel.hpp"
#include "spectral_forge/rng.hpp"

namespace sforge::toy {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Features and model

Features extract_features(const SpectralCube& cube) {
  const std::size_t H = cube.height;
  const std::size_t W = cube.width;
  const std::size_t C = cube.channels;
  const auto R = static_cast<std::ptrdiff_t>(kContextRadius);
  const double window = static_cast<double>((2 * kContextRadius + 1) * (2 * kContextRadius + 1));

  auto clamp_idx = [](std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };

  // Separable box sum with clamped coordinates.
  std::vector<double> rows(H * W * C, 0.0);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (std::ptrdiff_t d = -R; d <= R; ++d) {
        const std::size_t cc = clamp_idx(static_cast<std::ptrdiff_t>(c) + d, W);
        for (std::size_t ch = 0; ch < C; ++ch) rows[(r * W + c) * C + ch] += cube.at(r, cc, ch);
      }

  Features f;
  f.pixels = H * W;
  f.dim = 2 * C;
  f.data.assign(f.pixels * f.dim, 0.0);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      double* out = f.data.data() + (r * W + c) * f.dim;
      for (std::size_t ch = 0; ch < C; ++ch) out[ch] = cube.at(r, c, ch);
      for (std::ptrdiff_t d = -R; d <= R; ++d) {
        const std::size_t rr = clamp_idx(static_cast<std::ptrdiff_t>(r) + d, H);
        for (std::size_t ch = 0; ch < C; ++ch) out[C + ch] += rows[(rr * W + c) * C + ch];
      }
      for (std::size_t ch = 0; ch < C; ++ch) out[C + ch] /= window;
    }
  return f;
}

ToyModel ToyModel::zeros(std::size_t n_classes, std::size_t channels) {
  ToyModel m;
  m.n_classes = n_classes;
  m.channels = channels;
  m.weights.assign(n_classes * 2 * channels, 0.0);
  m.bias.assign(n_classes, 0.0);
  return m;
}

double ToyModel::param(std::size_t i) const { return i < weights.size() ? weights[i] : bias[i - weights.size()]; }
double& ToyModel::param(std::size_t i) { return i < weights.size() ? weights[i] : bias[i - weights.size()]; }

std::string ToyModel::to_json() const {
  return json{{"n_classes", n_classes}, {"channels", channels}, {"weights", weights}, {"bias", bias}}.dump();
}

ToyModel ToyModel::from_json(const std::string& text) {
  ToyModel m;
  try {
    const json j = json::parse(text);
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.channels = j.at("channels").get<std::size_t>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("model JSON: ") + e.what());
  }
  if (m.weights.size() != m.n_classes * 2 * m.channels || m.bias.size() != m.n_classes)
    fail(ErrorCode::InvalidArgument, "model JSON has inconsistent parameter counts");
  return m;
}

namespace {

void logits_into(const ToyModel& model, std::span<const double> feature, std::span<double> out) {
  const std::size_t D = model.feature_dim();
  for (std::size_t k = 0; k < model.n_classes; ++k) {
    double z = model.bias[k];
    const double* w = model.weights.data() + k * D;
    for (std::size_t d = 0; d < D; ++d) z += w[d] * feature[d];
    out[k] = z;
  }
}

void softmax_inplace(std::span<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

std::vector<double> predict_probabilities(const ToyModel& model, const Features& features) {
  if (features.dim != model.feature_dim()) fail(ErrorCode::ChannelMismatch, "feature size does not match the model");
  const std::size_t K = model.n_classes;
  std::vector<double> probs(features.pixels * K);
  for (std::size_t p = 0; p < features.pixels; ++p) {
    std::span<double> out(probs.data() + p * K, K);
    logits_into(model, features.row(p), out);
    softmax_inplace(out);
  }
  return probs;
}

SemanticMask predict(const ToyModel& model, const LabeledScene& scene) {
  if (scene.cube.channels != model.channels)
    fail(ErrorCode::ChannelMismatch, "scene has " + std::to_string(scene.cube.channels) + " channels, model expects " +
                                         std::to_string(model.channels));
  const Features f = extract_features(scene.cube);
  SemanticMask mask(scene.cube.height, scene.cube.width, scene.mask.label_set);
  std::vector<double> z(model.n_classes);
  for (std::size_t p = 0; p < f.pixels; ++p) {
    logits_into(model, f.row(p), z);
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
      if (z[k] > z[best]) best = k;
    mask.labels[p] = static_cast<ClassId>(best);
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Loss

double soft_dice(std::span<const double> probs, std::span<const ClassId> labels, std::size_t n_classes) {
  std::vector<double> inter(n_classes, 0.0);
  std::vector<double> psum(n_classes, 0.0);
  std::vector<double> ysum(n_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t k = 0; k < n_classes; ++k) psum[k] += probs[i * n_classes + k];
    inter[labels[i]] += probs[i * n_classes + labels[i]];
    ysum[labels[i]] += 1.0;
  }
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (ysum[k] == 0.0) continue;
    total += (2.0 * inter[k] + kDiceSmoothing) / (psum[k] + ysum[k] + kDiceSmoothing);
    ++present;
  }
  return present == 0 ? 1.0 : total / static_cast<double>(present);
}

double cross_entropy(std::span<const double> probs, std::span<const ClassId> labels, std::size_t n_classes) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total -= std::log(probs[i * n_classes + labels[i]]);
  return total / static_cast<double>(labels.size());
}

Sample make_sample(const LabeledScene& scene) { return Sample{extract_features(scene.cube), scene.mask.labels}; }

double loss(const ToyModel& model, std::span<const Sample> batch, const LossWeights& weights, ToyModel* grad) {
  if (batch.empty()) fail(ErrorCode::EmptyInput, "empty batch");
  const std::size_t K = model.n_classes;
  const std::size_t D = model.feature_dim();
  if (grad) *grad = ToyModel::zeros(K, model.channels);
  const double per_image = 1.0 / static_cast<double>(batch.size());

  double total = 0.0;
  for (const Sample& s : batch) {
    if (s.features.dim != D) fail(ErrorCode::ChannelMismatch, "feature size does not match the model");
    const std::size_t N = s.features.pixels;
    const double inv_n = 1.0 / static_cast<double>(N);
    std::vector<double> probs(N * K);
    double ce = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      std::span<double> z(probs.data() + i * K, K);
      logits_into(model, s.features.row(i), z);
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - mx);
      ce -= (z[s.labels[i]] - mx - std::log(sum)) * inv_n;
      for (double& v : z) v = std::exp(v - mx) / sum;
    }

    std::vector<double> inter(K, 0.0);
    std::vector<double> psum(K, 0.0);
    std::vector<double> ysum(K, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t k = 0; k < K; ++k) psum[k] += probs[i * K + k];
      inter[s.labels[i]] += probs[i * K + s.labels[i]];
      ysum[s.labels[i]] += 1.0;
    }
    double dice_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t k = 0; k < K; ++k) {
      if (ysum[k] == 0.0) continue;
      dice_sum += (2.0 * inter[k] + kDiceSmoothing) / (psum[k] + ysum[k] + kDiceSmoothing);
      ++present;
    }
    const double dice = dice_sum / static_cast<double>(present);
    total += per_image * (weights.dice * (1.0 - dice) + weights.ce * ce);
    if (!grad) continue;

    // d loss / d p[i, k] for the Dice term, per class present.
    std::vector<double> dice_a(K, 0.0);  // coefficient of y_ik
    std::vector<double> dice_b(K, 0.0);  // constant part
    for (std::size_t k = 0; k < K; ++k) {
      if (ysum[k] == 0.0) continue;
      const double u = psum[k] + ysum[k] + kDiceSmoothing;
      const double scale = -weights.dice / static_cast<double>(present) * per_image;
      dice_a[k] = scale * 2.0 / u;
      dice_b[k] = scale * -(2.0 * inter[k] + kDiceSmoothing) / (u * u);
    }
    std::vector<double> g(K);
    std::vector<double> dz(K);
    for (std::size_t i = 0; i < N; ++i) {
      const double* p = probs.data() + i * K;
      const ClassId y = s.labels[i];
      double gp = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        g[k] = dice_b[k] + (k == y ? dice_a[k] : 0.0);
        gp += g[k] * p[k];
      }
      for (std::size_t k = 0; k < K; ++k)
        dz[k] = p[k] * (g[k] - gp) + weights.ce * per_image * inv_n * (p[k] - (k == y ? 1.0 : 0.0));
      const auto f = s.features.row(i);
      for (std::size_t k = 0; k < K; ++k) {
        double* w = grad->weights.data() + k * D;
        for (std::size_t d = 0; d < D; ++d) w[d] += dz[k] * f[d];
        grad->bias[k] += dz[k];
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) fail(ErrorCode::InvalidArgument, "epochs and batch_size must be positive");
  if (!(learning_rate >= 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail(ErrorCode::InvalidArgument, "lr_decay must lie in (0, 1]");
  if (!(loss_weights.dice >= 0.0 && loss_weights.ce >= 0.0) ||
      std::abs(loss_weights.dice + loss_weights.ce - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "loss weights must be non-negative and sum to 1");
  augmentation.validate();
}

TrainConfig TrainConfig::from_world_json(const std::string& text) {
  TrainConfig cfg;
  try {
    const json j = json::parse(text);
    if (j.contains("train")) {
      const json& t = j["train"];
      cfg.epochs = t.value("epochs", cfg.epochs);
      cfg.batch_size = t.value("batch_size", cfg.batch_size);
      cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
      cfg.lr_decay = t.value("lr_decay", cfg.lr_decay);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("world JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TrainResult train(ToyModel model, std::span<const LabeledScene> scenes, const TrainConfig& cfg) {
  cfg.validate();
  if (scenes.empty()) fail(ErrorCode::EmptyInput, "no training scenes");
  for (const auto& s : scenes)
    if (s.cube.channels != model.channels) fail(ErrorCode::ChannelMismatch, "training scene channel count differs from the model");

  const std::size_t P = model.parameter_count();
  std::vector<double> m1(P, 0.0);
  std::vector<double> m2(P, 0.0);
  std::size_t step = 0;
  double lr = cfg.learning_rate;
  TrainResult result;

  std::vector<std::size_t> order(scenes.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::stream(cfg.seed, 0x5348554646ULL, epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_total = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      Batch batch;
      for (std::size_t k = start; k < std::min(start + cfg.batch_size, order.size()); ++k)
        batch.push_back(scenes[order[k]]);
      augment::AugmentationConfig aug = cfg.augmentation;
      aug.seed = mix64(cfg.seed ^ 0xA5A5A5A5ULL);
      aug.epoch = epoch;
      if (batch.size() < 2 && aug.kind != augment::Kind::HideAndSeek && aug.kind != augment::Kind::RandomErasing)
        aug.kind = augment::Kind::GeometricOnly;
      const Batch augmented = augment::apply(batch, aug, b).batch;

      std::vector<Sample> samples;
      samples.reserve(augmented.size());
      for (const auto& s : augmented) samples.push_back(make_sample(s));
      ToyModel grad;
      const double value = loss(model, samples, cfg.loss_weights, &grad);
      if (!std::isfinite(value)) fail(ErrorCode::DivergenceDetected, "loss became non-finite in epoch " + std::to_string(epoch));
      epoch_total += value;
      ++n_batches;

      ++step;
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < P; ++i) {
        const double gi = grad.param(i);
        m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * gi;
        m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * gi * gi;
        model.param(i) -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.adam_epsilon);
      }
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(n_batches));
    lr *= cfg.lr_decay;
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic world

void SyntheticWorldConfig::validate() const {
  if (n_classes < 3 || n_classes % 2 == 0 || n_classes > 255)
    fail(ErrorCode::InvalidArgument, "n_classes must be odd, >= 3 and <= 255 (background plus organ pairs)");
  if (channels < 2) fail(ErrorCode::InvalidArgument, "world needs at least two channels");
  if (strip_min < 1 || strip_max < strip_min) fail(ErrorCode::InvalidArgument, "bad strip thickness range");
  if (train_subjects == 0 || test_subjects == 0 || scenes_per_subject == 0)
    fail(ErrorCode::InvalidArgument, "world needs train and test subjects");
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "noise_sigma must be non-negative");
  const std::size_t pairs = (n_classes - 1) / 2;
  std::size_t grid = 1;
  while (grid * grid < pairs + 1) ++grid;
  const std::size_t cell = std::min(height, width) / grid;
  if (cell < strip_max + 4) fail(ErrorCode::InvalidArgument, "scene too small for the number of organ pairs");
  if (!class_spectra.empty()) {
    if (class_spectra.size() != n_classes) fail(ErrorCode::InvalidArgument, "class_spectra needs one row per class");
    for (const auto& row : class_spectra) {
      if (row.size() != channels) fail(ErrorCode::InvalidArgument, "class_spectra rows need one value per channel");
      for (double v : row)
        if (!(v > 0.0)) fail(ErrorCode::InvalidArgument, "class spectra must be positive");
    }
  }
}

ClassId SyntheticWorldConfig::partner(ClassId c) const {
  if (c == 0) return 0;
  return static_cast<ClassId>(c % 2 == 1 ? c + 1 : c - 1);
}

std::vector<std::vector<double>> SyntheticWorldConfig::mean_spectra() const {
  if (!class_spectra.empty()) return class_spectra;
  const std::size_t C = channels;
  std::vector<std::vector<double>> spectra(n_classes, std::vector<double>(C));
  Rng rng = Rng::stream(seed, 0x53504543ULL);
  for (std::size_t ch = 0; ch < C; ++ch) spectra[0][ch] = 0.05;
  const std::size_t pairs = (n_classes - 1) / 2;
  for (std::size_t i = 0; i < pairs; ++i)
    for (std::size_t ch = 0; ch < C; ++ch) spectra[2 + 2 * i][ch] = rng.uniform(0.15, 0.95);
  // A organs are near-copies of the next pair's B organ, offset by a random
  // +-a_separation pattern. Inside the training layout the neighbouring B
  // block tells them apart cheaply; in isolation only the offset remains.
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& alias = spectra[2 + 2 * ((i + 1) % pairs)];
    for (std::size_t ch = 0; ch < C; ++ch)
      spectra[1 + 2 * i][ch] = alias[ch] + (rng.bernoulli(0.5) ? a_separation : -a_separation);
  }
  return spectra;
}

SyntheticWorldConfig SyntheticWorldConfig::from_json(const std::string& text) {
  SyntheticWorldConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.n_classes = j.value("n_classes", cfg.n_classes);
    cfg.height = j.value("height", cfg.height);
    cfg.width = j.value("width", cfg.width);
    cfg.channels = j.value("channels", cfg.channels);
    cfg.train_subjects = j.value("train_subjects", cfg.train_subjects);
    cfg.test_subjects = j.value("test_subjects", cfg.test_subjects);
    cfg.scenes_per_subject = j.value("scenes_per_subject", cfg.scenes_per_subject);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.a_separation = j.value("a_separation", cfg.a_separation);
    cfg.strip_min = j.value("strip_min", cfg.strip_min);
    cfg.strip_max = j.value("strip_max", cfg.strip_max);
    if (j.contains("class_spectra") && !j["class_spectra"].is_null())
      cfg.class_spectra = j["class_spectra"].get<std::vector<std::vector<double>>>();
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("world JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string SyntheticWorldConfig::to_json() const {
  json j{{"n_classes", n_classes},
         {"height", height},
         {"width", width},
         {"channels", channels},
         {"train_subjects", train_subjects},
         {"test_subjects", test_subjects},
         {"scenes_per_subject", scenes_per_subject},
         {"noise_sigma", noise_sigma},
         {"a_separation", a_separation},
         {"strip_min", strip_min},
         {"strip_max", strip_max},
         {"seed", seed}};
  j["class_spectra"] = class_spectra.empty() ? json(nullptr) : json(class_spectra);
  return j.dump();
}

namespace {

LabeledScene make_scene(const SyntheticWorldConfig& cfg, const LabelSetPtr& labels,
                        const std::vector<std::vector<double>>& spectra, Rng& rng, std::string subject,
                        std::string image) {
  const std::size_t H = cfg.height;
  const std::size_t W = cfg.width;
  const std::size_t pairs = (cfg.n_classes - 1) / 2;
  std::size_t grid = 1;
  while (grid * grid < pairs + 1) ++grid;
  const std::size_t cell_h = H / grid;
  const std::size_t cell_w = W / grid;

  LabeledScene scene;
  scene.subject_id = std::move(subject);
  scene.image_id = std::move(image);
  scene.mask = SemanticMask(H, W, labels, 0);

  // Pairs go to distinct random grid cells; each pair is a rectangle split
  // into a thin A strip and a B block that share one full edge.
  std::vector<std::size_t> cells(grid * grid);
  std::iota(cells.begin(), cells.end(), 0);
  for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[rng.below(i)]);
  for (std::size_t pi = 0; pi < pairs; ++pi) {
    const std::size_t cell = cells[pi];
    const std::size_t top0 = (cell / grid) * cell_h;
    const std::size_t left0 = (cell % grid) * cell_w;
    const std::size_t max_h = cell_h - 2;
    const std::size_t max_w = cell_w - 2;
    const std::size_t min_h = std::min(max_h, std::max(cfg.strip_max + 2, max_h / 2));
    const std::size_t min_w = std::min(max_w, std::max(cfg.strip_max + 2, max_w / 2));
    const std::size_t rh = min_h + rng.below(max_h - min_h + 1);
    const std::size_t rw = min_w + rng.below(max_w - min_w + 1);
    const std::size_t top = top0 + 1 + rng.below(cell_h - 2 - rh + 1);
    const std::size_t left = left0 + 1 + rng.below(cell_w - 2 - rw + 1);
    const std::size_t strip = cfg.strip_min + rng.below(cfg.strip_max - cfg.strip_min + 1);
    const bool vertical_split = rng.bernoulli(0.5);
    const bool a_first = rng.bernoulli(0.5);
    const auto a = static_cast<ClassId>(1 + 2 * pi);
    const auto b = static_cast<ClassId>(2 + 2 * pi);
    for (std::size_t r = top; r < top + rh; ++r)
      for (std::size_t c = left; c < left + rw; ++c) {
        const std::size_t offset = vertical_split ? c - left : r - top;
        const std::size_t extent = vertical_split ? rw : rh;
        const bool in_a = a_first ? offset < strip : offset >= extent - strip;
        scene.mask.at(r, c) = in_a ? a : b;
      }
  }

  scene.cube = SpectralCube(H, W, cfg.channels);
  for (std::size_t p = 0; p < H * W; ++p) {
    const auto& mean = spectra[scene.mask.labels[p]];
    auto px = scene.cube.pixel(p);
    for (std::size_t ch = 0; ch < cfg.channels; ++ch)
      px[ch] = static_cast<float>(std::max(1e-3, mean[ch] + cfg.noise_sigma * rng.normal()));
  }
  return scene;
}

}  // namespace

World generate_world(const SyntheticWorldConfig& cfg) {
  cfg.validate();
  World world;
  world.labels = LabelSet::generic(cfg.n_classes);
  const auto spectra = cfg.mean_spectra();
  const std::size_t subjects = cfg.train_subjects + cfg.test_subjects;
  for (std::size_t s = 0; s < subjects; ++s) {
    const bool is_train = s < cfg.train_subjects;
    const std::string subject = "subject_" + std::to_string(s);
    for (std::size_t k = 0; k < cfg.scenes_per_subject; ++k) {
      Rng rng = Rng::stream(cfg.seed, 0x574F524CULL, s, k);
      auto scene = make_scene(cfg, world.labels, spectra, rng, subject, subject + "_img" + std::to_string(k));
      (is_train ? world.train : world.test).push_back(std::move(scene));
    }
  }
  for (const auto& scene : world.test) {
    for (ClassId l : ood::eligible_targets(scene)) {
      ood::SynthesisSpec spec;
      spec.mode = ood::Mode::IsolationZero;
      spec.target = l;
      LabeledScene iso = ood::isolate(scene, spec);
      iso.image_id = ood::synthesized_id(scene.image_id, spec.mode, l);
      world.test_isolation.push_back(std::move(iso));
    }
  }
  return world;
}

bool adjacency_holds(const SemanticMask& mask, const SyntheticWorldConfig& cfg) {
  const std::size_t H = mask.height;
  const std::size_t W = mask.width;
  for (ClassId c : mask.present_classes()) {
    if (c == mask.label_set->background_id()) continue;
    const ClassId partner = cfg.partner(c);
    bool touches = false;
    for (std::size_t r = 0; r < H && !touches; ++r)
      for (std::size_t col = 0; col < W && !touches; ++col) {
        if (mask.at(r, col) != c) continue;
        touches = (r > 0 && mask.at(r - 1, col) == partner) || (r + 1 < H && mask.at(r + 1, col) == partner) ||
                  (col > 0 && mask.at(r, col - 1) == partner) || (col + 1 < W && mask.at(r, col + 1) == partner);
      }
    if (!touches) return false;
  }
  return true;
}

void write_world(const World& world, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir);
  io::write_text(root / "labels.json", world.labels->to_json() + "\n");
  auto write_split = [&](const std::vector<LabeledScene>& scenes, const std::string& name, io::SplitTag tag) {
    fs::create_directories(root / name, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + (root / name).string());
    io::DatasetManifest m;
    m.name = name;
    m.split = tag;
    m.label_set_path = "../labels.json";
    for (const auto& s : scenes) {
      io::save_scene(s, root / name / (s.image_id + ".cube"), root / name / (s.image_id + ".png"));
      m.scenes.push_back({s.image_id + ".cube", s.image_id + ".png", s.subject_id, s.image_id, std::nullopt});
    }
    io::save_manifest(m, root / name / "manifest.json");
  };
  write_split(world.train, "train", io::SplitTag::Train);
  write_split(world.test, "test", io::SplitTag::Test);
  write_split(world.test_isolation, "test_isolation_zero", io::SplitTag::Test);
}

// ---------------------------------------------------------------------------
// Sweep

metrics::MetricReport evaluate(const ToyModel& model, std::span<const LabeledScene> scenes, metrics::Metric metric,
                               const metrics::NsdThresholds& thresholds) {
  std::vector<metrics::ClassImageScore> scores;
  const metrics::Metric which[] = {metric};
  for (const auto& scene : scenes) {
    const SemanticMask pred = predict(model, scene);
    auto s = metrics::score_image(pred, scene.mask, scene.image_id, scene.subject_id, which, thresholds);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  return metrics::aggregate(scores);
}

std::vector<SweepRow> sweep_p(const World& world, std::span<const double> p_grid, const TrainConfig& base,
                              unsigned threads) {
  std::vector<double> ps{0.0};
  ps.insert(ps.end(), p_grid.begin(), p_grid.end());
  std::vector<SweepRow> rows(ps.size());
  const std::size_t n_classes = world.labels->size();
  const std::size_t channels = world.train.front().cube.channels;

  parallel_for(ps.size(), threads, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.augmentation.kind = augment::Kind::OrganTransplantation;
    cfg.augmentation.probability = ps[i];
    TrainResult trained = train(ToyModel::zeros(n_classes, channels), world.train, cfg);
    SweepRow row;
    row.p = ps[i];
    row.in_dist_dsc = evaluate(trained.model, world.test, metrics::Metric::Dsc).grand_mean;
    row.ood_dsc = evaluate(trained.model, world.test_isolation, metrics::Metric::Dsc).grand_mean;
    row.in_dist_nsd = evaluate(trained.model, world.test, metrics::Metric::Nsd).grand_mean;
    row.ood_nsd = evaluate(trained.model, world.test_isolation, metrics::Metric::Nsd).grand_mean;
    row.epoch_loss = std::move(trained.epoch_loss);
    rows[i] = std::move(row);
  });
  return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "p,in_dist_dsc,ood_dsc,in_dist_nsd,ood_nsd,final_loss\n";
  for (const auto& r : rows)
    out << r.p << ',' << r.in_dist_dsc << ',' << r.ood_dsc << ',' << r.in_dist_nsd << ',' << r.ood_nsd << ','
        << (r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << '\n';
  return out.str();
}

}  // namespace sforge::toy
