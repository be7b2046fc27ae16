#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spectral_forge/error.hpp"
#include "spectral_forge/toy.hpp"

using namespace sforge;
using namespace sforge::toy;

namespace {

SyntheticWorldConfig small_world(std::uint64_t seed = 1) {
  SyntheticWorldConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.channels = 4;
  cfg.train_subjects = 2;
  cfg.test_subjects = 1;
  cfg.scenes_per_subject = 2;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("toy_segmenter") {
  TEST_CASE("features are centre spectrum plus clamped 5x5 mean") {
    Rng rng(1);
    auto s = testing::random_scene(rng, 6, 7, 2, LabelSet::generic(2), "x");
    const auto f = extract_features(s.cube);
    REQUIRE(f.dim == 4);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 7; ++c)
        for (std::size_t ch = 0; ch < 2; ++ch) {
          double sum = 0.0;
          for (int dr = -2; dr <= 2; ++dr)
            for (int dc = -2; dc <= 2; ++dc) {
              const long rr = std::clamp<long>(long(r) + dr, 0, 5), cc = std::clamp<long>(long(c) + dc, 0, 6);
              sum += s.cube.at(rr, cc, ch);
            }
          const auto row = f.row(r * 7 + c);
          CHECK(row[ch] == doctest::Approx(s.cube.at(r, c, ch)));
          CHECK(row[2 + ch] == doctest::Approx(sum / 25.0).epsilon(1e-12));
        }
  }

  TEST_CASE("zero model predicts the lowest class everywhere") {
    Rng rng(2);
    const auto s = testing::random_scene(rng, 4, 4, 3, LabelSet::generic(3), "x");
    const auto m = predict(ToyModel::zeros(3, 3), s);
    for (ClassId l : m.labels) CHECK(l == 0);
    CHECK_THROWS_AS(predict(ToyModel::zeros(3, 2), s), Error);
  }

  TEST_CASE("without context weights the prediction ignores neighbours") {
    Rng rng(3);
    auto s = testing::random_scene(rng, 7, 7, 3, LabelSet::generic(3), "x");
    ToyModel m = ToyModel::zeros(3, 3);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < 3; ++j) m.weights[k * 6 + j] = rng.normal();
    const auto before = predict(m, s);
    for (std::size_t p = 0; p < 49; ++p)
      if (p != 24)
        for (auto& v : s.cube.pixel(p)) v = 0.0F;
    CHECK(predict(m, s).labels[24] == before.labels[24]);
  }

  TEST_CASE("analytic gradient matches central differences") {
    Rng rng(4);
    auto labels = LabelSet::generic(3);
    std::vector<Sample> batch;
    for (int i = 0; i < 2; ++i) batch.push_back(make_sample(testing::random_scene(rng, 4, 5, 2, labels, "x")));
    ToyModel m = ToyModel::zeros(3, 2);
    for (std::size_t i = 0; i < m.parameter_count(); ++i) m.param(i) = rng.normal();
    ToyModel g;
    loss(m, batch, {}, &g);
    std::vector<double> num(m.parameter_count());
    for (std::size_t i = 0; i < m.parameter_count(); ++i) {
      const double h = 1e-6, x = m.param(i);
      m.param(i) = x + h;
      const double up = loss(m, batch, {});
      m.param(i) = x - h;
      const double down = loss(m, batch, {});
      m.param(i) = x;
      num[i] = (up - down) / (2 * h);
    }
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
      diff += (g.param(i) - num[i]) * (g.param(i) - num[i]);
      norm += num[i] * num[i];
    }
    CHECK(std::sqrt(diff) / std::sqrt(norm) <= 1e-4);
  }

  TEST_CASE("loss parts") {
    const std::vector<double> probs = {1.0, 0.0, 0.0, 1.0};
    const std::vector<ClassId> labels = {0, 1};
    CHECK(soft_dice(probs, labels, 2) == doctest::Approx(1.0));
    CHECK(cross_entropy(probs, labels, 2) == doctest::Approx(0.0));
  }

  TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto world = generate_world(small_world());
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.learning_rate = 0.0;
    ToyModel m = ToyModel::zeros(7, 4);
    m.bias[2] = 0.5;
    CHECK(train(m, world.train, cfg).model == m);
  }

  TEST_CASE("single-class world is learned within five epochs") {
    auto labels = LabelSet::generic(2);
    Rng rng(5);
    std::vector<LabeledScene> scenes;
    for (int i = 0; i < 6; ++i) {
      auto s = testing::random_scene(rng, 8, 8, 3, labels, "x" + std::to_string(i));
      for (auto& l : s.mask.labels) l = 1;
      scenes.push_back(s);
    }
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.augmentation.geometric.enabled = false;
    cfg.augmentation.probability = 0.0;
    const auto model = train(ToyModel::zeros(2, 3), scenes, cfg).model;
    std::size_t correct = 0, total = 0;
    for (const auto& s : scenes) {
      const auto p = predict(model, s);
      for (std::size_t i = 0; i < p.labels.size(); ++i, ++total) correct += p.labels[i] == s.mask.labels[i];
    }
    CHECK(double(correct) / double(total) >= 0.99);
  }

  TEST_CASE("training loss trends down") {
    const auto world = generate_world(small_world());
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.augmentation.probability = 0.0;
    const auto r = train(ToyModel::zeros(7, 4), world.train, cfg);
    const auto mean = [&](std::size_t a, std::size_t b) {
      double s = 0;
      for (std::size_t i = a; i < b; ++i) s += r.epoch_loss[i];
      return s / double(b - a);
    };
    CHECK(mean(20, 30) < mean(0, 10));
  }

  TEST_CASE("world generation") {
    const auto cfg = small_world(3);
    const auto a = generate_world(cfg), b = generate_world(cfg);
    CHECK(a.train == b.train);
    CHECK(a.test_isolation == b.test_isolation);
    std::size_t expected = 0;
    for (const auto& s : a.test) {
      CHECK(adjacency_holds(s.mask, cfg));
      for (ClassId l : s.mask.present_classes()) expected += l != 0;
    }
    for (const auto& s : a.train) CHECK(adjacency_holds(s.mask, cfg));
    CHECK(a.test_isolation.size() == expected);
    CHECK(a.train.size() == 4);
    CHECK(generate_world(small_world(4)).train != a.train);
  }

  TEST_CASE("world config JSON") {
    auto cfg = small_world(9);
    cfg.a_separation = 0.07;
    CHECK(SyntheticWorldConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
    CHECK_THROWS_AS(SyntheticWorldConfig::from_json(R"({"n_classes": 6})"), Error);
    const auto t = TrainConfig::from_world_json(R"({"train": {"epochs": 3, "learning_rate": 0.3}})");
    CHECK(t.epochs == 3);
    CHECK(t.learning_rate == 0.3);
  }

  TEST_CASE("sweep with a single grid value has two rows and is reproducible") {
    const auto world = generate_world(small_world());
    TrainConfig cfg;
    cfg.epochs = 3;
    const std::vector<double> grid = {0.5};
    const auto a = sweep_p(world, grid, cfg, 2);
    REQUIRE(a.size() == 2);
    CHECK(a[0].p == 0.0);
    CHECK(a[1].p == 0.5);
    CHECK(sweep_to_csv(a) == sweep_to_csv(sweep_p(world, grid, cfg, 1)));
  }
}
