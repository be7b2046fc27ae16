#pragma once

// Fixture builders and brute-force oracles shared by the unit tests and the
// acceptance runner.

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spectral_forge/rng.hpp"
#include "spectral_forge/scene.hpp"

namespace testing {

using namespace sforge;

inline SemanticMask random_mask(Rng& rng, std::size_t h, std::size_t w, const LabelSetPtr& labels,
                                std::size_t n_classes) {
  SemanticMask m(h, w, labels);
  for (auto& l : m.labels) l = static_cast<ClassId>(rng.below(n_classes));
  return m;
}

/// Random blocky mask: a few rectangles of random classes over background.
inline SemanticMask blob_mask(Rng& rng, std::size_t h, std::size_t w, const LabelSetPtr& labels,
                              std::size_t n_classes, std::size_t n_rects = 4) {
  SemanticMask m(h, w, labels, labels->background_id());
  for (std::size_t k = 0; k < n_rects; ++k) {
    const auto l = static_cast<ClassId>(rng.below(n_classes));
    const std::size_t r0 = rng.below(h), c0 = rng.below(w);
    const std::size_t r1 = r0 + 1 + rng.below(h - r0), c1 = c0 + 1 + rng.below(w - c0);
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) m.at(r, c) = l;
  }
  return m;
}

inline LabeledScene random_scene(Rng& rng, std::size_t h, std::size_t w, std::size_t channels,
                                 const LabelSetPtr& labels, std::string id, std::string subject = "s0") {
  LabeledScene s;
  s.cube = SpectralCube(h, w, channels);
  for (auto& v : s.cube.data) v = static_cast<float>(0.05 + 0.9 * rng.uniform());
  s.mask = blob_mask(rng, h, w, labels, labels->size());
  s.image_id = std::move(id);
  s.subject_id = std::move(subject);
  return s;
}

inline Batch random_batch(Rng& rng, std::size_t n, std::size_t h, std::size_t w, std::size_t channels,
                          const LabelSetPtr& labels) {
  Batch b;
  for (std::size_t i = 0; i < n; ++i)
    b.push_back(random_scene(rng, h, w, channels, labels, "img" + std::to_string(i), "s" + std::to_string(i % 2)));
  return b;
}

// ---- oracles ---------------------------------------------------------------

inline std::optional<double> dsc_oracle(const SemanticMask& p, const SemanticMask& r, ClassId l) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    const bool a = p.labels[i] == l, b = r.labels[i] == l;
    tp += a && b;
    fp += a && !b;
    fn += !a && b;
  }
  if (tp + fp + fn == 0) return std::nullopt;
  return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

/// Foreground pixels of class l with a 4-neighbour that is not l or lies
/// outside the image.
inline std::vector<std::pair<long, long>> boundary_oracle(const SemanticMask& m, ClassId l) {
  std::vector<std::pair<long, long>> out;
  const long H = static_cast<long>(m.height), W = static_cast<long>(m.width);
  for (long r = 0; r < H; ++r)
    for (long c = 0; c < W; ++c) {
      if (m.at(r, c) != l) continue;
      bool edge = false;
      const long dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const long rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || cc < 0 || rr >= H || cc >= W || m.at(rr, cc) != l) edge = true;
      }
      if (edge) out.emplace_back(r, c);
    }
  return out;
}

inline std::optional<double> nsd_oracle(const SemanticMask& p, const SemanticMask& r, ClassId l, double tau) {
  const auto bp = boundary_oracle(p, l), br = boundary_oracle(r, l);
  if (bp.empty() && br.empty()) return std::nullopt;
  if (bp.empty() || br.empty()) return 0.0;
  auto within = [tau](const auto& from, const auto& to) {
    long n = 0;
    for (const auto& [r0, c0] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [r1, c1] : to)
        best = std::min(best, std::hypot(static_cast<double>(r0 - r1), static_cast<double>(c0 - c1)));
      n += best <= tau;
    }
    return n;
  };
  return static_cast<double>(within(bp, br) + within(br, bp)) / static_cast<double>(bp.size() + br.size());
}

/// image -> subject -> class -> grand mean, written as plainly as possible.
struct LeafScore {
  std::string subject, image;
  int class_id;
  double value;
};

inline double grand_mean_oracle(const std::vector<LeafScore>& leaves) {
  std::map<int, std::map<std::string, std::vector<double>>> by_class;
  for (const auto& s : leaves) by_class[s.class_id][s.subject].push_back(s.value);
  double total = 0.0;
  for (const auto& [cls, subjects] : by_class) {
    double class_sum = 0.0;
    for (const auto& [subj, vals] : subjects) {
      double s = 0.0;
      for (double v : vals) s += v;
      class_sum += s / static_cast<double>(vals.size());
    }
    total += class_sum / static_cast<double>(subjects.size());
  }
  return total / static_cast<double>(by_class.size());
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sforge_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
