#include "spectral_forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "spectral_forge/error.hpp"

namespace sforge::metrics {

namespace {

void require_same_dims(const SemanticMask& a, const SemanticMask& b) {
  if (a.height != b.height || a.width != b.width)
    fail(ErrorCode::DimensionMismatch, "prediction and reference masks differ in size");
}

/// 1D lower envelope of parabolas (Felzenszwalb & Huttenlocher). f and d
/// have stride `stride`; v and z are scratch.
void edt_1d(const double* f, double* d, std::size_t n, std::size_t stride, std::vector<std::size_t>& v,
            std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  std::size_t k = 0;
  // Skip leading infinite samples; they never contribute.
  std::size_t first = 0;
  while (first < n && std::isinf(f[first * stride])) ++first;
  if (first == n) {
    for (std::size_t q = 0; q < n; ++q) d[q * stride] = inf;
    return;
  }
  v[0] = first;
  z[0] = -inf;
  z[1] = inf;
  for (std::size_t q = first + 1; q < n; ++q) {
    const double fq = f[q * stride];
    if (std::isinf(fq)) continue;
    const auto dq = static_cast<double>(q);
    double s = 0.0;
    while (true) {
      const auto dv = static_cast<double>(v[k]);
      s = ((fq + dq * dq) - (f[v[k] * stride] + dv * dv)) / (2.0 * dq - 2.0 * dv);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {  // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const auto dq = static_cast<double>(q);
    while (z[k + 1] < dq) ++k;
    const auto dv = dq - static_cast<double>(v[k]);
    d[q * stride] = dv * dv + f[v[k] * stride];
  }
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::string_view metric_name(Metric m) noexcept { return m == Metric::Dsc ? "dsc" : "nsd"; }

Metric parse_metric(std::string_view name) {
  if (name == "dsc" || name == "DSC") return Metric::Dsc;
  if (name == "nsd" || name == "NSD") return Metric::Nsd;
  fail(ErrorCode::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

std::optional<double> dsc(const SemanticMask& pred, const SemanticMask& ref, ClassId l) {
  require_same_dims(pred, ref);
  std::size_t p = 0;
  std::size_t r = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const bool in_p = pred.labels[i] == l;
    const bool in_r = ref.labels[i] == l;
    p += in_p;
    r += in_r;
    both += in_p && in_r;
  }
  if (p + r == 0) return std::nullopt;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + r);
}

std::vector<std::uint8_t> boundary(const SemanticMask& mask, ClassId l) {
  const std::size_t H = mask.height;
  const std::size_t W = mask.width;
  std::vector<std::uint8_t> out(H * W, 0);
  auto fg = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(H) || c >= static_cast<std::ptrdiff_t>(W)) return false;
    return mask.labels[static_cast<std::size_t>(r) * W + static_cast<std::size_t>(c)] == l;
  };
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const auto ri = static_cast<std::ptrdiff_t>(r);
      const auto ci = static_cast<std::ptrdiff_t>(c);
      if (!fg(ri, ci)) continue;
      if (!fg(ri - 1, ci) || !fg(ri + 1, ci) || !fg(ri, ci - 1) || !fg(ri, ci + 1)) out[r * W + c] = 1;
    }
  }
  return out;
}

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> seeds, std::size_t height,
                                               std::size_t width) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(height * width);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = seeds[i] != 0 ? 0.0 : inf;
  std::vector<double> tmp(f.size());
  std::vector<std::size_t> v;
  std::vector<double> z;
  for (std::size_t c = 0; c < width; ++c) edt_1d(f.data() + c, tmp.data() + c, height, width, v, z);
  for (std::size_t r = 0; r < height; ++r) edt_1d(tmp.data() + r * width, f.data() + r * width, width, 1, v, z);
  return f;
}

std::optional<double> nsd(const SemanticMask& pred, const SemanticMask& ref, ClassId l, double tau) {
  require_same_dims(pred, ref);
  if (!(tau >= 0.0)) fail(ErrorCode::InvalidArgument, "NSD tolerance must be non-negative");
  const auto bp = boundary(pred, l);
  const auto br = boundary(ref, l);
  const auto np = static_cast<std::size_t>(std::count(bp.begin(), bp.end(), 1));
  const auto nr = static_cast<std::size_t>(std::count(br.begin(), br.end(), 1));
  if (np + nr == 0) return std::nullopt;
  if (np == 0 || nr == 0) return 0.0;
  const auto dist_to_r = squared_distance_transform(br, ref.height, ref.width);
  const auto dist_to_p = squared_distance_transform(bp, pred.height, pred.width);
  const double tau2 = tau * tau;
  std::size_t within = 0;
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (bp[i] != 0 && dist_to_r[i] <= tau2) ++within;
    if (br[i] != 0 && dist_to_p[i] <= tau2) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(np + nr);
}

// ---------------------------------------------------------------------------

double NsdThresholds::tau(ClassId l) const {
  const auto it = per_class.find(l);
  return it == per_class.end() ? default_tau : it->second;
}

NsdThresholds NsdThresholds::from_json(const std::string& text, const LabelSet* labels) {
  NsdThresholds t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.default_tau = j.value("default", t.default_tau);
    if (j.contains("classes")) {
      for (const auto& [key, value] : j["classes"].items()) {
        std::optional<ClassId> id;
        if (labels) id = labels->find(key);
        if (!id) {
          std::size_t used = 0;
          int parsed = -1;
          try {
            parsed = std::stoi(key, &used);
          } catch (const std::exception&) {
          }
          if (used != key.size() || parsed < 0 || parsed > 255)
            fail(ErrorCode::InvalidArgument, "unknown class '" + key + "' in NSD thresholds");
          id = static_cast<ClassId>(parsed);
        }
        t.per_class[*id] = value.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("NSD threshold JSON: ") + e.what());
  }
  if (!(t.default_tau >= 0.0)) fail(ErrorCode::InvalidArgument, "NSD thresholds must be non-negative");
  for (const auto& [id, tau] : t.per_class)
    if (!(tau >= 0.0)) fail(ErrorCode::InvalidArgument, "NSD thresholds must be non-negative");
  return t;
}

std::string NsdThresholds::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [id, tau] : per_class) classes[std::to_string(id)] = tau;
  return nlohmann::json{{"default", default_tau}, {"classes", classes}}.dump();
}

std::vector<ClassImageScore> score_image(const SemanticMask& pred, const SemanticMask& ref, std::string_view image_id,
                                         std::string_view subject_id, std::span<const Metric> which,
                                         const NsdThresholds& thresholds) {
  require_same_dims(pred, ref);
  std::set<ClassId> classes;
  for (ClassId c : pred.present_classes()) classes.insert(c);
  for (ClassId c : ref.present_classes()) classes.insert(c);
  std::vector<ClassImageScore> out;
  for (Metric m : which) {
    for (ClassId c : classes) {
      ClassImageScore s;
      s.image_id = image_id;
      s.subject_id = subject_id;
      s.class_id = c;
      s.metric = m;
      s.value = m == Metric::Dsc ? dsc(pred, ref, c) : nsd(pred, ref, c, thresholds.tau(c));
      out.push_back(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

std::optional<double> MetricReport::class_value(ClassId l) const {
  for (const auto& c : classes)
    if (c.class_id == l) return c.value;
  return std::nullopt;
}

MetricReport aggregate(std::span<const ClassImageScore> scores) {
  if (scores.empty()) fail(ErrorCode::EmptyInput, "no scores to aggregate");
  MetricReport report;
  report.metric = scores.front().metric;
  for (const auto& s : scores) {
    if (s.metric != report.metric) fail(ErrorCode::InvalidArgument, "cannot aggregate DSC and NSD scores together");
    if (s.value) report.images.push_back(s);
  }
  if (report.images.empty()) fail(ErrorCode::EmptyInput, "all scores are absent");

  // Canonical order makes every floating-point sum independent of input order.
  auto key = [](const ClassImageScore& s) { return std::tie(s.subject_id, s.class_id, s.image_id); };
  std::sort(report.images.begin(), report.images.end(),
            [&](const ClassImageScore& a, const ClassImageScore& b) {
              return key(a) < key(b) || (key(a) == key(b) && *a.value < *b.value);
            });

  for (std::size_t i = 0; i < report.images.size();) {
    std::size_t j = i;
    std::vector<double> values;
    while (j < report.images.size() && report.images[j].subject_id == report.images[i].subject_id &&
           report.images[j].class_id == report.images[i].class_id) {
      values.push_back(*report.images[j].value);
      ++j;
    }
    report.subjects.push_back({report.images[i].subject_id, report.images[i].class_id, mean_of(values), values.size()});
    i = j;
  }

  std::map<ClassId, std::vector<double>> per_class;
  for (const auto& s : report.subjects) per_class[s.class_id].push_back(s.value);
  std::vector<double> class_means;
  for (const auto& [id, values] : per_class) {
    report.classes.push_back({id, mean_of(values), values.size()});
    class_means.push_back(report.classes.back().value);
  }
  report.grand_mean = mean_of(class_means);
  return report;
}

MetricReport aggregate_removal(std::span<const RemovalScore> scores) {
  if (scores.empty()) fail(ErrorCode::EmptyInput, "no removal scores to aggregate");
  std::map<std::tuple<std::string, std::string, ClassId>, ClassImageScore> minima;
  for (const auto& rs : scores) {
    const auto& s = rs.score;
    if (rs.removed == s.class_id || !s.value) continue;
    const auto k = std::make_tuple(s.subject_id, s.image_id, s.class_id);
    auto it = minima.find(k);
    if (it == minima.end()) {
      minima.emplace(k, s);
    } else if (*s.value < *it->second.value) {
      it->second.value = s.value;
    }
  }
  if (minima.empty()) fail(ErrorCode::EmptyInput, "all removal scores are absent");
  std::vector<ClassImageScore> leaves;
  leaves.reserve(minima.size());
  for (auto& [k, s] : minima) leaves.push_back(std::move(s));
  return aggregate(leaves);
}

std::optional<double> ImpactMatrix::at(ClassId r, ClassId l) const {
  const auto ri = std::find(removed.begin(), removed.end(), r);
  const auto li = std::find(observed.begin(), observed.end(), l);
  if (ri == removed.end() || li == observed.end()) return std::nullopt;
  return delta[static_cast<std::size_t>(ri - removed.begin()) * observed.size() +
               static_cast<std::size_t>(li - observed.begin())];
}

std::string ImpactMatrix::to_csv(const LabelSet* labels) const {
  std::ostringstream out;
  out.precision(17);
  out << "removed,observed,delta,negligible\n";
  auto name = [&](ClassId id) { return labels && labels->contains(id) ? labels->name(id) : std::to_string(id); };
  for (std::size_t i = 0; i < removed.size(); ++i) {
    for (std::size_t j = 0; j < observed.size(); ++j) {
      const auto& d = delta[i * observed.size() + j];
      if (!d) continue;
      out << name(removed[i]) << ',' << name(observed[j]) << ',' << *d << ',' << (negligible(*d) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

ImpactMatrix removal_impact_matrix(const MetricReport& baseline, std::span<const RemovalScore> removal) {
  std::map<ClassId, std::vector<ClassImageScore>> by_removed;
  for (const auto& rs : removal) {
    if (rs.score.metric != baseline.metric) fail(ErrorCode::ClassMismatch, "removal and baseline metrics differ");
    if (!baseline.class_value(rs.score.class_id) && rs.score.value)
      fail(ErrorCode::ClassMismatch,
           "class " + std::to_string(rs.score.class_id) + " is observed under removal but absent from the baseline");
    if (rs.score.class_id != rs.removed) by_removed[rs.removed].push_back(rs.score);
  }
  ImpactMatrix m;
  for (const auto& c : baseline.classes) m.observed.push_back(c.class_id);
  for (const auto& [r, scores] : by_removed) m.removed.push_back(r);
  m.delta.assign(m.removed.size() * m.observed.size(), std::nullopt);
  for (std::size_t i = 0; i < m.removed.size(); ++i) {
    const auto& scores = by_removed[m.removed[i]];
    const bool any_present = std::any_of(scores.begin(), scores.end(), [](const auto& s) { return s.value.has_value(); });
    if (!any_present) continue;
    const MetricReport under = aggregate(scores);
    for (std::size_t j = 0; j < m.observed.size(); ++j) {
      if (m.observed[j] == m.removed[i]) continue;
      const auto v = under.class_value(m.observed[j]);
      if (v) m.delta[i * m.observed.size() + j] = *v - baseline.class_value(m.observed[j]).value();
    }
  }
  return m;
}

}  // namespace sforge::metrics
