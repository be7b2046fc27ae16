#include "spectral_forge/ranking.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/rng.hpp"

namespace sforge::ranking {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[i]] - values[order[j]] <= kTieTolerance) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

DatasetRanking bootstrap_rank(std::span<const AlgorithmScores> scores, std::size_t n_boot, std::uint64_t seed) {
  if (scores.size() < 2) fail(ErrorCode::InvalidArgument, "ranking needs at least two algorithms");
  if (n_boot == 0) fail(ErrorCode::InvalidArgument, "n_boot must be positive");
  const std::size_t n_classes = scores.front().class_values.size();
  if (n_classes == 0) fail(ErrorCode::EmptyInput, "no class values");
  std::set<std::string> names;
  for (const auto& s : scores) {
    if (s.class_values.size() != n_classes)
      fail(ErrorCode::LengthMismatch, "algorithm '" + s.algorithm + "' has " + std::to_string(s.class_values.size()) +
                                          " class values, expected " + std::to_string(n_classes));
    if (s.dataset != scores.front().dataset) fail(ErrorCode::InvalidArgument, "scores span several datasets");
    if (!names.insert(s.algorithm).second) fail(ErrorCode::InvalidArgument, "duplicate algorithm '" + s.algorithm + "'");
  }

  const std::size_t n_alg = scores.size();
  DatasetRanking out;
  out.dataset = scores.front().dataset;
  out.n_boot = n_boot;
  out.seed = seed;
  for (const auto& s : scores) out.algorithms.push_back(s.algorithm);
  out.frequencies.assign(n_alg, std::vector<double>(n_alg, 0.0));
  out.mean_rank.assign(n_alg, 0.0);

  Rng rng(seed);
  std::vector<std::size_t> sample(n_classes);
  std::vector<double> means(n_alg);
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto& idx : sample) idx = rng.below(n_classes);
    for (std::size_t a = 0; a < n_alg; ++a) {
      double sum = 0.0;
      for (std::size_t idx : sample) sum += scores[a].class_values[idx];
      means[a] = sum / static_cast<double>(n_classes);
    }
    const auto ranks = average_ranks(means);
    for (std::size_t a = 0; a < n_alg; ++a) {
      out.mean_rank[a] += ranks[a];
      // A tie over ranks lo..hi has average (lo + hi) / 2 and size hi - lo + 1.
      const auto group = static_cast<std::size_t>(std::count(ranks.begin(), ranks.end(), ranks[a]));
      const auto lo = static_cast<std::size_t>(ranks[a] - static_cast<double>(group - 1) / 2.0 + 0.5);
      for (std::size_t k = lo; k < lo + group; ++k) out.frequencies[a][k - 1] += 1.0 / static_cast<double>(group);
    }
  }
  const double nb = static_cast<double>(n_boot);
  for (std::size_t a = 0; a < n_alg; ++a) {
    out.mean_rank[a] /= nb;
    for (double& f : out.frequencies[a]) f /= nb;
  }
  return out;
}

RankingReport overall_ranking(std::vector<DatasetRanking> datasets) {
  if (datasets.empty()) fail(ErrorCode::EmptyInput, "no dataset rankings");
  const auto& ref = datasets.front().algorithms;
  const std::set<std::string> ref_set(ref.begin(), ref.end());
  for (const auto& d : datasets)
    if (std::set<std::string>(d.algorithms.begin(), d.algorithms.end()) != ref_set || d.algorithms.size() != ref.size())
      fail(ErrorCode::AlgorithmSetMismatch, "dataset '" + d.dataset + "' ranks a different algorithm set");

  RankingReport report;
  for (const auto& name : ref) {
    double sum = 0.0;
    for (const auto& d : datasets) {
      const auto it = std::find(d.algorithms.begin(), d.algorithms.end(), name);
      sum += d.mean_rank[static_cast<std::size_t>(it - d.algorithms.begin())];
    }
    report.overall.push_back({name, sum / static_cast<double>(datasets.size())});
  }
  std::stable_sort(report.overall.begin(), report.overall.end(),
                   [](const OverallEntry& a, const OverallEntry& b) { return a.mean_of_mean_ranks < b.mean_of_mean_ranks; });
  report.datasets = std::move(datasets);
  return report;
}

std::string to_json(const RankingReport& report) {
  using nlohmann::json;
  json datasets = json::array();
  for (const auto& d : report.datasets) {
    json algs = json::array();
    for (std::size_t a = 0; a < d.algorithms.size(); ++a)
      algs.push_back({{"algorithm", d.algorithms[a]}, {"mean_rank", d.mean_rank[a]}, {"rank_frequencies", d.frequencies[a]}});
    datasets.push_back({{"dataset", d.dataset}, {"n_boot", d.n_boot}, {"seed", d.seed}, {"algorithms", algs}});
  }
  json overall = json::array();
  for (const auto& e : report.overall) overall.push_back({{"algorithm", e.algorithm}, {"mean_of_mean_ranks", e.mean_of_mean_ranks}});
  return json{{"datasets", datasets}, {"overall", overall}}.dump(2);
}

std::string to_csv(const RankingReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "dataset,algorithm,rank,frequency\n";
  for (const auto& d : report.datasets)
    for (std::size_t a = 0; a < d.algorithms.size(); ++a)
      for (std::size_t k = 0; k < d.frequencies[a].size(); ++k)
        out << d.dataset << ',' << d.algorithms[a] << ',' << (k + 1) << ',' << d.frequencies[a][k] << '\n';
  return out.str();
}

}  // namespace sforge::ranking
