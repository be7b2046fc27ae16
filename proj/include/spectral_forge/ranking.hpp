#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sforge::ranking {

/// Per-class aggregated values of one algorithm on one dataset. Higher is
/// better.
struct AlgorithmScores {
  std::string algorithm;
  std::string dataset;
  std::vector<double> class_values;
};

/// Means closer than this are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

struct DatasetRanking {
  std::string dataset;
  std::vector<std::string> algorithms;  // input order
  /// frequencies[a][k] = share of bootstraps in which algorithm a took rank
  /// k + 1. A tie over ranks {i..j} credits each tied algorithm 1/(j-i+1) on
  /// each of those ranks.
  std::vector<std::vector<double>> frequencies;
  std::vector<double> mean_rank;
  std::size_t n_boot = 0;
  std::uint64_t seed = 0;
};

/// Average ranks (1 = best) of `values`, ties sharing the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Paired bootstrap over class indices: every iteration draws one index
/// sample shared by all algorithms. Throws InvalidArgument (< 2 algorithms,
/// n_boot == 0, mixed datasets) or LengthMismatch.
DatasetRanking bootstrap_rank(std::span<const AlgorithmScores> scores, std::size_t n_boot, std::uint64_t seed);

struct OverallEntry {
  std::string algorithm;
  double mean_of_mean_ranks = 0.0;
};

struct RankingReport {
  std::vector<DatasetRanking> datasets;
  /// Ascending by mean_of_mean_ranks; equal scores keep first-dataset order.
  std::vector<OverallEntry> overall;
};

/// Throws AlgorithmSetMismatch or EmptyInput.
RankingReport overall_ranking(std::vector<DatasetRanking> datasets);

std::string to_json(const RankingReport& report);
/// dataset,algorithm,rank,frequency rows for bubble plots.
std::string to_csv(const RankingReport& report);

}  // namespace sforge::ranking
