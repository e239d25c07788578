#pragma once

#include <cstddef>
#include <vector>

#include "visyield/distributions.hpp"
#include "visyield/rng.hpp"

namespace vis {

/// Silhouette value reported for single-cluster results, where the
/// coefficient is undefined.
inline constexpr double kSilhouetteUndefined = -2.0;

struct ClusteringResult {
  std::vector<int> labels;
  Points centroids;
  double mean_silhouette = kSilhouetteUndefined;

  std::size_t num_clusters() const noexcept { return centroids.size(); }
  std::vector<std::size_t> counts() const;
};

struct ClusterConfig {
  int k_max = 8;
  double accept_threshold = 0.25;
  int max_lloyd_iters = 100;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded to the
/// point farthest from its centroid.
ClusteringResult kmeans(const Points& points, std::size_t k, RandomStream& rng, int max_iters = 100);

/// Mean over points of (b - a) / max(a, b), with a the distance to the point's
/// own centroid and b the distance to the nearest other centroid. O(N k D).
double silhouette_score(const Points& points, const std::vector<int>& labels);

/// Runs k-means for k = 2..min(k_max, N) and keeps the k with the best
/// silhouette; falls back to a single cluster below `accept_threshold`.
ClusteringResult select_clusters(const Points& points, const ClusterConfig& cfg, RandomStream& rng);

/// Single-cluster result covering every point.
ClusteringResult single_cluster(const Points& points);

}  // namespace vis
