#include "visyield/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "visyield/errors.hpp"

namespace vis {

std::vector<std::size_t> ClusteringResult::counts() const {
  std::vector<std::size_t> c(centroids.size(), 0);
  for (int l : labels) ++c.at(static_cast<std::size_t>(l));
  return c;
}

namespace {

std::size_t nearest(const Vector& x, const Points& centroids, double* dist2 = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = (x - centroids[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

Points seed_plus_plus(const Points& points, std::size_t k, RandomStream& rng) {
  Points centroids;
  centroids.reserve(k);
  const auto n = points.size();
  centroids.push_back(points[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n]);
  std::vector<double> d2(n);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest(points[i], centroids, &d2[i]);
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= d2[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n;
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

void require_points(const Points& points, const char* who) {
  if (points.empty()) throw ContractViolation(std::string(who) + ": no points");
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ContractViolation(std::string(who) + ": points differ in dimension");
  }
}

}  // namespace

ClusteringResult single_cluster(const Points& points) {
  require_points(points, "single_cluster");
  ClusteringResult r;
  r.labels.assign(points.size(), 0);
  Vector mean = Vector::Zero(points.front().size());
  for (const auto& p : points) mean += p;
  r.centroids.push_back(mean / static_cast<double>(points.size()));
  return r;
}

ClusteringResult kmeans(const Points& points, std::size_t k, RandomStream& rng, int max_iters) {
  require_points(points, "kmeans");
  if (k < 1 || k > points.size()) {
    throw ContractViolation("kmeans: k = " + std::to_string(k) + " must lie in [1, " +
                            std::to_string(points.size()) + "]");
  }
  if (k == 1) return single_cluster(points);

  const auto n = points.size();
  const auto dim = points.front().size();
  ClusteringResult r;
  r.centroids = seed_plus_plus(points, k, rng);
  r.labels.assign(n, -1);

  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(nearest(points[i], r.centroids));
      if (c != r.labels[i]) {
        r.labels[i] = c;
        changed = true;
      }
    }

    // Reseed empty clusters to the point farthest from its own centroid.
    std::vector<std::size_t> counts(k, 0);
    for (int l : r.labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(r.labels[i]);
        if (counts[own] < 2) continue;
        const double d = (points[i] - r.centroids[own]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(r.labels[far])];
      r.labels[far] = static_cast<int>(c);
      counts[c] = 1;
      changed = true;
    }

    Points sums(k, Vector::Zero(dim));
    for (std::size_t i = 0; i < n; ++i) sums[static_cast<std::size_t>(r.labels[i])] += points[i];
    for (std::size_t c = 0; c < k; ++c) r.centroids[c] = sums[c] / static_cast<double>(counts[c]);

    if (!changed) break;
  }
  return r;
}

double silhouette_score(const Points& points, const std::vector<int>& labels) {
  require_points(points, "silhouette_score");
  if (labels.size() != points.size()) throw ContractViolation("silhouette_score: label count mismatch");
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw ContractViolation("silhouette_score: negative label");
    k = std::max(k, l + 1);
  }
  const auto dim = points.front().size();
  Points centroids(static_cast<std::size_t>(k), Vector::Zero(dim));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    centroids[static_cast<std::size_t>(labels[i])] += points[i];
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  std::size_t nonempty = 0;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] == 0) continue;
    centroids[c] /= static_cast<double>(counts[c]);
    ++nonempty;
  }
  if (nonempty < 2) throw ContractViolation("silhouette_score: needs at least two nonempty clusters");

  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    const double a = (points[i] - centroids[own]).norm();
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, (points[i] - centroids[c]).norm());
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(points.size());
}

ClusteringResult select_clusters(const Points& points, const ClusterConfig& cfg, RandomStream& rng) {
  require_points(points, "select_clusters");
  // Cluster in lexicographic order so the result does not depend on input order.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::lexicographical_compare(points[i].begin(), points[i].end(), points[j].begin(), points[j].end());
  });
  Points sorted;
  sorted.reserve(points.size());
  for (auto i : order) sorted.push_back(points[i]);

  const std::size_t k_hi = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.k_max, 1)), points.size());
  std::optional<ClusteringResult> best;
  for (std::size_t k = 2; k <= k_hi; ++k) {
    auto candidate = kmeans(sorted, k, rng, cfg.max_lloyd_iters);
    candidate.mean_silhouette = silhouette_score(sorted, candidate.labels);
    if (!best || candidate.mean_silhouette > best->mean_silhouette) best = std::move(candidate);
  }
  if (!best || best->mean_silhouette < cfg.accept_threshold) return single_cluster(points);

  ClusteringResult out;
  out.centroids = std::move(best->centroids);
  out.mean_silhouette = best->mean_silhouette;
  out.labels.assign(points.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) out.labels[order[r]] = best->labels[r];
  return out;
}

}  // namespace vis
