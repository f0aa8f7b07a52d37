#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <vector>

namespace hwocr {

template <std::size_t N>
using FeaturePoint = std::array<double, N>;

template <std::size_t N>
struct Cluster {
  FeaturePoint<N> center{};
  std::vector<FeaturePoint<N>> members;
};

template <std::size_t N>
double squared_distance(const FeaturePoint<N>& a, const FeaturePoint<N>& b) {
  double s = 0;
  for (std::size_t i = 0; i < N; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Deterministic k-means (Lloyd). Points are sorted first, so the result does
/// not depend on input order. The first center is the lexicographically
/// smallest point; each further center is the point farthest from the chosen
/// ones (earliest in sorted order on ties). `k` is capped at the number of
/// distinct points. Empty clusters are dropped from the result.
template <std::size_t N>
std::vector<Cluster<N>> kmeans(std::vector<FeaturePoint<N>> points, std::size_t k,
                               int max_iterations = 100) {
  if (points.empty() || k == 0) return {};
  std::sort(points.begin(), points.end());
  std::size_t unique_count = 1;
  for (std::size_t i = 1; i < points.size(); ++i) unique_count += points[i] != points[i - 1];
  k = std::min(k, unique_count);

  std::vector<FeaturePoint<N>> centers{points.front()};
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    std::size_t far = 0;
    double best = -1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centers.back()));
      if (nearest[i] > best) {
        best = nearest[i];
        far = i;
      }
    }
    centers.push_back(points[far]);
  }

  std::vector<std::size_t> assign(points.size(), k);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best_c = 0;
      double best_d = squared_distance(points[i], centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c) {
        const double d = squared_distance(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<FeaturePoint<N>> sums(centers.size(), FeaturePoint<N>{});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t d = 0; d < N; ++d) sums[assign[i]][d] += points[i][d];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c)
      if (counts[c])
        for (std::size_t d = 0; d < N; ++d) centers[c][d] = sums[c][d] / double(counts[c]);
  }

  std::vector<Cluster<N>> out(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) out[c].center = centers[c];
  for (std::size_t i = 0; i < points.size(); ++i) out[assign[i]].members.push_back(points[i]);
  for (auto& c : out) {
    if (c.members.empty()) continue;
    FeaturePoint<N> mean{};
    for (const auto& p : c.members)
      for (std::size_t d = 0; d < N; ++d) mean[d] += p[d];
    for (std::size_t d = 0; d < N; ++d) mean[d] /= double(c.members.size());
    c.center = mean;
  }
  std::erase_if(out, [](const Cluster<N>& c) { return c.members.empty(); });
  return out;
}

}  // namespace hwocr
