#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "siamte/errors.hpp"
#include "siamte/rng.hpp"

namespace siamte {

struct KMeansResult {
  std::vector<Eigen::VectorXd> centers;
  std::vector<int> assignment;
  double inertia = 0.0;
};

namespace detail {

inline KMeansResult kmeans_once(const std::vector<Eigen::VectorXd>& pts, int K, Rng& rng,
                                int max_iters) {
  int n = int(pts.size());
  KMeansResult res;
  res.centers.reserve(K);

  // k-means++ seeding: first center uniform, later ones proportional to the
  // squared distance to the nearest chosen center.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  res.centers.push_back(pts[rng.uniform_int(n)]);
  while (int(res.centers.size()) < K) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = (pts[i] - res.centers.back()).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    int pick = 0;
    if (total > 0) {
      double target = rng.uniform() * total, acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(n);
    }
    res.centers.push_back(pts[pick]);
  }

  res.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        double d = (pts[i] - res.centers[k]).squaredNorm();
        if (d < bd) {
          bd = d;
          best = k;
        }
      }
      if (best != res.assignment[i]) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::vector<Eigen::VectorXd> sums(K, Eigen::VectorXd::Zero(pts[0].size()));
    std::vector<int> counts(K, 0);
    for (int i = 0; i < n; ++i) {
      sums[res.assignment[i]] += pts[i];
      ++counts[res.assignment[i]];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[k] > 0) {
        res.centers[k] = sums[k] / counts[k];
      } else {
        // Revive an empty cluster at the point farthest from its center.
        int far = 0;
        double fd = -1.0;
        for (int i = 0; i < n; ++i) {
          double d = (pts[i] - res.centers[res.assignment[i]]).squaredNorm();
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        res.centers[k] = pts[far];
      }
    }
  }

  res.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    res.inertia += (pts[i] - res.centers[res.assignment[i]]).squaredNorm();
  return res;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the best of `restarts` runs by
/// inertia wins. Deterministic in (points, K, seed).
inline KMeansResult kmeans(const std::vector<Eigen::VectorXd>& pts, int K, uint64_t seed,
                           int restarts = 10, int max_iters = 100) {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (int(pts.size()) < K)
    throw ConfigError("K exceeds the number of samples: " + std::to_string(K) + " > " +
                      std::to_string(pts.size()));
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(Rng::derive(seed, uint64_t(r)));
    KMeansResult res = detail::kmeans_once(pts, K, rng, max_iters);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

}  // namespace siamte
