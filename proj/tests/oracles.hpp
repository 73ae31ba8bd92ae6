#pragma once

// Naive reference implementations used by the unit and acceptance tests.
// They follow the definitions directly with plain loops and left-to-right
// sums, sharing no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "scenerouter/classifier.hpp"
#include "scenerouter/experts.hpp"
#include "scenerouter/features.hpp"
#include "scenerouter/random.hpp"
#include "scenerouter/trajdata.hpp"

namespace oracle {

using scenerouter::Path;
using scenerouter::Prediction;
using scenerouter::Rng;
using scenerouter::SceneWindow;
using scenerouter::TrajectorySegment;
using scenerouter::Vec2;

inline double dist(Vec2 a, Vec2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline double ade(const std::vector<Prediction>& preds, const std::vector<TrajectorySegment>& truth) {
  double total = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t t = 0; t < preds[i].predicted.size(); ++t) {
      total += dist(preds[i].predicted[t], truth[i].future[t]);
      n += 1.0;
    }
  }
  return total / n;
}

inline double fde(const std::vector<Prediction>& preds, const std::vector<TrajectorySegment>& truth) {
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += dist(preds[i].predicted.back(), truth[i].future.back());
  }
  return total / static_cast<double>(preds.size());
}

// All seven components for segment `i`, straight from the definitions.
inline std::vector<double> features(const SceneWindow& w, std::size_t i, double r_neighbor,
                                    double dt, double eps = 1e-6) {
  const Path& obs = w.segments[i].observed;
  const std::size_t T = obs.size();
  std::vector<double> speeds;
  for (std::size_t t = 0; t + 1 < T; ++t) speeds.push_back(dist(obs[t + 1], obs[t]) / dt);
  double mean_speed = 0.0;
  double max_speed = 0.0;
  for (double s : speeds) {
    mean_speed += s;
    max_speed = std::max(max_speed, s);
  }
  mean_speed /= static_cast<double>(speeds.size());
  double var = 0.0;
  for (double s : speeds) var += (s - mean_speed) * (s - mean_speed);
  var /= static_cast<double>(T - 1);

  double density = 0.0;
  double mean_dist = 0.0;
  const std::size_t n = w.segments.size();
  if (n == 1) {
    mean_dist = 10.0 * r_neighbor;
  } else {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = dist(w.segments[j].observed[t], obs[t]);
        if (d < r_neighbor) density += 1.0;
        mean_dist += d;
      }
    }
    density /= static_cast<double>(T);
    mean_dist /= static_cast<double>(T * (n - 1));
  }

  double curv = 0.0;
  for (std::size_t t = 1; t + 1 < T; ++t) {
    const double ax = obs[t + 1].x - obs[t].x, ay = obs[t + 1].y - obs[t].y;
    const double bx = obs[t].x - obs[t - 1].x, by = obs[t].y - obs[t - 1].y;
    const double len = std::sqrt(ax * ax + ay * ay);
    if (len < eps) continue;
    curv += std::fabs(ax * by - ay * bx) / (len * len * len);
  }
  curv /= static_cast<double>(T - 2);

  double rel = 0.0;
  if (n > 1) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = dist(w.segments[j].observed[T - 1], obs[T - 1]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    const Path& o = w.segments[best].observed;
    const double vx = (obs[T - 1].x - obs[T - 2].x) / dt - (o[T - 1].x - o[T - 2].x) / dt;
    const double vy = (obs[T - 1].y - obs[T - 2].y) / dt - (o[T - 1].y - o[T - 2].y) / dt;
    rel = std::sqrt(vx * vx + vy * vy);
  }
  return {mean_speed, var, max_speed, density, mean_dist, curv, rel};
}

// Random window: n agents, t_obs + t_pred frames of a jittered random walk.
inline SceneWindow random_window(Rng& rng, std::size_t n, std::size_t t_obs, std::size_t t_pred,
                                 double dt = 0.4, double spread = 3.0) {
  SceneWindow w;
  w.window_id = static_cast<std::int64_t>(rng.index(1000));
  for (std::size_t a = 0; a < n; ++a) {
    TrajectorySegment seg;
    seg.agent_id = static_cast<std::int64_t>(a + 1);
    seg.dt = dt;
    Vec2 p{rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
    Vec2 v{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    for (std::size_t t = 0; t < t_obs + t_pred; ++t) {
      (t < t_obs ? seg.observed : seg.future).push_back(p);
      v += Vec2{rng.normal(0.0, 0.3), rng.normal(0.0, 0.3)};
      p += dt * v;
    }
    w.segments.push_back(seg);
  }
  return w;
}

inline double tree_walk(const std::vector<scenerouter::DecisionTree::Node>& nodes, int at,
                        const std::vector<double>& x) {
  const auto& node = nodes[static_cast<std::size_t>(at)];
  if (node.feature < 0) return node.value;
  return x[static_cast<std::size_t>(node.feature)] <= node.threshold
             ? tree_walk(nodes, node.left, x)
             : tree_walk(nodes, node.right, x);
}

inline std::vector<double> proba(const scenerouter::SceneClassifier& model,
                                 const std::vector<double>& x) {
  std::vector<double> s = model.base_scores();
  for (std::size_t c = 0; c < model.k(); ++c) {
    for (const auto& tree : model.streams()[c]) s[c] += tree_walk(tree.nodes(), 0, x);
  }
  const double peak = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double& v : s) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : s) v /= total;
  return s;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Lowest within-cluster sum of squares over all 2-partitions of the rows.
inline double best_two_partition(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t dim = rows.front().size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << n); ++mask) {
    if (mask & 1) continue;  // fix row 0 in the second group to halve the search
    double cost = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> c(dim, 0.0);
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1) != static_cast<std::uint64_t>(side)) continue;
        for (std::size_t d = 0; d < dim; ++d) c[d] += rows[i][d];
        m += 1.0;
      }
      for (double& v : c) v /= m;
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1) == static_cast<std::uint64_t>(side)) cost += sq_dist(rows[i], c);
      }
    }
    best = std::min(best, cost);
  }
  return best;
}

}  // namespace oracle
