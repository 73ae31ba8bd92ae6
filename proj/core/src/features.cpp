#include "scenerouter/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"

namespace scenerouter {

namespace {

// Isolated agents get a "far away" mean distance so the vector stays
// finite and clusterable.
constexpr double kIsolatedDistanceFactor = 10.0;

}  // namespace

void FeatureConfig::validate() const {
  if (!(r_neighbor > 0.0) || !(curvature_epsilon > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature config needs r_neighbor > 0, curvature_epsilon > 0, dt > 0");
  }
}

SceneFeatureVector SceneFeatureVector::from_values(std::span<const double> v, bool isolated) {
  if (v.size() != kDim) {
    throw Error(ErrorCode::kLengthMismatch, "feature vector must have 7 components");
  }
  SceneFeatureVector z;
  z.mean_speed = v[0];
  z.speed_variance = v[1];
  z.max_speed = v[2];
  z.local_density = v[3];
  z.mean_interagent_distance = v[4];
  z.mean_curvature = v[5];
  z.rel_speed_to_nearest = v[6];
  z.isolated = isolated;
  return z;
}

SpeedStats speed_stats(const TrajectorySegment& segment, double dt) {
  const auto& obs = segment.observed;
  if (obs.size() < 2) {
    throw Error(ErrorCode::kDegenerateSegment,
                "speed statistics need at least 2 observed points");
  }
  std::vector<double> speeds(obs.size() - 1);
  for (std::size_t t = 0; t + 1 < obs.size(); ++t) {
    speeds[t] = distance(obs[t + 1], obs[t]) / dt;
  }
  SpeedStats stats;
  stats.mean = mean(speeds);
  std::vector<double> sq(speeds.size());
  for (std::size_t t = 0; t < speeds.size(); ++t) {
    const double d = speeds[t] - stats.mean;
    sq[t] = d * d;
  }
  stats.variance = mean(sq);
  stats.max = *std::max_element(speeds.begin(), speeds.end());
  // Rounding in the mean can put it a hair above the max of equal samples.
  stats.mean = std::min(stats.mean, stats.max);
  return stats;
}

DensityStats local_density(const SceneWindow& window, std::size_t index,
                           const FeatureConfig& cfg) {
  const auto& self = window.segments.at(index);
  DensityStats out;
  if (window.segments.size() < 2) {
    out.mean_distance = kIsolatedDistanceFactor * cfg.r_neighbor;
    out.isolated = true;
    return out;
  }
  const std::size_t frames = self.observed.size();
  std::vector<double> counts(frames, 0.0);
  std::vector<double> distances;
  distances.reserve(frames * (window.segments.size() - 1));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < window.segments.size(); ++j) {
      if (j == index) continue;
      const double d = distance(window.segments[j].observed[t], self.observed[t]);
      distances.push_back(d);
      if (d < cfg.r_neighbor) counts[t] += 1.0;
    }
  }
  out.local_density = mean(counts);
  out.mean_distance = mean(distances);
  return out;
}

double curvature_profile(const TrajectorySegment& segment, const FeatureConfig& cfg) {
  const auto& obs = segment.observed;
  if (obs.size() < 3) {
    throw Error(ErrorCode::kDegenerateSegment, "curvature needs at least 3 observed points");
  }
  std::vector<double> kappa(obs.size() - 2, 0.0);
  for (std::size_t t = 1; t + 1 < obs.size(); ++t) {
    const Vec2 ahead = obs[t + 1] - obs[t];
    const Vec2 behind = obs[t] - obs[t - 1];
    const double step = ahead.norm();
    if (step < cfg.curvature_epsilon) continue;
    kappa[t - 1] = std::abs(cross(ahead, behind)) / (step * step * step);
  }
  return mean(kappa);
}

double relative_velocity_to_nearest(const SceneWindow& window, std::size_t index, double dt) {
  const auto& self = window.segments.at(index);
  if (window.segments.size() < 2) return 0.0;
  const std::size_t last = self.observed.size() - 1;
  if (last < 1) {
    throw Error(ErrorCode::kDegenerateSegment, "relative velocity needs 2 observed points");
  }
  std::size_t nearest = index;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < window.segments.size(); ++j) {
    if (j == index) continue;
    const double d = distance(window.segments[j].observed[last], self.observed[last]);
    if (d < best) {
      best = d;
      nearest = j;
    }
  }
  const auto& other = window.segments[nearest].observed;
  const Vec2 v_self = (self.observed[last] - self.observed[last - 1]) / dt;
  const Vec2 v_other = (other[last] - other[last - 1]) / dt;
  return (v_self - v_other).norm();
}

SceneFeatureVector extract(const SceneWindow& window, std::size_t index,
                           const FeatureConfig& cfg) {
  const auto& seg = window.segments.at(index);
  if (seg.observed.size() < 3) {
    throw Error(ErrorCode::kDegenerateSegment,
                "segment of agent " + std::to_string(seg.agent_id) + " has " +
                    std::to_string(seg.observed.size()) + " observed points (need >= 3)");
  }
  const double divisor = cfg.speed_divisor();
  const SpeedStats speed = speed_stats(seg, divisor);
  const DensityStats density = local_density(window, index, cfg);
  SceneFeatureVector z;
  z.mean_speed = speed.mean;
  z.speed_variance = speed.variance;
  z.max_speed = speed.max;
  z.local_density = density.local_density;
  z.mean_interagent_distance = density.mean_distance;
  z.mean_curvature = curvature_profile(seg, cfg);
  z.rel_speed_to_nearest = relative_velocity_to_nearest(window, index, divisor);
  z.isolated = density.isolated;
  return z;
}

std::vector<SceneFeatureVector> extract_all(const SceneWindow& window, const FeatureConfig& cfg) {
  std::vector<SceneFeatureVector> out;
  out.reserve(window.segments.size());
  for (std::size_t i = 0; i < window.segments.size(); ++i) out.push_back(extract(window, i, cfg));
  return out;
}

std::vector<FeatureRow> extract_rows(std::span<const SceneWindow> windows,
                                     const FeatureConfig& cfg) {
  std::vector<FeatureRow> rows;
  for (const auto& w : windows) {
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      rows.push_back({w.window_id, w.segments[i].agent_id, extract(w, i, cfg)});
    }
  }
  return rows;
}

void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows) {
  out << "window_id,agent_id";
  for (const auto name : kFeatureNames) out << ',' << name;
  out << ",isolated\n";
  for (const auto& row : rows) {
    out << row.window_id << ',' << row.agent_id;
    for (double v : row.features.values()) out << ',' << format_double(v);
    out << ',' << (row.features.isolated ? 1 : 0) << '\n';
  }
}

}  // namespace scenerouter
