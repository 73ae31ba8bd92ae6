#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "scenerouter/trajdata.hpp"

namespace scenerouter {

struct FeatureConfig {
  double r_neighbor = 2.0;          // meters
  double curvature_epsilon = 1e-6;  // meters; shorter steps contribute zero curvature
  double dt = 0.4;                  // seconds per frame
  // Speeds in meters per frame instead of meters per second.
  bool per_frame_units = false;

  void validate() const;
  double speed_divisor() const { return per_frame_units ? 1.0 : dt; }
};

// Interpretable per-segment scene descriptor, in fixed component order.
struct SceneFeatureVector {
  static constexpr std::size_t kDim = 7;

  double mean_speed = 0.0;                // m/s
  double speed_variance = 0.0;            // (m/s)^2
  double max_speed = 0.0;                 // m/s
  double local_density = 0.0;             // mean neighbor count
  double mean_interagent_distance = 0.0;  // m
  double mean_curvature = 0.0;            // 1/m
  double rel_speed_to_nearest = 0.0;      // m/s
  // True when the window had no other agent and the distance component is
  // the far sentinel rather than a measurement.
  bool isolated = false;

  std::array<double, kDim> values() const {
    return {mean_speed,    speed_variance,           max_speed,
            local_density, mean_interagent_distance, mean_curvature,
            rel_speed_to_nearest};
  }
  std::vector<double> to_vector() const {
    const auto v = values();
    return {v.begin(), v.end()};
  }
  static SceneFeatureVector from_values(std::span<const double> v, bool isolated = false);

  friend bool operator==(const SceneFeatureVector&, const SceneFeatureVector&) = default;
};

inline constexpr std::array<std::string_view, SceneFeatureVector::kDim> kFeatureNames = {
    "mean_speed",    "speed_variance", "max_speed",           "local_density",
    "mean_interagent_distance", "mean_curvature", "rel_speed_to_nearest"};

struct SpeedStats {
  double mean = 0.0;
  double variance = 0.0;
  double max = 0.0;
};

struct DensityStats {
  double local_density = 0.0;
  double mean_distance = 0.0;
  bool isolated = false;
};

// Step speeds |x[t+1] - x[t]| / dt over the observed points; variance is
// normalized by the number of steps (T_obs - 1).
SpeedStats speed_stats(const TrajectorySegment& segment, double dt);

// Neighbor count within r_neighbor and mean distance to the other agents,
// both averaged over the observed frames. `index` selects the segment.
DensityStats local_density(const SceneWindow& window, std::size_t index,
                           const FeatureConfig& cfg);

// Mean over interior observed points of |cross(a, b)| / |a|^3 with
// a = x[t+1] - x[t], b = x[t] - x[t-1].
double curvature_profile(const TrajectorySegment& segment, const FeatureConfig& cfg);

// |v_i - v_j*| at the last observed frame, j* the nearest other agent.
double relative_velocity_to_nearest(const SceneWindow& window, std::size_t index, double dt);

SceneFeatureVector extract(const SceneWindow& window, std::size_t index,
                           const FeatureConfig& cfg);
std::vector<SceneFeatureVector> extract_all(const SceneWindow& window, const FeatureConfig& cfg);

struct FeatureRow {
  std::int64_t window_id = 0;
  std::int64_t agent_id = 0;
  SceneFeatureVector features;
};

std::vector<FeatureRow> extract_rows(std::span<const SceneWindow> windows,
                                     const FeatureConfig& cfg);

void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows);

}  // namespace scenerouter
