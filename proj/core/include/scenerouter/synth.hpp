#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "scenerouter/trajdata.hpp"

namespace scenerouter {

// Scene regimes of the synthetic benchmark. Each is built so that one of the
// built-in experts matches its dynamics.
enum class Regime : int {
  kDenseCrowd = 0,     // slow packed group, pairwise repulsion
  kMediumFlow = 1,     // medium speed, constant acceleration
  kSparseStatic = 2,   // few near-static agents, straight lines
  kLowDensity = 3,     // far-apart fast walkers, noisy observations
  kComplexMotion = 4,  // fast circular motion
};

inline constexpr std::size_t kRegimeCount = 5;
inline constexpr std::array<std::string_view, kRegimeCount> kRegimeNames = {
    "dense_crowd", "medium_flow", "sparse_static", "low_density", "complex_motion"};

struct SynthParams {
  std::uint64_t seed = 42;
  std::size_t windows_per_regime = 200;
  int t_obs = 8;
  int t_pred = 12;
  double dt = 0.4;
  // Crowd interaction law, shared with the repulsion expert's defaults.
  double repulsion_strength = 0.3;
  double repulsion_range = 0.5;
  double noise_sigma = 0.01;  // low-density regime only
};

struct SynthDataset {
  std::vector<SceneWindow> windows;
  std::vector<Regime> regimes;  // diagnostic tag per window; never used for training
};

// Window w has regime w % 5 and is generated from its own sub-seed, so any
// window can be regenerated independently. Frame ranges never overlap and
// agent ids are unique across the dataset.
SynthDataset synth_benchmark(const SynthParams& params);

SceneWindow synth_window(const SynthParams& params, std::size_t window_index);
Regime regime_of(std::size_t window_index);

void write_regimes_csv(std::ostream& out, const SynthDataset& data);

}  // namespace scenerouter
