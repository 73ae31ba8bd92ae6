#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scenerouter/classifier.hpp"
#include "scenerouter/encoder.hpp"
#include "scenerouter/experts.hpp"
#include "scenerouter/features.hpp"
#include "scenerouter/scheduler.hpp"
#include "scenerouter/trajdata.hpp"

namespace scenerouter {

struct PipelineConfig {
  // "synth" or a comma-separated list of trajectory files.
  std::string dataset = "synth";
  WindowParams window;
  FeatureConfig features;

  std::size_t k = 5;
  std::size_t projected_dim = 64;
  double sparsity = 0.5;
  double softmax_temperature = 8.0;
  bool cluster_on_raw = false;
  std::size_t kmeans_restarts = 10;
  std::size_t kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;

  BoostingParams boosting;
  bool classifier_on_encoded = false;

  // Empty: the five built-in experts with default parameters.
  std::string pool_manifest;
  std::vector<std::string> reduced_pool = {"constant_velocity", "constant_acceleration",
                                           "kalman_cv"};

  double train_fraction = 0.5;
  double evidence_fraction = 0.25;
  double test_fraction = 0.25;
  std::size_t augment_copies = 1;

  std::size_t synth_windows_per_regime = 200;

  std::uint64_t seed = 42;
  // Not part of the config hash: neither changes any result.
  std::size_t threads = 1;
  std::filesystem::path out = "out";

  void validate() const;
  // Applies one key=value assignment; unknown keys are an error.
  void set(std::string_view key, std::string_view value);
  // Reads a key=value file ('#' comments).
  static PipelineConfig load(const std::filesystem::path& path);
  // Canonical text of every result-relevant key, in a fixed order.
  std::string to_text() const;
  std::uint64_t hash() const;
};

// Loads and windows the configured dataset, or generates the synthetic
// benchmark. Window parameters come from the config.
std::vector<SceneWindow> load_windows(const PipelineConfig& cfg);

struct Split {
  std::vector<SceneWindow> train;
  std::vector<SceneWindow> evidence;
  std::vector<SceneWindow> test;
};

// Seeded partition by window; each part keeps the original window order.
Split split_windows(std::span<const SceneWindow> windows, const PipelineConfig& cfg);

// Training windows followed by `augment_copies` randomly transformed copies
// of each (rotation, translation, scale about the window centroid).
std::vector<SceneWindow> augment_training(std::span<const SceneWindow> train,
                                          const PipelineConfig& cfg);

using WindowFeatures = std::vector<std::vector<SceneFeatureVector>>;

WindowFeatures extract_window_features(std::span<const SceneWindow> windows,
                                       const FeatureConfig& cfg, std::size_t threads);

// K-independent stages: split, featurize, pool construction and the
// per-segment expert errors on the evidence split.
struct PreparedData {
  Split split;
  std::vector<FeatureRow> train_rows;  // includes augmented copies
  WindowFeatures evidence_features;
  WindowFeatures test_features;
  ExpertPool pool;
  SegmentErrors evidence_errors;
};

PreparedData prepare(std::span<const SceneWindow> windows, const PipelineConfig& cfg);

struct PipelineModel {
  FeatureConfig features;
  bool classifier_on_encoded = false;
  ClusterFit cluster;
  TrainResult classifier;
  ExpertPool pool;
  SegmentLabels evidence_labels;
  EvidenceTable evidence;
  PolicyTable policy;

  Router router() const;
};

// Cluster, train, and build evidence and policy at the given K.
PipelineModel fit_model(const PreparedData& data, const PipelineConfig& cfg, std::size_t k);

SegmentLabels label_windows(const WindowFeatures& features, const ClusterModel& model);
std::vector<std::vector<double>> classifier_rows(std::span<const FeatureRow> rows,
                                                 const ClusterModel& model, bool encoded);

// Rethrows a library error with the failing stage prepended to the message.
[[noreturn]] void rethrow_in_stage(std::string_view stage);

}  // namespace scenerouter
