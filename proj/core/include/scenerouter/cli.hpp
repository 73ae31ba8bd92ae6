#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scenerouter/eval.hpp"
#include "scenerouter/pipeline.hpp"

namespace scenerouter {

// Artifact file names inside a run directory.
namespace artifact {
inline constexpr const char* kManifest = "manifest.txt";
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kClusterModel = "cluster_model.txt";
inline constexpr const char* kClusterStats = "cluster_statistics.csv";
inline constexpr const char* kClassifier = "classifier.txt";
inline constexpr const char* kTrainReport = "train_report.csv";
inline constexpr const char* kConfusion = "confusion.txt";
inline constexpr const char* kPool = "pool.txt";
inline constexpr const char* kEvidence = "evidence.csv";
inline constexpr const char* kPolicy = "policy.csv";
inline constexpr const char* kHoldout = "holdout_windows.csv";
inline constexpr const char* kMetrics = "metrics.csv";
inline constexpr const char* kClusterMetrics = "cluster_metrics.csv";
inline constexpr const char* kPolicyDiff = "policy_diff.csv";
}  // namespace artifact

struct RunSummary {
  MetricResult routed_test;
  MetricResult routed_evidence;
  std::size_t k = 0;
};

// Full pipeline; writes every artifact into cfg.out. Stage failures are
// rethrown with the stage name; artifacts written so far are kept.
RunSummary cmd_run(const PipelineConfig& cfg, std::ostream& log);

struct RouteSummary {
  std::size_t windows = 0;
  std::size_t segments = 0;
  bool has_ground_truth = false;
  double ade = 0.0;
  double fde = 0.0;
};

// Routes a trajectory file (frame agent x y) or a window CSV through the
// frozen artifacts in model_dir; writes predictions.csv and decisions.csv
// into out_dir.
RouteSummary cmd_route(const std::filesystem::path& model_dir, const std::filesystem::path& input,
                       const std::filesystem::path& out_dir, std::size_t threads,
                       std::ostream& log);

struct AddExpertSummary {
  std::size_t old_version = 0;
  std::size_t new_version = 0;
  std::vector<int> remapped_clusters;
};

// Registers an expert given as a pool manifest line; only evidence, policy
// and pool files change.
AddExpertSummary cmd_add_expert(const std::filesystem::path& model_dir, const std::string& spec,
                                std::size_t threads, std::ostream& log);

std::vector<AblationRow> cmd_ablate(const PipelineConfig& cfg, std::span<const Variant> variants,
                                    std::ostream& log);
SweepResult cmd_sweep(const PipelineConfig& cfg, std::span<const std::size_t> ks,
                      std::ostream& log);
// Writes the synthetic benchmark as trajectories.txt plus regimes.csv.
void cmd_synth(const PipelineConfig& cfg, std::ostream& log);
// Derived report tables and plot data for a finished run directory.
void cmd_report(const std::filesystem::path& model_dir, std::ostream& log);

// Checks the manifest against the config and artifact files on disk.
void verify_manifest(const std::filesystem::path& model_dir,
                     std::span<const std::string> artifacts);

}  // namespace scenerouter
