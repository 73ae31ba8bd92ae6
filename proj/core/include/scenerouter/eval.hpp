#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenerouter/experts.hpp"
#include "scenerouter/metrics.hpp"
#include "scenerouter/pipeline.hpp"
#include "scenerouter/scheduler.hpp"

namespace scenerouter {

// Coordinate-wise mean of every expert's prediction.
std::vector<Prediction> uniform_ensemble(const ExpertPool& pool, const SceneWindow& window);

// Convex combination with weights normalized to sum 1 (AllZeroWeights when
// they sum to 0; InvalidArgument for negative or misaligned weights).
std::vector<Prediction> weighted_ensemble(const ExpertPool& pool, const SceneWindow& window,
                                          std::span<const double> weights);

// Weights proportional to 1 / global ADE on the evidence split.
std::vector<double> default_ensemble_weights(const EvidenceTable& evidence);

// Uniform expert draw per segment from a generator seeded with `seed`.
std::vector<Prediction> random_scheduler(const ExpertPool& pool, const SceneWindow& window,
                                         std::uint64_t seed);
// Expert slots (0-based) the random scheduler uses for a window.
std::vector<std::size_t> random_choices(std::size_t pool_size, std::size_t segments,
                                        std::uint64_t seed);

struct SegmentScore {
  int cluster = 1;
  double ade = 0.0;
  double fde = 0.0;
};

struct ClusterMetric {
  int cluster = 1;
  std::size_t n_segments = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct MetricResult {
  double ade = 0.0;
  double fde = 0.0;
  std::size_t n_segments = 0;
  std::vector<ClusterMetric> per_cluster;
};

MetricResult summarize(std::span<const SegmentScore> scores, std::size_t k);

// Scores of predictions against windows, clusters from `labels`.
std::vector<SegmentScore> score_predictions(std::span<const SceneWindow> windows,
                                            const std::vector<std::vector<Prediction>>& predictions,
                                            const SegmentLabels& labels);

MetricResult evaluate_router(const Router& router, std::span<const SceneWindow> windows,
                             const SegmentLabels& labels, std::size_t k, std::size_t threads);
MetricResult evaluate_expert(const Expert& expert, std::span<const SceneWindow> windows,
                             const SegmentLabels& labels, std::size_t k, std::size_t threads);

enum class Variant {
  kFull,
  kRandomLabels,
  kNoClustering,
  kRandomExpert,
  kUniformEnsemble,
  kSingleBest,
  kReducedPool,
};

inline constexpr std::size_t kVariantCount = 7;
std::string_view to_string(Variant variant);
// Throws UnknownVariant.
Variant parse_variant(std::string_view name);
std::vector<Variant> all_variants();

struct AblationConfig {
  Variant variant = Variant::kFull;
  std::uint64_t seed = 42;
};

struct AblationRow {
  Variant variant = Variant::kFull;
  MetricResult metrics;
  std::string detail;
};

// Runs the variants against one shared split and fitted base model.
std::vector<AblationRow> run_ablations(const PreparedData& data, const PipelineModel& base,
                                       const PipelineConfig& cfg,
                                       std::span<const Variant> variants);

// Full pipeline on `windows` followed by one variant on the test split.
MetricResult run_ablation(std::span<const SceneWindow> windows, const PipelineConfig& cfg,
                          const AblationConfig& ablation);

struct SweepRow {
  std::size_t k = 0;
  double val_accuracy = 0.0;
  double routed_ade = 0.0;
  double routed_fde = 0.0;
  double inertia = 0.0;
  std::size_t fallback_clusters = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best_k = 0;  // lowest routed ADE; near-ties go to the smaller K
};

// Relative tolerance under which two routed ADEs count as tied.
inline constexpr double kSweepTieTolerance = 1e-9;

SweepResult sweep_k(const PreparedData& data, const PipelineConfig& cfg,
                    std::span<const std::size_t> ks);
SweepResult sweep_k(std::span<const SceneWindow> windows, const PipelineConfig& cfg,
                    std::span<const std::size_t> ks);

void write_metric_rows_csv(std::ostream& out,
                           std::span<const std::pair<std::string, MetricResult>> rows);
void write_cluster_metrics_csv(std::ostream& out, const MetricResult& metrics);
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

// Two leading principal components of the rows, for scatter export.
std::vector<std::pair<double, double>> principal_components_2d(const Matrix& rows);

}  // namespace scenerouter
