#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scenerouter/classifier.hpp"
#include "scenerouter/encoder.hpp"
#include "scenerouter/experts.hpp"
#include "scenerouter/features.hpp"

namespace scenerouter {

// labels[w][i] is the 1-based cluster of segment i of window w.
using SegmentLabels = std::vector<std::vector<int>>;

// Per-segment ADE of every expert: errors[m][w][i].
using SegmentErrors = std::vector<std::vector<std::vector<double>>>;

// K x M matrix of per-cluster mean ADE. Cells with count 0 are absent.
struct EvidenceTable {
  std::size_t k = 0;
  std::vector<std::string> expert_names;
  Matrix ade;                                   // [cluster][expert]
  std::vector<std::vector<std::size_t>> counts;  // [cluster][expert]
  std::string split_id = "evidence";

  std::size_t experts() const { return expert_names.size(); }
  bool present(std::size_t cluster, std::size_t expert) const {
    return counts[cluster][expert] > 0;
  }
  // Sample-weighted mean over clusters; NaN for an expert with no evidence.
  std::vector<double> global_ade() const;

  void save(std::ostream& out) const;
  static EvidenceTable load(std::istream& in);
};

SegmentErrors segment_errors(const ExpertPool& pool, std::span<const SceneWindow> windows,
                             std::size_t threads = 1);

// Aggregates per-segment errors into the cluster x expert table.
EvidenceTable evidence_from_errors(const SegmentErrors& errors, const SegmentLabels& labels,
                                   std::size_t k, std::vector<std::string> expert_names);

EvidenceTable build_evidence(const ExpertPool& pool, std::span<const SceneWindow> windows,
                             const SegmentLabels& labels, std::size_t k,
                             std::size_t threads = 1);

struct PolicyEntry {
  int cluster = 1;
  std::size_t expert_index = 1;  // 1-based
  std::string expert_name;
  double evidence_ade = 0.0;
  std::size_t sample_count = 0;
  bool fallback = false;  // cluster had no evidence; mapped to the global best

  friend bool operator==(const PolicyEntry&, const PolicyEntry&) = default;
};

struct PolicyTable {
  std::size_t version = 1;
  std::vector<PolicyEntry> entries;  // entries[k - 1] for cluster k

  std::size_t k() const { return entries.size(); }
  const PolicyEntry& lookup(int cluster) const;

  void save(std::ostream& out) const;
  static PolicyTable load(std::istream& in);

  friend bool operator==(const PolicyTable&, const PolicyTable&) = default;
};

// Column-wise argmin (ties to the lower expert index). Throws NoEvidence when
// every cell is absent.
PolicyTable build_policy(const EvidenceTable& evidence, std::size_t version = 1);

// Sample-weighted ADE of the policy's choices on the evidence split.
double policy_ade(const EvidenceTable& evidence, const PolicyTable& policy);

struct Registration {
  EvidenceTable evidence;
  PolicyTable policy;
};

// Adds `expert` to the pool, evaluates only that expert on the holdout and
// rebuilds the policy with a bumped version.
Registration register_expert(ExpertPool& pool, std::shared_ptr<const Expert> expert,
                             std::span<const SceneWindow> holdout, const SegmentLabels& labels,
                             const EvidenceTable& evidence, const PolicyTable& policy,
                             std::size_t threads = 1);

// Classifier input for a raw feature vector: standardized features, or the
// encoded representation when `encoded` is set.
std::vector<double> classifier_input(const SceneFeatureVector& z, const ClusterModel& model,
                                     bool encoded);

struct RoutingDecision {
  std::int64_t window_id = 0;
  std::int64_t agent_id = 0;
  int predicted_label = 1;
  std::size_t expert_index = 1;  // 1-based
  std::string expert_name;
  std::vector<double> probabilities;
  double feature_us = 0.0;
  double classify_us = 0.0;
  double predict_us = 0.0;
};

struct RouteResult {
  std::vector<Prediction> predictions;
  std::vector<RoutingDecision> decisions;
};

// Frozen classify-then-dispatch pipeline. Exactly one expert call per segment.
class Router {
 public:
  // Throws VersionMismatch when classifier and policy disagree on K or the
  // policy names an expert missing from the pool.
  Router(FeatureConfig features, ClusterModel cluster_model, SceneClassifier classifier,
         PolicyTable policy, ExpertPool pool, bool encoded_input = false);

  RouteResult route(const SceneWindow& window) const;
  // Routes with given cluster labels instead of classifier predictions.
  RouteResult route_with_labels(const SceneWindow& window, std::span<const int> labels) const;

  const PolicyTable& policy() const { return policy_; }
  const ExpertPool& pool() const { return pool_; }
  const SceneClassifier& classifier() const { return classifier_; }

 private:
  FeatureConfig features_;
  ClusterModel cluster_model_;
  SceneClassifier classifier_;
  PolicyTable policy_;
  ExpertPool pool_;
  bool encoded_input_;
  std::vector<std::size_t> pool_index_;  // per cluster, 0-based pool slot
};

void write_decisions_csv(std::ostream& out, std::span<const RoutingDecision> decisions,
                         bool include_latency = true);
void write_predictions_csv(std::ostream& out, std::int64_t window_id,
                           std::span<const Prediction> predictions, bool header);

}  // namespace scenerouter
