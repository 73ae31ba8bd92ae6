#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace scenerouter {

using Matrix = std::vector<std::vector<double>>;
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

// Regression tree stored in preorder; node 0 is the root. Internal nodes
// send x[feature] <= threshold to the left child.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, already scaled by the step size

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes);

  double evaluate(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

struct BoostingParams {
  std::size_t max_depth = 4;
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  std::size_t early_stopping_rounds = 10;
  std::size_t min_samples_leaf = 1;
  // Cap on a single Newton leaf step before shrinkage.
  double max_leaf_value = 5.0;

  void validate() const;
};

// Additive tree ensemble with one boosting stream per class; class
// probabilities are the softmax of base score plus the stream's tree sum.
class SceneClassifier {
 public:
  SceneClassifier() = default;
  SceneClassifier(std::size_t k, std::size_t dim, double learning_rate, std::size_t max_depth,
                  std::vector<double> base_scores,
                  std::vector<std::vector<DecisionTree>> streams);

  // Puts (numerically) all probability mass on `label` (1-based).
  static SceneClassifier constant(std::size_t k, std::size_t dim, int label);

  std::size_t k() const { return k_; }
  std::size_t dim() const { return dim_; }
  std::size_t rounds() const { return streams_.empty() ? 0 : streams_.front().size(); }
  double learning_rate() const { return learning_rate_; }
  std::size_t max_depth() const { return max_depth_; }
  const std::vector<double>& base_scores() const { return base_scores_; }
  // streams()[class][round]
  const std::vector<std::vector<DecisionTree>>& streams() const { return streams_; }

  std::vector<double> scores(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  // Argmax class, 1-based, ties to the lowest index.
  int predict(std::span<const double> x) const;

  void save(std::ostream& out) const;
  static SceneClassifier load(std::istream& in);

  friend bool operator==(const SceneClassifier&, const SceneClassifier&) = default;

 private:
  std::size_t k_ = 0;
  std::size_t dim_ = 0;
  double learning_rate_ = 0.1;
  std::size_t max_depth_ = 0;
  std::vector<double> base_scores_;
  std::vector<std::vector<DecisionTree>> streams_;
};

struct TrainReport {
  double initial_train_ce = 0.0;  // nats, before any tree
  double final_train_ce = 0.0;
  double final_val_ce = 0.0;
  double val_accuracy = 0.0;
  ConfusionMatrix confusion;  // rows = true class, columns = predicted
  std::vector<double> train_ce_history;  // entry r = after r rounds
  std::vector<double> val_ce_history;
  std::size_t rounds_kept = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::string warning;
};

struct TrainResult {
  SceneClassifier model;
  TrainReport report;
};

// Mean negative log-likelihood of labels (1-based) under the model.
double cross_entropy(const SceneClassifier& model, const Matrix& x, std::span<const int> labels);

// Gradient boosting on the softmax cross-entropy. Rows are split into a
// stratified train/validation pair from params.seed; training stops once the
// validation loss has not improved for early_stopping_rounds rounds and the
// model is truncated to the best round. Labels are 1-based in [1, k].
TrainResult train_classifier(const Matrix& x, std::span<const int> labels, std::size_t k,
                             const BoostingParams& params);

ConfusionMatrix confusion_matrix(const SceneClassifier& model, const Matrix& x,
                                 std::span<const int> labels);

void write_train_report_csv(std::ostream& out, const TrainReport& report);
void write_confusion_table(std::ostream& out, const ConfusionMatrix& confusion);

}  // namespace scenerouter
