#include "scenerouter/metrics.hpp"

#include <string>
#include <vector>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"

namespace scenerouter {

namespace {

void check_lengths(const Path& predicted, const Path& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw Error(ErrorCode::kLengthMismatch,
                "prediction has " + std::to_string(predicted.size()) + " steps, ground truth " +
                    std::to_string(truth.size()));
  }
}

void check_alignment(std::span<const Prediction> predictions,
                     std::span<const TrajectorySegment> truth) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(predictions.size()) +
                                                " predictions for " + std::to_string(truth.size()) +
                                                " agents");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i].agent_id != truth[i].agent_id) {
      throw Error(ErrorCode::kLengthMismatch, "prediction order does not match agents");
    }
    check_lengths(predictions[i].predicted, truth[i].future);
  }
}

}  // namespace

double segment_ade(const Path& predicted, const Path& truth) {
  check_lengths(predicted, truth);
  std::vector<double> d(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) d[t] = distance(predicted[t], truth[t]);
  return pairwise_sum(d) / static_cast<double>(d.size());
}

double segment_fde(const Path& predicted, const Path& truth) {
  check_lengths(predicted, truth);
  return distance(predicted.back(), truth.back());
}

double ade(std::span<const Prediction> predictions, std::span<const TrajectorySegment> truth) {
  check_alignment(predictions, truth);
  if (truth.empty()) return 0.0;
  std::vector<double> d;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t t = 0; t < truth[i].future.size(); ++t) {
      d.push_back(distance(predictions[i].predicted[t], truth[i].future[t]));
    }
  }
  return pairwise_sum(d) / static_cast<double>(d.size());
}

double fde(std::span<const Prediction> predictions, std::span<const TrajectorySegment> truth) {
  check_alignment(predictions, truth);
  if (truth.empty()) return 0.0;
  std::vector<double> d(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    d[i] = distance(predictions[i].predicted.back(), truth[i].future.back());
  }
  return pairwise_sum(d) / static_cast<double>(d.size());
}

}  // namespace scenerouter
