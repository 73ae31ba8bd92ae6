#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scenerouter/features.hpp"

namespace scenerouter {

using Matrix = std::vector<std::vector<double>>;

struct EncoderParams {
  std::size_t input_dim = SceneFeatureVector::kDim;
  std::size_t projected_dim = 64;
  double sparsity = 0.5;  // fraction of projected coordinates kept
  double temperature = 1.0;  // softmax(z / temperature)
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-component z-scoring fitted on training features only.
struct Standardization {
  static constexpr double kStdFloor = 1e-12;

  std::vector<double> means;
  std::vector<double> stds;

  static Standardization fit(const Matrix& rows);
  std::vector<double> apply(std::span<const double> x) const;
};

// softmax -> seeded Gaussian projection -> fixed random coordinate mask.
// Input is an already-standardized feature vector.
class Encoder {
 public:
  explicit Encoder(const EncoderParams& params);

  // Test hook: explicit projection (row-major, projected_dim x input_dim).
  static Encoder with_projection(const EncoderParams& params, std::vector<double> projection);

  std::vector<double> encode(std::span<const double> standardized) const;

  const EncoderParams& params() const { return params_; }
  const std::vector<double>& projection() const { return projection_; }
  // retained()[j] is false for coordinates that are always zeroed.
  const std::vector<bool>& retained() const { return retained_; }

 private:
  Encoder(const EncoderParams& params, std::vector<double> projection);

  EncoderParams params_;
  std::vector<double> projection_;
  std::vector<bool> retained_;
};

struct KMeansOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;  // stop when the largest centroid shift drops below tol
  std::size_t restarts = 10;
  std::size_t threads = 1;
};

struct KMeansResult {
  Matrix centroids;
  std::vector<int> labels;  // 0-based, one per row
  double inertia = 0.0;
  // Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  std::size_t restart = 0;
};

// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
// inertia wins (ties to the earliest restart). Empty clusters are re-seeded
// at the point farthest from its assigned centroid.
KMeansResult kmeans_fit(const Matrix& rows, const KMeansOptions& options);

// Nearest centroid by squared distance, ties to the lowest index (0-based).
std::size_t nearest_centroid(std::span<const double> x, const Matrix& centroids);
double inertia(const Matrix& rows, const Matrix& centroids, std::span<const int> labels);

struct ClusterModel {
  std::size_t k = 0;
  Matrix centroids;
  EncoderParams encoder_params;
  double tol = 1e-6;
  bool cluster_on_raw = false;
  double inertia = 0.0;
  Standardization standardization;

  // Point in clustering space for a raw feature vector.
  std::vector<double> embed(const SceneFeatureVector& z) const;
  // Regenerates the seeded encoder from encoder_params; fit and load call it.
  void build_encoder();

  void save(std::ostream& out) const;
  static ClusterModel load(std::istream& in);

 private:
  std::shared_ptr<const Encoder> encoder_;
};

struct ClusterFitOptions {
  std::size_t k = 5;
  EncoderParams encoder;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  std::size_t restarts = 10;
  bool cluster_on_raw = false;
  std::size_t threads = 1;
};

struct ClusterFit {
  ClusterModel model;
  std::vector<int> labels;  // 1-based, one per input feature vector
  KMeansResult kmeans;
};

ClusterFit fit_cluster_model(std::span<const SceneFeatureVector> features,
                             const ClusterFitOptions& options);

struct PseudoLabel {
  std::int64_t window_id = 0;
  std::int64_t agent_id = 0;
  int label = 1;  // in [1, K]
};

// 1-based nearest-centroid label in the encoded space.
int assign_label(const SceneFeatureVector& z, const ClusterModel& model);

struct ClusterSummary {
  int cluster = 0;  // 1-based
  std::size_t count = 0;
  std::array<double, SceneFeatureVector::kDim> means{};
};

// Per-cluster mean of each raw feature component; clusters without members
// are emitted with count 0 and zero means.
std::vector<ClusterSummary> cluster_statistics(std::span<const int> labels,
                                               std::span<const SceneFeatureVector> features,
                                               std::size_t k);

void write_cluster_statistics_csv(std::ostream& out, std::span<const ClusterSummary> rows,
                                  std::span<const std::string> names = {});

}  // namespace scenerouter
