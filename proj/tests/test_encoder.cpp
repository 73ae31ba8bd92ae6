#include "scenerouter/encoder.hpp"
#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"

using namespace scenerouter;

namespace {

Matrix blobs(Rng& rng, std::size_t per_blob, const Matrix& centers, double sigma) {
  Matrix rows;
  for (std::size_t i = 0; i < per_blob; ++i) {
    for (const auto& c : centers) {
      std::vector<double> r;
      for (double v : c) r.push_back(v + rng.normal(0.0, sigma));
      rows.push_back(r);
    }
  }
  return rows;
}

SceneFeatureVector random_features(Rng& rng) {
  std::array<double, 7> v{};
  for (double& x : v) x = rng.uniform(0.0, 3.0);
  return SceneFeatureVector::from_values(v);
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  EncoderParams p;
  p.projected_dim = 7;
  p.sparsity = 1.0;
  std::vector<double> identity(49, 0.0);
  for (int i = 0; i < 7; ++i) identity[i * 7 + i] = 1.0;
  const auto enc = Encoder::with_projection(p, identity);
  const std::vector<double> flat(7, 0.3);
  for (double v : enc.encode(flat)) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

  const std::vector<double> z = {-1.0, 0.5, 2.0, 0.0, 0.1, -3.0, 1.0};
  const auto out = enc.encode(z);
  double total = 0.0;
  for (double v : z) total += std::exp(v);
  for (int i = 0; i < 7; ++i) CHECK(out[i] == doctest::Approx(std::exp(z[i]) / total).epsilon(1e-12));
}

TEST_CASE("temperature divides the logits") {
  EncoderParams p;
  p.projected_dim = 7;
  p.sparsity = 1.0;
  p.temperature = 4.0;
  std::vector<double> identity(49, 0.0);
  for (int i = 0; i < 7; ++i) identity[i * 7 + i] = 1.0;
  const auto enc = Encoder::with_projection(p, identity);
  const std::vector<double> z = {-1.0, 0.5, 2.0, 0.0, 0.1, -3.0, 1.0};
  const auto out = enc.encode(z);
  double total = 0.0;
  for (double v : z) total += std::exp(v / 4.0);
  for (int i = 0; i < 7; ++i) {
    CHECK(out[i] == doctest::Approx(std::exp(z[i] / 4.0) / total).epsilon(1e-12));
  }
  p.temperature = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("sparsity mask is fixed and exact") {
  EncoderParams p;
  p.seed = 17;
  const Encoder enc(p);
  CHECK(std::count(enc.retained().begin(), enc.retained().end(), true) == 32);
  Rng rng(4);
  std::vector<std::size_t> zero_positions;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = rng.normal();
    const auto out = enc.encode(z);
    std::vector<std::size_t> zeros;
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (out[j] == 0.0) zeros.push_back(j);
    }
    CHECK(zeros.size() == 32);
    if (trial == 0) zero_positions = zeros;
    CHECK(zeros == zero_positions);
  }
}

TEST_CASE("projection entries are scaled normals and seeded") {
  EncoderParams p;
  p.seed = 3;
  const Encoder a(p);
  const Encoder b(p);
  CHECK(a.projection() == b.projection());
  p.seed = 4;
  CHECK(Encoder(p).projection() != a.projection());
  double sum = 0.0, sq = 0.0;
  for (double v : a.projection()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(a.projection().size());
  // entries ~ N(0, 1/64): mean near 0, variance near 1/64
  CHECK(std::abs(sum / n) < 4.0 * 0.125 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0 / 64.0) < 0.25 / 64.0);
}

TEST_CASE("standardization floors the std") {
  Matrix rows = {{1.0, 5.0}, {3.0, 5.0}};
  const auto s = Standardization::fit(rows);
  CHECK(s.means[0] == 2.0);
  CHECK(s.stds[1] == Standardization::kStdFloor);
  const auto z = s.apply(std::vector<double>{3.0, 5.0});
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[1] == 0.0);
}

TEST_CASE("k-means k=1 gives the mean and total scatter") {
  Rng rng(2);
  Matrix rows;
  for (int i = 0; i < 40; ++i) rows.push_back({rng.normal(), rng.normal(2, 3), rng.uniform()});
  KMeansOptions opt;
  opt.k = 1;
  const auto fit = kmeans_fit(rows, opt);
  std::vector<double> mean(3, 0.0);
  for (const auto& r : rows) {
    for (int d = 0; d < 3; ++d) mean[d] += r[d] / 40.0;
  }
  double scatter = 0.0;
  for (const auto& r : rows) scatter += oracle::sq_dist(r, mean);
  for (int d = 0; d < 3; ++d) CHECK(std::abs(fit.centroids[0][d] - mean[d]) < 1e-9);
  CHECK(fit.inertia == doctest::Approx(scatter).epsilon(1e-12));
}

TEST_CASE("k-means with k = n reaches zero inertia") {
  Rng rng(8);
  Matrix rows;
  for (int i = 0; i < 6; ++i) rows.push_back({rng.normal(), rng.normal()});
  KMeansOptions opt;
  opt.k = 6;
  CHECK(kmeans_fit(rows, opt).inertia == 0.0);
  opt.k = 7;
  CHECK_THROWS_AS(kmeans_fit(rows, opt), Error);
}

TEST_CASE("k-means inertia never increases and is deterministic") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + rng.index(5);
    Matrix rows;
    for (int i = 0; i < 60; ++i) rows.push_back({rng.normal(), rng.normal(), rng.normal()});
    KMeansOptions opt;
    opt.k = k;
    opt.seed = rng.next();
    const auto fit = kmeans_fit(rows, opt);
    for (std::size_t i = 1; i < fit.inertia_history.size(); ++i) {
      CHECK(fit.inertia_history[i] <= fit.inertia_history[i - 1] + 1e-12);
    }
    CHECK(fit.inertia == doctest::Approx(inertia(rows, fit.centroids, fit.labels)));
    const auto again = kmeans_fit(rows, opt);
    CHECK(again.centroids == fit.centroids);
    CHECK(again.labels == fit.labels);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(nearest_centroid(rows[i], fit.centroids) == static_cast<std::size_t>(fit.labels[i]));
    }
  }
}

TEST_CASE("two blobs match the exhaustive partition optimum") {
  Rng rng(12);
  int matched = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix rows = blobs(rng, 5, {{0.0, 0.0}, {10.0, 4.0}}, 1.0);
    KMeansOptions opt;
    opt.k = 2;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto fit = kmeans_fit(rows, opt);
    if (std::abs(fit.inertia - oracle::best_two_partition(rows)) < 1e-9) ++matched;
  }
  CHECK(matched >= 19);
}

TEST_CASE("refit with permuted rows gives the same centroid set") {
  Rng rng(21);
  Matrix rows = blobs(rng, 20, {{0, 0}, {8, 0}, {0, 8}}, 0.7);
  KMeansOptions opt;
  opt.k = 3;
  opt.seed = 5;
  const auto a = kmeans_fit(rows, opt);
  Matrix shuffled = rows;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto b = kmeans_fit(shuffled, opt);
  std::vector<int> perm = {0, 1, 2};
  double best = 1e300;
  do {
    double cost = 0.0;
    for (int c = 0; c < 3; ++c) cost = std::max(cost, oracle::sq_dist(a.centroids[c], b.centroids[perm[c]]));
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(std::sqrt(best) < 1e-6);
}

TEST_CASE("nearest centroid ties go to the lowest index") {
  const Matrix centroids = {{-1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}};
  CHECK(nearest_centroid(std::vector<double>{0.0, 5.0}, {{-1.0, 0.0}, {1.0, 0.0}}) == 0);
  CHECK(nearest_centroid(std::vector<double>{0.0, 0.0}, centroids) == 2);
}

TEST_CASE("assign label agrees with a linear scan and with the fit") {
  Rng rng(31);
  std::vector<SceneFeatureVector> features;
  for (int i = 0; i < 120; ++i) features.push_back(random_features(rng));
  ClusterFitOptions opt;
  opt.k = 4;
  opt.encoder.seed = 9;
  opt.seed = 10;
  const auto fit = fit_cluster_model(features, opt);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto x = fit.model.embed(features[i]);
    std::size_t best = 0;
    for (std::size_t c = 1; c < fit.model.k; ++c) {
      if (oracle::sq_dist(x, fit.model.centroids[c]) < oracle::sq_dist(x, fit.model.centroids[best])) {
        best = c;
      }
    }
    CHECK(assign_label(features[i], fit.model) == static_cast<int>(best) + 1);
    CHECK(fit.labels[i] == static_cast<int>(best) + 1);
  }
}

TEST_CASE("input encoded onto a centroid gets that label") {
  Rng rng(32);
  std::vector<SceneFeatureVector> features;
  for (int i = 0; i < 5; ++i) features.push_back(random_features(rng));
  ClusterFitOptions opt;
  opt.k = 5;
  const auto fit = fit_cluster_model(features, opt);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int label = fit.labels[i];
    CHECK(fit.model.embed(features[i]) == fit.model.centroids[static_cast<std::size_t>(label - 1)]);
    CHECK(assign_label(features[i], fit.model) == label);
  }
}

TEST_CASE("cluster model save and load round trip") {
  Rng rng(33);
  std::vector<SceneFeatureVector> features;
  for (int i = 0; i < 50; ++i) features.push_back(random_features(rng));
  ClusterFitOptions opt;
  opt.k = 3;
  opt.encoder.temperature = 2.5;
  const auto fit = fit_cluster_model(features, opt);
  std::ostringstream out;
  fit.model.save(out);
  std::istringstream in(out.str());
  const auto back = ClusterModel::load(in);
  CHECK(back.encoder_params.temperature == 2.5);
  for (const auto& z : features) CHECK(assign_label(z, back) == assign_label(z, fit.model));
  std::ostringstream again;
  back.save(again);
  CHECK(again.str() == out.str());
}

TEST_CASE("cluster statistics match a group-by oracle") {
  Rng rng(34);
  std::vector<SceneFeatureVector> features;
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) {
    features.push_back(random_features(rng));
    labels.push_back(1 + static_cast<int>(rng.index(4)));  // cluster 5 stays empty
  }
  const auto rows = cluster_statistics(labels, features, 5);
  REQUIRE(rows.size() == 5);
  for (int c = 1; c <= 5; ++c) {
    std::array<double, 7> sum{};
    std::size_t n = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (labels[i] != c) continue;
      ++n;
      const auto v = features[i].values();
      for (int d = 0; d < 7; ++d) sum[d] += v[d];
    }
    CHECK(rows[c - 1].count == n);
    for (int d = 0; d < 7; ++d) {
      CHECK(rows[c - 1].means[d] == doctest::Approx(n ? sum[d] / n : 0.0).epsilon(1e-12));
    }
  }

  const std::vector<SceneFeatureVector> one = {features[0]};
  const std::vector<int> ones = {1};
  CHECK(cluster_statistics(ones, one, 1)[0].means == features[0].values());
  const std::vector<SceneFeatureVector> twice = {features[1], features[1]};
  const std::vector<int> both = {1, 1};
  CHECK(cluster_statistics(both, twice, 1)[0].means == features[1].values());
}
