#include "scenerouter/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/random.hpp"

namespace scenerouter {

void EncoderParams::validate() const {
  if (input_dim < 1 || projected_dim < 1 || !(sparsity > 0.0) || sparsity > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "encoder needs input_dim >= 1, projected_dim >= 1, 0 < sparsity <= 1");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "softmax temperature must be positive");
  }
}

Standardization Standardization::fit(const Matrix& rows) {
  if (rows.empty()) throw Error(ErrorCode::kTooFewSamples, "cannot standardize zero rows");
  const std::size_t dim = rows.front().size();
  Standardization s;
  s.means.assign(dim, 0.0);
  s.stds.assign(dim, 0.0);
  std::vector<double> column(rows.size());
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][d];
    s.means[d] = mean(column);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double c = rows[i][d] - s.means[d];
      column[i] = c * c;
    }
    s.stds[d] = std::max(std::sqrt(mean(column)), kStdFloor);
  }
  return s;
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    out[d] = (x[d] - means[d]) / std::max(stds[d], kStdFloor);
  }
  return out;
}

namespace {

std::vector<double> gaussian_projection(const EncoderParams& p) {
  Rng rng(derive_seed(p.seed, "projection"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.projected_dim));
  std::vector<double> m(p.projected_dim * p.input_dim);
  for (double& v : m) v = rng.normal() * scale;
  return m;
}

std::vector<bool> sparsity_mask(const EncoderParams& p) {
  const auto dropped = static_cast<std::size_t>(
      std::llround((1.0 - p.sparsity) * static_cast<double>(p.projected_dim)));
  std::vector<std::size_t> order(p.projected_dim);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(p.seed, "mask"));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  std::vector<bool> retained(p.projected_dim, true);
  for (std::size_t i = 0; i < dropped && i < order.size(); ++i) retained[order[i]] = false;
  return retained;
}

}  // namespace

Encoder::Encoder(const EncoderParams& params) : Encoder(params, gaussian_projection(params)) {}

Encoder::Encoder(const EncoderParams& params, std::vector<double> projection)
    : params_(params), projection_(std::move(projection)) {
  params_.validate();
  if (projection_.size() != params_.projected_dim * params_.input_dim) {
    throw Error(ErrorCode::kLengthMismatch, "projection matrix has the wrong shape");
  }
  retained_ = sparsity_mask(params_);
}

Encoder Encoder::with_projection(const EncoderParams& params, std::vector<double> projection) {
  return Encoder(params, std::move(projection));
}

std::vector<double> Encoder::encode(std::span<const double> standardized) const {
  if (standardized.size() != params_.input_dim) {
    throw Error(ErrorCode::kLengthMismatch, "encoder input has the wrong dimension");
  }
  std::vector<double> scaled(standardized.begin(), standardized.end());
  if (params_.temperature != 1.0) {
    for (double& v : scaled) v /= params_.temperature;
  }
  const std::vector<double> p = softmax(scaled);
  std::vector<double> out(params_.projected_dim, 0.0);
  for (std::size_t r = 0; r < params_.projected_dim; ++r) {
    if (!retained_[r]) continue;
    const double* row = projection_.data() + r * params_.input_dim;
    double acc = 0.0;
    for (std::size_t c = 0; c < params_.input_dim; ++c) acc += row[c] * p[c];
    out[r] = acc;
  }
  return out;
}

std::size_t nearest_centroid(std::span<const double> x, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double inertia(const Matrix& rows, const Matrix& centroids, std::span<const int> labels) {
  std::vector<double> terms(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    terms[i] = squared_distance(rows[i], centroids[static_cast<std::size_t>(labels[i])]);
  }
  return pairwise_sum(terms);
}

namespace {

Matrix kmeanspp_seed(const Matrix& rows, std::size_t k, Rng& rng) {
  Matrix centroids;
  centroids.reserve(k);
  centroids.push_back(rows[rng.index(rows.size())]);
  std::vector<double> d2(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) d2[i] = squared_distance(rows[i], centroids[0]);
  while (centroids.size() < k) {
    const double total = pairwise_sum(d2);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = rows.size() - 1;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(rows.size());
    }
    centroids.push_back(rows[pick]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(rows[i], centroids.back()));
    }
  }
  return centroids;
}

KMeansResult lloyd(const Matrix& rows, const KMeansOptions& options, std::uint64_t seed) {
  const std::size_t n = rows.size();
  const std::size_t dim = rows.front().size();
  Rng rng(seed);
  KMeansResult result;
  result.centroids = kmeanspp_seed(rows, options.k, rng);
  result.labels.assign(n, 0);

  const auto assign = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      result.labels[i] = static_cast<int>(nearest_centroid(rows[i], result.centroids));
    }
    return inertia(rows, result.centroids, result.labels);
  };

  double current = assign();
  result.inertia_history.push_back(current);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter + 1;
    Matrix updated(options.k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(options.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.labels[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) updated[c][d] += rows[i][d];
    }
    for (std::size_t c = 0; c < options.k; ++c) {
      if (counts[c] == 0) continue;
      for (double& v : updated[c]) v /= static_cast<double>(counts[c]);
    }
    // Re-seed empty clusters at the worst-served point.
    for (std::size_t c = 0; c < options.k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto owner = static_cast<std::size_t>(result.labels[i]);
        if (counts[owner] <= 1) continue;
        const double d = squared_distance(rows[i], updated[owner]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) {
        updated[c] = result.centroids[c];
        continue;
      }
      --counts[static_cast<std::size_t>(result.labels[far])];
      updated[c] = rows[far];
      counts[c] = 1;
      result.labels[far] = static_cast<int>(c);
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < options.k; ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(updated[c], result.centroids[c])));
    }
    result.centroids = std::move(updated);
    const double next = assign();
    // Lloyd steps never increase the objective; allow only rounding noise.
    if (next > current + 1e-9 * (1.0 + std::abs(current))) {
      throw std::logic_error("k-means inertia increased between iterations");
    }
    result.inertia_history.push_back(next);
    current = next;
    if (shift < options.tol) break;
  }
  result.inertia = current;
  return result;
}

}  // namespace

KMeansResult kmeans_fit(const Matrix& rows, const KMeansOptions& options) {
  if (options.k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (rows.size() < options.k) {
    throw Error(ErrorCode::kTooFewSamples, std::to_string(rows.size()) +
                                               " samples cannot form " +
                                               std::to_string(options.k) + " clusters");
  }
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  std::vector<KMeansResult> runs(restarts);
  parallel_for(restarts, options.threads, [&](std::size_t r) {
    runs[r] = lloyd(rows, options, derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    runs[r].restart = r;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  return std::move(runs[best]);
}

void ClusterModel::build_encoder() { encoder_ = std::make_shared<const Encoder>(encoder_params); }

std::vector<double> ClusterModel::embed(const SceneFeatureVector& z) const {
  const auto raw = z.values();
  auto standardized = standardization.apply(raw);
  if (cluster_on_raw) return standardized;
  if (encoder_) return encoder_->encode(standardized);
  return Encoder(encoder_params).encode(standardized);
}

void ClusterModel::save(std::ostream& out) const {
  out << "scenerouter-cluster-model 1\n";
  out << "k " << k << '\n';
  out << "input_dim " << encoder_params.input_dim << '\n';
  out << "projected_dim " << encoder_params.projected_dim << '\n';
  out << "sparsity " << format_double(encoder_params.sparsity) << '\n';
  out << "temperature " << format_double(encoder_params.temperature) << '\n';
  out << "seed " << encoder_params.seed << '\n';
  out << "tol " << format_double(tol) << '\n';
  out << "cluster_on_raw " << (cluster_on_raw ? 1 : 0) << '\n';
  out << "inertia " << format_double(inertia) << '\n';
  out << "means";
  for (double v : standardization.means) out << ' ' << format_double(v);
  out << "\nstds";
  for (double v : standardization.stds) out << ' ' << format_double(v);
  out << '\n';
  for (const auto& c : centroids) {
    out << "centroid";
    for (double v : c) out << ' ' << format_double(v);
    out << '\n';
  }
}

namespace {

std::vector<double> parse_values(const std::vector<std::string>& fields, std::size_t from) {
  std::vector<double> values;
  for (std::size_t i = from; i < fields.size(); ++i) {
    double v = 0.0;
    if (!parse_double(fields[i], v)) {
      throw Error(ErrorCode::kParseError, "bad number '" + fields[i] + "' in cluster model");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

ClusterModel ClusterModel::load(std::istream& in) {
  ClusterModel model;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "scenerouter-cluster-model 1") {
    throw Error(ErrorCode::kVersionMismatch, "not a version-1 cluster model");
  }
  while (std::getline(in, line)) {
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    const std::string& key = fields[0];
    const auto values = parse_values(fields, 1);
    const auto scalar = [&] {
      if (values.size() != 1) throw Error(ErrorCode::kParseError, "bad field " + key);
      return values[0];
    };
    if (key == "k") model.k = static_cast<std::size_t>(scalar());
    else if (key == "input_dim") model.encoder_params.input_dim = static_cast<std::size_t>(scalar());
    else if (key == "projected_dim") model.encoder_params.projected_dim = static_cast<std::size_t>(scalar());
    else if (key == "sparsity") model.encoder_params.sparsity = scalar();
    else if (key == "temperature") model.encoder_params.temperature = scalar();
    else if (key == "seed") {
      std::istringstream parse(fields.size() == 2 ? fields[1] : "");
      if (!(parse >> model.encoder_params.seed)) throw Error(ErrorCode::kParseError, "bad seed");
    } else if (key == "tol") model.tol = scalar();
    else if (key == "cluster_on_raw") model.cluster_on_raw = scalar() != 0.0;
    else if (key == "inertia") model.inertia = scalar();
    else if (key == "means") model.standardization.means = values;
    else if (key == "stds") model.standardization.stds = values;
    else if (key == "centroid") model.centroids.push_back(values);
    else throw Error(ErrorCode::kParseError, "unknown cluster model field " + key);
  }
  if (model.k == 0 || model.centroids.size() != model.k ||
      model.standardization.means.size() != model.encoder_params.input_dim ||
      model.standardization.stds.size() != model.encoder_params.input_dim) {
    throw Error(ErrorCode::kParseError, "incomplete cluster model");
  }
  model.encoder_params.validate();
  model.build_encoder();
  return model;
}

ClusterFit fit_cluster_model(std::span<const SceneFeatureVector> features,
                             const ClusterFitOptions& options) {
  Matrix raw;
  raw.reserve(features.size());
  for (const auto& z : features) raw.push_back(z.to_vector());
  if (raw.size() < options.k) {
    throw Error(ErrorCode::kTooFewSamples, std::to_string(raw.size()) +
                                               " samples cannot form " +
                                               std::to_string(options.k) + " clusters");
  }
  ClusterFit fit;
  auto& model = fit.model;
  model.k = options.k;
  model.encoder_params = options.encoder;
  model.tol = options.tol;
  model.cluster_on_raw = options.cluster_on_raw;
  model.standardization = Standardization::fit(raw);
  model.build_encoder();

  Matrix embedded;
  embedded.reserve(features.size());
  for (const auto& z : features) embedded.push_back(model.embed(z));

  KMeansOptions km;
  km.k = options.k;
  km.seed = options.seed;
  km.max_iter = options.max_iter;
  km.tol = options.tol;
  km.restarts = options.restarts;
  km.threads = options.threads;
  fit.kmeans = kmeans_fit(embedded, km);
  model.centroids = fit.kmeans.centroids;
  model.inertia = fit.kmeans.inertia;
  fit.labels.reserve(fit.kmeans.labels.size());
  for (int l : fit.kmeans.labels) fit.labels.push_back(l + 1);
  return fit;
}

int assign_label(const SceneFeatureVector& z, const ClusterModel& model) {
  return static_cast<int>(nearest_centroid(model.embed(z), model.centroids)) + 1;
}

std::vector<ClusterSummary> cluster_statistics(std::span<const int> labels,
                                               std::span<const SceneFeatureVector> features,
                                               std::size_t k) {
  if (labels.size() != features.size()) {
    throw Error(ErrorCode::kLengthMismatch, "labels and features differ in length");
  }
  std::vector<std::vector<std::vector<double>>> columns(
      k, std::vector<std::vector<double>>(SceneFeatureVector::kDim));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || static_cast<std::size_t>(labels[i]) > k) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
    const auto v = features[i].values();
    auto& cols = columns[static_cast<std::size_t>(labels[i] - 1)];
    for (std::size_t d = 0; d < v.size(); ++d) cols[d].push_back(v[d]);
  }
  std::vector<ClusterSummary> rows(k);
  for (std::size_t c = 0; c < k; ++c) {
    rows[c].cluster = static_cast<int>(c + 1);
    rows[c].count = columns[c][0].size();
    for (std::size_t d = 0; d < SceneFeatureVector::kDim; ++d) rows[c].means[d] = mean(columns[c][d]);
  }
  return rows;
}

void write_cluster_statistics_csv(std::ostream& out, std::span<const ClusterSummary> rows,
                                  std::span<const std::string> names) {
  out << "cluster,scene,count,neighbor_count,mean_speed,speed_std,max_speed,"
         "trajectory_curvature,rel_speed_to_nearest,average_distance,speed_variance\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto& m = row.means;
    const std::string scene = r < names.size() ? names[r] : "C" + std::to_string(row.cluster);
    out << row.cluster << ',' << scene << ',' << row.count << ',' << format_double(m[3]) << ','
        << format_double(m[0]) << ',' << format_double(std::sqrt(m[1])) << ','
        << format_double(m[2]) << ',' << format_double(m[5]) << ',' << format_double(m[6])
        << ',' << format_double(m[4]) << ',' << format_double(m[1]) << '\n';
  }
}

}  // namespace scenerouter
