#include "scenerouter/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/random.hpp"
#include "scenerouter/synth.hpp"

namespace scenerouter {

namespace {

double to_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  if (!parse_double(value, v)) {
    throw Error(ErrorCode::kInvalidArgument,
                "config " + std::string(key) + ": not a number '" + std::string(value) + "'");
  }
  return v;
}

long long to_int(std::string_view key, std::string_view value) {
  long long v = 0;
  if (!parse_int(value, v)) {
    throw Error(ErrorCode::kInvalidArgument,
                "config " + std::string(key) + ": not an integer '" + std::string(value) + "'");
  }
  return v;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  const long long v = to_int(key, value);
  if (v < 0) {
    throw Error(ErrorCode::kInvalidArgument, "config " + std::string(key) + " must be >= 0");
  }
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw Error(ErrorCode::kInvalidArgument,
              "config " + std::string(key) + ": expected true/false");
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) out += (out.empty() ? "" : ",") + item;
  return out;
}

std::string strip_code(const Error& e) {
  const std::string what = e.what();
  const auto prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

}  // namespace

void rethrow_in_stage(std::string_view stage) {
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + std::string(stage) + ": " + strip_code(e), e.line());
  }
}

void PipelineConfig::validate() const {
  features.validate();
  boosting.validate();
  if (train_fraction <= 0 || evidence_fraction <= 0 || test_fraction <= 0 ||
      train_fraction + evidence_fraction + test_fraction > 1.0 + 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must be positive and sum to <= 1");
  }
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (std::abs(features.dt - window.dt) > 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "feature dt differs from window dt");
  }
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "no dataset configured");
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  if (key == "dataset") {
    dataset = std::string(value);
  } else if (key == "dt") {
    window.dt = to_double(key, value);
    features.dt = window.dt;
  } else if (key == "t_obs") {
    window.t_obs = static_cast<int>(to_int(key, value));
  } else if (key == "t_pred") {
    window.t_pred = static_cast<int>(to_int(key, value));
  } else if (key == "stride") {
    window.stride = static_cast<int>(to_int(key, value));
  } else if (key == "frame_step") {
    window.frame_step = to_int(key, value);
  } else if (key == "r_neighbor") {
    features.r_neighbor = to_double(key, value);
  } else if (key == "curvature_epsilon") {
    features.curvature_epsilon = to_double(key, value);
  } else if (key == "per_frame_units") {
    features.per_frame_units = to_bool(key, value);
  } else if (key == "k") {
    k = to_size(key, value);
  } else if (key == "projected_dim") {
    projected_dim = to_size(key, value);
  } else if (key == "sparsity") {
    sparsity = to_double(key, value);
  } else if (key == "softmax_temperature") {
    softmax_temperature = to_double(key, value);
  } else if (key == "cluster_on_raw") {
    cluster_on_raw = to_bool(key, value);
  } else if (key == "kmeans_restarts") {
    kmeans_restarts = to_size(key, value);
  } else if (key == "kmeans_max_iter") {
    kmeans_max_iter = to_size(key, value);
  } else if (key == "kmeans_tol") {
    kmeans_tol = to_double(key, value);
  } else if (key == "max_depth") {
    boosting.max_depth = to_size(key, value);
  } else if (key == "n_rounds") {
    boosting.n_rounds = to_size(key, value);
  } else if (key == "learning_rate") {
    boosting.learning_rate = to_double(key, value);
  } else if (key == "val_fraction") {
    boosting.val_fraction = to_double(key, value);
  } else if (key == "early_stopping_rounds") {
    boosting.early_stopping_rounds = to_size(key, value);
  } else if (key == "min_samples_leaf") {
    boosting.min_samples_leaf = to_size(key, value);
  } else if (key == "classifier_on_encoded") {
    classifier_on_encoded = to_bool(key, value);
  } else if (key == "pool") {
    pool_manifest = std::string(value);
  } else if (key == "reduced_pool") {
    reduced_pool = split(value, ',');
  } else if (key == "train_fraction") {
    train_fraction = to_double(key, value);
  } else if (key == "evidence_fraction") {
    evidence_fraction = to_double(key, value);
  } else if (key == "test_fraction") {
    test_fraction = to_double(key, value);
  } else if (key == "augment_copies") {
    augment_copies = to_size(key, value);
  } else if (key == "synth_windows_per_regime") {
    synth_windows_per_regime = to_size(key, value);
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(to_size(key, value));
  } else if (key == "threads") {
    threads = std::max<std::size_t>(1, to_size(key, value));
  } else if (key == "out") {
    out = std::string(value);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  PipelineConfig cfg;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ": expected key=value on line " + std::to_string(line_no),
                  line_no);
    }
    cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return cfg;
}

std::string PipelineConfig::to_text() const {
  std::ostringstream o;
  o << "dataset=" << dataset << '\n'
    << "dt=" << format_double(window.dt) << '\n'
    << "t_obs=" << window.t_obs << '\n'
    << "t_pred=" << window.t_pred << '\n'
    << "stride=" << window.stride << '\n'
    << "frame_step=" << window.frame_step << '\n'
    << "r_neighbor=" << format_double(features.r_neighbor) << '\n'
    << "curvature_epsilon=" << format_double(features.curvature_epsilon) << '\n'
    << "per_frame_units=" << (features.per_frame_units ? "true" : "false") << '\n'
    << "k=" << k << '\n'
    << "projected_dim=" << projected_dim << '\n'
    << "sparsity=" << format_double(sparsity) << '\n'
    << "softmax_temperature=" << format_double(softmax_temperature) << '\n'
    << "cluster_on_raw=" << (cluster_on_raw ? "true" : "false") << '\n'
    << "kmeans_restarts=" << kmeans_restarts << '\n'
    << "kmeans_max_iter=" << kmeans_max_iter << '\n'
    << "kmeans_tol=" << format_double(kmeans_tol) << '\n'
    << "max_depth=" << boosting.max_depth << '\n'
    << "n_rounds=" << boosting.n_rounds << '\n'
    << "learning_rate=" << format_double(boosting.learning_rate) << '\n'
    << "val_fraction=" << format_double(boosting.val_fraction) << '\n'
    << "early_stopping_rounds=" << boosting.early_stopping_rounds << '\n'
    << "min_samples_leaf=" << boosting.min_samples_leaf << '\n'
    << "classifier_on_encoded=" << (classifier_on_encoded ? "true" : "false") << '\n'
    << "pool=" << pool_manifest << '\n'
    << "reduced_pool=" << join(reduced_pool) << '\n'
    << "train_fraction=" << format_double(train_fraction) << '\n'
    << "evidence_fraction=" << format_double(evidence_fraction) << '\n'
    << "test_fraction=" << format_double(test_fraction) << '\n'
    << "augment_copies=" << augment_copies << '\n'
    << "synth_windows_per_regime=" << synth_windows_per_regime << '\n'
    << "seed=" << seed << '\n';
  return o.str();
}

std::uint64_t PipelineConfig::hash() const { return fnv1a64(to_text()); }

std::vector<SceneWindow> load_windows(const PipelineConfig& cfg) {
  if (cfg.dataset == "synth") {
    SynthParams params;
    params.seed = cfg.seed;
    params.windows_per_regime = cfg.synth_windows_per_regime;
    params.t_obs = cfg.window.t_obs;
    params.t_pred = cfg.window.t_pred;
    params.dt = cfg.window.dt;
    if (params.t_obs < 1 || params.t_pred < 1 || !(params.dt > 0)) {
      throw Error(ErrorCode::kInvalidWindowParams, "window lengths and dt must be positive");
    }
    return synth_benchmark(params).windows;
  }
  std::vector<RawRecord> records;
  for (const auto& path : split(cfg.dataset, ',')) {
    auto part = parse_dataset(std::string(trim(path)));
    records.insert(records.end(), part.begin(), part.end());
  }
  std::sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.agent_id < b.agent_id;
  });
  return window_segments(records, cfg.window);
}

Split split_windows(std::span<const SceneWindow> windows, const PipelineConfig& cfg) {
  const std::size_t n = windows.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, "split"));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  const auto count = [n](double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  };
  const std::size_t n_train = std::min(n, count(cfg.train_fraction));
  const std::size_t n_evidence = std::min(n - n_train, count(cfg.evidence_fraction));
  const std::size_t n_test = std::min(n - n_train - n_evidence, count(cfg.test_fraction));

  const auto take = [&](std::size_t from, std::size_t len) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                 order.begin() + static_cast<std::ptrdiff_t>(from + len));
    std::sort(idx.begin(), idx.end());
    std::vector<SceneWindow> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(windows[i]);
    return out;
  };
  Split split;
  split.train = take(0, n_train);
  split.evidence = take(n_train, n_evidence);
  split.test = take(n_train + n_evidence, n_test);
  if (split.train.empty()) throw Error(ErrorCode::kEmptyDataset, "training split is empty");
  if (split.evidence.empty()) throw Error(ErrorCode::kEmptyHoldout, "evidence split is empty");
  if (split.test.empty()) throw Error(ErrorCode::kEmptyHoldout, "test split is empty");
  return split;
}

std::vector<SceneWindow> augment_training(std::span<const SceneWindow> train,
                                          const PipelineConfig& cfg) {
  std::vector<SceneWindow> out(train.begin(), train.end());
  Rng rng(derive_seed(cfg.seed, "augment"));
  for (std::size_t copy = 0; copy < cfg.augment_copies; ++copy) {
    for (const auto& w : train) {
      AugmentParams a;
      a.rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
      a.translation = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
      a.scale = rng.uniform(0.9, 1.1);
      a.pivot = observed_centroid(w);
      out.push_back(augment(w, a));
    }
  }
  return out;
}

WindowFeatures extract_window_features(std::span<const SceneWindow> windows,
                                       const FeatureConfig& cfg, std::size_t threads) {
  WindowFeatures out(windows.size());
  parallel_for(windows.size(), threads,
               [&](std::size_t w) { out[w] = extract_all(windows[w], cfg); });
  return out;
}

PreparedData prepare(std::span<const SceneWindow> windows, const PipelineConfig& cfg) {
  cfg.validate();
  PreparedData data;
  try {
    data.split = split_windows(windows, cfg);
  } catch (...) {
    rethrow_in_stage("split");
  }
  try {
    const auto train = augment_training(data.split.train, cfg);
    const auto features = extract_window_features(train, cfg.features, cfg.threads);
    for (std::size_t w = 0; w < train.size(); ++w) {
      for (std::size_t i = 0; i < features[w].size(); ++i) {
        data.train_rows.push_back({train[w].window_id, train[w].segments[i].agent_id,
                                   features[w][i]});
      }
    }
    data.evidence_features =
        extract_window_features(data.split.evidence, cfg.features, cfg.threads);
    data.test_features = extract_window_features(data.split.test, cfg.features, cfg.threads);
  } catch (...) {
    rethrow_in_stage("featurize");
  }
  try {
    if (cfg.pool_manifest.empty()) {
      data.pool = default_pool(data.split.train);
    } else {
      const std::filesystem::path manifest = cfg.pool_manifest;
      if (std::filesystem::is_directory(manifest)) {
        data.pool = load_pool(manifest);
      } else {
        std::istringstream in(read_file(manifest));
        std::string line;
        while (std::getline(in, line)) {
          const auto body = trim(line);
          if (body.empty() || body.front() == '#') continue;
          auto expert = make_expert(body, manifest.parent_path());
          // Retrieval experts listed without a bank remember the training split.
          const auto* nn = dynamic_cast<const NnRetrievalExpert*>(expert.get());
          if (nn != nullptr && nn->bank().empty()) {
            expert = std::make_shared<NnRetrievalExpert>(
                NnRetrievalExpert::build_bank(data.split.train), nn->name(), nn->cost_hint());
          }
          data.pool.add(std::move(expert));
        }
      }
    }
    data.evidence_errors = segment_errors(data.pool, data.split.evidence, cfg.threads);
  } catch (...) {
    rethrow_in_stage("experts");
  }
  return data;
}

SegmentLabels label_windows(const WindowFeatures& features, const ClusterModel& model) {
  SegmentLabels labels(features.size());
  for (std::size_t w = 0; w < features.size(); ++w) {
    for (const auto& z : features[w]) labels[w].push_back(assign_label(z, model));
  }
  return labels;
}

std::vector<std::vector<double>> classifier_rows(std::span<const FeatureRow> rows,
                                                 const ClusterModel& model, bool encoded) {
  std::vector<std::vector<double>> x;
  x.reserve(rows.size());
  for (const auto& r : rows) x.push_back(classifier_input(r.features, model, encoded));
  return x;
}

Router PipelineModel::router() const {
  return Router(features, cluster.model, classifier.model, policy, pool, classifier_on_encoded);
}

PipelineModel fit_model(const PreparedData& data, const PipelineConfig& cfg, std::size_t k) {
  PipelineModel model;
  model.features = cfg.features;
  model.classifier_on_encoded = cfg.classifier_on_encoded;
  model.pool = data.pool;
  try {
    std::vector<SceneFeatureVector> z;
    z.reserve(data.train_rows.size());
    for (const auto& r : data.train_rows) z.push_back(r.features);
    ClusterFitOptions opt;
    opt.k = k;
    opt.encoder.projected_dim = cfg.projected_dim;
    opt.encoder.sparsity = cfg.sparsity;
    opt.encoder.temperature = cfg.softmax_temperature;
    opt.encoder.seed = derive_seed(cfg.seed, "encoder");
    opt.seed = derive_seed(cfg.seed, "kmeans");
    opt.max_iter = cfg.kmeans_max_iter;
    opt.tol = cfg.kmeans_tol;
    opt.restarts = cfg.kmeans_restarts;
    opt.cluster_on_raw = cfg.cluster_on_raw;
    opt.threads = cfg.threads;
    model.cluster = fit_cluster_model(z, opt);
  } catch (...) {
    rethrow_in_stage("cluster");
  }
  try {
    BoostingParams params = cfg.boosting;
    params.seed = derive_seed(cfg.seed, "classifier");
    const auto x = classifier_rows(data.train_rows, model.cluster.model, cfg.classifier_on_encoded);
    model.classifier = train_classifier(x, model.cluster.labels, k, params);
  } catch (...) {
    rethrow_in_stage("train");
  }
  try {
    model.evidence_labels = label_windows(data.evidence_features, model.cluster.model);
    model.evidence = evidence_from_errors(data.evidence_errors, model.evidence_labels, k,
                                          data.pool.names());
    model.policy = build_policy(model.evidence);
  } catch (...) {
    rethrow_in_stage("policy");
  }
  return model;
}

}  // namespace scenerouter
