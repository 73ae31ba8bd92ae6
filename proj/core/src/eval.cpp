#include "scenerouter/eval.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/random.hpp"

namespace scenerouter {

std::vector<Prediction> weighted_ensemble(const ExpertPool& pool, const SceneWindow& window,
                                          std::span<const double> weights) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "expert pool is empty");
  if (weights.size() != pool.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one weight per expert required");
  }
  double top = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "weights must be finite and non-negative");
    }
    top = std::max(top, w);
  }
  if (top == 0.0) throw Error(ErrorCode::kAllZeroWeights, "ensemble weights sum to zero");
  // Rescaling by the largest weight makes equal weights exactly 1 each, so
  // any equal-weight vector reproduces the uniform ensemble bit for bit.
  std::vector<double> scaled(weights.size());
  for (std::size_t m = 0; m < weights.size(); ++m) scaled[m] = weights[m] / top;
  double total = 0.0;
  for (double w : scaled) total += w;

  std::vector<Prediction> out;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const auto preds = pool.at(m).predict(window);
    if (m == 0) {
      out = preds;
      for (auto& p : out) {
        for (auto& q : p.predicted) q = scaled[0] * q;
      }
      continue;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t t = 0; t < out[i].predicted.size(); ++t) {
        out[i].predicted[t] += scaled[m] * preds[i].predicted[t];
      }
    }
  }
  for (auto& p : out) {
    for (auto& q : p.predicted) q = q / total;
  }
  return out;
}

std::vector<Prediction> uniform_ensemble(const ExpertPool& pool, const SceneWindow& window) {
  const std::vector<double> equal(pool.size(), 1.0);
  return weighted_ensemble(pool, window, equal);
}

std::vector<double> default_ensemble_weights(const EvidenceTable& evidence) {
  const auto global = evidence.global_ade();
  std::vector<double> w(global.size(), 0.0);
  for (std::size_t m = 0; m < global.size(); ++m) {
    if (!std::isnan(global[m])) w[m] = 1.0 / std::max(global[m], 1e-12);
  }
  return w;
}

std::vector<std::size_t> random_choices(std::size_t pool_size, std::size_t segments,
                                        std::uint64_t seed) {
  if (pool_size == 0) throw Error(ErrorCode::kInvalidArgument, "expert pool is empty");
  Rng rng(seed);
  std::vector<std::size_t> out(segments);
  for (auto& c : out) c = rng.index(pool_size);
  return out;
}

std::vector<Prediction> random_scheduler(const ExpertPool& pool, const SceneWindow& window,
                                         std::uint64_t seed) {
  const auto choices = random_choices(pool.size(), window.segments.size(), seed);
  std::vector<Prediction> out;
  out.reserve(choices.size());
  for (std::size_t i = 0; i < choices.size(); ++i) {
    out.push_back(pool.at(choices[i]).predict_segment(window, i));
  }
  return out;
}

MetricResult summarize(std::span<const SegmentScore> scores, std::size_t k) {
  MetricResult out;
  out.n_segments = scores.size();
  std::vector<double> ades;
  std::vector<double> fdes;
  std::vector<std::vector<double>> cluster_ade(k);
  std::vector<std::vector<double>> cluster_fde(k);
  for (const auto& s : scores) {
    ades.push_back(s.ade);
    fdes.push_back(s.fde);
    if (s.cluster >= 1 && static_cast<std::size_t>(s.cluster) <= k) {
      cluster_ade[static_cast<std::size_t>(s.cluster - 1)].push_back(s.ade);
      cluster_fde[static_cast<std::size_t>(s.cluster - 1)].push_back(s.fde);
    }
  }
  if (!scores.empty()) {
    out.ade = pairwise_sum(ades) / static_cast<double>(scores.size());
    out.fde = pairwise_sum(fdes) / static_cast<double>(scores.size());
  }
  for (std::size_t c = 0; c < k; ++c) {
    ClusterMetric m;
    m.cluster = static_cast<int>(c + 1);
    m.n_segments = cluster_ade[c].size();
    if (m.n_segments > 0) {
      m.ade = pairwise_sum(cluster_ade[c]) / static_cast<double>(m.n_segments);
      m.fde = pairwise_sum(cluster_fde[c]) / static_cast<double>(m.n_segments);
    }
    out.per_cluster.push_back(m);
  }
  return out;
}

std::vector<SegmentScore> score_predictions(std::span<const SceneWindow> windows,
                                            const std::vector<std::vector<Prediction>>& predictions,
                                            const SegmentLabels& labels) {
  if (predictions.size() != windows.size() || labels.size() != windows.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predictions or labels do not cover the windows");
  }
  std::vector<SegmentScore> scores;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& segs = windows[w].segments;
    if (predictions[w].size() != segs.size() || labels[w].size() != segs.size()) {
      throw Error(ErrorCode::kLengthMismatch, "one prediction and label per segment required");
    }
    for (std::size_t i = 0; i < segs.size(); ++i) {
      scores.push_back({labels[w][i], segment_ade(predictions[w][i].predicted, segs[i].future),
                        segment_fde(predictions[w][i].predicted, segs[i].future)});
    }
  }
  return scores;
}

namespace {

template <typename PredictFn>
MetricResult evaluate_with(std::span<const SceneWindow> windows, const SegmentLabels& labels,
                           std::size_t k, std::size_t threads, PredictFn&& predict) {
  std::vector<std::vector<Prediction>> predictions(windows.size());
  parallel_for(windows.size(), threads,
               [&](std::size_t w) { predictions[w] = predict(windows[w]); });
  const auto scores = score_predictions(windows, predictions, labels);
  return summarize(scores, k);
}

}  // namespace

MetricResult evaluate_router(const Router& router, std::span<const SceneWindow> windows,
                             const SegmentLabels& labels, std::size_t k, std::size_t threads) {
  return evaluate_with(windows, labels, k, threads,
                       [&](const SceneWindow& w) { return router.route(w).predictions; });
}

MetricResult evaluate_expert(const Expert& expert, std::span<const SceneWindow> windows,
                             const SegmentLabels& labels, std::size_t k, std::size_t threads) {
  return evaluate_with(windows, labels, k, threads, [&](const SceneWindow& w) {
    std::vector<Prediction> out;
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      out.push_back(expert.predict_segment(w, i));
    }
    return out;
  });
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kFull: return "full";
    case Variant::kRandomLabels: return "random_labels";
    case Variant::kNoClustering: return "no_clustering";
    case Variant::kRandomExpert: return "random_expert";
    case Variant::kUniformEnsemble: return "uniform_ensemble";
    case Variant::kSingleBest: return "single_best";
    case Variant::kReducedPool: return "reduced_pool";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kUnknownVariant, "unknown ablation variant '" + std::string(name) + "'");
}

std::vector<Variant> all_variants() {
  return {Variant::kFull,         Variant::kRandomLabels,    Variant::kNoClustering,
          Variant::kRandomExpert, Variant::kUniformEnsemble, Variant::kSingleBest,
          Variant::kReducedPool};
}

namespace {

// Evidence with every segment in one cluster: its policy is the single
// globally best expert.
PolicyTable single_cluster_policy(const PreparedData& data) {
  SegmentLabels ones(data.evidence_errors.empty() ? 0 : data.evidence_errors.front().size());
  for (std::size_t w = 0; w < ones.size(); ++w) {
    ones[w].assign(data.evidence_errors.front()[w].size(), 1);
  }
  const auto evidence = evidence_from_errors(data.evidence_errors, ones, 1, data.pool.names());
  return build_policy(evidence);
}

}  // namespace

std::vector<AblationRow> run_ablations(const PreparedData& data, const PipelineModel& base,
                                       const PipelineConfig& cfg,
                                       std::span<const Variant> variants) {
  const auto& test = data.split.test;
  const std::size_t k = base.classifier.model.k();
  const auto test_labels = label_windows(data.test_features, base.cluster.model);
  std::vector<AblationRow> rows;
  for (const auto variant : variants) {
    AblationRow row;
    row.variant = variant;
    switch (variant) {
      case Variant::kFull:
        row.metrics = evaluate_router(base.router(), test, test_labels, k, cfg.threads);
        break;
      case Variant::kRandomLabels: {
        Rng rng(derive_seed(cfg.seed, "random-labels"));
        std::vector<int> labels(data.train_rows.size());
        for (auto& l : labels) l = static_cast<int>(rng.index(k)) + 1;
        BoostingParams params = cfg.boosting;
        params.seed = derive_seed(cfg.seed, "classifier");
        const auto x = classifier_rows(data.train_rows, base.cluster.model,
                                       cfg.classifier_on_encoded);
        const auto trained = train_classifier(x, labels, k, params);
        const Router router(base.features, base.cluster.model, trained.model, base.policy,
                            base.pool, cfg.classifier_on_encoded);
        row.metrics = evaluate_router(router, test, test_labels, k, cfg.threads);
        break;
      }
      case Variant::kNoClustering: {
        const auto policy = single_cluster_policy(data);
        const Router router(base.features, base.cluster.model,
                            SceneClassifier::constant(1, base.classifier.model.dim(), 1), policy,
                            base.pool, cfg.classifier_on_encoded);
        row.metrics = evaluate_router(router, test, test_labels, k, cfg.threads);
        row.detail = policy.entries.front().expert_name;
        break;
      }
      case Variant::kSingleBest: {
        const auto policy = single_cluster_policy(data);
        const auto& best = policy.entries.front();
        row.metrics = evaluate_expert(base.pool.at(best.expert_index - 1), test, test_labels, k,
                                      cfg.threads);
        row.detail = best.expert_name;
        break;
      }
      case Variant::kRandomExpert: {
        const std::uint64_t seed = derive_seed(cfg.seed, "random-expert");
        std::vector<std::vector<Prediction>> predictions(test.size());
        parallel_for(test.size(), cfg.threads, [&](std::size_t w) {
          predictions[w] = random_scheduler(
              base.pool, test[w], derive_seed(seed, static_cast<std::uint64_t>(test[w].window_id)));
        });
        row.metrics = summarize(score_predictions(test, predictions, test_labels), k);
        break;
      }
      case Variant::kUniformEnsemble: {
        std::vector<std::vector<Prediction>> predictions(test.size());
        parallel_for(test.size(), cfg.threads,
                     [&](std::size_t w) { predictions[w] = uniform_ensemble(base.pool, test[w]); });
        row.metrics = summarize(score_predictions(test, predictions, test_labels), k);
        break;
      }
      case Variant::kReducedPool: {
        const auto pool = base.pool.subset(cfg.reduced_pool);
        SegmentErrors errors;
        for (const auto& name : pool.names()) {
          errors.push_back(data.evidence_errors[*base.pool.find(name)]);
        }
        const auto evidence = evidence_from_errors(errors, base.evidence_labels, k, pool.names());
        const Router router(base.features, base.cluster.model, base.classifier.model,
                            build_policy(evidence), pool, cfg.classifier_on_encoded);
        row.metrics = evaluate_router(router, test, test_labels, k, cfg.threads);
        for (const auto& name : pool.names()) row.detail += (row.detail.empty() ? "" : ";") + name;
        break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

MetricResult run_ablation(std::span<const SceneWindow> windows, const PipelineConfig& cfg,
                          const AblationConfig& ablation) {
  PipelineConfig run_cfg = cfg;
  run_cfg.seed = ablation.seed;
  const auto data = prepare(windows, run_cfg);
  const auto base = fit_model(data, run_cfg, run_cfg.k);
  const Variant variants[] = {ablation.variant};
  return run_ablations(data, base, run_cfg, variants).front().metrics;
}

SweepResult sweep_k(const PreparedData& data, const PipelineConfig& cfg,
                    std::span<const std::size_t> ks) {
  SweepResult result;
  for (const auto k : ks) {
    const auto model = fit_model(data, cfg, k);
    const auto labels = label_windows(data.test_features, model.cluster.model);
    const auto metrics = evaluate_router(model.router(), data.split.test, labels, k, cfg.threads);
    SweepRow row;
    row.k = k;
    row.val_accuracy = model.classifier.report.val_accuracy;
    row.routed_ade = metrics.ade;
    row.routed_fde = metrics.fde;
    row.inertia = model.cluster.model.inertia;
    for (const auto& e : model.policy.entries) row.fallback_clusters += e.fallback ? 1 : 0;
    result.rows.push_back(row);
  }
  const SweepRow* best = nullptr;
  for (const auto& row : result.rows) {
    if (best == nullptr) {
      best = &row;
      continue;
    }
    const double scale = std::max(std::abs(row.routed_ade), std::abs(best->routed_ade));
    const bool tied = std::abs(row.routed_ade - best->routed_ade) <= kSweepTieTolerance * scale;
    if (tied ? row.k < best->k : row.routed_ade < best->routed_ade) best = &row;
  }
  if (best != nullptr) result.best_k = best->k;
  return result;
}

SweepResult sweep_k(std::span<const SceneWindow> windows, const PipelineConfig& cfg,
                    std::span<const std::size_t> ks) {
  return sweep_k(prepare(windows, cfg), cfg, ks);
}

void write_metric_rows_csv(std::ostream& out,
                           std::span<const std::pair<std::string, MetricResult>> rows) {
  out << "method,ade,fde,n_segments\n";
  for (const auto& [name, m] : rows) {
    out << name << ',' << format_double(m.ade) << ',' << format_double(m.fde) << ','
        << m.n_segments << '\n';
  }
}

void write_cluster_metrics_csv(std::ostream& out, const MetricResult& metrics) {
  out << "cluster,n_segments,ade,fde\n";
  for (const auto& c : metrics.per_cluster) {
    out << c.cluster << ',' << c.n_segments << ',' << format_double(c.ade) << ','
        << format_double(c.fde) << '\n';
  }
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "variant,ade,fde,n_segments,detail\n";
  for (const auto& r : rows) {
    out << to_string(r.variant) << ',' << format_double(r.metrics.ade) << ','
        << format_double(r.metrics.fde) << ',' << r.metrics.n_segments << ',' << r.detail << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "k,classifier_val_accuracy,routed_ade,routed_fde,inertia,fallback_clusters,best\n";
  for (const auto& r : sweep.rows) {
    out << r.k << ',' << format_double(r.val_accuracy) << ',' << format_double(r.routed_ade)
        << ',' << format_double(r.routed_fde) << ',' << format_double(r.inertia) << ','
        << r.fallback_clusters << ',' << (r.k == sweep.best_k ? 1 : 0) << '\n';
  }
}

std::vector<std::pair<double, double>> principal_components_2d(const Matrix& rows) {
  std::vector<std::pair<double, double>> out;
  if (rows.empty()) return out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<Eigen::Index>(1, n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Eigen::MatrixXd basis(d, 2);
  basis.setZero();
  for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, d); ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(c) = v;
  }
  const Eigen::MatrixXd projected = x * basis;
  out.reserve(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) out.emplace_back(projected(i, 0), projected(i, 1));
  return out;
}

}  // namespace scenerouter
