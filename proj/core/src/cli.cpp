#include "scenerouter/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/random.hpp"
#include "scenerouter/synth.hpp"

namespace scenerouter {

namespace fs = std::filesystem;

namespace {

template <typename Writer>
void emit(const fs::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_file(path, out.str());
}

void require(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kArtifactNotFound, "missing artifact " + path.string());
  }
}

std::istringstream open_artifact(const fs::path& path) {
  require(path);
  return std::istringstream(read_file(path));
}

const std::vector<std::string> kHashedArtifacts = {
    artifact::kConfig,     artifact::kFeatures,    artifact::kClusterModel,
    artifact::kClassifier, artifact::kPool,        artifact::kEvidence,
    artifact::kPolicy,     artifact::kHoldout,     artifact::kMetrics,
};

struct Manifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> hashes;
};

Manifest read_manifest(const fs::path& dir) {
  std::istringstream in = open_artifact(dir / artifact::kManifest);
  Manifest m;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "scenerouter-run 1") {
    throw Error(ErrorCode::kVersionMismatch, "unrecognized manifest version");
  }
  while (std::getline(in, line)) {
    const auto f = split_whitespace(line);
    if (f.size() == 2 && f[0] == "config_hash") {
      m.config_hash = f[1];
    } else if (f.size() == 2 && f[0] == "seed") {
      long long s = 0;
      if (parse_int(f[1], s)) m.seed = static_cast<std::uint64_t>(s);
    } else if (f.size() == 3 && f[0] == "artifact") {
      m.hashes[f[1]] = f[2];
    }
  }
  return m;
}

void write_manifest(const fs::path& dir, const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "scenerouter-run 1\n"
      << "config_hash " << hex64(cfg.hash()) << '\n'
      << "seed " << cfg.seed << '\n';
  for (const auto& name : kHashedArtifacts) {
    if (fs::exists(dir / name)) out << "artifact " << name << ' ' << hex64(hash_file(dir / name)) << '\n';
  }
  write_file(dir / artifact::kManifest, out.str());
}

void rewrite_manifest_hashes(const fs::path& dir) {
  const Manifest old = read_manifest(dir);
  std::ostringstream out;
  out << "scenerouter-run 1\n"
      << "config_hash " << old.config_hash << '\n'
      << "seed " << old.seed << '\n';
  for (const auto& name : kHashedArtifacts) {
    if (fs::exists(dir / name)) out << "artifact " << name << ' ' << hex64(hash_file(dir / name)) << '\n';
  }
  write_file(dir / artifact::kManifest, out.str());
}

PipelineConfig load_run_config(const fs::path& dir) {
  require(dir / artifact::kConfig);
  return PipelineConfig::load(dir / artifact::kConfig);
}

std::vector<SceneWindow> read_holdout(const fs::path& dir, const PipelineConfig& cfg) {
  std::istringstream in = open_artifact(dir / artifact::kHoldout);
  return read_windows_csv(in, cfg.window.t_obs, cfg.window.dt);
}

MetricResult evaluate_predictions(std::span<const SceneWindow> windows,
                                  const std::vector<std::vector<Prediction>>& predictions) {
  SegmentLabels ones(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) ones[w].assign(windows[w].segments.size(), 1);
  return summarize(score_predictions(windows, predictions, ones), 1);
}

}  // namespace

void verify_manifest(const fs::path& model_dir, std::span<const std::string> artifacts) {
  const Manifest m = read_manifest(model_dir);
  const PipelineConfig cfg = load_run_config(model_dir);
  if (hex64(cfg.hash()) != m.config_hash) {
    throw Error(ErrorCode::kHashMismatch, "config.txt does not match the manifest config hash");
  }
  for (const auto& name : artifacts) {
    require(model_dir / name);
    const auto it = m.hashes.find(name);
    if (it == m.hashes.end()) {
      throw Error(ErrorCode::kArtifactNotFound, name + " is not recorded in the manifest");
    }
    if (hex64(hash_file(model_dir / name)) != it->second) {
      throw Error(ErrorCode::kHashMismatch, name + " was modified after the run");
    }
  }
}

RunSummary cmd_run(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_file(out / artifact::kConfig, cfg.to_text());

  std::vector<SceneWindow> windows;
  try {
    windows = load_windows(cfg);
  } catch (...) {
    rethrow_in_stage("ingest");
  }
  log << "ingest: " << windows.size() << " windows\n";

  const PreparedData data = prepare(windows, cfg);
  emit(out / artifact::kFeatures,
       [&](std::ostream& o) { write_features_csv(o, data.train_rows); });
  log << "featurize: " << data.train_rows.size() << " training segments\n";

  const PipelineModel model = fit_model(data, cfg, cfg.k);
  emit(out / artifact::kClusterModel, [&](std::ostream& o) { model.cluster.model.save(o); });
  {
    std::vector<SceneFeatureVector> z;
    for (const auto& r : data.train_rows) z.push_back(r.features);
    const auto stats = cluster_statistics(model.cluster.labels, z, cfg.k);
    emit(out / artifact::kClusterStats,
         [&](std::ostream& o) { write_cluster_statistics_csv(o, stats); });
  }
  emit(out / artifact::kClassifier, [&](std::ostream& o) { model.classifier.model.save(o); });
  emit(out / artifact::kTrainReport,
       [&](std::ostream& o) { write_train_report_csv(o, model.classifier.report); });
  emit(out / artifact::kConfusion,
       [&](std::ostream& o) { write_confusion_table(o, model.classifier.report.confusion); });
  log << "train: validation accuracy " << format_double(model.classifier.report.val_accuracy)
      << '\n';

  save_pool(out, model.pool);
  emit(out / artifact::kEvidence, [&](std::ostream& o) { model.evidence.save(o); });
  emit(out / artifact::kPolicy, [&](std::ostream& o) { model.policy.save(o); });
  emit(out / artifact::kHoldout,
       [&](std::ostream& o) { write_windows_csv(o, data.split.evidence); });

  RunSummary summary;
  summary.k = cfg.k;
  std::vector<std::pair<std::string, MetricResult>> rows;
  try {
    const Router router = model.router();
    const auto test_labels = label_windows(data.test_features, model.cluster.model);
    summary.routed_test = evaluate_router(router, data.split.test, test_labels, cfg.k, cfg.threads);
    summary.routed_evidence =
        evaluate_router(router, data.split.evidence, model.evidence_labels, cfg.k, cfg.threads);
    std::vector<std::vector<Prediction>> oracle(data.split.evidence.size());
    for (std::size_t w = 0; w < oracle.size(); ++w) {
      oracle[w] = router.route_with_labels(data.split.evidence[w], model.evidence_labels[w])
                      .predictions;
    }
    const auto oracle_metrics = summarize(
        score_predictions(data.split.evidence, oracle, model.evidence_labels), cfg.k);
    rows.emplace_back("routed", summary.routed_test);
    rows.emplace_back("routed_evidence", summary.routed_evidence);
    rows.emplace_back("oracle_evidence", oracle_metrics);
    for (std::size_t m = 0; m < model.pool.size(); ++m) {
      rows.emplace_back("expert:" + model.pool.at(m).name(),
                        evaluate_expert(model.pool.at(m), data.split.test, test_labels, cfg.k,
                                        cfg.threads));
    }
  } catch (...) {
    rethrow_in_stage("evaluate");
  }
  emit(out / artifact::kMetrics, [&](std::ostream& o) { write_metric_rows_csv(o, rows); });
  emit(out / artifact::kClusterMetrics,
       [&](std::ostream& o) { write_cluster_metrics_csv(o, summary.routed_test); });
  write_manifest(out, cfg);
  log << "evaluate: routed test ADE " << format_double(summary.routed_test.ade) << " FDE "
      << format_double(summary.routed_test.fde) << '\n';
  return summary;
}

RouteSummary cmd_route(const fs::path& model_dir, const fs::path& input, const fs::path& out_dir,
                       std::size_t threads, std::ostream& log) {
  const std::vector<std::string> needed = {artifact::kClusterModel, artifact::kClassifier,
                                           artifact::kPolicy, artifact::kPool};
  for (const auto& name : needed) require(model_dir / name);
  verify_manifest(model_dir, needed);
  const PipelineConfig cfg = load_run_config(model_dir);

  std::istringstream cm = open_artifact(model_dir / artifact::kClusterModel);
  std::istringstream cl = open_artifact(model_dir / artifact::kClassifier);
  std::istringstream po = open_artifact(model_dir / artifact::kPolicy);
  const Router router(cfg.features, ClusterModel::load(cm), SceneClassifier::load(cl),
                      PolicyTable::load(po), load_pool(model_dir), cfg.classifier_on_encoded);

  std::vector<SceneWindow> windows;
  const std::string text = read_file(input);
  if (input.extension() == ".csv") {
    std::istringstream in(text);
    windows = read_windows_csv(in, cfg.window.t_obs, cfg.window.dt);
  } else {
    std::istringstream in(text);
    try {
      windows = window_segments(parse_records(in), cfg.window);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyDataset) throw;
    }
  }

  RouteSummary summary;
  summary.windows = windows.size();
  summary.has_ground_truth = !windows.empty();
  for (auto& w : windows) {
    summary.segments += w.segments.size();
    // Observation-only input: the horizon comes from the config and the
    // placeholder futures only fix the prediction length.
    if (w.t_pred() == 0) {
      summary.has_ground_truth = false;
      for (auto& s : w.segments) s.future.assign(static_cast<std::size_t>(cfg.window.t_pred), s.observed.back());
    }
  }

  std::vector<RouteResult> results(windows.size());
  parallel_for(windows.size(), threads, [&](std::size_t w) { results[w] = router.route(windows[w]); });

  fs::create_directories(out_dir);
  std::ostringstream preds;
  std::ostringstream decisions;
  preds << "window_id,agent_id,step,x,y\n";
  std::vector<RoutingDecision> all;
  std::vector<std::vector<Prediction>> predictions;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    write_predictions_csv(preds, windows[w].window_id, results[w].predictions, false);
    all.insert(all.end(), results[w].decisions.begin(), results[w].decisions.end());
    predictions.push_back(results[w].predictions);
  }
  write_decisions_csv(decisions, all);
  write_file(out_dir / "predictions.csv", preds.str());
  write_file(out_dir / "decisions.csv", decisions.str());

  if (summary.has_ground_truth) {
    const auto metrics = evaluate_predictions(windows, predictions);
    summary.ade = metrics.ade;
    summary.fde = metrics.fde;
    log << "routed " << summary.segments << " segments in " << summary.windows
        << " windows: ADE " << format_double(summary.ade) << " FDE "
        << format_double(summary.fde) << '\n';
  } else {
    log << "routed " << summary.segments << " segments in " << summary.windows << " windows\n";
  }
  return summary;
}

AddExpertSummary cmd_add_expert(const fs::path& model_dir, const std::string& spec,
                                std::size_t threads, std::ostream& log) {
  const std::vector<std::string> frozen = {artifact::kClusterModel, artifact::kClassifier};
  verify_manifest(model_dir, frozen);
  const PipelineConfig cfg = load_run_config(model_dir);

  std::istringstream cm = open_artifact(model_dir / artifact::kClusterModel);
  const ClusterModel cluster = ClusterModel::load(cm);
  std::istringstream ev = open_artifact(model_dir / artifact::kEvidence);
  const EvidenceTable evidence = EvidenceTable::load(ev);
  std::istringstream po = open_artifact(model_dir / artifact::kPolicy);
  const PolicyTable policy = PolicyTable::load(po);
  ExpertPool pool = load_pool(model_dir);

  const auto holdout = read_holdout(model_dir, cfg);
  const auto labels =
      label_windows(extract_window_features(holdout, cfg.features, threads), cluster);
  const auto updated = register_expert(pool, make_expert(spec), holdout, labels, evidence,
                                       policy, threads);

  save_pool(model_dir, pool);
  emit(model_dir / artifact::kEvidence, [&](std::ostream& o) { updated.evidence.save(o); });
  emit(model_dir / artifact::kPolicy, [&](std::ostream& o) { updated.policy.save(o); });

  AddExpertSummary summary;
  summary.old_version = policy.version;
  summary.new_version = updated.policy.version;
  std::ostringstream diff;
  diff << "cluster_id,old_expert,new_expert,changed\n";
  for (std::size_t c = 0; c < updated.policy.k(); ++c) {
    const auto& before = policy.entries[c];
    const auto& after = updated.policy.entries[c];
    const bool changed = before.expert_name != after.expert_name;
    if (changed) summary.remapped_clusters.push_back(after.cluster);
    diff << after.cluster << ',' << before.expert_name << ',' << after.expert_name << ','
         << (changed ? 1 : 0) << '\n';
  }
  write_file(model_dir / artifact::kPolicyDiff, diff.str());
  rewrite_manifest_hashes(model_dir);
  log << "policy version " << summary.old_version << " -> " << summary.new_version << ", "
      << summary.remapped_clusters.size() << " cluster(s) remapped\n";
  return summary;
}

std::vector<AblationRow> cmd_ablate(const PipelineConfig& cfg, std::span<const Variant> variants,
                                    std::ostream& log) {
  std::vector<SceneWindow> windows;
  try {
    windows = load_windows(cfg);
  } catch (...) {
    rethrow_in_stage("ingest");
  }
  const auto data = prepare(windows, cfg);
  const auto base = fit_model(data, cfg, cfg.k);
  const auto rows = run_ablations(data, base, cfg, variants);
  fs::create_directories(cfg.out);
  emit(fs::path(cfg.out) / "ablation.csv", [&](std::ostream& o) { write_ablation_csv(o, rows); });
  for (const auto& r : rows) {
    log << to_string(r.variant) << ": ADE " << format_double(r.metrics.ade) << " FDE "
        << format_double(r.metrics.fde) << '\n';
  }
  return rows;
}

SweepResult cmd_sweep(const PipelineConfig& cfg, std::span<const std::size_t> ks,
                      std::ostream& log) {
  std::vector<SceneWindow> windows;
  try {
    windows = load_windows(cfg);
  } catch (...) {
    rethrow_in_stage("ingest");
  }
  const auto result = sweep_k(windows, cfg, ks);
  fs::create_directories(cfg.out);
  emit(fs::path(cfg.out) / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, result); });
  for (const auto& r : result.rows) {
    log << "K=" << r.k << ": routed ADE " << format_double(r.routed_ade) << ", val accuracy "
        << format_double(r.val_accuracy) << '\n';
  }
  log << "best K=" << result.best_k << '\n';
  return result;
}

void cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  SynthParams params;
  params.seed = cfg.seed;
  params.windows_per_regime = cfg.synth_windows_per_regime;
  params.t_obs = cfg.window.t_obs;
  params.t_pred = cfg.window.t_pred;
  params.dt = cfg.window.dt;
  const auto data = synth_benchmark(params);
  fs::create_directories(cfg.out);
  emit(fs::path(cfg.out) / "trajectories.txt",
       [&](std::ostream& o) { write_records(o, to_records(data.windows)); });
  emit(fs::path(cfg.out) / "regimes.csv", [&](std::ostream& o) { write_regimes_csv(o, data); });
  log << "wrote " << data.windows.size() << " windows to " << fs::path(cfg.out).string() << '\n';
}

void cmd_report(const fs::path& model_dir, std::ostream& log) {
  std::istringstream ev = open_artifact(model_dir / artifact::kEvidence);
  const EvidenceTable evidence = EvidenceTable::load(ev);
  std::istringstream po = open_artifact(model_dir / artifact::kPolicy);
  const PolicyTable policy = PolicyTable::load(po);
  const ExpertPool pool = load_pool(model_dir);

  // Per-cluster routed choice against the globally best single expert.
  const auto global = evidence.global_ade();
  std::size_t best = 0;
  for (std::size_t m = 1; m < global.size(); ++m) {
    if (global[m] < global[best]) best = m;
  }
  std::ostringstream summary;
  summary << "policy version " << policy.version << ", K=" << policy.k() << ", best single expert "
          << evidence.expert_names[best] << " (evidence ADE " << format_double(global[best])
          << ")\n";
  summary << "cluster  samples  routed_expert  routed_ade  single_best_ade  delta\n";
  for (std::size_t c = 0; c < policy.k(); ++c) {
    const auto& e = policy.entries[c];
    const double single = evidence.present(c, best) ? evidence.ade[c][best] : global[best];
    char buf[256];
    std::snprintf(buf, sizeof buf, "%7d  %7zu  %13s  %10.4f  %15.4f  %+.4f\n", e.cluster,
                  e.sample_count, e.expert_name.c_str(), e.evidence_ade, single,
                  e.evidence_ade - single);
    summary << buf;
  }
  write_file(model_dir / "summary.txt", summary.str());

  // Accuracy against relative cost, one point per expert plus the router.
  std::istringstream metrics = open_artifact(model_dir / artifact::kMetrics);
  std::map<std::string, std::pair<double, double>> measured;
  std::string line;
  std::getline(metrics, line);
  while (std::getline(metrics, line)) {
    const auto f = split(trim(line), ',');
    double a = 0.0;
    double b = 0.0;
    if (f.size() == 4 && parse_double(f[1], a) && parse_double(f[2], b)) measured[f[0]] = {a, b};
  }
  std::ostringstream methods;
  std::ostringstream latency;
  methods << "method,ade,fde,cost_hint\n";
  latency << "x,y,label\n";
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const auto it = measured.find("expert:" + pool.at(m).name());
    if (it == measured.end()) continue;
    methods << pool.at(m).name() << ',' << format_double(it->second.first) << ','
            << format_double(it->second.second) << ',' << format_double(pool.at(m).cost_hint())
            << '\n';
    latency << format_double(pool.at(m).cost_hint()) << ',' << format_double(it->second.first)
            << ',' << pool.at(m).name() << '\n';
  }
  if (const auto it = measured.find("routed"); it != measured.end()) {
    methods << "routed," << format_double(it->second.first) << ','
            << format_double(it->second.second) << ",\n";
  }
  write_file(model_dir / "table_methods.csv", methods.str());
  write_file(model_dir / "plot_accuracy_latency.csv", latency.str());

  // Scatter of the standardized training features on two principal axes.
  std::istringstream cm = open_artifact(model_dir / artifact::kClusterModel);
  const ClusterModel cluster = ClusterModel::load(cm);
  std::istringstream feats = open_artifact(model_dir / artifact::kFeatures);
  Matrix rows;
  std::vector<int> labels;
  std::getline(feats, line);
  while (std::getline(feats, line)) {
    const auto f = split(trim(line), ',');
    if (f.size() < 2 + SceneFeatureVector::kDim) continue;
    std::vector<double> v(SceneFeatureVector::kDim);
    bool ok = true;
    for (std::size_t j = 0; j < v.size(); ++j) ok = ok && parse_double(f[2 + j], v[j]);
    if (!ok) continue;
    labels.push_back(assign_label(SceneFeatureVector::from_values(v), cluster));
    rows.push_back(cluster.standardization.apply(v));
  }
  const auto pcs = principal_components_2d(rows);
  std::ostringstream scatter;
  scatter << "x,y,label\n";
  for (std::size_t i = 0; i < pcs.size(); ++i) {
    scatter << format_double(pcs[i].first) << ',' << format_double(pcs[i].second) << ','
            << labels[i] << '\n';
  }
  write_file(model_dir / "plot_pca.csv", scatter.str());
  log << summary.str();
}

}  // namespace scenerouter
