// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria 7-9 and 11 run the full benchmark at seed 42.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "scenerouter/classifier.hpp"
#include "scenerouter/cli.hpp"
#include "scenerouter/encoder.hpp"
#include "scenerouter/error.hpp"
#include "scenerouter/eval.hpp"
#include "scenerouter/metrics.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/pipeline.hpp"
#include "scenerouter/scheduler.hpp"
#include "scenerouter/synth.hpp"

using namespace scenerouter;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("scenerouter_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    files[entry.path().filename().string()] = read_file(entry.path());
  }
  return files;
}

// Shared seed-42 benchmark state for criteria 6-9.
struct Benchmark {
  PipelineConfig cfg;
  std::vector<SceneWindow> windows;
  PreparedData data;
  PipelineModel model;
};

const Benchmark& benchmark() {
  static const Benchmark b = [] {
    Benchmark out;
    out.cfg.threads = default_thread_count();
    out.windows = load_windows(out.cfg);
    out.data = prepare(out.windows, out.cfg);
    out.model = fit_model(out.data, out.cfg, out.cfg.k);
    return out;
  }();
  return b;
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto w = oracle::random_window(rng, 1 + rng.index(5), 2, 1 + rng.index(12));
    std::vector<Prediction> preds;
    for (const auto& seg : w.segments) {
      Prediction p{seg.agent_id, seg.future};
      for (auto& q : p.predicted) q += Vec2{rng.normal(), rng.normal()};
      preds.push_back(p);
    }
    o.require(std::abs(ade(preds, w.segments) - oracle::ade(preds, w.segments)) < 1e-12,
              "ade differs from oracle");
    o.require(std::abs(fde(preds, w.segments) - oracle::fde(preds, w.segments)) < 1e-12,
              "fde differs from oracle");
  }
  return o;
}

Outcome feature_oracles() {
  Outcome o;
  Rng rng(2);
  const FeatureConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    const auto w = oracle::random_window(rng, 1 + rng.index(6), 3 + rng.index(8), 1);
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      const auto expected = oracle::features(w, i, cfg.r_neighbor, cfg.dt);
      const auto got = extract(w, i, cfg).values();
      for (std::size_t c = 0; c < SceneFeatureVector::kDim; ++c) {
        o.require(std::abs(got[c] - expected[c]) < 1e-9, "component " + std::to_string(c));
      }
    }
  }
  const auto near = [](double a, double b) { return std::abs(a - b) < 1e-9 * (1.0 + std::abs(b)); };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto w = oracle::random_window(rng, 1 + rng.index(5), 3 + rng.index(8), 1);
    AugmentParams a;
    a.rotation = rng.uniform(-4.0, 4.0);
    a.translation = {rng.uniform(-100, 100), rng.uniform(-100, 100)};
    a.pivot = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const double s = rng.uniform(0.25, 4.0);
    a.scale = s;
    FeatureConfig scaled = cfg;
    scaled.r_neighbor = cfg.r_neighbor * s;
    scaled.curvature_epsilon = cfg.curvature_epsilon * s;
    const auto moved = augment(w, a);
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      const auto x = extract(w, i, cfg);
      const auto y = extract(moved, i, scaled);
      o.require(near(y.mean_speed, s * x.mean_speed), "mean speed covariance");
      o.require(near(y.max_speed, s * x.max_speed), "max speed covariance");
      o.require(near(y.speed_variance, s * s * x.speed_variance), "variance covariance");
      o.require(near(y.mean_interagent_distance, s * x.mean_interagent_distance),
                "distance covariance");
      o.require(near(y.rel_speed_to_nearest, s * x.rel_speed_to_nearest), "rel speed covariance");
      o.require(near(y.mean_curvature, x.mean_curvature / s), "curvature covariance");
      o.require(y.local_density == x.local_density, "density invariance");
    }
  }
  return o;
}

Outcome kmeans_properties() {
  Outcome o;
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix rows;
    const std::size_t n = 20 + rng.index(60);
    const std::size_t dim = 1 + rng.index(4);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(dim);
      for (auto& v : row) v = rng.normal(0.0, 1.0 + rng.index(3));
      rows.push_back(row);
    }
    KMeansOptions opt;
    opt.k = 1 + rng.index(6);
    opt.seed = rng.next();
    const auto fit = kmeans_fit(rows, opt);
    for (std::size_t i = 1; i < fit.inertia_history.size(); ++i) {
      o.require(fit.inertia_history[i] <= fit.inertia_history[i - 1] + 1e-12,
                "inertia increased");
    }
    KMeansOptions one = opt;
    one.k = 1;
    const auto mean_fit = kmeans_fit(rows, one);
    for (std::size_t d = 0; d < dim; ++d) {
      double m = 0.0;
      for (const auto& r : rows) m += r[d];
      m /= static_cast<double>(n);
      o.require(std::abs(mean_fit.centroids[0][d] - m) < 1e-9, "k=1 centroid is not the mean");
    }
  }
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix rows;
    const std::size_t n = 6 + rng.index(7);
    for (std::size_t i = 0; i < n; ++i) {
      const double cx = i % 2 ? 8.0 : 0.0;
      rows.push_back({cx + rng.normal(), rng.normal()});
    }
    KMeansOptions opt;
    opt.k = 2;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto fit = kmeans_fit(rows, opt);
    if (std::abs(fit.inertia - oracle::best_two_partition(rows)) < 1e-9) ++matched;
  }
  o.require(matched >= 95, "blob recovery " + std::to_string(matched) + "/100");
  if (o.pass) o.detail = "blob recovery " + std::to_string(matched) + "/100";
  return o;
}

Outcome classifier_properties() {
  Outcome o;
  Rng rng(42);
  const auto blobs = [&](std::size_t per_class, std::size_t k, double sep) {
    std::pair<Matrix, std::vector<int>> d;
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> row(3);
        for (std::size_t j = 0; j < 3; ++j) row[j] = rng.normal() + (j == c % 3 ? sep * (1.0 + c / 3) : 0.0);
        d.first.push_back(row);
        d.second.push_back(static_cast<int>(c + 1));
      }
    }
    return d;
  };
  const auto separated = blobs(100, 2, 10.0);
  const auto sep_fit = train_classifier(separated.first, separated.second, 2, BoostingParams{});
  o.require(sep_fit.report.val_accuracy >= 0.95,
            "10 sigma accuracy " + fmt(sep_fit.report.val_accuracy));

  for (std::size_t k = 2; k <= 6; ++k) {
    const auto d = blobs(30, k, 1.0);
    BoostingParams params;
    params.n_rounds = 40;
    params.early_stopping_rounds = 1000;
    const auto fit = train_classifier(d.first, d.second, k, params);
    o.require(std::abs(fit.report.initial_train_ce - std::log(static_cast<double>(k))) < 1e-9,
              "round-0 CE is not ln K");
    const auto& h = fit.report.train_ce_history;
    for (std::size_t r = 1; r < h.size(); ++r) o.require(h[r] <= h[r - 1] + 1e-9, "CE increased");
  }
  if (o.pass) o.detail = "separated accuracy " + fmt(sep_fit.report.val_accuracy);
  return o;
}

EvidenceTable random_table(Rng& rng, std::size_t k, std::size_t m) {
  EvidenceTable ev;
  ev.k = k;
  for (std::size_t j = 0; j < m; ++j) ev.expert_names.push_back("e" + std::to_string(j));
  ev.ade.assign(k, std::vector<double>(m, 0.0));
  ev.counts.assign(k, std::vector<std::size_t>(m, 0));
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t n = rng.index(4) == 0 ? 0 : 1 + rng.index(50);
    for (std::size_t j = 0; j < m; ++j) {
      ev.ade[c][j] = n ? rng.uniform(0.0, 2.0) : 0.0;
      ev.counts[c][j] = n;
    }
  }
  ev.counts[0].assign(m, 1 + rng.index(10));
  for (std::size_t j = 0; j < m; ++j) ev.ade[0][j] = rng.uniform(0.0, 2.0);
  return ev;
}

double stored_policy_ade(const fs::path& dir) {
  std::istringstream e(read_file(dir / artifact::kEvidence));
  std::istringstream p(read_file(dir / artifact::kPolicy));
  return policy_ade(EvidenceTable::load(e), PolicyTable::load(p));
}

Outcome policy_properties() {
  Outcome o;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto ev = random_table(rng, 1 + rng.index(8), 1 + rng.index(5));
    const auto policy = build_policy(ev);
    for (std::size_t c = 0; c < ev.k; ++c) {
      const auto& entry = policy.lookup(static_cast<int>(c + 1));
      if (entry.fallback) continue;
      double best = ev.ade[c][0];
      for (double v : ev.ade[c]) best = std::min(best, v);
      o.require(ev.ade[c][entry.expert_index - 1] == best, "policy entry is not the column minimum");
    }
    const double before = policy_ade(ev, policy);
    ev.expert_names.push_back("added");
    for (std::size_t c = 0; c < ev.k; ++c) {
      ev.ade[c].push_back(ev.counts[c][0] ? rng.uniform(0.0, 2.0) : 0.0);
      ev.counts[c].push_back(ev.counts[c][0]);
    }
    o.require(policy_ade(ev, build_policy(ev, 2)) <= before, "extension raised policy ade");
  }

  const auto dir = scratch("extend");
  fs::create_directories(dir);
  write_file(dir / "pool.txt", "constant_velocity name=constant_velocity\n");
  PipelineConfig cfg;
  cfg.synth_windows_per_regime = 60;
  cfg.pool_manifest = (dir / "pool.txt").string();
  cfg.out = dir / "run";
  std::ostringstream log;
  cmd_run(cfg, log);
  double prev = stored_policy_ade(cfg.out);
  const double start = prev;
  for (const char* spec : {"kalman_cv name=kalman_cv", "constant_acceleration name=constant_acceleration",
                           "social_repulsion name=social_repulsion", "constant_velocity name=cv_copy",
                           "kalman_cv name=kalman_slow process_noise=0.0001"}) {
    cmd_add_expert(cfg.out, spec, 1, log);
    const double now = stored_policy_ade(cfg.out);
    o.require(now <= prev, std::string("adding ") + spec + " raised policy ade");
    prev = now;
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = "end-to-end policy ade " + fmt(start) + " -> " + fmt(prev);
  return o;
}

Outcome oracle_routing() {
  Outcome o;
  const auto& b = benchmark();
  const auto router = b.model.router();
  const auto& windows = b.data.split.evidence;
  double total = 0.0;
  double count = 0.0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto result = router.route_with_labels(windows[w], b.model.evidence_labels[w]);
    for (std::size_t i = 0; i < result.predictions.size(); ++i) {
      total += segment_ade(result.predictions[i].predicted, windows[w].segments[i].future);
      count += 1.0;
    }
  }
  const double routed = total / count;

  const auto& ev = b.model.evidence;
  double weighted = 0.0;
  double samples = 0.0;
  for (std::size_t c = 0; c < ev.k; ++c) {
    if (!ev.present(c, 0)) continue;
    double best = ev.ade[c][0];
    for (double v : ev.ade[c]) best = std::min(best, v);
    weighted += static_cast<double>(ev.counts[c][0]) * best;
    samples += static_cast<double>(ev.counts[c][0]);
  }
  weighted /= samples;
  o.require(std::abs(routed - weighted) < 1e-9,
            "routed " + fmt(routed) + " vs weighted minimum " + fmt(weighted));
  if (o.pass) o.detail = "oracle-routed ade " + fmt(routed);
  return o;
}

Outcome ablation_ordering() {
  Outcome o;
  const auto& b = benchmark();
  const auto rows = run_ablations(b.data, b.model, b.cfg, all_variants());
  std::map<Variant, double> ade_of;
  for (const auto& row : rows) ade_of[row.variant] = row.metrics.ade;
  const double full = ade_of[Variant::kFull];
  const double single = ade_of[Variant::kSingleBest];
  const double random = ade_of[Variant::kRandomExpert];
  const double flat = ade_of[Variant::kNoClustering];
  o.require(full < single, "routed-full is not below single-best");
  o.require(single < random, "single-best is not below random-expert");
  o.require(flat == single, "no-clustering differs from single-best");
  const double improvement = (single - full) / single;
  o.require(improvement >= 0.10, "improvement " + fmt(100.0 * improvement) + "%");
  o.detail = "full " + fmt(full) + ", single " + fmt(single) + ", random " + fmt(random) +
             ", improvement " + fmt(100.0 * improvement) + "%";
  return o;
}

Outcome sweep_protocol() {
  Outcome o;
  const auto& b = benchmark();
  const std::vector<std::size_t> ks = {3, 4, 5, 6, 7, 8, 10};
  const auto first = sweep_k(b.data, b.cfg, ks);
  const auto second = sweep_k(b.data, b.cfg, ks);
  o.require(first.rows.size() == ks.size(), "missing sweep rows");
  for (std::size_t i = 0; i < first.rows.size() && i < second.rows.size(); ++i) {
    o.require(first.rows[i].routed_ade == second.rows[i].routed_ade &&
                  first.rows[i].val_accuracy == second.rows[i].val_accuracy &&
                  first.rows[i].inertia == second.rows[i].inertia,
              "sweep is not deterministic");
    o.require(std::isfinite(first.rows[i].routed_ade), "non-finite sweep row");
  }
  std::ostringstream best;
  for (const auto& row : first.rows) best << " K" << row.k << "=" << fmt(row.routed_ade);
  o.require(first.best_k == 5, "best K " + std::to_string(first.best_k) + ":" + best.str());
  if (o.pass) o.detail = "best K 5:" + best.str();
  return o;
}

Outcome cluster_statistics_extremes() {
  Outcome o;
  SynthParams sp;
  const auto data = synth_benchmark(sp);
  const FeatureConfig cfg;
  std::vector<int> labels;
  std::vector<SceneFeatureVector> features;
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    for (const auto& z : extract_all(data.windows[w], cfg)) {
      labels.push_back(static_cast<int>(data.regimes[w]) + 1);
      features.push_back(z);
    }
  }
  const auto stats = cluster_statistics(labels, features, kRegimeCount);
  const auto strictly_greatest = [&](Regime r, std::size_t column) {
    const auto target = static_cast<std::size_t>(r);
    for (std::size_t c = 0; c < stats.size(); ++c) {
      if (c != target && stats[c].means[column] >= stats[target].means[column]) return false;
    }
    return true;
  };
  o.require(strictly_greatest(Regime::kDenseCrowd, 3), "dense-crowd neighbor count");
  o.require(strictly_greatest(Regime::kComplexMotion, 2), "complex-motion max speed");
  o.require(strictly_greatest(Regime::kComplexMotion, 5), "complex-motion curvature");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("dense neighbors ") +
              fmt(stats[0].means[3]) + ", complex max speed " + fmt(stats[4].means[2]) +
              ", complex curvature " + fmt(stats[4].means[5]);
  return o;
}

Outcome extensibility() {
  Outcome o;
  const auto dir = scratch("add");
  PipelineConfig cfg;
  cfg.out = dir;
  cfg.threads = default_thread_count();
  std::ostringstream log;
  cmd_run(cfg, log);
  const auto before = directory_bytes(dir);
  cmd_add_expert(dir, "constant_acceleration name=ca_strong max_accel=8", cfg.threads, log);
  const auto after = directory_bytes(dir);
  const std::set<std::string> may_change = {artifact::kEvidence, artifact::kPolicy, artifact::kPool,
                                            artifact::kManifest, artifact::kPolicyDiff};
  for (const auto& [name, bytes] : after) {
    if (may_change.count(name)) continue;
    o.require(before.count(name) && before.at(name) == bytes, name + " changed");
  }
  o.require(after.at(artifact::kPolicy) != before.at(artifact::kPolicy), "policy not updated");
  o.require(after.at(artifact::kEvidence) != before.at(artifact::kEvidence), "evidence not updated");
  fs::remove_all(dir);
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  PipelineConfig cfg;
  cfg.threads = default_thread_count();
  std::ostringstream log;
  cfg.out = a;
  cmd_run(cfg, log);
  cfg.out = b;
  cmd_run(cfg, log);
  const auto x = directory_bytes(a);
  const auto y = directory_bytes(b);
  o.require(x == y, "artifact directories differ");
  o.detail = std::to_string(x.size()) + " artifacts compared";
  fs::remove_all(a);
  fs::remove_all(b);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "metric oracles", 5.0, metric_oracles},
      {2, "feature oracles and transform properties", 10.0, feature_oracles},
      {3, "k-means properties", 0.0, kmeans_properties},
      {4, "classifier properties", 30.0, classifier_properties},
      {5, "policy optimality and monotonicity", 0.0, policy_properties},
      {6, "oracle-routing identity", 0.0, oracle_routing},
      {7, "ablation ordering", 60.0, ablation_ordering},
      {8, "K sweep", 300.0, sweep_protocol},
      {9, "cluster statistics extremes", 0.0, cluster_statistics_extremes},
      {10, "add-expert keeps frozen artifacts", 0.0, extensibility},
      {11, "run determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      result.pass = false;
      result.detail += " (over the " + fmt(c.budget_s) + " s budget)";
    }
    failures += !result.pass;
    std::printf("%s %2d %s [%.2f s]%s%s\n", result.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                result.detail.empty() ? "" : ": ", result.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
