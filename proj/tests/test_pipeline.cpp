#include "scenerouter/cli.hpp"
#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/synth.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace scenerouter;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("scenerouter_test_" + name);
  fs::remove_all(dir);
  return dir;
}

PipelineConfig small(const fs::path& out) {
  PipelineConfig cfg;
  cfg.synth_windows_per_regime = 30;
  cfg.boosting.n_rounds = 30;
  cfg.kmeans_restarts = 3;
  cfg.out = out;
  return cfg;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    files[entry.path().filename().string()] = read_file(entry.path());
  }
  return files;
}

double metric(const fs::path& dir, const std::string& method) {
  std::istringstream in(read_file(dir / artifact::kMetrics));
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    double v = 0.0;
    if (f[0] == method && parse_double(f[1], v)) return v;
  }
  FAIL("no metric row " << method);
  return 0.0;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("config keys, text and hash") {
  PipelineConfig cfg;
  cfg.set("k", "7");
  cfg.set("softmax_temperature", "2.5");
  cfg.set("t_obs", "6");
  CHECK(cfg.k == 7);
  CHECK(cfg.window.t_obs == 6);
  CHECK(cfg.to_text().find("softmax_temperature=2.5") != std::string::npos);
  CHECK(code_of([&] { cfg.set("no_such_key", "1"); }) == ErrorCode::kInvalidArgument);
  CHECK_THROWS_AS(cfg.set("k", "seven"), Error);

  PipelineConfig other = cfg;
  other.threads = 9;
  other.out = "elsewhere";
  CHECK(other.hash() == cfg.hash());
  other.seed = 1;
  CHECK(other.hash() != cfg.hash());

  const auto dir = scratch("config");
  fs::create_directories(dir);
  write_file(dir / "c.txt", "# comment\nk=4\nseed=9\n\nsparsity=0.25\n");
  const auto loaded = PipelineConfig::load(dir / "c.txt");
  CHECK(loaded.k == 4);
  CHECK(loaded.seed == 9);
  CHECK(loaded.sparsity == 0.25);
  fs::remove_all(dir);

  PipelineConfig bad;
  bad.train_fraction = 0.9;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("split is a seeded partition keeping order") {
  SynthParams sp;
  sp.windows_per_regime = 20;
  const auto windows = synth_benchmark(sp).windows;
  PipelineConfig cfg;
  const auto split = split_windows(windows, cfg);
  CHECK(split.train.size() + split.evidence.size() + split.test.size() == windows.size());
  std::set<std::int64_t> seen;
  for (const auto* part : {&split.train, &split.evidence, &split.test}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      CHECK(seen.insert((*part)[i].window_id).second);
      if (i) CHECK((*part)[i - 1].window_id < (*part)[i].window_id);
    }
  }
  const auto again = split_windows(windows, cfg);
  CHECK(again.test == split.test);
  cfg.seed = 7;
  CHECK(split_windows(windows, cfg).test != split.test);
}

TEST_CASE("run writes every artifact and is byte-deterministic") {
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  std::ostringstream log;
  cmd_run(small(a), log);
  cmd_run(small(b), log);
  for (const char* name : {artifact::kManifest, artifact::kConfig, artifact::kFeatures,
                           artifact::kClusterModel, artifact::kClassifier, artifact::kEvidence,
                           artifact::kPolicy, artifact::kPool, artifact::kMetrics}) {
    CHECK(fs::exists(a / name));
  }
  CHECK(directory_bytes(a) == directory_bytes(b));
  auto threaded = small(scratch("run_c"));
  threaded.threads = 4;
  cmd_run(threaded, log);
  CHECK(directory_bytes(threaded.out) == directory_bytes(a));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(threaded.out);
}

TEST_CASE("stage failures name the stage") {
  auto cfg = small(scratch("run_fail"));
  cfg.window.t_obs = 2;
  try {
    std::ostringstream log;
    cmd_run(cfg, log);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateSegment);
    CHECK(std::string(e.what()).find("featurize") != std::string::npos);
  }
  fs::remove_all(cfg.out);
}

TEST_CASE("route reproduces the stored evidence-split ade") {
  const auto dir = scratch("route");
  std::ostringstream log;
  const auto summary = cmd_run(small(dir), log);
  const auto out = dir / "routed";
  const auto routed = cmd_route(dir, dir / artifact::kHoldout, out, 2, log);
  CHECK(routed.has_ground_truth);
  CHECK(std::abs(routed.ade - summary.routed_evidence.ade) < 1e-9);
  CHECK(std::abs(routed.ade - metric(dir, "routed_evidence")) < 1e-9);
  CHECK(fs::exists(out / "predictions.csv"));
  CHECK(fs::exists(out / "decisions.csv"));

  write_file(dir / "empty.txt", "");
  const auto empty = cmd_route(dir, dir / "empty.txt", dir / "empty_out", 1, log);
  CHECK(empty.windows == 0);
  CHECK(fs::exists(dir / "empty_out" / "predictions.csv"));

  fs::remove(dir / artifact::kPolicy);
  try {
    cmd_route(dir, dir / artifact::kHoldout, out, 1, log);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kArtifactNotFound);
    CHECK(std::string(e.what()).find("policy.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("add-expert keeps frozen artifacts and updates the policy") {
  const auto dir = scratch("add");
  std::ostringstream log;
  cmd_run(small(dir), log);
  const auto classifier = read_file(dir / artifact::kClassifier);
  const auto cluster = read_file(dir / artifact::kClusterModel);

  const auto dup = cmd_add_expert(dir, "constant_velocity name=cv_copy", 1, log);
  CHECK(dup.new_version == dup.old_version + 1);
  CHECK(dup.remapped_clusters.empty());
  CHECK(read_file(dir / artifact::kClassifier) == classifier);
  CHECK(read_file(dir / artifact::kClusterModel) == cluster);
  CHECK(fs::exists(dir / artifact::kPolicyDiff));
  CHECK_NOTHROW(verify_manifest(dir, std::vector<std::string>{artifact::kPolicy}));

  CHECK(code_of([&] { cmd_add_expert(dir, "constant_velocity name=cv_copy", 1, log); }) ==
        ErrorCode::kDuplicateExpertName);

  write_file(dir / artifact::kClassifier, classifier + "\n");
  CHECK(code_of([&] { cmd_add_expert(dir, "kalman_cv name=kf2", 1, log); }) ==
        ErrorCode::kHashMismatch);
  fs::remove_all(dir);
}

TEST_CASE("a regime-exact expert takes over its clusters") {
  const auto dir = scratch("add_exact");
  fs::create_directories(dir);
  write_file(dir / "pool.txt", "constant_velocity name=constant_velocity\nkalman_cv name=kalman_cv\n");
  auto cfg = small(dir / "run");
  cfg.pool_manifest = (dir / "pool.txt").string();
  std::ostringstream log;
  cmd_run(cfg, log);
  const auto added = cmd_add_expert(cfg.out, "constant_acceleration name=constant_acceleration", 1, log);
  CHECK_FALSE(added.remapped_clusters.empty());
  std::istringstream in(read_file(cfg.out / artifact::kPolicy));
  const auto policy = PolicyTable::load(in);
  for (int c : added.remapped_clusters) CHECK(policy.lookup(c).expert_name == "constant_acceleration");
  fs::remove_all(dir);
}

TEST_CASE("single-K sweep equals the run and ablation rows follow the request") {
  const auto dir = scratch("sweep");
  std::ostringstream log;
  const auto cfg = small(dir);
  const auto run = cmd_run(cfg, log);
  const std::vector<std::size_t> ks = {5};
  const auto sweep = cmd_sweep(cfg, ks, log);
  REQUIRE(sweep.rows.size() == 1);
  CHECK(sweep.rows[0].routed_ade == run.routed_test.ade);
  CHECK(sweep.best_k == 5);

  const std::vector<std::size_t> three = {3, 5, 8};
  CHECK(cmd_sweep(cfg, three, log).rows.size() == 3);

  const std::vector<Variant> one = {Variant::kSingleBest};
  CHECK(cmd_ablate(cfg, one, log).size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("sweep rows match independent reruns") {
  const auto dir = scratch("sweep_rerun");
  const auto cfg = small(dir);
  std::ostringstream log;
  const std::vector<std::size_t> ks = {3, 6};
  const auto sweep = cmd_sweep(cfg, ks, log);
  for (const auto& row : sweep.rows) {
    auto single = cfg;
    single.k = row.k;
    single.out = dir / ("k" + std::to_string(row.k));
    CHECK(cmd_run(single, log).routed_test.ade == row.routed_ade);
  }
  fs::remove_all(dir);
}

TEST_CASE("synth command writes a parseable dataset") {
  const auto dir = scratch("synth");
  auto cfg = small(dir);
  std::ostringstream log;
  cmd_synth(cfg, log);
  const auto records = parse_dataset(dir / "trajectories.txt");
  CHECK_FALSE(records.empty());
  CHECK(fs::exists(dir / "regimes.csv"));

  auto from_file = small(dir / "run");
  from_file.dataset = (dir / "trajectories.txt").string();
  CHECK(load_windows(from_file).size() == 150);
  fs::remove_all(dir);
}

TEST_CASE("report writes derived tables") {
  const auto dir = scratch("report");
  std::ostringstream log;
  cmd_run(small(dir), log);
  cmd_report(dir, log);
  for (const char* name : {"summary.txt", "table_methods.csv", "plot_accuracy_latency.csv", "plot_pca.csv"}) {
    CHECK(fs::exists(dir / name));
  }
  fs::remove_all(dir);
}
