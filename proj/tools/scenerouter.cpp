#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scenerouter/cli.hpp"
#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"

namespace ss = scenerouter;

namespace {

struct ConfigFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<std::string> dataset;
  std::optional<double> dt;
  std::optional<int> t_obs;
  std::optional<int> t_pred;
  std::optional<int> stride;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key=value config file");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--threads", threads, "worker threads (default: hardware concurrency)");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--k", k, "number of scene clusters");
    cmd->add_option("--dataset", dataset, "'synth' or comma-separated trajectory files");
    cmd->add_option("--dt", dt, "seconds per frame");
    cmd->add_option("--t-obs", t_obs, "observed frames per window");
    cmd->add_option("--t-pred", t_pred, "predicted frames per window");
    cmd->add_option("--stride", stride, "window stride in frames");
    cmd->add_option("--set", overrides, "extra key=value config override (repeatable)");
  }

  ss::PipelineConfig resolve() const {
    ss::PipelineConfig cfg;
    if (!config.empty()) cfg = ss::PipelineConfig::load(config);
    cfg.threads = ss::default_thread_count();
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ss::Error(ss::ErrorCode::kInvalidArgument, "--set expects key=value");
      }
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = std::max<std::size_t>(1, *threads);
    if (out) cfg.out = *out;
    if (k) cfg.k = *k;
    if (dataset) cfg.dataset = *dataset;
    if (dt) cfg.set("dt", ss::format_double(*dt));
    if (t_obs) cfg.window.t_obs = *t_obs;
    if (t_pred) cfg.window.t_pred = *t_pred;
    if (stride) cfg.window.stride = *stride;
    return cfg;
  }
};

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  for (const auto& part : ss::split(text, ',')) {
    long long v = 0;
    if (!ss::parse_int(ss::trim(part), v) || v < 1) {
      throw ss::Error(ss::ErrorCode::kInvalidArgument, "bad K value '" + part + "'");
    }
    ks.push_back(static_cast<std::size_t>(v));
  }
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Route trajectory segments to prediction experts by scene type"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "fit the full pipeline and write artifacts");
  run_flags.attach(run);

  ConfigFlags ablate_flags;
  std::string variants = "full,random_labels,no_clustering,random_expert,uniform_ensemble,"
                         "single_best,reduced_pool";
  auto* ablate = app.add_subcommand("ablate", "run ablation variants on the test split");
  ablate_flags.attach(ablate);
  ablate->add_option("--variants", variants, "comma-separated variant names");

  ConfigFlags sweep_flags;
  std::string ks = "3,4,5,6,7,8,10";
  auto* sweep = app.add_subcommand("sweep", "re-fit and evaluate for several K");
  sweep_flags.attach(sweep);
  sweep->add_option("--ks", ks, "comma-separated cluster counts");

  ConfigFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "write the synthetic benchmark");
  synth_flags.attach(synth);

  std::string model_dir;
  std::string input;
  std::string route_out;
  std::size_t route_threads = ss::default_thread_count();
  auto* route = app.add_subcommand("route", "route trajectories through frozen artifacts");
  route->add_option("--model", model_dir, "run directory")->required();
  route->add_option("--input", input, "trajectory file or window CSV")->required();
  route->add_option("--out", route_out, "output directory (default: <model>/route)");
  route->add_option("--threads", route_threads, "worker threads");

  std::string add_model;
  std::string expert_spec;
  std::size_t add_threads = ss::default_thread_count();
  auto* add = app.add_subcommand("add-expert", "register a new expert without retraining");
  add->add_option("--model", add_model, "run directory")->required();
  add->add_option("--expert", expert_spec, "pool manifest line, e.g. 'kalman_cv name=kf2'")
      ->required();
  add->add_option("--threads", add_threads, "worker threads");

  std::string report_model;
  auto* report = app.add_subcommand("report", "emit report tables and plot data for a run");
  report->add_option("--model", report_model, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      ss::cmd_run(run_flags.resolve(), std::cout);
    } else if (*ablate) {
      std::vector<ss::Variant> list;
      for (const auto& name : ss::split(variants, ',')) {
        list.push_back(ss::parse_variant(ss::trim(name)));
      }
      ss::cmd_ablate(ablate_flags.resolve(), list, std::cout);
    } else if (*sweep) {
      ss::cmd_sweep(sweep_flags.resolve(), parse_ks(ks), std::cout);
    } else if (*synth) {
      ss::cmd_synth(synth_flags.resolve(), std::cout);
    } else if (*route) {
      const std::string out = route_out.empty() ? model_dir + "/route" : route_out;
      ss::cmd_route(model_dir, input, out, route_threads, std::cout);
    } else if (*add) {
      ss::cmd_add_expert(add_model, expert_spec, add_threads, std::cout);
    } else if (*report) {
      ss::cmd_report(report_model, std::cout);
    }
  } catch (const ss::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ss::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
