#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "graphon/parallel.hpp"
#include "graphon/pipeline.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::string out;
  unsigned threads = 1;
  bool deterministic = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--n", o.n, "number of vertices");
  sub->add_option("--out", o.out, "output directory (default: $GRAPHON_FORGE_OUT or ./graphon-forge-out)");
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--deterministic", o.deterministic, "single-threaded, fixed reduction order");
}

graphon::PipelineConfig resolve(const CommonOptions& o) {
  graphon::PipelineConfig cfg = graphon::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.n) cfg.n = *o.n;
  cfg.threads = o.threads;
  cfg.deterministic = cfg.deterministic || o.deterministic;
  if (!o.out.empty()) {
    cfg.out_dir = o.out;
  } else if (cfg.out_dir.empty()) {
    const char* env = std::getenv("GRAPHON_FORGE_OUT");
    cfg.out_dir = env && *env ? env : "graphon-forge-out";
  }
  cfg.validate();
  return cfg;
}

void print_summary(const graphon::RunState& s) {
  std::cout << "K = " << s.K();
  if (s.alignment) std::cout << "  delta2_upper = " << s.alignment->delta2_upper;
  if (s.l2) std::cout << "  l2_grid = " << s.l2->value;
  std::cout << '\n';
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphon-forge: sparse graphon estimation from non-backtracking spectra and star counts"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::vector<std::pair<CLI::App*, graphon::Stage>> stage_cmds;
  for (graphon::Stage s : {graphon::Stage::Generate, graphon::Stage::Spectrum, graphon::Stage::Moments,
                           graphon::Stage::Fit, graphon::Stage::Estimate, graphon::Stage::Evaluate}) {
    CLI::App* sub = app.add_subcommand(graphon::stage_name(s), "run the " + graphon::stage_name(s) +
                                                                   " stage on the previous stage's dumps");
    add_common(sub, opts);
    stage_cmds.emplace_back(sub, s);
  }
  CLI::App* run = app.add_subcommand("run", "run every stage and write the manifest");
  add_common(run, opts);
  CLI::App* scaled = app.add_subcommand("scaled", "run the pipeline for each h in the ladder");
  add_common(scaled, opts);

  CLI11_PARSE(app, argc, argv);

  graphon::Stage stage = graphon::Stage::Config;
  try {
    graphon::PipelineConfig cfg;
    try {
      cfg = resolve(opts);
    } catch (const std::exception& e) {
      throw graphon::StageError(graphon::Stage::Config, e.what());
    }
    graphon::set_thread_count(cfg.deterministic ? 1 : cfg.threads);

    if (run->parsed()) {
      const graphon::RunState s = graphon::run_pipeline(cfg);
      print_summary(s);
      std::cout << "wrote " << (cfg.out_dir / "manifest.json").string() << '\n';
      return 0;
    }
    if (scaled->parsed()) {
      std::cout << std::setw(8) << "h" << std::setw(6) << "K" << std::setw(16) << "delta2_upper"
                << std::setw(12) << "l2_grid" << '\n';
      for (const auto& row : graphon::run_scaled(cfg))
        std::cout << std::setw(8) << row.h << std::setw(6) << row.K << std::setw(16) << row.delta2_upper
                  << std::setw(12) << row.l2_grid << (row.degenerate ? "  degenerate" : "") << '\n';
      return 0;
    }
    for (const auto& [sub, s] : stage_cmds) {
      if (!sub->parsed()) continue;
      stage = s;
      graphon::RunState state = graphon::prepare(cfg);
      graphon::load_stage_inputs(s, cfg, state);
      graphon::run_stage(s, cfg, state);
      for (const auto& w : state.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << graphon::stage_name(s) << ": wrote dumps to " << cfg.out_dir.string() << '\n';
    }
    return 0;
  } catch (const graphon::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << graphon::stage_name(stage) << ": " << e.what() << '\n';
    return static_cast<int>(stage);
  }
}
