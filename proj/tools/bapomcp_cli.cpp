// Command-line front end for running budget-aware POMCP sampling experiments.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bapomcp/environments.hpp"
#include "bapomcp/harness.hpp"
#include "bapomcp/tree_dump.hpp"

namespace {

using namespace bapomcp;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw ConfigError("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds is empty");
  return seeds;
}

void print_summary(const RunSummary& s) {
  std::cout << s.method << ": mean reward " << s.mean_reward << " (sd " << s.std_reward
            << "), mean rollouts " << s.mean_rollouts << " (sd " << s.std_rollouts
            << "), wall " << s.total_wall_ms / 1000.0 << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-aware POMCP planning for adaptive sampling"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string seeds_text;
  std::string dump_tree;
  int dump_levels = 2;
  bool diagnostics = false;
  bool parallel = false;

  auto* run = app.add_subcommand("run", "Run seeded episodes and write per-episode CSVs");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds_text, "Comma-separated seeds, overrides the config");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--dump-tree", dump_tree, "Write the first planning tree of the first seed as JSON");
  run->add_option("--dump-levels", dump_levels, "Action layers in the tree dump")->check(CLI::PositiveNumber);
  run->add_flag("--diagnostics", diagnostics, "Also write ground-truth diagnostics per episode");
  run->add_flag("--parallel", parallel, "Run seeds concurrently");

  auto* grid = app.add_subcommand("grid-search", "Rank the 7x7 Beta allocation curves");
  grid->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  grid->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Baseline vs proposed on identical seeds");
  compare->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", out_dir, "Output directory");

  std::string dataset_out;
  std::uint64_t dataset_seed = 0;
  auto* gen = app.add_subcommand("gen-dataset", "Write the synthetic x,y,z,value dataset");
  gen->add_option("--out", dataset_out, "CSV path")->required();
  gen->add_option("--seed", dataset_seed, "Noise seed");

  double threshold = 0.6;
  std::string slices_out;
  SliceLattice lattice;
  auto* exp = app.add_subcommand("export-truth", "Export dynamic-field lattice values above a threshold");
  exp->add_option("--threshold", threshold, "Keep rows with value >= threshold");
  exp->add_option("--out", slices_out, "CSV path")->required();
  exp->add_option("--nx", lattice.nx, "Lattice points along x");
  exp->add_option("--ny", lattice.ny, "Lattice points along y");
  exp->add_option("--nt", lattice.nt, "Lattice points along t");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
      ExperimentOptions opts;
      opts.out_dir = out_dir;
      opts.parallel = parallel;
      opts.diagnostics = diagnostics;
      if (!dump_tree.empty()) {
        EpisodeHooks hooks;
        std::optional<nlohmann::json> first;
        hooks.on_plan = [&](int, const SearchTree& tree) {
          if (!first) first = tree_to_json(tree, dump_levels);
        };
        run_episode(cfg, cfg.seeds.front(), hooks);
        std::ofstream f(dump_tree);
        if (!f) throw std::runtime_error("cannot write " + dump_tree);
        f << first.value_or(nlohmann::json::object()).dump(1) << '\n';
      }
      const auto result = run_experiment(cfg, cfg.seeds, opts);
      print_summary(result.summary);
    } else if (*grid) {
      const ExperimentConfig cfg = load_config(config_path);
      const auto ranked = grid_search(cfg, {}, std::filesystem::path(out_dir));
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::cout << i + 1 << ". alpha=" << ranked[i].curve.alpha << " beta=" << ranked[i].curve.beta
                  << " mean reward " << ranked[i].mean_reward << '\n';
      }
    } else if (*compare) {
      const ExperimentConfig cfg = load_config(config_path);
      ExperimentOptions opts;
      opts.out_dir = out_dir;
      const auto report = compare_baseline(cfg, opts);
      print_summary(report.baseline.summary);
      print_summary(report.proposed.summary);
    } else if (*gen) {
      const auto rows = write_synthetic_dataset(dataset_out, dataset_seed);
      std::cout << "wrote " << rows << " rows to " << dataset_out << '\n';
    } else if (*exp) {
      const auto rows = export_truth_slices(GroundTruth::dynamic(), threshold, slices_out, lattice);
      std::cout << "wrote " << rows << " rows to " << slices_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
