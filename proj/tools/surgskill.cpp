#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "surgskill/cli.hpp"
#include "surgskill/error.hpp"

using namespace surgskill;

int main(int argc, char** argv) {
  CLI::App app{"Surgical tool-motion skill analysis"};
  app.require_subcommand(1);

  std::string config_path, out = "-", plots;
  int jobs = 1;
  long long seed = -1;
  int k_modes = 0, bins = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value configuration file");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed (overrides config)")->check(CLI::NonNegativeNumber);
    sub->add_option("--k-modes", k_modes, "number of dynamic modes")->check(CLI::PositiveNumber);
    sub->add_option("--bins", bins, "speed and curvature bin count")->check(CLI::PositiveNumber);
  };

  std::vector<std::string> inputs;
  auto* analyze = app.add_subcommand("analyze", "per-trajectory primitives, histograms and dynamic modes");
  common(analyze);
  analyze->add_option("inputs", inputs, "trajectory CSV files");
  analyze->add_option("--out", out, "report path ('-' for stdout)");
  analyze->add_option("--plots", plots, "directory for CSV plot data");

  std::string manifest;
  auto* group = app.add_subcommand("group", "group divergence table, classification and spatial organization");
  common(group);
  group->add_option("manifest", manifest, "CSV manifest path,subject,group")->required();
  group->add_option("--out", out, "report path ('-' for stdout)");

  std::string kind, out_dir;
  std::size_t count = 1;
  auto* synth = app.add_subcommand("synth", "generate synthetic trajectories");
  common(synth);
  synth->add_option("kind", kind, "peg or pwa")->required()->check(CLI::IsMember({"peg", "pwa"}));
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--count", count, "number of consecutive seeds")->check(CLI::PositiveNumber);

  std::string report_path;
  auto* report = app.add_subcommand("report", "pretty-print a JSON report");
  report->add_option("report", report_path, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cli::Config cfg = config_path.empty() ? cli::Config{} : cli::load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (k_modes > 0) cfg.k_modes = k_modes;
    if (bins > 0) cfg.binning.speed_bins = cfg.binning.kappa_bins = bins;
    cli::RunOptions run{jobs, plots};

    if (*analyze) {
      if (inputs.empty()) {
        std::cerr << "analyze: no input files\n" << analyze->help();
        return 2;
      }
      auto text = cli::cmd_analyze(inputs, cfg, out, run);
      if (out == "-") std::cout << text;
    } else if (*group) {
      auto text = cli::cmd_group(manifest, cfg, out, run);
      if (out == "-") std::cout << text;
    } else if (*synth) {
      auto files = cli::cmd_synth(kind == "peg" ? cli::SynthKind::Peg : cli::SynthKind::Pwa, cfg, cfg.seed, count,
                                  out_dir);
      for (const auto& f : files) std::cout << f << "\n";
    } else if (*report) {
      cli::cmd_report(report_path, std::cout);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const AnalysisError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
