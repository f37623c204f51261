#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "surgskill/ingest.hpp"
#include "surgskill/primitives.hpp"
#include "surgskill/pwarx.hpp"
#include "surgskill/stats.hpp"
#include "surgskill/synth.hpp"

namespace surgskill::cli {

inline constexpr int kSchemaVersion = 1;

struct Config {
  DiffOptions diff;
  double resample_rate = 0.0;  // 0: resample to the nearest integer rate only when sampling is irregular
  Binning binning;
  double dominant_mass = 0.5;
  PrimitiveLibrary primitives;
  int k_modes = 3;
  IdentOptions ident;
  bool pooled = false;  // analyze: additionally identify one model over all inputs
  std::uint64_t seed = 0;
  std::string synth_skill = "expert";
  int synth_blocks = 6;
  std::map<std::string, double> skill_overrides;  // synth.<field>
  double pwa_noise = 0.01;  // fraction of the noiseless peak speed
  std::size_t pwa_horizon = 10000;
};

// Flat `key = value` text; '#' starts a comment. Unknown keys are errors.
Config parse_config(std::istream& in, const std::string& name = "<config>");
Config load_config(const std::string& path);
void set_config_value(Config& cfg, const std::string& key, const std::string& value);
std::string config_text(const Config& cfg);
std::vector<std::string> config_keys();

SkillParams skill_params(const Config& cfg);

struct RunOptions {
  int jobs = 1;
  std::string plots_dir;  // empty: no CSV plot data
};

// Each returns the report text that was written to `out`.
std::string cmd_analyze(const std::vector<std::string>& inputs, const Config& cfg, const std::string& out,
                        const RunOptions& run = {});
std::string cmd_group(const std::string& manifest, const Config& cfg, const std::string& out, const RunOptions& run = {});

enum class SynthKind { Peg, Pwa };
// Writes <out_dir>/<kind>_<seed>.csv plus <kind>_<seed>.labels.csv; returns the data file paths.
std::vector<std::string> cmd_synth(SynthKind kind, const Config& cfg, std::uint64_t first_seed, std::size_t count,
                                   const std::string& out_dir);

void cmd_report(const std::string& report_path, std::ostream& out);

}  // namespace surgskill::cli
