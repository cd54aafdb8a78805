#pragma once

#include <array>
#include <string>
#include <vector>

#include "ym/analysis.hpp"
#include "ym/trainer.hpp"

namespace ym {

struct AnalysisConfig {
  HistogramSpec hist;
  int hist_samples = 10000;
  int probe_grid = 33;   // 2D spatial probe resolution per axis
  int latent_grid = 33;  // latent nodes per axis for barycenter means
  std::vector<std::array<double, 2>> anchors = {{0.5, 0.5}, {0.25, 0.75}, {0.75, 0.25}};
  int probes_1d = 11;    // case-1 probe points x = 0, 0.1, ..., 1
};

// Everything one run needs; serializes to a flat key-value file with section
// headers, and every run directory keeps the exact resolved copy it used.
struct RunConfig {
  ProblemSpec problem;
  NetworkConfig network;
  TrainConfig train;
  AnalysisConfig analysis;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";

  // Fills derived fields (network dims from the case, sub-seeds, per-case
  // epoch defaults) and validates; throws invalid_input naming bad fields.
  void resolve();
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace ym
