#pragma once

#include <string>
#include <vector>

#include "ym/loss_program.hpp"
#include "ym/optimizer.hpp"
#include "ym/problems.hpp"

namespace ym {

// Batch size grows geometrically: initial * multiplier^floor(epoch/period),
// capped. multiplier 1 keeps it constant.
struct BatchGrowth {
  int initial = 5;
  double multiplier = 2.0;
  int period = 100;
  int cap = 4096;
};

int batch_schedule(int epoch, const BatchGrowth& g);

struct TrainConfig {
  int epochs = 1500;
  BatchGrowth growth;
  std::uint64_t master_seed = 1;
  int checkpoint_every = 100;
  std::string out_dir;        // empty disables file output
  int case1_grid = 201;       // points per axis of the deterministic (x, xi) grid
  int case1_subsample = 0;    // 0 = full grid every epoch; else nodes kept per axis
  double latent_lo = -2.0;    // latent range for stochastic batches
  double latent_hi = 2.0;
  LatentSampling latent_mode = LatentSampling::kWeightedUniform;
  int probe_batch = 2048;     // deterministic probe batch size (2D final loss)
  AdamConfig adam;
  PlateauConfig plateau;
  EngineConfig engine;
};

struct EpochStats {
  int epoch = 0;
  double total = 0.0;
  double energy = 0.0;
  double boundary = 0.0;
  double curl = 0.0;
  double lr = 0.0;
  int batch_size = 0;
  double seconds = 0.0;
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
};

struct TrainResult {
  PotentialNetwork net;
  TrainRecord record;
  bool failed = false;
  std::string failure_term;
  int stopped_epoch = 0;
  LossBreakdown final_probe;  // loss at the final parameters on the probe batch
};

// Full training state for interrupt/resume; serializes losslessly (hexfloat)
// so a resumed run reproduces the uninterrupted trajectory bit for bit.
struct TrainState {
  int epoch = 0;
  AdamState adam;
  PlateauScheduler sched;
  std::string batch_rng;
  std::vector<EpochStats> history;
};

void save_train_state(const TrainState& st, const std::string& path);
TrainState load_train_state(const std::string& path);

// The deterministic probe batch used for the reported final loss.
Batch probe_batch_for(const ProblemSpec& prob, const TrainConfig& cfg);

TrainResult train(const ProblemSpec& prob, const NetworkConfig& ncfg, const TrainConfig& cfg,
                  const std::string& resume_state = "");

void write_history_csv(const std::string& path, span<const EpochStats> rows);

}  // namespace ym
