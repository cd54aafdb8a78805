#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ym/common.hpp"

namespace ym {

struct AdamConfig {
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double lr = 1e-3;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig c) : cfg(c), m(n, 0.0), v(n, 0.0), lr(c.lr0) {}
};

// Bias-corrected Adam update in place. Returns the index of the first
// non-finite gradient entry and leaves everything untouched in that case.
std::optional<std::size_t> adam_step(AdamState& st, span<double> params, span<const double> grad);

struct PlateauConfig {
  double factor = 0.5;
  int patience = 250;
  double min_lr = 1e-6;
  double rel_improve = 1e-3;  // improvement must beat best * (1 - rel_improve)
};

// Reduce-on-plateau: when the monitored loss has not meaningfully improved
// for `patience` consecutive epochs, multiply the learning rate by `factor`
// (never below min_lr) and reset the counter.
struct PlateauScheduler {
  PlateauConfig cfg;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  PlateauScheduler() = default;
  explicit PlateauScheduler(PlateauConfig c) : cfg(c) {}

  // Returns true when the learning rate was reduced.
  bool step(double epoch_loss, double& lr);
};

}  // namespace ym
