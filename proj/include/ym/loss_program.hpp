#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ym/engine.hpp"
#include "ym/problems.hpp"

namespace ym {

// Training-path evaluator: the network jet passes a case needs are recorded
// once onto tapes and replayed over sample lanes; the loss head over the
// per-sample components runs on a small outer tape whose reverse sweep
// provides the seeds for the network reverse replay. Produces the same
// breakdown values as the plain loss_* functions, plus exact parameter
// gradients, with deterministic accumulation order.
class LossProgram {
 public:
  LossProgram(const NetworkConfig& ncfg, const ProblemSpec& prob, EngineConfig ecfg);

  // Evaluates the breakdown at `params` on `batch`. If `grad` is non-empty it
  // must have param_count entries and receives d(total)/d(params).
  LossBreakdown evaluate(span<const double> params, const Batch& batch, span<double> grad);

  // Names the first loss term whose value or gradient is non-finite.
  std::string diagnose(span<const double> params, const Batch& batch);

  const ParamLayout& layout() const { return layout_; }
  const Batch& aux_grid() const { return aux_; }

 private:
  LossBreakdown eval_bolza(span<const double> params, const Batch& batch, span<double> grad,
                           std::vector<double>* term_grads);
  LossBreakdown eval_2d(span<const double> params, const Batch& batch, span<double> grad,
                        std::vector<double>* term_grads);
  void ensure_outer_bolza(std::size_t n_x, std::size_t n_xi, span<const double> w_xi);
  void ensure_outer_2d(const Batch& batch);

  ProblemSpec prob_;
  ParamLayout layout_;
  EngineConfig ecfg_;

  // Network tapes. Case 1 uses only xi-tracking; the 2D cases use pass A
  // (x, tau, mixed), pass B (y, xi, mixed) and the first-order aux pass C.
  Tape tape_a_, tape_b_, tape_c_;
  RecordedPotential rec_a_, rec_b_, rec_c_;
  BatchEvaluator eval_a_, eval_b_, eval_c_;

  Batch aux_;  // 2D boundary quadrature grid

  // Outer loss tape, cached against the batch shape that built it.
  Tape outer_;
  ScalarEval outer_eval_;
  std::vector<std::int64_t> outer_key_;
  assemble::Terms<TV> outer_terms_;
  std::vector<TV> outer_leaves_;

  // Scratch
  std::vector<double> comps_a_, comps_b_, comps_c_;
  std::vector<double> seeds_a_, seeds_b_, seeds_c_;
};

}  // namespace ym
