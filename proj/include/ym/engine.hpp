#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ym/common.hpp"
#include "ym/tape.hpp"

namespace ym {

struct EngineConfig {
  int threads = 0;      // 0 = hardware concurrency
  int lane_block = 128; // samples per chunk
};

// Replays one recorded tape over many samples ("lanes"). The tape structure
// is shared; only leaf values differ per lane. Values are stored node-major
// (node * L + lane) so each op streams contiguously over its chunk.
//
// Gradient accumulation is deterministic regardless of worker count: every
// chunk produces its own gradient vector and chunks are summed in index
// order on the calling thread.
class BatchEvaluator {
 public:
  // Writes the input-slot values of one sample, in tape input-slot order.
  using InputFn = std::function<void(std::size_t sample, span<double> slots)>;

  void bind(const Tape& tape, EngineConfig cfg);

  // Forward replay; extracts the values of `comp_nodes` for every sample into
  // `out`, laid out component-major: out[c * n_samples + s].
  void forward(span<const double> params, std::size_t n_samples, const InputFn& fill,
               span<const std::int32_t> comp_nodes, span<double> out);

  // Forward + reverse replay; seeds component c of sample s with
  // seeds[c * n_samples + s] and adds d(sum of seeded outputs)/d(params)
  // into `grad`.
  void backward(span<const double> params, std::size_t n_samples, const InputFn& fill,
                span<const std::int32_t> comp_nodes, span<const double> seeds,
                span<double> grad);

 private:
  struct Workspace {
    std::vector<double> val;
    std::vector<double> adj;
  };

  void forward_chunk(Workspace& ws, span<const double> params, std::size_t begin,
                     std::size_t count, const InputFn& fill) const;
  void run_chunks(std::size_t n_samples, const std::function<void(Workspace&, std::size_t chunk)>& body);

  const Tape* tape_ = nullptr;
  EngineConfig cfg_;
  int threads_ = 1;
};

}  // namespace ym
