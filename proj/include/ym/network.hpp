#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ym/common.hpp"
#include "ym/jet.hpp"
#include "ym/tape.hpp"

namespace ym {

enum class TrunkMode { kLiteralBlock, kLiftedTrunk };

std::string to_string(TrunkMode m);
TrunkMode trunk_mode_from_string(const std::string& s);

struct NetworkConfig {
  int input_dim = 2;
  int depth = 4;   // residual blocks
  int width = 25;  // hidden neurons per block
  TrunkMode trunk = TrunkMode::kLiteralBlock;
  std::uint64_t seed = 1;
};

// Flat parameter storage with a layout mapping (block, role) -> slice.
// Order: optional [lift W, lift b], per block [W1, b1, W2, b2], then
// [head w, head b]. Matrices are row-major.
struct ParamLayout {
  struct Block {
    std::size_t w1, b1, w2, b2;
  };
  int input_dim = 0;
  int width = 0;
  int trunk_width = 0;  // input_dim in literal-block mode, width in lifted mode
  bool lifted = false;
  std::size_t lift_w = 0, lift_b = 0;
  std::vector<Block> blocks;
  std::size_t head_w = 0, head_b = 0;
  std::size_t total = 0;
};

ParamLayout make_layout(const NetworkConfig& cfg);
std::size_t param_count(const NetworkConfig& cfg);

struct PotentialNetwork {
  NetworkConfig config;
  ParamLayout layout;
  std::vector<double> params;
};

// Xavier-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases,
// deterministic in config.seed. Draw order follows the layout.
PotentialNetwork init_xavier(const NetworkConfig& cfg);

namespace detail {

struct PlainParams {
  span<const double> p;
  double operator[](std::size_t i) const { return p[i]; }
};

struct TapeParams {
  Tape* tape;
  TV operator[](std::size_t i) const { return TV{tape, static_cast<std::int32_t>(i)}; }
};

inline double scale_p(double s, double x) { return s * x; }
inline double shift_p(double x, double s) { return x + s; }
inline double gelu_p(double x) { return gelu(x); }
template <class S>
Jet2<S> scale_p(const S& s, const Jet2<S>& x) {
  return scale(s, x);
}
template <class S>
Jet2<S> shift_p(const Jet2<S>& x, const S& s) {
  return shift(x, s);
}
template <class S>
Jet2<S> gelu_p(const Jet2<S>& x) {
  return gelu(x);
}

// The trunk/head evaluation shared by every path. Num is double (values),
// Jet2<double> (plain jets) or Jet2<TV> (tape recording); PA supplies the
// parameters as Num's scalar type. One code path keeps the op order, and so
// the value channel, identical between all three.
template <class Num, class PA>
Num forward_potential(const ParamLayout& lay, const PA& params, span<const Num> input) {
  const int n = lay.trunk_width;
  const int m = lay.width;
  std::vector<Num> h(static_cast<std::size_t>(n));
  std::vector<Num> hid(static_cast<std::size_t>(m));
  std::vector<Num> out(static_cast<std::size_t>(n));

  if (lay.lifted) {
    for (int r = 0; r < n; ++r) {
      Num acc = scale_p(params[lay.lift_w + static_cast<std::size_t>(r * lay.input_dim)], input[0]);
      for (int c = 1; c < lay.input_dim; ++c)
        acc = acc + scale_p(params[lay.lift_w + static_cast<std::size_t>(r * lay.input_dim + c)],
                            input[static_cast<std::size_t>(c)]);
      h[static_cast<std::size_t>(r)] = shift_p(acc, params[lay.lift_b + static_cast<std::size_t>(r)]);
    }
  } else {
    for (int r = 0; r < n; ++r) h[static_cast<std::size_t>(r)] = input[static_cast<std::size_t>(r)];
  }

  for (const auto& blk : lay.blocks) {
    for (int r = 0; r < m; ++r) {
      Num acc = scale_p(params[blk.w1 + static_cast<std::size_t>(r * n)], h[0]);
      for (int c = 1; c < n; ++c)
        acc = acc + scale_p(params[blk.w1 + static_cast<std::size_t>(r * n + c)],
                            h[static_cast<std::size_t>(c)]);
      hid[static_cast<std::size_t>(r)] =
          gelu_p(shift_p(acc, params[blk.b1 + static_cast<std::size_t>(r)]));
    }
    for (int r = 0; r < n; ++r) {
      Num acc = scale_p(params[blk.w2 + static_cast<std::size_t>(r * m)], hid[0]);
      for (int c = 1; c < m; ++c)
        acc = acc + scale_p(params[blk.w2 + static_cast<std::size_t>(r * m + c)],
                            hid[static_cast<std::size_t>(c)]);
      out[static_cast<std::size_t>(r)] =
          gelu_p(shift_p(acc, params[blk.b2 + static_cast<std::size_t>(r)])) +
          h[static_cast<std::size_t>(r)];
    }
    std::swap(h, out);
  }

  Num acc = scale_p(params[lay.head_w], h[0]);
  for (int c = 1; c < n; ++c)
    acc = acc + scale_p(params[lay.head_w + static_cast<std::size_t>(c)],
                        h[static_cast<std::size_t>(c)]);
  return shift_p(acc, params[lay.head_b]);
}

}  // namespace detail

// Value of F at a point.
double eval_value(const PotentialNetwork& net, span<const double> x);

// F with exact first partials along dir_a/dir_b and the mixed second partial.
// dir_b < 0 tracks a single direction (db = dab = 0). dir_a == dir_b yields a
// pure second partial in dab.
Jet2d eval_jet(const PotentialNetwork& net, span<const double> x, int dir_a, int dir_b);

// Node ids of the jet channels of F recorded on a tape whose parameter block
// is already allocated. Input slots are registered in coordinate order.
// dir < 0 disables that direction; untracked channels report id -1.
struct RecordedPotential {
  std::int32_t value = -1;
  std::int32_t da = -1;
  std::int32_t db = -1;
  std::int32_t dab = -1;
};
RecordedPotential record_potential(Tape& tape, const ParamLayout& lay, int dir_a, int dir_b);

// Checkpoint: text header (key=value lines, data offset), then the raw
// little-endian array of 64-bit parameter values. Round trip is bit-exact.
void save_checkpoint(const PotentialNetwork& net, const std::string& path);
PotentialNetwork load_checkpoint(const std::string& path);

}  // namespace ym
