#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "ym/common.hpp"

namespace ym {

// Deterministic random stream. Uniform and normal draws are generated from
// the raw engine output with fixed arithmetic, not std::*_distribution, so
// sequences are reproducible across standard library implementations. The
// full state (engine + Box-Muller spare) serializes to text for checkpoints.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // Named substream of a master seed: hash(master, tag) via splitmix64.
  static RngStream substream(std::uint64_t master, std::string_view tag);

  // Uniform on [0, 1) with 53-bit resolution.
  double unit() {
    ++n_words_;
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  double normal();

  // Engine words consumed so far; identifies the stream position.
  std::uint64_t draws() const { return n_words_; }

  std::string serialize() const;
  void deserialize(const std::string& text);

  bool operator==(const RngStream& o) const {
    return eng_ == o.eng_ && has_spare_ == o.has_spare_ && spare_ == o.spare_ &&
           n_words_ == o.n_words_;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
  std::uint64_t n_words_ = 0;
};

}  // namespace ym
