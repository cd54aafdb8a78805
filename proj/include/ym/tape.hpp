#pragma once

#include <cstdint>
#include <vector>

#include "ym/common.hpp"
#include "ym/math.hpp"

namespace ym {

struct TV;

// Primitive operations recorded on the tape. Each node has at most two
// parents; local partial derivatives are reconstructed from parent values
// during the reverse sweep, so nothing value-dependent is stored in the
// structure itself. That keeps a recorded tape reusable: the same node list
// can be replayed for any leaf values (bit-for-bit, same op order).
enum class Op : std::uint8_t {
  kLeaf,     // value supplied externally (parameter slot or input slot)
  kAdd,      // a + b
  kSub,      // a - b
  kMul,      // a * b
  kAddC,     // a + c
  kMulC,     // a * c
  kNormCdf,  // Phi(a); d/da = phi(a)
  kNormPdf,  // phi(a); d/da = -a phi(a)
};

struct TapeNode {
  Op op;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double c = 0.0;
};

// Append-only record of a scalar computation. Leaves come first: parameter
// slots [0, param_count), then registered input slots. Reverse sweeps visit
// nodes exactly once in reverse order of recording, which is a reverse
// topological order because parents always precede children.
class Tape {
 public:
  std::int32_t add_param_block(int count) {
    YM_CHECK(nodes_.empty(), "Tape: parameter block must be allocated first");
    for (int i = 0; i < count; ++i) nodes_.push_back({Op::kLeaf});
    n_params_ = count;
    return 0;
  }

  std::int32_t add_input() {
    YM_CHECK(!finalized_, "Tape: finalized");
    auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({Op::kLeaf});
    input_slots_.push_back(id);
    return id;
  }

  std::int32_t emit(Op op, std::int32_t a, std::int32_t b, double c) {
    YM_CHECK(!finalized_, "Tape: finalized");
    auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({op, a, b, c});
    return id;
  }

  TV leaf_tv(std::int32_t id);

  void finalize() { finalized_ = true; }
  bool finalized() const { return finalized_; }

  void set_track_mixed(bool on) { track_mixed_ = on; }
  bool track_mixed() const { return track_mixed_; }

  std::size_t size() const { return nodes_.size(); }
  std::int32_t param_count() const { return n_params_; }
  const std::vector<std::int32_t>& input_slots() const { return input_slots_; }
  const TapeNode& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<TapeNode>& nodes() const { return nodes_; }

  void clear() {
    nodes_.clear();
    input_slots_.clear();
    n_params_ = 0;
    finalized_ = false;
  }

  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  std::vector<TapeNode> nodes_;
  std::vector<std::int32_t> input_slots_;
  std::int32_t n_params_ = 0;
  bool track_mixed_ = true;
  bool finalized_ = false;
};

// Recording handle: either a node on a tape or a literal constant (id < 0).
// Arithmetic folds constants so that unseeded derivative channels cost no
// tape nodes at all.
struct TV {
  Tape* tape = nullptr;
  std::int32_t id = -1;
  double c = 0.0;

  TV() = default;
  TV(Tape* t, std::int32_t node) : tape(t), id(node) {}
  static TV constant(double v) {
    TV r;
    r.c = v;
    return r;
  }
  bool is_const() const { return id < 0; }
  bool is_zero() const { return id < 0 && c == 0.0; }
};

inline TV Tape::leaf_tv(std::int32_t id) { return TV{this, id}; }

namespace detail {
inline Tape* tape_of(const TV& a, const TV& b) {
  Tape* t = a.tape ? a.tape : b.tape;
  YM_CHECK(!a.tape || !b.tape || a.tape == b.tape, "TV: operands from different tapes");
  return t;
}
}  // namespace detail

inline TV operator+(const TV& a, const TV& b) {
  if (a.is_const() && b.is_const()) return TV::constant(a.c + b.c);
  if (a.is_const()) {
    if (a.c == 0.0) return b;
    return {b.tape, b.tape->emit(Op::kAddC, b.id, -1, a.c)};
  }
  if (b.is_const()) {
    if (b.c == 0.0) return a;
    return {a.tape, a.tape->emit(Op::kAddC, a.id, -1, b.c)};
  }
  Tape* t = detail::tape_of(a, b);
  return {t, t->emit(Op::kAdd, a.id, b.id, 0.0)};
}

inline TV operator-(const TV& a, const TV& b) {
  if (a.is_const() && b.is_const()) return TV::constant(a.c - b.c);
  if (b.is_const()) {
    if (b.c == 0.0) return a;
    return {a.tape, a.tape->emit(Op::kAddC, a.id, -1, -b.c)};
  }
  if (a.is_const()) {
    // a - b = (-1)*b + a
    TV neg{b.tape, b.tape->emit(Op::kMulC, b.id, -1, -1.0)};
    if (a.c == 0.0) return neg;
    return {b.tape, b.tape->emit(Op::kAddC, neg.id, -1, a.c)};
  }
  Tape* t = detail::tape_of(a, b);
  return {t, t->emit(Op::kSub, a.id, b.id, 0.0)};
}

inline TV operator*(const TV& a, const TV& b) {
  if (a.is_const() && b.is_const()) return TV::constant(a.c * b.c);
  if (a.is_const()) {
    if (a.c == 0.0) return TV::constant(0.0);
    if (a.c == 1.0) return b;
    return {b.tape, b.tape->emit(Op::kMulC, b.id, -1, a.c)};
  }
  if (b.is_const()) {
    if (b.c == 0.0) return TV::constant(0.0);
    if (b.c == 1.0) return a;
    return {a.tape, a.tape->emit(Op::kMulC, a.id, -1, b.c)};
  }
  Tape* t = detail::tape_of(a, b);
  return {t, t->emit(Op::kMul, a.id, b.id, 0.0)};
}

inline TV operator+(const TV& a, double c) { return a + TV::constant(c); }
inline TV operator+(double c, const TV& a) { return a + TV::constant(c); }
inline TV operator-(const TV& a, double c) { return a - TV::constant(c); }
inline TV operator-(double c, const TV& a) { return TV::constant(c) - a; }
inline TV operator*(const TV& a, double c) { return a * TV::constant(c); }
inline TV operator*(double c, const TV& a) { return a * TV::constant(c); }
inline TV operator-(const TV& a) { return a * TV::constant(-1.0); }

inline TV normcdf(const TV& a) {
  if (a.is_const()) return TV::constant(norm_cdf(a.c));
  return {a.tape, a.tape->emit(Op::kNormCdf, a.id, -1, 0.0)};
}

inline TV normpdf(const TV& a) {
  if (a.is_const()) return TV::constant(norm_pdf(a.c));
  return {a.tape, a.tape->emit(Op::kNormPdf, a.id, -1, 0.0)};
}

// Scalar forward replay and reverse sweep over one tape. The workspace is
// reusable across calls; forward recomputes every node value from the leaf
// values currently set, reverse accumulates adjoints from the given seeds.
class ScalarEval {
 public:
  void bind(const Tape& tape);

  void set_leaf(std::int32_t id, double v) { val_[static_cast<std::size_t>(id)] = v; }
  void set_params(span<const double> params);

  void forward();

  double value(std::int32_t id) const { return id < 0 ? 0.0 : val_[static_cast<std::size_t>(id)]; }
  double value(const TV& v) const { return v.is_const() ? v.c : val_[static_cast<std::size_t>(v.id)]; }

  // Seeds are (node, weight) pairs; the sweep computes the gradient of
  // sum_i weight_i * node_i with respect to every node, leaves included.
  void reverse(span<const std::pair<std::int32_t, double>> seeds);

  double adjoint(std::int32_t id) const { return adj_[static_cast<std::size_t>(id)]; }
  span<const double> param_adjoints() const;

 private:
  const Tape* tape_ = nullptr;
  std::vector<double> val_;
  std::vector<double> adj_;
};

// Gradient of a recorded scalar with respect to the tape's parameter block.
// The evaluator must hold a completed forward pass; the tape must be
// finalized. Seeding with `seed` returns d(seed * loss)/d(params).
std::vector<double> grad_params(const Tape& tape, ScalarEval& ev, std::int32_t loss_node,
                                double seed);

}  // namespace ym
