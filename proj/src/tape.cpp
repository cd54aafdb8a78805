#include "ym/tape.hpp"

#include <algorithm>

namespace ym {

void ScalarEval::bind(const Tape& tape) {
  tape_ = &tape;
  val_.assign(tape.size(), 0.0);
  adj_.assign(tape.size(), 0.0);
}

void ScalarEval::set_params(span<const double> params) {
  YM_CHECK(tape_ && static_cast<std::int32_t>(params.size()) == tape_->param_count(),
           "ScalarEval: parameter count mismatch");
  std::copy(params.begin(), params.end(), val_.begin());
}

void ScalarEval::forward() {
  const auto& nodes = tape_->nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TapeNode& n = nodes[i];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        val_[i] = val_[static_cast<std::size_t>(n.a)] + val_[static_cast<std::size_t>(n.b)];
        break;
      case Op::kSub:
        val_[i] = val_[static_cast<std::size_t>(n.a)] - val_[static_cast<std::size_t>(n.b)];
        break;
      case Op::kMul:
        val_[i] = val_[static_cast<std::size_t>(n.a)] * val_[static_cast<std::size_t>(n.b)];
        break;
      case Op::kAddC:
        val_[i] = val_[static_cast<std::size_t>(n.a)] + n.c;
        break;
      case Op::kMulC:
        val_[i] = val_[static_cast<std::size_t>(n.a)] * n.c;
        break;
      case Op::kNormCdf:
        val_[i] = norm_cdf(val_[static_cast<std::size_t>(n.a)]);
        break;
      case Op::kNormPdf:
        val_[i] = norm_pdf(val_[static_cast<std::size_t>(n.a)]);
        break;
    }
  }
}

void ScalarEval::reverse(span<const std::pair<std::int32_t, double>> seeds) {
  std::fill(adj_.begin(), adj_.end(), 0.0);
  for (const auto& [id, w] : seeds) {
    if (id >= 0) adj_[static_cast<std::size_t>(id)] += w;
  }
  const auto& nodes = tape_->nodes();
  for (std::size_t ip1 = nodes.size(); ip1 > 0; --ip1) {
    const std::size_t i = ip1 - 1;
    const double g = adj_[i];
    if (g == 0.0) continue;
    const TapeNode& n = nodes[i];
    const auto a = static_cast<std::size_t>(n.a);
    const auto b = static_cast<std::size_t>(n.b);
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        adj_[a] += g;
        adj_[b] += g;
        break;
      case Op::kSub:
        adj_[a] += g;
        adj_[b] -= g;
        break;
      case Op::kMul:
        adj_[a] += g * val_[b];
        adj_[b] += g * val_[a];
        break;
      case Op::kAddC:
        adj_[a] += g;
        break;
      case Op::kMulC:
        adj_[a] += g * n.c;
        break;
      case Op::kNormCdf:
        adj_[a] += g * norm_pdf(val_[a]);
        break;
      case Op::kNormPdf:
        // d phi(x)/dx = -x phi(x); phi(x) is this node's own forward value.
        adj_[a] += g * (-val_[a] * val_[i]);
        break;
    }
  }
}

span<const double> ScalarEval::param_adjoints() const {
  return {adj_.data(), static_cast<std::size_t>(tape_->param_count())};
}

std::vector<double> grad_params(const Tape& tape, ScalarEval& ev, std::int32_t loss_node,
                                double seed) {
  YM_CHECK(tape.finalized(), "grad_params: tape not finalized");
  YM_CHECK(loss_node >= 0 && static_cast<std::size_t>(loss_node) < tape.size(),
           "grad_params: loss node out of range");
  std::pair<std::int32_t, double> s{loss_node, seed};
  ev.reverse(span<const std::pair<std::int32_t, double>>(&s, 1));
  auto pa = ev.param_adjoints();
  return {pa.begin(), pa.end()};
}

}  // namespace ym
