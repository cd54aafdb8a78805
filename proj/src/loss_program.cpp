#include "ym/loss_program.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ym {

namespace {

bool finite(double v) { return std::isfinite(v); }

bool all_finite(span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Twin of assemble::boundary_aux<double> that also exposes the per-slice
// means; accumulation order matches the template so values agree bitwise.
struct BoundaryEval {
  std::vector<double> mean_x;  // per y position, mean of dF/dxi (weighted)
  std::vector<double> mean_y;  // per x position, mean of dF/dtau
  double bx = 0.0, by = 0.0;
};

BoundaryEval boundary_eval(const Batch& aux, span<const double> gaux, span<const double> haux,
                           double alpha) {
  const auto& xs = aux.cols[0];
  const auto& ys = aux.cols[1];
  const auto& wxi = aux.mesh_weights[2];
  const auto& wtau = aux.mesh_weights[3];
  const std::size_t nx = xs.size(), ny = ys.size(), r = wxi.size(), tq = wtau.size();
  const double inv_x = 1.0 / static_cast<double>(nx * r * tq);
  const double inv_y = 1.0 / static_cast<double>(ny * r * tq);
  BoundaryEval be;
  be.mean_x.resize(ny);
  be.mean_y.resize(nx);
  for (std::size_t j = 0; j < ny; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t p = 0; p < r; ++p)
        for (std::size_t q = 0; q < tq; ++q)
          m += gaux[((i * ny + j) * r + p) * tq + q] * (wxi[p] * wtau[q]);
    be.mean_x[j] = m * inv_x;
    const double d = be.mean_x[j] - alpha * ys[j];
    be.bx += d * d;
  }
  for (std::size_t i = 0; i < nx; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t p = 0; p < r; ++p)
        for (std::size_t q = 0; q < tq; ++q)
          m += haux[((i * ny + j) * r + p) * tq + q] * (wxi[p] * wtau[q]);
    be.mean_y[i] = m * inv_y;
    const double d = be.mean_y[i] - alpha * xs[i];
    be.by += d * d;
  }
  return be;
}

// d(lambda2 * (bx + by)) / d(aux components). The means are linear in the
// components, so the adjoints are closed-form.
void boundary_seeds(const Batch& aux, const BoundaryEval& be, double alpha, double lambda2,
                    span<double> seed_g, span<double> seed_h) {
  const auto& xs = aux.cols[0];
  const auto& ys = aux.cols[1];
  const auto& wxi = aux.mesh_weights[2];
  const auto& wtau = aux.mesh_weights[3];
  const std::size_t nx = xs.size(), ny = ys.size(), r = wxi.size(), tq = wtau.size();
  const double inv_x = 1.0 / static_cast<double>(nx * r * tq);
  const double inv_y = 1.0 / static_cast<double>(ny * r * tq);
  for (std::size_t j = 0; j < ny; ++j) {
    const double gj = lambda2 * 2.0 * (be.mean_x[j] - alpha * ys[j]) * inv_x;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t p = 0; p < r; ++p)
        for (std::size_t q = 0; q < tq; ++q)
          seed_g[((i * ny + j) * r + p) * tq + q] = gj * (wxi[p] * wtau[q]);
  }
  for (std::size_t i = 0; i < nx; ++i) {
    const double gi = lambda2 * 2.0 * (be.mean_y[i] - alpha * xs[i]) * inv_y;
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t p = 0; p < r; ++p)
        for (std::size_t q = 0; q < tq; ++q)
          seed_h[((i * ny + j) * r + p) * tq + q] = gi * (wxi[p] * wtau[q]);
  }
}

}  // namespace

LossProgram::LossProgram(const NetworkConfig& ncfg, const ProblemSpec& prob, EngineConfig ecfg)
    : prob_(prob), layout_(make_layout(ncfg)), ecfg_(ecfg) {
  YM_CHECK(ncfg.input_dim == input_dim(prob.case_id),
           "LossProgram: network input_dim does not match the case");
  const auto p = static_cast<int>(layout_.total);
  if (prob.case_id == CaseId::kBolza1D) {
    tape_a_.add_param_block(p);
    tape_a_.set_track_mixed(false);
    rec_a_ = record_potential(tape_a_, layout_, /*dir_a=*/1, /*dir_b=*/-1);
    tape_a_.finalize();
    eval_a_.bind(tape_a_, ecfg_);
  } else {
    tape_a_.add_param_block(p);
    tape_a_.set_track_mixed(true);
    rec_a_ = record_potential(tape_a_, layout_, /*dir_a=*/0, /*dir_b=*/3);
    tape_a_.finalize();
    eval_a_.bind(tape_a_, ecfg_);

    tape_b_.add_param_block(p);
    tape_b_.set_track_mixed(true);
    rec_b_ = record_potential(tape_b_, layout_, /*dir_a=*/1, /*dir_b=*/2);
    tape_b_.finalize();
    eval_b_.bind(tape_b_, ecfg_);

    tape_c_.add_param_block(p);
    tape_c_.set_track_mixed(false);
    rec_c_ = record_potential(tape_c_, layout_, /*dir_a=*/2, /*dir_b=*/3);
    tape_c_.finalize();
    eval_c_.bind(tape_c_, ecfg_);

    aux_ = boundary_aux_grid(prob.bq);
  }
}

namespace {
// Mesh weights are folded into the recorded outer tape as constants, so the
// cache key must fingerprint their values, not just the shape.
std::int64_t fingerprint(span<const double> v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return static_cast<std::int64_t>(h);
}
}  // namespace

void LossProgram::ensure_outer_bolza(std::size_t n_x, std::size_t n_xi, span<const double> w_xi) {
  std::vector<std::int64_t> key{1, static_cast<std::int64_t>(n_x), static_cast<std::int64_t>(n_xi),
                                fingerprint(w_xi)};
  if (key == outer_key_) return;
  outer_key_ = key;
  outer_.clear();
  outer_leaves_.clear();
  outer_leaves_.reserve(n_x * n_xi);
  for (std::size_t s = 0; s < n_x * n_xi; ++s)
    outer_leaves_.push_back(TV{&outer_, outer_.add_input()});
  outer_terms_ = assemble::bolza_mesh<TV>(n_x, n_xi, w_xi, outer_leaves_, prob_.weights);
  outer_.finalize();
  outer_eval_.bind(outer_);
}

void LossProgram::ensure_outer_2d(const Batch& batch) {
  const bool tau_two_well = prob_.case_id == CaseId::kFourWell;
  std::vector<std::int64_t> key;
  if (batch.mesh) {
    key = {2,
           static_cast<std::int64_t>(batch.axis_points(0)),
           static_cast<std::int64_t>(batch.axis_points(1)),
           static_cast<std::int64_t>(batch.axis_points(2)),
           static_cast<std::int64_t>(batch.axis_points(3)),
           fingerprint(batch.mesh_weights[2]),
           fingerprint(batch.mesh_weights[3])};
  } else {
    key = {3, static_cast<std::int64_t>(batch.size())};
  }
  if (key == outer_key_) return;
  outer_key_ = key;
  outer_.clear();
  outer_leaves_.clear();
  const std::size_t n = batch.size();
  // Leaf order: dfdxi, dfdtau, mix_x_tau, mix_y_xi, then tuple weights.
  const std::size_t n_leaf = batch.mesh ? 4 * n : 5 * n;
  outer_leaves_.reserve(n_leaf);
  for (std::size_t s = 0; s < n_leaf; ++s)
    outer_leaves_.push_back(TV{&outer_, outer_.add_input()});
  span<const TV> g(outer_leaves_.data(), n);
  span<const TV> h(outer_leaves_.data() + n, n);
  span<const TV> ca(outer_leaves_.data() + 2 * n, n);
  span<const TV> cb(outer_leaves_.data() + 3 * n, n);
  TV energy, curl;
  if (batch.mesh) {
    assemble::energy_curl_mesh<TV>(batch.axis_points(0), batch.axis_points(1),
                                   batch.axis_points(2), batch.axis_points(3),
                                   batch.mesh_weights[2], batch.mesh_weights[3], g, h, ca, cb,
                                   tau_two_well, energy, curl);
  } else {
    span<const TV> w(outer_leaves_.data() + 4 * n, n);
    assemble::energy_curl_tuples<TV, TV>(g, h, ca, cb, w, tau_two_well, energy, curl);
  }
  outer_terms_ = assemble::Terms<TV>{};
  outer_terms_.energy = energy;
  outer_terms_.curl = curl;
  outer_terms_.total = energy * prob_.weights.lambda1 + curl * prob_.weights.lambda3;
  outer_.finalize();
  outer_eval_.bind(outer_);
}

LossBreakdown LossProgram::evaluate(span<const double> params, const Batch& batch,
                                    span<double> grad) {
  YM_CHECK(params.size() == layout_.total, "LossProgram: parameter size mismatch");
  if (!grad.empty()) {
    YM_CHECK(grad.size() == layout_.total, "LossProgram: gradient size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  if (prob_.case_id == CaseId::kBolza1D) return eval_bolza(params, batch, grad, nullptr);
  return eval_2d(params, batch, grad, nullptr);
}

LossBreakdown LossProgram::eval_bolza(span<const double> params, const Batch& batch,
                                      span<double> grad, std::vector<double>* term_grads) {
  YM_CHECK(batch.mesh && batch.dim() == 2, "LossProgram: case 1 needs an (x, xi) grid");
  const std::size_t n = batch.size();
  const std::size_t n_x = batch.axis_points(0);
  const std::size_t n_xi = batch.axis_points(1);

  comps_a_.resize(n);
  const std::int32_t comp_nodes[1] = {rec_a_.da};
  auto fill = [&batch](std::size_t s, span<double> slots) { batch.coords(s, slots); };
  eval_a_.forward(params, n, fill, span<const std::int32_t>(comp_nodes, 1), comps_a_);

  ensure_outer_bolza(n_x, n_xi, batch.mesh_weights[1]);
  for (std::size_t s = 0; s < n; ++s) outer_eval_.set_leaf(outer_.input_slots()[s], comps_a_[s]);
  outer_eval_.forward();

  LossBreakdown out;
  out.energy = outer_eval_.value(outer_terms_.energy);
  out.boundary = {outer_eval_.value(outer_terms_.boundary[0])};
  out.curl = 0.0;
  out.total = outer_eval_.value(outer_terms_.total);

  auto run_reverse = [&](const TV& node, double seed, span<double> g_out) {
    std::pair<std::int32_t, double> s{node.id, seed};
    outer_eval_.reverse(span<const std::pair<std::int32_t, double>>(&s, 1));
    seeds_a_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      seeds_a_[i] = outer_eval_.adjoint(outer_.input_slots()[i]);
    eval_a_.backward(params, n, fill, span<const std::int32_t>(comp_nodes, 1), seeds_a_, g_out);
  };

  if (!grad.empty()) run_reverse(outer_terms_.total, 1.0, grad);
  if (term_grads) {
    term_grads->assign(2 * layout_.total, 0.0);
    run_reverse(outer_terms_.energy, prob_.weights.lambda1,
                span<double>(term_grads->data(), layout_.total));
    run_reverse(outer_terms_.boundary[0], prob_.weights.lambda2,
                span<double>(term_grads->data() + layout_.total, layout_.total));
  }
  return out;
}

LossBreakdown LossProgram::eval_2d(span<const double> params, const Batch& batch,
                                   span<double> grad, std::vector<double>* term_grads) {
  YM_CHECK(batch.dim() == 4, "LossProgram: 2D case needs (x, y, xi, tau) samples");
  const std::size_t n = batch.size();
  const std::size_t na = aux_.size();

  // Components: pass A gives (dF/dtau, d2F/dxdtau), pass B (dF/dxi, d2F/dydxi),
  // pass C the aux-grid first partials.
  comps_a_.resize(2 * n);
  comps_b_.resize(2 * n);
  comps_c_.resize(2 * na);
  const std::int32_t nodes_a[2] = {rec_a_.db, rec_a_.dab};
  const std::int32_t nodes_b[2] = {rec_b_.db, rec_b_.dab};
  const std::int32_t nodes_c[2] = {rec_c_.da, rec_c_.db};
  auto fill = [&batch](std::size_t s, span<double> slots) { batch.coords(s, slots); };
  auto fill_aux = [this](std::size_t s, span<double> slots) { aux_.coords(s, slots); };
  eval_a_.forward(params, n, fill, span<const std::int32_t>(nodes_a, 2), comps_a_);
  eval_b_.forward(params, n, fill, span<const std::int32_t>(nodes_b, 2), comps_b_);
  eval_c_.forward(params, na, fill_aux, span<const std::int32_t>(nodes_c, 2), comps_c_);

  span<const double> dfdtau(comps_a_.data(), n);
  span<const double> mix_x_tau(comps_a_.data() + n, n);
  span<const double> dfdxi(comps_b_.data(), n);
  span<const double> mix_y_xi(comps_b_.data() + n, n);
  span<const double> gaux(comps_c_.data(), na);
  span<const double> haux(comps_c_.data() + na, na);

  ensure_outer_2d(batch);
  const auto& slots = outer_.input_slots();
  for (std::size_t s = 0; s < n; ++s) {
    outer_eval_.set_leaf(slots[s], dfdxi[s]);
    outer_eval_.set_leaf(slots[n + s], dfdtau[s]);
    outer_eval_.set_leaf(slots[2 * n + s], mix_x_tau[s]);
    outer_eval_.set_leaf(slots[3 * n + s], mix_y_xi[s]);
    if (!batch.mesh) outer_eval_.set_leaf(slots[4 * n + s], batch.tuple_weights[s]);
  }
  outer_eval_.forward();

  const double alpha = prob_.case_id == CaseId::kTwoWellAffine ? prob_.alpha : 0.0;
  BoundaryEval be = boundary_eval(aux_, gaux, haux, alpha);

  LossBreakdown out;
  out.energy = outer_eval_.value(outer_terms_.energy);
  out.curl = outer_eval_.value(outer_terms_.curl);
  out.boundary = {be.bx, be.by};
  out.total = prob_.weights.lambda1 * out.energy + prob_.weights.lambda2 * (be.bx + be.by) +
              prob_.weights.lambda3 * out.curl;

  auto seed_outer = [&](const TV& node, double w) {
    std::pair<std::int32_t, double> s{node.id, w};
    outer_eval_.reverse(span<const std::pair<std::int32_t, double>>(&s, 1));
    seeds_a_.assign(2 * n, 0.0);
    seeds_b_.assign(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      seeds_b_[i] = outer_eval_.adjoint(slots[i]);            // dfdxi
      seeds_a_[i] = outer_eval_.adjoint(slots[n + i]);        // dfdtau
      seeds_a_[n + i] = outer_eval_.adjoint(slots[2 * n + i]);  // mix_x_tau
      seeds_b_[n + i] = outer_eval_.adjoint(slots[3 * n + i]);  // mix_y_xi
    }
  };

  auto backward_batch = [&](span<double> g_out) {
    eval_a_.backward(params, n, fill, span<const std::int32_t>(nodes_a, 2), seeds_a_, g_out);
    eval_b_.backward(params, n, fill, span<const std::int32_t>(nodes_b, 2), seeds_b_, g_out);
  };

  if (!grad.empty()) {
    seed_outer(outer_terms_.total, 1.0);
    backward_batch(grad);
    seeds_c_.assign(2 * na, 0.0);
    boundary_seeds(aux_, be, alpha, prob_.weights.lambda2, span<double>(seeds_c_.data(), na),
                   span<double>(seeds_c_.data() + na, na));
    eval_c_.backward(params, na, fill_aux, span<const std::int32_t>(nodes_c, 2), seeds_c_, grad);
  }

  if (term_grads) {
    // Order: energy, boundary, curl.
    term_grads->assign(3 * layout_.total, 0.0);
    seed_outer(outer_terms_.energy, prob_.weights.lambda1);
    backward_batch(span<double>(term_grads->data(), layout_.total));
    seeds_c_.assign(2 * na, 0.0);
    boundary_seeds(aux_, be, alpha, prob_.weights.lambda2, span<double>(seeds_c_.data(), na),
                   span<double>(seeds_c_.data() + na, na));
    eval_c_.backward(params, na, fill_aux, span<const std::int32_t>(nodes_c, 2), seeds_c_,
                     span<double>(term_grads->data() + layout_.total, layout_.total));
    seed_outer(outer_terms_.curl, prob_.weights.lambda3);
    backward_batch(span<double>(term_grads->data() + 2 * layout_.total, layout_.total));
  }
  return out;
}

std::string LossProgram::diagnose(span<const double> params, const Batch& batch) {
  std::vector<double> term_grads;
  LossBreakdown b = prob_.case_id == CaseId::kBolza1D
                        ? eval_bolza(params, batch, {}, &term_grads)
                        : eval_2d(params, batch, {}, &term_grads);
  if (!finite(b.energy)) return "energy";
  for (double v : b.boundary)
    if (!finite(v)) return "boundary";
  if (!finite(b.curl)) return "curl";
  const std::size_t p = layout_.total;
  const char* names[3] = {"energy", "boundary", "curl"};
  const std::size_t n_terms = term_grads.size() / p;
  for (std::size_t t = 0; t < n_terms; ++t)
    if (!all_finite(span<const double>(term_grads.data() + t * p, p))) return names[t];
  return "none";
}

}  // namespace ym
