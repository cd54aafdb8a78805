#include "ym/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ym/math.hpp"

namespace ym {

void BatchEvaluator::bind(const Tape& tape, EngineConfig cfg) {
  YM_CHECK(tape.finalized(), "BatchEvaluator: tape must be finalized");
  tape_ = &tape;
  cfg_ = cfg;
  threads_ = cfg.threads > 0 ? cfg.threads
                             : std::max(1u, std::thread::hardware_concurrency());
}

void BatchEvaluator::forward_chunk(Workspace& ws, span<const double> params, std::size_t begin,
                                   std::size_t count, const InputFn& fill) const {
  const std::size_t L = static_cast<std::size_t>(cfg_.lane_block);
  const auto& nodes = tape_->nodes();
  const std::size_t n_nodes = nodes.size();
  ws.val.resize(n_nodes * L);
  double* val = ws.val.data();

  const auto P = static_cast<std::size_t>(tape_->param_count());
  for (std::size_t p = 0; p < P; ++p) std::fill(val + p * L, val + p * L + L, params[p]);

  const auto& slots = tape_->input_slots();
  double tmp[8];
  YM_CHECK(slots.size() <= 8, "BatchEvaluator: too many input slots");
  for (std::size_t l = 0; l < L; ++l) {
    // Lanes past the batch replicate the last sample; their seeds stay zero.
    const std::size_t s = std::min(begin + l, begin + count - 1);
    fill(s, span<double>(tmp, slots.size()));
    for (std::size_t k = 0; k < slots.size(); ++k)
      val[static_cast<std::size_t>(slots[k]) * L + l] = tmp[k];
  }

  for (std::size_t i = P; i < n_nodes; ++i) {
    const TapeNode& n = nodes[i];
    double* out = val + i * L;
    const double* a = val + static_cast<std::size_t>(n.a) * L;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd: {
        const double* b = val + static_cast<std::size_t>(n.b) * L;
        for (std::size_t l = 0; l < L; ++l) out[l] = a[l] + b[l];
        break;
      }
      case Op::kSub: {
        const double* b = val + static_cast<std::size_t>(n.b) * L;
        for (std::size_t l = 0; l < L; ++l) out[l] = a[l] - b[l];
        break;
      }
      case Op::kMul: {
        const double* b = val + static_cast<std::size_t>(n.b) * L;
        for (std::size_t l = 0; l < L; ++l) out[l] = a[l] * b[l];
        break;
      }
      case Op::kAddC:
        for (std::size_t l = 0; l < L; ++l) out[l] = a[l] + n.c;
        break;
      case Op::kMulC:
        for (std::size_t l = 0; l < L; ++l) out[l] = a[l] * n.c;
        break;
      case Op::kNormCdf:
        for (std::size_t l = 0; l < L; ++l) out[l] = norm_cdf(a[l]);
        break;
      case Op::kNormPdf:
        for (std::size_t l = 0; l < L; ++l) out[l] = norm_pdf(a[l]);
        break;
    }
  }
}

void BatchEvaluator::run_chunks(std::size_t n_samples,
                                const std::function<void(Workspace&, std::size_t)>& body) {
  const std::size_t L = static_cast<std::size_t>(cfg_.lane_block);
  const std::size_t n_chunks = (n_samples + L - 1) / L;
  const int workers = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(threads_), n_chunks));
  if (workers <= 1) {
    Workspace ws;
    for (std::size_t c = 0; c < n_chunks; ++c) body(ws, c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      Workspace ws;
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) break;
        body(ws, c);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void BatchEvaluator::forward(span<const double> params, std::size_t n_samples, const InputFn& fill,
                             span<const std::int32_t> comp_nodes, span<double> out) {
  YM_CHECK(out.size() >= comp_nodes.size() * n_samples, "BatchEvaluator::forward: output too small");
  const std::size_t L = static_cast<std::size_t>(cfg_.lane_block);
  run_chunks(n_samples, [&](Workspace& ws, std::size_t chunk) {
    const std::size_t begin = chunk * L;
    const std::size_t count = std::min(L, n_samples - begin);
    forward_chunk(ws, params, begin, count, fill);
    for (std::size_t c = 0; c < comp_nodes.size(); ++c) {
      const double* row = ws.val.data() + static_cast<std::size_t>(comp_nodes[c]) * L;
      double* dst = out.data() + c * n_samples + begin;
      std::copy(row, row + count, dst);
    }
  });
}

void BatchEvaluator::backward(span<const double> params, std::size_t n_samples,
                              const InputFn& fill, span<const std::int32_t> comp_nodes,
                              span<const double> seeds, span<double> grad) {
  const auto P = static_cast<std::size_t>(tape_->param_count());
  YM_CHECK(grad.size() == P, "BatchEvaluator::backward: gradient size mismatch");
  const std::size_t L = static_cast<std::size_t>(cfg_.lane_block);
  const std::size_t n_chunks = (n_samples + L - 1) / L;
  std::vector<double> chunk_grads(n_chunks * P, 0.0);

  const auto& nodes = tape_->nodes();
  const std::size_t n_nodes = nodes.size();

  run_chunks(n_samples, [&](Workspace& ws, std::size_t chunk) {
    const std::size_t begin = chunk * L;
    const std::size_t count = std::min(L, n_samples - begin);
    forward_chunk(ws, params, begin, count, fill);

    ws.adj.assign(n_nodes * L, 0.0);
    double* adj = ws.adj.data();
    const double* val = ws.val.data();
    for (std::size_t c = 0; c < comp_nodes.size(); ++c) {
      const std::int32_t id = comp_nodes[c];
      if (id < 0) continue;
      double* row = adj + static_cast<std::size_t>(id) * L;
      const double* src = seeds.data() + c * n_samples + begin;
      for (std::size_t l = 0; l < count; ++l) row[l] += src[l];
    }

    for (std::size_t ip1 = n_nodes; ip1 > P; --ip1) {
      const std::size_t i = ip1 - 1;
      const TapeNode& n = nodes[i];
      if (n.op == Op::kLeaf) continue;
      const double* g = adj + i * L;
      double* aa = adj + static_cast<std::size_t>(n.a) * L;
      switch (n.op) {
        case Op::kLeaf:
          break;
        case Op::kAdd: {
          double* ab = adj + static_cast<std::size_t>(n.b) * L;
          for (std::size_t l = 0; l < L; ++l) {
            aa[l] += g[l];
            ab[l] += g[l];
          }
          break;
        }
        case Op::kSub: {
          double* ab = adj + static_cast<std::size_t>(n.b) * L;
          for (std::size_t l = 0; l < L; ++l) {
            aa[l] += g[l];
            ab[l] -= g[l];
          }
          break;
        }
        case Op::kMul: {
          double* ab = adj + static_cast<std::size_t>(n.b) * L;
          const double* va = val + static_cast<std::size_t>(n.a) * L;
          const double* vb = val + static_cast<std::size_t>(n.b) * L;
          for (std::size_t l = 0; l < L; ++l) {
            aa[l] += g[l] * vb[l];
            ab[l] += g[l] * va[l];
          }
          break;
        }
        case Op::kAddC:
          for (std::size_t l = 0; l < L; ++l) aa[l] += g[l];
          break;
        case Op::kMulC:
          for (std::size_t l = 0; l < L; ++l) aa[l] += g[l] * n.c;
          break;
        case Op::kNormCdf: {
          const double* va = val + static_cast<std::size_t>(n.a) * L;
          for (std::size_t l = 0; l < L; ++l) aa[l] += g[l] * norm_pdf(va[l]);
          break;
        }
        case Op::kNormPdf: {
          const double* va = val + static_cast<std::size_t>(n.a) * L;
          const double* vi = val + i * L;
          for (std::size_t l = 0; l < L; ++l) aa[l] += g[l] * (-va[l] * vi[l]);
          break;
        }
      }
    }

    double* cg = chunk_grads.data() + chunk * P;
    for (std::size_t p = 0; p < P; ++p) {
      const double* row = adj + p * L;
      double acc = 0.0;
      for (std::size_t l = 0; l < L; ++l) acc += row[l];
      cg[p] = acc;
    }
  });

  // Chunk-ordered reduction keeps the sum independent of thread scheduling.
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const double* cg = chunk_grads.data() + c * P;
    for (std::size_t p = 0; p < P; ++p) grad[p] += cg[p];
  }
}

}  // namespace ym
