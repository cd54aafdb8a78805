#include "ym/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ym {

std::string to_string(LatentSampling m) {
  return m == LatentSampling::kWeightedUniform ? "weighted-uniform" : "importance-normal";
}

LatentSampling latent_sampling_from_string(const std::string& s) {
  if (s == "weighted-uniform") return LatentSampling::kWeightedUniform;
  if (s == "importance-normal") return LatentSampling::kImportanceNormal;
  throw invalid_input("unknown latent sampling mode: " + s);
}

std::size_t Batch::size() const {
  if (cols.empty()) return 0;
  if (!mesh) return cols[0].size();
  std::size_t n = 1;
  for (const auto& c : cols) n *= c.size();
  return n;
}

void Batch::coords(std::size_t flat, span<double> out) const {
  if (!mesh) {
    for (std::size_t k = 0; k < cols.size(); ++k) out[k] = cols[k][flat];
    return;
  }
  for (std::size_t k = cols.size(); k-- > 0;) {
    const std::size_t nk = cols[k].size();
    out[k] = cols[k][flat % nk];
    flat /= nk;
  }
}

double Batch::weight(std::size_t flat) const {
  if (!mesh) return tuple_weights[flat];
  double w = 1.0;
  for (std::size_t k = cols.size(); k-- > 0;) {
    const std::size_t nk = cols[k].size();
    if (!mesh_weights[k].empty()) w *= mesh_weights[k][flat % nk];
    flat /= nk;
  }
  return w;
}

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    v[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

std::vector<double> latent_weights(const std::vector<double>& nodes) {
  std::vector<double> w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) w[i] = std::exp(-0.5 * nodes[i] * nodes[i]);
  return w;
}

}  // namespace

Batch uniform_grid(const GridSpec& spec) {
  Batch b;
  b.mesh = true;
  b.axes = spec.axes;
  for (const auto& ax : spec.axes) {
    YM_CHECK(ax.count >= 2, "uniform_grid: need at least 2 points per axis");
    YM_CHECK(std::isfinite(ax.lo) && std::isfinite(ax.hi) && ax.lo < ax.hi,
             "uniform_grid: bad axis range");
    b.cols.push_back(linspace(ax.lo, ax.hi, ax.count));
    b.mesh_weights.push_back(ax.role == AxisRole::kLatent ? latent_weights(b.cols.back())
                                                          : std::vector<double>{});
  }
  return b;
}

Batch stochastic_meshgrid(const GridSpec& spec, std::size_t batch_size, RngStream& rng,
                          LatentSampling mode) {
  YM_CHECK(batch_size >= 1, "stochastic_meshgrid: batch_size must be >= 1");
  Batch b;
  b.mesh = false;
  b.axes = spec.axes;
  b.cols.assign(spec.axes.size(), {});
  for (auto& c : b.cols) c.reserve(batch_size);
  b.tuple_weights.reserve(batch_size);
  for (std::size_t s = 0; s < batch_size; ++s) {
    double w = 1.0;
    for (std::size_t k = 0; k < spec.axes.size(); ++k) {
      const AxisSpec& ax = spec.axes[k];
      double v;
      if (ax.role == AxisRole::kPhysical) {
        v = rng.uniform(ax.lo, ax.hi);
      } else if (mode == LatentSampling::kWeightedUniform) {
        v = rng.uniform(ax.lo, ax.hi);
        w *= std::exp(-0.5 * v * v);
      } else {
        v = rng.normal();
      }
      b.cols[k].push_back(v);
    }
    b.tuple_weights.push_back(w);
  }
  b.rng_position = rng.draws();
  return b;
}

Batch subsample_mesh(const Batch& mesh, span<const int> keep, RngStream& rng) {
  YM_CHECK(mesh.mesh, "subsample_mesh: input must be a mesh");
  YM_CHECK(keep.size() == mesh.cols.size(), "subsample_mesh: keep size mismatch");
  Batch b = mesh;
  for (std::size_t k = 0; k < mesh.cols.size(); ++k) {
    const int want = keep[k];
    const auto have = static_cast<int>(mesh.cols[k].size());
    if (want <= 0 || want >= have) continue;
    // Floyd-style distinct sampling, then sort to keep nodes ascending.
    std::vector<int> idx;
    std::vector<bool> used(static_cast<std::size_t>(have), false);
    for (int j = have - want; j < have; ++j) {
      int t = static_cast<int>(rng.uniform(0.0, static_cast<double>(j + 1)));
      t = std::min(t, j);
      if (used[static_cast<std::size_t>(t)]) t = j;
      used[static_cast<std::size_t>(t)] = true;
      idx.push_back(t);
    }
    std::sort(idx.begin(), idx.end());
    std::vector<double> nodes, weights;
    for (int i : idx) {
      nodes.push_back(mesh.cols[k][static_cast<std::size_t>(i)]);
      if (!mesh.mesh_weights[k].empty())
        weights.push_back(mesh.mesh_weights[k][static_cast<std::size_t>(i)]);
    }
    b.cols[k] = std::move(nodes);
    b.mesh_weights[k] = std::move(weights);
  }
  b.rng_position = rng.draws();
  return b;
}

std::vector<double> gaussian_samples(std::size_t count, int dim, RngStream& rng) {
  YM_CHECK(count >= 1, "gaussian_samples: count must be >= 1");
  YM_CHECK(dim == 1 || dim == 2, "gaussian_samples: dim must be 1 or 2");
  std::vector<double> out(count * static_cast<std::size_t>(dim));
  for (double& v : out) v = rng.normal();
  return out;
}

double gaussian_axis_mass(const AxisSpec& axis) {
  const double h = (axis.hi - axis.lo) / static_cast<double>(axis.count - 1);
  double sum = 0.0;
  for (int i = 0; i < axis.count; ++i) {
    const double x = axis.lo + h * static_cast<double>(i);
    const double w = std::exp(-0.5 * x * x);
    sum += (i == 0 || i == axis.count - 1) ? 0.5 * w : w;
  }
  return sum * h;
}

}  // namespace ym
