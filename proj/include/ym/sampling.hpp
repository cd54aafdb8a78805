#pragma once

#include <string>
#include <vector>

#include "ym/common.hpp"
#include "ym/rng.hpp"

namespace ym {

enum class AxisRole { kPhysical, kLatent };

struct AxisSpec {
  AxisRole role = AxisRole::kPhysical;
  std::string label;  // "x", "y", "xi", "tau"
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
};

struct GridSpec {
  std::vector<AxisSpec> axes;
};

// How 2D stochastic batches draw their latent coordinates. The written losses
// carry explicit exp(-|latent|^2/2) factors, so the default draws latents
// uniformly on their range and keeps those weights; the alternative draws
// standard normals and sets the weight to one.
enum class LatentSampling { kWeightedUniform, kImportanceNormal };

std::string to_string(LatentSampling m);
LatentSampling latent_sampling_from_string(const std::string& s);

// A set of evaluation points with Gaussian weights. Two shapes:
//  - mesh: cols[k] holds axis k's nodes; samples are the tensor product,
//    flattened row-major (axis 0 slowest).
//  - tuples: cols[k] holds coordinate k of every sample.
// weight(s) == exp(-|latent coords of s|^2 / 2) always, except importance-
// normal tuples where the factor lives in the sampling density instead.
struct Batch {
  bool mesh = false;
  std::vector<AxisSpec> axes;
  std::vector<std::vector<double>> cols;
  std::vector<double> tuple_weights;              // tuples only
  std::vector<std::vector<double>> mesh_weights;  // mesh: per-axis weight factors
  std::uint64_t rng_position = 0;                 // master-stream draw count after generation

  std::size_t size() const;
  int dim() const { return static_cast<int>(axes.size()); }
  void coords(std::size_t flat, span<double> out) const;
  double weight(std::size_t flat) const;
  std::size_t axis_points(int axis) const { return cols[static_cast<std::size_t>(axis)].size(); }
};

// Tensor-product grid with endpoint inclusion.
Batch uniform_grid(const GridSpec& spec);

// Independent random tuples: physical coordinates uniform on their ranges,
// latent coordinates per the sampling mode.
Batch stochastic_meshgrid(const GridSpec& spec, std::size_t batch_size, RngStream& rng,
                          LatentSampling mode);

// Random sub-mesh of a tensor grid: keeps `keep[k]` sorted distinct nodes per
// axis (0 keeps the axis whole). Stays a mesh, so slice structure survives.
Batch subsample_mesh(const Batch& mesh, span<const int> keep, RngStream& rng);

// I.i.d. standard normal draws for pushforward histograms; flat, dim-strided.
std::vector<double> gaussian_samples(std::size_t count, int dim, RngStream& rng);

// Trapezoid mass of exp(-x^2/2) over a latent axis; the self-test compares it
// against sqrt(2 pi) (Phi(hi) - Phi(lo)).
double gaussian_axis_mass(const AxisSpec& axis);

}  // namespace ym
