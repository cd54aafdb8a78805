#pragma once

#include <string>
#include <vector>

#include "ym/problems.hpp"
#include "ym/rng.hpp"

namespace ym {

struct HistogramSpec {
  double lo = -2.0;
  double hi = 2.0;
  int bins = 81;
};

// Sampled pushforward values of one gradient component at one spatial point,
// with their histogram. Out-of-range samples are clamped into the edge bins
// so counts always sum to the sample count.
struct EmpiricalMeasure {
  std::vector<double> anchor;
  int component = 0;  // 0: dF/dxi, 1: dF/dtau
  std::vector<double> samples;
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
};

// Pushforward samples of a gradient component at `anchor`, one per latent
// row in `latents` (dim-strided: 1 value per sample in 1D, 2 in 2D).
std::vector<double> pushforward_samples(const JetFn& f, span<const double> anchor, int component,
                                        span<const double> latents, int latent_dim);

EmpiricalMeasure make_measure(span<const double> anchor, int component,
                              std::vector<double> samples, const HistogramSpec& hs);

EmpiricalMeasure pushforward_histogram(const PotentialNetwork& net, span<const double> anchor,
                                       int component, std::size_t count, RngStream& rng,
                                       const HistogramSpec& hs);

// Fraction of samples within `radius` of `center`.
double well_mass(span<const double> samples, double center, double radius);

double mean_of(span<const double> samples);

// Spatial grids of the reconstructed field u and the barycenter components.
// 2D values are x-major: u[ix * ny + iy].
struct FieldGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> u;
  std::vector<double> v1;
  std::vector<double> v2;
};

// Cumulative x-sum of the Gaussian-weighted latent means of dF/dxi over the
// (x, xi) grid, with the written 1/N prefactors (unnormalized weights).
FieldGrid reconstruct_u_1d(const JetFn& f, const Batch& grid);
FieldGrid reconstruct_u_1d(const PotentialNetwork& net, const Batch& grid);

// Barycenter field V(x,y) = (mean dF/dxi, mean dF/dtau) over a latent grid.
// normalized=true divides by the weight mass (probability semantics);
// false keeps the written-loss convention.
FieldGrid barycenter_field(const JetFn& f, span<const double> xs, span<const double> ys,
                           const AxisSpec& latent_axis, bool normalized);
FieldGrid barycenter_field(const PotentialNetwork& net, span<const double> xs,
                           span<const double> ys, const AxisSpec& latent_axis, bool normalized);

enum class PathMode { kStaircaseXY, kStaircaseYX, kStraight };

// Line integration of the barycenter field from the origin, trapezoidal on
// grid nodes; fills u of a copy of `field`.
FieldGrid integrate_field(const FieldGrid& field, PathMode mode);

// Max over nodes of |u via x-then-y minus u via y-then-x|; zero (to
// quadrature accuracy) exactly when the field is a gradient.
double path_discrepancy(const FieldGrid& field);

FieldGrid reconstruct_u_2d(const PotentialNetwork& net, span<const double> xs,
                           span<const double> ys, const AxisSpec& latent_axis, PathMode mode);

// One-dimensional Wasserstein-2 by sorted-quantile pairing (equal counts).
double w2_samples(span<const double> a, span<const double> b);

// W2 between samples and a two-atom measure lo_mass*delta(lo) + (1-lo_mass)*delta(hi).
double w2_two_atoms(span<const double> samples, double lo_atom, double hi_atom, double lo_mass);

// The lambda1 energy component evaluated on a probe grid, decoupled from
// training batches. Follows the written-loss (unnormalized) convention;
// normalized=true rescales the latent weights to a probability mean.
double energy_estimate(const JetFn& f, const ProblemSpec& prob, const Batch& probe,
                       bool normalized = false);
double energy_estimate(const PotentialNetwork& net, const ProblemSpec& prob, const Batch& probe,
                       bool normalized = false);

// Kolmogorov-Smirnov statistic of samples against the standard normal.
double ks_statistic_normal(span<const double> samples);

// Central-difference curl of a barycenter field grid, reported as its RMS.
double curl_rms(const FieldGrid& field);

}  // namespace ym
