#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ym/common.hpp"
#include "ym/network.hpp"
#include "ym/sampling.hpp"

namespace ym {

enum class CaseId { kBolza1D, kQuasi1D, kFourWell, kTwoWellAffine };

std::string to_string(CaseId c);
CaseId case_from_string(const std::string& s);
int input_dim(CaseId c);

struct LossWeights {
  double lambda1 = 1.0;  // energy
  double lambda2 = 10.0; // boundary penalties
  double lambda3 = 1.0;  // curl penalty
};

// Boundary penalties in the 2D cases are always taken on a deterministic
// auxiliary tensor grid (boundary positions x integration points x latent
// grid), independent of the stochastic energy batch, whose slices would
// otherwise be degenerate.
struct BoundaryQuad {
  int boundary_points = 21;  // positions along each penalized boundary, also
                             // the integration points across the domain
  int latent_points = 9;     // latent nodes per axis
  double latent_lo = -2.0;
  double latent_hi = 2.0;
};

struct ProblemSpec {
  CaseId case_id = CaseId::kBolza1D;
  double alpha = 1e-2;  // affine boundary slope, two-well-affine only
  LossWeights weights;
  BoundaryQuad bq;
};

struct LossBreakdown {
  double energy = 0.0;
  std::vector<double> boundary;
  double curl = 0.0;
  double total = 0.0;

  double boundary_sum() const {
    double s = 0.0;
    for (double b : boundary) s += b;
    return s;
  }
};

// Jet supplier: the network, or a synthetic surrogate in tests.
using JetFn = std::function<Jet2d(span<const double> point, int dir_a, int dir_b)>;
JetFn jet_fn(const PotentialNetwork& net);

// The auxiliary grid the 2D boundary penalties are evaluated on:
// axes (x, y, xi, tau), physical nodes on [0,1], latent nodes per `bq`.
Batch boundary_aux_grid(const BoundaryQuad& bq);

namespace assemble {

// Loss assembly shared by the plain (T=double) and recorded (T=TV) paths.
// One template per formula keeps both paths bit-identical in op order.

template <class T>
struct Terms {
  T energy{};
  std::vector<T> boundary;
  T curl{};
  T total{};
};

// 1D double-well energy with the nested-cumulative-sum u^2 term and the
// squared full-domain weighted mean as the right-boundary penalty. The
// written 1/N prefactors are applied verbatim; grid spacing is absorbed
// into the penalty weights.
template <class T>
Terms<T> bolza_mesh(std::size_t n_x, std::size_t n_xi, span<const double> w_xi,
                    span<const T> dfdxi, const LossWeights& lw) {
  const double inv_n = 1.0 / static_cast<double>(n_x);
  const double inv_m = 1.0 / static_cast<double>(n_xi);

  T well{};
  std::vector<T> colmean(n_x);
  for (std::size_t i = 0; i < n_x; ++i) {
    T row_e{};
    T row_m{};
    for (std::size_t k = 0; k < n_xi; ++k) {
      const T& g = dfdxi[i * n_xi + k];
      T q = g * g - 1.0;
      row_e = row_e + (q * q) * w_xi[k];
      row_m = row_m + g * w_xi[k];
    }
    well = well + row_e * inv_m;
    colmean[i] = row_m * inv_m;
  }
  well = well * inv_n;

  T run{};
  T u2{};
  for (std::size_t i = 0; i < n_x; ++i) {
    run = run + colmean[i];
    T s = run * inv_n;
    u2 = u2 + s * s;
  }
  u2 = u2 * inv_n;

  T fullmean{};
  for (std::size_t i = 0; i < n_x; ++i) fullmean = fullmean + colmean[i];
  fullmean = fullmean * inv_n;
  T bterm = fullmean * fullmean;

  Terms<T> t;
  t.energy = well + u2;
  t.boundary = {bterm};
  t.total = t.energy * lw.lambda1 + bterm * lw.lambda2;
  return t;
}

// 2D energy + curl on a tensor mesh (x, y, xi, tau), flattened with tau
// fastest. tau_two_well selects ((dF/dtau)^2-1)^2 instead of (dF/dtau)^2.
template <class T>
void energy_curl_mesh(std::size_t n_x, std::size_t n_y, std::size_t n_xi, std::size_t n_tau,
                      span<const double> w_xi, span<const double> w_tau, span<const T> dfdxi,
                      span<const T> dfdtau, span<const T> mix_x_tau, span<const T> mix_y_xi,
                      bool tau_two_well, T& energy_out, T& curl_out) {
  const double inv_rt = 1.0 / static_cast<double>(n_xi * n_tau);
  const double inv_nm = 1.0 / static_cast<double>(n_x * n_y);
  T energy{};
  T curl{};
  for (std::size_t i = 0; i < n_x; ++i) {
    for (std::size_t j = 0; j < n_y; ++j) {
      T acc_e{};
      T acc_a{};
      T acc_b{};
      for (std::size_t p = 0; p < n_xi; ++p) {
        for (std::size_t q = 0; q < n_tau; ++q) {
          const std::size_t s = ((i * n_y + j) * n_xi + p) * n_tau + q;
          const double w = w_xi[p] * w_tau[q];
          T gq = dfdxi[s] * dfdxi[s] - 1.0;
          T e = gq * gq;
          if (tau_two_well) {
            T hq = dfdtau[s] * dfdtau[s] - 1.0;
            e = e + hq * hq;
          } else {
            e = e + dfdtau[s] * dfdtau[s];
          }
          acc_e = acc_e + e * w;
          acc_a = acc_a + mix_x_tau[s] * w;
          acc_b = acc_b + mix_y_xi[s] * w;
        }
      }
      energy = energy + acc_e * inv_rt;
      T d = acc_a * inv_rt - acc_b * inv_rt;
      curl = curl + d * d;
    }
  }
  energy_out = energy * inv_nm;
  curl_out = curl * inv_nm;
}

// 2D energy + curl over independent tuples. Each sample carries one latent
// draw, so the per-point latent mean in the curl term reduces to that
// sample's weighted value. W is double in the plain path and TV (leaf) in
// the recorded one, since tuple weights change every batch.
template <class T, class W>
void energy_curl_tuples(span<const T> dfdxi, span<const T> dfdtau, span<const T> mix_x_tau,
                        span<const T> mix_y_xi, span<const W> w, bool tau_two_well, T& energy_out,
                        T& curl_out) {
  const std::size_t n = dfdxi.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  T energy{};
  T curl{};
  for (std::size_t s = 0; s < n; ++s) {
    T gq = dfdxi[s] * dfdxi[s] - 1.0;
    T e = gq * gq;
    if (tau_two_well) {
      T hq = dfdtau[s] * dfdtau[s] - 1.0;
      e = e + hq * hq;
    } else {
      e = e + dfdtau[s] * dfdtau[s];
    }
    energy = energy + e * w[s];
    T d = mix_x_tau[s] * w[s] - mix_y_xi[s] * w[s];
    curl = curl + d * d;
  }
  energy_out = energy * inv_n;
  curl_out = curl * inv_n;
}

// Boundary penalties on the auxiliary grid (x, y, xi, tau), tau fastest.
// First term: per y position, the (x, latent)-mean of dF/dxi against
// alpha*y.  Second: per x position, the (y, latent)-mean of dF/dtau against
// alpha*x. Sums over boundary positions are unnormalized, as written.
template <class T>
std::pair<T, T> boundary_aux(span<const double> xs, span<const double> ys,
                             span<const double> w_xi, span<const double> w_tau,
                             span<const T> dfdxi, span<const T> dfdtau, double alpha) {
  const std::size_t nx = xs.size(), ny = ys.size();
  const std::size_t r = w_xi.size(), tq = w_tau.size();
  const double inv_x = 1.0 / static_cast<double>(nx * r * tq);
  const double inv_y = 1.0 / static_cast<double>(ny * r * tq);
  T bx{};
  for (std::size_t j = 0; j < ny; ++j) {
    T m{};
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t p = 0; p < r; ++p)
        for (std::size_t q = 0; q < tq; ++q)
          m = m + dfdxi[((i * ny + j) * r + p) * tq + q] * (w_xi[p] * w_tau[q]);
    T d = m * inv_x - alpha * ys[j];
    bx = bx + d * d;
  }
  T by{};
  for (std::size_t i = 0; i < nx; ++i) {
    T m{};
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t p = 0; p < r; ++p)
        for (std::size_t q = 0; q < tq; ++q)
          m = m + dfdtau[((i * ny + j) * r + p) * tq + q] * (w_xi[p] * w_tau[q]);
    T d = m * inv_y - alpha * xs[i];
    by = by + d * d;
  }
  return {bx, by};
}

}  // namespace assemble

// Per-sample jet components of F over a batch, computed with plain jets.
struct PlainComponents {
  std::vector<double> dfdxi;
  std::vector<double> dfdtau;
  std::vector<double> mix_x_tau;
  std::vector<double> mix_y_xi;
};
PlainComponents components_2d(const JetFn& f, const Batch& batch);
std::vector<double> components_bolza(const JetFn& f, const Batch& batch);

// The four losses of the artifact. Each returns the per-term breakdown with
// total = lambda1*energy + lambda2*sum(boundary) + lambda3*curl exactly.
LossBreakdown loss_bolza_1d(const JetFn& f, const Batch& grid, const LossWeights& lw);
LossBreakdown loss_bolza_1d(const PotentialNetwork& net, const Batch& grid, const LossWeights& lw);
LossBreakdown loss_quasi_1d(const JetFn& f, const Batch& batch, const LossWeights& lw,
                            const BoundaryQuad& bq);
LossBreakdown loss_quasi_1d(const PotentialNetwork& net, const Batch& batch,
                            const LossWeights& lw, const BoundaryQuad& bq);
LossBreakdown loss_four_well(const JetFn& f, const Batch& batch, const LossWeights& lw,
                             const BoundaryQuad& bq);
LossBreakdown loss_four_well(const PotentialNetwork& net, const Batch& batch,
                             const LossWeights& lw, const BoundaryQuad& bq);
LossBreakdown loss_two_well_affine(const JetFn& f, const Batch& batch, const LossWeights& lw,
                                   const BoundaryQuad& bq, double alpha);
LossBreakdown loss_two_well_affine(const PotentialNetwork& net, const Batch& batch,
                                   const LossWeights& lw, const BoundaryQuad& bq, double alpha);

// Shared curl penalty (unweighted), as used by all three 2D losses.
double curl_penalty(const JetFn& f, const Batch& batch);
double curl_penalty(const PotentialNetwork& net, const Batch& batch);

LossBreakdown loss_for_case(const ProblemSpec& prob, const PotentialNetwork& net,
                            const Batch& batch);

}  // namespace ym
