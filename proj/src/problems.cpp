#include "ym/problems.hpp"

#include <cmath>

namespace ym {

std::string to_string(CaseId c) {
  switch (c) {
    case CaseId::kBolza1D: return "bolza-1d";
    case CaseId::kQuasi1D: return "quasi-1d";
    case CaseId::kFourWell: return "four-well";
    case CaseId::kTwoWellAffine: return "two-well-affine";
  }
  return "?";
}

CaseId case_from_string(const std::string& s) {
  if (s == "bolza-1d") return CaseId::kBolza1D;
  if (s == "quasi-1d") return CaseId::kQuasi1D;
  if (s == "four-well") return CaseId::kFourWell;
  if (s == "two-well-affine") return CaseId::kTwoWellAffine;
  throw invalid_input("unknown case: " + s);
}

int input_dim(CaseId c) { return c == CaseId::kBolza1D ? 2 : 4; }

JetFn jet_fn(const PotentialNetwork& net) {
  return [&net](span<const double> pt, int a, int b) { return eval_jet(net, pt, a, b); };
}

Batch boundary_aux_grid(const BoundaryQuad& bq) {
  GridSpec gs;
  gs.axes = {
      {AxisRole::kPhysical, "x", 0.0, 1.0, bq.boundary_points},
      {AxisRole::kPhysical, "y", 0.0, 1.0, bq.boundary_points},
      {AxisRole::kLatent, "xi", bq.latent_lo, bq.latent_hi, bq.latent_points},
      {AxisRole::kLatent, "tau", bq.latent_lo, bq.latent_hi, bq.latent_points},
  };
  return uniform_grid(gs);
}

std::vector<double> components_bolza(const JetFn& f, const Batch& batch) {
  const std::size_t n = batch.size();
  std::vector<double> g(n);
  double pt[2];
  for (std::size_t s = 0; s < n; ++s) {
    batch.coords(s, span<double>(pt, 2));
    g[s] = f(span<const double>(pt, 2), 1, -1).da;
  }
  return g;
}

PlainComponents components_2d(const JetFn& f, const Batch& batch) {
  const std::size_t n = batch.size();
  PlainComponents c;
  c.dfdxi.resize(n);
  c.dfdtau.resize(n);
  c.mix_x_tau.resize(n);
  c.mix_y_xi.resize(n);
  double pt[4];
  for (std::size_t s = 0; s < n; ++s) {
    batch.coords(s, span<double>(pt, 4));
    // Pass A tracks (x, tau): dF/dtau and d2F/dx dtau.
    Jet2d ja = f(span<const double>(pt, 4), 0, 3);
    // Pass B tracks (y, xi): dF/dxi and d2F/dy dxi.
    Jet2d jb = f(span<const double>(pt, 4), 1, 2);
    c.dfdtau[s] = ja.db;
    c.mix_x_tau[s] = ja.dab;
    c.dfdxi[s] = jb.db;
    c.mix_y_xi[s] = jb.dab;
  }
  return c;
}

namespace {

// Aux-grid first partials of F: one jet pass tracking (xi, tau).
void aux_components(const JetFn& f, const Batch& aux, std::vector<double>& dfdxi,
                    std::vector<double>& dfdtau) {
  const std::size_t n = aux.size();
  dfdxi.resize(n);
  dfdtau.resize(n);
  double pt[4];
  for (std::size_t s = 0; s < n; ++s) {
    aux.coords(s, span<double>(pt, 4));
    Jet2d j = f(span<const double>(pt, 4), 2, 3);
    dfdxi[s] = j.da;
    dfdtau[s] = j.db;
  }
}

LossBreakdown loss_2d(const JetFn& f, const Batch& batch, const LossWeights& lw,
                      const BoundaryQuad& bq, bool tau_two_well, double alpha) {
  YM_CHECK(batch.dim() == 4, "2D loss: batch must have 4 coordinates");
  PlainComponents c = components_2d(f, batch);

  double energy = 0.0, curl = 0.0;
  if (batch.mesh) {
    assemble::energy_curl_mesh<double>(
        batch.axis_points(0), batch.axis_points(1), batch.axis_points(2), batch.axis_points(3),
        batch.mesh_weights[2], batch.mesh_weights[3], c.dfdxi, c.dfdtau, c.mix_x_tau, c.mix_y_xi,
        tau_two_well, energy, curl);
  } else {
    assemble::energy_curl_tuples<double, double>(c.dfdxi, c.dfdtau, c.mix_x_tau, c.mix_y_xi,
                                                 batch.tuple_weights, tau_two_well, energy, curl);
  }

  Batch aux = boundary_aux_grid(bq);
  std::vector<double> gaux, haux;
  aux_components(f, aux, gaux, haux);
  auto [bx, by] = assemble::boundary_aux<double>(aux.cols[0], aux.cols[1], aux.mesh_weights[2],
                                                 aux.mesh_weights[3], gaux, haux, alpha);

  LossBreakdown out;
  out.energy = energy;
  out.boundary = {bx, by};
  out.curl = curl;
  out.total = lw.lambda1 * energy + lw.lambda2 * (bx + by) + lw.lambda3 * curl;
  return out;
}

}  // namespace

LossBreakdown loss_bolza_1d(const JetFn& f, const Batch& grid, const LossWeights& lw) {
  YM_CHECK(grid.dim() == 2, "loss_bolza_1d: batch must have coordinates (x, xi)");
  YM_CHECK(grid.mesh, "loss_bolza_1d: needs a tensor grid (the u^2 term is a cumulative sum in x)");
  std::vector<double> g = components_bolza(f, grid);
  auto terms = assemble::bolza_mesh<double>(grid.axis_points(0), grid.axis_points(1),
                                            grid.mesh_weights[1], g, lw);
  LossBreakdown out;
  out.energy = terms.energy;
  out.boundary = {terms.boundary[0]};
  out.curl = 0.0;
  out.total = terms.total;
  return out;
}

LossBreakdown loss_bolza_1d(const PotentialNetwork& net, const Batch& grid,
                            const LossWeights& lw) {
  YM_CHECK(net.config.input_dim == 2, "loss_bolza_1d: network input_dim must be 2");
  return loss_bolza_1d(jet_fn(net), grid, lw);
}

LossBreakdown loss_quasi_1d(const JetFn& f, const Batch& batch, const LossWeights& lw,
                            const BoundaryQuad& bq) {
  return loss_2d(f, batch, lw, bq, /*tau_two_well=*/false, /*alpha=*/0.0);
}

LossBreakdown loss_quasi_1d(const PotentialNetwork& net, const Batch& batch,
                            const LossWeights& lw, const BoundaryQuad& bq) {
  YM_CHECK(net.config.input_dim == 4, "loss_quasi_1d: network input_dim must be 4");
  return loss_quasi_1d(jet_fn(net), batch, lw, bq);
}

LossBreakdown loss_four_well(const JetFn& f, const Batch& batch, const LossWeights& lw,
                             const BoundaryQuad& bq) {
  return loss_2d(f, batch, lw, bq, /*tau_two_well=*/true, /*alpha=*/0.0);
}

LossBreakdown loss_four_well(const PotentialNetwork& net, const Batch& batch,
                             const LossWeights& lw, const BoundaryQuad& bq) {
  YM_CHECK(net.config.input_dim == 4, "loss_four_well: network input_dim must be 4");
  return loss_four_well(jet_fn(net), batch, lw, bq);
}

LossBreakdown loss_two_well_affine(const JetFn& f, const Batch& batch, const LossWeights& lw,
                                   const BoundaryQuad& bq, double alpha) {
  YM_CHECK(std::isfinite(alpha), "loss_two_well_affine: alpha must be finite");
  return loss_2d(f, batch, lw, bq, /*tau_two_well=*/false, alpha);
}

LossBreakdown loss_two_well_affine(const PotentialNetwork& net, const Batch& batch,
                                   const LossWeights& lw, const BoundaryQuad& bq, double alpha) {
  YM_CHECK(net.config.input_dim == 4, "loss_two_well_affine: network input_dim must be 4");
  return loss_two_well_affine(jet_fn(net), batch, lw, bq, alpha);
}

double curl_penalty(const JetFn& f, const Batch& batch) {
  YM_CHECK(batch.dim() == 4, "curl_penalty: batch must have 4 coordinates");
  PlainComponents c = components_2d(f, batch);
  double energy = 0.0, curl = 0.0;
  if (batch.mesh) {
    assemble::energy_curl_mesh<double>(
        batch.axis_points(0), batch.axis_points(1), batch.axis_points(2), batch.axis_points(3),
        batch.mesh_weights[2], batch.mesh_weights[3], c.dfdxi, c.dfdtau, c.mix_x_tau, c.mix_y_xi,
        false, energy, curl);
  } else {
    assemble::energy_curl_tuples<double, double>(c.dfdxi, c.dfdtau, c.mix_x_tau, c.mix_y_xi,
                                                 batch.tuple_weights, false, energy, curl);
  }
  return curl;
}

double curl_penalty(const PotentialNetwork& net, const Batch& batch) {
  YM_CHECK(net.config.input_dim == 4, "curl_penalty: network input_dim must be 4");
  return curl_penalty(jet_fn(net), batch);
}

LossBreakdown loss_for_case(const ProblemSpec& prob, const PotentialNetwork& net,
                            const Batch& batch) {
  switch (prob.case_id) {
    case CaseId::kBolza1D: return loss_bolza_1d(net, batch, prob.weights);
    case CaseId::kQuasi1D: return loss_quasi_1d(net, batch, prob.weights, prob.bq);
    case CaseId::kFourWell: return loss_four_well(net, batch, prob.weights, prob.bq);
    case CaseId::kTwoWellAffine:
      return loss_two_well_affine(net, batch, prob.weights, prob.bq, prob.alpha);
  }
  throw invalid_input("loss_for_case: bad case");
}

}  // namespace ym
