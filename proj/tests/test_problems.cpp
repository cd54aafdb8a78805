#include <doctest.h>

#include <cmath>
#include <vector>

#include "ym/loss_program.hpp"
#include "ym/problems.hpp"

#include "oracles.hpp"
#include "ym/rng.hpp"

using namespace ym;

namespace {

Jet2d seed_jet(double v, int axis, int dir_a, int dir_b) {
  Jet2d j;
  j.v = v;
  j.da = axis == dir_a ? 1.0 : 0.0;
  j.db = axis == dir_b ? 1.0 : 0.0;
  j.dab = 0.0;
  return j;
}

Batch bolza_grid(int nx, int nxi) {
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, nx}, {AxisRole::kLatent, "xi", -2.0, 2.0, nxi}};
  return uniform_grid(gs);
}

Batch mesh_2d(int ns, int nl) {
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, ns},
             {AxisRole::kPhysical, "y", 0.0, 1.0, ns},
             {AxisRole::kLatent, "xi", -2.0, 2.0, nl},
             {AxisRole::kLatent, "tau", -2.0, 2.0, nl}};
  return uniform_grid(gs);
}

Batch tuples_2d(std::size_t n, std::uint64_t seed) {
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 2},
             {AxisRole::kPhysical, "y", 0.0, 1.0, 2},
             {AxisRole::kLatent, "xi", -2.0, 2.0, 2},
             {AxisRole::kLatent, "tau", -2.0, 2.0, 2}};
  RngStream rng(seed);
  return stochastic_meshgrid(gs, n, rng, LatentSampling::kWeightedUniform);
}

}  // namespace

TEST_CASE("bolza loss with dF/dxi == 0 reduces to the weighted well count") {
  JetFn zero = [](span<const double>, int, int) { return Jet2d{0.0, 0.0, 0.0, 0.0}; };
  Batch grid = bolza_grid(7, 9);
  LossWeights lw;
  LossBreakdown b = loss_bolza_1d(zero, grid, lw);
  double expect = 0.0;
  for (double xi : grid.cols[1]) expect += std::exp(-0.5 * xi * xi);
  expect /= static_cast<double>(grid.cols[1].size());
  CHECK(b.energy == doctest::Approx(expect).epsilon(1e-14));
  CHECK(b.boundary[0] == doctest::Approx(0.0));
  CHECK(b.total == doctest::Approx(lw.lambda1 * expect).epsilon(1e-14));
}

TEST_CASE("bolza loss vanishes on the sign map over an even symmetric grid") {
  JetFn sign = [](span<const double> pt, int, int) {
    return Jet2d{0.0, pt[1] > 0 ? 1.0 : -1.0, 0.0, 0.0};
  };
  Batch grid = bolza_grid(5, 8);  // even latent count: no node at xi == 0
  LossBreakdown b = loss_bolza_1d(sign, grid, LossWeights{});
  CHECK(std::abs(b.energy) < 1e-25);
  CHECK(std::abs(b.boundary[0]) < 1e-25);
  CHECK(std::abs(b.total) < 1e-24);
}

TEST_CASE("bolza loss matches the naive triple loop on random networks") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    NetworkConfig cfg;
    cfg.input_dim = 2;
    cfg.depth = 2;
    cfg.width = 4;
    cfg.seed = seed;
    PotentialNetwork net = init_xavier(cfg);
    Batch grid = bolza_grid(5, 5);
    LossWeights lw{1.0, 10.0, 1.0};
    LossBreakdown a = loss_bolza_1d(net, grid, lw);
    LossBreakdown o = oracle::naive_bolza(jet_fn(net), grid, lw);
    CHECK(a.total == doctest::Approx(o.total).epsilon(1e-12));
    CHECK(a.energy == doctest::Approx(o.energy).epsilon(1e-12));
    CHECK(a.boundary[0] == doctest::Approx(o.boundary[0]).epsilon(1e-12));
  }
}

TEST_CASE("2d losses match the naive loops on meshes and tuples") {
  BoundaryQuad bq{3, 3, -2.0, 2.0};
  LossWeights lw{1.0, 10.0, 1.0};
  NetworkConfig cfg;
  cfg.input_dim = 4;
  cfg.depth = 2;
  cfg.width = 4;
  cfg.seed = 5;
  PotentialNetwork net = init_xavier(cfg);
  JetFn f = jet_fn(net);

  Batch mesh = mesh_2d(3, 3);
  Batch tup = tuples_2d(7, 11);

  for (const Batch* b : {&mesh, &tup}) {
    {
      LossBreakdown a = loss_quasi_1d(f, *b, lw, bq);
      LossBreakdown o = oracle::naive_2d(f, *b, lw, bq, false, 0.0);
      CHECK(a.total == doctest::Approx(o.total).epsilon(1e-12));
      CHECK(a.energy == doctest::Approx(o.energy).epsilon(1e-12));
      CHECK(a.curl == doctest::Approx(o.curl).epsilon(1e-12));
      CHECK(a.boundary[0] == doctest::Approx(o.boundary[0]).epsilon(1e-12));
      CHECK(a.boundary[1] == doctest::Approx(o.boundary[1]).epsilon(1e-12));
    }
    {
      LossBreakdown a = loss_four_well(f, *b, lw, bq);
      LossBreakdown o = oracle::naive_2d(f, *b, lw, bq, true, 0.0);
      CHECK(a.total == doctest::Approx(o.total).epsilon(1e-12));
    }
    {
      LossBreakdown a = loss_two_well_affine(f, *b, lw, bq, 0.01);
      LossBreakdown o = oracle::naive_2d(f, *b, lw, bq, false, 0.01);
      CHECK(a.total == doctest::Approx(o.total).epsilon(1e-12));
      CHECK(a.boundary[0] == doctest::Approx(o.boundary[0]).epsilon(1e-12));
      CHECK(a.boundary[1] == doctest::Approx(o.boundary[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("separable potentials have zero curl penalty") {
  JetFn separable = [](span<const double> pt, int dir_a, int dir_b) {
    Jet2d x = seed_jet(pt[0], 0, dir_a, dir_b);
    Jet2d y = seed_jet(pt[1], 1, dir_a, dir_b);
    Jet2d xi = seed_jet(pt[2], 2, dir_a, dir_b);
    Jet2d tau = seed_jet(pt[3], 3, dir_a, dir_b);
    return xi * gelu_jet(x) + tau * gelu_jet(y);
  };
  CHECK(curl_penalty(separable, mesh_2d(3, 4)) == doctest::Approx(0.0));
  CHECK(curl_penalty(separable, tuples_2d(9, 3)) == doctest::Approx(0.0));
}

TEST_CASE("curl penalty matches a hand computation for F = x y xi tau") {
  JetFn f = [](span<const double> pt, int dir_a, int dir_b) {
    Jet2d x = seed_jet(pt[0], 0, dir_a, dir_b);
    Jet2d y = seed_jet(pt[1], 1, dir_a, dir_b);
    Jet2d xi = seed_jet(pt[2], 2, dir_a, dir_b);
    Jet2d tau = seed_jet(pt[3], 3, dir_a, dir_b);
    return ((x * y) * (xi * tau));
  };
  // Asymmetric latent nodes so the latent means do not cancel.
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 2},
             {AxisRole::kPhysical, "y", 0.0, 1.0, 2},
             {AxisRole::kLatent, "xi", -1.0, 2.0, 2},
             {AxisRole::kLatent, "tau", -1.0, 2.0, 2}};
  Batch grid = uniform_grid(gs);

  // d2F/dx dtau = y xi, d2F/dy dxi = x tau.
  const double nodes[2] = {-1.0, 2.0};
  auto wl = [](double v) { return std::exp(-0.5 * v * v); };
  double expect = 0.0;
  for (double x : {0.0, 1.0}) {
    for (double y : {0.0, 1.0}) {
      double ma = 0.0, mb = 0.0;
      for (double xi : nodes)
        for (double tau : nodes) {
          ma += y * xi * wl(xi) * wl(tau);
          mb += x * tau * wl(xi) * wl(tau);
        }
      ma /= 4.0;
      mb /= 4.0;
      expect += (ma - mb) * (ma - mb);
    }
  }
  expect /= 4.0;
  CHECK(curl_penalty(f, grid) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("curl penalty is invariant under swapping jet direction order") {
  NetworkConfig cfg;
  cfg.input_dim = 4;
  cfg.depth = 2;
  cfg.width = 5;
  cfg.seed = 23;
  PotentialNetwork net = init_xavier(cfg);
  // Swapped-order jet source: mixed partials taken as d2F/dtau dx etc.
  JetFn swapped = [&net](span<const double> pt, int dir_a, int dir_b) {
    Jet2d j = eval_jet(net, pt, dir_b, dir_a);
    std::swap(j.da, j.db);
    return j;
  };
  Batch grid = mesh_2d(2, 3);
  const double a = curl_penalty(net, grid);
  const double b = curl_penalty(swapped, grid);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("quasi-1d sign map with flat tau direction reaches zero loss") {
  JetFn f = [](span<const double> pt, int dir_a, int dir_b) {
    Jet2d j{0.0, 0.0, 0.0, 0.0};
    const double g = pt[2] > 0 ? 1.0 : -1.0;
    // dF/dxi = sign(xi), dF/dtau = 0, no mixed curvature.
    if (dir_a == 2) j.da = g;
    if (dir_b == 2) j.db = g;
    return j;
  };
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 3},
             {AxisRole::kPhysical, "y", 0.0, 1.0, 3},
             {AxisRole::kLatent, "xi", -2.0, 2.0, 4},
             {AxisRole::kLatent, "tau", -2.0, 2.0, 4}};
  Batch grid = uniform_grid(gs);
  BoundaryQuad bq{3, 4, -2.0, 2.0};  // even latent count keeps sign(xi) off zero
  LossBreakdown b = loss_quasi_1d(f, grid, LossWeights{}, bq);
  CHECK(std::abs(b.energy) < 1e-25);
  CHECK(std::abs(b.boundary[0]) < 1e-25);
  CHECK(std::abs(b.boundary[1]) < 1e-25);
  CHECK(std::abs(b.curl) < 1e-25);
  CHECK(std::abs(b.total) < 1e-24);
}

TEST_CASE("four-well sign map in both latents reaches zero loss") {
  JetFn f = [](span<const double> pt, int dir_a, int dir_b) {
    Jet2d j{0.0, 0.0, 0.0, 0.0};
    const double g = pt[2] > 0 ? 1.0 : -1.0;
    const double h = pt[3] > 0 ? 1.0 : -1.0;
    if (dir_a == 2) j.da = g;
    if (dir_a == 3) j.da = h;
    if (dir_b == 2) j.db = g;
    if (dir_b == 3) j.db = h;
    return j;
  };
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 3},
             {AxisRole::kPhysical, "y", 0.0, 1.0, 3},
             {AxisRole::kLatent, "xi", -2.0, 2.0, 4},
             {AxisRole::kLatent, "tau", -2.0, 2.0, 4}};
  LossBreakdown b = loss_four_well(f, uniform_grid(gs), LossWeights{}, BoundaryQuad{3, 4, -2, 2});
  CHECK(std::abs(b.total) < 1e-24);
}

TEST_CASE("four-well with zero gradients counts both wells") {
  JetFn zero = [](span<const double>, int, int) { return Jet2d{0, 0, 0, 0}; };
  Batch grid = mesh_2d(2, 3);
  LossBreakdown b = loss_four_well(zero, grid, LossWeights{}, BoundaryQuad{2, 2, -2, 2});
  // Both well terms contribute 1 per sample, times the gaussian weight.
  double expect = 0.0;
  for (double xi : grid.cols[2])
    for (double tau : grid.cols[3]) expect += 2.0 * std::exp(-0.5 * (xi * xi + tau * tau));
  expect /= static_cast<double>(grid.cols[2].size() * grid.cols[3].size());
  CHECK(b.energy == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("two-well-affine with alpha 0 equals quasi-1d") {
  NetworkConfig cfg;
  cfg.input_dim = 4;
  cfg.depth = 2;
  cfg.width = 3;
  cfg.seed = 8;
  PotentialNetwork net = init_xavier(cfg);
  Batch tup = tuples_2d(6, 21);
  BoundaryQuad bq{3, 3, -2, 2};
  LossWeights lw{1, 10, 1};
  LossBreakdown a = loss_two_well_affine(net, tup, lw, bq, 0.0);
  LossBreakdown q = loss_quasi_1d(net, tup, lw, bq);
  CHECK(a.total == q.total);
  CHECK(a.boundary[0] == q.boundary[0]);
  CHECK(a.boundary[1] == q.boundary[1]);
}

TEST_CASE("affine target is met exactly by a matching field") {
  // A field whose weighted latent mean equals alpha*y (resp. alpha*x)
  // exactly zeroes both penalties. The 1/scale factor undoes the gaussian
  // weight mass of the aux latent grid.
  const double alpha = 0.01;
  BoundaryQuad bq{4, 3, -2.0, 2.0};
  const double axis_mass = (1.0 + 2.0 * std::exp(-2.0)) / 3.0;  // nodes -2, 0, 2
  const double scale = axis_mass * axis_mass;
  JetFn f = [alpha, scale](span<const double> pt, int dir_a, int dir_b) {
    Jet2d j{0.0, 0.0, 0.0, 0.0};
    if (dir_a == 2) j.da = alpha * pt[1] / scale;
    if (dir_a == 3) j.da = alpha * pt[0] / scale;
    if (dir_b == 2) j.db = alpha * pt[1] / scale;
    if (dir_b == 3) j.db = alpha * pt[0] / scale;
    return j;
  };
  LossBreakdown b = loss_two_well_affine(f, tuples_2d(5, 2), LossWeights{}, bq, alpha);
  CHECK(b.boundary[0] < 1e-25);
  CHECK(b.boundary[1] < 1e-25);
}

TEST_CASE("breakdown identity and nonnegativity hold for random networks") {
  RngStream rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    NetworkConfig cfg;
    cfg.input_dim = 4;
    cfg.depth = 1 + trial % 2;
    cfg.width = 3 + trial;
    cfg.seed = 100 + static_cast<std::uint64_t>(trial);
    PotentialNetwork net = init_xavier(cfg);
    Batch tup = tuples_2d(8, 50 + static_cast<std::uint64_t>(trial));
    LossWeights lw{rng.uniform(0.1, 2), rng.uniform(0, 20), rng.uniform(0, 2)};
    BoundaryQuad bq{3, 3, -2, 2};
    LossBreakdown b = loss_four_well(net, tup, lw, bq);
    CHECK(b.energy >= 0.0);
    CHECK(b.boundary[0] >= 0.0);
    CHECK(b.boundary[1] >= 0.0);
    CHECK(b.curl >= 0.0);
    const double recon = lw.lambda1 * b.energy + lw.lambda2 * (b.boundary[0] + b.boundary[1]) +
                         lw.lambda3 * b.curl;
    CHECK(b.total == recon);
  }
}

TEST_CASE("loss program reproduces the plain losses exactly") {
  EngineConfig ecfg;
  ecfg.threads = 2;
  ecfg.lane_block = 32;

  // Case 1 on a grid.
  {
    NetworkConfig cfg;
    cfg.input_dim = 2;
    cfg.depth = 2;
    cfg.width = 5;
    cfg.seed = 3;
    PotentialNetwork net = init_xavier(cfg);
    ProblemSpec prob;
    prob.case_id = CaseId::kBolza1D;
    LossProgram prog(cfg, prob, ecfg);
    Batch grid = bolza_grid(9, 11);
    LossBreakdown a = prog.evaluate(net.params, grid, {});
    LossBreakdown p = loss_bolza_1d(net, grid, prob.weights);
    CHECK(a.total == p.total);
    CHECK(a.energy == p.energy);
    CHECK(a.boundary[0] == p.boundary[0]);
  }

  // 2D cases on meshes and tuples.
  for (CaseId c : {CaseId::kQuasi1D, CaseId::kFourWell, CaseId::kTwoWellAffine}) {
    NetworkConfig cfg;
    cfg.input_dim = 4;
    cfg.depth = 2;
    cfg.width = 4;
    cfg.seed = 9;
    PotentialNetwork net = init_xavier(cfg);
    ProblemSpec prob;
    prob.case_id = c;
    prob.bq = {3, 3, -2, 2};
    prob.alpha = 0.01;
    LossProgram prog(cfg, prob, ecfg);
    for (Batch b : {mesh_2d(2, 3), tuples_2d(9, 77)}) {
      LossBreakdown a = prog.evaluate(net.params, b, {});
      LossBreakdown p = loss_for_case(prob, net, b);
      CHECK(a.total == doctest::Approx(p.total).epsilon(1e-14));
      CHECK(a.energy == doctest::Approx(p.energy).epsilon(1e-14));
      CHECK(a.curl == doctest::Approx(p.curl).epsilon(1e-14));
      CHECK(a.boundary[0] == doctest::Approx(p.boundary[0]).epsilon(1e-14));
      CHECK(a.boundary[1] == doctest::Approx(p.boundary[1]).epsilon(1e-14));
    }
  }
}

TEST_CASE("outer-tape caching distinguishes same-shape meshes with different weights") {
  EngineConfig ecfg;
  ecfg.threads = 1;
  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.depth = 2;
  cfg.width = 4;
  cfg.seed = 12;
  PotentialNetwork net = init_xavier(cfg);
  ProblemSpec prob;
  prob.case_id = CaseId::kBolza1D;
  LossProgram prog(cfg, prob, ecfg);

  GridSpec wide, narrow;
  wide.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 5}, {AxisRole::kLatent, "xi", -2.0, 2.0, 6}};
  narrow.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 5}, {AxisRole::kLatent, "xi", -1.0, 1.0, 6}};
  Batch a = uniform_grid(wide), b = uniform_grid(narrow);
  CHECK(prog.evaluate(net.params, a, {}).total == loss_bolza_1d(net, a, prob.weights).total);
  CHECK(prog.evaluate(net.params, b, {}).total == loss_bolza_1d(net, b, prob.weights).total);
  CHECK(prog.evaluate(net.params, a, {}).total == loss_bolza_1d(net, a, prob.weights).total);
}

TEST_CASE("each loss term's parameter gradient matches finite differences") {
  EngineConfig ecfg;
  ecfg.threads = 1;
  ecfg.lane_block = 16;
  const double h = 1e-4;

  auto check_case = [&](CaseId c, const LossWeights& lw) {
    NetworkConfig cfg;
    cfg.input_dim = input_dim(c);
    cfg.depth = 2;
    cfg.width = 4;
    cfg.seed = 17;
    PotentialNetwork net = init_xavier(cfg);
    ProblemSpec prob;
    prob.case_id = c;
    prob.weights = lw;
    prob.bq = {3, 3, -2, 2};
    LossProgram prog(cfg, prob, ecfg);
    Batch batch = c == CaseId::kBolza1D ? bolza_grid(5, 6) : tuples_2d(6, 5);

    std::vector<double> grad(net.params.size());
    prog.evaluate(net.params, batch, grad);
    for (std::size_t i = 0; i < net.params.size(); i += 3) {
      std::vector<double> p = net.params;
      p[i] += h;
      const double up = prog.evaluate(p, batch, {}).total;
      p[i] -= 2 * h;
      const double dn = prog.evaluate(p, batch, {}).total;
      const double fd = (up - dn) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      CHECK(std::abs(fd - grad[i]) / scale < 1e-4);
    }
  };

  for (CaseId c : {CaseId::kBolza1D, CaseId::kQuasi1D, CaseId::kFourWell, CaseId::kTwoWellAffine}) {
    check_case(c, LossWeights{1.0, 0.0, 0.0});  // energy term alone
    check_case(c, LossWeights{1e-12, 10.0, 0.0});  // boundary terms
    if (c != CaseId::kBolza1D) check_case(c, LossWeights{1e-12, 0.0, 1.0});  // curl term
  }
}

TEST_CASE("scaling every lambda scales the gradient without turning it") {
  NetworkConfig cfg;
  cfg.input_dim = 4;
  cfg.depth = 2;
  cfg.width = 4;
  cfg.seed = 29;
  PotentialNetwork net = init_xavier(cfg);
  EngineConfig ecfg;
  ecfg.threads = 1;
  Batch batch = tuples_2d(6, 5);

  const double c = 3.7;
  ProblemSpec p1;
  p1.case_id = CaseId::kQuasi1D;
  p1.weights = {1.0, 10.0, 1.0};
  p1.bq = {3, 3, -2, 2};
  ProblemSpec p2 = p1;
  p2.weights = {c * 1.0, c * 10.0, c * 1.0};

  LossProgram prog1(cfg, p1, ecfg), prog2(cfg, p2, ecfg);
  std::vector<double> g1(net.params.size()), g2(net.params.size());
  const double t1 = prog1.evaluate(net.params, batch, g1).total;
  const double t2 = prog2.evaluate(net.params, batch, g2).total;
  CHECK(t2 == doctest::Approx(c * t1).epsilon(1e-12));

  double dot = 0, n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    dot += g1[i] * g2[i];
    n1 += g1[i] * g1[i];
    n2 += g2[i] * g2[i];
  }
  CHECK(dot / std::sqrt(n1 * n2) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::sqrt(n2 / n1) == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("wrong input dimension is rejected") {
  NetworkConfig cfg;
  cfg.input_dim = 2;
  PotentialNetwork net = init_xavier(cfg);
  CHECK_THROWS(loss_quasi_1d(net, tuples_2d(4, 1), LossWeights{}, BoundaryQuad{2, 2, -2, 2}));
  NetworkConfig cfg4;
  cfg4.input_dim = 4;
  PotentialNetwork net4 = init_xavier(cfg4);
  CHECK_THROWS(loss_bolza_1d(net4, bolza_grid(3, 3), LossWeights{}));
}
