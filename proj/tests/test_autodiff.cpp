#include <doctest.h>

#include <cmath>
#include <vector>

#include "ym/engine.hpp"
#include "ym/jet.hpp"
#include "ym/math.hpp"
#include "ym/network.hpp"
#include "ym/rng.hpp"

using namespace ym;

namespace {

double fd_central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// F(x, xi) = x * xi^2 built from jet arithmetic, same machinery as the net.
Jet2d closure_x_xi2(double x, double xi, int dir_a, int dir_b) {
  auto seed = [&](double v, int axis) {
    Jet2d j;
    j.v = v;
    j.da = axis == dir_a ? 1.0 : 0.0;
    j.db = axis == dir_b ? 1.0 : 0.0;
    j.dab = 0.0;
    return j;
  };
  Jet2d jx = seed(x, 0), jxi = seed(xi, 1);
  return jx * (jxi * jxi);
}

}  // namespace

TEST_CASE("gelu jet at zero with unit seed") {
  Jet2d x{0.0, 1.0, 0.0, 0.0};
  Jet2d y = gelu_jet(x);
  CHECK(y.v == doctest::Approx(0.0));
  CHECK(y.da == doctest::Approx(0.5));  // GELU'(0) = Phi(0)
  CHECK(y.dab == doctest::Approx(0.0));
}

TEST_CASE("gelu jet keeps unseeded jets unseeded") {
  for (double t : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    Jet2d x{t, 0.0, 0.0, 0.0};
    Jet2d y = gelu_jet(x);
    CHECK(y.v == doctest::Approx(t * norm_cdf(t)));
    CHECK(y.da == 0.0);
    CHECK(y.db == 0.0);
    CHECK(y.dab == 0.0);
  }
}

TEST_CASE("gelu jet derivatives match finite differences of x Phi(x)") {
  auto g = [](double x) { return x * norm_cdf(x); };
  const double x0 = 1.0;
  Jet2d x{x0, 1.0, 1.0, 0.0};
  Jet2d y = gelu_jet(x);
  CHECK(y.v == doctest::Approx(x0 * norm_cdf(x0)).epsilon(1e-12));
  CHECK(y.v == doctest::Approx(0.8413447460685429).epsilon(1e-9));
  const double h = 1e-5;
  const double d1 = fd_central(g, x0, h);
  CHECK(y.da == doctest::Approx(d1).epsilon(1e-6));
  // Pure second derivative via the mixed channel with both dirs on x.
  const double d2 = (g(x0 + h) - 2.0 * g(x0) + g(x0 - h)) / (h * h);
  CHECK(y.dab == doctest::Approx(d2).epsilon(1e-4));
}

TEST_CASE("jet arithmetic reproduces symbolic partials of x * xi^2") {
  Jet2d j = closure_x_xi2(2.0, 3.0, 0, 1);
  CHECK(j.v == doctest::Approx(18.0));
  CHECK(j.da == doctest::Approx(9.0));   // dF/dx = xi^2
  CHECK(j.db == doctest::Approx(12.0));  // dF/dxi = 2 x xi
  CHECK(j.dab == doctest::Approx(6.0));  // d2F/dx dxi = 2 xi
}

TEST_CASE("separable functions have vanishing mixed partials") {
  // F(x, y, xi, tau) = xi * g(x) + tau * h(y) with g, h smooth.
  auto eval = [](span<const double> pt, int dir_a, int dir_b) {
    auto seed = [&](double v, int axis) {
      Jet2d j;
      j.v = v;
      j.da = axis == dir_a ? 1.0 : 0.0;
      j.db = axis == dir_b ? 1.0 : 0.0;
      return j;
    };
    Jet2d x = seed(pt[0], 0), y = seed(pt[1], 1), xi = seed(pt[2], 2), tau = seed(pt[3], 3);
    return xi * gelu_jet(x) + tau * gelu_jet(y);
  };
  RngStream rng(3);
  for (int i = 0; i < 20; ++i) {
    double pt[4] = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    CHECK(eval(span<const double>(pt, 4), 0, 3).dab == doctest::Approx(0.0));  // d2F/dx dtau
    CHECK(eval(span<const double>(pt, 4), 1, 2).dab == doctest::Approx(0.0));  // d2F/dy dxi
  }
}

TEST_CASE("unseeded jets stay unseeded through random compositions") {
  RngStream rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    Jet2d a{rng.uniform(-2, 2), 0.0, 0.0, 0.0};
    Jet2d b{rng.uniform(-2, 2), 0.0, 0.0, 0.0};
    Jet2d acc = a;
    for (int op = 0; op < 12; ++op) {
      switch (static_cast<int>(rng.uniform(0, 4))) {
        case 0: acc = acc + b; break;
        case 1: acc = acc - b; break;
        case 2: acc = acc * b; break;
        default: acc = gelu_jet(acc); break;
      }
    }
    CHECK(acc.da == 0.0);
    CHECK(acc.db == 0.0);
    CHECK(acc.dab == 0.0);
  }
}

TEST_CASE("grad_params requires a finalized tape") {
  Tape tape;
  tape.add_param_block(1);
  TV w = tape.leaf_tv(0);
  TV loss = w * w;
  ScalarEval ev;
  CHECK_THROWS(grad_params(tape, ev, loss.id, 1.0));  // not finalized
  tape.finalize();
  ev.bind(tape);
  double p[1] = {3.0};
  ev.set_params(span<const double>(p, 1));
  ev.forward();
  auto g = grad_params(tape, ev, loss.id, 1.0);
  REQUIRE(g.size() == 1);
  CHECK(g[0] == doctest::Approx(6.0));
  auto g2 = grad_params(tape, ev, loss.id, 0.5);
  CHECK(g2[0] == doctest::Approx(3.0));
}

TEST_CASE("jet arithmetic is exact on polynomials up to degree 4") {
  RngStream rng(5);
  double c[5][5] = {};
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; i + j <= 4; ++j) c[i][j] = rng.uniform(-1, 1);

  auto sym = [&](double x, double y, int dx, int dy) {
    double s = 0.0;
    for (int i = dx; i <= 4; ++i)
      for (int j = dy; i + j <= 4; ++j) {
        double coef = c[i][j];
        for (int k = 0; k < dx; ++k) coef *= static_cast<double>(i - k);
        for (int k = 0; k < dy; ++k) coef *= static_cast<double>(j - k);
        s += coef * std::pow(x, i - dx) * std::pow(y, j - dy);
      }
    return s;
  };

  auto jet_poly = [&](double x, double y) {
    Jet2d jx{x, 1.0, 0.0, 0.0}, jy{y, 0.0, 1.0, 0.0};
    Jet2d acc{};
    Jet2d xpow[5], ypow[5];
    xpow[0] = Jet2d{1.0, 0.0, 0.0, 0.0};
    ypow[0] = Jet2d{1.0, 0.0, 0.0, 0.0};
    for (int k = 1; k <= 4; ++k) {
      xpow[k] = xpow[k - 1] * jx;
      ypow[k] = ypow[k - 1] * jy;
    }
    for (int i = 0; i <= 4; ++i)
      for (int j = 0; i + j <= 4; ++j) acc = acc + c[i][j] * (xpow[i] * ypow[j]);
    return acc;
  };

  for (int t = 0; t < 10; ++t) {
    const double x = rng.uniform(-1.5, 1.5), y = rng.uniform(-1.5, 1.5);
    Jet2d j = jet_poly(x, y);
    CHECK(j.v == doctest::Approx(sym(x, y, 0, 0)).epsilon(1e-13));
    CHECK(j.da == doctest::Approx(sym(x, y, 1, 0)).epsilon(1e-12));
    CHECK(j.db == doctest::Approx(sym(x, y, 0, 1)).epsilon(1e-12));
    CHECK(j.dab == doctest::Approx(sym(x, y, 1, 1)).epsilon(1e-12));
  }
}

TEST_CASE("zero network evaluates to the zero jet") {
  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.depth = 3;
  cfg.width = 7;
  PotentialNetwork net;
  net.config = cfg;
  net.layout = make_layout(cfg);
  net.params.assign(net.layout.total, 0.0);
  double pt[2] = {0.3, -1.2};
  Jet2d j = eval_jet(net, span<const double>(pt, 2), 0, 1);
  CHECK(j.v == 0.0);
  CHECK(j.da == 0.0);
  CHECK(j.db == 0.0);
  CHECK(j.dab == 0.0);
}

TEST_CASE("network jets match finite differences on random small networks") {
  RngStream rng(17);
  int checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    NetworkConfig cfg;
    cfg.input_dim = (trial % 2 == 0) ? 2 : 4;
    cfg.depth = 1 + static_cast<int>(rng.uniform(0, 2));
    cfg.width = 2 + static_cast<int>(rng.uniform(0, 4));
    cfg.trunk = trial % 5 == 0 ? TrunkMode::kLiftedTrunk : TrunkMode::kLiteralBlock;
    cfg.seed = 100 + static_cast<std::uint64_t>(trial);
    PotentialNetwork net = init_xavier(cfg);

    std::vector<double> pt(static_cast<std::size_t>(cfg.input_dim));
    for (auto& v : pt) v = rng.uniform(-1.5, 1.5);
    const int a = static_cast<int>(rng.uniform(0, cfg.input_dim));
    int b = static_cast<int>(rng.uniform(0, cfg.input_dim));
    if (b == a && cfg.input_dim > 1) b = (a + 1) % cfg.input_dim;

    Jet2d j = eval_jet(net, pt, a, b);
    const double h = 1e-5;
    auto f_along = [&](int axis, double t) {
      std::vector<double> q = pt;
      q[static_cast<std::size_t>(axis)] += t;
      return eval_value(net, q);
    };
    const double fda = (f_along(a, h) - f_along(a, -h)) / (2 * h);
    const double fdb = (f_along(b, h) - f_along(b, -h)) / (2 * h);
    auto f_ab = [&](double ta, double tb) {
      std::vector<double> q = pt;
      q[static_cast<std::size_t>(a)] += ta;
      q[static_cast<std::size_t>(b)] += tb;
      return eval_value(net, q);
    };
    const double fdab =
        (f_ab(h, h) - f_ab(h, -h) - f_ab(-h, h) + f_ab(-h, -h)) / (4 * h * h);

    const double sa = std::max(std::abs(fda), 1e-6);
    const double sb = std::max(std::abs(fdb), 1e-6);
    const double sab = std::max(std::abs(fdab), 1e-4);
    CHECK(std::abs(j.da - fda) / sa < 1e-5);
    CHECK(std::abs(j.db - fdb) / sb < 1e-5);
    CHECK(std::abs(j.dab - fdab) / sab < 1e-3);
    ++checked;
  }
  CHECK(checked == 24);
}

TEST_CASE("recorded tape replays the plain jet values bit for bit") {
  NetworkConfig cfg;
  cfg.input_dim = 4;
  cfg.depth = 2;
  cfg.width = 5;
  cfg.seed = 42;
  PotentialNetwork net = init_xavier(cfg);

  Tape tape;
  tape.add_param_block(static_cast<int>(net.layout.total));
  RecordedPotential rec = record_potential(tape, net.layout, 1, 2);
  tape.finalize();

  ScalarEval ev;
  ev.bind(tape);
  ev.set_params(net.params);

  RngStream rng(7);
  for (int t = 0; t < 10; ++t) {
    double pt[4];
    for (double& v : pt) v = rng.uniform(-1, 1);
    for (std::size_t k = 0; k < 4; ++k) ev.set_leaf(tape.input_slots()[k], pt[k]);
    ev.forward();
    Jet2d j = eval_jet(net, span<const double>(pt, 4), 1, 2);
    CHECK(ev.value(rec.value) == j.v);
    CHECK(ev.value(rec.da) == j.da);
    CHECK(ev.value(rec.db) == j.db);
    CHECK(ev.value(rec.dab) == j.dab);
  }
}

TEST_CASE("tape replay and reverse sweeps are bit-deterministic") {
  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.depth = 2;
  cfg.width = 4;
  cfg.seed = 9;
  PotentialNetwork net = init_xavier(cfg);

  Tape tape;
  tape.add_param_block(static_cast<int>(net.layout.total));
  RecordedPotential rec = record_potential(tape, net.layout, 0, 1);
  tape.finalize();

  ScalarEval ev;
  ev.bind(tape);
  ev.set_params(net.params);
  ev.set_leaf(tape.input_slots()[0], 0.37);
  ev.set_leaf(tape.input_slots()[1], -0.8);
  ev.forward();
  const double v1 = ev.value(rec.dab);
  std::pair<std::int32_t, double> seed{rec.dab, 1.0};
  ev.reverse(span<const std::pair<std::int32_t, double>>(&seed, 1));
  std::vector<double> g1(ev.param_adjoints().begin(), ev.param_adjoints().end());

  ev.forward();
  CHECK(ev.value(rec.dab) == v1);
  ev.reverse(span<const std::pair<std::int32_t, double>>(&seed, 1));
  std::vector<double> g2(ev.param_adjoints().begin(), ev.param_adjoints().end());
  CHECK(g1 == g2);
}

TEST_CASE("parameter gradient of (dF/dxi)^2 for F = w xi is 2w") {
  Tape tape;
  tape.add_param_block(1);
  TV w = tape.leaf_tv(0);
  Jet2<TV> xi;
  xi.v = TV{&tape, tape.add_input()};
  xi.da = TV::constant(1.0);
  xi.db = TV::constant(0.0);
  xi.dab = TV::constant(0.0);
  Jet2<TV> F = scale(w, xi);
  TV loss = F.da * F.da;
  tape.finalize();

  for (double wv : {0.3, -1.7, 2.0}) {
    ScalarEval ev;
    ev.bind(tape);
    ev.set_leaf(0, wv);
    ev.set_leaf(tape.input_slots()[0], 0.9);
    ev.forward();
    CHECK(ev.value(loss) == doctest::Approx(wv * wv));
    std::pair<std::int32_t, double> seed{loss.id, 1.0};
    ev.reverse(span<const std::pair<std::int32_t, double>>(&seed, 1));
    CHECK(ev.adjoint(0) == doctest::Approx(2.0 * wv).epsilon(1e-14));
  }
}

TEST_CASE("loss independent of parameters has zero gradient") {
  Tape tape;
  tape.add_param_block(3);
  TV a{&tape, tape.add_input()};
  TV loss = a * a + 2.0;
  tape.finalize();
  ScalarEval ev;
  ev.bind(tape);
  double params[3] = {1.0, -2.0, 0.5};
  ev.set_params(span<const double>(params, 3));
  ev.set_leaf(tape.input_slots()[0], 1.3);
  ev.forward();
  std::pair<std::int32_t, double> seed{loss.id, 1.0};
  ev.reverse(span<const std::pair<std::int32_t, double>>(&seed, 1));
  for (int i = 0; i < 3; ++i) CHECK(ev.adjoint(i) == 0.0);
}

TEST_CASE("grad_params on a recorded scalar loss matches finite differences") {
  // Loss built through jet channels: sum over samples of
  // (da^2 + 0.3 dab + 0.1 value), reverse-over-forward through the tape.
  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.depth = 2;
  cfg.width = 4;
  cfg.seed = 31;
  PotentialNetwork net = init_xavier(cfg);
  const double pts[3][2] = {{0.1, -0.4}, {0.55, 0.2}, {0.9, 1.1}};

  Tape tape;
  tape.add_param_block(static_cast<int>(net.layout.total));
  std::vector<RecordedPotential> recs;
  for (int s = 0; s < 3; ++s) recs.push_back(record_potential(tape, net.layout, 1, 0));
  TV loss = TV::constant(0.0);
  for (const auto& r : recs) {
    TV da{&tape, r.da}, dab{&tape, r.dab}, v{&tape, r.value};
    loss = loss + (da * da + dab * 0.3 + v * 0.1);
  }
  tape.finalize();

  ScalarEval ev;
  ev.bind(tape);
  auto eval_loss_at = [&](span<const double> params) {
    ev.set_params(params);
    const auto& slots = tape.input_slots();
    for (int s = 0; s < 3; ++s) {
      ev.set_leaf(slots[2 * s], pts[s][0]);
      ev.set_leaf(slots[2 * s + 1], pts[s][1]);
    }
    ev.forward();
    return ev.value(loss);
  };

  eval_loss_at(net.params);
  std::pair<std::int32_t, double> seed{loss.id, 1.0};
  ev.reverse(span<const std::pair<std::int32_t, double>>(&seed, 1));
  std::vector<double> grad(ev.param_adjoints().begin(), ev.param_adjoints().end());

  const double h = 1e-4;
  for (std::size_t i = 0; i < net.params.size(); i += 5) {
    std::vector<double> p = net.params;
    p[i] += h;
    const double up = eval_loss_at(p);
    p[i] -= 2 * h;
    const double dn = eval_loss_at(p);
    const double fd = (up - dn) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
    CHECK(std::abs(grad[i] - fd) / scale < 1e-4);
  }
}

TEST_CASE("vectorized replay engine agrees with the scalar tape") {
  NetworkConfig cfg;
  cfg.input_dim = 4;
  cfg.depth = 2;
  cfg.width = 5;
  cfg.seed = 77;
  PotentialNetwork net = init_xavier(cfg);

  Tape tape;
  tape.add_param_block(static_cast<int>(net.layout.total));
  RecordedPotential rec = record_potential(tape, net.layout, 0, 3);
  tape.finalize();

  const std::size_t n = 300;
  RngStream rng(123);
  std::vector<double> pts(4 * n);
  for (double& v : pts) v = rng.uniform(-1, 1);
  auto fill = [&](std::size_t s, span<double> slots) {
    for (std::size_t k = 0; k < 4; ++k) slots[k] = pts[4 * s + k];
  };

  const std::int32_t comps[2] = {rec.db, rec.dab};
  std::vector<double> out1(2 * n), out2(2 * n);
  std::vector<double> seeds(2 * n);
  for (double& v : seeds) v = rng.uniform(-1, 1);

  for (int threads : {1, 2}) {
    EngineConfig ecfg;
    ecfg.threads = threads;
    ecfg.lane_block = 64;
    BatchEvaluator be;
    be.bind(tape, ecfg);
    auto& out = threads == 1 ? out1 : out2;
    be.forward(net.params, n, fill, span<const std::int32_t>(comps, 2), out);
  }
  CHECK(out1 == out2);

  // Scalar reference for component values and the seeded gradient.
  ScalarEval ev;
  ev.bind(tape);
  std::vector<double> ref_grad(net.params.size(), 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    ev.set_params(net.params);
    for (std::size_t k = 0; k < 4; ++k) ev.set_leaf(tape.input_slots()[k], pts[4 * s + k]);
    ev.forward();
    CHECK(ev.value(rec.db) == out1[s]);
    CHECK(ev.value(rec.dab) == out1[n + s]);
    std::pair<std::int32_t, double> sd[2] = {{rec.db, seeds[s]}, {rec.dab, seeds[n + s]}};
    ev.reverse(span<const std::pair<std::int32_t, double>>(sd, 2));
    auto pa = ev.param_adjoints();
    for (std::size_t p = 0; p < ref_grad.size(); ++p) ref_grad[p] += pa[p];
  }

  std::vector<double> g1(net.params.size(), 0.0), g2(net.params.size(), 0.0);
  for (int threads : {1, 2}) {
    EngineConfig ecfg;
    ecfg.threads = threads;
    ecfg.lane_block = 64;
    BatchEvaluator be;
    be.bind(tape, ecfg);
    auto& g = threads == 1 ? g1 : g2;
    be.backward(net.params, n, fill, span<const std::int32_t>(comps, 2), seeds, g);
  }
  CHECK(g1 == g2);  // chunk-ordered reduction: thread count cannot matter
  for (std::size_t p = 0; p < g1.size(); ++p)
    CHECK(g1[p] == doctest::Approx(ref_grad[p]).epsilon(1e-10));
}
