#include "ym/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ym/loss_program.hpp"

namespace ym {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw io_error("cannot write " + p.string());
  f << text;
}

void write_field_csv_1d(const fs::path& p, const FieldGrid& fg) {
  std::ostringstream os;
  os << "x,u\n";
  for (std::size_t i = 0; i < fg.xs.size(); ++i) os << fmt(fg.xs[i]) << "," << fmt(fg.u[i]) << "\n";
  write_text(p, os.str());
}

void write_field_csv_2d(const fs::path& p, const FieldGrid& fg) {
  std::ostringstream os;
  os << "x,y,u,V1,V2\n";
  const std::size_t ny = fg.ys.size();
  for (std::size_t i = 0; i < fg.xs.size(); ++i)
    for (std::size_t j = 0; j < ny; ++j)
      os << fmt(fg.xs[i]) << "," << fmt(fg.ys[j]) << "," << fmt(fg.u[i * ny + j]) << ","
         << fmt(fg.v1[i * ny + j]) << "," << fmt(fg.v2[i * ny + j]) << "\n";
  write_text(p, os.str());
}

void write_hist_csv(const fs::path& p, const EmpiricalMeasure& m) {
  std::ostringstream os;
  os << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < m.counts.size(); ++b)
    os << fmt(m.edges[b]) << "," << fmt(m.edges[b + 1]) << "," << m.counts[b] << "\n";
  write_text(p, os.str());
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

Batch energy_probe_grid(const RunConfig& cfg) {
  GridSpec gs;
  if (cfg.problem.case_id == CaseId::kBolza1D) {
    gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, cfg.train.case1_grid},
               {AxisRole::kLatent, "xi", cfg.train.latent_lo, cfg.train.latent_hi,
                cfg.train.case1_grid}};
  } else {
    gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, cfg.analysis.probe_grid},
               {AxisRole::kPhysical, "y", 0.0, 1.0, cfg.analysis.probe_grid},
               {AxisRole::kLatent, "xi", cfg.train.latent_lo, cfg.train.latent_hi,
                cfg.analysis.latent_grid},
               {AxisRole::kLatent, "tau", cfg.train.latent_lo, cfg.train.latent_hi,
                cfg.analysis.latent_grid}};
  }
  return uniform_grid(gs);
}

// Case-1 analysis: U field, per-probe pushforward measures against the
// two-atom reference, and the energy/W2 trace across stored checkpoints.
void analyze_case1(const PotentialNetwork& net, const RunConfig& cfg, const fs::path& out,
                   json& metrics) {
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, cfg.train.case1_grid},
             {AxisRole::kLatent, "xi", cfg.train.latent_lo, cfg.train.latent_hi,
              cfg.train.case1_grid}};
  Batch grid = uniform_grid(gs);

  FieldGrid fg = reconstruct_u_1d(net, grid);
  write_field_csv_1d(out / "field_u.csv", fg);
  double max_u = 0.0;
  for (double u : fg.u) max_u = std::max(max_u, std::abs(u));
  metrics["case1"]["max_abs_u"] = max_u;

  // One latent draw shared across probes: pushforward values stay comparable
  // across x and the measure comparison is common-random-number stable.
  RngStream arng = RngStream::substream(cfg.seed, "analysis");
  std::vector<double> latents =
      gaussian_samples(static_cast<std::size_t>(cfg.analysis.hist_samples), 1, arng);

  std::vector<double> probes = linspace(0.0, 1.0, cfg.analysis.probes_1d);
  json jp = json::array();
  double w2_acc = 0.0;
  JetFn f = jet_fn(net);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double anchor[1] = {probes[i]};
    auto samples = pushforward_samples(f, span<const double>(anchor, 1), 0, latents, 1);
    EmpiricalMeasure m =
        make_measure(span<const double>(anchor, 1), 0, std::move(samples), cfg.analysis.hist);
    char name[64];
    std::snprintf(name, sizeof(name), "hist_p%02zu_dfdxi.csv", i);
    write_hist_csv(out / name, m);
    const double w2 = w2_two_atoms(m.samples, -1.0, 1.0, 0.5);
    w2_acc += w2 * w2;
    jp.push_back({{"x", probes[i]},
                  {"w2", w2},
                  {"mass_minus", well_mass(m.samples, -1.0, 0.25)},
                  {"mass_plus", well_mass(m.samples, 1.0, 0.25)},
                  {"mean", mean_of(m.samples)}});
  }
  metrics["case1"]["probes"] = jp;
  metrics["case1"]["mean_w2sq"] = w2_acc / static_cast<double>(probes.size());

  ProblemSpec prob = cfg.problem;
  metrics["energy_estimate"]["unnormalized"] = energy_estimate(net, prob, grid, false);
  metrics["energy_estimate"]["normalized"] = energy_estimate(net, prob, grid, true);

  // Energy/W2 diagnostic along checkpoints: the integrated W2^2 against the
  // analytic measure, next to the energy gap over the well curvature (8)
  // with slack 0.5.
  const fs::path ckpt_dir = out / "checkpoints";
  json trace = json::array();
  if (fs::exists(ckpt_dir)) {
    std::vector<fs::path> ckpts;
    for (const auto& e : fs::directory_iterator(ckpt_dir)) {
      const std::string n = e.path().filename().string();
      if (n.rfind("ckpt_", 0) == 0 && n.find(".ymnet") != std::string::npos &&
          n != "ckpt_final.ymnet")
        ckpts.push_back(e.path());
    }
    std::sort(ckpts.begin(), ckpts.end());
    for (const auto& p : ckpts) {
      PotentialNetwork cnet = load_checkpoint(p.string());
      JetFn cf = jet_fn(cnet);
      double acc = 0.0;
      for (double px : probes) {
        const double anchor[1] = {px};
        auto samples = pushforward_samples(cf, span<const double>(anchor, 1), 0, latents, 1);
        const double w2 = w2_two_atoms(samples, -1.0, 1.0, 0.5);
        acc += w2 * w2;
      }
      const double mean_w2sq = acc / static_cast<double>(probes.size());
      const double energy = energy_estimate(cnet, prob, grid, false);
      const double c_eff = 8.0 * (1.0 - 0.5);
      int epoch = 0;
      std::sscanf(p.filename().string().c_str(), "ckpt_%d.ymnet", &epoch);
      trace.push_back({{"epoch", epoch},
                       {"energy", energy},
                       {"energy_normalized", energy_estimate(cnet, prob, grid, true)},
                       {"mean_w2sq", mean_w2sq},
                       {"bound", energy / c_eff}});
    }
  }
  metrics["case1"]["w2_energy_trace"] = trace;
}

void analyze_case2d(const PotentialNetwork& net, const RunConfig& cfg, const fs::path& out,
                    json& metrics) {
  const AxisSpec latent_axis{AxisRole::kLatent, "latent", cfg.train.latent_lo,
                             cfg.train.latent_hi, cfg.analysis.latent_grid};
  std::vector<double> xs = linspace(0.0, 1.0, cfg.analysis.probe_grid);
  std::vector<double> ys = xs;

  FieldGrid v = barycenter_field(net, xs, ys, latent_axis, /*normalized=*/true);
  FieldGrid fg = integrate_field(v, PathMode::kStaircaseXY);
  write_field_csv_2d(out / "field_u.csv", fg);

  double max_u = 0.0;
  for (double u : fg.u) max_u = std::max(max_u, std::abs(u));
  json j2;
  j2["max_abs_u"] = max_u;
  j2["path_discrepancy"] = path_discrepancy(v);
  j2["curl_rms"] = curl_rms(v);

  const double alpha = cfg.problem.case_id == CaseId::kTwoWellAffine ? cfg.problem.alpha : 0.0;
  const std::size_t ny = ys.size();
  double rms_right = 0.0, rms_top = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    const double r = fg.u[(xs.size() - 1) * ny + j] - alpha * ys[j];
    rms_right += r * r;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = fg.u[i * ny + (ny - 1)] - alpha * xs[i];
    rms_top += r * r;
  }
  j2["boundary_residual_rms_right"] = std::sqrt(rms_right / static_cast<double>(ny));
  j2["boundary_residual_rms_top"] = std::sqrt(rms_top / static_cast<double>(xs.size()));

  RngStream arng = RngStream::substream(cfg.seed, "analysis");
  std::vector<double> latents =
      gaussian_samples(static_cast<std::size_t>(cfg.analysis.hist_samples), 2, arng);
  JetFn f = jet_fn(net);
  json ja = json::array();
  for (std::size_t a = 0; a < cfg.analysis.anchors.size(); ++a) {
    const auto& anchor = cfg.analysis.anchors[a];
    for (int comp = 0; comp < 2; ++comp) {
      auto samples =
          pushforward_samples(f, span<const double>(anchor.data(), 2), comp, latents, 2);
      EmpiricalMeasure m = make_measure(span<const double>(anchor.data(), 2), comp,
                                        std::move(samples), cfg.analysis.hist);
      char name[64];
      std::snprintf(name, sizeof(name), "hist_a%zu_%s.csv", a, comp == 0 ? "dfdxi" : "dfdtau");
      write_hist_csv(out / name, m);
      ja.push_back({{"x", anchor[0]},
                    {"y", anchor[1]},
                    {"component", comp == 0 ? "dfdxi" : "dfdtau"},
                    {"mean", mean_of(m.samples)},
                    {"mass_minus", well_mass(m.samples, -1.0, 0.25)},
                    {"mass_plus", well_mass(m.samples, 1.0, 0.25)},
                    {"mass_center", well_mass(m.samples, 0.0, 0.25)}});
    }
  }
  j2["anchors"] = ja;
  metrics["case2d"] = j2;

  Batch probe = energy_probe_grid(cfg);
  metrics["energy_estimate"]["unnormalized"] = energy_estimate(net, cfg.problem, probe, false);
  metrics["energy_estimate"]["normalized"] = energy_estimate(net, cfg.problem, probe, true);
}

void analyze_net(const PotentialNetwork& net, const RunConfig& cfg, const fs::path& out,
                 json& metrics) {
  if (cfg.problem.case_id == CaseId::kBolza1D)
    analyze_case1(net, cfg, out, metrics);
  else
    analyze_case2d(net, cfg, out, metrics);
}

std::string find_latest_state(const fs::path& ckpt_dir) {
  if (!fs::exists(ckpt_dir)) return "";
  int best = -1;
  fs::path best_path;
  for (const auto& e : fs::directory_iterator(ckpt_dir)) {
    const std::string n = e.path().filename().string();
    int epoch = -1;
    if (std::sscanf(n.c_str(), "state_%d.ymstate", &epoch) == 1 && epoch > best) {
      best = epoch;
      best_path = e.path();
    }
  }
  return best < 0 ? "" : best_path.string();
}

}  // namespace

int run_command(RunConfig cfg, bool resume) {
  cfg.resolve();
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_text(out / "config.resolved", serialize_config(cfg));
  const fs::path failed_marker = out / "FAILED";
  if (fs::exists(failed_marker)) fs::remove(failed_marker);

  std::string resume_state;
  if (resume) {
    resume_state = find_latest_state(out / "checkpoints");
    if (resume_state.empty()) throw io_error("resume requested but no state file in " + cfg.out_dir);
  }

  TrainResult res = train(cfg.problem, cfg.network, cfg.train, resume_state);
  if (res.failed) {
    std::cerr << "training halted at epoch " << res.stopped_epoch
              << ": non-finite contribution in term '" << res.failure_term << "'\n";
    return 2;
  }

  json metrics;
  metrics["case"] = to_string(cfg.problem.case_id);
  metrics["seed"] = cfg.seed;
  metrics["epochs"] = res.stopped_epoch;
  metrics["final_probe"] = {{"total", res.final_probe.total},
                            {"energy", res.final_probe.energy},
                            {"boundary", res.final_probe.boundary},
                            {"curl", res.final_probe.curl}};
  if (!res.record.epochs.empty()) {
    const auto& last = res.record.epochs.back();
    metrics["last_epoch"] = {{"epoch", last.epoch},
                             {"total", last.total},
                             {"energy", last.energy},
                             {"boundary", last.boundary},
                             {"curl", last.curl},
                             {"lr", last.lr},
                             {"batch_size", last.batch_size}};
  }

  analyze_net(res.net, cfg, out, metrics);
  write_text(out / "metrics.json", metrics.dump(2) + "\n");
  return 0;
}

int analyze_command(const std::string& checkpoint, RunConfig cfg) {
  cfg.resolve();
  PotentialNetwork net = load_checkpoint(checkpoint);
  if (net.config.input_dim != input_dim(cfg.problem.case_id))
    throw invalid_input("checkpoint input_dim does not match case " +
                        to_string(cfg.problem.case_id));
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  json metrics;
  metrics["case"] = to_string(cfg.problem.case_id);
  metrics["checkpoint"] = checkpoint;
  analyze_net(net, cfg, out, metrics);
  write_text(out / "metrics.json", metrics.dump(2) + "\n");
  return 0;
}

int check_command(int threads) {
  bool ok = true;
  auto report = [&ok](const std::string& name, bool pass, const std::string& detail) {
    std::printf("%-38s %s  %s\n", name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ok = false;
  };

  // Quadrature: trapezoid mass of the truncated Gaussian weight.
  {
    AxisSpec ax{AxisRole::kLatent, "xi", -2.0, 2.0, 201};
    const double mass = gaussian_axis_mass(ax);
    const double exact = kSqrt2Pi * (norm_cdf(2.0) - norm_cdf(-2.0));
    report("quadrature: grid weight mass", std::abs(mass - exact) < 1e-3,
           "mass=" + fmt(mass) + " exact=" + fmt(exact));
  }

  // Identity pushforward reproduces the base Gaussian (KS at 1%).
  {
    RngStream rng = RngStream::substream(7, "check-ks");
    std::vector<double> latents = gaussian_samples(10000, 1, rng);
    JetFn ident = [](span<const double> pt, int, int) {
      return Jet2d{0.5 * pt[1] * pt[1], pt[1], 0.0, 0.0};  // dF/dxi == xi
    };
    double anchor[1] = {0.5};
    auto samples = pushforward_samples(ident, span<const double>(anchor, 1), 0, latents, 1);
    const double d = ks_statistic_normal(samples);
    const double crit = 1.628 / std::sqrt(10000.0);
    report("sampling: identity pushforward KS", d < crit, "D=" + fmt(d) + " crit=" + fmt(crit));
  }

  // Gradients against central finite differences on tiny networks.
  for (CaseId c : {CaseId::kBolza1D, CaseId::kQuasi1D, CaseId::kFourWell, CaseId::kTwoWellAffine}) {
    NetworkConfig ncfg;
    ncfg.input_dim = input_dim(c);
    ncfg.depth = 2;
    ncfg.width = 4;
    ncfg.seed = 11;
    PotentialNetwork net = init_xavier(ncfg);
    ProblemSpec prob;
    prob.case_id = c;
    prob.bq = {3, 3, -2.0, 2.0};
    EngineConfig ecfg;
    ecfg.threads = threads;
    LossProgram prog(ncfg, prob, ecfg);

    Batch batch;
    if (c == CaseId::kBolza1D) {
      GridSpec gs;
      gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 5}, {AxisRole::kLatent, "xi", -2.0, 2.0, 5}};
      batch = uniform_grid(gs);
    } else {
      RngStream rng = RngStream::substream(13, "check-batch");
      GridSpec gs;
      gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 2},
                 {AxisRole::kPhysical, "y", 0.0, 1.0, 2},
                 {AxisRole::kLatent, "xi", -2.0, 2.0, 2},
                 {AxisRole::kLatent, "tau", -2.0, 2.0, 2}};
      batch = stochastic_meshgrid(gs, 6, rng, LatentSampling::kWeightedUniform);
    }

    std::vector<double> grad(net.params.size());
    prog.evaluate(net.params, batch, grad);
    double worst = 0.0;
    const double h = 1e-4;
    for (std::size_t i = 0; i < net.params.size(); i += 7) {
      std::vector<double> p = net.params;
      p[i] += h;
      const double up = prog.evaluate(p, batch, {}).total;
      p[i] -= 2 * h;
      const double dn = prog.evaluate(p, batch, {}).total;
      const double fd = (up - dn) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      worst = std::max(worst, std::abs(fd - grad[i]) / scale);
    }
    report("gradient vs finite differences: " + to_string(c), worst < 1e-4,
           "max rel err=" + fmt(worst));
  }

  return ok ? 0 : 2;
}

}  // namespace ym
