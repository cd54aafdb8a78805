#include "ym/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ym {

namespace fs = std::filesystem;

int batch_schedule(int epoch, const BatchGrowth& g) {
  YM_CHECK(epoch >= 1, "batch_schedule: epoch must be >= 1");
  YM_CHECK(g.initial >= 1 && g.multiplier >= 1.0, "batch_schedule: bad growth rule");
  const double size =
      static_cast<double>(g.initial) * std::pow(g.multiplier, static_cast<double>(epoch / g.period));
  return static_cast<int>(std::min(size, static_cast<double>(g.cap)));
}

namespace {

std::string hexd(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double unhexd(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

GridSpec case1_grid_spec(int points, double lo, double hi) {
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, points},
             {AxisRole::kLatent, "xi", lo, hi, points}};
  return gs;
}

GridSpec spec_2d(double lo, double hi) {
  GridSpec gs;
  gs.axes = {{AxisRole::kPhysical, "x", 0.0, 1.0, 2},
             {AxisRole::kPhysical, "y", 0.0, 1.0, 2},
             {AxisRole::kLatent, "xi", lo, hi, 2},
             {AxisRole::kLatent, "tau", lo, hi, 2}};
  return gs;
}

std::string ckpt_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%05d.ymnet", epoch);
  return buf;
}

std::string state_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "state_%05d.ymstate", epoch);
  return buf;
}

// Mean of the current epoch's total and the previous window-1 recorded ones.
double trailing_total(const std::vector<EpochStats>& history, double current, int window) {
  double s = current;
  int n = 1;
  for (std::size_t i = history.size(); i-- > 0 && n < window;) {
    s += history[i].total;
    ++n;
  }
  return s / static_cast<double>(n);
}

const char* first_nonfinite_term(const LossBreakdown& b) {
  if (!std::isfinite(b.energy)) return "energy";
  for (double v : b.boundary)
    if (!std::isfinite(v)) return "boundary";
  if (!std::isfinite(b.curl)) return "curl";
  if (!std::isfinite(b.total)) return "total";
  return nullptr;
}

}  // namespace

void save_train_state(const TrainState& st, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write state file: " + path);
  f << "YMSTATE1\n";
  f << "epoch=" << st.epoch << "\n";
  f << "pcount=" << st.adam.m.size() << "\n";
  f << "t=" << st.adam.t << "\n";
  f << "lr=" << hexd(st.adam.lr) << "\n";
  f << "beta1=" << hexd(st.adam.cfg.beta1) << "\n";
  f << "beta2=" << hexd(st.adam.cfg.beta2) << "\n";
  f << "eps=" << hexd(st.adam.cfg.eps) << "\n";
  f << "lr0=" << hexd(st.adam.cfg.lr0) << "\n";
  f << "sched_best=" << hexd(st.sched.best) << "\n";
  f << "sched_bad=" << st.sched.bad_epochs << "\n";
  f << "sched_factor=" << hexd(st.sched.cfg.factor) << "\n";
  f << "sched_patience=" << st.sched.cfg.patience << "\n";
  f << "sched_min_lr=" << hexd(st.sched.cfg.min_lr) << "\n";
  f << "sched_rel=" << hexd(st.sched.cfg.rel_improve) << "\n";
  f << "batch_rng=" << st.batch_rng << "\n";
  f << "m=";
  for (double v : st.adam.m) f << hexd(v) << " ";
  f << "\nv=";
  for (double v : st.adam.v) f << hexd(v) << " ";
  f << "\nrows=" << st.history.size() << "\n";
  for (const auto& r : st.history) {
    f << r.epoch << " " << hexd(r.total) << " " << hexd(r.energy) << " " << hexd(r.boundary)
      << " " << hexd(r.curl) << " " << hexd(r.lr) << " " << r.batch_size << " "
      << hexd(r.seconds) << "\n";
  }
  if (!f) throw io_error("failed writing state file: " + path);
}

TrainState load_train_state(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open state file: " + path);
  std::string line;
  std::getline(f, line);
  if (line != "YMSTATE1") throw io_error("incompatible state file: " + path);
  TrainState st;
  std::size_t pcount = 0;
  auto val = [&](const std::string& l) { return l.substr(l.find('=') + 1); };
  while (std::getline(f, line)) {
    if (line.rfind("epoch=", 0) == 0) st.epoch = std::stoi(val(line));
    else if (line.rfind("pcount=", 0) == 0) pcount = std::stoul(val(line));
    else if (line.rfind("t=", 0) == 0) st.adam.t = std::stoll(val(line));
    else if (line.rfind("lr=", 0) == 0) st.adam.lr = unhexd(val(line));
    else if (line.rfind("beta1=", 0) == 0) st.adam.cfg.beta1 = unhexd(val(line));
    else if (line.rfind("beta2=", 0) == 0) st.adam.cfg.beta2 = unhexd(val(line));
    else if (line.rfind("eps=", 0) == 0) st.adam.cfg.eps = unhexd(val(line));
    else if (line.rfind("lr0=", 0) == 0) st.adam.cfg.lr0 = unhexd(val(line));
    else if (line.rfind("sched_best=", 0) == 0) st.sched.best = unhexd(val(line));
    else if (line.rfind("sched_bad=", 0) == 0) st.sched.bad_epochs = std::stoi(val(line));
    else if (line.rfind("sched_factor=", 0) == 0) st.sched.cfg.factor = unhexd(val(line));
    else if (line.rfind("sched_patience=", 0) == 0) st.sched.cfg.patience = std::stoi(val(line));
    else if (line.rfind("sched_min_lr=", 0) == 0) st.sched.cfg.min_lr = unhexd(val(line));
    else if (line.rfind("sched_rel=", 0) == 0) st.sched.cfg.rel_improve = unhexd(val(line));
    else if (line.rfind("batch_rng=", 0) == 0) st.batch_rng = val(line);
    else if (line.rfind("m=", 0) == 0) {
      std::istringstream is(val(line));
      std::string tok;
      while (is >> tok) st.adam.m.push_back(unhexd(tok));
    } else if (line.rfind("v=", 0) == 0) {
      std::istringstream is(val(line));
      std::string tok;
      while (is >> tok) st.adam.v.push_back(unhexd(tok));
    } else if (line.rfind("rows=", 0) == 0) {
      const int n = std::stoi(val(line));
      for (int i = 0; i < n; ++i) {
        std::getline(f, line);
        std::istringstream is(line);
        EpochStats r;
        std::string tot, en, bd, cu, lr, sec;
        is >> r.epoch >> tot >> en >> bd >> cu >> lr >> r.batch_size >> sec;
        r.total = unhexd(tot);
        r.energy = unhexd(en);
        r.boundary = unhexd(bd);
        r.curl = unhexd(cu);
        r.lr = unhexd(lr);
        r.seconds = unhexd(sec);
        st.history.push_back(r);
      }
    }
  }
  YM_CHECK(st.adam.m.size() == pcount && st.adam.v.size() == pcount,
           "state file: moment vectors truncated");
  return st;
}

void write_history_csv(const std::string& path, span<const EpochStats> rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write history csv: " + path);
  f << "epoch,total,energy,boundary,curl,lr,batch_size,seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.3f\n", r.epoch,
                  r.total, r.energy, r.boundary, r.curl, r.lr, r.batch_size, r.seconds);
    f << buf;
  }
}

Batch probe_batch_for(const ProblemSpec& prob, const TrainConfig& cfg) {
  if (prob.case_id == CaseId::kBolza1D)
    return uniform_grid(case1_grid_spec(cfg.case1_grid, cfg.latent_lo, cfg.latent_hi));
  RngStream rng = RngStream::substream(cfg.master_seed, "probe");
  return stochastic_meshgrid(spec_2d(cfg.latent_lo, cfg.latent_hi),
                             static_cast<std::size_t>(cfg.probe_batch), rng, cfg.latent_mode);
}

TrainResult train(const ProblemSpec& prob, const NetworkConfig& ncfg, const TrainConfig& cfg,
                  const std::string& resume_state) {
  YM_CHECK(cfg.epochs >= 0, "train: epochs must be >= 0");
  YM_CHECK(ncfg.input_dim == input_dim(prob.case_id), "train: network/case dimension mismatch");

  const bool to_disk = !cfg.out_dir.empty();
  fs::path ckpt_dir;
  if (to_disk) {
    ckpt_dir = fs::path(cfg.out_dir) / "checkpoints";
    fs::create_directories(ckpt_dir);
  }

  TrainResult res;
  res.net = init_xavier(ncfg);
  const std::size_t P = res.net.params.size();

  TrainState st;
  if (!resume_state.empty()) {
    st = load_train_state(resume_state);
    YM_CHECK(st.adam.m.size() == P, "resume: state does not match network size");
    res.net = load_checkpoint((ckpt_dir / ckpt_name(st.epoch)).string());
  } else {
    st.adam = AdamState(P, cfg.adam);
    st.sched = PlateauScheduler(cfg.plateau);
    st.batch_rng = RngStream::substream(cfg.master_seed, "batching").serialize();
    if (to_disk) {
      save_checkpoint(res.net, (ckpt_dir / ckpt_name(0)).string());
      save_train_state(st, (ckpt_dir / state_name(0)).string());
    }
  }

  LossProgram prog(ncfg, prob, cfg.engine);
  RngStream batch_rng(0);
  batch_rng.deserialize(st.batch_rng);

  const bool is_1d = prob.case_id == CaseId::kBolza1D;
  Batch grid;
  if (is_1d) grid = uniform_grid(case1_grid_spec(cfg.case1_grid, cfg.latent_lo, cfg.latent_hi));
  const GridSpec tuple_spec = spec_2d(cfg.latent_lo, cfg.latent_hi);

  std::vector<double> grad(P, 0.0);

  auto save_all = [&](int epoch) {
    if (!to_disk) return;
    save_checkpoint(res.net, (ckpt_dir / ckpt_name(epoch)).string());
    st.epoch = epoch;
    st.batch_rng = batch_rng.serialize();
    save_train_state(st, (ckpt_dir / state_name(epoch)).string());
    write_history_csv((fs::path(cfg.out_dir) / "history.csv").string(), st.history);
  };

  for (int epoch = st.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    Batch batch;
    const Batch* bp = &grid;
    int bsize;
    if (is_1d) {
      if (cfg.case1_subsample > 0) {
        int keep[2] = {cfg.case1_subsample, cfg.case1_subsample};
        batch = subsample_mesh(grid, span<const int>(keep, 2), batch_rng);
        bp = &batch;
      }
      bsize = static_cast<int>(bp->size());
    } else {
      bsize = batch_schedule(epoch, cfg.growth);
      batch = stochastic_meshgrid(tuple_spec, static_cast<std::size_t>(bsize), batch_rng,
                                  cfg.latent_mode);
      bp = &batch;
    }

    LossBreakdown b = prog.evaluate(res.net.params, *bp, grad);
    if (const char* term = first_nonfinite_term(b)) {
      res.failed = true;
      res.failure_term = term;
      res.stopped_epoch = epoch;
      break;
    }
    if (auto bad = adam_step(st.adam, res.net.params, grad)) {
      res.failed = true;
      res.failure_term = prog.diagnose(res.net.params, *bp);
      res.stopped_epoch = epoch;
      (void)bad;
      break;
    }

    EpochStats row;
    row.epoch = epoch;
    row.total = b.total;
    row.energy = b.energy;
    row.boundary = b.boundary_sum();
    row.curl = b.curl;
    row.lr = st.adam.lr;  // rate used by this epoch's update
    row.batch_size = bsize;
    // The scheduler watches a patience-window trailing mean of the epoch
    // loss: raw per-epoch values on small stochastic batches are noise, and
    // one lucky batch would freeze `best` and stall the rate at its floor.
    st.sched.step(trailing_total(st.history, b.total, st.sched.cfg.patience), st.adam.lr);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    st.history.push_back(row);

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) save_all(epoch);
  }

  if (!res.failed) res.stopped_epoch = cfg.epochs;
  res.record.epochs = st.history;

  if (!res.failed) {
    Batch probe = probe_batch_for(prob, cfg);
    res.final_probe = prog.evaluate(res.net.params, probe, {});
    if (to_disk) {
      save_all(res.stopped_epoch);
      save_checkpoint(res.net, (fs::path(ckpt_dir) / "ckpt_final.ymnet").string());
      st.epoch = res.stopped_epoch;
      save_train_state(st, (fs::path(ckpt_dir) / "state_final.ymstate").string());
    }
  } else if (to_disk) {
    // Keep the last good checkpoint; record the failure beside it.
    std::ofstream marker(fs::path(cfg.out_dir) / "FAILED");
    marker << "epoch=" << res.stopped_epoch << " term=" << res.failure_term << "\n";
    write_history_csv((fs::path(cfg.out_dir) / "history.csv").string(), st.history);
  }
  return res;
}

}  // namespace ym
