#include "ym/runconfig.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ym {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw invalid_input("config field '" + key + "': not a number: '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw invalid_input("config field '" + key + "': not an integer: '" + v + "'");
  }
}

std::vector<std::array<double, 2>> parse_anchors(const std::string& key, const std::string& v) {
  std::vector<std::array<double, 2>> out;
  std::istringstream is(v);
  std::string pair;
  while (std::getline(is, pair, ';')) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos)
      throw invalid_input("config field '" + key + "': expected x,y pairs separated by ';'");
    out.push_back({parse_double(key, trim(pair.substr(0, comma))),
                   parse_double(key, trim(pair.substr(comma + 1)))});
  }
  if (out.empty()) throw invalid_input("config field '" + key + "': empty anchor list");
  return out;
}

}  // namespace

void RunConfig::resolve() {
  network.input_dim = input_dim(problem.case_id);
  network.seed = seed;
  train.master_seed = seed;
  train.out_dir = out_dir;
  if (train.epochs < 0) train.epochs = 2000;

  if (network.depth < 1) throw invalid_input("config field 'network.depth': must be >= 1");
  if (network.width < 1) throw invalid_input("config field 'network.width': must be >= 1");
  if (!(problem.weights.lambda1 > 0.0))
    throw invalid_input("config field 'loss.lambda1': must be > 0");
  if (problem.weights.lambda2 < 0.0 || problem.weights.lambda3 < 0.0)
    throw invalid_input("config field 'loss.lambda2/lambda3': must be >= 0");
  if (!std::isfinite(problem.alpha)) throw invalid_input("config field 'loss.alpha': must be finite");
  if (train.growth.initial < 1)
    throw invalid_input("config field 'train.batch_initial': must be >= 1");
  if (train.growth.multiplier < 1.0)
    throw invalid_input("config field 'train.batch_multiplier': must be >= 1");
  if (train.case1_grid < 2) throw invalid_input("config field 'sampling.case1_grid': must be >= 2");
  if (problem.bq.boundary_points < 2)
    throw invalid_input("config field 'sampling.aux_boundary_points': must be >= 2");
  if (problem.bq.latent_points < 2)
    throw invalid_input("config field 'sampling.aux_latent_points': must be >= 2");
  if (analysis.hist.bins < 1) throw invalid_input("config field 'analysis.hist_bins': must be >= 1");
  if (analysis.hist_samples < 1)
    throw invalid_input("config field 'analysis.hist_samples': must be >= 1");
  if (analysis.probe_grid < 2)
    throw invalid_input("config field 'analysis.probe_grid': must be >= 2");
  if (analysis.latent_grid < 2)
    throw invalid_input("config field 'analysis.latent_grid': must be >= 2");
  if (analysis.probes_1d < 2)
    throw invalid_input("config field 'analysis.probes_1d': must be >= 2");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  cfg.train.epochs = -1;  // resolve() picks the per-case default unless set
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_input("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "run.case") cfg.problem.case_id = case_from_string(val);
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "run.out") cfg.out_dir = val;
    else if (key == "run.threads") cfg.train.engine.threads = static_cast<int>(parse_int(key, val));
    else if (key == "network.depth") cfg.network.depth = static_cast<int>(parse_int(key, val));
    else if (key == "network.width") cfg.network.width = static_cast<int>(parse_int(key, val));
    else if (key == "network.trunk") cfg.network.trunk = trunk_mode_from_string(val);
    else if (key == "loss.lambda1") cfg.problem.weights.lambda1 = parse_double(key, val);
    else if (key == "loss.lambda2") cfg.problem.weights.lambda2 = parse_double(key, val);
    else if (key == "loss.lambda3") cfg.problem.weights.lambda3 = parse_double(key, val);
    else if (key == "loss.alpha") cfg.problem.alpha = parse_double(key, val);
    else if (key == "sampling.latent_mode") cfg.train.latent_mode = latent_sampling_from_string(val);
    else if (key == "sampling.latent_lo") cfg.train.latent_lo = parse_double(key, val);
    else if (key == "sampling.latent_hi") cfg.train.latent_hi = parse_double(key, val);
    else if (key == "sampling.case1_grid") cfg.train.case1_grid = static_cast<int>(parse_int(key, val));
    else if (key == "sampling.case1_subsample")
      cfg.train.case1_subsample = static_cast<int>(parse_int(key, val));
    else if (key == "sampling.aux_boundary_points")
      cfg.problem.bq.boundary_points = static_cast<int>(parse_int(key, val));
    else if (key == "sampling.aux_latent_points")
      cfg.problem.bq.latent_points = static_cast<int>(parse_int(key, val));
    else if (key == "train.epochs") cfg.train.epochs = static_cast<int>(parse_int(key, val));
    else if (key == "train.batch_initial")
      cfg.train.growth.initial = static_cast<int>(parse_int(key, val));
    else if (key == "train.batch_multiplier") cfg.train.growth.multiplier = parse_double(key, val);
    else if (key == "train.batch_period")
      cfg.train.growth.period = static_cast<int>(parse_int(key, val));
    else if (key == "train.batch_cap") cfg.train.growth.cap = static_cast<int>(parse_int(key, val));
    else if (key == "train.checkpoint_every")
      cfg.train.checkpoint_every = static_cast<int>(parse_int(key, val));
    else if (key == "train.probe_batch")
      cfg.train.probe_batch = static_cast<int>(parse_int(key, val));
    else if (key == "train.lr") cfg.train.adam.lr0 = parse_double(key, val);
    else if (key == "train.beta1") cfg.train.adam.beta1 = parse_double(key, val);
    else if (key == "train.beta2") cfg.train.adam.beta2 = parse_double(key, val);
    else if (key == "train.eps") cfg.train.adam.eps = parse_double(key, val);
    else if (key == "train.plateau_factor") cfg.train.plateau.factor = parse_double(key, val);
    else if (key == "train.plateau_patience")
      cfg.train.plateau.patience = static_cast<int>(parse_int(key, val));
    else if (key == "train.plateau_min_lr") cfg.train.plateau.min_lr = parse_double(key, val);
    else if (key == "train.plateau_threshold")
      cfg.train.plateau.rel_improve = parse_double(key, val);
    else if (key == "analysis.hist_lo") cfg.analysis.hist.lo = parse_double(key, val);
    else if (key == "analysis.hist_hi") cfg.analysis.hist.hi = parse_double(key, val);
    else if (key == "analysis.hist_bins")
      cfg.analysis.hist.bins = static_cast<int>(parse_int(key, val));
    else if (key == "analysis.hist_samples")
      cfg.analysis.hist_samples = static_cast<int>(parse_int(key, val));
    else if (key == "analysis.probe_grid")
      cfg.analysis.probe_grid = static_cast<int>(parse_int(key, val));
    else if (key == "analysis.latent_grid")
      cfg.analysis.latent_grid = static_cast<int>(parse_int(key, val));
    else if (key == "analysis.anchors") cfg.analysis.anchors = parse_anchors(key, val);
    else if (key == "analysis.probes_1d")
      cfg.analysis.probes_1d = static_cast<int>(parse_int(key, val));
    else throw invalid_input("unknown config field '" + key + "'");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\n";
  os << "case = " << to_string(cfg.problem.case_id) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "out = " << cfg.out_dir << "\n";
  os << "threads = " << cfg.train.engine.threads << "\n";
  os << "\n[network]\n";
  os << "depth = " << cfg.network.depth << "\n";
  os << "width = " << cfg.network.width << "\n";
  os << "trunk = " << to_string(cfg.network.trunk) << "\n";
  os << "\n[loss]\n";
  os << "lambda1 = " << fmt_double(cfg.problem.weights.lambda1) << "\n";
  os << "lambda2 = " << fmt_double(cfg.problem.weights.lambda2) << "\n";
  os << "lambda3 = " << fmt_double(cfg.problem.weights.lambda3) << "\n";
  os << "alpha = " << fmt_double(cfg.problem.alpha) << "\n";
  os << "\n[sampling]\n";
  os << "latent_mode = " << to_string(cfg.train.latent_mode) << "\n";
  os << "latent_lo = " << fmt_double(cfg.train.latent_lo) << "\n";
  os << "latent_hi = " << fmt_double(cfg.train.latent_hi) << "\n";
  os << "case1_grid = " << cfg.train.case1_grid << "\n";
  os << "case1_subsample = " << cfg.train.case1_subsample << "\n";
  os << "aux_boundary_points = " << cfg.problem.bq.boundary_points << "\n";
  os << "aux_latent_points = " << cfg.problem.bq.latent_points << "\n";
  os << "\n[train]\n";
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "batch_initial = " << cfg.train.growth.initial << "\n";
  os << "batch_multiplier = " << fmt_double(cfg.train.growth.multiplier) << "\n";
  os << "batch_period = " << cfg.train.growth.period << "\n";
  os << "batch_cap = " << cfg.train.growth.cap << "\n";
  os << "checkpoint_every = " << cfg.train.checkpoint_every << "\n";
  os << "probe_batch = " << cfg.train.probe_batch << "\n";
  os << "lr = " << fmt_double(cfg.train.adam.lr0) << "\n";
  os << "beta1 = " << fmt_double(cfg.train.adam.beta1) << "\n";
  os << "beta2 = " << fmt_double(cfg.train.adam.beta2) << "\n";
  os << "eps = " << fmt_double(cfg.train.adam.eps) << "\n";
  os << "plateau_factor = " << fmt_double(cfg.train.plateau.factor) << "\n";
  os << "plateau_patience = " << cfg.train.plateau.patience << "\n";
  os << "plateau_min_lr = " << fmt_double(cfg.train.plateau.min_lr) << "\n";
  os << "plateau_threshold = " << fmt_double(cfg.train.plateau.rel_improve) << "\n";
  os << "\n[analysis]\n";
  os << "hist_lo = " << fmt_double(cfg.analysis.hist.lo) << "\n";
  os << "hist_hi = " << fmt_double(cfg.analysis.hist.hi) << "\n";
  os << "hist_bins = " << cfg.analysis.hist.bins << "\n";
  os << "hist_samples = " << cfg.analysis.hist_samples << "\n";
  os << "probe_grid = " << cfg.analysis.probe_grid << "\n";
  os << "latent_grid = " << cfg.analysis.latent_grid << "\n";
  os << "anchors = ";
  for (std::size_t i = 0; i < cfg.analysis.anchors.size(); ++i) {
    if (i) os << ";";
    os << fmt_double(cfg.analysis.anchors[i][0]) << "," << fmt_double(cfg.analysis.anchors[i][1]);
  }
  os << "\n";
  os << "probes_1d = " << cfg.analysis.probes_1d << "\n";
  return os.str();
}

}  // namespace ym
