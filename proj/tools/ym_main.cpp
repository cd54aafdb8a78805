// Command line entry point: define a run, train it, analyze it, export
// plot-ready artifacts. Exit codes: 0 ok, 1 config error, 2 numerical
// failure, 3 I/O error.

#include <CLI11.hpp>
#include <iostream>

#include "ym/run.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::string case_name;
  int epochs = -2;  // -2: not given
  long long seed = -1;
  std::string out;
  double lambda1 = -1, lambda2 = -1, lambda3 = -1;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  int batch_initial = -1;
  std::string trunk_mode;
  std::string latent_sampling;
  int threads = -1;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_file, "configuration file (key = value with sections)");
  app->add_option("--case", f.case_name, "bolza-1d | quasi-1d | four-well | two-well-affine");
  app->add_option("--epochs", f.epochs, "training epochs");
  app->add_option("--seed", f.seed, "master seed (init/batching/analysis substreams)");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--lambda1", f.lambda1, "energy weight");
  app->add_option("--lambda2", f.lambda2, "boundary penalty weight");
  app->add_option("--lambda3", f.lambda3, "curl penalty weight");
  app->add_option("--alpha", f.alpha, "affine boundary slope (two-well-affine)");
  app->add_option("--batch-initial", f.batch_initial, "initial stochastic batch size");
  app->add_option("--trunk-mode", f.trunk_mode, "literal-block | lifted-trunk");
  app->add_option("--latent-sampling", f.latent_sampling, "weighted-uniform | importance-normal");
  app->add_option("--threads", f.threads, "worker threads (0 = auto)");
}

ym::RunConfig build_config(const CommonFlags& f) {
  ym::RunConfig cfg;
  if (!f.config_file.empty()) cfg = ym::load_config_file(f.config_file);
  else cfg.train.epochs = -1;
  // Flags win over the file.
  if (!f.case_name.empty()) cfg.problem.case_id = ym::case_from_string(f.case_name);
  if (f.epochs != -2) cfg.train.epochs = f.epochs;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.lambda1 >= 0) cfg.problem.weights.lambda1 = f.lambda1;
  if (f.lambda2 >= 0) cfg.problem.weights.lambda2 = f.lambda2;
  if (f.lambda3 >= 0) cfg.problem.weights.lambda3 = f.lambda3;
  if (!std::isnan(f.alpha)) cfg.problem.alpha = f.alpha;
  if (f.batch_initial >= 1) cfg.train.growth.initial = f.batch_initial;
  if (!f.trunk_mode.empty()) cfg.network.trunk = ym::trunk_mode_from_string(f.trunk_mode);
  if (!f.latent_sampling.empty())
    cfg.train.latent_mode = ym::latent_sampling_from_string(f.latent_sampling);
  if (f.threads >= 0) cfg.train.engine.threads = f.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ym: learn pushforward representations of gradient Young measures"};
  app.require_subcommand(1);

  CommonFlags run_flags, analyze_flags;
  bool resume = false;
  std::string checkpoint;
  int check_threads = 0;

  CLI::App* run_cmd = app.add_subcommand("run", "train a case, analyze it, export artifacts");
  add_common(run_cmd, run_flags);
  run_cmd->add_flag("--resume", resume, "continue from the latest state in the output directory");

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "analyze a stored checkpoint");
  add_common(analyze_cmd, analyze_flags);
  analyze_cmd->add_option("--checkpoint", checkpoint, "checkpoint file (.ymnet)")->required();

  CLI::App* check_cmd = app.add_subcommand("check", "run gradient/quadrature self-tests");
  check_cmd->add_option("--threads", check_threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) return ym::run_command(build_config(run_flags), resume);
    if (analyze_cmd->parsed()) return ym::analyze_command(checkpoint, build_config(analyze_flags));
    if (check_cmd->parsed()) return ym::check_command(check_threads);
  } catch (const ym::invalid_input& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ym::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const ym::io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
