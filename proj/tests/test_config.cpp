#include <doctest.h>

#include "ym/runconfig.hpp"

using namespace ym;

TEST_CASE("config serialization round-trips exactly") {
  RunConfig cfg;
  cfg.problem.case_id = CaseId::kTwoWellAffine;
  cfg.problem.alpha = 0.01;
  cfg.problem.weights = {1.5, 7.0, 0.25};
  cfg.network.depth = 3;
  cfg.network.width = 11;
  cfg.network.trunk = TrunkMode::kLiftedTrunk;
  cfg.seed = 999;
  cfg.out_dir = "runs/test";
  cfg.train.epochs = 123;
  cfg.train.growth = {7, 3.0, 100, 512};
  cfg.train.latent_mode = LatentSampling::kImportanceNormal;
  cfg.analysis.anchors = {{0.1, 0.2}, {0.3, 0.4}};
  cfg.resolve();

  const std::string text = serialize_config(cfg);
  RunConfig back = parse_config_text(text);
  back.resolve();
  CHECK(serialize_config(back) == text);
  CHECK(back.problem.case_id == cfg.problem.case_id);
  CHECK(back.problem.weights.lambda2 == cfg.problem.weights.lambda2);
  CHECK(back.network.trunk == cfg.network.trunk);
  CHECK(back.train.growth.period == cfg.train.growth.period);
  CHECK(back.train.latent_mode == cfg.train.latent_mode);
  CHECK(back.analysis.anchors == cfg.analysis.anchors);
}

TEST_CASE("unknown and malformed config fields are named individually") {
  CHECK_THROWS_WITH_AS(parse_config_text("[run]\nbogus = 3\n"),
                       "unknown config field 'run.bogus'", invalid_input);
  CHECK_THROWS_AS(parse_config_text("[train]\nepochs = not-a-number\n"), invalid_input);
  try {
    parse_config_text("[train]\nepochs = banana\n");
  } catch (const invalid_input& e) {
    CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("stray line without equals\n"), invalid_input);
}

TEST_CASE("resolve applies per-case epoch defaults and derived dimensions") {
  RunConfig cfg = parse_config_text("[run]\ncase = bolza-1d\n");
  cfg.resolve();
  CHECK(cfg.train.epochs == 2000);
  CHECK(cfg.network.input_dim == 2);

  RunConfig cfg2 = parse_config_text("[run]\ncase = four-well\n");
  cfg2.resolve();
  CHECK(cfg2.train.epochs == 2000);
  CHECK(cfg2.network.input_dim == 4);

  RunConfig cfg3 = parse_config_text("[run]\ncase = four-well\n[train]\nepochs = 77\n");
  cfg3.resolve();
  CHECK(cfg3.train.epochs == 77);
}

TEST_CASE("resolve rejects invalid fields with their names") {
  RunConfig cfg = parse_config_text("[loss]\nlambda1 = 0\n");
  CHECK_THROWS_AS(cfg.resolve(), invalid_input);
  try {
    cfg.resolve();
  } catch (const invalid_input& e) {
    CHECK(std::string(e.what()).find("lambda1") != std::string::npos);
  }
  RunConfig cfg2 = parse_config_text("[network]\ndepth = 0\n");
  CHECK_THROWS_AS(cfg2.resolve(), invalid_input);
}

TEST_CASE("default configuration matches the published recipe") {
  RunConfig cfg;
  cfg.problem.case_id = CaseId::kQuasi1D;
  cfg.resolve();
  CHECK(cfg.network.depth == 4);
  CHECK(cfg.network.width == 25);
  CHECK(cfg.train.adam.lr0 == 1e-3);
  CHECK(cfg.train.growth.initial == 5);
  CHECK(cfg.problem.weights.lambda1 == 1.0);
  CHECK(cfg.problem.weights.lambda2 == 10.0);
  CHECK(cfg.problem.weights.lambda3 == 1.0);
  CHECK(cfg.problem.alpha == 1e-2);
  CHECK(cfg.analysis.hist.bins == 81);
  CHECK(cfg.analysis.hist_samples == 10000);
  REQUIRE(cfg.analysis.anchors.size() == 3);
  CHECK(cfg.analysis.anchors[0] == std::array<double, 2>{0.5, 0.5});
  CHECK(cfg.analysis.anchors[1] == std::array<double, 2>{0.25, 0.75});
  CHECK(cfg.analysis.anchors[2] == std::array<double, 2>{0.75, 0.25});
}
