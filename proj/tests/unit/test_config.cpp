#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dmeg/config.hpp"
#include "dmeg/error.hpp"
#include "dmeg/seeding.hpp"

using namespace dmeg;
using nlohmann::json;

TEST_CASE("defaults follow the reference protocol") {
  const auto cfg = config_from_json(json::object());
  CHECK(cfg.hidden_dim == 100);
  CHECK(cfg.depth == 19);
  CHECK(cfg.eta == 0.01);
  CHECK(cfg.eta_lambda == 0.01);
  CHECK(cfg.learning_rate == 0.001);
  CHECK(cfg.momentum == 0.9);
  CHECK(cfg.lambda_max == 10.0);
  CHECK(cfg.objective.gamma == 0.2);
  CHECK(cfg.objective.loss_clip == 4.0);
  CHECK(cfg.bl_depths == std::vector<std::size_t>{2, 3, 4, 8, 16});
  CHECK(cfg.gamma_sweep == std::vector<double>{0.15, 0.18, 0.21, 0.24, 0.27, 0.3});
  CHECK(cfg.window == 10000);
  CHECK_FALSE(cfg.artificial_expert);
}

TEST_CASE("canonical round trip and hash") {
  const auto doc = json::parse(R"({
    "stream": {"kind": "concept_drift_synthetic", "length": 1234, "dim": 50, "teacher_width": 16},
    "architecture": {"hidden_dim": 32, "depth": 8},
    "objective": {"gamma": 0.21, "conditioning": "class_normalized"},
    "rates": {"mode": "theorem"},
    "algorithm": "bl", "seed": 99, "window": 500, "artificial_expert": true
  })");
  const auto cfg = config_from_json(doc);
  CHECK(cfg.stream.kind == StreamKind::concept_drift_synthetic);
  CHECK(cfg.stream.teacher_width == 16);
  CHECK(cfg.objective.conditioning == Conditioning::class_normalized);
  CHECK(cfg.rate_mode == RateMode::theorem);
  CHECK(cfg.algorithm == Algorithm::bl);

  const auto canon = config_to_json(cfg);
  const auto again = config_from_json(canon);
  CHECK(config_to_json(again) == canon);
  CHECK(config_hash(again) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);

  auto other = cfg;
  other.seed = 100;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"bogus": 1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"objective": {"gamma": 1.5}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"window": 0})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"gamma_sweep": [0.1, 0.0]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"architecture": {"depth": 0}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"algorithm": "hbp"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"stream": {"kind": "csv"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"seed": "one"})")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);

  const auto p = std::filesystem::temp_directory_path() / "dmeg_bad_cfg.json";
  std::ofstream(p) << "{ not json";
  CHECK_THROWS_AS(load_config(p), ConfigError);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, "stream") != derive_seed(1, "net"));
  CHECK(derive_seed(1, "stream") == derive_seed(1, "stream"));
  CHECK(derive_seed(1, "x", 0) != derive_seed(1, "x", 1));
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
