#include "dmeg/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "dmeg/error.hpp"
#include "dmeg/seeding.hpp"

namespace dmeg {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_optional(const json& obj, const std::string& where, const char* key,
                   std::optional<double>& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  double v = 0.0;
  read(obj, where, key, v);
  out = v;
}

StreamKind stream_kind_from_string(const std::string& s) {
  if (s == "csv") return StreamKind::csv;
  if (s == "stationary_synthetic") return StreamKind::stationary_synthetic;
  if (s == "concept_drift_synthetic") return StreamKind::concept_drift_synthetic;
  throw ConfigError("unknown stream kind '" + s + "'");
}

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "prior_weighted") return Conditioning::prior_weighted;
  if (s == "class_normalized") return Conditioning::class_normalized;
  throw ConfigError("unknown conditioning '" + s + "'");
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::dmeg: return "dmeg";
    case Algorithm::bl: return "bl";
    case Algorithm::mol: return "mol";
    case Algorithm::dmeg_unconstrained: return "dmeg_unconstrained";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "dmeg") return Algorithm::dmeg;
  if (s == "bl") return Algorithm::bl;
  if (s == "mol") return Algorithm::mol;
  if (s == "dmeg_unconstrained") return Algorithm::dmeg_unconstrained;
  throw ConfigError("unknown algorithm '" + s + "'");
}

std::string to_string(StreamKind k) {
  switch (k) {
    case StreamKind::csv: return "csv";
    case StreamKind::stationary_synthetic: return "stationary_synthetic";
    case StreamKind::concept_drift_synthetic: return "concept_drift_synthetic";
  }
  return "?";
}

std::string to_string(Conditioning c) {
  return c == Conditioning::prior_weighted ? "prior_weighted" : "class_normalized";
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig cfg;
  reject_unknown(doc, "config",
                 {"stream", "architecture", "objective", "rates", "lambda_max", "optimizer",
                  "algorithm", "bl_depths", "bl_learning_rate", "gamma_sweep", "seed",
                  "output_dir", "window", "artificial_expert", "write_predictions",
                  "write_checkpoint"});

  if (doc.contains("stream")) {
    const json& s = doc.at("stream");
    reject_unknown(s, "stream",
                   {"kind", "length", "path", "label_column", "feature_columns", "dim",
                    "class_prior", "separation", "num_segments", "teacher_depth",
                    "teacher_width", "teacher_logit_scale", "normalize"});
    std::string kind = to_string(cfg.stream.kind);
    read(s, "stream", "kind", kind);
    cfg.stream.kind = stream_kind_from_string(kind);
    read(s, "stream", "length", cfg.stream.length);
    std::string path;
    read(s, "stream", "path", path);
    cfg.stream.path = path;
    read(s, "stream", "label_column", cfg.stream.label_column);
    read(s, "stream", "feature_columns", cfg.stream.feature_columns);
    read(s, "stream", "dim", cfg.stream.dim);
    read(s, "stream", "class_prior", cfg.stream.class_prior);
    read(s, "stream", "separation", cfg.stream.separation);
    read(s, "stream", "num_segments", cfg.stream.num_segments);
    read(s, "stream", "teacher_depth", cfg.stream.teacher_depth);
    read(s, "stream", "teacher_width", cfg.stream.teacher_width);
    read(s, "stream", "teacher_logit_scale", cfg.stream.teacher_logit_scale);
    read(s, "stream", "normalize", cfg.normalize);
  }
  if (doc.contains("architecture")) {
    const json& a = doc.at("architecture");
    reject_unknown(a, "architecture", {"hidden_dim", "depth"});
    read(a, "architecture", "hidden_dim", cfg.hidden_dim);
    read(a, "architecture", "depth", cfg.depth);
  }
  if (doc.contains("objective")) {
    const json& o = doc.at("objective");
    reject_unknown(o, "objective",
                   {"gamma", "constraint_class", "conditioning", "loss_clip", "g1", "g2"});
    read(o, "objective", "gamma", cfg.objective.gamma);
    read(o, "objective", "constraint_class", cfg.objective.constraint_class);
    std::string cond = to_string(cfg.objective.conditioning);
    read(o, "objective", "conditioning", cond);
    cfg.objective.conditioning = conditioning_from_string(cond);
    read(o, "objective", "loss_clip", cfg.objective.loss_clip);
    std::optional<double> g1, g2;
    read_optional(o, "objective", "g1", g1);
    read_optional(o, "objective", "g2", g2);
    cfg.objective.g1 = g1.value_or(0.0);
    cfg.objective.g2 = g2.value_or(0.0);
  }
  if (doc.contains("rates")) {
    const json& r = doc.at("rates");
    reject_unknown(r, "rates", {"mode", "eta", "eta_lambda"});
    std::string mode = "fixed";
    read(r, "rates", "mode", mode);
    if (mode == "fixed") {
      cfg.rate_mode = RateMode::fixed;
    } else if (mode == "theorem") {
      cfg.rate_mode = RateMode::theorem;
    } else {
      throw ConfigError("unknown rate mode '" + mode + "'");
    }
    read(r, "rates", "eta", cfg.eta);
    read(r, "rates", "eta_lambda", cfg.eta_lambda);
  }
  read(doc, "config", "lambda_max", cfg.lambda_max);
  if (doc.contains("optimizer")) {
    const json& o = doc.at("optimizer");
    reject_unknown(o, "optimizer", {"learning_rate", "momentum"});
    read(o, "optimizer", "learning_rate", cfg.learning_rate);
    read(o, "optimizer", "momentum", cfg.momentum);
  }
  if (doc.contains("algorithm")) {
    std::string a;
    read(doc, "config", "algorithm", a);
    cfg.algorithm = algorithm_from_string(a);
  }
  read(doc, "config", "bl_depths", cfg.bl_depths);
  read_optional(doc, "config", "bl_learning_rate", cfg.bl_learning_rate);
  read(doc, "config", "gamma_sweep", cfg.gamma_sweep);
  read(doc, "config", "seed", cfg.seed);
  std::string out = cfg.output_dir.string();
  read(doc, "config", "output_dir", out);
  cfg.output_dir = out;
  read(doc, "config", "window", cfg.window);
  read(doc, "config", "artificial_expert", cfg.artificial_expert);
  read(doc, "config", "write_predictions", cfg.write_predictions);
  read(doc, "config", "write_checkpoint", cfg.write_checkpoint);

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

void validate(const ExperimentConfig& cfg) {
  try {
    cfg.objective.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  }
  for (double g : cfg.gamma_sweep) {
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("every gamma_sweep value must lie in (0, 1)");
  }
  if (cfg.window < 1) throw ConfigError("window must be >= 1");
  if (cfg.depth < 1 || cfg.hidden_dim < 1) throw ConfigError("architecture dims must be >= 1");
  for (std::size_t d : cfg.bl_depths) {
    if (d < 2) throw ConfigError("bl_depths entries must be >= 2 (one hidden layer plus output)");
  }
  if (!(cfg.lambda_max >= 1.0)) throw ConfigError("lambda_max must be >= 1");
  if (!(cfg.eta > 0.0) || !(cfg.eta_lambda > 0.0)) throw ConfigError("rates must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (cfg.bl_learning_rate && !(*cfg.bl_learning_rate > 0.0)) {
    throw ConfigError("bl_learning_rate must be positive");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (cfg.stream.kind == StreamKind::csv) {
    if (cfg.stream.path.empty()) throw ConfigError("csv stream needs a path");
    if (!std::filesystem::exists(cfg.stream.path)) {
      throw ConfigError("csv path " + cfg.stream.path.string() + " does not exist");
    }
  } else {
    if (cfg.stream.dim < 1) throw ConfigError("stream dim must be >= 1");
    if (cfg.stream.num_segments < 1) throw ConfigError("num_segments must be >= 1");
    if (cfg.stream.kind == StreamKind::stationary_synthetic &&
        !(cfg.stream.class_prior > 0.0 && cfg.stream.class_prior < 1.0)) {
      throw ConfigError("class_prior must lie in (0, 1)");
    }
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto opt = [](double v) { return v > 0.0 ? json(v) : json(nullptr); };
  json stream = {{"kind", to_string(cfg.stream.kind)},
                 {"length", cfg.stream.length},
                 {"dim", cfg.stream.dim},
                 {"class_prior", cfg.stream.class_prior},
                 {"separation", cfg.stream.separation},
                 {"num_segments", cfg.stream.num_segments},
                 {"teacher_depth", cfg.stream.teacher_depth},
                 {"teacher_width", cfg.stream.teacher_width},
                 {"teacher_logit_scale", cfg.stream.teacher_logit_scale},
                 {"path", cfg.stream.path.string()},
                 {"label_column", cfg.stream.label_column},
                 {"feature_columns", cfg.stream.feature_columns},
                 {"normalize", cfg.normalize}};
  return {
      {"stream", stream},
      {"architecture", {{"hidden_dim", cfg.hidden_dim}, {"depth", cfg.depth}}},
      {"objective",
       {{"gamma", cfg.objective.gamma},
        {"constraint_class", cfg.objective.constraint_class},
        {"conditioning", to_string(cfg.objective.conditioning)},
        {"loss_clip", cfg.objective.loss_clip},
        {"g1", opt(cfg.objective.g1)},
        {"g2", opt(cfg.objective.g2)}}},
      {"rates",
       {{"mode", cfg.rate_mode == RateMode::fixed ? "fixed" : "theorem"},
        {"eta", cfg.eta},
        {"eta_lambda", cfg.eta_lambda}}},
      {"lambda_max", cfg.lambda_max},
      {"optimizer", {{"learning_rate", cfg.learning_rate}, {"momentum", cfg.momentum}}},
      {"algorithm", to_string(cfg.algorithm)},
      {"bl_depths", cfg.bl_depths},
      {"bl_learning_rate", cfg.bl_learning_rate ? json(*cfg.bl_learning_rate) : json(nullptr)},
      {"gamma_sweep", cfg.gamma_sweep},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir.string()},
      {"window", cfg.window},
      {"artificial_expert", cfg.artificial_expert},
      {"write_predictions", cfg.write_predictions},
      {"write_checkpoint", cfg.write_checkpoint},
  };
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_to_json(cfg).dump())));
  return buf;
}

}  // namespace dmeg
