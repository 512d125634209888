#include "cli.hpp"

#include <CLI11.hpp>
#include <toml.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "repcause/confounding.hpp"
#include "repcause/estimators.hpp"
#include "repcause/experiments.hpp"
#include "repcause/intrinsic_dim.hpp"
#include "repcause/manifold.hpp"
#include "repcause/parallel.hpp"
#include "repcause/report_io.hpp"
#include "repcause/transforms.hpp"

namespace repcause::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptionDef {
  std::string name;  // config key; the flag is --name with '_' -> '-'
  std::string fallback;
  std::string help;
  bool echo = true;  // recorded in the output header
};

// Resolved key/value settings: flag, then config file, then default.
class Settings {
 public:
  void define(const OptionDef& def) {
    defs_.push_back(def);
    values_[def.name] = def.fallback;
  }

  void bind(CLI::App& app) {
    for (const OptionDef& def : defs_) {
      std::string flag = "--" + def.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (def.name.find('_') != std::string::npos) flag += ",--" + def.name;
      if (def.name == "input") {
        options_[def.name] = app.add_option("input", flags_[def.name], def.help);
      } else {
        options_[def.name] = app.add_option(flag, flags_[def.name], def.help);
      }
    }
    app.add_option("--config", config_path_, "TOML file with option values; flags take precedence");
  }

  void resolve() {
    if (!config_path_.empty()) load_config();
    for (const OptionDef& def : defs_) {
      if (options_[def.name]->count() > 0) values_[def.name] = flags_[def.name];
    }
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  long long integer(const std::string& key) const {
    const std::string& v = str(key);
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad(key, "an integer");
    return out;
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& v = str(key);
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad(key, "a non-negative integer");
    return out;
  }

  double real(const std::string& key) const {
    const std::string& v = str(key);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) bad(key, "a finite number");
    return out;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(key, "true or false");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(' ');
      const auto e = item.find_last_not_of(' ');
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }

  std::vector<Eigen::Index> index_list(const std::string& key) const {
    std::vector<Eigen::Index> out;
    for (const std::string& item : list(key)) {
      long long v = 0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size()) bad(key, "a comma-separated integer list");
      out.push_back(static_cast<Eigen::Index>(v));
    }
    return out;
  }

  // Sorted key/value pairs recorded in output headers.
  std::vector<std::pair<std::string, std::string>> echoed() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const OptionDef& def : defs_) {
      if (def.echo) out.emplace_back(def.name, values_.at(def.name));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  [[noreturn]] static void bad(const std::string& key, const std::string& expected) {
    throw UsageError("config key '" + key + "' must be " + expected);
  }

  static std::string node_to_string(const std::string& key, const toml::node& node) {
    if (auto s = node.as_string()) return s->get();
    if (auto i = node.as_integer()) return std::to_string(i->get());
    if (auto f = node.as_floating_point()) return format_number(f->get());
    if (auto b = node.as_boolean()) return b->get() ? "true" : "false";
    if (auto arr = node.as_array()) {
      std::string joined;
      for (const toml::node& item : *arr) {
        if (item.is_array() || item.is_table()) throw UsageError("config key '" + key + "' has a nested value");
        if (!joined.empty()) joined += ',';
        joined += node_to_string(key, item);
      }
      return joined;
    }
    throw UsageError("config key '" + key + "' has an unsupported value type");
  }

  void load_config() {
    toml::table table;
    try {
      table = toml::parse_file(config_path_);
    } catch (const toml::parse_error& e) {
      throw UsageError("cannot parse config " + config_path_ + ": " + std::string(e.description()));
    }
    for (const auto& [raw_key, node] : table) {
      std::string key(raw_key.str());
      std::replace(key.begin(), key.end(), '-', '_');
      if (!values_.contains(key)) throw UsageError("unknown config key '" + key + "'");
      values_[key] = node_to_string(key, node);
    }
  }

  std::vector<OptionDef> defs_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> flags_;
  std::map<std::string, CLI::Option*> options_;
  std::string config_path_;
};

// ---------------------------------------------------------------------------
// Option tables

void common_options(Settings& s, bool with_output) {
  s.define({"seed", "0", "seed for all randomness"});
  s.define({"threads", "0", "worker cap; 0 falls back to REPCAUSE_THREADS, then 1", false});
  if (with_output) s.define({"out", "-", "output path, '-' for standard output", false});
}

void mlp_options(Settings& s) {
  s.define({"mlp_depth", "4", "MLP hidden layers"});
  s.define({"mlp_width", "50", "MLP hidden units per layer"});
  s.define({"mlp_epochs", "200", "MLP epoch budget"});
  s.define({"mlp_lr", "0.001", "Adam learning rate"});
  s.define({"mlp_batch", "32", "mini-batch size"});
  s.define({"mlp_patience", "10", "epochs without validation improvement before stopping"});
}

void learner_options(Settings& s) {
  s.define({"l2_lambda", "0", "L2 penalty for logistic regression"});
  s.define({"lasso_lambda", "", "fixed L1 penalty; empty selects by 5-fold CV"});
  mlp_options(s);
  s.define({"forest_trees", "100", "trees per forest"});
  s.define({"forest_min_leaf", "5", "minimum leaf size"});
  s.define({"forest_max_depth", "0", "maximum depth, 0 for unbounded"});
}

void apply_mlp_options(const Settings& s, LearnerSpec& spec) {
  spec.mlp.depth = static_cast<int>(s.integer("mlp_depth"));
  spec.mlp.width = static_cast<int>(s.integer("mlp_width"));
  spec.mlp.epochs = static_cast<int>(s.integer("mlp_epochs"));
  spec.mlp.learning_rate = s.real("mlp_lr");
  spec.mlp.batch_size = static_cast<int>(s.integer("mlp_batch"));
  spec.mlp.patience = static_cast<int>(s.integer("mlp_patience"));
  spec.validate();
}

void apply_learner_options(const Settings& s, LearnerSpec& spec) {
  spec.l2_lambda = s.real("l2_lambda");
  if (!s.str("lasso_lambda").empty()) spec.penalty.lambda = s.real("lasso_lambda");
  apply_mlp_options(s, spec);
  spec.forest.trees = static_cast<int>(s.integer("forest_trees"));
  spec.forest.min_leaf = static_cast<int>(s.integer("forest_min_leaf"));
  spec.forest.max_depth = static_cast<int>(s.integer("forest_max_depth"));
  spec.validate();
}

void generator_options(Settings& s) {
  s.define({"kind", "label", "label | complex | product"});
  s.define({"n", "2000", "rows per dataset"});
  s.define({"d", "64", "ambient dimension"});
  s.define({"d_manifold", "3", "latent manifold dimension"});
  s.define({"map_seed", "0", "seed of the smooth embedding"});
  s.define({"curvature", "0.5", "amplitude of the embedding's sine features"});
  s.define({"frequency", "3", "frequency scale of the sine features"});
  s.define({"label_sharpness", "500", "steepness of the label feature, 0 disables it"});
  s.define({"label_coordinates", "1", "ambient coordinates replaced by the label feature"});
  s.define({"rotate", "false", "apply a fixed Haar rotation to the representations"});
  s.define({"true_ate", "2", "true average treatment effect"});
  s.define({"p_treat_high", "0.7", "treatment probability when label = 1"});
  s.define({"p_treat_low", "0.3", "treatment probability when label = 0"});
  s.define({"outcome_noise_sd", "1", "outcome noise standard deviation"});
  s.define({"label_coef", "3", "magnitude of the negative label coefficient"});
  s.define({"coefficient_seed", "0", "seed of the complex-confounding coefficients"});
  s.define({"latent_dim", "5", "autoencoder latent dimension"});
  s.define({"ae_hidden", "256,64", "autoencoder hidden widths"});
  s.define({"ae_epochs", "100", "autoencoder epoch budget"});
  s.define({"base_n", "3000", "autoencoder training pool size"});
  s.define({"product_sharpness", "50", "c in tanh(c * z_j)"});
  s.define({"product_strength", "1", "outcome loading on the product signal"});
}

ManifoldSpec manifold_from(const Settings& s) {
  ManifoldSpec m;
  m.n = s.integer("n");
  m.d_ambient = s.integer("d");
  m.d_manifold = s.integer("d_manifold");
  m.map_seed = s.u64("map_seed");
  m.curvature = s.real("curvature");
  m.frequency = s.real("frequency");
  m.label_sharpness = s.real("label_sharpness");
  m.label_coordinates = s.integer("label_coordinates");
  m.rotate = s.boolean("rotate");
  m.validate();
  return m;
}

ConfoundingSpec confounding_from(const Settings& s) {
  ConfoundingSpec c;
  c.kind = parse_confounding_kind(s.str("kind"));
  c.true_ate = s.real("true_ate");
  c.p_treat_high = s.real("p_treat_high");
  c.p_treat_low = s.real("p_treat_low");
  c.outcome_noise_sd = s.real("outcome_noise_sd");
  c.label_coef = s.real("label_coef");
  c.coefficient_seed = s.u64("coefficient_seed");
  c.latent_dim = static_cast<int>(s.integer("latent_dim"));
  c.product_sharpness = s.real("product_sharpness");
  c.product_strength = s.real("product_strength");
  c.validate();
  return c;
}

AutoencoderOptions autoencoder_from(const Settings& s) {
  AutoencoderOptions ae;
  ae.hidden.clear();
  for (Eigen::Index w : s.index_list("ae_hidden")) ae.hidden.push_back(static_cast<int>(w));
  ae.epochs = static_cast<int>(s.integer("ae_epochs"));
  ae.seed = s.u64("map_seed");
  return ae;
}

Generator generator_from(const Settings& s) {
  const ConfoundingSpec confounding = confounding_from(s);
  switch (confounding.kind) {
    case ConfoundingKind::label: return label_generator(manifold_from(s), confounding);
    case ConfoundingKind::complex:
      return complex_generator(manifold_from(s), confounding, autoencoder_from(s), s.integer("base_n"));
    case ConfoundingKind::hcm_product: return product_generator(s.integer("n"), s.integer("d"), confounding);
  }
  throw UsageError("unknown generator kind");
}

// ---------------------------------------------------------------------------
// Output

class Output {
 public:
  explicit Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw IoError("cannot open " + path + " for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::string csv_header(const std::string& command, const Settings& s) {
  std::string out = "# repcause " + std::string(kVersion) + " " + command + "\n";
  for (const auto& [key, value] : s.echoed()) out += "# " + key + " = " + value + "\n";
  return out;
}

Json meta_json(const std::string& command, const Settings& s) {
  Json meta;
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["seed"] = s.str("seed");
  Json config = Json::object();
  for (const auto& [key, value] : s.echoed()) config[key] = value;
  meta["config"] = config;
  return meta;
}

void write_json(const std::string& path, std::ostream& fallback, const Json& j) {
  Output out(path, fallback);
  out.stream() << j.dump(2) << '\n';
  out.finish();
}

// ---------------------------------------------------------------------------
// Commands

int cmd_validate(const Settings& s, std::ostream& out) {
  const RepresentationSet set = load_representations(s.str("input"));
  std::string flags;
  auto add = [&](bool present, const char* name) {
    if (!present) return;
    if (!flags.empty()) flags += ',';
    flags += name;
  };
  add(set.has_treatment(), "t");
  add(set.has_outcome(), "y");
  add(set.has_label(), "label");
  out << "n = " << set.n() << "\nd = " << set.d() << "\nflags = " << (flags.empty() ? "none" : flags) << '\n';
  const long long expect_d = s.integer("expect_d");
  if (expect_d > 0 && set.d() != expect_d) {
    throw ValidationError("expected d = " + std::to_string(expect_d) + ", found " + std::to_string(set.d()));
  }
  if (s.boolean("expect_label") && !set.has_label()) throw ValidationError("label flag is not set");
  return 0;
}

int cmd_estimate(const Settings& s, std::ostream& out) {
  const RepresentationSet set = load_representations(s.str("input"));
  const std::string method = s.str("method");
  std::string description = method;
  if (method == "s-learner") description += ":" + s.str("g");
  if (method == "dml-aipw" || method == "dml-plr") description += ":" + s.str("g") + ":" + s.str("m");
  EstimatorConfig config;
  try {
    config = parse_estimator(description);
  } catch (const InvalidSpec& e) {
    throw UsageError(std::string(e.what()) + " (config keys 'method', 'g', 'm')");
  }
  apply_learner_options(s, config.g);
  apply_learner_options(s, config.m);
  config.folds = static_cast<int>(s.integer("k"));
  config.clip_eps = s.real("clip_eps");
  config.level = s.real("level");
  if (!(config.level > 0.0 && config.level < 1.0)) throw UsageError("config key 'level' must lie in (0, 1)");

  const std::uint64_t seed = s.u64("seed");
  SimulatedData data{set, 0.0, {}, {}, {}, {}, {}, {}};
  AteReport report = run_estimator(config, data, seed);
  report.method = description;
  Json j;
  j["meta"] = meta_json("estimate", s);
  const Json body = report_json(report);
  for (const auto& [key, value] : body.items()) j[key] = value;
  write_json(s.str("out"), out, j);
  return 0;
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const std::string path = s.str("out");
  if (path.empty() || path == "-") throw UsageError("config key 'out' must name a .ptrz or .csv file");
  const Generator generator = generator_from(s);
  const SimulatedData data = generator(s.u64("seed"));
  if (std::filesystem::path(path).extension() == ".csv") {
    Output file(path, out);
    file.stream() << csv_header("simulate", s) << format_csv(data.set);
    file.finish();
  } else {
    save_representations(data.set, path);
  }
  Json j;
  j["meta"] = meta_json("simulate", s);
  j["n"] = data.set.n();
  j["d"] = data.set.d();
  j["true_ate"] = data.true_ate;
  if (data.outcome_coef.size() > 0) {
    j["propensity_coef"] = std::vector<double>(data.propensity_coef.begin(), data.propensity_coef.end());
    j["outcome_coef"] = std::vector<double>(data.outcome_coef.begin(), data.outcome_coef.end());
  }
  j["warnings"] = data.warnings;
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_experiment(const Settings& s, std::ostream& out) {
  std::vector<EstimatorConfig> estimators;
  for (const std::string& name : s.list("estimators")) {
    EstimatorConfig config;
    try {
      config = parse_estimator(name);
    } catch (const InvalidSpec& e) {
      throw UsageError(std::string(e.what()) + " (config key 'estimators')");
    }
    apply_learner_options(s, config.g);
    apply_learner_options(s, config.m);
    config.folds = static_cast<int>(s.integer("k"));
    config.clip_eps = s.real("clip_eps");
    config.level = s.real("level");
    estimators.push_back(config);
  }
  if (estimators.empty()) throw UsageError("config key 'estimators' is empty");
  const int reps = static_cast<int>(s.integer("reps"));
  const std::uint64_t seed = s.u64("seed");
  const Generator generator = generator_from(s);
  const CoverageResult result = run_coverage_experiment(generator, estimators, reps, seed);

  Output rows(s.str("out"), out);
  rows.stream() << csv_header("experiment", s) << coverage_csv(result);
  rows.finish();

  if (!s.str("summary").empty()) {
    Json j;
    j["meta"] = meta_json("experiment", s);
    Json list = Json::array();
    for (std::size_t e = 0; e < result.summaries.size(); ++e) {
      Json entry = summary_json(result.summaries[e]);
      std::vector<double> z;
      for (std::size_t r = e; r < result.rows.size(); r += estimators.size()) {
        const RepetitionRow& row = result.rows[r];
        if (row.report.std_error > 0.0) z.push_back((row.report.estimate - row.truth) / row.report.std_error);
      }
      if (z.size() >= 2) {
        const stats::KsResult ks = stats::ks_test_standard_normal(z);
        entry["ks_statistic"] = ks.statistic;
        entry["ks_p_value"] = ks.p_value;
      }
      list.push_back(entry);
    }
    j["estimators"] = list;
    write_json(s.str("summary"), out, j);
  }
  return 0;
}

int cmd_id(const Settings& s, std::ostream& out) {
  const RepresentationSet set = load_representations(s.str("input"));
  IdMethod method;
  try {
    method = parse_id_method(s.str("method"));
  } catch (const InvalidSpec& e) {
    throw UsageError(std::string(e.what()) + " (config key 'method')");
  }
  int k = static_cast<int>(s.integer("k"));
  IdEstimate estimate;
  switch (method) {
    case IdMethod::mle: estimate = id_mle(set.z(), k > 0 ? k : kMleNeighbors, s.boolean("harmonic")); break;
    case IdMethod::ess: estimate = id_ess(set.z(), k > 0 ? k : kEssNeighbors); break;
    case IdMethod::lpca: estimate = id_lpca(set.z(), k > 0 ? k : kLpcaNeighbors, s.real("alpha")); break;
  }
  Json j;
  j["meta"] = meta_json("id", s);
  const Json body = id_json(estimate);
  for (const auto& [key, value] : body.items()) j[key] = value;
  write_json(s.str("out"), out, j);
  if (!s.str("per_point").empty()) {
    Output file(s.str("per_point"), out);
    file.stream() << csv_header("id", s) << per_point_csv(estimate);
    file.finish();
  }
  return 0;
}

int cmd_rotate(const Settings& s, std::ostream& out) {
  const RepresentationSet set = load_representations(s.str("input"));
  PenaltyOptions penalty;
  if (!s.str("lasso_lambda").empty()) penalty.lambda = s.real("lasso_lambda");
  const std::string target = s.str("target");
  if (target != "y" && target != "t") throw UsageError("config key 'target' must be y or t");
  const RepresentationSet fitted = target == "y" ? set : set.with_y(set.t());
  const auto curve =
      sparsity_rotation_curve(fitted, static_cast<int>(s.integer("rotations")), penalty, s.u64("seed"));
  Output file(s.str("out"), out);
  file.stream() << csv_header("rotate", s) << curve_csv(curve);
  file.finish();
  return 0;
}

int cmd_rate(const Settings& s, std::ostream& out) {
  RateConfig config;
  const std::uint64_t seed = s.u64("seed");
  config.d_manifold = static_cast<int>(s.integer("d_manifold"));
  config.hcm = random_hcm_spec(static_cast<int>(s.integer("hcm_level")), static_cast<int>(s.integer("hcm_arity")),
                               config.d_manifold, s.real("smoothness"), seed);
  config.ambient_dims = s.index_list("dims");
  config.n_grid = s.index_list("n_grid");
  config.noise_sd = s.real("noise_sd");
  config.test_n = s.integer("test_n");
  config.reps = static_cast<int>(s.integer("reps"));
  config.curvature = s.real("curvature");
  config.mlp.kind = LearnerKind::mlp_reg;
  apply_mlp_options(s, config.mlp);
  const RateResult result = run_rate_experiment(config, seed);
  Output file(s.str("out"), out);
  file.stream() << csv_header("rate", s) << rate_csv(result);
  file.stream() << "# worst_case_pair = (" << format_number(result.worst_case_pair.first) << ", "
                << result.worst_case_pair.second << ")\n";
  for (const RateSlope& slope : result.slopes) {
    file.stream() << "# slope d=" << slope.d << " = " << format_number(slope.slope) << '\n';
  }
  file.finish();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Treatment-effect estimation from learned representations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  struct Command {
    std::string name;
    Settings settings;
    int (*handler)(const Settings&, std::ostream&);
    CLI::App* app = nullptr;
  };
  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& help, int (*handler)(const Settings&, std::ostream&),
                 auto&& setup) {
    auto cmd = std::make_unique<Command>();
    cmd->name = name;
    cmd->handler = handler;
    setup(cmd->settings);
    cmd->app = app.add_subcommand(name, help);
    cmd->settings.bind(*cmd->app);
    commands.push_back(std::move(cmd));
  };

  add("validate", "check a PTRZ or CSV file and print its shape", cmd_validate, [](Settings& s) {
    s.define({"input", "", "PTRZ or CSV file"});
    s.define({"expect_d", "0", "required column count, 0 for any"});
    s.define({"expect_label", "false", "require the label flag"});
    common_options(s, false);
  });
  add("estimate", "estimate the average treatment effect", cmd_estimate, [](Settings& s) {
    s.define({"input", "", "PTRZ or CSV file"});
    s.define({"method", "dml-aipw", "naive | oracle | s-learner | dml-aipw | dml-plr"});
    s.define({"g", "ols", "outcome learner"});
    s.define({"m", "logistic", "propensity learner"});
    s.define({"k", "2", "cross-fitting folds"});
    s.define({"clip_eps", "0.01", "propensity clipping"});
    s.define({"level", "0.95", "confidence level"});
    learner_options(s);
    common_options(s, true);
  });
  add("simulate", "write one simulated dataset", cmd_simulate, [](Settings& s) {
    generator_options(s);
    common_options(s, true);
  });
  add("experiment", "run a Monte Carlo coverage experiment", cmd_experiment, [](Settings& s) {
    generator_options(s);
    s.define({"reps", "200", "repetitions"});
    s.define({"estimators", "naive,oracle,dml-aipw:ols:logistic", "comma-separated estimator list"});
    s.define({"k", "2", "cross-fitting folds"});
    s.define({"clip_eps", "0.01", "propensity clipping"});
    s.define({"level", "0.95", "confidence level"});
    s.define({"summary", "", "JSON summary path", false});
    learner_options(s);
    common_options(s, true);
  });
  add("id", "estimate intrinsic dimension", cmd_id, [](Settings& s) {
    s.define({"input", "", "PTRZ or CSV file"});
    s.define({"method", "mle", "mle | ess | lpca"});
    s.define({"k", "0", "neighbours, 0 for the method default"});
    s.define({"alpha", "0.05", "lPCA eigenvalue threshold"});
    s.define({"harmonic", "false", "harmonic-mean MLE aggregation"});
    s.define({"per_point", "", "per-point CSV path", false});
    common_options(s, true);
  });
  add("rotate", "sparsity of the lasso under repeated random rotations", cmd_rotate, [](Settings& s) {
    s.define({"input", "", "PTRZ or CSV file"});
    s.define({"rotations", "5", "largest rotation count"});
    s.define({"lasso_lambda", "", "fixed L1 penalty; empty selects by CV"});
    s.define({"target", "y", "regression target: y or t"});
    common_options(s, true);
  });
  add("rate", "MLP error against sample size for an HCM target", cmd_rate, [](Settings& s) {
    s.define({"d_manifold", "2", "latent dimension"});
    s.define({"dims", "10,100", "ambient dimensions"});
    s.define({"n_grid", "500,1000,2000,4000", "training sizes"});
    s.define({"hcm_level", "2", "HCM level"});
    s.define({"hcm_arity", "2", "children per HCM node"});
    s.define({"smoothness", "2", "smoothness tag of every HCM node"});
    s.define({"noise_sd", "0.1", "training noise"});
    s.define({"test_n", "10000", "test points"});
    s.define({"reps", "1", "repetitions averaged per point"});
    s.define({"curvature", "0.5", "embedding curvature"});
    mlp_options(s);
    common_options(s, true);
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      cmd->settings.resolve();
      ScopedThreads threads(resolve_threads(static_cast<int>(cmd->settings.integer("threads"))));
      return cmd->handler(cmd->settings, out);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << '\n';
      return 2;
    } catch (const InvalidSpec& e) {
      err << "invalid configuration: " << e.what() << '\n';
      return 2;
    } catch (const InvalidFoldCount& e) {
      err << "invalid configuration (key 'k'): " << e.what() << '\n';
      return 2;
    } catch (const LoadError& e) {
      err << "load error: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace repcause::cli
