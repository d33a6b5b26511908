#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "feedbias/errors.hpp"
#include "feedbias/estimation.hpp"
#include "feedbias/evaluation.hpp"
#include "feedbias/io.hpp"
#include "feedbias/models.hpp"
#include "feedbias/rng.hpp"
#include "feedbias/simulator.hpp"
#include "feedbias/yule_simon.hpp"

namespace feedbias::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

constexpr const char* kSeedEnv = "FEEDBIAS_SEED";
constexpr const char* kOutDirEnv = "FEEDBIAS_OUT_DIR";
constexpr std::int64_t kReportCutoffs[] = {5, 10, 25, 50, 100};
constexpr const char* kDefaultPolicies =
    "true,noisy:0.02,noisy:0.05,noisy:0.1,noisy:0.2,random:1,random:2,identity";

std::uint64_t default_seed() {
  const char* value = std::getenv(kSeedEnv);
  if (value == nullptr || *value == '\0') return 0;
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw UsageError(std::string(kSeedEnv) + " must be a non-negative integer");
  }
}

std::string default_out_dir() {
  const char* value = std::getenv(kOutDirEnv);
  return value != nullptr && *value != '\0' ? value : ".";
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

double parse_real(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw UsageError("not a number: '" + text + "'");
  return value;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_real(part));
  return values;
}

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += io::format_real(values[i]);
  }
  return out;
}

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir + "'");
  }
  return fs::path(dir);
}

std::string absolute(const std::string& path) {
  return fs::absolute(fs::path(path)).lexically_normal().string();
}

// Resolved parameters of one invocation. Serialized as the run manifest; the
// argv it holds replays the command without consulting the environment.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void flag(const std::string& name, const std::string& value) {
    flags_.emplace_back(name, value);
  }
  void output(const std::string& name, const std::string& file) { outputs_[name] = file; }
  void seed(std::uint64_t s) { seed_ = s; }

  std::vector<std::string> argv() const {
    std::vector<std::string> args{command_};
    for (const auto& [name, value] : flags_) args.push_back("--" + name + "=" + value);
    return args;
  }

  void write(const fs::path& out_dir) const {
    Json json;
    json["command"] = command_;
    json["tool_version"] = FEEDBIAS_VERSION;
    json["seed"] = seed_;
    Json config = Json::object();
    for (const auto& [name, value] : flags_) {
      if (config.contains(name)) {
        if (!config[name].is_array()) config[name] = Json::array({config[name]});
        config[name].push_back(value);
      } else {
        config[name] = value;
      }
    }
    json["config"] = config;
    json["argv"] = argv();
    json["outputs"] = outputs_;
    io::write_text_file((out_dir / ("manifest_" + command_ + ".json")).string(),
                        io::dump_json(json));
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> flags_;
  Json outputs_ = Json::object();
  std::uint64_t seed_ = 0;
};

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::int64_t sessions = 10000;
  std::int64_t list_length = 50;
  std::int64_t items = 1000;
  std::string theta = "3.5,-0.5,-0.1";
  std::uint64_t quality_seed = 1;
  std::string intervention = "full-shuffle";
  std::uint64_t seed = 0;
  double quality_min = 0.01;
  double quality_max = 0.3;
  double interaction_scale = 0.05;
  std::string out_dir;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  SimConfig config;
  config.n_sessions = o.sessions;
  config.list_length = o.list_length;
  config.n_items = o.items;
  config.true_theta = parse_real_list(o.theta);
  config.quality_seed = o.quality_seed;
  config.intervention = parse_intervention(o.intervention);
  config.seed = o.seed;
  config.quality_min = o.quality_min;
  config.quality_max = o.quality_max;
  config.interaction_scale = o.interaction_scale;
  config.validate();
  const QualityModel quality = config.quality_model();

  const fs::path dir = prepare_out_dir(o.out_dir);
  const Dataset dataset = simulate_dataset(config, quality);
  io::write_dataset_file((dir / "dataset.jsonl").string(), dataset);
  io::write_text_file((dir / "truth.json").string(), io::dump_json(io::truth_sidecar(config)));

  Manifest manifest("simulate");
  manifest.seed(o.seed);
  manifest.flag("sessions", std::to_string(o.sessions));
  manifest.flag("list-length", std::to_string(o.list_length));
  manifest.flag("items", std::to_string(o.items));
  manifest.flag("theta", join_reals(config.true_theta));
  manifest.flag("quality-seed", std::to_string(o.quality_seed));
  manifest.flag("intervention", o.intervention);
  manifest.flag("seed", std::to_string(o.seed));
  manifest.flag("quality-min", io::format_real(o.quality_min));
  manifest.flag("quality-max", io::format_real(o.quality_max));
  manifest.flag("interaction-scale", io::format_real(o.interaction_scale));
  manifest.flag("out-dir", absolute(o.out_dir));
  manifest.output("dataset", "dataset.jsonl");
  manifest.output("truth", "truth.json");
  manifest.write(dir);

  // View rate by rank decile.
  const std::int64_t length = config.list_length;
  std::vector<double> views(10, 0.0);
  std::vector<double> counts(10, 0.0);
  for (const auto& r : dataset) {
    const auto decile = static_cast<std::size_t>((r.rank - 1) * 10 / length);
    counts[decile] += 1.0;
    views[decile] += r.viewed ? 1.0 : 0.0;
  }
  out << "sessions:    " << config.n_sessions << '\n';
  out << "impressions: " << dataset.size() << '\n';
  out << "view rate by rank decile:\n";
  for (std::size_t d = 0; d < 10; ++d) {
    if (counts[d] == 0.0) continue;
    const std::int64_t lo = static_cast<std::int64_t>(d) * length / 10 + 1;
    const std::int64_t hi = (static_cast<std::int64_t>(d) + 1) * length / 10;
    out << "  ranks " << std::setw(4) << lo << "-" << std::setw(4) << std::left << hi
        << std::right << "  " << std::fixed << std::setprecision(4) << views[d] / counts[d]
        << std::defaultfloat << '\n';
  }
  out << "wrote " << (dir / "dataset.jsonl").string() << '\n';
  return kExitOk;
}

// --- fit --------------------------------------------------------------------

struct FitOptions {
  std::string data;
  std::string families = "prob";
  std::int64_t k = 100;
  int max_iters = 2000;
  double tol = 1e-10;
  double step_size = 1.0;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::int64_t max_rank = 0;
  std::string out_dir;
};

std::vector<Family> parse_families(const std::string& text) {
  std::vector<Family> families;
  for (const auto& name : split(text, ',')) {
    if (name == "all") {
      for (Family f : {Family::dcg, Family::log, Family::exp, Family::prob, Family::empirical,
                       Family::contextual_log, Family::contextual_exp, Family::contextual_prob}) {
        families.push_back(f);
      }
    } else {
      families.push_back(parse_family(name));
    }
  }
  if (families.empty()) throw UsageError("--family must name at least one family");
  return families;
}

int cmd_fit(const FitOptions& o, std::ostream& out) {
  const auto families = parse_families(o.families);
  if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) {
    throw UsageError("--test-fraction must lie in (0, 1)");
  }
  FitConfig config;
  config.k_cutoff = o.k;
  config.max_iters = o.max_iters;
  config.tol = o.tol;
  config.step_size = o.step_size;
  config.seed = o.seed;
  config.validate();

  const Dataset dataset = io::read_dataset_file(o.data);
  if (dataset.empty()) throw UsageError("dataset '" + o.data + "' is empty");
  const auto [train, test] = split_train_test(dataset, o.seed, o.test_fraction);
  if (train.empty() || test.empty()) throw UsageError("train/test split left one side empty");

  const fs::path dir = prepare_out_dir(o.out_dir);
  Manifest manifest("fit");
  manifest.seed(o.seed);
  manifest.flag("data", absolute(o.data));
  std::string family_names;
  for (Family f : families) {
    if (!family_names.empty()) family_names += ',';
    family_names += to_string(f);
  }
  manifest.flag("family", family_names);
  manifest.flag("k", std::to_string(o.k));
  manifest.flag("max-iters", std::to_string(o.max_iters));
  manifest.flag("tol", io::format_real(o.tol));
  manifest.flag("step-size", io::format_real(o.step_size));
  manifest.flag("seed", std::to_string(o.seed));
  manifest.flag("test-fraction", io::format_real(o.test_fraction));
  manifest.flag("max-rank", std::to_string(o.max_rank));
  manifest.flag("out-dir", absolute(o.out_dir));

  std::ostringstream report;
  report << "family";
  for (auto k : kReportCutoffs) report << ",nll_at_" << k;
  report << ",train_nll,iterations,converged,clamp_events\n";

  out << "train impressions: " << train.size() << ", test impressions: " << test.size() << '\n';
  out << std::left << std::setw(18) << "family";
  for (auto k : kReportCutoffs) out << std::setw(12) << ("NLL@" + std::to_string(k));
  out << std::right << '\n';

  for (Family family : families) {
    std::optional<FitResult> fitted;
    PositionBiasModel model = PositionBiasModel::dcg();
    if (family == Family::empirical) {
      std::int64_t max_rank = o.max_rank;
      if (max_rank <= 0) {
        for (const auto& r : train) max_rank = std::max(max_rank, r.rank);
      }
      model = fit_empirical(train, max_rank);
    } else if (family != Family::dcg) {
      fitted = fit(family, train, config);
      model = fitted->model;
    }
    const std::string file = "model_" + std::string(to_string(family)) + ".json";
    io::write_model_file((dir / file).string(), model);
    manifest.output(std::string(to_string(family)), file);

    report << to_string(family);
    out << std::left << std::setw(18) << to_string(family) << std::right;
    for (auto k : kReportCutoffs) {
      const double nll = nll_at_k(model, test, k);
      report << ',' << io::format_real(nll);
      out << std::left << std::setw(12) << std::fixed << std::setprecision(6) << nll
          << std::defaultfloat << std::right;
    }
    out << '\n';
    if (fitted) {
      report << ',' << io::format_real(fitted->final_nll) << ',' << fitted->iterations << ','
             << (fitted->converged ? 1 : 0) << ',' << fitted->clamp_events << '\n';
    } else {
      report << ',' << io::format_real(nll_at_k(model, train, o.k)) << ",0,1,0\n";
    }
  }
  io::write_text_file((dir / "fit_report.csv").string(), report.str());
  manifest.output("report", "fit_report.csv");
  manifest.write(dir);
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalOptions {
  std::string data;
  std::string truth;
  std::vector<std::string> models;
  bool ground_truth_model = false;
  std::string policies = kDefaultPolicies;
  int trials = 20;
  std::int64_t mc = 20000;
  std::int64_t sessions = 0;
  std::uint64_t seed = 0;
  double weight_cap = 0.0;
  bool self_normalize = false;
  std::string out_dir;
};

Policy parse_policy(const std::string& spec, const std::shared_ptr<const QualityModel>& quality) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw UsageError("empty policy spec");
  const std::string& kind = parts[0];
  if (kind == "true" && parts.size() == 1) return Policy::by_true_quality(quality);
  if (kind == "identity" && parts.size() == 1) return Policy::identity_logged();
  if (kind == "random" && parts.size() == 2) return Policy::random(std::stoull(parts[1]));
  if (kind == "noisy" && (parts.size() == 2 || parts.size() == 3)) {
    const std::uint64_t seed = parts.size() == 3 ? std::stoull(parts[2]) : 0;
    return Policy::by_noisy_quality(quality, parse_real(parts[1]), seed);
  }
  throw UsageError("unknown policy spec '" + spec +
                   "' (expected true, identity, random:<seed> or noisy:<sd>[:<seed>])");
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const std::string truth_path =
      o.truth.empty() ? (fs::path(o.data).parent_path() / "truth.json").string() : o.truth;
  SimConfig config = io::config_from_sidecar(io::read_json_file(truth_path));
  if (o.sessions > 0) config.n_sessions = o.sessions;
  config.validate();
  const Dataset dataset = io::read_dataset_file(o.data);
  if (dataset.empty()) throw UsageError("dataset '" + o.data + "' is empty");

  std::vector<NamedModel> models;
  for (const auto& spec : o.models) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    PositionBiasModel model = io::read_model_file(path);
    const std::string name =
        eq == std::string::npos ? std::string(to_string(model.family())) : spec.substr(0, eq);
    models.push_back(NamedModel{name, std::move(model)});
  }
  if (o.ground_truth_model) {
    std::vector<double> theta = config.true_theta;
    theta.resize(3, 0.0);
    models.push_back(NamedModel{
        "ground-truth", PositionBiasModel::contextual(Family::prob, theta, LinkKind::softplus)});
  }

  const auto quality = std::make_shared<const QualityModel>(config.quality_model());
  std::vector<Policy> policies;
  for (const auto& spec : split(o.policies, ',')) policies.push_back(parse_policy(spec, quality));
  if (policies.size() < 2) {
    throw UndefinedCorrelationError(
        "eval needs at least two policies: correlation across a single policy is undefined");
  }

  StudyOptions study_options;
  study_options.n_trials = o.trials;
  study_options.n_mc = o.mc;
  study_options.seed = o.seed;
  if (o.weight_cap > 0.0) study_options.ips.weight_cap = o.weight_cap;
  study_options.ips.self_normalize = o.self_normalize;

  const fs::path dir = prepare_out_dir(o.out_dir);
  const StudyResult study = offline_online_study(models, policies, config, study_options);

  std::ostringstream offline_csv;
  offline_csv << "policy,model,estimate\n";
  for (const auto& policy : policies) {
    for (std::size_t m = 0; m < study.models.size(); ++m) {
      const PositionBiasModel& model =
          m < models.size() ? models[m].model : PositionBiasModel::dcg();
      offline_csv << policy.name() << ',' << study.models[m] << ','
                  << io::format_real(unbiased_dcg(dataset, policy, model, study_options.ips))
                  << '\n';
    }
  }
  std::ostringstream correlations_csv;
  correlations_csv << "model,trial,correlation\n";
  for (const auto& row : study.correlations) {
    correlations_csv << row.model << ',' << row.trial << ',' << io::format_real(row.correlation)
                     << '\n';
  }
  std::ostringstream summary_csv;
  summary_csv << "model,mean_correlation,relative_improvement_vs_dcg_pct\n";
  for (const auto& row : study.summary) {
    summary_csv << row.model << ',' << io::format_real(row.mean_correlation) << ','
                << io::format_real(row.relative_improvement_vs_dcg_pct) << '\n';
  }
  io::write_text_file((dir / "offline_estimates.csv").string(), offline_csv.str());
  io::write_text_file((dir / "correlations.csv").string(), correlations_csv.str());
  io::write_text_file((dir / "summary.csv").string(), summary_csv.str());

  Manifest manifest("eval");
  manifest.seed(o.seed);
  manifest.flag("data", absolute(o.data));
  manifest.flag("truth", absolute(truth_path));
  for (const auto& spec : o.models) {
    const auto eq = spec.find('=');
    manifest.flag("model", eq == std::string::npos
                               ? absolute(spec)
                               : spec.substr(0, eq + 1) + absolute(spec.substr(eq + 1)));
  }
  manifest.flag("ground-truth-model", o.ground_truth_model ? "true" : "false");
  manifest.flag("policies", o.policies);
  manifest.flag("trials", std::to_string(o.trials));
  manifest.flag("mc", std::to_string(o.mc));
  manifest.flag("sessions", std::to_string(o.sessions));
  manifest.flag("seed", std::to_string(o.seed));
  manifest.flag("weight-cap", io::format_real(o.weight_cap));
  manifest.flag("self-normalize", o.self_normalize ? "true" : "false");
  manifest.flag("out-dir", absolute(o.out_dir));
  manifest.output("offline_estimates", "offline_estimates.csv");
  manifest.output("correlations", "correlations.csv");
  manifest.output("summary", "summary.csv");
  manifest.write(dir);

  out << std::left << std::setw(24) << "model" << std::setw(18) << "mean_correlation"
      << "improvement_vs_dcg_pct" << std::right << '\n';
  for (const auto& row : study.summary) {
    out << std::left << std::setw(24) << row.model << std::setw(18) << std::fixed
        << std::setprecision(4) << row.mean_correlation << std::setprecision(2)
        << row.relative_improvement_vs_dcg_pct << std::defaultfloat << std::right << '\n';
  }
  return kExitOk;
}

// --- export-curves ----------------------------------------------------------

struct ExportOptions {
  std::string rhos = "0.25,0.5,1,2";
  std::string alphas = "1";
  std::string gammas = "0.7";
  std::int64_t max_rank = 100;
  std::int64_t max_depth = 100;
  std::string out_dir;
};

int cmd_export_curves(const ExportOptions& o, std::ostream& out) {
  const auto rhos = parse_real_list(o.rhos);
  const auto alphas = parse_real_list(o.alphas);
  const auto gammas = parse_real_list(o.gammas);
  if (o.max_rank < 1 || o.max_depth < 1) throw UsageError("--max-rank and --max-depth must be >= 1");

  // Curves hold the unclamped closed forms; the factories only validate the parameters.
  using Curve = std::function<double(std::int64_t)>;
  std::vector<std::pair<std::string, Curve>> curves;
  curves.emplace_back("dcg", dcg_discount);
  for (double a : alphas) {
    PositionBiasModel::log(a);
    curves.emplace_back("log(alpha=" + short_real(a) + ")", [a](std::int64_t r) { return log_discount(a, r); });
  }
  for (double g : gammas) {
    PositionBiasModel::exp(g);
    curves.emplace_back("exp(gamma=" + short_real(g) + ")", [g](std::int64_t r) { return exp_discount(g, r); });
  }
  for (double rho : rhos) {
    const YuleSimonParams params{rho};
    curves.emplace_back("prob(rho=" + short_real(rho) + ")", [params](std::int64_t r) { return survival(params, r); });
  }

  const fs::path dir = prepare_out_dir(o.out_dir);
  std::ostringstream bias;
  bias << "rank,model_label,prob_view\n";
  for (const auto& [label, curve] : curves) {
    for (std::int64_t r = 1; r <= o.max_rank; ++r) {
      bias << r << ',' << label << ',' << io::format_real(curve(r)) << '\n';
    }
  }
  std::ostringstream pmf;
  pmf << "depth,rho,pmf\n";
  for (double rho : rhos) {
    const YuleSimonParams params{rho};
    for (std::int64_t d = 1; d <= o.max_depth; ++d) {
      pmf << d << ',' << io::format_real(rho) << ','
          << io::format_real(std::exp(yule_simon_log_pmf(params, d))) << '\n';
    }
  }
  io::write_text_file((dir / "bias_curves.csv").string(), bias.str());
  io::write_text_file((dir / "pmf.csv").string(), pmf.str());

  Manifest manifest("export-curves");
  manifest.flag("rhos", join_reals(rhos));
  manifest.flag("alphas", join_reals(alphas));
  manifest.flag("gammas", join_reals(gammas));
  manifest.flag("max-rank", std::to_string(o.max_rank));
  manifest.flag("max-depth", std::to_string(o.max_depth));
  manifest.flag("out-dir", absolute(o.out_dir));
  manifest.output("bias_curves", "bias_curves.csv");
  manifest.output("pmf", "pmf.csv");
  manifest.write(dir);
  out << "wrote " << curves.size() << " bias curves and " << rhos.size() << " PMFs to "
      << dir.string() << '\n';
  return kExitOk;
}

// --- replay -----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  const Json manifest = io::read_json_file(manifest_path);
  if (!manifest.contains("argv") || !manifest.at("argv").is_array()) {
    throw UsageError("manifest '" + manifest_path + "' has no argv array");
  }
  auto args = manifest.at("argv").get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw UsageError("manifest argv is not replayable");
  if (!out_dir.empty()) {
    for (auto& arg : args) {
      if (arg.rfind("--out-dir=", 0) == 0) arg = "--out-dir=" + out_dir;
    }
  }
  return run(args, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Position-bias models for feed recommendation: simulate, fit, evaluate."};
  app.name("feedbias");
  app.require_subcommand(1);
  app.set_version_flag("--version", FEEDBIAS_VERSION);

  const std::uint64_t seed = default_seed();
  const std::string out_dir = default_out_dir();

  SimulateOptions sim;
  sim.seed = seed;
  sim.out_dir = out_dir;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic interventional dataset");
  simulate->add_option("--sessions", sim.sessions, "Number of sessions")->capture_default_str();
  simulate->add_option("--list-length", sim.list_length, "Feed length per session")->capture_default_str();
  simulate->add_option("--items", sim.items, "Catalog size")->capture_default_str();
  simulate->add_option("--theta", sim.theta, "Ground-truth theta (softplus link onto rho), comma separated")->capture_default_str();
  simulate->add_option("--quality-seed", sim.quality_seed, "Seed for item qualities")->capture_default_str();
  simulate->add_option("--intervention", sim.intervention, "full-shuffle or none")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed (default from FEEDBIAS_SEED)");
  simulate->add_option("--quality-min", sim.quality_min)->capture_default_str();
  simulate->add_option("--quality-max", sim.quality_max)->capture_default_str();
  simulate->add_option("--interaction-scale", sim.interaction_scale)->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory (default from FEEDBIAS_OUT_DIR)");

  FitOptions fit_opts;
  fit_opts.seed = seed;
  fit_opts.out_dir = out_dir;
  auto* fit_cmd = app.add_subcommand("fit", "Fit position-bias models on an 80/20 session split");
  fit_cmd->add_option("--data", fit_opts.data, "Dataset JSONL")->required();
  fit_cmd->add_option("--family", fit_opts.families, "Comma-separated families, or 'all'")->capture_default_str();
  fit_cmd->add_option("--k", fit_opts.k, "NLL@K rank cut-off used for fitting")->capture_default_str();
  fit_cmd->add_option("--max-iters", fit_opts.max_iters)->capture_default_str();
  fit_cmd->add_option("--tol", fit_opts.tol)->capture_default_str();
  fit_cmd->add_option("--step-size", fit_opts.step_size)->capture_default_str();
  fit_cmd->add_option("--seed", fit_opts.seed, "Split seed (default from FEEDBIAS_SEED)");
  fit_cmd->add_option("--test-fraction", fit_opts.test_fraction)->capture_default_str();
  fit_cmd->add_option("--max-rank", fit_opts.max_rank, "Empirical table length (0: max observed rank)")->capture_default_str();
  fit_cmd->add_option("--out-dir", fit_opts.out_dir);

  EvalOptions eval_opts;
  eval_opts.seed = seed;
  eval_opts.out_dir = out_dir;
  auto* eval = app.add_subcommand("eval", "Offline/online correlation study of IPS estimates");
  eval->add_option("--data", eval_opts.data, "Dataset JSONL")->required();
  eval->add_option("--truth", eval_opts.truth, "Ground-truth sidecar (default: truth.json next to the dataset)");
  eval->add_option("--model", eval_opts.models, "Model JSON, optionally name=path; repeatable");
  eval->add_flag("--ground-truth-model", eval_opts.ground_truth_model, "Also evaluate the generating model");
  eval->add_option("--policies", eval_opts.policies, "true, identity, random:<seed>, noisy:<sd>[:<seed>]")->capture_default_str();
  eval->add_option("--trials", eval_opts.trials)->capture_default_str();
  eval->add_option("--mc", eval_opts.mc, "Online Monte-Carlo sessions per policy and trial")->capture_default_str();
  eval->add_option("--sessions", eval_opts.sessions, "Logged sessions per trial (0: as in the sidecar)")->capture_default_str();
  eval->add_option("--seed", eval_opts.seed);
  eval->add_option("--weight-cap", eval_opts.weight_cap, "Cap IPS weights (0: off)")->capture_default_str();
  eval->add_flag("--self-normalize", eval_opts.self_normalize, "Self-normalized IPS");
  eval->add_option("--out-dir", eval_opts.out_dir);

  ExportOptions export_opts;
  export_opts.out_dir = out_dir;
  auto* curves = app.add_subcommand("export-curves", "Write position-bias curves and Yule-Simon PMFs as CSV");
  curves->add_option("--rhos", export_opts.rhos)->capture_default_str();
  curves->add_option("--alphas", export_opts.alphas)->capture_default_str();
  curves->add_option("--gammas", export_opts.gammas)->capture_default_str();
  curves->add_option("--max-rank", export_opts.max_rank)->capture_default_str();
  curves->add_option("--max-depth", export_opts.max_depth)->capture_default_str();
  curves->add_option("--out-dir", export_opts.out_dir);

  std::string manifest_path;
  std::string replay_out_dir;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay->add_option("--manifest", manifest_path)->required();
  replay->add_option("--out-dir", replay_out_dir, "Override the recorded output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << FEEDBIAS_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (simulate->parsed()) return cmd_simulate(sim, out);
  if (fit_cmd->parsed()) return cmd_fit(fit_opts, out);
  if (eval->parsed()) return cmd_eval(eval_opts, out);
  if (curves->parsed()) return cmd_export_curves(export_opts, out);
  if (replay->parsed()) return cmd_replay(manifest_path, replay_out_dir, out, err);
  return kExitUsage;
}

}  // namespace

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, std::uint64_t seed,
                                             double test_fraction) {
  constexpr std::uint64_t kBuckets = 1000000;
  const auto threshold = static_cast<std::uint64_t>(test_fraction * kBuckets);
  Dataset train, test;
  for (const auto& r : dataset) {
    const bool is_test = hash_combine(seed, r.session_id) % kBuckets < threshold;
    (is_test ? test : train).push_back(r);
  }
  return {std::move(train), std::move(test)};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UndefinedCorrelationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace feedbias::cli
