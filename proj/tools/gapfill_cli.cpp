#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gapfill/cox.hpp"
#include "gapfill/inference.hpp"
#include "gapfill/io.hpp"
#include "gapfill/lgcp.hpp"
#include "gapfill/markov.hpp"
#include "gapfill/renewal.hpp"
#include "gapfill/samplers.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gapfill;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kDomain = 3, kNumerical = 4 };

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

json read_json(const fs::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// Records the parameters of a run and the files it wrote.
class Run {
 public:
  Run(std::string name, const CLI::App* app) : name_(std::move(name)) {
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
      const std::string key = opt->get_single_name();
      if (key == "manifest") continue;
      if (opt->count() > 0) {
        const auto results = opt->reduced_results();
        parameters_[key] = results.size() == 1 ? json(results.front()) : json(results);
      } else if (opt->get_expected_min() == 0) {
        parameters_[key] = json(false);
      } else {
        parameters_[key] = json(opt->get_default_str());
      }
    }
  }

  void write(const fs::path& path, const std::string& text) {
    io::write_text(path, text);
    outputs_.push_back({path.string(), sha256_hex(text)});
  }

  void write_json(const fs::path& path, const json& value) { write(path, value.dump(2) + "\n"); }

  void finish(const fs::path& manifest_path, std::optional<std::uint64_t> seed) const {
    json manifest;
    manifest["subcommand"] = name_;
    manifest["version"] = kVersion;
    manifest["parameters"] = parameters_;
    manifest["seed"] = seed ? json(*seed) : json(nullptr);
    json files = json::array();
    for (const auto& [path, digest] : outputs_) files.push_back({{"path", path}, {"sha256", digest}});
    manifest["outputs"] = files;
    io::write_text(manifest_path, manifest.dump(2) + "\n");
  }

 private:
  std::string name_;
  json parameters_ = json::object();
  std::vector<std::pair<std::string, std::string>> outputs_;
};

std::string join_points(std::span<const double> points) {
  std::string out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) out += ';';
    out += io::format_double(points[i]);
  }
  return out;
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ObservedData load_observed(const fs::path& data, double t1, double t2, double t_end) {
  const BrokenWindow window(t1, t2, t_end);
  const OrderedConfig events = io::read_events(data);
  for (double t : events) {
    if (t < 0.0 || t > t_end) {
      throw DomainError(data.string() + ": event " + io::format_double(t) + " outside [0, t_end]");
    }
    if (window.in_gap(t)) {
      throw DomainError(data.string() + ": event " + io::format_double(t) + " lies in the gap");
    }
  }
  return ObservedData::observe(events, window);
}

json mu0_to_json(const lgcp::Mu0Model& m) {
  return json{{"day_effects", m.day_effects}, {"a1", m.a1}, {"b1", m.b1},
              {"a2", m.a2},                   {"b2", m.b2}, {"trend", m.trend},
              {"period", m.period}};
}

lgcp::Mu0Model mu0_from_json(const fs::path& path) {
  const json j = read_json(path);
  lgcp::Mu0Model m;
  try {
    const auto effects = j.at("day_effects").get<std::vector<double>>();
    if (effects.size() != 7) throw DomainError(path.string() + ": day_effects needs 7 values");
    std::copy(effects.begin(), effects.end(), m.day_effects.begin());
    m.a1 = j.at("a1").get<double>();
    m.b1 = j.at("b1").get<double>();
    m.a2 = j.at("a2").get<double>();
    m.b2 = j.at("b2").get<double>();
    m.trend = j.at("trend").get<double>();
    m.period = j.value("period", 365.0);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return m;
}

std::vector<BrokenWindow> scenarios_from_json(const fs::path& path) {
  const json j = read_json(path);
  std::vector<BrokenWindow> out;
  try {
    for (const auto& s : j) {
      if (s.is_array()) {
        out.emplace_back(s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>());
      } else {
        out.emplace_back(s.at("t1").get<double>(), s.at("t2").get<double>(),
                         s.at("t_end").get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (out.empty()) throw DomainError(path.string() + ": no scenarios");
  return out;
}

// Turns `--config file.json` into trailing `--key value` arguments so that
// config entries take precedence over flags given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      config = args[++i];
    } else if (args[i].starts_with("--config=")) {
      config = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!config) return out;
  const json j = read_json(*config);
  if (!j.is_object()) throw IoError(*config + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_string()) {
      out.push_back(flag);
      out.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      out.push_back(flag);
      out.push_back(value.dump());
    } else {
      throw CLI::ConversionError("config key '" + key + "' must be a scalar");
    }
  }
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  std::string manifest = "manifest.json";
};

void add_manifest(CLI::App* sub, Common& common) {
  sub->add_option("--manifest", common.manifest, "Run manifest path")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation, estimation and gap reconstruction for point processes observed on a "
               "broken window [0,t1] U [t2,t_end]."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;
  app.add_option("--config", config_file, "JSON object of flag values; overrides the command line");

  Common common;

  // simulate-renewal
  auto* sim = app.add_subcommand("simulate-renewal", "Simulate an Erlang renewal process");
  double sim_lambda = 40.0, sim_t_end = 4.0, sim_t1 = 0.0, sim_t2 = 0.0;
  int sim_alpha = 2;
  std::string sim_out = "events.csv", sim_hidden = "hidden.csv";
  sim->add_option("--lambda", sim_lambda, "Rate")->capture_default_str();
  sim->add_option("--alpha", sim_alpha, "Shape")->capture_default_str();
  sim->add_option("--t-end", sim_t_end, "Horizon")->capture_default_str();
  auto* sim_t1_opt = sim->add_option("--t1", sim_t1, "Gap start");
  auto* sim_t2_opt = sim->add_option("--t2", sim_t2, "Gap end");
  sim_t1_opt->needs(sim_t2_opt);
  sim_t2_opt->needs(sim_t1_opt);
  sim->add_option("--seed", common.seed)->capture_default_str();
  sim->add_option("--out", sim_out, "Observed events CSV")->capture_default_str();
  sim->add_option("--hidden", sim_hidden, "Gap events CSV")->capture_default_str();
  add_manifest(sim, common);

  // bias-study
  auto* bias = app.add_subcommand("bias-study", "Length-bias study of rate estimators");
  std::string bias_estimator = "naive", bias_scenarios, bias_out = "bias.csv",
              bias_reps_out = "replicates.csv";
  BiasStudyConfig bias_cfg;
  bias_cfg.threads = 1;
  bias->add_option("--estimator", bias_estimator)
      ->check(CLI::IsMember({"naive", "mcml"}))
      ->capture_default_str();
  bias->add_option("--lambda", bias_cfg.true_rate)->capture_default_str();
  bias->add_option("--alpha", bias_cfg.true_shape)->capture_default_str();
  bias->add_option("--t-end", bias_cfg.horizon)->capture_default_str();
  bias->add_option("--scenarios", bias_scenarios, "JSON list of [t1, t2, t_end]");
  bias->add_option("--reps", bias_cfg.replicates)->capture_default_str();
  bias->add_option("--n-samples", bias_cfg.chain.n_samples)->capture_default_str();
  bias->add_option("--burn-in", bias_cfg.chain.burn_in)->capture_default_str();
  bias->add_option("--thin", bias_cfg.chain.thin)->capture_default_str();
  bias->add_option("--newton-steps", bias_cfg.newton_steps)->capture_default_str();
  bias->add_option("--threads", bias_cfg.threads, "Worker threads (0: all cores)")
      ->capture_default_str();
  bool bias_profile = false;
  bias->add_flag("--profile-alpha", bias_profile, "Estimate the shape by profile likelihood");
  bias->add_flag("--include-origin", bias_cfg.naive.include_origin_interval,
                 "Count the interval from 0 to the first point");
  bias->add_option("--seed", common.seed)->capture_default_str();
  bias->add_option("--out", bias_out)->capture_default_str();
  bias->add_option("--replicates", bias_reps_out)->capture_default_str();
  add_manifest(bias, common);

  // mcmle
  auto* mcmle = app.add_subcommand("mcmle", "Monte Carlo maximum likelihood for the Erlang rate");
  std::string mc_data, mc_out = "mcmle.json", mc_curve = "curve.csv";
  double mc_t1 = 0, mc_t2 = 0, mc_t_end = 0, mc_start = 0;
  int mc_alpha = 2;
  std::size_t mc_newton_samples = 0;
  McmlOptions mc_opts;
  mc_opts.final_chain.n_samples = 10000;
  mcmle->add_option("--data", mc_data, "Observed events CSV")->required();
  mcmle->add_option("--t1", mc_t1)->required();
  mcmle->add_option("--t2", mc_t2)->required();
  mcmle->add_option("--t-end", mc_t_end)->required();
  mcmle->add_option("--alpha", mc_alpha)->capture_default_str();
  auto* mc_start_opt = mcmle->add_option("--start", mc_start, "Initial rate (default: naive)");
  mcmle->add_option("--n-samples", mc_opts.final_chain.n_samples)->capture_default_str();
  mcmle->add_option("--newton-samples", mc_newton_samples, "Samples per Newton step (0: n-samples)")
      ->capture_default_str();
  mcmle->add_option("--burn-in", mc_opts.final_chain.burn_in)->capture_default_str();
  mcmle->add_option("--thin", mc_opts.final_chain.thin)->capture_default_str();
  mcmle->add_option("--newton-steps", mc_opts.newton_steps)->capture_default_str();
  mcmle->add_option("--grid-points", mc_opts.grid_points)->capture_default_str();
  mcmle->add_option("--seed", common.seed)->capture_default_str();
  mcmle->add_option("--out", mc_out)->capture_default_str();
  mcmle->add_option("--curve", mc_curve)->capture_default_str();
  add_manifest(mcmle, common);

  // state-sample
  auto* state = app.add_subcommand("state-sample", "Sample the hidden points in the gap");
  std::string st_model = "renewal", st_sampler = "mh", st_data, st_out = "samples.csv";
  double st_t1 = 0, st_t2 = 0, st_t_end = 0, st_lambda = 40, st_beta1 = 10, st_gamma = 0.5,
         st_range = 0.1, st_spacing = 1.0;
  int st_alpha = 2;
  ChainConfig st_chain;
  state->add_option("--model", st_model)
      ->check(CLI::IsMember({"renewal", "pairwise"}))
      ->capture_default_str();
  state->add_option("--sampler", st_sampler)->check(CLI::IsMember({"mh", "bd"}))->capture_default_str();
  state->add_option("--data", st_data, "Observed events CSV")->required();
  state->add_option("--t1", st_t1)->required();
  state->add_option("--t2", st_t2)->required();
  state->add_option("--t-end", st_t_end)->required();
  state->add_option("--lambda", st_lambda)->capture_default_str();
  state->add_option("--alpha", st_alpha)->capture_default_str();
  state->add_option("--beta1", st_beta1)->capture_default_str();
  state->add_option("--gamma", st_gamma)->capture_default_str();
  state->add_option("--range", st_range)->capture_default_str();
  state->add_option("--burn-in", st_chain.burn_in, "MH steps or BD jumps")->capture_default_str();
  state->add_option("--thin", st_chain.thin, "MH steps between samples")->capture_default_str();
  state->add_option("--spacing", st_spacing, "BD clock time between samples")->capture_default_str();
  state->add_option("--n-samples", st_chain.n_samples)->capture_default_str();
  state->add_option("--seed", common.seed)->capture_default_str();
  state->add_option("--out", st_out)->capture_default_str();
  add_manifest(state, common);

  // cox-compound
  auto* cox = app.add_subcommand("cox-compound", "Two-level compound Poisson posterior");
  double cx_l1 = 0, cx_l2 = 0, cx_t1 = 0, cx_t2 = 0, cx_t_end = 0;
  std::size_t cx_n = 0, cx_n_max = 50;
  std::string cx_out = "cox.json";
  cox->add_option("--lambda1", cx_l1)->required();
  cox->add_option("--lambda2", cx_l2)->required();
  cox->add_option("--t1", cx_t1)->required();
  cox->add_option("--t2", cx_t2)->required();
  cox->add_option("--t-end", cx_t_end)->required();
  cox->add_option("--n-observed", cx_n)->required();
  cox->add_option("--n-max", cx_n_max)->capture_default_str();
  cox->add_option("--out", cx_out)->capture_default_str();
  add_manifest(cox, common);

  // lgcp
  auto* lg = app.add_subcommand("lgcp", "Log-Gaussian Cox model for daily counts");
  lg->require_subcommand(1);

  auto* lg_sim = lg->add_subcommand("simulate", "Synthetic daily counts with a hidden block");
  lgcp::OuParams lg_sim_params{0.11, 0.91};
  std::size_t lg_days = lgcp::kSeriesDays;
  std::int64_t lg_gap_first = lgcp::kGapFirstDay, lg_gap_last = lgcp::kGapLastDay;
  std::string lg_sim_mu0, lg_sim_out = "counts.csv", lg_sim_complete = "complete.csv",
              lg_sim_field = "field.csv";
  lg_sim->add_option("--sigma2", lg_sim_params.sigma2)->capture_default_str();
  lg_sim->add_option("--beta", lg_sim_params.beta)->capture_default_str();
  lg_sim->add_option("--days", lg_days)->capture_default_str();
  lg_sim->add_option("--gap-first", lg_gap_first)->capture_default_str();
  lg_sim->add_option("--gap-last", lg_gap_last)->capture_default_str();
  lg_sim->add_option("--mu0", lg_sim_mu0, "Coefficients JSON (default: built-in call-centre profile)");
  lg_sim->add_option("--seed", common.seed)->capture_default_str();
  lg_sim->add_option("--out", lg_sim_out)->capture_default_str();
  lg_sim->add_option("--complete", lg_sim_complete, "Counts including hidden days")
      ->capture_default_str();
  lg_sim->add_option("--field", lg_sim_field)->capture_default_str();
  add_manifest(lg_sim, common);

  auto* lg_fit = lg->add_subcommand("fit-mu0", "Poisson log-linear fit of the baseline mu0");
  std::string lg_counts, lg_fit_out = "mu0.json", lg_weekly = "weekly.csv";
  bool lg_naive = false, lg_gap_aware = false;
  lg_fit->add_option("--counts", lg_counts)->required();
  auto* naive_flag = lg_fit->add_flag("--naive", lg_naive, "Treat hidden days as zero counts");
  auto* aware_flag = lg_fit->add_flag("--gap-aware", lg_gap_aware, "Exclude hidden days (default)");
  naive_flag->excludes(aware_flag);
  lg_fit->add_option("--out", lg_fit_out)->capture_default_str();
  lg_fit->add_option("--weekly", lg_weekly)->capture_default_str();
  add_manifest(lg_fit, common);

  auto* lg_mc = lg->add_subcommand("mincontrast", "Minimum-contrast fit of (sigma2, beta)");
  std::string lg_mu0, lg_mc_out = "contrast.json", lg_mc_curve = "contrast_curve.csv";
  std::size_t lg_lags = lgcp::kDefaultLags;
  bool lg_mc_naive = false;
  lg_mc->add_option("--counts", lg_counts)->required();
  lg_mc->add_option("--mu0", lg_mu0)->required();
  lg_mc->add_option("--lags", lg_lags)->capture_default_str();
  lg_mc->add_flag("--naive", lg_mc_naive, "Use pairs that touch hidden days, read as zeros");
  lg_mc->add_option("--out", lg_mc_out)->capture_default_str();
  lg_mc->add_option("--curve", lg_mc_curve)->capture_default_str();
  add_manifest(lg_mc, common);

  auto* lg_state = lg->add_subcommand("state", "Langevin sampling of the latent field in the gap");
  // --h is the Langevin step size, so help keeps only its long form here.
  lg_state->set_help_flag("--help", "Print this help message and exit");
  lgcp::OuParams lg_params{0.11, 0.91};
  lgcp::MalaSchedule lg_sched;
  std::int64_t lg_first = lgcp::kStateFirstDay, lg_last = lgcp::kStateLastDay;
  std::size_t lg_radius = 7, lg_bins = 30;
  std::string lg_chain_out = "chain.csv", lg_hist = "histogram.csv", lg_summary = "state.json";
  lg_state->add_option("--counts", lg_counts)->required();
  lg_state->add_option("--mu0", lg_mu0)->required();
  lg_state->add_option("--sigma2", lg_params.sigma2)->capture_default_str();
  lg_state->add_option("--beta", lg_params.beta)->capture_default_str();
  lg_state->add_option("--h", lg_sched.h)->capture_default_str();
  lg_state->add_option("--steps", lg_sched.burn_in, "Burn-in steps")->capture_default_str();
  lg_state->add_option("--thin", lg_sched.thin)->capture_default_str();
  lg_state->add_option("--n-samples", lg_sched.n_samples)->capture_default_str();
  lg_state->add_option("--first-day", lg_first, "State window start")->capture_default_str();
  lg_state->add_option("--last-day", lg_last, "State window end")->capture_default_str();
  lg_state->add_option("--radius", lg_radius, "Influence days either side of the gap")
      ->capture_default_str();
  lg_state->add_option("--bins", lg_bins)->capture_default_str();
  lg_state->add_option("--seed", common.seed)->capture_default_str();
  lg_state->add_option("--out", lg_chain_out)->capture_default_str();
  lg_state->add_option("--histogram", lg_hist)->capture_default_str();
  lg_state->add_option("--summary", lg_summary)->capture_default_str();
  add_manifest(lg_state, common);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }

  try {
    if (*sim) {
      Run run("simulate-renewal", sim);
      const ErlangModel model(sim_lambda, sim_alpha, sim_t_end);
      const OrderedConfig pattern = simulate(model, common.seed);
      if (*sim_t1_opt) {
        const BrokenWindow window(sim_t1, sim_t2, sim_t_end);
        const SplitConfig parts = split(pattern, window);
        run.write(sim_out, io::format_events(concat(parts.left, {}, parts.right).view()));
        run.write(sim_hidden, io::format_events(parts.gap.view()));
        std::cout << parts.left.size() + parts.right.size() << " observed, " << parts.gap.size()
                  << " hidden events\n";
      } else {
        run.write(sim_out, io::format_events(pattern.view()));
        std::cout << pattern.size() << " events\n";
      }
      run.finish(common.manifest, common.seed);
    } else if (*bias) {
      Run run("bias-study", bias);
      bias_cfg.estimator = bias_estimator == "mcml" ? Estimator::kMcml : Estimator::kNaive;
      bias_cfg.scenarios =
          bias_scenarios.empty() ? default_bias_scenarios() : scenarios_from_json(bias_scenarios);
      bias_cfg.fix_shape = !bias_profile;
      bias_cfg.seed = common.seed;
      const auto summaries = run_bias_study(bias_cfg);
      std::string table = "scenario,mean,variance,n_failed\n";
      std::string reps = "scenario,replicate,estimate\n";
      for (const auto& s : summaries) {
        const std::string label = quote_csv(scenario_label(s.scenario));
        table += label + "," + io::format_double(s.mean) + "," + io::format_double(s.variance) +
                 "," + std::to_string(s.n_failed) + "\n";
        for (std::size_t r = 0; r < s.estimates.size(); ++r) {
          reps += label + "," + std::to_string(r) + "," +
                  (s.estimates[r] ? io::format_double(*s.estimates[r]) : std::string()) + "\n";
        }
        std::printf("%-28s mean %10.4f  variance %12.4f  failed %zu\n",
                    scenario_label(s.scenario).c_str(), s.mean, s.variance, s.n_failed);
      }
      run.write(bias_out, table);
      run.write(bias_reps_out, reps);
      run.finish(common.manifest, common.seed);
    } else if (*mcmle) {
      Run run("mcmle", mcmle);
      const ObservedData data = load_observed(mc_data, mc_t1, mc_t2, mc_t_end);
      double start = mc_start;
      if (!*mc_start_opt) {
        try {
          start = naive_estimate(data.left, data.right, mc_alpha).lambda_hat;
        } catch (const NoObservableIntervals&) {
          const double n = static_cast<double>(data.left.size() + data.right.size());
          start = std::max(n, 1.0) * mc_alpha / data.window.observed_length();
        }
      }
      mc_opts.newton_chain = mc_opts.final_chain;
      if (mc_newton_samples > 0) mc_opts.newton_chain.n_samples = mc_newton_samples;
      mc_opts.newton_chain.seed = derive_seed(common.seed, {1});
      mc_opts.final_chain.seed = derive_seed(common.seed, {2});
      const McmlResult result = fit_mcml(data, mc_alpha, start, mc_opts);
      json out{{"lambda_hat", result.lambda_hat},
               {"mc_inverse_fisher", result.mc_inverse_fisher},
               {"reference_rate", result.reference_rate},
               {"start", start},
               {"n_samples", result.n_samples},
               {"newton_iterates", result.newton_iterates},
               {"alpha", mc_alpha}};
      run.write_json(mc_out, out);
      std::string curve = "rate,llr\n";
      for (const auto& [rate, value] : result.llr_curve) {
        curve += io::format_double(rate) + "," + io::format_double(value) + "\n";
      }
      run.write(mc_curve, curve);
      std::printf("lambda_hat %.6f (MC inverse Fisher %.6f)\n", result.lambda_hat,
                  result.mc_inverse_fisher);
      run.finish(common.manifest, common.seed);
    } else if (*state) {
      Run run("state-sample", state);
      const ObservedData data = load_observed(st_data, st_t1, st_t2, st_t_end);
      std::unique_ptr<GapTarget> target;
      std::unique_ptr<LocalBound> bound;
      if (st_model == "renewal") {
        const ErlangModel model(st_lambda, st_alpha, st_t_end);
        target = std::make_unique<RenewalGapTarget>(model, data.window, data.left, data.right);
        bound = std::make_unique<ErlangLocalBound>(
            erlang_local_bound(model, data.window, data.left, data.right));
      } else {
        const PairwiseModel model(st_beta1, st_gamma, st_range, st_t_end);
        target = std::make_unique<PairwiseGapTarget>(model, data.window, data.left, data.right);
        bound = std::make_unique<ConstantBound>(pairwise_local_bound(model));
      }
      std::string text = "sample_index,n_points,points\n";
      const SampleVisitor visit = [&text](std::size_t index, std::span<const double> gap) {
        text += std::to_string(index) + "," + std::to_string(gap.size()) + "," + join_points(gap) + "\n";
      };
      st_chain.seed = common.seed;
      if (st_sampler == "mh") {
        const ChainStats stats = run_mh(*target, st_chain, visit);
        std::printf("%llu steps, %llu/%llu births and %llu/%llu deaths accepted\n",
                    static_cast<unsigned long long>(stats.steps),
                    static_cast<unsigned long long>(stats.births_accepted),
                    static_cast<unsigned long long>(stats.birth_proposals),
                    static_cast<unsigned long long>(stats.deaths_accepted),
                    static_cast<unsigned long long>(stats.death_proposals));
      } else {
        const BdSchedule schedule{st_chain.burn_in, st_spacing, st_chain.n_samples, common.seed};
        const BdStats stats = run_bd(*target, *bound, schedule, visit);
        std::printf("%llu jumps, %llu births, %llu deaths, clock %.4f\n",
                    static_cast<unsigned long long>(stats.jumps),
                    static_cast<unsigned long long>(stats.births_accepted),
                    static_cast<unsigned long long>(stats.deaths), stats.elapsed);
      }
      run.write(st_out, text);
      run.finish(common.manifest, common.seed);
    } else if (*cox) {
      Run run("cox-compound", cox);
      const CompoundPoissonModel model(cx_l1, cx_l2, BrokenWindow(cx_t1, cx_t2, cx_t_end));
      const LevelPosterior post = posterior_level_prob(model, cx_n);
      const auto pmf = gap_count_posterior(model, cx_n, cx_n_max);
      run.write_json(cx_out, json{{"p1", post.p1}, {"p2", post.p2}, {"gap_count_pmf", pmf}});
      std::printf("p1 %.6f  p2 %.6f\n", post.p1, post.p2);
      run.finish(common.manifest, std::nullopt);
    } else if (*lg_sim) {
      Run run("lgcp simulate", lg_sim);
      const lgcp::Mu0Model mu0 = lg_sim_mu0.empty() ? lgcp::nhs_like_mu0() : mu0_from_json(lg_sim_mu0);
      Rng rng = make_rng(common.seed);
      const auto series =
          lgcp::synthetic_series(mu0, lg_sim_params, lg_days, lg_gap_first, lg_gap_last, rng);
      run.write(lg_sim_out, io::format_counts(series.counts));
      run.write(lg_sim_complete, io::format_counts(series.complete));
      std::string field = "day,gamma,s\n";
      for (std::size_t i = 0; i < series.field.s.size(); ++i) {
        field += std::to_string(i) + "," + io::format_double(series.field.gammas[i]) + "," +
                 io::format_double(series.field.s[i]) + "\n";
      }
      run.write(lg_sim_field, field);
      std::int64_t hidden_total = 0;
      for (std::size_t i = 0; i < series.complete.size(); ++i) {
        if (!series.counts.observed[i]) hidden_total += series.complete.counts[i];
      }
      std::cout << lg_days << " days, " << hidden_total << " calls hidden\n";
      run.finish(common.manifest, common.seed);
    } else if (*lg_fit) {
      Run run("lgcp fit-mu0", lg_fit);
      lgcp::DailyCounts counts = io::read_counts(lg_counts);
      if (lg_naive) counts = lgcp::hidden_as_zero(counts);
      const lgcp::Mu0Fit fit = lgcp::fit_mu0(counts);
      json out = mu0_to_json(fit.model);
      out["variant"] = lg_naive ? "naive" : "gap-aware";
      out["iterations"] = fit.iterations;
      out["log_likelihood"] = fit.log_likelihood;
      out["n_observed"] = fit.n_observed;
      run.write_json(lg_fit_out, out);
      const auto weeks = lgcp::weekly_average(fit.model, counts.first_day, counts.size());
      std::string weekly = "week,first_day,mu0_mean\n";
      for (std::size_t w = 0; w < weeks.size(); ++w) {
        weekly += std::to_string(w) + "," + std::to_string(counts.first_day + 7 * static_cast<std::int64_t>(w)) +
                  "," + io::format_double(weeks[w]) + "\n";
      }
      run.write(lg_weekly, weekly);
      std::cout << "converged in " << fit.iterations << " iterations\n";
      run.finish(common.manifest, std::nullopt);
    } else if (*lg_mc) {
      Run run("lgcp mincontrast", lg_mc);
      lgcp::DailyCounts counts = io::read_counts(lg_counts);
      if (lg_mc_naive) counts = lgcp::hidden_as_zero(counts);
      const lgcp::Mu0Model mu0 = mu0_from_json(lg_mu0);
      const lgcp::ContrastFit fit = lgcp::minimum_contrast(counts, mu0, lg_lags);
      json stats = json::array();
      for (double s : fit.statistics) stats.push_back(std::isnan(s) ? json(nullptr) : json(s));
      run.write_json(lg_mc_out, json{{"sigma2", fit.params.sigma2},
                                     {"beta", fit.params.beta},
                                     {"objective", fit.objective},
                                     {"lags", lg_lags},
                                     {"statistics", stats}});
      std::string curve = "lag,statistic,model\n";
      for (std::size_t k = 0; k < fit.statistics.size(); ++k) {
        curve += std::to_string(k + 1) + "," +
                 (std::isnan(fit.statistics[k]) ? std::string() : io::format_double(fit.statistics[k])) +
                 "," + io::format_double(lgcp::pair_corr_model(fit.params, static_cast<double>(k + 1))) +
                 "\n";
      }
      run.write(lg_mc_curve, curve);
      std::printf("sigma2 %.6f  beta %.6f\n", fit.params.sigma2, fit.params.beta);
      run.finish(common.manifest, std::nullopt);
    } else if (*lg_state) {
      Run run("lgcp state", lg_state);
      const lgcp::DailyCounts counts = io::read_counts(lg_counts);
      const lgcp::Mu0Model mu0 = mu0_from_json(lg_mu0);
      const auto problem =
          lgcp::StateProblem::build(counts, mu0, lg_params, lg_first, lg_last, lg_radius);
      if (problem.gap.empty()) throw DomainError("state window contains no hidden days");
      lg_sched.seed = common.seed;
      const lgcp::MalaRun chain = lgcp::run_mala(problem, lg_sched);
      std::vector<double> gap_mu0;
      std::string chain_csv = "sample";
      for (std::size_t i : problem.gap) {
        gap_mu0.push_back(problem.mu0[i]);
        chain_csv += ",day_" + std::to_string(problem.first_day + static_cast<std::int64_t>(i));
      }
      chain_csv += "\n";
      for (std::size_t k = 0; k < chain.gap_fields.size(); ++k) {
        chain_csv += std::to_string(k);
        for (double s : chain.gap_fields[k]) chain_csv += "," + io::format_double(s);
        chain_csv += "\n";
      }
      run.write(lg_chain_out, chain_csv);
      const auto post = lgcp::gap_intensity_posterior(chain.gap_fields, gap_mu0, lg_bins);
      std::string hist = "bin_lo,bin_hi,count\n";
      for (std::size_t b = 0; b < post.bin_counts.size(); ++b) {
        hist += io::format_double(post.bin_edges[b]) + "," + io::format_double(post.bin_edges[b + 1]) +
                "," + std::to_string(post.bin_counts[b]) + "\n";
      }
      run.write(lg_hist, hist);
      run.write_json(lg_summary, json{{"mean", post.mean},
                                      {"q025", post.q025},
                                      {"q50", post.q50},
                                      {"q975", post.q975},
                                      {"acceptance_rate", chain.acceptance_rate},
                                      {"n_samples", chain.gap_fields.size()}});
      std::printf("posterior mean gap total %.3f  (95%% %.3f .. %.3f), acceptance %.3f\n", post.mean,
                  post.q025, post.q975, chain.acceptance_rate);
      run.finish(common.manifest, common.seed);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
