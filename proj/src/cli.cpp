#include "saflab/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "saflab/errors.hpp"
#include "saflab/experiments.hpp"
#include "saflab/report.hpp"
#include "saflab/theory.hpp"
#include "saflab/wav.hpp"

namespace saflab {

namespace fs = std::filesystem;

namespace {

struct BadConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values; applied over the config file only when given.
struct Flags {
  std::string config_path;
  std::string algos;
  int n_subbands = 0, filter_len = 0, trials = 0, iters = 0, proto_len = 0;
  double mu = 0, mu2 = 0, mu_alpha = 0;
  double sigma_in = 0, sigma_out = 0, impulse_prob = 0, impulse_ratio = 0;
  double input_var = 0, ar_coef = 0;
  std::string input_type;
  std::uint64_t seed = 0;
  std::string out;
  bool plot = false;
  bool fixed_powers = false;
  std::string wav;
  std::vector<double> steps, noise_vars;
  double theta = 0, h_norm_sq = 1.0;

  std::map<std::string, CLI::Option*> opts;
  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* app, Flags& f) {
  auto& o = f.opts;
  o["config"] = app->add_option("--config", f.config_path, "JSON config file")
                    ->check(CLI::ExistingFile);
  o["algo"] = app->add_option("--algo", f.algos, "comma-separated algorithm list");
  o["n-subbands"] = app->add_option("--n-subbands", f.n_subbands, "number of subbands N");
  o["filter-len"] = app->add_option("--filter-len,--l", f.filter_len, "adaptive filter length L");
  o["proto-len"] = app->add_option("--proto-len", f.proto_len, "analysis filter length (0: 8N)");
  o["mu"] = app->add_option("--mu", f.mu, "step size");
  o["mu2"] = app->add_option("--mu2", f.mu2, "slow-branch step of the combinations");
  o["mu-alpha"] = app->add_option("--mu-alpha", f.mu_alpha, "mixing-parameter step");
  o["sigma-in"] = app->add_option("--sigma-in", f.sigma_in, "input noise variance");
  o["sigma-out"] = app->add_option("--sigma-out", f.sigma_out, "output noise variance");
  o["impulse-prob"] =
      app->add_option("--impulse-prob", f.impulse_prob, "output impulse probability");
  o["impulse-ratio"] =
      app->add_option("--impulse-ratio", f.impulse_ratio, "impulse to background variance ratio");
  o["input"] = app->add_option("--input", f.input_type, "input process: white | ar1")
                   ->check(CLI::IsMember({"white", "ar1"}));
  o["ar-coef"] = app->add_option("--ar-coef", f.ar_coef, "AR(1) pole for --input ar1");
  o["input-var"] = app->add_option("--input-var", f.input_var, "input variance");
  o["fixed-powers"] =
      app->add_flag("--fixed-powers", f.fixed_powers, "inject probed subband powers");
  o["trials"] = app->add_option("--trials", f.trials, "Monte-Carlo trials");
  o["iters"] = app->add_option("--iters", f.iters, "decimated iterations per trial");
  o["seed"] = app->add_option("--seed", f.seed, "base RNG seed");
  o["out"] = app->add_option("--out", f.out, "output directory");
  o["plot"] = app->add_flag("--plot", f.plot, "also write an SVG chart");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  try {
    if (!f.config_path.empty()) {
      std::ifstream in(f.config_path);
      if (!in) throw BadConfig("cannot read " + f.config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw BadConfig(f.config_path + ": " + e.what());
      }
      c = config_from_json(j);
    }
    if (f.given("algo")) {
      c.algorithms.clear();
      std::stringstream ss(f.algos);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) c.algorithms.push_back(parse_algorithm(item));
    }
    if (f.given("n-subbands")) c.num_subbands = f.n_subbands;
    if (f.given("filter-len")) c.filter_len = f.filter_len;
    if (f.given("proto-len")) c.proto_len = f.proto_len;
    if (f.given("mu")) c.step = f.mu;
    if (f.given("mu2")) c.mu2 = f.mu2;
    if (f.given("mu-alpha")) c.mu_alpha = f.mu_alpha;
    if (f.given("sigma-in")) c.input_noise.gaussian_variance = f.sigma_in;
    if (f.given("sigma-out")) c.output_noise.gaussian_variance = f.sigma_out;
    if (f.given("impulse-prob")) c.output_noise.impulse_probability = f.impulse_prob;
    if (f.given("impulse-ratio")) c.output_noise.impulse_variance_ratio = f.impulse_ratio;
    if (f.given("input"))
      c.input = f.input_type == "ar1" ? InputKind::ar1(c.input.coefficient) : InputKind::white();
    if (f.given("ar-coef")) c.input.coefficient = f.ar_coef;
    if (f.given("input-var")) c.input_variance = f.input_var;
    if (f.given("fixed-powers")) c.fixed_powers = f.fixed_powers;
    if (f.given("trials")) c.trials = f.trials;
    if (f.given("iters")) c.iters = f.iters;
    if (f.given("seed")) c.seed = f.seed;
    if (f.given("out")) c.out = f.out;
    if (f.given("wav")) c.wav = f.wav;
    if (f.given("steps")) c.sweep.steps = f.steps;
    if (f.given("noise-vars")) c.sweep.noise_vars = f.noise_vars;
    c.validate();
  } catch (const InvalidArgument& e) {
    throw BadConfig(e.what());
  }
  return c;
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

nlohmann::json run_header(const ExperimentConfig& c, std::uint64_t hash) {
  return {{"config_hash", hash_hex(hash)}, {"config", to_json(c)}};
}

bool all_diverged(const std::vector<NmsdTrace>& traces) {
  for (const auto& t : traces)
    if (t.diverged < t.trials) return false;
  return true;
}

int cmd_simulate(const Flags& f) {
  const auto c = resolve(f);
  const auto hash = config_hash(c);
  const auto traces = run_sysid(c);
  const fs::path out = c.out;
  write_traces_csv(out / "nmsd.csv", traces, hash);
  auto j = run_header(c, hash);
  j["results"] = summary_json(traces);
  write_json(out / "summary.json", j);
  if (f.plot) write_text(out / "nmsd.svg", traces_svg(traces, "system identification", hash));
  for (const auto& t : traces)
    std::cout << t.label << ": steady-state " << t.steady_state_db() << " dB, diverged "
              << t.diverged << "/" << t.trials << "\n";
  if (all_diverged(traces)) {
    std::cerr << "every run diverged\n";
    return 1;
  }
  return 0;
}

int cmd_aec(const Flags& f) {
  const auto c = resolve(f);
  const auto hash = config_hash(c);
  const auto res = run_aec(c);
  const fs::path out = c.out;
  write_traces_csv(out / "aec_nmsd.csv", res.traces, hash);
  for (std::size_t k = 0; k < res.traces.size(); ++k)
    write_wav(out / ("residual_" + res.traces[k].label + ".wav"), res.residuals[k], 8000,
              "config=" + hash_hex(hash));
  auto j = run_header(c, hash);
  j["results"] = summary_json(res.traces);
  write_json(out / "aec_summary.json", j);
  if (f.plot) write_text(out / "aec_nmsd.svg", traces_svg(res.traces, "echo cancellation", hash));
  for (const auto& t : res.traces)
    std::cout << t.label << ": steady-state " << t.steady_state_db() << " dB\n";
  if (all_diverged(res.traces)) {
    std::cerr << "every run diverged\n";
    return 1;
  }
  return 0;
}

int cmd_sweep(const Flags& f) {
  const auto c = resolve(f);
  const auto hash = config_hash(c);
  const auto rows = theory_vs_sim(c);
  const fs::path out = c.out;
  write_theory_rows_csv(out / "sweep.csv", rows, hash);
  auto j = run_header(c, hash);
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"step", r.step}, {"noise_var", r.noise_var}, {"stable", r.stable}};
    if (r.stable) {
      row["predicted_db"] = r.predicted_db;
      row["simulated_db"] = r.simulated_db;
      row["gap_db"] = r.gap_db;
    }
    arr.push_back(row);
  }
  j["rows"] = arr;
  write_json(out / "sweep.json", j);
  std::cout << theory_rows_csv(rows, hash);
  return 0;
}

int cmd_theory(const Flags& f) {
  auto c = resolve(f);
  if (!(f.h_norm_sq > 0.0)) throw BadConfig("--h-norm-sq must be > 0");
  double noise_in = c.input_noise.gaussian_variance;
  double noise_out = c.output_noise.gaussian_variance;
  if (f.given("theta")) {
    if (!(f.theta > 0.0)) throw BadConfig("--theta must be > 0");
    noise_out = f.theta * noise_in;
  }
  // The predictions depend on h only through |h|^2 (H is a multiple of I), so
  // a scaled delay keeps |h|^2 exact.
  std::vector<double> h(static_cast<std::size_t>(c.filter_len), 0.0);
  h[0] = std::sqrt(f.h_norm_sq);

  const auto bank = AnalysisBank::design(c.num_subbands, c.effective_proto_len());
  const auto plant = plant_from_bank(bank, h, c.input, c.input_variance, noise_in, noise_out);
  // Exact inputs win over the sampled ones where they are known.
  PlantModel pm = plant;
  if (f.given("theta")) pm.theta = f.theta;

  auto report = build_theory_report(pm, std::nullopt);
  nlohmann::json j = to_json(report);
  if (f.given("mu")) {
    j["step"] = c.step;
    try {
      auto msd = steady_state_msd(pm, c.step);
      report.step = c.step;
      report.msd = msd;
      report.predicted_nmsd_db = 10.0 * std::log10(msd.predicted_msd / report.h_norm_sq);
      j = to_json(report);
    } catch (const UnstableStep& e) {
      j["unstable"] = true;
      j["msd_error"] = e.what();
    } catch (const IllConditioned& e) {
      j["msd_error"] = e.what();
    }
  }
  j["num_subbands"] = c.num_subbands;
  j["filter_len"] = c.filter_len;
  j["subband_input_noise_var"] = pm.input_noise_var;
  j["subband_noisy_power"] = pm.noisy_subband_power;
  j["gammas"] = pm.gammas;
  j["config_hash"] = hash_hex(config_hash(c));
  std::cout << j.dump(2) << "\n";
  if (f.given("out")) write_json(fs::path(c.out) / "theory.json", j);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Subband adaptive filtering laboratory: TLMM-NSAF and baselines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "saflab 1.0");

  Flags sim_f, theory_f, aec_f, sweep_f;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo system identification");
  add_common(sim, sim_f);
  auto* th = app.add_subcommand("theory", "step bounds and steady-state prediction");
  add_common(th, theory_f);
  theory_f.opts["theta"] = th->add_option("--theta", theory_f.theta, "noise variance ratio");
  theory_f.opts["h-norm-sq"] = th->add_option("--h-norm-sq", theory_f.h_norm_sq, "|h|^2");
  auto* aec = app.add_subcommand("aec", "acoustic echo cancellation");
  add_common(aec, aec_f);
  aec_f.opts["wav"] = aec->add_option("--wav", aec_f.wav, "far-end WAV (mono 16-bit)")
                          ->check(CLI::ExistingFile);
  auto* sw = app.add_subcommand("sweep", "theory vs simulation over a step/variance grid");
  add_common(sw, sweep_f);
  sweep_f.opts["steps"] = sw->add_option("--steps", sweep_f.steps, "step sizes")->delimiter(',');
  sweep_f.opts["noise-vars"] =
      sw->add_option("--noise-vars", sweep_f.noise_vars, "noise variances")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_f);
    if (th->parsed()) return cmd_theory(theory_f);
    if (aec->parsed()) return cmd_aec(aec_f);
    if (sw->parsed()) return cmd_sweep(sweep_f);
  } catch (const BadConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace saflab
