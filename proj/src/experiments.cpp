#include "saflab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "saflab/combination.hpp"
#include "saflab/errors.hpp"
#include "saflab/filterbank.hpp"
#include "saflab/kernels.hpp"
#include "saflab/theory.hpp"
#include "saflab/wav.hpp"

namespace saflab {

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw InvalidArgument("at least one algorithm is required");
  if (filter_len < 5) throw InvalidArgument("filter_len must be >= 5");
  if (num_subbands < 1) throw InvalidArgument("num_subbands must be >= 1");
  if (proto_len < 0) throw InvalidArgument("proto_len must be >= 0");
  if (proto_len > 0 && proto_len < num_subbands)
    throw InvalidArgument("proto_len must be >= num_subbands");
  if (!(step > 0.0)) throw InvalidArgument("step must be > 0");
  if (!(mu2 > 0.0)) throw InvalidArgument("mu2 must be > 0");
  if (!(mu_alpha >= 0.0)) throw InvalidArgument("mu_alpha must be >= 0");
  if (!(vss.alpha > 0.0 && vss.alpha < 1.0)) throw InvalidArgument("vss alpha must lie in (0, 1)");
  if (!(vss.beta > 0.0)) throw InvalidArgument("vss beta must be > 0");
  if (vss.mu_max && !(*vss.mu_max > 0.0)) throw InvalidArgument("vss mu_max must be > 0");
  if (vss.mu_min && !(*vss.mu_min > 0.0)) throw InvalidArgument("vss mu_min must be > 0");
  if (vss.mu_max && vss.mu_min && *vss.mu_min > *vss.mu_max)
    throw InvalidArgument("vss mu_min must not exceed mu_max");
  if (!(input_variance > 0.0)) throw InvalidArgument("input variance must be > 0");
  if (input.type == InputKind::Type::ar1 && !(std::abs(input.coefficient) < 1.0))
    throw InvalidArgument("AR(1) coefficient must satisfy |a| < 1");
  input_noise.validate();
  output_noise.validate();
  if (robust.window_len < 1) throw InvalidArgument("robust window_len must be >= 1");
  if (!(robust.forgetting > 0.0 && robust.forgetting < 1.0))
    throw InvalidArgument("robust forgetting must lie in (0, 1)");
  if (!(power_forgetting >= 0.0 && power_forgetting < 1.0))
    throw InvalidArgument("power_forgetting must lie in [0, 1)");
  if (!(regularization > 0.0)) throw InvalidArgument("regularization must be > 0");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (iters < 1) throw InvalidArgument("iters must be >= 1");
  for (double s : sweep.steps)
    if (!(s > 0.0)) throw InvalidArgument("sweep steps must be > 0");
  for (double v : sweep.noise_vars)
    if (!(v > 0.0)) throw InvalidArgument("sweep noise variances must be > 0");
  if (!(echo_decay > 0.0)) throw InvalidArgument("echo_decay must be > 0");
  const bool tls = std::any_of(algorithms.begin(), algorithms.end(), is_tls_family);
  if (tls && !(input_noise.gaussian_variance > 0.0)) throw ThetaUndefined();
}

namespace {

using nlohmann::json;

json noise_json(const NoiseSpec& n) {
  return {{"variance", n.gaussian_variance},
          {"impulse_prob", n.impulse_probability},
          {"impulse_ratio", n.impulse_variance_ratio}};
}

void check_keys(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw InvalidArgument("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
  }
}

NoiseSpec noise_from_json(const json& j, NoiseSpec n, const char* where) {
  check_keys(j, {"variance", "impulse_prob", "impulse_ratio"}, where);
  get_if(j, "variance", n.gaussian_variance);
  get_if(j, "impulse_prob", n.impulse_probability);
  get_if(j, "impulse_ratio", n.impulse_variance_ratio);
  return n;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j,
             {"algorithms", "filter_len", "num_subbands", "proto_len", "step", "mu2", "mu_alpha",
              "vss", "input", "input_noise", "output_noise", "robust", "power_forgetting",
              "regularization", "fixed_powers", "trials", "iters", "seed", "sweep", "wav",
              "echo_decay", "out"},
             "config");
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    const auto& a = j.at("algorithms");
    if (a.is_string()) {
      c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    } else if (a.is_array()) {
      for (const auto& x : a) {
        if (!x.is_string()) throw InvalidArgument("algorithms must be strings");
        c.algorithms.push_back(parse_algorithm(x.get<std::string>()));
      }
    } else {
      throw InvalidArgument("algorithms must be a string or an array");
    }
  }
  get_if(j, "filter_len", c.filter_len);
  get_if(j, "num_subbands", c.num_subbands);
  get_if(j, "proto_len", c.proto_len);
  get_if(j, "step", c.step);
  get_if(j, "mu2", c.mu2);
  get_if(j, "mu_alpha", c.mu_alpha);
  if (j.contains("vss")) {
    const auto& v = j.at("vss");
    check_keys(v, {"alpha", "beta", "mu_max", "mu_min"}, "vss");
    get_if(v, "alpha", c.vss.alpha);
    get_if(v, "beta", c.vss.beta);
    if (v.contains("mu_max") && !v.at("mu_max").is_null()) {
      double m = 0.0;
      get_if(v, "mu_max", m);
      c.vss.mu_max = m;
    }
    if (v.contains("mu_min") && !v.at("mu_min").is_null()) {
      double m = 0.0;
      get_if(v, "mu_min", m);
      c.vss.mu_min = m;
    }
  }
  if (j.contains("input")) {
    const auto& in = j.at("input");
    check_keys(in, {"type", "coefficient", "variance"}, "input");
    std::string type = "white";
    get_if(in, "type", type);
    double a = 0.0;
    get_if(in, "coefficient", a);
    if (type == "white")
      c.input = InputKind::white();
    else if (type == "ar1")
      c.input = InputKind::ar1(a);
    else
      throw InvalidArgument("input type must be 'white' or 'ar1'");
    get_if(in, "variance", c.input_variance);
  }
  if (j.contains("input_noise"))
    c.input_noise = noise_from_json(j.at("input_noise"), c.input_noise, "input_noise");
  if (j.contains("output_noise"))
    c.output_noise = noise_from_json(j.at("output_noise"), c.output_noise, "output_noise");
  if (j.contains("robust")) {
    check_keys(j.at("robust"), {"window_len", "forgetting"}, "robust");
    get_if(j.at("robust"), "window_len", c.robust.window_len);
    get_if(j.at("robust"), "forgetting", c.robust.forgetting);
  }
  get_if(j, "power_forgetting", c.power_forgetting);
  get_if(j, "regularization", c.regularization);
  get_if(j, "fixed_powers", c.fixed_powers);
  get_if(j, "trials", c.trials);
  get_if(j, "iters", c.iters);
  get_if(j, "seed", c.seed);
  if (j.contains("sweep")) {
    check_keys(j.at("sweep"), {"steps", "noise_vars"}, "sweep");
    get_if(j.at("sweep"), "steps", c.sweep.steps);
    get_if(j.at("sweep"), "noise_vars", c.sweep.noise_vars);
  }
  get_if(j, "wav", c.wav);
  get_if(j, "echo_decay", c.echo_decay);
  get_if(j, "out", c.out);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json algos = json::array();
  for (auto a : c.algorithms) algos.push_back(std::string(to_string(a)));
  json vss = {{"alpha", c.vss.alpha}, {"beta", c.vss.beta}, {"mu_max", nullptr},
              {"mu_min", nullptr}};
  if (c.vss.mu_max) vss["mu_max"] = *c.vss.mu_max;
  if (c.vss.mu_min) vss["mu_min"] = *c.vss.mu_min;
  return {
      {"algorithms", algos},
      {"filter_len", c.filter_len},
      {"num_subbands", c.num_subbands},
      {"proto_len", c.proto_len},
      {"step", c.step},
      {"mu2", c.mu2},
      {"mu_alpha", c.mu_alpha},
      {"vss", vss},
      {"input",
       {{"type", c.input.type == InputKind::Type::white ? "white" : "ar1"},
        {"coefficient", c.input.coefficient},
        {"variance", c.input_variance}}},
      {"input_noise", noise_json(c.input_noise)},
      {"output_noise", noise_json(c.output_noise)},
      {"robust", {{"window_len", c.robust.window_len}, {"forgetting", c.robust.forgetting}}},
      {"power_forgetting", c.power_forgetting},
      {"regularization", c.regularization},
      {"fixed_powers", c.fixed_powers},
      {"trials", c.trials},
      {"iters", c.iters},
      {"seed", c.seed},
      {"sweep", {{"steps", c.sweep.steps}, {"noise_vars", c.sweep.noise_vars}}},
      {"wav", c.wav},
      {"echo_decay", c.echo_decay},
      {"out", c.out},
  };
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // The output directory does not change results, so it stays out of the hash.
  auto j = to_json(c);
  j.erase("out");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- metrics

double nmsd(std::span<const double> w, std::span<const double> h) {
  if (w.size() != h.size()) throw InvalidArgument("nmsd: length mismatch");
  double hh = 0.0, dd = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    hh += h[i] * h[i];
    const double d = w[i] - h[i];
    dd += d * d;
  }
  if (!(hh > 0.0)) throw DegeneratePlant();
  if (std::isnan(dd)) return dd;
  return std::max(kNmsdFloorDb, 10.0 * std::log10(dd / hh));
}

double NmsdTrace::steady_state_db() const {
  if (db.empty()) return 0.0;
  const std::size_t n = std::max<std::size_t>(1, db.size() / 10);
  double acc = 0.0;
  for (std::size_t i = db.size() - n; i < db.size(); ++i) acc += db[i];
  return acc / static_cast<double>(n);
}

std::optional<int> NmsdTrace::first_reaching(double level) const {
  for (std::size_t i = 0; i < db.size(); ++i)
    if (db[i] <= level) return static_cast<int>(i);
  return std::nullopt;
}

// ---------------------------------------------------------------- threads

int worker_count(int jobs) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SAFLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = v;
  }
  return std::clamp(n, 1, std::max(1, jobs));
}

namespace {

// Calls fn(i) for i in [0, jobs) on worker threads. The first exception is
// rethrown after all workers stop.
template <class Fn>
void parallel_for(int jobs, Fn&& fn) {
  const int workers = worker_count(jobs);
  if (workers <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(jobs);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- filters

class Filter {
 public:
  virtual ~Filter() = default;
  virtual StepReport step(std::span<const SubbandFrame> frames) = 0;
  virtual std::span<const double> taps() const = 0;
  virtual void record(NmsdTrace&) const {}
};

class PlainFilter final : public Filter {
 public:
  PlainFilter(const ExperimentConfig& c, Algorithm kind, int num_subbands, double theta,
              const std::vector<double>* powers)
      : state_(c.filter_len, num_subbands, theta, c.robust, c.power_forgetting) {
    params_.kind = kind;
    params_.step = c.step;
    params_.num_subbands = num_subbands;
    params_.filter_len = c.filter_len;
    params_.regularization = c.regularization;
    if (powers && is_tls_family(kind)) state_.fix_subband_powers(*powers);
  }
  StepReport step(std::span<const SubbandFrame> f) override {
    return step_baseline(state_, f, params_);
  }
  std::span<const double> taps() const override { return state_.taps(); }

 private:
  WeightState state_;
  AlgoParams params_;
};

void widen(std::optional<double>& lo, std::optional<double>& hi, double v) {
  lo = lo ? std::min(*lo, v) : v;
  hi = hi ? std::max(*hi, v) : v;
}

VariableStep make_vss(const ExperimentConfig& c, double h_norm_sq, double theta) {
  VariableStep v;
  v.alpha = c.vss.alpha;
  v.beta = c.vss.beta;
  v.mu_max = c.vss.mu_max.value_or(0.5 * 2.0 * (h_norm_sq + theta));
  v.mu_min = c.vss.mu_min.value_or(std::min(c.mu2, v.mu_max));
  v.mu = v.mu_max;
  return v;
}

class VssFilter final : public Filter {
 public:
  VssFilter(const ExperimentConfig& c, double theta, double h_norm_sq,
            const std::vector<double>* powers)
      : state_(c.filter_len, c.num_subbands, theta, make_vss(c, h_norm_sq, theta), c.robust,
               c.regularization) {
    if (powers) state_.weights().fix_subband_powers(*powers);
  }
  StepReport step(std::span<const SubbandFrame> f) override {
    auto r = state_.step(f);
    widen(lo_, hi_, state_.vss().mu);
    return r;
  }
  std::span<const double> taps() const override { return state_.taps(); }
  void record(NmsdTrace& t) const override {
    t.mu_vss_min = lo_;
    t.mu_vss_max = hi_;
  }

 private:
  VssTlmmState state_;
  std::optional<double> lo_, hi_;
};

class ComboFilter final : public Filter {
 public:
  ComboFilter(const ExperimentConfig& c, bool variable, double theta, double h_norm_sq,
              const std::vector<double>* powers)
      : variable_(variable), state_(make(c, variable, theta, h_norm_sq)) {
    if (powers) state_.fix_subband_powers(*powers);
  }
  StepReport step(std::span<const SubbandFrame> f) override {
    auto r = step_combination(state_, f);
    widen(lam_lo_, lam_hi_, state_.mixing().lambda);
    if (variable_) widen(mu_lo_, mu_hi_, state_.vss().mu);
    return r;
  }
  std::span<const double> taps() const override { return state_.taps(); }
  void record(NmsdTrace& t) const override {
    t.lambda_min = lam_lo_;
    t.lambda_max = lam_hi_;
    if (variable_) {
      t.mu_vss_min = mu_lo_;
      t.mu_vss_max = mu_hi_;
    }
  }

 private:
  static CombinationState make(const ExperimentConfig& c, bool variable, double theta,
                               double h_norm_sq) {
    CombinationConfig cc;
    cc.mu2 = c.mu2;
    if (!variable) cc.mu1 = c.step;
    cc.vss = make_vss(c, h_norm_sq, theta);
    cc.mixing.mu_alpha = c.mu_alpha;
    cc.regularization = c.regularization;
    return CombinationState(c.filter_len, c.num_subbands, theta, cc, c.robust);
  }

  bool variable_;
  CombinationState state_;
  std::optional<double> lam_lo_, lam_hi_, mu_lo_, mu_hi_;
};

std::unique_ptr<Filter> make_filter(const ExperimentConfig& c, Algorithm a, double theta,
                                    double h_norm_sq, const std::vector<double>* powers) {
  switch (a) {
    case Algorithm::nlms:
      return std::make_unique<PlainFilter>(c, a, 1, theta, nullptr);
    case Algorithm::nsaf:
    case Algorithm::m_nsaf:
    case Algorithm::tls_nsaf:
    case Algorithm::tlmm_nsaf:
      return std::make_unique<PlainFilter>(c, a, c.num_subbands, theta, powers);
    case Algorithm::vss_tlmm:
      return std::make_unique<VssFilter>(c, theta, h_norm_sq, powers);
    case Algorithm::ctlmm:
      return std::make_unique<ComboFilter>(c, false, theta, h_norm_sq, powers);
    case Algorithm::vss_ctlmm:
      return std::make_unique<ComboFilter>(c, true, theta, h_norm_sq, powers);
  }
  throw InvalidArgument("unknown algorithm");
}

// ---------------------------------------------------------------- driver

struct Shared {
  AnalysisBank bank;
  AnalysisBank fullband;
  std::optional<std::vector<double>> powers;  // injected subband powers
  std::uint64_t hash;
};

Shared make_shared_state(const ExperimentConfig& c) {
  c.validate();
  Shared s{AnalysisBank::design(c.num_subbands, c.effective_proto_len()),
           AnalysisBank::design(1, 1), std::nullopt, config_hash(c)};
  if (c.fixed_powers) {
    const auto pr = probe_subbands(s.bank, c.filter_len, c.input, c.input_variance);
    std::vector<double> p;
    for (std::size_t i = 0; i < pr.input_power.size(); ++i)
      p.push_back(pr.input_power[i] + c.input_noise.gaussian_variance * pr.white_power[i]);
    s.powers = std::move(p);
  }
  return s;
}

struct RunOutput {
  std::vector<NmsdTrace> traces;
  std::vector<std::vector<double>> residuals;
};

// Runs every configured algorithm over one EIV realization. `iters` decimated
// iterations are recorded; residual audio is collected when asked.
RunOutput run_stream(const ExperimentConfig& c, const Shared& sh, const EivStream& s,
                     int iters, bool want_residuals) {
  const double theta = s.theta.value_or(0.0);
  double h_norm_sq = 0.0;
  for (double v : s.plant) h_norm_sq += v * v;
  if (!(h_norm_sq > 0.0)) throw DegeneratePlant();

  const int N = c.num_subbands;
  const auto na = c.algorithms.size();
  const std::vector<double>* powers = sh.powers ? &*sh.powers : nullptr;

  std::vector<std::unique_ptr<Filter>> filters;
  for (auto a : c.algorithms) filters.push_back(make_filter(c, a, theta, h_norm_sq, powers));

  RunOutput out;
  out.traces.resize(na);
  for (std::size_t k = 0; k < na; ++k) {
    out.traces[k].label = std::string(to_string(c.algorithms[k]));
    out.traces[k].db.reserve(iters);
    out.traces[k].trials = 1;
    out.traces[k].config_hash = sh.hash;
  }
  if (want_residuals) out.residuals.assign(na, {});

  const bool has_nlms =
      std::find(c.algorithms.begin(), c.algorithms.end(), Algorithm::nlms) != c.algorithms.end();
  SubbandAnalyzer sub(sh.bank, c.filter_len);
  std::optional<SubbandAnalyzer> full;
  if (has_nlms || want_residuals) full.emplace(sh.fullband, c.filter_len);

  std::vector<char> dead(na, 0);
  const std::size_t total = static_cast<std::size_t>(iters) * N;
  for (std::size_t n = 0; n < total; ++n) {
    const double x = s.noisy_input[n], d = s.noisy_desired[n];
    if (full) full->push(x, d);
    if (want_residuals) {
      const auto fr = full->frames()[0];
      for (std::size_t k = 0; k < na; ++k)
        out.residuals[k].push_back(fr.desired - kernels::dot(fr.regressor, filters[k]->taps()));
    }
    for (std::size_t k = 0; k < na; ++k) {
      if (dead[k] || c.algorithms[k] != Algorithm::nlms) continue;
      if (filters[k]->step(full->frames()).nonfinite) dead[k] = 1;
    }
    if (!sub.push(x, d)) continue;

    const auto frames = sub.frames();
    for (std::size_t k = 0; k < na; ++k) {
      auto& tr = out.traces[k];
      if (!dead[k] && c.algorithms[k] != Algorithm::nlms && filters[k]->step(frames).nonfinite)
        dead[k] = 1;
      double v = dead[k] ? kDivergenceDb : nmsd(filters[k]->taps(), s.plant);
      if (!std::isfinite(v) || v > kDivergenceDb) {
        dead[k] = 1;
        v = kDivergenceDb;
      }
      tr.db.push_back(v);
    }
  }
  for (std::size_t k = 0; k < na; ++k) {
    out.traces[k].diverged = dead[k] ? 1 : 0;
    filters[k]->record(out.traces[k]);
  }
  return out;
}

EivStream sysid_stream(const ExperimentConfig& c, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  const auto plant = random_plant(c.filter_len, derive_seed(c.seed, t, streams::kPlant));
  const std::size_t n = static_cast<std::size_t>(c.iters) * c.num_subbands;
  const auto x = gen_input(c.input, c.input_variance, n, derive_seed(c.seed, t, streams::kInput));
  return make_eiv_stream(plant, x, c.input_noise, c.output_noise,
                         derive_seed(c.seed, t, streams::kInputNoise));
}

void merge_range(std::optional<double>& lo, std::optional<double>& hi,
                 const std::optional<double>& l, const std::optional<double>& h) {
  if (l) lo = lo ? std::min(*lo, *l) : *l;
  if (h) hi = hi ? std::max(*hi, *h) : *h;
}

std::vector<NmsdTrace> average(const std::vector<TrialTraces>& per_trial) {
  std::vector<NmsdTrace> out = per_trial.front().traces;
  const double t = static_cast<double>(per_trial.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& o = out[k];
    o.trials = static_cast<int>(per_trial.size());
    o.diverged = 0;
    o.lambda_min = o.lambda_max = o.mu_vss_min = o.mu_vss_max = std::nullopt;
    std::fill(o.db.begin(), o.db.end(), 0.0);
    for (const auto& tt : per_trial) {
      const auto& src = tt.traces[k];
      for (std::size_t i = 0; i < o.db.size(); ++i) o.db[i] += src.db[i];
      o.diverged += src.diverged;
      merge_range(o.lambda_min, o.lambda_max, src.lambda_min, src.lambda_max);
      merge_range(o.mu_vss_min, o.mu_vss_max, src.mu_vss_min, src.mu_vss_max);
    }
    for (auto& v : o.db) v /= t;
  }
  return out;
}

}  // namespace

TrialTraces run_sysid_trial(const ExperimentConfig& config, int trial) {
  const Shared sh = make_shared_state(config);
  return {run_stream(config, sh, sysid_stream(config, trial), config.iters, false).traces};
}

std::vector<NmsdTrace> run_sysid(const ExperimentConfig& config) {
  const Shared sh = make_shared_state(config);
  std::vector<TrialTraces> per_trial(config.trials);
  parallel_for(config.trials, [&](int t) {
    per_trial[t].traces = run_stream(config, sh, sysid_stream(config, t), config.iters, false).traces;
  });
  return average(per_trial);
}

AecResult run_aec(const ExperimentConfig& config, std::span<const double> far_end,
                  std::span<const double> echo_path) {
  const Shared sh = make_shared_state(config);
  if (static_cast<int>(echo_path.size()) != config.filter_len)
    throw InvalidArgument("echo path length must equal filter_len");
  double e2 = 0.0;
  for (double v : echo_path) e2 += v * v;
  if (!(e2 > 0.0)) throw DegeneratePlant();
  const int iters = std::min<std::int64_t>(config.iters, far_end.size() / config.num_subbands);
  if (iters < 1) throw InvalidArgument("far-end signal shorter than one decimated iteration");
  const std::size_t n = static_cast<std::size_t>(iters) * config.num_subbands;

  std::vector<TrialTraces> per_trial(config.trials);
  std::vector<std::vector<double>> residuals;
  parallel_for(config.trials, [&](int t) {
    const auto s = make_eiv_stream(echo_path, far_end.first(n), config.input_noise,
                                   config.output_noise,
                                   derive_seed(config.seed, static_cast<std::uint64_t>(t),
                                               streams::kInputNoise));
    auto r = run_stream(config, sh, s, iters, t == 0);
    per_trial[t].traces = std::move(r.traces);
    if (t == 0) residuals = std::move(r.residuals);
  });
  return {average(per_trial), std::move(residuals)};
}

AecResult run_aec(const ExperimentConfig& config) {
  config.validate();
  std::vector<double> far;
  if (config.wav.empty()) {
    far = synth_speech(static_cast<std::size_t>(config.iters) * config.num_subbands,
                       derive_seed(config.seed, 0, streams::kInput));
  } else {
    far = load_wav(config.wav);
  }
  const auto echo = decaying_echo_path(config.filter_len,
                                       derive_seed(config.seed, 0, streams::kPlant),
                                       config.echo_decay);
  return run_aec(config, far, echo);
}

std::vector<TheoryRow> theory_vs_sim(const ExperimentConfig& config) {
  config.validate();
  const auto bank = AnalysisBank::design(config.num_subbands, config.effective_proto_len());
  const auto h = random_plant(config.filter_len, derive_seed(config.seed, 0, streams::kPlant));
  double hh = 0.0;
  for (double v : h) hh += v * v;

  std::vector<TheoryRow> rows;
  for (double var : config.sweep.noise_vars) {
    const auto pm = plant_from_bank(bank, h, config.input, config.input_variance, var, var);
    const auto bounds = step_bounds(pm);
    for (double mu : config.sweep.steps) {
      TheoryRow row;
      row.step = mu;
      row.noise_var = var;
      if (!(mu < bounds.stable_bound)) {
        row.stable = false;
        rows.push_back(row);
        continue;
      }
      try {
        const auto msd = steady_state_msd(pm, mu);
        row.predicted_db = 10.0 * std::log10(msd.predicted_msd / hh);
      } catch (const UnstableStep&) {
        row.stable = false;
        rows.push_back(row);
        continue;
      }
      ExperimentConfig sim = config;
      sim.algorithms = {Algorithm::tlmm_nsaf};
      sim.step = mu;
      sim.input_noise = NoiseSpec::gaussian(var);
      sim.output_noise = NoiseSpec::gaussian(var);
      sim.fixed_powers = true;
      row.simulated_db = run_sysid(sim).front().steady_state_db();
      row.gap_db = row.simulated_db - row.predicted_db;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace saflab
