// Acceptance run: one PASS/FAIL line per criterion.
//   saflab_acceptance            all criteria, exit 1 if any fails
//   saflab_acceptance 3 5        just those

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mc_oracles.hpp"
#include "saflab/algorithms.hpp"
#include "saflab/combination.hpp"
#include "saflab/experiments.hpp"
#include "saflab/filterbank.hpp"
#include "saflab/signals.hpp"
#include "saflab/theory.hpp"

using namespace saflab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const NmsdTrace& trace(const std::vector<NmsdTrace>& ts, std::string_view label) {
  for (const auto& t : ts)
    if (t.label == label) return t;
  throw std::runtime_error("missing trace " + std::string(label));
}

Eigen::VectorXd unit_plant(int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::VectorXd h(L);
  for (int i = 0; i < L; ++i) h[i] = z(rng) * std::exp(-0.2 * i);
  return h / h.norm();
}

PlantModel white_plant(const mc::Model& m) {
  PlantModel p;
  p.h = m.h;
  p.theta = m.theta;
  p.input_noise_var = m.s_in;
  p.noisy_subband_power = m.s_x;
  p.gammas.assign(m.s_in.size(), 1.0 / m.L());
  return p;
}

// 1: bound value, convergence at mu = 0.5, divergence at mu = 4.5.
Outcome criterion1() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  bool ok = true;

  PlantModel p;
  p.h = Eigen::VectorXd::Zero(128);
  p.h[0] = 1.0;
  p.theta = 1.0;
  p.input_noise_var.assign(4, 0.05);
  p.noisy_subband_power.assign(4, 1.05);
  p.gammas.assign(4, 1.0 / 128);
  const auto b = step_bounds(p);
  ok &= b.ms_bound == 4.0 && b.stable_bound == 4.0;
  d << "ms_bound=" << b.ms_bound << " stable_bound=" << b.stable_bound;

  ExperimentConfig c;
  c.algorithms = {Algorithm::tlmm_nsaf};
  c.trials = 4;
  c.iters = 5000;
  c.step = 0.5;
  const auto conv = run_sysid(c).front();
  ok &= conv.db.back() < -10.0 && conv.diverged == 0;
  d << "; mu=0.5 final " << fmt("%.2f", conv.db.back()) << " dB";

  c.step = 4.5;
  const auto div = run_sysid(c).front();
  const double peak = *std::max_element(div.db.begin(), div.db.end());
  ok &= div.diverged > 0;
  d << "; mu=4.5 diverged " << div.diverged << "/" << div.trials << " (peak "
    << fmt("%.2f", peak) << " dB, final " << fmt("%.2f", div.db.back()) << " dB)";

  const double secs = seconds_since(t0);
  ok &= secs <= 60.0;
  d << "; " << fmt("%.1f", secs) << " s";
  return {ok, d.str()};
}

// 2: theory vs simulation at two small steps and two noise levels.
Outcome criterion2() {
  const auto t0 = Clock::now();
  ExperimentConfig c;
  c.filter_len = 128;
  c.num_subbands = 4;
  c.trials = 10;
  c.iters = 20000;
  c.sweep.steps = {0.05, 0.1};
  c.sweep.noise_vars = {0.02, 0.05};
  const auto rows = theory_vs_sim(c);
  bool ok = rows.size() == 4;
  double worst = 0.0;
  std::ostringstream d;
  for (const auto& r : rows) {
    ok &= r.stable && std::abs(r.gap_db) <= 2.0;
    worst = std::max(worst, std::abs(r.gap_db));
    d << "(mu " << r.step << ", s2 " << r.noise_var << ": " << fmt("%.2f", r.predicted_db) << " vs "
      << fmt("%.2f", r.simulated_db) << ") ";
  }
  const double secs = seconds_since(t0);
  ok &= secs <= 300.0;
  d << "worst |gap| " << fmt("%.3f", worst) << " dB; " << fmt("%.1f", secs) << " s";
  return {ok, d.str()};
}

// 3: impulsive output noise, TLMM against TLS and against its own Gaussian run.
Outcome criterion3() {
  ExperimentConfig c;
  c.algorithms = {Algorithm::tls_nsaf, Algorithm::tlmm_nsaf};
  c.trials = 20;
  c.iters = 10000;
  c.step = 0.2;
  c.output_noise = NoiseSpec{0.05, 0.01, 1000.0};
  const auto imp = run_sysid(c);
  const double tls = trace(imp, "tls_nsaf").steady_state_db();
  const double tlmm = trace(imp, "tlmm_nsaf").steady_state_db();

  c.algorithms = {Algorithm::tlmm_nsaf};
  c.output_noise = NoiseSpec::gaussian(0.05);
  const double gauss = run_sysid(c).front().steady_state_db();

  const bool ok = tls - tlmm >= 10.0 && std::abs(tlmm - gauss) <= 3.0;
  std::ostringstream d;
  d << "impulsive: TLS " << fmt("%.2f", tls) << " dB, TLMM " << fmt("%.2f", tlmm)
    << " dB (margin " << fmt("%.2f", tls - tlmm) << "); TLMM Gaussian-only " << fmt("%.2f", gauss)
    << " dB (diff " << fmt("%.2f", std::abs(tlmm - gauss)) << ")";
  return {ok, d.str()};
}

struct OwnedFrames {
  std::vector<std::vector<double>> regs;
  std::vector<SubbandFrame> frames;
};

OwnedFrames random_frames(std::mt19937_64& rng, int n, int L, double scale) {
  std::normal_distribution<double> g;
  OwnedFrames f;
  f.regs.assign(n, std::vector<double>(L));
  for (auto& r : f.regs)
    for (auto& x : r) x = g(rng);
  for (int i = 0; i < n; ++i) f.frames.push_back({i, 0, f.regs[i], scale * g(rng)});
  return f;
}

// 4: 1e4 random frames; every fully gated one must leave the taps untouched.
Outcome criterion4() {
  std::mt19937_64 rng(0xacce55);
  std::uniform_real_distribution<double> logscale(-2.0, 5.0);
  const int L = 16, N = 4, frames = 10000;
  int all_gated = 0, violations = 0;
  std::optional<WeightState> s;
  for (int k = 0; k < frames; ++k) {
    if (k % 50 == 0) {
      s.emplace(L, N, 1.0);
      for (int z = 0; z < 20; ++z) step_tlmm(*s, random_frames(rng, N, L, 0.01).frames, 0.1);
    }
    auto f = random_frames(rng, N, L, std::pow(10.0, logscale(rng)));
    const std::vector<double> before(s->taps().begin(), s->taps().end());
    const auto rep = step_tlmm(*s, f.frames, 0.1);
    if (rep.gated == N) {
      ++all_gated;
      if (!std::equal(before.begin(), before.end(), s->taps().begin())) ++violations;
    }
  }
  std::ostringstream d;
  d << all_gated << " of " << frames << " frames fully gated, " << violations
    << " changed the taps";
  return {violations == 0 && all_gated > 0, d.str()};
}

// 5: sampled gradient-noise moments against the closed form; kurtosis identity.
Outcome criterion5() {
  mc::Model m{unit_plant(16, 11), 1.0, {0.05, 0.05}, {1.05, 1.05}};
  const Eigen::MatrixXd sampled = mc::moment(m, 100000, 0x5eed01);
  const double gap = mc::rel_entrywise(sampled, moment_matrix(white_plant(m)));

  mc::Model one{unit_plant(16, 12), 1.0, {0.05}, {1.05}};
  const auto em = mc::error_moments(one, 1000000, 0x5eed02);
  const double hb = one.hbar();
  const double kurt = std::abs(em.e4 / (3 * 0.05 * 0.05 * hb * hb) - 1.0);

  std::ostringstream d;
  d << "moment matrix entrywise gap " << fmt("%.4f", gap) << " (limit 0.05); E[e^4] rel err "
    << fmt("%.4f", kurt) << " (limit 0.10)";
  return {gap < 0.05 && kurt < 0.10, d.str()};
}

// 6: gradient at h vanishes, Hessian against finite differences, positivity.
Outcome criterion6() {
  mc::Model m{unit_plant(16, 13), 1.0, {0.05, 0.02}, {1.05, 0.6}};
  const int S = 200000;
  const auto gs = mc::gradient_at_h(m, S, 0x5eed03);
  const double zlimit = 5.0 / std::sqrt(double(S)) * gs.per_sample_std;
  const bool zero_ok = gs.mean.norm() < zlimit;

  mc::Model m8{unit_plant(8, 14), 1.0, {0.05, 0.05}, {1.05, 1.05}};
  const Eigen::MatrixXd fd = mc::fd_hessian(m8, 1000000, 1e-4, 0x5eed04);
  const auto cp = hessian_and_gradient_at_h(white_plant(m8));
  const double hgap = mc::rel_entrywise(fd, cp.hessian);

  // Plants where sum gamma > sum s_in / ((L-2) s_x), i.e. a local minimum exists.
  bool pos_ok = true;
  int checked = 0;
  for (int L : {8, 16, 64, 128})
    for (double ratio : {0.01, 0.05, 0.3, 0.7}) {
      auto p = white_plant(mc::Model{unit_plant(L, L), 1.0, {ratio}, {1.0}});
      const bool holds = 1.0 / L > ratio / (L - 2.0);
      if (!holds) continue;
      ++checked;
      pos_ok &= hessian_and_gradient_at_h(p).eigenvalues.minCoeff() > 0.0;
    }

  std::ostringstream d;
  d << "|mean grad| " << fmt("%.3g", gs.mean.norm()) << " < " << fmt("%.3g", zlimit)
    << "; FD Hessian gap " << fmt("%.4f", hgap) << " (limit 0.10); positive eigenvalues in "
    << checked << " admissible plants: " << (pos_ok ? "yes" : "no");
  return {zero_ok && hgap < 0.10 && pos_ok && checked > 0, d.str()};
}

template <class Fn>
void drive(int L, int N, int iters, std::uint64_t seed, double impulse_p, Fn&& fn) {
  const auto bank = AnalysisBank::design(N);
  const auto h = random_plant(L, seed);
  const auto x = gen_input(InputKind::ar1(0.8), 0.36, std::size_t(iters) * N, seed + 1);
  const auto s = make_eiv_stream(h, x, NoiseSpec::gaussian(0.05),
                                 NoiseSpec{0.05, impulse_p, 1000.0}, seed + 2);
  SubbandAnalyzer an(bank, L);
  for (std::size_t n = 0; n < x.size(); ++n)
    if (an.push(s.noisy_input[n], s.noisy_desired[n])) fn(an.frames(), *s.theta);
}

// 7: ungated TLMM equals TLS; pinned mixing reproduces each branch.
Outcome criterion7() {
  const int L = 64, N = 4, iters = 3000;
  long tls_mismatch = 0, one_mismatch = 0, zero_mismatch = 0;

  std::optional<WeightState> a, b;
  AlgoParams p;
  p.kind = Algorithm::tls_nsaf;
  p.step = 0.5;
  p.filter_len = L;
  p.num_subbands = N;
  drive(L, N, iters, 71, 0.01, [&](std::span<const SubbandFrame> f, double theta) {
    if (!a) a.emplace(L, N, theta), b.emplace(L, N, theta);
    step_baseline(*a, f, p);
    step_tlmm(*b, f, p.step, Gate::off, p.regularization);
    if (!std::equal(a->taps().begin(), a->taps().end(), b->taps().begin())) ++tls_mismatch;
  });

  CombinationConfig cfg;
  cfg.mu2 = 0.05;
  cfg.vss.mu = 2.0;
  cfg.vss.mu_min = 0.05;
  cfg.vss.mu_max = 2.0;
  for (double pin : {1.0, 0.0}) {
    cfg.mixing.pinned_lambda = pin;
    std::optional<CombinationState> combo;
    std::optional<VssTlmmState> vss;
    std::optional<WeightState> slow;
    drive(L, N, iters, 73, 0.01, [&](std::span<const SubbandFrame> f, double theta) {
      if (!combo) {
        combo.emplace(L, N, theta, cfg);
        vss.emplace(L, N, theta, cfg.vss);
        slow.emplace(L, N, theta);
      }
      step_combination(*combo, f);
      if (pin == 1.0) {
        vss->step(f);
        if (!std::equal(combo->taps().begin(), combo->taps().end(), vss->taps().begin()))
          ++one_mismatch;
      } else {
        step_tlmm(*slow, f, cfg.mu2);
        if (!std::equal(combo->taps().begin(), combo->taps().end(), slow->taps().begin()))
          ++zero_mismatch;
      }
    });
  }
  std::ostringstream d;
  d << "mismatching iterations over " << iters << ": TLS vs ungated TLMM " << tls_mismatch
    << ", lambda=1 vs VSS branch " << one_mismatch << ", lambda=0 vs mu2 branch "
    << zero_mismatch;
  return {tls_mismatch == 0 && one_mismatch == 0 && zero_mismatch == 0, d.str()};
}

// 8: VSS combination reaches the mu2 floor no later than 1.1x the VSS-only run.
Outcome criterion8() {
  ExperimentConfig c;
  c.algorithms = {Algorithm::vss_ctlmm, Algorithm::vss_tlmm, Algorithm::tlmm_nsaf};
  c.step = 0.05;
  c.mu2 = 0.05;
  c.mu_alpha = 0.02;
  c.vss.mu_min = 0.05;
  c.vss.mu_max = 2.0;
  c.trials = 20;
  c.iters = 20000;
  const auto ts = run_sysid(c);
  const auto& combo = trace(ts, "vss_ctlmm");
  const auto& vss = trace(ts, "vss_tlmm");
  const auto& slow = trace(ts, "tlmm_nsaf");
  const double level = slow.steady_state_db() + 1.0;
  const auto tc = combo.first_reaching(level);
  const auto tv = vss.first_reaching(level);

  bool ok = tc && tv && *tc <= 1.1 * *tv;
  ok &= combo.lambda_min && *combo.lambda_min > 0.0 && *combo.lambda_max < 1.0;
  ok &= combo.mu_vss_min && *combo.mu_vss_min >= 0.05 && *combo.mu_vss_max <= 2.0;
  ok &= vss.mu_vss_min && *vss.mu_vss_min >= 0.05 && *vss.mu_vss_max <= 2.0;

  std::ostringstream d;
  d << "level " << fmt("%.2f", level) << " dB reached at " << (tc ? std::to_string(*tc) : "never")
    << " (combination) vs " << (tv ? std::to_string(*tv) : "never") << " (VSS only)";
  if (tc && tv) d << ", ratio " << fmt("%.3f", double(*tc) / *tv);
  if (combo.lambda_min)
    d << "; lambda in [" << fmt("%.4f", *combo.lambda_min) << ", "
      << fmt("%.4f", *combo.lambda_max) << "], mu_vss in [" << fmt("%.4f", *combo.mu_vss_min)
      << ", " << fmt("%.4f", *combo.mu_vss_max) << "]";
  return {ok, d.str()};
}

// 9: designed (4, 32) bank.
Outcome criterion9() {
  const auto bank = AnalysisBank::design(4, 32);
  const double pu = paraunitarity_error(bank);
  const auto x = gen_input(InputKind::white(), 1.0, 200000, 0x91);
  double in_pow = 0.0;
  for (double v : x) in_pow += v * v;
  in_pow /= x.size();
  double sub_pow = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto f = bank.branch(i);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t n = f.size(); n < x.size(); n += 4, ++cnt) {
      double y = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) y += f[k] * x[n - k];
      acc += y * y;
    }
    sub_pow += acc / cnt;
  }
  const double rel = std::abs(sub_pow - in_pow) / in_pow;
  std::ostringstream d;
  d << "paraunitarity error " << fmt("%.2e", pu) << " (limit 1e-2); power ratio error "
    << fmt("%.4f", rel) << " (limit 0.05)";
  return {pu < 1e-2 && rel < 0.05, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> all{criterion1, criterion2, criterion3,
                                                  criterion4, criterion5, criterion6,
                                                  criterion7, criterion8, criterion9};
  std::vector<int> pick;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > 9) {
      std::fprintf(stderr, "criterion must be 1..9, got %s\n", argv[i]);
      return 2;
    }
    pick.push_back(k);
  }
  if (pick.empty())
    for (int k = 1; k <= 9; ++k) pick.push_back(k);

  int failed = 0;
  for (int k : pick) {
    Outcome o;
    try {
      o = all[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s  %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
