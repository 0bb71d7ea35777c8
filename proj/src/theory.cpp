#include "saflab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "saflab/errors.hpp"

namespace saflab {

namespace {

double max_abs_asym(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Newest-first regressor covariance from the first L lags of a stationary
// sequence (mean removed is not needed: probes are zero-mean).
Eigen::MatrixXd toeplitz_cov(const std::vector<double>& s, int L, std::size_t skip) {
  const std::size_t n = s.size() - skip;
  Eigen::VectorXd r(L);
  for (int k = 0; k < L; ++k) {
    double acc = 0.0;
    for (std::size_t t = skip + k; t < s.size(); ++t) acc += s[t] * s[t - k];
    r[k] = acc / static_cast<double>(n - k);
  }
  Eigen::MatrixXd c(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) c(i, j) = r[std::abs(i - j)];
  return c;
}

std::vector<double> branch_output(std::span<const double> f, const std::vector<double>& x) {
  std::vector<double> y(x.size(), 0.0);
  const std::size_t m = f.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0.0;
    const std::size_t kmax = std::min(m, n + 1);
    for (std::size_t k = 0; k < kmax; ++k) acc += f[k] * x[n - k];
    y[n] = acc;
  }
  return y;
}

double mean_square(const std::vector<double>& y, std::size_t skip) {
  double acc = 0.0;
  for (std::size_t n = skip; n < y.size(); ++n) acc += y[n] * y[n];
  return acc / static_cast<double>(y.size() - skip);
}

}  // namespace

void PlantModel::validate(int min_filter_len) const {
  const int L = filter_len();
  if (L <= min_filter_len)
    throw InvalidArgument("plant length must exceed " + std::to_string(min_filter_len));
  if (!(theta > 0.0)) throw ThetaUndefined();
  const auto n = gammas.size();
  if (n == 0) throw InvalidArgument("plant model needs at least one subband");
  if (input_noise_var.size() != n || noisy_subband_power.size() != n)
    throw InvalidArgument("per-subband vectors must all have N entries");
  if (!alpha_min.empty() && alpha_min.size() != n)
    throw InvalidArgument("alpha_min must be empty or have N entries");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(gammas[i] > 0.0)) throw InvalidArgument("gamma must be > 0");
    if (!(input_noise_var[i] > 0.0)) throw InvalidArgument("subband input noise must be > 0");
    if (!(noisy_subband_power[i] > input_noise_var[i]))
      throw InvalidArgument("noisy subband power must exceed the input-noise power");
  }
  if (input_cov.size() != 0) {
    if (input_cov.rows() != L || input_cov.cols() != L)
      throw InvalidArgument("input covariance must be L x L");
    const double scale = std::max(1.0, input_cov.cwiseAbs().maxCoeff());
    if (max_abs_asym(input_cov) > 1e-10 * scale)
      throw InvalidArgument("input covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(input_cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw InvalidArgument("input covariance must be positive semidefinite");
  }
}

CriticalPoint hessian_and_gradient_at_h(const PlantModel& plant) {
  if (plant.filter_len() <= 2) throw InvalidArgument("Hessian needs L > 2");
  plant.validate(2);
  const int L = plant.filter_len();
  const double hb = plant.hbar_norm_sq();
  const double lm2 = L - 2.0;

  CriticalPoint cp;
  cp.gradient = Eigen::VectorXd::Zero(L);
  double gamma_sum = 0.0, noise_sum = 0.0;
  for (int i = 0; i < plant.num_subbands(); ++i) {
    const double s_in = plant.input_noise_var[i];
    const double s_x = plant.noisy_subband_power[i];
    const double e2 = hb * s_in;  // E[e^2]
    const double denom = hb * hb * lm2 * s_x;
    for (int j = 0; j < L; ++j) {
      const double cross = -e2 * plant.h[j];  // |h_bar|^2 E[e x~]
      cp.gradient[j] -= (cross + e2 * plant.h[j]) / denom;
    }
    gamma_sum += plant.gammas[i];
    noise_sum += s_in / (lm2 * s_x);
  }
  const double c = (gamma_sum - noise_sum) / hb;
  cp.hessian = c * Eigen::MatrixXd::Identity(L, L);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cp.hessian, Eigen::EigenvaluesOnly);
  cp.eigenvalues = es.eigenvalues();
  return cp;
}

StepBounds step_bounds(const PlantModel& plant) {
  const auto cp = hessian_and_gradient_at_h(plant);
  const double lmin = cp.eigenvalues.minCoeff();
  const double lmax = cp.eigenvalues.maxCoeff();
  if (!(lmin > 0.0))
    throw NoLocalMinimum("Hessian at h is not positive definite (min eigenvalue " +
                         std::to_string(lmin) + ")");
  StepBounds b;
  b.mean_bound = 2.0 / lmax;
  b.ms_bound = 2.0 * (plant.h.squaredNorm() + plant.theta);
  b.stable_bound = std::min(b.mean_bound, b.ms_bound);
  return b;
}

Eigen::MatrixXd moment_matrix(const PlantModel& plant) {
  plant.validate(4);
  const int L = plant.filter_len();
  const double hb = plant.hbar_norm_sq();
  double diag = 0.0, outer = 0.0;
  for (int i = 0; i < plant.num_subbands(); ++i) {
    const double s_in = plant.input_noise_var[i];
    const double s_x = plant.noisy_subband_power[i];
    diag += s_in * plant.gammas[i] / (hb * (L - 4.0) * s_x);
    outer += 3.0 * s_in * s_in / (hb * hb * (L - 2.0) * (L - 4.0) * s_x);
  }
  Eigen::MatrixXd m = diag * Eigen::MatrixXd::Identity(L, L);
  m.noalias() -= outer * (plant.h * plant.h.transpose());
  return m;
}

MsdPrediction steady_state_msd(const PlantModel& plant, double step, MsdMethod method) {
  if (!(step > 0.0)) throw InvalidArgument("step size must be > 0");
  const int L = plant.filter_len();
  MsdPrediction out;
  out.moment_M = moment_matrix(plant);
  const auto cp = hessian_and_gradient_at_h(plant);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cp.hessian);
  const Eigen::VectorXd a = (1.0 - step * es.eigenvalues().array()).matrix();
  const double amax = a.cwiseAbs().maxCoeff();
  out.spectral_radius = amax * amax;
  if (!(out.spectral_radius < 1.0))
    throw UnstableStep("spectral radius of P is " + std::to_string(out.spectral_radius) +
                       " at step " + std::to_string(step));

  bool dense = method == MsdMethod::dense ||
               (method == MsdMethod::automatic && L <= kDenseAutoLimit);
  if (dense && L > kDenseMaxLen)
    throw InvalidArgument("dense transition matrix limited to L <= " +
                          std::to_string(kDenseMaxLen));

  if (dense) {
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(L, L) - step * cp.hessian;
    out.transition_P = Eigen::kroneckerProduct(A, A);
    const int n = L * L;
    const Eigen::MatrixXd IminusP = Eigen::MatrixXd::Identity(n, n) - out.transition_P;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(IminusP);
    const double rc = lu.rcond();
    if (!(rc >= 1e-12))
      throw IllConditioned("I - P reciprocal condition " + std::to_string(rc) + " below 1e-12");
    const Eigen::VectorXd vecI = Eigen::Map<const Eigen::VectorXd>(
        Eigen::MatrixXd::Identity(L, L).eval().data(), n);
    const Eigen::VectorXd sol = lu.solve(vecI);
    const Eigen::Map<const Eigen::VectorXd> vecM(out.moment_M.data(), n);
    out.predicted_msd = step * step * vecM.dot(sol);
    out.dense = true;
  } else {
    const Eigen::MatrixXd& Q = es.eigenvectors();
    double acc = 0.0;
    double worst = 0.0;
    for (int j = 0; j < L; ++j) {
      const double den = 1.0 - a[j] * a[j];
      worst = std::max(worst, 1.0 / den);
      acc += Q.col(j).dot(out.moment_M * Q.col(j)) / den;
    }
    if (!(1.0 / worst >= 1e-12))
      throw IllConditioned("I - P reciprocal condition below 1e-12");
    out.predicted_msd = step * step * acc;
  }
  return out;
}

double normalized_min_eigenvalue(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols())
    throw InvalidArgument("covariance must be a non-empty square matrix");
  const double tr = cov.trace();
  if (!(tr > 0.0)) throw InvalidArgument("covariance trace must be > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov / tr, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().minCoeff());
}

double estimate_gamma(const Eigen::MatrixXd& cov, GammaKind kind) {
  const double alpha = normalized_min_eigenvalue(cov);
  const double inv_l = 1.0 / static_cast<double>(cov.rows());
  if (kind == GammaKind::white) return inv_l;
  return 0.5 * (alpha + inv_l);
}

SubbandProbe probe_subbands(const AnalysisBank& bank, int L, InputKind input,
                            double input_variance, ProbeOptions probe) {
  if (!(input_variance > 0.0)) throw InvalidArgument("input variance must be > 0");
  const std::size_t skip = static_cast<std::size_t>(bank.proto_len());
  if (L < 1 || probe.length < skip + 16 * static_cast<std::size_t>(L))
    throw InvalidArgument("probe too short for this bank and filter length");

  const auto white = gen_input(InputKind::white(), 1.0, probe.length,
                               derive_seed(probe.seed, 0, streams::kInput));
  std::vector<double> colored;
  if (input.type == InputKind::Type::ar1)
    colored = gen_input(input, input_variance, probe.length,
                        derive_seed(probe.seed, 0, streams::kInputNoise));

  SubbandProbe out;
  for (int i = 0; i < bank.num_subbands(); ++i) {
    const auto yw = branch_output(bank.branch(i), white);
    const double pw = mean_square(yw, skip);
    out.white_power.push_back(pw);
    if (input.type == InputKind::Type::white) {
      out.input_power.push_back(input_variance * pw);
      out.gamma.push_back(1.0 / L);
      out.alpha_min.push_back(normalized_min_eigenvalue(toeplitz_cov(yw, L, skip)));
    } else {
      const auto yc = branch_output(bank.branch(i), colored);
      out.input_power.push_back(mean_square(yc, skip));
      const auto cov = toeplitz_cov(yc, L, skip);
      out.gamma.push_back(estimate_gamma(cov, GammaKind::correlated));
      out.alpha_min.push_back(normalized_min_eigenvalue(cov));
    }
  }
  return out;
}

PlantModel plant_from_bank(const AnalysisBank& bank, std::vector<double> h, InputKind input,
                           double input_variance, double input_noise_var,
                           double output_noise_var, ProbeOptions probe) {
  if (!(input_noise_var > 0.0)) throw ThetaUndefined();
  if (!(output_noise_var >= 0.0)) throw InvalidArgument("output noise variance must be >= 0");
  const int L = static_cast<int>(h.size());
  const auto pr = probe_subbands(bank, L, input, input_variance, probe);

  PlantModel pm;
  pm.h = Eigen::Map<const Eigen::VectorXd>(h.data(), L);
  pm.theta = output_noise_var / input_noise_var;
  pm.gammas = pr.gamma;
  pm.alpha_min = pr.alpha_min;
  for (int i = 0; i < bank.num_subbands(); ++i) {
    const double s_in = input_noise_var * pr.white_power[i];
    pm.input_noise_var.push_back(s_in);
    pm.noisy_subband_power.push_back(pr.input_power[i] + s_in);
  }

  if (input.type == InputKind::Type::white) {
    pm.input_cov = input_variance * Eigen::MatrixXd::Identity(L, L);
  } else {
    const double a = input.coefficient;
    const double r0 = input_variance / (1.0 - a * a);
    pm.input_cov.resize(L, L);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) pm.input_cov(i, j) = r0 * std::pow(a, std::abs(i - j));
  }
  pm.validate(4);
  return pm;
}

TheoryReport build_theory_report(const PlantModel& plant, std::optional<double> step) {
  TheoryReport r;
  r.critical = hessian_and_gradient_at_h(plant);
  r.bounds = step_bounds(plant);
  r.h_norm_sq = plant.h.squaredNorm();
  r.theta = plant.theta;
  r.step = step;
  if (step) {
    r.msd = steady_state_msd(plant, *step);
    if (r.h_norm_sq > 0.0)
      r.predicted_nmsd_db = 10.0 * std::log10(r.msd->predicted_msd / r.h_norm_sq);
  }
  return r;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd row = m.row(i).transpose();
    rows.push_back(vec_json(row));
  }
  return rows;
}

constexpr Eigen::Index kFullMatrixLimit = 32;

}  // namespace

nlohmann::json to_json(const TheoryReport& r) {
  nlohmann::json j;
  j["h_norm_sq"] = r.h_norm_sq;
  j["theta"] = r.theta;
  j["mean_bound"] = r.bounds.mean_bound;
  j["ms_bound"] = r.bounds.ms_bound;
  j["stable_bound"] = r.bounds.stable_bound;
  j["gradient_at_h"] = vec_json(r.critical.gradient);
  j["hessian_eigs"] = vec_json(r.critical.eigenvalues);
  if (r.critical.hessian.rows() <= kFullMatrixLimit)
    j["hessian_at_h"] = mat_json(r.critical.hessian);
  else
    j["hessian_diag"] = vec_json(r.critical.hessian.diagonal());
  if (r.step) j["step"] = *r.step;
  if (r.msd) {
    const auto& m = *r.msd;
    j["predicted_msd"] = m.predicted_msd;
    if (r.predicted_nmsd_db) j["predicted_nmsd_db"] = *r.predicted_nmsd_db;
    j["spectral_radius_P"] = m.spectral_radius;
    j["msd_method"] = m.dense ? "dense" : "eigen";
    if (m.moment_M.rows() <= kFullMatrixLimit)
      j["moment_M"] = mat_json(m.moment_M);
    else
      j["moment_M_diag"] = vec_json(m.moment_M.diagonal());
    if (m.transition_P.size() != 0 && m.transition_P.rows() <= kFullMatrixLimit)
      j["transition_P"] = mat_json(m.transition_P);
  }
  return j;
}

}  // namespace saflab
