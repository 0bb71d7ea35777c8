#include "saflab/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> kaiser(int len, double beta) {
  std::vector<double> w(static_cast<std::size_t>(len), 1.0);
  if (len == 1) return w;
  const double norm = std::cyl_bessel_i(0.0, beta);
  for (int n = 0; n < len; ++n) {
    const double r = 2.0 * n / (len - 1) - 1.0;
    w[n] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
  }
  return w;
}

// Cosine-modulated bank from a windowed-sinc prototype, normalized so the
// branch energies sum to one.
std::vector<double> modulated_bank(int n_sub, int len, double cutoff, double beta) {
  const auto win = kaiser(len, beta);
  const double centre = 0.5 * (len - 1);
  std::vector<double> proto(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    const double t = n - centre;
    const double arg = cutoff * t;
    const double sinc = (t == 0.0) ? 1.0 : std::sin(arg) / arg;
    proto[n] = cutoff / kPi * sinc * win[n];
  }
  std::vector<double> coeffs(static_cast<std::size_t>(n_sub) * len);
  double energy = 0.0;
  for (int k = 0; k < n_sub; ++k) {
    const double phase = (k % 2 == 0 ? 1.0 : -1.0) * kPi / 4.0;
    for (int n = 0; n < len; ++n) {
      const double c = 2.0 * proto[n] *
                       std::cos((2 * k + 1) * kPi / (2.0 * n_sub) * (n - centre) + phase);
      coeffs[static_cast<std::size_t>(k) * len + n] = c;
      energy += c * c;
    }
  }
  const double g = 1.0 / std::sqrt(energy);
  for (auto& c : coeffs) c *= g;
  return coeffs;
}

// cos/sin(w_g * n) on a uniform grid over [0, pi].
struct DftTable {
  int grid, len;
  std::vector<double> c, s;
  DftTable(int grid_points, int length) : grid(grid_points), len(length) {
    c.resize(static_cast<std::size_t>(grid) * len);
    s.resize(c.size());
    for (int g = 0; g < grid; ++g) {
      const double w = grid == 1 ? 0.0 : kPi * g / (grid - 1);
      for (int n = 0; n < len; ++n) {
        c[static_cast<std::size_t>(g) * len + n] = std::cos(w * n);
        s[static_cast<std::size_t>(g) * len + n] = std::sin(w * n);
      }
    }
  }
};

double complementarity_error(std::span<const double> coeffs, int n_sub, const DftTable& t) {
  double worst = 0.0;
  for (int g = 0; g < t.grid; ++g) {
    const double* cg = t.c.data() + static_cast<std::size_t>(g) * t.len;
    const double* sg = t.s.data() + static_cast<std::size_t>(g) * t.len;
    double total = 0.0;
    for (int k = 0; k < n_sub; ++k) {
      const double* h = coeffs.data() + static_cast<std::size_t>(k) * t.len;
      double re = 0.0, im = 0.0;
      for (int n = 0; n < t.len; ++n) {
        re += h[n] * cg[n];
        im += h[n] * sg[n];
      }
      total += re * re + im * im;
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

}  // namespace

AnalysisBank AnalysisBank::design(int num_subbands, int proto_len) {
  if (num_subbands < 1 || proto_len < 1)
    throw InvalidArgument("design_bank: num_subbands and proto_len must be >= 1");
  if (num_subbands > 1 && proto_len < num_subbands)
    throw InvalidArgument("design_bank: proto_len must be >= num_subbands");

  if (num_subbands == 1) {
    std::vector<double> delta(static_cast<std::size_t>(proto_len), 0.0);
    delta[0] = 1.0;
    return AnalysisBank(1, proto_len, std::move(delta), kDesignTolerance);
  }

  // Coarse grid then ternary refinement of the cutoff, for each window shape.
  const DftTable table(256, proto_len);
  const double base = kPi / num_subbands;
  double best_err = std::numeric_limits<double>::infinity();
  double best_cut = 0.5 * base, best_beta = 0.0;
  for (int b = 0; b <= 12; ++b) {
    const double beta = b;
    auto cost = [&](double rel) {
      return complementarity_error(modulated_bank(num_subbands, proto_len, rel * base, beta),
                                   num_subbands, table);
    };
    constexpr int kCoarse = 51;
    int arg = 0;
    double val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kCoarse; ++i) {
      const double c = cost(0.4 + 0.5 * i / (kCoarse - 1));
      if (c < val) val = c, arg = i;
    }
    double lo = 0.4 + 0.5 * std::max(arg - 1, 0) / (kCoarse - 1);
    double hi = 0.4 + 0.5 * std::min(arg + 1, kCoarse - 1) / (kCoarse - 1);
    for (int it = 0; it < 40; ++it) {
      const double a = lo + (hi - lo) / 3.0, c = hi - (hi - lo) / 3.0;
      if (cost(a) < cost(c))
        hi = c;
      else
        lo = a;
    }
    const double rel = 0.5 * (lo + hi);
    const double err = cost(rel);
    if (err < best_err) best_err = err, best_cut = rel * base, best_beta = beta;
  }

  auto coeffs = modulated_bank(num_subbands, proto_len, best_cut, best_beta);
  AnalysisBank bank(num_subbands, proto_len, std::move(coeffs), kDesignTolerance);
  const double err = paraunitarity_error(bank);
  if (!(err < kDesignTolerance))
    throw InvalidArgument("design_bank: proto_len " + std::to_string(proto_len) +
                          " too short for " + std::to_string(num_subbands) +
                          " subbands (paraunitarity error " + std::to_string(err) + ")");
  return bank;
}

AnalysisBank AnalysisBank::from_filters(const std::vector<std::vector<double>>& filters,
                                        double tolerance) {
  if (filters.empty() || filters.front().empty())
    throw InvalidArgument("from_filters: need at least one non-empty branch");
  const auto len = filters.front().size();
  std::vector<double> coeffs;
  coeffs.reserve(len * filters.size());
  for (const auto& f : filters) {
    if (f.size() != len) throw InvalidArgument("from_filters: branch lengths differ");
    coeffs.insert(coeffs.end(), f.begin(), f.end());
  }
  AnalysisBank bank(static_cast<int>(filters.size()), static_cast<int>(len), std::move(coeffs),
                    tolerance);
  if (paraunitarity_error(bank) > tolerance)
    throw InvalidArgument("from_filters: paraunitarity error above tolerance");
  return bank;
}

std::span<const double> AnalysisBank::branch(int i) const {
  return std::span<const double>(coeffs_).subspan(static_cast<std::size_t>(i) * proto_len_,
                                                  static_cast<std::size_t>(proto_len_));
}

double paraunitarity_error(const AnalysisBank& bank, int grid_points) {
  std::vector<double> all;
  for (int i = 0; i < bank.num_subbands(); ++i) {
    auto b = bank.branch(i);
    all.insert(all.end(), b.begin(), b.end());
  }
  return complementarity_error(all, bank.num_subbands(), DftTable(grid_points, bank.proto_len()));
}

SubbandAnalyzer::SubbandAnalyzer(const AnalysisBank& bank, int filter_len)
    : bank_(bank), filter_len_(filter_len) {
  if (filter_len < 1) throw InvalidArgument("SubbandAnalyzer: filter_len must be >= 1");
  const auto m = static_cast<std::size_t>(bank_.proto_len());
  const auto l = static_cast<std::size_t>(filter_len);
  in_line_.assign(2 * m, 0.0);
  des_line_.assign(2 * m, 0.0);
  line_head_ = 0;
  hist_.assign(static_cast<std::size_t>(bank_.num_subbands()), std::vector<double>(2 * l, 0.0));
  hist_head_ = 0;
  frames_.resize(static_cast<std::size_t>(bank_.num_subbands()));
  for (int i = 0; i < bank_.num_subbands(); ++i) frames_[i].subband_index = i;
}

bool SubbandAnalyzer::push(double input, double desired) {
  const int m = bank_.proto_len();
  const int l = filter_len_;
  const int n_sub = bank_.num_subbands();

  line_head_ = (line_head_ == 0) ? m - 1 : line_head_ - 1;
  in_line_[line_head_] = in_line_[line_head_ + m] = input;
  des_line_[line_head_] = des_line_[line_head_ + m] = desired;
  const std::span<const double> in_recent(in_line_.data() + line_head_, static_cast<std::size_t>(m));

  hist_head_ = (hist_head_ == 0) ? l - 1 : hist_head_ - 1;
  for (int i = 0; i < n_sub; ++i) {
    const double y = kernels::dot(bank_.branch(i), in_recent);
    auto& h = hist_[i];
    h[hist_head_] = h[hist_head_ + l] = y;
  }

  const bool emit = (samples_ % n_sub) == 0;
  if (emit) {
    const std::span<const double> des_recent(des_line_.data() + line_head_,
                                             static_cast<std::size_t>(m));
    const std::int64_t z = samples_ / n_sub;
    for (int i = 0; i < n_sub; ++i) {
      auto& f = frames_[i];
      f.decimated_index = z;
      f.regressor = std::span<const double>(hist_[i].data() + hist_head_, static_cast<std::size_t>(l));
      f.desired = kernels::dot(bank_.branch(i), des_recent);
    }
  }
  ++samples_;
  return emit;
}

std::vector<std::vector<OwnedFrame>> analyze_decimate(const AnalysisBank& bank,
                                                      std::span<const double> input,
                                                      std::span<const double> desired,
                                                      int filter_len) {
  if (input.size() != desired.size())
    throw InvalidArgument("analyze_decimate: input and desired lengths differ");
  SubbandAnalyzer an(bank, filter_len);
  std::vector<std::vector<OwnedFrame>> out;
  for (std::size_t n = 0; n < input.size(); ++n) {
    if (!an.push(input[n], desired[n])) continue;
    auto& block = out.emplace_back();
    for (const auto& f : an.frames())
      block.push_back({f.subband_index, f.decimated_index,
                       std::vector<double>(f.regressor.begin(), f.regressor.end()), f.desired});
  }
  return out;
}

}  // namespace saflab
