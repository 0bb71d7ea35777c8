#pragma once
// Uniform N-branch analysis filter bank and the decimating front end that
// turns full-band input/desired streams into subband regressors.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace saflab {

// Immutable after construction; safe to share between threads.
class AnalysisBank {
 public:
  static constexpr double kDesignTolerance = 1e-2;

  // Cosine-modulated pseudo-QMF bank built from a Kaiser-windowed lowpass
  // prototype. The prototype cutoff and window shape are searched for minimum
  // power-complementarity error; branch energies sum to one. N = 1 yields a
  // single unit impulse of length proto_len.
  static AnalysisBank design(int num_subbands, int proto_len);

  // Default prototype length 8 * N.
  static AnalysisBank design(int num_subbands) { return design(num_subbands, 8 * num_subbands); }

  // Wraps caller-supplied branch filters. Throws if lengths differ or the
  // measured paraunitarity error exceeds `tolerance`.
  static AnalysisBank from_filters(const std::vector<std::vector<double>>& filters,
                                   double tolerance = std::numeric_limits<double>::infinity());

  int num_subbands() const { return num_subbands_; }
  int proto_len() const { return proto_len_; }
  std::span<const double> branch(int i) const;
  double tolerance() const { return tolerance_; }

 private:
  AnalysisBank(int n, int m, std::vector<double> coeffs, double tol)
      : num_subbands_(n), proto_len_(m), coeffs_(std::move(coeffs)), tolerance_(tol) {}

  int num_subbands_;
  int proto_len_;
  std::vector<double> coeffs_;  // row i = branch i
  double tolerance_;
};

// max over a dense grid of |sum_i |H_i(e^jw)|^2 - 1|.
double paraunitarity_error(const AnalysisBank& bank, int grid_points = 4096);

// One subband's view of a decimation instant. `regressor` is newest-first,
// [x_i(zN), x_i(zN-1), ..., x_i(zN-L+1)], zero-padded before sample 0, and
// stays valid until the next push into the analyzer that produced it.
struct SubbandFrame {
  int subband_index = 0;
  std::int64_t decimated_index = 0;
  std::span<const double> regressor;
  double desired = 0.0;
};

// Streaming analysis + decimation. Holds its own delay lines, so each stream
// needs its own analyzer.
class SubbandAnalyzer {
 public:
  SubbandAnalyzer(const AnalysisBank& bank, int filter_len);

  // Consumes one full-band sample of each signal. Returns true when the sample
  // index is a multiple of N, in which case frames() holds the N frames of
  // the new decimated index.
  bool push(double input, double desired);

  std::span<const SubbandFrame> frames() const { return frames_; }
  int num_subbands() const { return bank_.num_subbands(); }
  int filter_len() const { return filter_len_; }
  std::int64_t samples_seen() const { return samples_; }

 private:
  AnalysisBank bank_;
  int filter_len_;
  std::int64_t samples_ = 0;

  // Newest-first delay lines for the full-band signals (length M, doubled).
  std::vector<double> in_line_, des_line_;
  int line_head_;

  // Newest-first subband histories (length L, doubled), one per branch.
  std::vector<std::vector<double>> hist_;
  int hist_head_;

  std::vector<SubbandFrame> frames_;
};

struct OwnedFrame {
  int subband_index = 0;
  std::int64_t decimated_index = 0;
  std::vector<double> regressor;
  double desired = 0.0;
};

// Batch form of SubbandAnalyzer: one inner vector of N frames per decimated
// index. Materializes every regressor, so meant for short signals.
std::vector<std::vector<OwnedFrame>> analyze_decimate(const AnalysisBank& bank,
                                                      std::span<const double> input,
                                                      std::span<const double> desired,
                                                      int filter_len);

}  // namespace saflab
