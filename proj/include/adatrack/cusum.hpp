#pragma once

// Adaptive CUSUM over the per-frame track-quality stream.
//
//   theta_i = mean of y over the samples since the last reset
//   g_i     = max(g_{i-1} - (y_i - theta_{i-1}) - nu, 0)
//
// g above beta_low flags a gradual change, above beta_high an abrupt one.

namespace adatrack {

struct CusumParams {
  double nu = 0.05;        // drift guard subtracted every step
  double beta_low = 1.0;   // gradual-change threshold
  double beta_high = 3.0;  // abrupt-change threshold
  double alpha = 0.8;      // memory admission threshold on y (used by the tracker)

  /// Throws InvalidInput unless 0 <= nu and 0 < beta_low < beta_high
  /// (both thresholds may be +inf to disable alarms).
  void validate() const;
};

enum class ChangeSignal { none, gradual, abrupt };

const char* toString(ChangeSignal s);

struct CusumState {
  int i0 = 0;             // frame of the last reset
  long count = 0;         // samples since i0
  double theta_hat = 0;   // their running mean
  double g = 0;           // test statistic, never negative
  bool refractory = false;  // suppress alarms on the first sample after an abrupt reset

  static CusumState reset(int frame) { return CusumState{frame, 0, 0.0, 0.0, false}; }
};

struct CusumStep {
  CusumState state;
  ChangeSignal signal = ChangeSignal::none;
  double statistic = 0;  // g_i as compared with the thresholds (before any reset)
};

/// One recursion step for sample `y` observed at `frame`.
///
/// g uses the mean from before this sample; the first sample after a reset
/// seeds the mean with itself, so g stays 0 there. A gradual alarm leaves
/// the statistic running; an abrupt alarm resets g and the mean (i0 = frame).
CusumStep cusumUpdate(const CusumState& state, const CusumParams& params, double y, int frame);

}  // namespace adatrack
