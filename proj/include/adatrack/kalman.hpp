#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "adatrack/geometry.hpp"

namespace adatrack {

/// Linear Kalman filter with fixed state and measurement dimensions.
/// Covariance updates use the Joseph form and are re-symmetrized.
template <typename Scalar, int StateDim, int MeasDim>
class KalmanFilter {
 public:
  using State = Eigen::Matrix<Scalar, StateDim, 1>;
  using StateCov = Eigen::Matrix<Scalar, StateDim, StateDim>;
  using Measurement = Eigen::Matrix<Scalar, MeasDim, 1>;
  using MeasCov = Eigen::Matrix<Scalar, MeasDim, MeasDim>;
  using Observation = Eigen::Matrix<Scalar, MeasDim, StateDim>;

  KalmanFilter() = default;
  KalmanFilter(const StateCov& transition, const Observation& observation,
               const StateCov& process_noise, const MeasCov& measurement_noise, const State& x0,
               const StateCov& P0)
      : F_(transition), H_(observation), Q_(process_noise), R_(measurement_noise), x_(x0),
        P_(P0) {}

  void predict() {
    x_ = F_ * x_;
    P_ = F_ * P_ * F_.transpose() + Q_;
    symmetrize();
  }

  void update(const Measurement& z) {
    const MeasCov S = H_ * P_ * H_.transpose() + R_;
    // K = P H^T S^-1, solved rather than inverted.
    const Eigen::Matrix<Scalar, StateDim, MeasDim> K =
        S.transpose().ldlt().solve(H_ * P_.transpose()).transpose();
    x_ += K * (z - H_ * x_);
    const StateCov IKH = StateCov::Identity() - K * H_;
    P_ = IKH * P_ * IKH.transpose() + K * R_ * K.transpose();
    symmetrize();
  }

  const State& state() const { return x_; }
  State& state() { return x_; }
  const StateCov& covariance() const { return P_; }
  const StateCov& transition() const { return F_; }
  const Observation& observation() const { return H_; }

 private:
  void symmetrize() { P_ = (P_ + P_.transpose()) / Scalar(2); }

  StateCov F_ = StateCov::Identity();
  Observation H_ = Observation::Zero();
  StateCov Q_ = StateCov::Zero();
  MeasCov R_ = MeasCov::Identity();
  State x_ = State::Zero();
  StateCov P_ = StateCov::Identity();
};

/// Noise scales for the box track; defaults follow common SORT settings.
struct KalmanConfig {
  double measurement_noise_position = 1.0;
  double measurement_noise_shape = 10.0;  // area and aspect
  double initial_variance = 10.0;
  double initial_velocity_variance = 1e4;
  double process_noise_position = 1.0;
  double process_noise_velocity = 1e-2;
  double process_noise_area_velocity = 1e-4;
};

/// Constant-velocity box track with state
/// [centre x, centre y, area, aspect w/h, v_cx, v_cy, v_area].
template <typename Scalar>
class BoxKalmanTrackT {
 public:
  using Filter = KalmanFilter<Scalar, 7, 4>;
  using Measurement = typename Filter::Measurement;

  BoxKalmanTrackT() = default;

  static BoxKalmanTrackT fromBox(const Box<Scalar>& box, const KalmanConfig& cfg = KalmanConfig{}) {
    requireValid(box, "kalman init box");
    typename Filter::StateCov F = Filter::StateCov::Identity();
    F(0, 4) = F(1, 5) = F(2, 6) = 1;
    typename Filter::Observation H = Filter::Observation::Zero();
    for (int i = 0; i < 4; ++i) H(i, i) = 1;

    typename Filter::StateCov Q = Filter::StateCov::Zero();
    Q.diagonal() << cfg.process_noise_position, cfg.process_noise_position,
        cfg.process_noise_position, cfg.process_noise_position, cfg.process_noise_velocity,
        cfg.process_noise_velocity, cfg.process_noise_area_velocity;
    typename Filter::MeasCov R = Filter::MeasCov::Zero();
    R.diagonal() << cfg.measurement_noise_position, cfg.measurement_noise_position,
        cfg.measurement_noise_shape, cfg.measurement_noise_shape;
    typename Filter::StateCov P = Filter::StateCov::Zero();
    P.diagonal() << cfg.initial_variance, cfg.initial_variance, cfg.initial_variance,
        cfg.initial_variance, cfg.initial_velocity_variance, cfg.initial_velocity_variance,
        cfg.initial_velocity_variance;

    typename Filter::State x = Filter::State::Zero();
    x.template head<4>() = toMeasurement(box);
    BoxKalmanTrackT t;
    t.filter_ = Filter(F, H, Q, R, x, P);
    return t;
  }

  static Measurement toMeasurement(const Box<Scalar>& b) {
    Measurement z;
    z << b.cx(), b.cy(), b.w * b.h, b.w / b.h;
    return z;
  }

  Box<Scalar> box() const {
    const auto& x = filter_.state();
    const Scalar area = std::max(x(2), Scalar(1e-9));
    const Scalar aspect = std::max(x(3), Scalar(1e-9));
    const Scalar w = std::sqrt(area * aspect);
    return Box<Scalar>::fromCenter(x(0), x(1), w, area / w);
  }

  void predict() {
    // keep the predicted area positive
    if (filter_.state()(2) + filter_.state()(6) <= 0) filter_.state()(6) = 0;
    filter_.predict();
  }

  void update(const Box<Scalar>& measured) {
    requireValid(measured, "kalman measurement");
    filter_.update(toMeasurement(measured));
  }

  const Filter& filter() const { return filter_; }
  Filter& filter() { return filter_; }

 private:
  Filter filter_;
};

using KalmanTrack = BoxKalmanTrackT<double>;

inline KalmanTrack kalmanPredict(KalmanTrack track) {
  track.predict();
  return track;
}

inline KalmanTrack kalmanUpdate(KalmanTrack track, const BoundingBox& measured) {
  track.update(measured);
  return track;
}

}  // namespace adatrack
