#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adatrack/assignment.hpp"
#include "adatrack/geometry.hpp"
#include "adatrack/kalman.hpp"

namespace adatrack {

struct Detection {
  BoundingBox box;
  double confidence = 1.0;
  int class_id = 0;
};

/// Ground-truth anchored detector model.
struct DetectorNoiseConfig {
  double target_iou_mean = 1.0;  // IOU of the emitted box with the ground truth
  double target_iou_std = 0.0;
  double miss_rate = 0.0;
  double false_positive_rate = 0.0;  // expected spurious boxes per call
  std::uint64_t seed = 0;
  double min_visibility = 0.5;  // targets less visible than this are not detected

  void validate() const;
};

struct PerturbResult {
  BoundingBox box;
  double achieved_iou = 1.0;
  bool within_tolerance = true;  // |achieved - target| <= tolerance
};

inline constexpr double kPerturbTolerance = 0.02;

/// Random-direction translation plus scale change whose magnitude is found
/// by bisection so that iou(result, box) matches `target`.
PerturbResult perturbBoxToIou(const BoundingBox& box, double target, std::uint64_t seed);

/// Simulated detection for one frame. Pure in (cfg.seed, frame_index, gt).
/// `frame_width`/`frame_height` bound the placement of false positives.
std::vector<Detection> simulateDetections(int frame_index, const BoundingBox& ground_truth,
                                          const DetectorNoiseConfig& cfg, int frame_width,
                                          int frame_height, double visibility = 1.0);

/// Association gate and solver choice.
struct AssociationConfig {
  double min_iou = 0.3;
  bool greedy = false;
};

Assignment associate(const std::vector<BoundingBox>& predicted,
                     const std::vector<Detection>& detections, const AssociationConfig& cfg);

/// Parses "class_id confidence x y w h".
Detection parseDetectionLine(const std::string& line);
std::string formatDetectionLine(const Detection& d);

/// Detector living in a child process. Each request writes the frame index
/// on one line; the child answers with one detection per line followed by
/// an empty line.
class ExternalDetector {
 public:
  explicit ExternalDetector(const std::string& command);
  ~ExternalDetector();
  ExternalDetector(const ExternalDetector&) = delete;
  ExternalDetector& operator=(const ExternalDetector&) = delete;

  std::vector<Detection> request(int frame_index);

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;

  bool readLine(std::string& line);
};

}  // namespace adatrack
