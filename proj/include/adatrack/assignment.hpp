#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "adatrack/geometry.hpp"

namespace adatrack {

/// Minimum-cost assignment (Kuhn-Munkres with potentials, O(n^3)).
/// Returns, for every row, the assigned column or -1 when rows > cols.
std::vector<int> solveMinCostAssignment(const Eigen::MatrixXd& cost);

struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (track, detection), sorted by track
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
  double total_iou = 0;  // summed over matches in track order
};

/// One-to-one matching of predicted track boxes to detection boxes that
/// maximizes the summed IOU over admissible pairs (IOU >= min_iou and > 0).
/// `greedy` picks pairs by descending IOU instead of solving optimally.
Assignment associateBoxes(const std::vector<BoundingBox>& predicted,
                          const std::vector<BoundingBox>& detections, double min_iou,
                          bool greedy = false);

}  // namespace adatrack
