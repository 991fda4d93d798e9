#include "adatrack/detector_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "adatrack/csv.hpp"
#include "adatrack/random.hpp"

namespace adatrack {

std::vector<int> solveMinCostAssignment(const Eigen::MatrixXd& cost) {
  const auto rows = static_cast<std::size_t>(cost.rows());
  const auto cols = static_cast<std::size_t>(cost.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows > cols) {
    const std::vector<int> t = solveMinCostAssignment(cost.transpose());
    std::vector<int> out(rows, -1);
    for (std::size_t c = 0; c < cols; ++c) {
      if (t[c] >= 0) out[static_cast<std::size_t>(t[c])] = static_cast<int>(c);
    }
    return out;
  }
  // Row potentials u, column potentials v; p[j] is the row (1-based) holding
  // column j, with column 0 as the sentinel.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> p(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (p[j] > 0) out[p[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

Assignment associateBoxes(const std::vector<BoundingBox>& predicted,
                          const std::vector<BoundingBox>& detections, double min_iou,
                          bool greedy) {
  if (!(min_iou >= 0 && min_iou <= 1)) throw InvalidInput("min_iou must lie in [0,1]");
  const int nt = static_cast<int>(predicted.size()), nd = static_cast<int>(detections.size());
  Eigen::MatrixXd overlap(nt, nd);
  for (int t = 0; t < nt; ++t) {
    for (int d = 0; d < nd; ++d) {
      overlap(t, d) = iou(predicted[static_cast<std::size_t>(t)], detections[static_cast<std::size_t>(d)]);
    }
  }
  auto admissible = [&](int t, int d) { return overlap(t, d) > 0 && overlap(t, d) >= min_iou; };

  std::vector<int> trackToDet(static_cast<std::size_t>(nt), -1);
  if (greedy) {
    std::vector<std::pair<int, int>> pairs;
    for (int t = 0; t < nt; ++t) {
      for (int d = 0; d < nd; ++d) {
        if (admissible(t, d)) pairs.emplace_back(t, d);
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
      return overlap(a.first, a.second) > overlap(b.first, b.second);
    });
    std::vector<char> detUsed(static_cast<std::size_t>(nd), 0);
    for (const auto& [t, d] : pairs) {
      if (trackToDet[static_cast<std::size_t>(t)] < 0 && !detUsed[static_cast<std::size_t>(d)]) {
        trackToDet[static_cast<std::size_t>(t)] = d;
        detUsed[static_cast<std::size_t>(d)] = 1;
      }
    }
  } else if (nt > 0 && nd > 0) {
    // Inadmissible pairs weigh 0, so including them never beats leaving them out.
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(nt, nd);
    for (int t = 0; t < nt; ++t) {
      for (int d = 0; d < nd; ++d) {
        if (admissible(t, d)) cost(t, d) = -overlap(t, d);
      }
    }
    trackToDet = solveMinCostAssignment(cost);
  }

  Assignment out;
  std::vector<char> detMatched(static_cast<std::size_t>(nd), 0);
  for (int t = 0; t < nt; ++t) {
    const int d = trackToDet[static_cast<std::size_t>(t)];
    if (d >= 0 && admissible(t, d)) {
      out.matches.emplace_back(t, d);
      out.total_iou += overlap(t, d);
      detMatched[static_cast<std::size_t>(d)] = 1;
    } else {
      out.unmatched_tracks.push_back(t);
    }
  }
  for (int d = 0; d < nd; ++d) {
    if (!detMatched[static_cast<std::size_t>(d)]) out.unmatched_detections.push_back(d);
  }
  return out;
}

Assignment associate(const std::vector<BoundingBox>& predicted,
                     const std::vector<Detection>& detections, const AssociationConfig& cfg) {
  std::vector<BoundingBox> boxes;
  boxes.reserve(detections.size());
  for (const auto& d : detections) boxes.push_back(d.box);
  return associateBoxes(predicted, boxes, cfg.min_iou, cfg.greedy);
}

void DetectorNoiseConfig::validate() const {
  if (!(target_iou_mean > 0 && target_iou_mean <= 1)) {
    throw InvalidInput("detector: target_iou_mean must lie in (0,1]");
  }
  if (!(target_iou_std >= 0)) throw InvalidInput("detector: target_iou_std must be >= 0");
  if (!(miss_rate >= 0 && miss_rate <= 1)) throw InvalidInput("detector: miss_rate must lie in [0,1]");
  if (!(false_positive_rate >= 0) || std::isinf(false_positive_rate)) {
    throw InvalidInput("detector: false_positive_rate must be finite and >= 0");
  }
  if (!(min_visibility >= 0 && min_visibility <= 1)) {
    throw InvalidInput("detector: min_visibility must lie in [0,1]");
  }
}

namespace {

BoundingBox perturbed(const BoundingBox& box, double t, double dirX, double dirY, double shift,
                      double grow, double aspect) {
  const double cx = box.cx() + t * shift * dirX * box.w;
  const double cy = box.cy() + t * shift * dirY * box.h;
  const double sx = 1.0 + t * (1.0 - shift) * (1.0 + 0.25 * aspect);
  const double sy = 1.0 + t * (1.0 - shift) * (1.0 - 0.25 * aspect);
  const double fx = grow > 0 ? sx : 1.0 / sx;
  const double fy = grow > 0 ? sy : 1.0 / sy;
  return BoundingBox::fromCenter(cx, cy, box.w * fx, box.h * fy);
}

}  // namespace

PerturbResult perturbBoxToIou(const BoundingBox& box, double target, std::uint64_t seed) {
  requireValid(box, "perturbed box");
  if (!(target > 0 && target <= 1)) throw InvalidInput("perturbation target IOU must lie in (0,1]");
  if (target >= 1) return PerturbResult{box, 1.0, true};

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  const double shift = unit(rng);           // share of the perturbation spent on translation
  const double grow = unit(rng) < 0.5 ? -1.0 : 1.0;
  const double aspect = 2.0 * unit(rng) - 1.0;
  const double dirX = std::cos(angle), dirY = std::sin(angle);

  auto overlapAt = [&](double t) {
    return iou(box, perturbed(box, t, dirX, dirY, shift, grow, aspect));
  };
  double lo = 0, hi = 1;
  while (overlapAt(hi) > target && hi < 1e4) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (overlapAt(mid) > target ? lo : hi) = mid;
  }
  PerturbResult r;
  r.box = perturbed(box, 0.5 * (lo + hi), dirX, dirY, shift, grow, aspect);
  r.achieved_iou = iou(box, r.box);
  r.within_tolerance = std::abs(r.achieved_iou - target) <= kPerturbTolerance;
  return r;
}

std::vector<Detection> simulateDetections(int frame_index, const BoundingBox& ground_truth,
                                          const DetectorNoiseConfig& cfg, int frame_width,
                                          int frame_height, double visibility) {
  cfg.validate();
  requireValid(ground_truth, "detector ground truth");
  Rng rng(deriveSeed(cfg.seed, {static_cast<std::uint64_t>(frame_index)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Detection> out;
  const double missDraw = unit(rng);
  const double iouDraw = std::normal_distribution<double>(0.0, 1.0)(rng);
  const std::uint64_t perturbSeed = rng();
  if (visibility >= cfg.min_visibility && missDraw >= cfg.miss_rate) {
    const double target = std::clamp(cfg.target_iou_mean + cfg.target_iou_std * iouDraw, 0.01, 1.0);
    const PerturbResult p = perturbBoxToIou(ground_truth, target, perturbSeed);
    out.push_back(Detection{p.box, p.achieved_iou, 0});
  }

  if (cfg.false_positive_rate > 0) {
    const int count = std::poisson_distribution<int>(cfg.false_positive_rate)(rng);
    for (int i = 0; i < count; ++i) {
      const double w = ground_truth.w * (0.8 + 0.45 * unit(rng));
      const double h = ground_truth.h * (0.8 + 0.45 * unit(rng));
      const double x = unit(rng) * std::max(1.0, frame_width - w);
      const double y = unit(rng) * std::max(1.0, frame_height - h);
      out.push_back(Detection{BoundingBox(x, y, w, h), 0.5 * unit(rng), 0});
    }
  }
  return out;
}

Detection parseDetectionLine(const std::string& line) {
  std::istringstream ss(line);
  Detection d;
  double x, y, w, h;
  if (!(ss >> d.class_id >> d.confidence >> x >> y >> w >> h)) {
    throw InvalidInput("malformed detection line: '" + line + "'");
  }
  std::string rest;
  if (ss >> rest) throw InvalidInput("trailing fields in detection line: '" + line + "'");
  d.box = BoundingBox(x, y, w, h);
  requireValid(d.box, "detection box");
  return d;
}

std::string formatDetectionLine(const Detection& d) {
  return std::to_string(d.class_id) + ' ' + formatNumber(d.confidence) + ' ' + formatNumber(d.box.x) +
         ' ' + formatNumber(d.box.y) + ' ' + formatNumber(d.box.w) + ' ' + formatNumber(d.box.h);
}

}  // namespace adatrack
