#pragma once

// Axis-aligned boxes and the overlap metrics used to score a tracker run.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adatrack/errors.hpp"

namespace adatrack {

/// Box stored as (left, top, width, height), the OTB ground-truth layout.
template <typename Scalar>
struct Box {
  Scalar x{0};
  Scalar y{0};
  Scalar w{0};
  Scalar h{0};

  Box() = default;
  Box(Scalar x_, Scalar y_, Scalar w_, Scalar h_) : x(x_), y(y_), w(w_), h(h_) {}

  static Box fromCenter(Scalar cx, Scalar cy, Scalar w_, Scalar h_) {
    return Box(cx - w_ / 2, cy - h_ / 2, w_, h_);
  }

  Scalar cx() const { return x + w / 2; }
  Scalar cy() const { return y + h / 2; }
  Scalar right() const { return x + w; }
  Scalar bottom() const { return y + h; }
  Scalar area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
           w > 0 && h > 0;
  }

  Box translated(Scalar dx, Scalar dy) const { return Box(x + dx, y + dy, w, h); }

  bool operator==(const Box&) const = default;
};

using BoundingBox = Box<double>;

/// Tracker output for one frame; empty when the target was declared lost.
using TrackedBox = std::optional<BoundingBox>;

template <typename Scalar>
void requireValid(const Box<Scalar>& b, const char* what = "box") {
  if (!b.valid()) {
    throw InvalidInput(std::string(what) + ": width and height must be positive and finite");
  }
}

template <typename Scalar>
Scalar intersectionArea(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const Scalar ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return Scalar(0);
  return iw * ih;
}

template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  requireValid(a, "iou lhs");
  requireValid(b, "iou rhs");
  const Scalar inter = intersectionArea(a, b);
  if (inter <= 0) return Scalar(0);
  const Scalar uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

/// Per-frame IOU; a missing tracker box scores zero.
template <typename Scalar>
Scalar iou(const Box<Scalar>& gt, const std::optional<Box<Scalar>>& tr) {
  return tr ? iou(gt, *tr) : Scalar(0);
}

/// One overlap ratio per evaluated frame.
struct OverlapSeries {
  std::vector<double> per_frame;

  double mean() const {
    if (per_frame.empty()) throw InvalidInput("overlap series is empty");
    double s = 0;
    for (double v : per_frame) s += v;
    return s / static_cast<double>(per_frame.size());
  }

  /// Fraction of frames with overlap strictly above the threshold.
  double fractionAbove(double threshold) const {
    if (per_frame.empty()) throw InvalidInput("overlap series is empty");
    std::size_t n = 0;
    for (double v : per_frame) n += v > threshold ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(per_frame.size());
  }
};

template <typename Tracked>
OverlapSeries overlapSeries(std::span<const BoundingBox> gt, std::span<const Tracked> tr) {
  if (gt.size() != tr.size()) {
    throw InvalidInput("ground truth and tracker sequences differ in length (" +
                       std::to_string(gt.size()) + " vs " + std::to_string(tr.size()) + ")");
  }
  OverlapSeries s;
  s.per_frame.reserve(gt.size());
  for (std::size_t t = 0; t < gt.size(); ++t) s.per_frame.push_back(iou(gt[t], tr[t]));
  return s;
}

/// Mean per-frame IOU over a sequence.
template <typename Tracked>
double averageOverlap(std::span<const BoundingBox> gt, std::span<const Tracked> tr) {
  if (gt.empty()) throw InvalidInput("average overlap needs at least one frame");
  return overlapSeries(gt, tr).mean();
}

/// OTB success measure: share of frames whose IOU exceeds `threshold` (strict).
template <typename Tracked>
double successRate(std::span<const BoundingBox> gt, std::span<const Tracked> tr,
                   double threshold = 0.5) {
  if (gt.empty()) throw InvalidInput("success rate needs at least one frame");
  return overlapSeries(gt, tr).fractionAbove(threshold);
}

inline double averageOverlap(const std::vector<BoundingBox>& gt,
                             const std::vector<BoundingBox>& tr) {
  return averageOverlap<BoundingBox>(std::span<const BoundingBox>(gt),
                                     std::span<const BoundingBox>(tr));
}

inline double averageOverlap(const std::vector<BoundingBox>& gt,
                             const std::vector<TrackedBox>& tr) {
  return averageOverlap<TrackedBox>(std::span<const BoundingBox>(gt),
                                    std::span<const TrackedBox>(tr));
}

inline double successRate(const std::vector<BoundingBox>& gt, const std::vector<BoundingBox>& tr,
                          double threshold = 0.5) {
  return successRate<BoundingBox>(std::span<const BoundingBox>(gt),
                                  std::span<const BoundingBox>(tr), threshold);
}

inline double successRate(const std::vector<BoundingBox>& gt, const std::vector<TrackedBox>& tr,
                          double threshold = 0.5) {
  return successRate<TrackedBox>(std::span<const BoundingBox>(gt),
                                 std::span<const TrackedBox>(tr), threshold);
}

}  // namespace adatrack
