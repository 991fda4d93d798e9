#pragma once

// Dense feature maps, sliding cross-correlation and score-map decoding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "adatrack/geometry.hpp"

namespace adatrack {

template <typename Scalar>
using PlaneX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Multi-channel embedding of a patch. One plane per channel; `stride` is
/// the number of patch pixels per cell.
template <typename Scalar>
struct FeatureMapT {
  std::vector<PlaneX<Scalar>> values;
  int stride = 1;

  int channels() const { return static_cast<int>(values.size()); }
  int rows() const { return values.empty() ? 0 : static_cast<int>(values[0].rows()); }
  int cols() const { return values.empty() ? 0 : static_cast<int>(values[0].cols()); }

  /// Window of every channel starting at cell (row, col).
  FeatureMapT window(int row, int col, int height, int width) const {
    FeatureMapT out;
    out.stride = stride;
    out.values.reserve(values.size());
    for (const auto& p : values) out.values.push_back(p.block(row, col, height, width));
    return out;
  }

  /// All channels flattened in channel-major order.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> flattened() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(static_cast<Eigen::Index>(channels()) * rows() *
                                               cols());
    Eigen::Index o = 0;
    for (const auto& p : values) {
      v.segment(o, p.size()) = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(
          p.data(), p.size());
      o += p.size();
    }
    return v;
  }

  bool operator==(const FeatureMapT& other) const {
    if (stride != other.stride || values.size() != other.values.size()) return false;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k].rows() != other.values[k].rows() ||
          values[k].cols() != other.values[k].cols() || values[k] != other.values[k]) {
        return false;
      }
    }
    return true;
  }
};

using FeatureMap = FeatureMapT<double>;

/// Correlation response. Cell (r, c) places the template's top-left corner at
/// search cell (r, c); the centre cell means "no displacement".
template <typename Scalar>
struct ScoreMapT {
  PlaneX<Scalar> values;
  int stride = 1;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  double centerRow() const { return (rows() - 1) / 2.0; }
  double centerCol() const { return (cols() - 1) / 2.0; }
  /// Patch-pixel displacement of cell (0,0) relative to the search-patch centre.
  double originOffsetX() const { return -centerCol() * stride; }
  double originOffsetY() const { return -centerRow() * stride; }

  ScoreMapT& operator+=(const ScoreMapT& other) {
    values += other.values;
    return *this;
  }
};

using ScoreMap = ScoreMapT<double>;

struct CorrelationConfig {
  double bias = 0.0;           // constant b added to every score
  double window_weight = 0.2;  // cosine-window blend weight, in [0,1]
  bool normalize = true;       // zero-mean, unit-norm matching per window
};

/// Separable Hann window scaled so its peak is 1.
inline Eigen::MatrixXd hannWindow(int rows, int cols) {
  auto hann = [](int n) {
    Eigen::VectorXd v(n);
    if (n == 1) {
      v(0) = 1;
      return v;
    }
    for (int i = 0; i < n; ++i) v(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    return v;
  };
  Eigen::MatrixXd w = hann(rows) * hann(cols).transpose();
  const double m = w.maxCoeff();
  return m > 0 ? Eigen::MatrixXd(w / m) : Eigen::MatrixXd::Ones(rows, cols);
}

/// Valid sliding correlation summed over channels, plus the configured bias.
///
/// With `normalize` set, every template-sized window is centred per channel
/// and scaled to unit norm over all channels before the dot product with the
/// equally treated template, so raw scores lie in [-1, 1]; zero-variance
/// windows score 0. A non-zero window weight blends a Hann window in as
/// (1 - w) * score + w * hann.
template <typename Scalar>
ScoreMapT<Scalar> crossCorrelate(const FeatureMapT<Scalar>& tmpl, const FeatureMapT<Scalar>& search,
                                 const CorrelationConfig& cfg) {
  if (tmpl.channels() == 0 || tmpl.channels() != search.channels()) {
    throw InvalidInput("cross-correlation: channel counts differ (" +
                       std::to_string(tmpl.channels()) + " vs " +
                       std::to_string(search.channels()) + ")");
  }
  if (tmpl.stride != search.stride) throw InvalidInput("cross-correlation: strides differ");
  if (tmpl.rows() > search.rows() || tmpl.cols() > search.cols() || tmpl.rows() < 1 ||
      tmpl.cols() < 1) {
    throw InvalidInput("cross-correlation: template does not fit inside the search map");
  }
  if (!(cfg.window_weight >= 0 && cfg.window_weight <= 1)) {
    throw InvalidInput("cross-correlation: window weight must lie in [0,1]");
  }

  const int th = tmpl.rows(), tw = tmpl.cols();
  const int oh = search.rows() - th + 1, ow = search.cols() - tw + 1;
  const std::size_t nch = tmpl.values.size();
  ScoreMapT<Scalar> out;
  out.stride = search.stride;
  out.values.resize(oh, ow);

  if (!cfg.normalize) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        Scalar acc = 0;
        for (std::size_t k = 0; k < nch; ++k) {
          acc += tmpl.values[k].cwiseProduct(search.values[k].block(r, c, th, tw)).sum();
        }
        out.values(r, c) = acc;
      }
    }
  } else {
    constexpr Scalar kZeroVariance = Scalar(1e-18);
    std::vector<PlaneX<Scalar>> centred(nch);
    Scalar tnorm2 = 0;
    for (std::size_t k = 0; k < nch; ++k) {
      centred[k] = tmpl.values[k].array() - tmpl.values[k].mean();
      tnorm2 += centred[k].squaredNorm();
    }
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        Scalar dot = 0, snorm2 = 0;
        for (std::size_t k = 0; k < nch; ++k) {
          const auto blk = search.values[k].block(r, c, th, tw);
          const Scalar m = blk.mean();
          dot += centred[k].cwiseProduct(blk).sum();
          snorm2 += (blk.array() - m).square().sum();
        }
        Scalar v = 0;
        if (tnorm2 > kZeroVariance && snorm2 > kZeroVariance) {
          v = std::clamp(dot / std::sqrt(tnorm2 * snorm2), Scalar(-1), Scalar(1));
        }
        out.values(r, c) = v;
      }
    }
  }

  if (cfg.window_weight > 0) {
    const Scalar wgt = static_cast<Scalar>(cfg.window_weight);
    out.values = (1 - wgt) * out.values + wgt * hannWindow(oh, ow).template cast<Scalar>();
  }
  if (cfg.bias != 0) out.values.array() += static_cast<Scalar>(cfg.bias);
  return out;
}

struct Peak {
  int row = 0;
  int col = 0;
  double value = 0;
};

/// Maximum cell; ties go to the smallest row, then the smallest column.
template <typename Scalar>
Peak argmaxCell(const ScoreMapT<Scalar>& map) {
  if (map.rows() < 1 || map.cols() < 1) throw InvalidInput("argmax of an empty score map");
  Peak best{0, 0, static_cast<double>(map.values(0, 0))};
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const double v = static_cast<double>(map.values(r, c));
      if (v > best.value) best = Peak{r, c, v};
    }
  }
  return best;
}

/// Translates `prev_box` by the peak's displacement from the map centre.
/// `resample_factor` converts patch pixels to frame pixels.
template <typename Scalar>
BoundingBox scoreToBox(const ScoreMapT<Scalar>& map, const BoundingBox& prev_box,
                       double resample_factor = 1.0) {
  const Peak p = argmaxCell(map);
  const double dx = (map.originOffsetX() + p.col * map.stride) * resample_factor;
  const double dy = (map.originOffsetY() + p.row * map.stride) * resample_factor;
  return prev_box.translated(dx, dy);
}

}  // namespace adatrack
