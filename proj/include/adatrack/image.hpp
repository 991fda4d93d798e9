#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adatrack/geometry.hpp"

namespace adatrack {

/// One 8-bit image plane, row-major like the files it comes from.
using Plane8 = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A video frame. Stored as 8-bit planes; intensities are exposed in [0,1].
class Frame {
 public:
  Frame() = default;
  Frame(int index, std::vector<Plane8> planes);

  int index() const { return index_; }
  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int channels() const { return static_cast<int>(planes_.size()); }

  double at(int channel, int row, int col) const {
    return planes_[static_cast<std::size_t>(channel)](row, col) * (1.0 / 255.0);
  }
  const Plane8& plane(int channel) const { return planes_[static_cast<std::size_t>(channel)]; }

  /// Per-channel mean intensity, used to fill crop area outside the image.
  double meanIntensity(int channel) const { return means_[static_cast<std::size_t>(channel)]; }

  BoundingBox extent() const { return BoundingBox(0, 0, width(), height()); }

  bool operator==(const Frame& other) const;

 private:
  int index_ = 0;
  std::vector<Plane8> planes_;
  std::vector<double> means_;
};

/// Fixed-resolution square crop, one real-valued plane per channel.
struct Patch {
  std::vector<Eigen::MatrixXd> channels;
  BoundingBox source_box;    // crop square in frame coordinates
  double pad_fraction = 0;   // share of the crop square lying outside the frame

  int resolution() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  /// Frame pixels per patch pixel.
  double scale() const { return source_box.w / resolution(); }
};

// Image files: binary/ASCII PNM (P2, P3, P5, P6) and 8-bit PNG.
Frame readImage(const std::filesystem::path& path, int index = 0);
void writeImage(const std::filesystem::path& path, const Frame& frame);

}  // namespace adatrack
