#pragma once
// Independent oracles and fixtures shared by the unit tests.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "adatrack/correlation.hpp"
#include "adatrack/image.hpp"

namespace testsupport {

using adatrack::BoundingBox;
using adatrack::FeatureMap;

/// IOU by painting both integer boxes on a grid and counting cells.
inline double rasterIou(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
  const int x0 = std::min(ax, bx), y0 = std::min(ay, by);
  const int x1 = std::max(ax + aw, bx + bw), y1 = std::max(ay + ah, by + bh);
  long inter = 0, uni = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const bool ina = x >= ax && x < ax + aw && y >= ay && y < ay + ah;
      const bool inb = x >= bx && x < bx + bw && y >= by && y < by + bh;
      inter += ina && inb;
      uni += ina || inb;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double rasterIou(const BoundingBox& a, const BoundingBox& b) {
  return rasterIou(static_cast<int>(a.x), static_cast<int>(a.y), static_cast<int>(a.w),
                   static_cast<int>(a.h), static_cast<int>(b.x), static_cast<int>(b.y),
                   static_cast<int>(b.w), static_cast<int>(b.h));
}

/// Plain nested-loop valid correlation, no normalization, no window.
inline Eigen::MatrixXd bruteCorrelate(const FeatureMap& t, const FeatureMap& s) {
  const int oh = s.rows() - t.rows() + 1, ow = s.cols() - t.cols() + 1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(oh, ow);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double acc = 0;
      for (int k = 0; k < t.channels(); ++k)
        for (int i = 0; i < t.rows(); ++i)
          for (int j = 0; j < t.cols(); ++j) acc += t.values[k](i, j) * s.values[k](r + i, c + j);
      out(r, c) = acc;
    }
  return out;
}

inline FeatureMap randomMap(std::mt19937_64& rng, int channels, int rows, int cols,
                            int stride = 1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap m;
  m.stride = stride;
  for (int k = 0; k < channels; ++k) {
    Eigen::MatrixXd p(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) p(i, j) = u(rng);
    m.values.push_back(p);
  }
  return m;
}

/// Frame whose 8-bit pixel values come from `fn(channel, row, col)`.
inline adatrack::Frame makeFrame(int width, int height, int channels,
                                 const std::function<int(int, int, int)>& fn, int index = 0) {
  std::vector<adatrack::Plane8> planes;
  for (int k = 0; k < channels; ++k) {
    adatrack::Plane8 p(height, width);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) p(r, c) = static_cast<std::uint8_t>(fn(k, r, c));
    planes.push_back(p);
  }
  return adatrack::Frame(index, std::move(planes));
}

/// Deterministic pseudo-random texture value in [0,255].
inline int hashTexture(int k, int r, int c) {
  std::uint64_t z = static_cast<std::uint64_t>(k) * 0x9e3779b97f4a7c15ULL ^
                    static_cast<std::uint64_t>(r) * 0xbf58476d1ce4e5b9ULL ^
                    static_cast<std::uint64_t>(c) * 0x94d049bb133111ebULL;
  z ^= z >> 29;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 32;
  return static_cast<int>(z & 0xff);
}

}  // namespace testsupport
