#include "adatrack/embedder.hpp"

namespace adatrack {

Eigen::MatrixXd averagePool(const Eigen::MatrixXd& plane, int stride) {
  if (stride < 1) throw InvalidInput("pooling stride must be >= 1");
  const Eigen::Index rows = plane.rows() / stride, cols = plane.cols() / stride;
  if (rows < 1 || cols < 1) throw InvalidInput("patch smaller than one pooling cell");
  if (stride == 1) return plane;
  Eigen::MatrixXd out(rows, cols);
  const double inv = 1.0 / (stride * stride);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = plane.block(r * stride, c * stride, stride, stride).sum() * inv;
    }
  }
  return out;
}

HandcraftedEmbedder::HandcraftedEmbedder(int stride) : stride_(stride) {
  if (stride < 1) throw InvalidInput("embedder stride must be >= 1");
}

FeatureMap HandcraftedEmbedder::embed(const Patch& patch) const {
  if (patch.channels.empty()) throw InvalidInput("cannot embed an empty patch");
  Eigen::MatrixXd intensity = patch.channels[0];
  for (std::size_t k = 1; k < patch.channels.size(); ++k) intensity += patch.channels[k];
  intensity /= static_cast<double>(patch.channels.size());

  const Eigen::Index rows = intensity.rows(), cols = intensity.cols();
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::MatrixXd gy = Eigen::MatrixXd::Zero(rows, cols);
  if (cols > 1) {
    gx.leftCols(cols - 1) =
        (intensity.rightCols(cols - 1) - intensity.leftCols(cols - 1)).cwiseAbs();
  }
  if (rows > 1) {
    gy.topRows(rows - 1) = (intensity.bottomRows(rows - 1) - intensity.topRows(rows - 1)).cwiseAbs();
  }

  FeatureMap map;
  map.stride = stride_;
  map.values = {averagePool(intensity, stride_), averagePool(gx, stride_),
                averagePool(gy, stride_)};
  return map;
}

IdentityEmbedder::IdentityEmbedder(int stride) : stride_(stride) {
  if (stride < 1) throw InvalidInput("embedder stride must be >= 1");
}

FeatureMap IdentityEmbedder::embed(const Patch& patch) const {
  if (patch.channels.empty()) throw InvalidInput("cannot embed an empty patch");
  FeatureMap map;
  map.stride = stride_;
  for (const auto& p : patch.channels) map.values.push_back(averagePool(p, stride_));
  return map;
}

std::shared_ptr<const Embedder> makeEmbedder(const std::string& kind, int stride) {
  if (kind == "handcrafted") return std::make_shared<HandcraftedEmbedder>(stride);
  if (kind == "identity") return std::make_shared<IdentityEmbedder>(stride);
  throw InvalidInput("unknown embedder '" + kind + "'");
}

}  // namespace adatrack
