#pragma once

#include <memory>
#include <string>

#include "adatrack/correlation.hpp"
#include "adatrack/image.hpp"

namespace adatrack {

/// Patch -> feature map. Implementations are immutable and reentrant.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual FeatureMap embed(const Patch& patch) const = 0;
  virtual int stride() const = 0;
  virtual int channels(int input_channels) const = 0;
  virtual std::string name() const = 0;
};

/// Mean over stride x stride blocks; trailing rows/cols that do not fill a
/// whole block are dropped.
Eigen::MatrixXd averagePool(const Eigen::MatrixXd& plane, int stride);

/// Grey intensity plus absolute forward-difference gradients along x and y,
/// each average-pooled by the stride. Channel order: intensity, |dI/dx|, |dI/dy|.
class HandcraftedEmbedder final : public Embedder {
 public:
  explicit HandcraftedEmbedder(int stride = 4);
  FeatureMap embed(const Patch& patch) const override;
  int stride() const override { return stride_; }
  int channels(int) const override { return 3; }
  std::string name() const override { return "handcrafted"; }

 private:
  int stride_;
};

/// Raw patch channels, average-pooled by the stride.
class IdentityEmbedder final : public Embedder {
 public:
  explicit IdentityEmbedder(int stride = 1);
  FeatureMap embed(const Patch& patch) const override;
  int stride() const override { return stride_; }
  int channels(int input_channels) const override { return input_channels; }
  std::string name() const override { return "identity"; }

 private:
  int stride_;
};

std::shared_ptr<const Embedder> makeEmbedder(const std::string& kind, int stride);

}  // namespace adatrack
