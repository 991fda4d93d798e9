#pragma once

#include <memory>

#include "adatrack/embedder.hpp"
#include "adatrack/image.hpp"

namespace adatrack {

/// Context-free crop of the initializing box and its features. Built once
/// per track and rebuilt only on re-initialization.
struct QualityReference {
  Patch reference_patch;
  FeatureMap reference_features;
};

struct QualityScore {
  double y = 0.5;
  int frame_index = 0;
};

/// Maps (reference, current crop) to a similarity in [0,1]; higher is more similar.
class QualityScorer {
 public:
  virtual ~QualityScorer() = default;
  virtual QualityReference makeReference(const Patch& crop) const = 0;
  virtual double score(const QualityReference& ref, const Patch& crop) const = 0;
};

/// y = (1 + ncc) / 2 with ncc the normalized correlation of the two flattened
/// feature maps (per-channel centring, one global norm). Degenerate,
/// zero-variance inputs give 0.5.
class NccQualityScorer final : public QualityScorer {
 public:
  explicit NccQualityScorer(std::shared_ptr<const Embedder> embedder);
  QualityReference makeReference(const Patch& crop) const override;
  double score(const QualityReference& ref, const Patch& crop) const override;
  const Embedder& embedder() const { return *embedder_; }

 private:
  std::shared_ptr<const Embedder> embedder_;
};

QualityScore trackQuality(const QualityScorer& scorer, const QualityReference& ref,
                          const Patch& current_crop, int frame_index);

}  // namespace adatrack
