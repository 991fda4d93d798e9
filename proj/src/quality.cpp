#include "adatrack/quality.hpp"

#include <algorithm>

namespace adatrack {

NccQualityScorer::NccQualityScorer(std::shared_ptr<const Embedder> embedder)
    : embedder_(std::move(embedder)) {
  if (!embedder_) throw InvalidInput("quality scorer needs an embedder");
}

QualityReference NccQualityScorer::makeReference(const Patch& crop) const {
  return QualityReference{crop, embedder_->embed(crop)};
}

double NccQualityScorer::score(const QualityReference& ref, const Patch& crop) const {
  const FeatureMap cur = embedder_->embed(crop);
  if (cur.rows() != ref.reference_features.rows() || cur.cols() != ref.reference_features.cols()) {
    throw InvalidInput("quality crop resolution differs from the reference");
  }
  // Equal-sized maps give a single normalized-correlation cell.
  const CorrelationConfig plain{0.0, 0.0, true};
  const double ncc = crossCorrelate(ref.reference_features, cur, plain).values(0, 0);
  return std::clamp(0.5 * (1.0 + ncc), 0.0, 1.0);
}

QualityScore trackQuality(const QualityScorer& scorer, const QualityReference& ref,
                          const Patch& current_crop, int frame_index) {
  return QualityScore{scorer.score(ref, current_crop), frame_index};
}

}  // namespace adatrack
