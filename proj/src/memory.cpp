#include "adatrack/memory.hpp"

#include <cmath>

namespace adatrack {

TemplateMemory::TemplateMemory(std::size_t budget) : budget_(budget) {
  if (budget_ < 1) throw InvalidInput("memory budget must be >= 1");
}

void TemplateMemory::resetTo(TemplateEntry initial) {
  entries_.clear();
  entries_.push_back(std::move(initial));
}

bool TemplateMemory::admit(TemplateEntry entry, double y, double alpha) {
  if (!entries_.empty() && (entry.features.rows() != entries_[0].features.rows() ||
                            entry.features.cols() != entries_[0].features.cols())) {
    throw InvalidInput("memory entry does not have template dimensions");
  }
  if (!(y > alpha)) return false;
  entries_.push_back(std::move(entry));
  return true;
}

std::size_t TemplateMemory::enforceBudget() {
  std::size_t evicted = 0;
  while (entries_.size() > budget_ && entries_.size() > 1) {
    entries_.erase(entries_.begin() + 1);
    ++evicted;
  }
  return evicted;
}

double cellSize(const FeatureMap& search_features, const BoundingBox& search_region) {
  return search_region.w / search_features.cols();
}

TemplateEntry cropTemplateFromSearch(const FeatureMap& search_features,
                                     const BoundingBox& search_region, const BoundingBox& box,
                                     int template_rows, int template_cols, int frame_index,
                                     double quality) {
  requireValid(box, "template box");
  if (template_rows > search_features.rows() || template_cols > search_features.cols()) {
    throw InvalidInput("template window larger than the search map");
  }
  if (box.cx() < search_region.x || box.cx() >= search_region.right() ||
      box.cy() < search_region.y || box.cy() >= search_region.bottom()) {
    throw LostTarget("box centre lies outside the search region");
  }
  const double cell = cellSize(search_features, search_region);
  const int maxRow = search_features.rows() - template_rows;
  const int maxCol = search_features.cols() - template_cols;
  const double col = maxCol / 2.0 + (box.cx() - search_region.cx()) / cell;
  const double row = maxRow / 2.0 + (box.cy() - search_region.cy()) / cell;
  const int c0 = std::clamp(static_cast<int>(std::floor(col + 0.5)), 0, maxCol);
  const int r0 = std::clamp(static_cast<int>(std::floor(row + 0.5)), 0, maxRow);
  return TemplateEntry{search_features.window(r0, c0, template_rows, template_cols), frame_index,
                       quality};
}

ScoreMap integratedScore(const TemplateMemory& memory, const FeatureMap& search_features,
                         const CorrelationConfig& cfg, bool quality_weighted) {
  if (memory.empty()) throw InvalidInput("integrated score of an empty memory");
  ScoreMap total;
  bool first = true;
  for (const auto& entry : memory.entries()) {
    ScoreMap m = crossCorrelate(entry.features, search_features, cfg);
    if (quality_weighted) m.values *= entry.quality_at_admit;
    if (first) {
      total = std::move(m);
      first = false;
    } else {
      total += m;
    }
  }
  return total;
}

Adaptation adaptFromMemory(const TemplateMemory& memory, const FeatureMap& search_features,
                           const BoundingBox& search_region, const BoundingBox& prev_box,
                           const CorrelationConfig& cfg, int frame_index, bool quality_weighted) {
  const ScoreMap total = integratedScore(memory, search_features, cfg, quality_weighted);
  const double patchToFrame = search_region.w / (search_features.cols() * search_features.stride);
  const BoundingBox refined = scoreToBox(total, prev_box, patchToFrame);
  const auto& t0 = memory.entries().front().features;
  TemplateEntry updated = cropTemplateFromSearch(search_features, search_region, refined,
                                                 t0.rows(), t0.cols(), frame_index, 1.0);
  return Adaptation{std::move(updated), refined};
}

}  // namespace adatrack
