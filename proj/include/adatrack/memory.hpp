#pragma once

#include <cstddef>
#include <vector>

#include "adatrack/correlation.hpp"

namespace adatrack {

struct TemplateEntry {
  FeatureMap features;
  int frame_index = 0;
  double quality_at_admit = 1.0;
};

/// Ordered template store. Entry 0 is the template from the latest
/// (re-)initialization and is never evicted for budget reasons.
class TemplateMemory {
 public:
  explicit TemplateMemory(std::size_t budget = 5);

  /// Drops everything and installs `initial` as entry 0.
  void resetTo(TemplateEntry initial);

  /// Appends `entry` iff y > alpha. Returns whether it was admitted.
  bool admit(TemplateEntry entry, double y, double alpha);

  /// Removes the oldest non-initial entry until the budget holds.
  /// Returns the number of evicted entries.
  std::size_t enforceBudget();

  const std::vector<TemplateEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t budget_;
  std::vector<TemplateEntry> entries_;
};

/// Frame pixels covered by one feature cell of a search map cropped from
/// `search_region`.
double cellSize(const FeatureMap& search_features, const BoundingBox& search_region);

/// Template-sized window of the search features centred on `box`'s centre.
/// Offsets are rounded to whole cells and clamped to the map. Throws
/// LostTarget if the box centre falls outside `search_region`.
TemplateEntry cropTemplateFromSearch(const FeatureMap& search_features,
                                     const BoundingBox& search_region, const BoundingBox& box,
                                     int template_rows, int template_cols, int frame_index = 0,
                                     double quality = 1.0);

/// Sum of the score maps of every entry against the search features, in
/// stored order. With `quality_weighted`, each map is scaled by the entry's
/// admission quality.
ScoreMap integratedScore(const TemplateMemory& memory, const FeatureMap& search_features,
                         const CorrelationConfig& cfg, bool quality_weighted = false);

struct Adaptation {
  TemplateEntry updated_template;
  BoundingBox refined_box;
};

/// Memory-driven refinement for gradual change: localize with the summed
/// score maps, then cut the new active template at the refined box.
/// `prev_box` is the box the search region was centred on.
Adaptation adaptFromMemory(const TemplateMemory& memory, const FeatureMap& search_features,
                           const BoundingBox& search_region, const BoundingBox& prev_box,
                           const CorrelationConfig& cfg, int frame_index = 0,
                           bool quality_weighted = false);

}  // namespace adatrack
