#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adatrack/cusum.hpp"
#include "adatrack/detector_sim.hpp"
#include "adatrack/embedder.hpp"
#include "adatrack/memory.hpp"
#include "adatrack/quality.hpp"
#include "adatrack/sequence_io.hpp"

namespace adatrack {

enum class DetectorMode { ideal, simulated, external, ground_truth };

const char* toString(DetectorMode m);
/// Accepts ideal | noisy | simulated | external | gt | ground_truth.
DetectorMode parseDetectorMode(const std::string& s);

/// Template update policy. `adaptive` and a periodic floor may be combined;
/// the experiment tables use exactly one of them.
struct UpdatePolicy {
  bool adaptive = false;
  int period = 0;  // 0 = no periodic refresh
  DetectorMode detector_mode = DetectorMode::simulated;

  static UpdatePolicy none() { return {}; }
  static UpdatePolicy periodic(int n) { return {false, n, DetectorMode::simulated}; }
  static UpdatePolicy adaptiveOnly() { return {true, 0, DetectorMode::simulated}; }

  /// none | periodic:<N> | adaptive | adaptive+periodic:<N>
  static UpdatePolicy parse(const std::string& s);
  std::string label() const;
  void validate() const;
};

/// Source of detector output for a given frame of the running sequence.
class DetectorSource {
 public:
  virtual ~DetectorSource() = default;
  virtual std::vector<Detection> detect(int frame_index) = 0;
};

/// Ground-truth anchored simulation (also used for the ideal mode).
class SimulatedDetectorSource final : public DetectorSource {
 public:
  SimulatedDetectorSource(const Sequence& seq, DetectorNoiseConfig cfg);
  std::vector<Detection> detect(int frame_index) override;

 private:
  const Sequence& seq_;
  DetectorNoiseConfig cfg_;
};

/// Returns the annotation itself, regardless of visibility.
class GroundTruthDetectorSource final : public DetectorSource {
 public:
  explicit GroundTruthDetectorSource(const Sequence& seq) : seq_(seq) {}
  std::vector<Detection> detect(int frame_index) override;

 private:
  const Sequence& seq_;
};

class ExternalDetectorSource final : public DetectorSource {
 public:
  explicit ExternalDetectorSource(const std::string& command) : proc_(command) {}
  std::vector<Detection> detect(int frame_index) override { return proc_.request(frame_index); }

 private:
  ExternalDetector proc_;
};

std::unique_ptr<DetectorSource> makeDetectorSource(DetectorMode mode, const Sequence& seq,
                                                   const DetectorNoiseConfig& noise,
                                                   const std::string& external_command = {});

struct TrackerConfig {
  CropSettings crop;
  std::string embedder = "handcrafted";
  int stride = 4;
  CorrelationConfig correlation;
  CusumParams cusum;
  std::size_t memory_budget = 5;
  bool quality_weighted_memory = false;
  AssociationConfig association;
  KalmanConfig kalman;
  /// Frames between detector retries after an abrupt reset found nothing.
  int redetect_interval = 5;

  void validate() const;
};

struct TrackStats {
  int frames = 0;
  int detector_calls = 0;
  int gradual_adaptations = 0;
  int abrupt_resets = 0;
  int reinitializations = 0;  // detector boxes actually adopted
  int periodic_refreshes = 0;
  int memory_admissions = 0;
  int lost_frames = 0;
  int redetect_attempts = 0;  // detector retries after an empty abrupt reset
};

struct TrackState {
  BoundingBox current_box;
  FeatureMap phi_best;  // active template
  TemplateMemory memory;
  CusumState cusum;
  QualityReference quality_ref;
  KalmanTrack kalman;
  TrackStats stats;
  std::optional<int> redetect_at;  // next retry frame while a reset is pending
};

struct FrameResult {
  int frame = 0;
  TrackedBox box;
  double quality = 1.0;
  double cusum_g = 0.0;  // statistic compared with the thresholds this frame
  ChangeSignal signal = ChangeSignal::none;
  bool detector_called = false;
  bool reinitialized = false;
  bool lost = false;
};

/// Siamese-style tracker whose template is adapted from memory on gradual
/// change and re-initialized from the detector on abrupt change.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg);
  Tracker(TrackerConfig cfg, std::shared_ptr<const Embedder> embedder,
          std::shared_ptr<const QualityScorer> scorer);

  TrackState init(const Frame& frame, const BoundingBox& box) const;

  /// Tracks one frame and applies the policy. `detector` may be null when
  /// the policy never calls it.
  FrameResult step(TrackState& state, const Frame& frame, const UpdatePolicy& policy,
                   DetectorSource* detector) const;

  const TrackerConfig& config() const { return cfg_; }
  const Embedder& embedder() const { return *embedder_; }

 private:
  struct SearchView {
    Patch patch;
    FeatureMap features;
    BoundingBox centre_box;
  };

  SearchView search(const Frame& frame, const BoundingBox& centre) const;
  void reinitialize(TrackState& state, const Frame& frame, const BoundingBox& box) const;
  std::optional<Detection> chooseDetection(const std::vector<Detection>& dets,
                                           const BoundingBox& predicted,
                                           const BoundingBox& last) const;
  double quality(const TrackState& state, const Frame& frame, const BoundingBox& box) const;
  /// Asks the detector for a new target and re-initializes on it. Returns
  /// the search view centred on the adopted box, or nothing.
  std::optional<SearchView> resetFromDetector(TrackState& state, const Frame& frame,
                                              const BoundingBox& predicted, const BoundingBox& last,
                                              DetectorSource* detector, FrameResult& res) const;

  TrackerConfig cfg_;
  std::shared_ptr<const Embedder> embedder_;
  std::shared_ptr<const QualityScorer> scorer_;
};

struct RunOptions {
  bool init_from_detector = false;
  bool inject_ground_truth = false;  // oracle output, for harness checks
};

/// Everything recorded for one sequence: per-frame outputs, traces and counters.
struct TrackRecord {
  std::string sequence;
  std::string policy;
  std::vector<FrameResult> frames;
  std::vector<double> iou;
  TrackStats stats;
  double average_overlap = 0;
  double success_rate = 0;
  std::vector<SequenceEvent> events;

  std::vector<TrackedBox> boxes() const;
};

TrackRecord runSequence(const Sequence& seq, const UpdatePolicy& policy, const Tracker& tracker,
                        DetectorSource* detector, const RunOptions& options = RunOptions{});

}  // namespace adatrack
