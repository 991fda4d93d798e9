#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adatrack/tracker.hpp"
#include "json.hpp"

namespace adatrack {

/// Where a sequence comes from: an inline or file-based synthetic config, or
/// an OTB-style frame directory plus annotation file.
struct SequenceSource {
  std::string name;
  std::optional<SyntheticConfig> synthetic;
  std::filesystem::path frames_dir;
  std::filesystem::path groundtruth_file;
  std::optional<std::uint64_t> seed;  // overrides the experiment seed for generation
};

struct DetectorSettings {
  DetectorMode mode = DetectorMode::simulated;
  DetectorNoiseConfig noise;
  std::string command;  // external mode only
};

struct SweepSettings {
  std::vector<std::pair<double, double>> betas;  // (beta_low, beta_high)
  std::vector<int> periods;
};

struct ExperimentConfig {
  std::vector<SequenceSource> sequences;
  std::vector<UpdatePolicy> policies{UpdatePolicy::adaptiveOnly()};
  DetectorSettings detector;
  TrackerConfig tracker;
  RunOptions run;
  SweepSettings sweep;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parses and validates an experiment document. Relative paths resolve
/// against `base_dir`. Unknown keys are rejected. Throws ConfigError.
ExperimentConfig experimentConfigFromJson(const nlohmann::json& j,
                                          const std::filesystem::path& base_dir = {});
ExperimentConfig loadExperimentConfig(const std::filesystem::path& path);

/// Builds the sequence for `source`; synthetic ones use `source.seed` or `seed`.
Sequence loadSequence(const SequenceSource& source, std::uint64_t seed);

/// Per-run noise seed, independent across sequences.
std::uint64_t detectorSeed(std::uint64_t experiment_seed, std::size_t sequence_index);

/// Tracks one loaded sequence under `policy` with the experiment's detector.
TrackRecord runExperiment(const ExperimentConfig& cfg, const Sequence& seq,
                          std::size_t sequence_index, const UpdatePolicy& policy);

struct TableRow {
  std::string sequence;
  std::string policy;
  int frames = 0;
  double average_overlap = 0;
  double success_rate = 0;
  double detector_calls = 0;
  double gradual_adaptations = 0;
  double abrupt_resets = 0;
};

struct ExperimentReport {
  std::vector<TableRow> rows;      // sequence-major, in config order
  std::vector<TableRow> averages;  // one per policy, equal weight per sequence
  std::vector<TrackRecord> records;
};

/// Runs every sequence under every policy. `jobs` > 1 runs sequences in
/// parallel; output order does not depend on it.
ExperimentReport runTable(const ExperimentConfig& cfg, int jobs = 1);

void writeTableCsv(const ExperimentReport& report, std::ostream& out);
void writeTableText(const ExperimentReport& report, std::ostream& out);

struct SweepPoint {
  std::string strategy;  // "adaptive" or "periodic"
  double beta_low = 0;
  double beta_high = 0;
  int period = 0;
  double update_rate = 0;  // detector calls per frame
  double average_overlap = 0;
};

/// Adaptive points use the measured detector-call rate; periodic points sit at 1/N.
std::vector<SweepPoint> sweepUpdateRate(const ExperimentConfig& cfg,
                                        const std::vector<std::pair<double, double>>& betas,
                                        const std::vector<int>& periods, int jobs = 1);

void writeSweepCsv(const std::vector<SweepPoint>& points, std::ostream& out);

/// Columns: frame,iou,quality,cusum_g,alarm,detector_called
void writeFrameTrace(const TrackRecord& record, std::ostream& out);

}  // namespace adatrack
