#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adatrack/geometry.hpp"
#include "adatrack/image.hpp"
#include "json.hpp"

namespace adatrack {

/// Patch resolutions and the context rule shared by every crop.
struct CropSettings {
  int template_size = 64;
  int search_size = 128;
  double context_margin = 0.5;
};

/// Side of the square template crop: sqrt((w + p)(h + p)) with p = margin * (w + h).
double templateSide(const BoundingBox& box, double context_margin);

/// Square region centred on `box` with the given side.
BoundingBox squareRegion(const BoundingBox& box, double side);

/// Area share of `region` lying outside `[0,width) x [0,height)`.
double outsideFraction(const BoundingBox& region, int width, int height);

/// Bilinear resample of an arbitrary square region. Samples falling outside
/// the frame take the channel mean.
Patch cropRegion(const Frame& frame, const BoundingBox& region, int resolution);

/// Template crop around `box`. Throws LostTarget when `box` misses the frame.
Patch cropTemplate(const Frame& frame, const BoundingBox& box, double context_margin,
                   int resolution = CropSettings{}.template_size);

/// Search crop: concentric with the template crop, twice its side.
/// Throws LostTarget when the whole search square misses the frame.
Patch cropSearch(const Frame& frame, const BoundingBox& prev_box,
                 const CropSettings& settings = CropSettings{});

struct SequenceEvent {
  enum class Kind { occlusion, appearance_switch };
  Kind kind = Kind::occlusion;
  int frame = 0;
  int duration = 1;
  BoundingBox region;  // occluder rectangle; unused for appearance switches
};

const char* toString(SequenceEvent::Kind kind);

struct Sequence {
  std::string name;
  std::vector<Frame> frames;
  std::vector<BoundingBox> ground_truth;
  /// Visible share of each ground-truth box (1 unless an occluder covers it).
  std::vector<double> visibility;
  std::vector<SequenceEvent> events;

  std::size_t size() const { return frames.size(); }
};

/// Parses one OTB annotation line; fields split on commas and/or whitespace.
BoundingBox parseGroundTruthLine(const std::string& line);

/// Frames are image files in `frames_dir` ordered by filename.
Sequence loadOtbSequence(const std::filesystem::path& frames_dir,
                         const std::filesystem::path& gt_file);

/// Writes frames as PGM/PPM plus groundtruth_rect.txt and events.json.
void writeSequence(const Sequence& seq, const std::filesystem::path& out_dir);

struct TextureSpec {
  double mean = 0.5;
  double contrast = 0.3;
  double cell = 8;  // pixels between random lattice points
};

struct VelocitySegment {
  int start_frame = 0;
  double vx = 0;
  double vy = 0;
};

struct SyntheticEventSpec {
  SequenceEvent::Kind kind = SequenceEvent::Kind::occlusion;
  int frame = 0;
  int duration = 1;
  double margin = 4;  // occluder padding around the covered path, pixels
};

/// Piecewise constant-velocity target over a static textured background.
struct SyntheticConfig {
  std::string name = "synthetic";
  int frames = 100;
  int width = 320;
  int height = 240;
  int channels = 1;
  BoundingBox target{140, 100, 32, 40};
  std::vector<VelocitySegment> trajectory;
  TextureSpec background{0.45, 0.25, 12};
  TextureSpec target_texture{0.55, 0.4, 6};
  TextureSpec occluder_texture{0.5, 0.35, 5};
  double drift_rate = 0;  // target textures blended per frame
  double noise_std = 0;
  std::vector<SyntheticEventSpec> events;
};

SyntheticConfig syntheticConfigFromJson(const nlohmann::json& j);
nlohmann::json toJson(const SyntheticConfig& cfg);
SyntheticConfig loadSyntheticConfig(const std::filesystem::path& path);

/// Ground-truth trajectory alone (no rendering).
std::vector<BoundingBox> syntheticTrajectory(const SyntheticConfig& cfg);

/// Deterministic in (cfg, seed). Rejects trajectories that leave the frame.
Sequence generateSynthetic(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace adatrack
