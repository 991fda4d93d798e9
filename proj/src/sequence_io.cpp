#include "adatrack/sequence_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <random>
#include <sstream>

#include "adatrack/csv.hpp"
#include "adatrack/random.hpp"

namespace adatrack {

double templateSide(const BoundingBox& box, double context_margin) {
  const double p = context_margin * (box.w + box.h);
  return std::sqrt((box.w + p) * (box.h + p));
}

BoundingBox squareRegion(const BoundingBox& box, double side) {
  return BoundingBox::fromCenter(box.cx(), box.cy(), side, side);
}

double outsideFraction(const BoundingBox& region, int width, int height) {
  const BoundingBox frame(0, 0, width, height);
  const double inside = intersectionArea(region, frame);
  return std::clamp(1.0 - inside / region.area(), 0.0, 1.0);
}

Patch cropRegion(const Frame& frame, const BoundingBox& region, int resolution) {
  requireValid(region, "crop region");
  if (resolution < 1) throw InvalidInput("crop resolution must be positive");
  const int W = frame.width(), H = frame.height();
  const double step = region.w / resolution;
  Patch patch;
  patch.source_box = region;
  patch.pad_fraction = outsideFraction(region, W, H);
  patch.channels.assign(static_cast<std::size_t>(frame.channels()),
                        Eigen::MatrixXd(resolution, resolution));
  for (int i = 0; i < resolution; ++i) {
    const double Y = region.y + (i + 0.5) * step;
    const bool rowInside = Y >= 0 && Y < H;
    const double fy = Y - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const double ay = fy - y0;
    const int r0 = std::clamp(y0, 0, H - 1), r1 = std::clamp(y0 + 1, 0, H - 1);
    for (int j = 0; j < resolution; ++j) {
      const double X = region.x + (j + 0.5) * step;
      const bool inside = rowInside && X >= 0 && X < W;
      const double fx = X - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const double ax = fx - x0;
      const int c0 = std::clamp(x0, 0, W - 1), c1 = std::clamp(x0 + 1, 0, W - 1);
      for (int k = 0; k < frame.channels(); ++k) {
        double v;
        if (!inside) {
          v = frame.meanIntensity(k);
        } else {
          const double top = (1 - ax) * frame.at(k, r0, c0) + ax * frame.at(k, r0, c1);
          const double bot = (1 - ax) * frame.at(k, r1, c0) + ax * frame.at(k, r1, c1);
          v = (1 - ay) * top + ay * bot;
        }
        patch.channels[static_cast<std::size_t>(k)](i, j) = v;
      }
    }
  }
  return patch;
}

Patch cropTemplate(const Frame& frame, const BoundingBox& box, double context_margin,
                   int resolution) {
  requireValid(box, "template box");
  if (context_margin < 0) throw InvalidInput("context margin must be non-negative");
  if (intersectionArea(box, frame.extent()) <= 0) {
    throw LostTarget("target box lies entirely outside the frame");
  }
  return cropRegion(frame, squareRegion(box, templateSide(box, context_margin)), resolution);
}

Patch cropSearch(const Frame& frame, const BoundingBox& prev_box, const CropSettings& settings) {
  requireValid(prev_box, "search box");
  if (settings.search_size != 2 * settings.template_size) {
    throw InvalidInput("search resolution must be exactly twice the template resolution");
  }
  const BoundingBox region =
      squareRegion(prev_box, 2.0 * templateSide(prev_box, settings.context_margin));
  if (intersectionArea(region, frame.extent()) <= 0) {
    throw LostTarget("search region lies entirely outside the frame");
  }
  return cropRegion(frame, region, settings.search_size);
}

const char* toString(SequenceEvent::Kind kind) {
  switch (kind) {
    case SequenceEvent::Kind::occlusion:
      return "occlusion";
    case SequenceEvent::Kind::appearance_switch:
      return "appearance_switch";
  }
  return "unknown";
}

BoundingBox parseGroundTruthLine(const std::string& line) {
  std::string norm = line;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream ss(norm);
  std::vector<double> vals;
  std::string tok;
  while (ss >> tok) {
    double v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw InvalidInput("not a number: '" + tok + "'");
    }
    vals.push_back(v);
  }
  if (vals.size() != 4) {
    throw InvalidInput("expected 4 fields x,y,w,h but found " + std::to_string(vals.size()));
  }
  BoundingBox b(vals[0], vals[1], vals[2], vals[3]);
  requireValid(b, "ground-truth box");
  return b;
}

namespace {

bool isImageFile(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

Sequence loadOtbSequence(const std::filesystem::path& frames_dir,
                         const std::filesystem::path& gt_file) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(frames_dir)) throw DataError("not a directory: " + frames_dir.string());
  std::ifstream in(gt_file);
  if (!in) throw DataError("cannot open ground-truth file " + gt_file.string());

  Sequence seq;
  seq.name = frames_dir.parent_path().filename().string();
  if (seq.name.empty()) seq.name = frames_dir.filename().string();

  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      seq.ground_truth.push_back(parseGroundTruthLine(line));
    } catch (const InvalidInput& e) {
      throw DataError(gt_file.string() + ":" + std::to_string(lineNo) + ": " + e.what());
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (entry.is_regular_file() && isImageFile(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (files.size() != seq.ground_truth.size()) {
    throw DataError("frame/annotation count mismatch: " + std::to_string(files.size()) +
                    " frames vs " + std::to_string(seq.ground_truth.size()) + " boxes");
  }
  for (std::size_t t = 0; t < files.size(); ++t) {
    seq.frames.push_back(readImage(files[t], static_cast<int>(t)));
    if (t > 0 && (seq.frames[t].width() != seq.frames[0].width() ||
                  seq.frames[t].height() != seq.frames[0].height())) {
      throw DataError("frame size changes at " + files[t].string());
    }
  }
  seq.visibility.assign(seq.frames.size(), 1.0);
  return seq;
}

void writeSequence(const Sequence& seq, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const fs::path img = out_dir / "img";
  fs::create_directories(img);
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.%s", t + 1,
                  seq.frames[t].channels() == 3 ? "ppm" : "pgm");
    writeImage(img / name, seq.frames[t]);
  }
  std::ofstream gt(out_dir / "groundtruth_rect.txt", std::ios::binary);
  for (const auto& b : seq.ground_truth) {
    gt << formatNumber(b.x) << ',' << formatNumber(b.y) << ',' << formatNumber(b.w) << ','
       << formatNumber(b.h) << '\n';
  }
  nlohmann::json meta;
  meta["name"] = seq.name;
  meta["frames"] = seq.frames.size();
  auto events = nlohmann::json::array();
  for (const auto& e : seq.events) {
    events.push_back({{"type", toString(e.kind)},
                      {"frame", e.frame},
                      {"duration", e.duration},
                      {"region", {e.region.x, e.region.y, e.region.w, e.region.h}}});
  }
  meta["events"] = events;
  meta["visibility"] = seq.visibility;
  std::ofstream(out_dir / "meta.json", std::ios::binary) << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic sequences

namespace {

void allowKeys(const nlohmann::json& j, const std::string& where,
               std::initializer_list<const char*> keys) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T getOr(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config key '") + key + "': " + e.what());
  }
}

TextureSpec textureFromJson(const nlohmann::json& j, const char* key, TextureSpec fallback) {
  if (!j.contains(key)) return fallback;
  const auto& t = j.at(key);
  if (!t.is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  allowKeys(t, key, {"mean", "contrast", "cell"});
  TextureSpec s;
  s.mean = getOr(t, "mean", fallback.mean);
  s.contrast = getOr(t, "contrast", fallback.contrast);
  s.cell = getOr(t, "cell", fallback.cell);
  if (s.cell <= 0) throw ConfigError(std::string("'") + key + ".cell' must be positive");
  return s;
}

nlohmann::json textureToJson(const TextureSpec& s) {
  return {{"mean", s.mean}, {"contrast", s.contrast}, {"cell", s.cell}};
}

BoundingBox boxFromJson(const nlohmann::json& j) {
  try {
    if (j.is_array() && j.size() == 4) {
      return BoundingBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                         j[3].get<double>());
    }
    if (j.is_object()) {
      return BoundingBox(j.at("x").get<double>(), j.at("y").get<double>(),
                         j.at("w").get<double>(), j.at("h").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad box: ") + e.what());
  }
  throw ConfigError("box must be [x,y,w,h] or {x,y,w,h}");
}

/// Smooth random field: uniform lattice values in [-1,1], bilinearly interpolated.
class LatticeTexture {
 public:
  LatticeTexture(double width, double height, double cell, std::uint64_t seed)
      : cell_(cell),
        cols_(static_cast<int>(std::ceil(width / cell)) + 2),
        rows_(static_cast<int>(std::ceil(height / cell)) + 2) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    values_.resize(static_cast<std::size_t>(cols_ * rows_));
    for (double& v : values_) v = u(rng);
  }

  double sample(double px, double py) const {
    const double fx = std::clamp(px / cell_, 0.0, cols_ - 1.0);
    const double fy = std::clamp(py / cell_, 0.0, rows_ - 1.0);
    const int x0 = std::min(static_cast<int>(fx), cols_ - 2);
    const int y0 = std::min(static_cast<int>(fy), rows_ - 2);
    const double ax = fx - x0, ay = fy - y0;
    auto at = [&](int r, int c) { return values_[static_cast<std::size_t>(r * cols_ + c)]; };
    const double top = (1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1);
    const double bot = (1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1);
    return (1 - ay) * top + ay * bot;
  }

 private:
  double cell_;
  int cols_;
  int rows_;
  std::vector<double> values_;
};

constexpr std::uint64_t kBackgroundStream = 0;
constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kOccluderStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

double channelTint(int channel, int channels) {
  if (channels == 1) return 0;
  static constexpr double tint[3] = {0.06, 0.0, -0.06};
  return tint[channel % 3];
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.frames < 1) throw ConfigError("synthetic config: frames must be >= 1");
  if (cfg.width < 8 || cfg.height < 8) throw ConfigError("synthetic config: frame too small");
  if (cfg.channels != 1 && cfg.channels != 3) {
    throw ConfigError("synthetic config: channels must be 1 or 3");
  }
  if (!cfg.target.valid()) throw ConfigError("synthetic config: invalid target box");
  if (cfg.drift_rate < 0) throw ConfigError("synthetic config: drift_rate must be >= 0");
  if (cfg.noise_std < 0) throw ConfigError("synthetic config: noise_std must be >= 0");
  for (const auto& e : cfg.events) {
    if (e.frame < 0 || e.frame >= cfg.frames) {
      throw ConfigError("synthetic config: event frame outside the sequence");
    }
    if (e.duration < 1) throw ConfigError("synthetic config: event duration must be >= 1");
  }
}

}  // namespace

SyntheticConfig syntheticConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synthetic config must be a JSON object");
  allowKeys(j, "synthetic config",
            {"name", "frames", "width", "height", "channels", "target", "trajectory", "background",
             "target_texture", "occluder_texture", "drift_rate", "noise_std", "events"});
  SyntheticConfig cfg;
  cfg.name = getOr<std::string>(j, "name", cfg.name);
  cfg.frames = getOr(j, "frames", cfg.frames);
  cfg.width = getOr(j, "width", cfg.width);
  cfg.height = getOr(j, "height", cfg.height);
  cfg.channels = getOr(j, "channels", cfg.channels);
  if (j.contains("target")) cfg.target = boxFromJson(j.at("target"));
  if (j.contains("trajectory")) {
    if (!j.at("trajectory").is_array()) throw ConfigError("'trajectory' must be an array");
    for (const auto& s : j.at("trajectory")) {
      if (!s.is_object()) throw ConfigError("trajectory segments must be objects");
      allowKeys(s, "trajectory segment", {"start_frame", "vx", "vy"});
      VelocitySegment seg;
      seg.start_frame = getOr(s, "start_frame", 0);
      seg.vx = getOr(s, "vx", 0.0);
      seg.vy = getOr(s, "vy", 0.0);
      cfg.trajectory.push_back(seg);
    }
  }
  cfg.background = textureFromJson(j, "background", cfg.background);
  cfg.target_texture = textureFromJson(j, "target_texture", cfg.target_texture);
  cfg.occluder_texture = textureFromJson(j, "occluder_texture", cfg.occluder_texture);
  cfg.drift_rate = getOr(j, "drift_rate", cfg.drift_rate);
  cfg.noise_std = getOr(j, "noise_std", cfg.noise_std);
  if (j.contains("events")) {
    if (!j.at("events").is_array()) throw ConfigError("'events' must be an array");
    for (const auto& e : j.at("events")) {
      if (!e.is_object()) throw ConfigError("events must be objects");
      allowKeys(e, "event", {"type", "frame", "duration", "margin"});
      SyntheticEventSpec ev;
      const auto type = getOr<std::string>(e, "type", "occlusion");
      if (type == "occlusion") {
        ev.kind = SequenceEvent::Kind::occlusion;
      } else if (type == "appearance_switch") {
        ev.kind = SequenceEvent::Kind::appearance_switch;
      } else {
        throw ConfigError("unknown synthetic event type '" + type + "'");
      }
      ev.frame = getOr(e, "frame", 0);
      ev.duration = getOr(e, "duration", 1);
      ev.margin = getOr(e, "margin", ev.margin);
      cfg.events.push_back(ev);
    }
  }
  validate(cfg);
  return cfg;
}

nlohmann::json toJson(const SyntheticConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["frames"] = cfg.frames;
  j["width"] = cfg.width;
  j["height"] = cfg.height;
  j["channels"] = cfg.channels;
  j["target"] = {cfg.target.x, cfg.target.y, cfg.target.w, cfg.target.h};
  auto traj = nlohmann::json::array();
  for (const auto& s : cfg.trajectory) {
    traj.push_back({{"start_frame", s.start_frame}, {"vx", s.vx}, {"vy", s.vy}});
  }
  j["trajectory"] = traj;
  j["background"] = textureToJson(cfg.background);
  j["target_texture"] = textureToJson(cfg.target_texture);
  j["occluder_texture"] = textureToJson(cfg.occluder_texture);
  j["drift_rate"] = cfg.drift_rate;
  j["noise_std"] = cfg.noise_std;
  auto events = nlohmann::json::array();
  for (const auto& e : cfg.events) {
    events.push_back({{"type", toString(e.kind)},
                      {"frame", e.frame},
                      {"duration", e.duration},
                      {"margin", e.margin}});
  }
  j["events"] = events;
  return j;
}

SyntheticConfig loadSyntheticConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic config " + path.string());
  try {
    return syntheticConfigFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<BoundingBox> syntheticTrajectory(const SyntheticConfig& cfg) {
  validate(cfg);
  std::vector<VelocitySegment> segs = cfg.trajectory;
  std::stable_sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) {
    return a.start_frame < b.start_frame;
  });
  std::vector<BoundingBox> gt;
  gt.reserve(static_cast<std::size_t>(cfg.frames));
  BoundingBox cur = cfg.target;
  const BoundingBox extent(0, 0, cfg.width, cfg.height);
  for (int t = 0; t < cfg.frames; ++t) {
    if (t > 0) {
      double vx = 0, vy = 0;
      for (const auto& s : segs) {
        if (s.start_frame <= t) {
          vx = s.vx;
          vy = s.vy;
        }
      }
      cur = cur.translated(vx, vy);
    }
    if (intersectionArea(cur, extent) <= 0) {
      throw ConfigError("synthetic trajectory leaves the frame at frame " + std::to_string(t));
    }
    gt.push_back(cur);
  }
  return gt;
}

Sequence generateSynthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  Sequence seq;
  seq.name = cfg.name;
  seq.ground_truth = syntheticTrajectory(cfg);
  const int W = cfg.width, H = cfg.height, C = cfg.channels;

  // Occluders cover the target's path over their whole active window.
  struct Occluder {
    int begin, end;
    BoundingBox region;
    LatticeTexture texture;
  };
  std::vector<Occluder> occluders;
  std::vector<int> switchFrames;
  for (std::size_t e = 0; e < cfg.events.size(); ++e) {
    const auto& ev = cfg.events[e];
    SequenceEvent rec;
    rec.kind = ev.kind;
    rec.frame = ev.frame;
    rec.duration = ev.kind == SequenceEvent::Kind::occlusion ? ev.duration : 1;
    if (ev.kind == SequenceEvent::Kind::occlusion) {
      const int end = std::min(cfg.frames, ev.frame + ev.duration);
      double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
      for (int t = ev.frame; t < end; ++t) {
        const auto& b = seq.ground_truth[static_cast<std::size_t>(t)];
        x0 = std::min(x0, b.x);
        y0 = std::min(y0, b.y);
        x1 = std::max(x1, b.right());
        y1 = std::max(y1, b.bottom());
      }
      rec.region = BoundingBox(x0 - ev.margin, y0 - ev.margin, x1 - x0 + 2 * ev.margin,
                               y1 - y0 + 2 * ev.margin);
      occluders.push_back(Occluder{ev.frame, end, rec.region,
                                   LatticeTexture(rec.region.w, rec.region.h,
                                                  cfg.occluder_texture.cell,
                                                  deriveSeed(seed, {kOccluderStream, e}))});
    } else {
      rec.region = seq.ground_truth[static_cast<std::size_t>(ev.frame)];
      switchFrames.push_back(ev.frame);
    }
    seq.events.push_back(rec);
  }

  const LatticeTexture background(W, H, cfg.background.cell, deriveSeed(seed, {kBackgroundStream}));
  Eigen::MatrixXd bg(H, W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      bg(r, c) = cfg.background.mean + cfg.background.contrast * background.sample(c + 0.5, r + 0.5);
    }
  }

  std::map<long, LatticeTexture> targetTextures;
  auto targetTexture = [&](long k) -> const LatticeTexture& {
    auto it = targetTextures.find(k);
    if (it == targetTextures.end()) {
      it = targetTextures
               .emplace(k, LatticeTexture(cfg.target.w, cfg.target.h, cfg.target_texture.cell,
                                          deriveSeed(seed, {kTargetStream,
                                                            static_cast<std::uint64_t>(k)})))
               .first;
    }
    return it->second;
  };

  seq.frames.reserve(static_cast<std::size_t>(cfg.frames));
  seq.visibility.reserve(static_cast<std::size_t>(cfg.frames));
  for (int t = 0; t < cfg.frames; ++t) {
    const BoundingBox& gt = seq.ground_truth[static_cast<std::size_t>(t)];
    const auto switches = std::count_if(switchFrames.begin(), switchFrames.end(),
                                        [t](int f) { return f <= t; });
    const double phase = cfg.drift_rate * t + static_cast<double>(switches);
    const long k = static_cast<long>(std::floor(phase));
    const double blend = phase - static_cast<double>(k);
    const LatticeTexture& texA = targetTexture(k);
    const LatticeTexture& texB = targetTexture(k + 1);

    std::vector<const Occluder*> active;
    double covered = 0;
    for (const auto& o : occluders) {
      if (t >= o.begin && t < o.end) {
        active.push_back(&o);
        covered = std::max(covered, intersectionArea(gt, o.region));
      }
    }
    seq.visibility.push_back(std::clamp(1.0 - covered / gt.area(), 0.0, 1.0));

    Rng noiseRng(deriveSeed(seed, {kNoiseStream, static_cast<std::uint64_t>(t)}));
    std::normal_distribution<double> noise(0.0, cfg.noise_std > 0 ? cfg.noise_std : 1.0);

    std::vector<Plane8> planes(static_cast<std::size_t>(C), Plane8(H, W));
    for (int r = 0; r < H; ++r) {
      const double py = r + 0.5;
      for (int c = 0; c < W; ++c) {
        const double px = c + 0.5;
        double base = bg(r, c);
        bool onTarget = false;
        if (px >= gt.x && px < gt.right() && py >= gt.y && py < gt.bottom()) {
          const double u = px - gt.x, v = py - gt.y;
          const double s = (1 - blend) * texA.sample(u, v) + blend * texB.sample(u, v);
          base = cfg.target_texture.mean + cfg.target_texture.contrast * s;
          onTarget = true;
        }
        bool occluded = false;
        for (const Occluder* o : active) {
          const auto& reg = o->region;
          if (px >= reg.x && px < reg.right() && py >= reg.y && py < reg.bottom()) {
            base = cfg.occluder_texture.mean +
                   cfg.occluder_texture.contrast * o->texture.sample(px - reg.x, py - reg.y);
            occluded = true;
          }
        }
        for (int ch = 0; ch < C; ++ch) {
          double v = base + ((onTarget && !occluded) ? channelTint(ch, C) : 0.0);
          if (cfg.noise_std > 0) v += noise(noiseRng);
          planes[static_cast<std::size_t>(ch)](r, c) =
              static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
      }
    }
    seq.frames.emplace_back(t, std::move(planes));
  }
  return seq;
}

}  // namespace adatrack
