#include "adatrack/tracker.hpp"

#include <algorithm>
#include <cmath>

namespace adatrack {

namespace {

/// `size_from` moved to the centre of `centre_from`.
BoundingBox recentred(const BoundingBox& size_from, const BoundingBox& centre_from) {
  return BoundingBox::fromCenter(centre_from.cx(), centre_from.cy(), size_from.w, size_from.h);
}

}  // namespace

const char* toString(DetectorMode m) {
  switch (m) {
    case DetectorMode::ideal:
      return "ideal";
    case DetectorMode::simulated:
      return "noisy";
    case DetectorMode::external:
      return "external";
    case DetectorMode::ground_truth:
      return "gt";
  }
  return "noisy";
}

DetectorMode parseDetectorMode(const std::string& s) {
  if (s == "ideal") return DetectorMode::ideal;
  if (s == "noisy" || s == "simulated") return DetectorMode::simulated;
  if (s == "external") return DetectorMode::external;
  if (s == "gt" || s == "ground_truth") return DetectorMode::ground_truth;
  throw ConfigError("unknown detector mode '" + s + "' (expected ideal|noisy|external|gt)");
}

UpdatePolicy UpdatePolicy::parse(const std::string& s) {
  UpdatePolicy p;
  std::string rest = s;
  auto takePeriodic = [&](const std::string& part) {
    const std::string prefix = "periodic:";
    if (part.rfind(prefix, 0) != 0) return false;
    const std::string n = part.substr(prefix.size());
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(n, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != n.size() || n.empty() || v < 1) {
      throw ConfigError("periodic policy needs a positive frame count: '" + part + "'");
    }
    p.period = v;
    return true;
  };
  if (rest == "none") return p;
  if (rest == "adaptive") {
    p.adaptive = true;
    return p;
  }
  const std::string combo = "adaptive+";
  if (rest.rfind(combo, 0) == 0) {
    p.adaptive = true;
    rest = rest.substr(combo.size());
  }
  if (!takePeriodic(rest)) {
    throw ConfigError("unknown policy '" + s + "' (expected none|periodic:<N>|adaptive)");
  }
  return p;
}

std::string UpdatePolicy::label() const {
  std::string out;
  if (adaptive) out = "adaptive";
  if (period > 0) out += (out.empty() ? "" : "+") + std::string("periodic:") + std::to_string(period);
  return out.empty() ? "none" : out;
}

void UpdatePolicy::validate() const {
  if (period < 0) throw InvalidInput("policy period must be >= 1 when set");
}

SimulatedDetectorSource::SimulatedDetectorSource(const Sequence& seq, DetectorNoiseConfig cfg)
    : seq_(seq), cfg_(cfg) {
  cfg_.validate();
}

std::vector<Detection> SimulatedDetectorSource::detect(int frame_index) {
  const auto t = static_cast<std::size_t>(frame_index);
  const double vis = t < seq_.visibility.size() ? seq_.visibility[t] : 1.0;
  const Frame& f = seq_.frames.at(t);
  return simulateDetections(frame_index, seq_.ground_truth.at(t), cfg_, f.width(), f.height(), vis);
}

std::vector<Detection> GroundTruthDetectorSource::detect(int frame_index) {
  return {Detection{seq_.ground_truth.at(static_cast<std::size_t>(frame_index)), 1.0, 0}};
}

std::unique_ptr<DetectorSource> makeDetectorSource(DetectorMode mode, const Sequence& seq,
                                                   const DetectorNoiseConfig& noise,
                                                   const std::string& external_command) {
  switch (mode) {
    case DetectorMode::ideal: {
      DetectorNoiseConfig ideal;
      ideal.seed = noise.seed;
      ideal.min_visibility = noise.min_visibility;
      return std::make_unique<SimulatedDetectorSource>(seq, ideal);
    }
    case DetectorMode::simulated:
      return std::make_unique<SimulatedDetectorSource>(seq, noise);
    case DetectorMode::external:
      return std::make_unique<ExternalDetectorSource>(external_command);
    case DetectorMode::ground_truth:
      return std::make_unique<GroundTruthDetectorSource>(seq);
  }
  throw ConfigError("unknown detector mode");
}

void TrackerConfig::validate() const {
  if (crop.template_size < 1 || crop.search_size != 2 * crop.template_size) {
    throw InvalidInput("search resolution must be exactly twice the template resolution");
  }
  if (crop.context_margin < 0) throw InvalidInput("context margin must be >= 0");
  if (stride < 1 || crop.template_size % stride != 0) {
    throw InvalidInput("stride must divide the template resolution");
  }
  if (!(correlation.window_weight >= 0 && correlation.window_weight <= 1)) {
    throw InvalidInput("window weight must lie in [0,1]");
  }
  cusum.validate();
  if (memory_budget < 1) throw InvalidInput("memory budget must be >= 1");
  if (redetect_interval < 1) throw InvalidInput("redetect interval must be >= 1");
  if (!(association.min_iou >= 0 && association.min_iou <= 1)) {
    throw InvalidInput("association gate must lie in [0,1]");
  }
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  embedder_ = makeEmbedder(cfg_.embedder, cfg_.stride);
  scorer_ = std::make_shared<NccQualityScorer>(embedder_);
}

Tracker::Tracker(TrackerConfig cfg, std::shared_ptr<const Embedder> embedder,
                 std::shared_ptr<const QualityScorer> scorer)
    : cfg_(std::move(cfg)), embedder_(std::move(embedder)), scorer_(std::move(scorer)) {
  cfg_.validate();
  if (!embedder_ || !scorer_) throw InvalidInput("tracker needs an embedder and a quality scorer");
}

Tracker::SearchView Tracker::search(const Frame& frame, const BoundingBox& centre) const {
  SearchView v;
  v.patch = cropSearch(frame, centre, cfg_.crop);
  v.features = embedder_->embed(v.patch);
  v.centre_box = centre;
  return v;
}

double Tracker::quality(const TrackState& state, const Frame& frame, const BoundingBox& box) const {
  try {
    return scorer_->score(state.quality_ref, cropTemplate(frame, box, 0.0, cfg_.crop.template_size));
  } catch (const LostTarget&) {
    return 0.0;
  }
}

TrackState Tracker::init(const Frame& frame, const BoundingBox& box) const {
  requireValid(box, "initial box");
  TrackState s;
  s.memory = TemplateMemory(cfg_.memory_budget);
  s.kalman = KalmanTrack::fromBox(box, cfg_.kalman);
  s.cusum = CusumState::reset(frame.index());
  reinitialize(s, frame, box);
  return s;
}

void Tracker::reinitialize(TrackState& state, const Frame& frame, const BoundingBox& box) const {
  const Patch tmpl = cropTemplate(frame, box, cfg_.crop.context_margin, cfg_.crop.template_size);
  state.phi_best = embedder_->embed(tmpl);
  state.memory.resetTo(TemplateEntry{state.phi_best, frame.index(), 1.0});
  state.quality_ref =
      scorer_->makeReference(cropTemplate(frame, box, 0.0, cfg_.crop.template_size));
  state.current_box = box;
}

std::optional<Detection> Tracker::chooseDetection(const std::vector<Detection>& dets,
                                                  const BoundingBox& predicted,
                                                  const BoundingBox& last) const {
  if (dets.empty()) return std::nullopt;
  const Assignment a = associate({predicted}, dets, cfg_.association);
  if (!a.matches.empty()) return dets[static_cast<std::size_t>(a.matches.front().second)];
  // No gated match: most confident, then nearest to the last box.
  const Detection* best = &dets.front();
  auto dist2 = [&](const BoundingBox& b) {
    const double dx = b.cx() - last.cx(), dy = b.cy() - last.cy();
    return dx * dx + dy * dy;
  };
  for (const auto& d : dets) {
    if (d.confidence > best->confidence ||
        (d.confidence == best->confidence && dist2(d.box) < dist2(best->box))) {
      best = &d;
    }
  }
  return *best;
}

std::optional<Tracker::SearchView> Tracker::resetFromDetector(TrackState& state, const Frame& frame,
                                                              const BoundingBox& predicted,
                                                              const BoundingBox& last,
                                                              DetectorSource* detector,
                                                              FrameResult& res) const {
  if (!detector) throw std::runtime_error("policy requires a detector but none was supplied");
  ++state.stats.detector_calls;
  res.detector_called = true;
  const auto chosen = chooseDetection(detector->detect(frame.index()), predicted, last);
  try {
    if (chosen) {
      // No scale estimation: the detector supplies the centre, the track keeps its size.
      BoundingBox box = recentred(state.current_box, chosen->box);
      {
        // Refine the detector's centre with the memory held before the reset.
        const SearchView d = search(frame, box);
        box = adaptFromMemory(state.memory, d.features, d.patch.source_box, d.centre_box,
                              cfg_.correlation, frame.index())
                  .refined_box;
      }
      reinitialize(state, frame, box);
      state.cusum = CusumState::reset(frame.index());
      state.redetect_at.reset();
      ++state.stats.reinitializations;
      res.reinitialized = true;
      // Algorithm 1 on the single-entry memory, searched at the new box.
      SearchView v = search(frame, box);
      const Adaptation a = adaptFromMemory(state.memory, v.features, v.patch.source_box,
                                           v.centre_box, cfg_.correlation, frame.index());
      state.phi_best = a.updated_template.features;
      return v;
    }
  } catch (const LostTarget&) {
  }
  state.redetect_at = frame.index() + cfg_.redetect_interval;
  return std::nullopt;
}

FrameResult Tracker::step(TrackState& state, const Frame& frame, const UpdatePolicy& policy,
                          DetectorSource* detector) const {
  FrameResult res;
  res.frame = frame.index();
  ++state.stats.frames;
  state.kalman.predict();
  const BoundingBox predicted = state.kalman.box();
  const BoundingBox prev = state.current_box;

  std::optional<SearchView> view;
  try {
    view = search(frame, prev);
  } catch (const LostTarget&) {
    res.lost = true;
  }

  if (!view) {
    // Search region left the image: only a detector call can recover.
    ++state.stats.lost_frames;
    res.quality = 0.0;
    res.cusum_g = state.cusum.g;
    const bool abruptEnabled = policy.adaptive && std::isfinite(cfg_.cusum.beta_high);
    if (!abruptEnabled && policy.period == 0) return res;
    ++state.stats.abrupt_resets;
    view = resetFromDetector(state, frame, predicted, prev, detector, res);
    if (!view) return res;
    res.lost = false;
    const ScoreMap score = crossCorrelate(state.phi_best, view->features, cfg_.correlation);
    const BoundingBox box = scoreToBox(score, view->centre_box, view->patch.scale());
    state.current_box = box;
    state.kalman.update(box);
    res.box = box;
    return res;
  }

  const ScoreMap first = crossCorrelate(state.phi_best, view->features, cfg_.correlation);
  BoundingBox box = scoreToBox(first, prev, view->patch.scale());

  const double y = quality(state, frame, box);
  res.quality = y;

  bool updated = false;
  if (policy.adaptive && y > cfg_.cusum.alpha) {
    try {
      const auto& t0 = state.memory.entries().front().features;
      TemplateEntry entry = cropTemplateFromSearch(view->features, view->patch.source_box, box,
                                                   t0.rows(), t0.cols(), frame.index(), y);
      if (state.memory.admit(std::move(entry), y, cfg_.cusum.alpha)) ++state.stats.memory_admissions;
    } catch (const LostTarget&) {
    }
  }

  const bool belowLow = state.cusum.g <= cfg_.cusum.beta_low;
  const CusumStep cs = cusumUpdate(state.cusum, cfg_.cusum, y, frame.index());
  state.cusum = cs.state;
  res.cusum_g = cs.statistic;
  res.signal = cs.signal;

  // Algorithm 1 runs once per excursion above beta_low; g keeps running
  // towards beta_high meanwhile.
  const bool adapt = cs.signal == ChangeSignal::abrupt || (cs.signal == ChangeSignal::gradual && belowLow);
  if (policy.adaptive && adapt) {
    const Adaptation a = adaptFromMemory(state.memory, view->features, view->patch.source_box, prev,
                                         cfg_.correlation, frame.index(),
                                         cfg_.quality_weighted_memory);
    state.phi_best = a.updated_template.features;
    ++state.stats.gradual_adaptations;
    updated = true;
  }

  if (policy.adaptive && y > cfg_.cusum.alpha) state.redetect_at.reset();
  if (policy.adaptive && cs.signal == ChangeSignal::abrupt) {
    ++state.stats.abrupt_resets;
    if (auto v = resetFromDetector(state, frame, predicted, prev, detector, res)) {
      view = std::move(v);
      updated = true;
    }
  } else if (policy.adaptive && state.redetect_at && frame.index() >= *state.redetect_at) {
    ++state.stats.redetect_attempts;
    if (auto v = resetFromDetector(state, frame, predicted, prev, detector, res)) {
      view = std::move(v);
      updated = true;
    }
  }

  const bool periodicDue = policy.period > 0 && (frame.index() + 1) % policy.period == 0;
  if (periodicDue && !res.detector_called) {
    if (!detector) throw std::runtime_error("policy requires a detector but none was supplied");
    ++state.stats.detector_calls;
    res.detector_called = true;
    const auto dets = detector->detect(frame.index());
    const Assignment a = associate({predicted}, dets, cfg_.association);
    if (!a.matches.empty()) {
      const BoundingBox det =
          recentred(prev, dets[static_cast<std::size_t>(a.matches.front().second)].box);
      const Patch tmpl = cropTemplate(frame, det, cfg_.crop.context_margin, cfg_.crop.template_size);
      state.phi_best = embedder_->embed(tmpl);
      ++state.stats.periodic_refreshes;
      res.reinitialized = true;
      updated = true;
    }
  }

  if (policy.adaptive) state.memory.enforceBudget();

  if (updated) {
    const ScoreMap final = crossCorrelate(state.phi_best, view->features, cfg_.correlation);
    box = scoreToBox(final, view->centre_box, view->patch.scale());
  }

  state.current_box = box;
  state.kalman.update(box);
  res.box = box;
  return res;
}

std::vector<TrackedBox> TrackRecord::boxes() const {
  std::vector<TrackedBox> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.box);
  return out;
}

TrackRecord runSequence(const Sequence& seq, const UpdatePolicy& policy, const Tracker& tracker,
                        DetectorSource* detector, const RunOptions& options) {
  if (seq.frames.empty()) throw InvalidInput("cannot track an empty sequence");
  if (seq.frames.size() != seq.ground_truth.size()) {
    throw InvalidInput("sequence frames and ground truth differ in length");
  }
  policy.validate();
  TrackRecord rec;
  rec.sequence = seq.name;
  rec.policy = policy.label();
  rec.events = seq.events;
  rec.frames.reserve(seq.size());

  if (options.inject_ground_truth) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      FrameResult r;
      r.frame = static_cast<int>(t);
      r.box = seq.ground_truth[t];
      rec.frames.push_back(r);
    }
    rec.stats.frames = static_cast<int>(seq.size());
  } else {
    BoundingBox initBox = seq.ground_truth.front();
    if (options.init_from_detector) {
      if (!detector) throw std::runtime_error("detector initialization requested without a detector");
      const auto dets = detector->detect(0);
      if (dets.empty()) throw std::runtime_error("detector found no target on the first frame");
      initBox = std::max_element(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
                  return a.confidence < b.confidence;
                })->box;
    }
    TrackState state = tracker.init(seq.frames.front(), initBox);
    FrameResult first;
    first.frame = 0;
    first.box = initBox;
    rec.frames.push_back(first);
    for (std::size_t t = 1; t < seq.size(); ++t) {
      rec.frames.push_back(tracker.step(state, seq.frames[t], policy, detector));
    }
    rec.stats = state.stats;
  }

  const std::vector<TrackedBox> boxes = rec.boxes();
  rec.iou = overlapSeries<TrackedBox>(seq.ground_truth, boxes).per_frame;
  rec.average_overlap = averageOverlap(seq.ground_truth, boxes);
  rec.success_rate = successRate(seq.ground_truth, boxes, 0.5);
  return rec;
}

}  // namespace adatrack
