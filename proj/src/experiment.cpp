#include "adatrack/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "adatrack/csv.hpp"
#include "adatrack/random.hpp"

namespace adatrack {

namespace {

using nlohmann::json;

void allowKeys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

/// Thresholds accept numbers, "inf" or null (meaning +inf).
double readThreshold(const json& v, const std::string& where) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
  if (v.is_number()) return v.get<double>();
  throw ConfigError(where + ": expected a number, \"inf\" or null");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SequenceSource sequenceFromJson(const json& j, const std::filesystem::path& base, std::size_t index) {
  const std::string where = "sequences[" + std::to_string(index) + "]";
  allowKeys(j, where, {"name", "synthetic", "frames", "groundtruth", "seed"});
  SequenceSource s;
  read(j, "name", s.name, where);
  if (j.contains("synthetic")) {
    const json& syn = j.at("synthetic");
    if (syn.is_string()) {
      s.synthetic = loadSyntheticConfig(resolve(base, syn.get<std::string>()));
    } else {
      s.synthetic = syntheticConfigFromJson(syn);
    }
    if (s.name.empty()) s.name = s.synthetic->name;
  } else if (j.contains("frames") && j.contains("groundtruth")) {
    s.frames_dir = resolve(base, j.at("frames").get<std::string>());
    s.groundtruth_file = resolve(base, j.at("groundtruth").get<std::string>());
    if (s.name.empty()) s.name = s.frames_dir.parent_path().filename().string();
  } else {
    throw ConfigError(where + " needs 'synthetic' or both 'frames' and 'groundtruth'");
  }
  if (j.contains("seed")) {
    std::uint64_t seed = 0;
    read(j, "seed", seed, where);
    s.seed = seed;
  }
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (sequences.empty()) throw ConfigError("experiment lists no sequences");
  if (policies.empty()) throw ConfigError("experiment lists no policies");
  try {
    for (const auto& p : policies) p.validate();
    tracker.validate();
    detector.noise.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (detector.mode == DetectorMode::external && detector.command.empty()) {
    throw ConfigError("external detector mode needs detector.command");
  }
  for (const auto& [lo, hi] : sweep.betas) {
    CusumParams c = tracker.cusum;
    c.beta_low = lo;
    c.beta_high = hi;
    try {
      c.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("sweep.betas: ") + e.what());
    }
  }
  for (int n : sweep.periods) {
    if (n < 1) throw ConfigError("sweep.periods must be >= 1");
  }
}

ExperimentConfig experimentConfigFromJson(const json& j, const std::filesystem::path& base_dir) {
  allowKeys(j, "experiment",
            {"seed", "sequences", "policy", "policies", "detector", "tracker", "cusum", "association",
             "kalman", "init", "sweep"});
  ExperimentConfig cfg;
  read(j, "seed", cfg.seed, "experiment");

  if (!j.contains("sequences") || !j.at("sequences").is_array()) {
    throw ConfigError("experiment.sequences must be an array");
  }
  for (std::size_t i = 0; i < j.at("sequences").size(); ++i) {
    cfg.sequences.push_back(sequenceFromJson(j.at("sequences")[i], base_dir, i));
  }

  std::vector<std::string> policyNames;
  if (j.contains("policy")) policyNames.push_back(j.at("policy").get<std::string>());
  if (j.contains("policies")) read(j, "policies", policyNames, "experiment");
  if (!policyNames.empty()) {
    cfg.policies.clear();
    for (const auto& p : policyNames) cfg.policies.push_back(UpdatePolicy::parse(p));
  }

  if (j.contains("detector")) {
    const json& d = j.at("detector");
    allowKeys(d, "detector",
              {"mode", "target_iou_mean", "target_iou_std", "miss_rate", "false_positive_rate",
               "min_visibility", "command"});
    if (d.contains("mode")) cfg.detector.mode = parseDetectorMode(d.at("mode").get<std::string>());
    auto& n = cfg.detector.noise;
    read(d, "target_iou_mean", n.target_iou_mean, "detector");
    read(d, "target_iou_std", n.target_iou_std, "detector");
    read(d, "miss_rate", n.miss_rate, "detector");
    read(d, "false_positive_rate", n.false_positive_rate, "detector");
    read(d, "min_visibility", n.min_visibility, "detector");
    read(d, "command", cfg.detector.command, "detector");
  }
  for (auto& p : cfg.policies) p.detector_mode = cfg.detector.mode;

  TrackerConfig& t = cfg.tracker;
  if (j.contains("tracker")) {
    const json& tj = j.at("tracker");
    allowKeys(tj, "tracker",
              {"template_size", "search_size", "context_margin", "embedder", "stride", "bias",
               "window_weight", "normalize", "memory_budget", "quality_weighted_memory",
               "redetect_interval"});
    read(tj, "template_size", t.crop.template_size, "tracker");
    t.crop.search_size = 2 * t.crop.template_size;
    read(tj, "search_size", t.crop.search_size, "tracker");
    read(tj, "context_margin", t.crop.context_margin, "tracker");
    read(tj, "embedder", t.embedder, "tracker");
    read(tj, "stride", t.stride, "tracker");
    read(tj, "bias", t.correlation.bias, "tracker");
    read(tj, "window_weight", t.correlation.window_weight, "tracker");
    read(tj, "normalize", t.correlation.normalize, "tracker");
    read(tj, "memory_budget", t.memory_budget, "tracker");
    read(tj, "quality_weighted_memory", t.quality_weighted_memory, "tracker");
    read(tj, "redetect_interval", t.redetect_interval, "tracker");
  }
  if (t.embedder != "handcrafted" && t.embedder != "identity") {
    throw ConfigError("tracker.embedder must be handcrafted or identity");
  }
  if (j.contains("cusum")) {
    const json& c = j.at("cusum");
    allowKeys(c, "cusum", {"nu", "beta_low", "beta_high", "alpha"});
    read(c, "nu", t.cusum.nu, "cusum");
    read(c, "alpha", t.cusum.alpha, "cusum");
    if (c.contains("beta_low")) t.cusum.beta_low = readThreshold(c.at("beta_low"), "cusum.beta_low");
    if (c.contains("beta_high")) t.cusum.beta_high = readThreshold(c.at("beta_high"), "cusum.beta_high");
  }
  if (j.contains("association")) {
    const json& a = j.at("association");
    allowKeys(a, "association", {"min_iou", "greedy"});
    read(a, "min_iou", t.association.min_iou, "association");
    read(a, "greedy", t.association.greedy, "association");
  }
  if (j.contains("kalman")) {
    const json& k = j.at("kalman");
    allowKeys(k, "kalman",
              {"measurement_noise_position", "measurement_noise_shape", "initial_variance",
               "initial_velocity_variance", "process_noise_position", "process_noise_velocity",
               "process_noise_area_velocity"});
    auto& kc = t.kalman;
    read(k, "measurement_noise_position", kc.measurement_noise_position, "kalman");
    read(k, "measurement_noise_shape", kc.measurement_noise_shape, "kalman");
    read(k, "initial_variance", kc.initial_variance, "kalman");
    read(k, "initial_velocity_variance", kc.initial_velocity_variance, "kalman");
    read(k, "process_noise_position", kc.process_noise_position, "kalman");
    read(k, "process_noise_velocity", kc.process_noise_velocity, "kalman");
    read(k, "process_noise_area_velocity", kc.process_noise_area_velocity, "kalman");
  }
  if (j.contains("init")) {
    const std::string init = j.at("init").get<std::string>();
    if (init == "detector") {
      cfg.run.init_from_detector = true;
    } else if (init != "ground_truth") {
      throw ConfigError("init must be ground_truth or detector");
    }
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    allowKeys(s, "sweep", {"betas", "periods"});
    if (s.contains("betas")) {
      for (const auto& pair : s.at("betas")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw ConfigError("sweep.betas entries must be [beta_low, beta_high]");
        }
        cfg.sweep.betas.emplace_back(readThreshold(pair[0], "sweep.betas"),
                                     readThreshold(pair[1], "sweep.betas"));
      }
    }
    read(s, "periods", cfg.sweep.periods, "sweep");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig loadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experimentConfigFromJson(j, path.parent_path());
}

Sequence loadSequence(const SequenceSource& source, std::uint64_t seed) {
  Sequence seq = source.synthetic
                     ? generateSynthetic(*source.synthetic, source.seed.value_or(seed))
                     : loadOtbSequence(source.frames_dir, source.groundtruth_file);
  if (!source.name.empty()) seq.name = source.name;
  return seq;
}

std::uint64_t detectorSeed(std::uint64_t experiment_seed, std::size_t sequence_index) {
  return deriveSeed(experiment_seed, {0x646574ULL, sequence_index});
}

TrackRecord runExperiment(const ExperimentConfig& cfg, const Sequence& seq,
                          std::size_t sequence_index, const UpdatePolicy& policy) {
  DetectorNoiseConfig noise = cfg.detector.noise;
  noise.seed = detectorSeed(cfg.seed, sequence_index);
  const bool needsDetector =
      policy.adaptive || policy.period > 0 || cfg.run.init_from_detector;
  std::unique_ptr<DetectorSource> detector;
  if (needsDetector) detector = makeDetectorSource(cfg.detector.mode, seq, noise, cfg.detector.command);
  const Tracker tracker(cfg.tracker);
  return runSequence(seq, policy, tracker, detector.get(), cfg.run);
}

namespace {

/// Runs task(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename Task>
void parallelFor(std::size_t n, int jobs, Task task) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failureMutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failureMutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Sequence> loadAll(const ExperimentConfig& cfg, int jobs) {
  std::vector<Sequence> seqs(cfg.sequences.size());
  parallelFor(seqs.size(), jobs, [&](std::size_t i) { seqs[i] = loadSequence(cfg.sequences[i], cfg.seed); });
  return seqs;
}

TableRow rowFor(const TrackRecord& r) {
  TableRow row;
  row.sequence = r.sequence;
  row.policy = r.policy;
  row.frames = static_cast<int>(r.frames.size());
  row.average_overlap = r.average_overlap;
  row.success_rate = r.success_rate;
  row.detector_calls = r.stats.detector_calls;
  row.gradual_adaptations = r.stats.gradual_adaptations;
  row.abrupt_resets = r.stats.abrupt_resets;
  return row;
}

}  // namespace

ExperimentReport runTable(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  const std::vector<Sequence> seqs = loadAll(cfg, jobs);
  const std::size_t np = cfg.policies.size();
  ExperimentReport report;
  report.records.resize(seqs.size() * np);
  parallelFor(report.records.size(), jobs, [&](std::size_t k) {
    const std::size_t s = k / np;
    report.records[k] = runExperiment(cfg, seqs[s], s, cfg.policies[k % np]);
  });
  for (const auto& r : report.records) report.rows.push_back(rowFor(r));

  const double n = static_cast<double>(seqs.size());
  for (std::size_t p = 0; p < np; ++p) {
    TableRow avg;
    avg.sequence = "Average";
    avg.policy = cfg.policies[p].label();
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const TableRow& row = report.rows[s * np + p];
      avg.frames += row.frames;
      avg.average_overlap += row.average_overlap;
      avg.success_rate += row.success_rate;
      avg.detector_calls += row.detector_calls;
      avg.gradual_adaptations += row.gradual_adaptations;
      avg.abrupt_resets += row.abrupt_resets;
    }
    avg.average_overlap /= n;
    avg.success_rate /= n;
    avg.detector_calls /= n;
    avg.gradual_adaptations /= n;
    avg.abrupt_resets /= n;
    report.averages.push_back(avg);
  }
  return report;
}

void writeTableCsv(const ExperimentReport& report, std::ostream& out) {
  writeCsvRow(out, {"sequence", "policy", "frames", "average_overlap", "success_rate",
                    "detector_calls", "gradual_adaptations", "abrupt_resets"});
  auto emit = [&](const TableRow& r) {
    writeCsvRow(out, {r.sequence, r.policy, std::to_string(r.frames), formatNumber(r.average_overlap),
                      formatNumber(r.success_rate), formatNumber(r.detector_calls),
                      formatNumber(r.gradual_adaptations), formatNumber(r.abrupt_resets)});
  };
  for (const auto& r : report.rows) emit(r);
  for (const auto& r : report.averages) emit(r);
}

void writeTableText(const ExperimentReport& report, std::ostream& out) {
  std::size_t seqWidth = 8, polWidth = 6;
  for (const auto& r : report.rows) {
    seqWidth = std::max(seqWidth, r.sequence.size());
    polWidth = std::max(polWidth, r.policy.size());
  }
  const auto flags = out.flags();
  out << std::left << std::setw(static_cast<int>(seqWidth) + 2) << "Sequence"
      << std::setw(static_cast<int>(polWidth) + 2) << "Policy" << std::right << std::setw(10) << "AO(%)"
      << std::setw(12) << "Success(%)" << std::setw(10) << "Det.calls" << std::setw(10) << "Gradual"
      << '\n';
  auto emit = [&](const TableRow& r) {
    out << std::left << std::setw(static_cast<int>(seqWidth) + 2) << r.sequence
        << std::setw(static_cast<int>(polWidth) + 2) << r.policy << std::right << std::fixed
        << std::setprecision(2) << std::setw(10) << 100 * r.average_overlap << std::setw(12)
        << 100 * r.success_rate << std::setw(10) << std::setprecision(1) << r.detector_calls
        << std::setw(10) << r.gradual_adaptations << '\n';
  };
  for (const auto& r : report.rows) emit(r);
  for (const auto& r : report.averages) emit(r);
  out.flags(flags);
}

std::vector<SweepPoint> sweepUpdateRate(const ExperimentConfig& cfg,
                                        const std::vector<std::pair<double, double>>& betas,
                                        const std::vector<int>& periods, int jobs) {
  if (betas.empty() && periods.empty()) throw ConfigError("sweep needs betas or periods");
  cfg.validate();
  const std::vector<Sequence> seqs = loadAll(cfg, jobs);

  struct Job {
    SweepPoint point;
    ExperimentConfig cfg;
    UpdatePolicy policy;
  };
  std::vector<Job> grid;
  for (const auto& [lo, hi] : betas) {
    Job j{SweepPoint{"adaptive", lo, hi, 0, 0, 0}, cfg, UpdatePolicy::adaptiveOnly()};
    j.cfg.tracker.cusum.beta_low = lo;
    j.cfg.tracker.cusum.beta_high = hi;
    j.cfg.tracker.cusum.validate();
    grid.push_back(std::move(j));
  }
  for (int n : periods) {
    grid.push_back(Job{SweepPoint{"periodic", 0, 0, n, 1.0 / n, 0}, cfg, UpdatePolicy::periodic(n)});
  }
  for (auto& j : grid) j.policy.detector_mode = cfg.detector.mode;

  const std::size_t ns = seqs.size();
  std::vector<TrackRecord> records(grid.size() * ns);
  parallelFor(records.size(), jobs, [&](std::size_t k) {
    const Job& j = grid[k / ns];
    records[k] = runExperiment(j.cfg, seqs[k % ns], k % ns, j.policy);
  });

  std::vector<SweepPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepPoint p = grid[g].point;
    double rate = 0, overlap = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      const TrackRecord& r = records[g * ns + s];
      overlap += r.average_overlap;
      rate += static_cast<double>(r.stats.detector_calls) / static_cast<double>(r.frames.size());
    }
    p.average_overlap = overlap / static_cast<double>(ns);
    if (p.strategy == "adaptive") p.update_rate = rate / static_cast<double>(ns);
    out.push_back(p);
  }
  return out;
}

void writeSweepCsv(const std::vector<SweepPoint>& points, std::ostream& out) {
  writeCsvRow(out, {"strategy", "beta_low", "beta_high", "period", "update_rate", "average_overlap"});
  for (const auto& p : points) {
    const bool adaptive = p.strategy == "adaptive";
    writeCsvRow(out, {p.strategy, adaptive ? formatNumber(p.beta_low) : "",
                      adaptive ? formatNumber(p.beta_high) : "", adaptive ? "" : std::to_string(p.period),
                      formatNumber(p.update_rate), formatNumber(p.average_overlap)});
  }
}

void writeFrameTrace(const TrackRecord& record, std::ostream& out) {
  writeCsvRow(out, {"frame", "iou", "quality", "cusum_g", "alarm", "detector_called"});
  for (std::size_t t = 0; t < record.frames.size(); ++t) {
    const FrameResult& f = record.frames[t];
    writeCsvRow(out, {std::to_string(f.frame), formatNumber(record.iou.at(t)), formatNumber(f.quality),
                      formatNumber(f.cusum_g), toString(f.signal), f.detector_called ? "1" : "0"});
  }
}

}  // namespace adatrack
