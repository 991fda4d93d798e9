// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "adatrack/csv.hpp"
#include "adatrack/experiment.hpp"
#include "adatrack/kalman.hpp"
#include "support.hpp"

using namespace adatrack;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = ADATRACK_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// --- 1 -------------------------------------------------------------------

Outcome geometry() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pos(-20, 40), side(1, 30);
  std::vector<BoundingBox> gt, tr;
  for (int n = 0; n < 1000; ++n) {
    const BoundingBox a(pos(rng), pos(rng), side(rng), side(rng));
    const BoundingBox b(pos(rng), pos(rng), side(rng), side(rng));
    o.require(iou(a, b) == testsupport::rasterIou(a, b), "iou differs from raster count");
    gt.push_back(a);
    tr.push_back(b);
  }
  double sum = 0;
  int above = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double v = testsupport::rasterIou(gt[i], tr[i]);
    sum += v;
    above += v > 0.5;
  }
  o.require(std::abs(averageOverlap(gt, tr) - sum / 1000) <= 1e-12, "average overlap mismatch");
  o.require(std::abs(successRate(gt, tr) - above / 1000.0) <= 1e-12, "success rate mismatch");
  const double dt = seconds(t0);
  o.require(dt < 5, "runtime over 5 s");
  if (o.pass) o.detail = "1000 pairs exact";
  return o;
}

// --- 2 -------------------------------------------------------------------

Outcome correlation() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> ch(1, 3), dim(1, 8);
  std::uniform_real_distribution<double> bias(-2, 2);
  double worst = 0;
  for (int n = 0; n < 200; ++n) {
    const int c = ch(rng), sh = dim(rng), sw = dim(rng);
    const int th = std::uniform_int_distribution<int>(1, sh)(rng);
    const int tw = std::uniform_int_distribution<int>(1, sw)(rng);
    const FeatureMap t = testsupport::randomMap(rng, c, th, tw);
    const FeatureMap s = testsupport::randomMap(rng, c, sh, sw);
    const ScoreMap raw = crossCorrelate(t, s, CorrelationConfig{0.0, 0.0, false});
    worst = std::max(worst, (raw.values - testsupport::bruteCorrelate(t, s)).cwiseAbs().maxCoeff());
    const double b = bias(rng);
    const ScoreMap norm = crossCorrelate(t, s, CorrelationConfig{b, 0.0, true});
    o.require(norm.values.maxCoeff() <= b + 1 && norm.values.minCoeff() >= b - 1,
              "normalized score outside [b-1, b+1]");
  }
  o.require(worst <= 1e-9, "brute-force mismatch " + std::to_string(worst));
  int hits = 0;
  std::uniform_int_distribution<int> off(0, 4);
  for (int n = 0; n < 100; ++n) {
    const FeatureMap s = testsupport::randomMap(rng, 3, 8, 8);
    const int r = off(rng), c = off(rng);
    const Peak p = argmaxCell(crossCorrelate(s.window(r, c, 4, 4), s, CorrelationConfig{0, 0, true}));
    hits += p.row == r && p.col == c;
  }
  o.require(hits == 100, "planted template found " + std::to_string(hits) + "/100");
  o.require(seconds(t0) < 10, "runtime over 10 s");
  if (o.pass) o.detail = "max error " + formatNumber(worst) + ", planted 100/100";
  return o;
}

// --- 3 -------------------------------------------------------------------

Outcome changeDetection() {
  Outcome o;
  const auto t0 = Clock::now();
  CusumParams p;
  p.nu = 0.05;
  p.beta_high = 3.0;
  for (double level : {0.0, 0.25, 0.5, 0.8, 1.0}) {
    CusumState s = CusumState::reset(0);
    int alarms = 0;
    for (int i = 0; i < 10000; ++i) {
      const CusumStep st = cusumUpdate(s, p, level, i);
      alarms += st.signal != ChangeSignal::none;
      s = st.state;
    }
    o.require(alarms == 0, "alarm on a constant stream");
  }
  for (int changeAt : {10, 50, 200}) {
    std::vector<double> ys(static_cast<std::size_t>(changeAt), 0.9);
    ys.resize(static_cast<std::size_t>(changeAt) + 500, 0.2);
    // straight-line replay
    double g = 0, sum = 0;
    long n = 0;
    int expect = -1;
    for (std::size_t i = 0; i < ys.size() && expect < 0; ++i) {
      const double theta = n == 0 ? ys[i] : sum / static_cast<double>(n);
      g = std::max(g - (ys[i] - theta) - p.nu, 0.0);
      sum += ys[i];
      ++n;
      if (g > p.beta_high) expect = static_cast<int>(i);
    }
    CusumState s = CusumState::reset(0);
    int got = -1;
    for (std::size_t i = 0; i < ys.size() && got < 0; ++i) {
      const CusumStep st = cusumUpdate(s, p, ys[i], static_cast<int>(i));
      if (st.signal == ChangeSignal::abrupt) got = static_cast<int>(i);
      s = st.state;
    }
    o.require(expect > changeAt && got == expect,
              "abrupt at " + std::to_string(got) + ", simulated " + std::to_string(expect));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  CusumState s = CusumState::reset(0);
  for (int i = 0; i < 1000000; ++i) {
    const CusumStep st = cusumUpdate(s, p, u(rng), i);
    if (st.statistic < 0 || st.state.g < 0) {
      o.require(false, "negative statistic");
      break;
    }
    s = st.state;
  }
  o.require(seconds(t0) < 5, "runtime over 5 s");
  if (o.pass) o.detail = "no false alarms, alarm frames exact, 1e6 fuzzed samples";
  return o;
}

// --- 4 -------------------------------------------------------------------

Outcome memorySemantics() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  auto entry = [](int frame) {
    FeatureMap f;
    f.values = {Eigen::MatrixXd::Constant(2, 2, frame)};
    return TemplateEntry{f, frame, 1.0};
  };
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t budget = 1 + rng() % 7;
    TemplateMemory m(budget);
    m.resetTo(entry(0));
    std::vector<int> model{0};
    for (int t = 1; t < 100; ++t) {
      const double y = u(rng);
      m.admit(entry(t), y, 0.5);
      if (y > 0.5) model.push_back(t);
      m.enforceBudget();
      while (model.size() > budget) model.erase(model.begin() + 1);
      std::vector<int> got;
      for (const auto& e : m.entries()) got.push_back(e.frame_index);
      o.require(m.size() <= budget, "budget exceeded");
      o.require(got.front() == 0, "initial entry evicted");
      o.require(got == model, "eviction order differs from admission order");
    }
  }
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const FeatureMap search = testsupport::randomMap(rng, 3, 12, 12);
    TemplateMemory m(6);
    m.resetTo(TemplateEntry{testsupport::randomMap(rng, 3, 5, 5), 0, 1.0});
    const int extra = static_cast<int>(rng() % 5);
    for (int k = 0; k < extra; ++k) m.admit(TemplateEntry{testsupport::randomMap(rng, 3, 5, 5), k + 1, 0.9}, 0.9, 0.8);
    for (bool normalize : {false, true}) {
      const CorrelationConfig cfg{0.0, 0.2, normalize};
      Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(8, 8);
      for (const auto& e : m.entries()) expect += crossCorrelate(e.features, search, cfg).values;
      worst = std::max(worst, (integratedScore(m, search, cfg).values - expect).cwiseAbs().maxCoeff());
      if (!normalize) {
        Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(8, 8);
        for (const auto& e : m.entries()) brute += 0.8 * testsupport::bruteCorrelate(e.features, search) + 0.2 * hannWindow(8, 8);
        worst = std::max(worst, (integratedScore(m, search, cfg).values - brute).cwiseAbs().maxCoeff());
      }
    }
  }
  o.require(worst <= 1e-9, "integrated score mismatch " + formatNumber(worst));
  if (o.pass) o.detail = "500 random sequences, integrated score error " + formatNumber(worst);
  return o;
}

// --- 5 -------------------------------------------------------------------

bool bitwiseEqual(const TrackRecord& a, const TrackRecord& b) {
  if (a.frames.size() != b.frames.size()) return false;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    const auto& x = a.frames[t].box;
    const auto& y = b.frames[t].box;
    if (x.has_value() != y.has_value()) return false;
    if (x && std::memcmp(&*x, &*y, sizeof(BoundingBox)) != 0) return false;
  }
  return true;
}

Outcome policyReductions() {
  Outcome o;
  const ExperimentConfig cfg = loadExperimentConfig(kSource / "data/experiments/suite.json");
  o.require(cfg.sequences.size() == 3, "suite does not list 3 sequences");
  for (std::size_t i = 0; i < cfg.sequences.size(); ++i) {
    const Sequence seq = loadSequence(cfg.sequences[i], cfg.seed);
    const TrackRecord none = runSequence(seq, UpdatePolicy::none(), Tracker{cfg.tracker}, nullptr);

    TrackerConfig off = cfg.tracker;
    off.cusum.beta_low = off.cusum.beta_high = std::numeric_limits<double>::infinity();
    DetectorNoiseConfig noise = cfg.detector.noise;
    noise.seed = detectorSeed(cfg.seed, i);
    auto det = makeDetectorSource(DetectorMode::simulated, seq, noise);
    const TrackRecord ad = runSequence(seq, UpdatePolicy::adaptiveOnly(), Tracker{off}, det.get());
    o.require(bitwiseEqual(ad, none), seq.name + ": adaptive with infinite thresholds differs");

    noise.miss_rate = 1.0;
    auto blind = makeDetectorSource(DetectorMode::simulated, seq, noise);
    for (int period : {10, 30, 60}) {
      const TrackRecord per = runSequence(seq, UpdatePolicy::periodic(period), Tracker{cfg.tracker}, blind.get());
      o.require(bitwiseEqual(per, none), seq.name + ": periodic with a blind detector differs");
    }
  }
  if (o.pass) o.detail = "3 shipped sequences bitwise identical";
  return o;
}

// --- 6 -------------------------------------------------------------------

void enumerate(const std::vector<BoundingBox>& t, const std::vector<BoundingBox>& d, double gate,
               std::vector<int>& pick, std::vector<char>& used, std::size_t i, double& best) {
  if (i == t.size()) {
    double total = 0;  // summed in track order, as the solver reports it
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (pick[k] >= 0) total += iou(t[k], d[static_cast<std::size_t>(pick[k])]);
    }
    best = std::max(best, total);
    return;
  }
  pick[i] = -1;
  enumerate(t, d, gate, pick, used, i + 1, best);
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double v = iou(t[i], d[j]);
    if (used[j] || v <= 0 || v < gate) continue;
    used[j] = 1;
    pick[i] = static_cast<int>(j);
    enumerate(t, d, gate, pick, used, i + 1, best);
    used[j] = 0;
  }
  pick[i] = -1;
}

Outcome associationOptimality() {
  Outcome o;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(0, 40), side(6, 25);
  int mismatches = 0;
  for (int n = 0; n < 500; ++n) {
    std::vector<BoundingBox> t, d;
    const int nt = static_cast<int>(rng() % 6), nd = static_cast<int>(rng() % 6);
    for (int k = 0; k < nt; ++k) t.emplace_back(pos(rng), pos(rng), side(rng), side(rng));
    for (int k = 0; k < nd; ++k) d.emplace_back(pos(rng), pos(rng), side(rng), side(rng));
    const double gate = n % 2 ? 0.3 : 0.0;
    std::vector<int> pick(t.size(), -1);
    std::vector<char> used(d.size(), 0);
    double best = 0;
    enumerate(t, d, gate, pick, used, 0, best);
    mismatches += associateBoxes(t, d, gate).total_iou != best;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " of 500 instances not optimal");
  if (o.pass) o.detail = "500 instances exact";
  return o;
}

// --- 7 -------------------------------------------------------------------

Outcome kalmanSanity() {
  Outcome o;
  KalmanConfig still;
  still.process_noise_position = still.process_noise_velocity = still.process_noise_area_velocity = 0;
  KalmanTrack t = KalmanTrack::fromBox(BoundingBox(3.3, 4.4, 17, 29), still);
  const auto x0 = t.filter().state();
  for (int i = 0; i < 100; ++i) t.predict();
  o.require(t.filter().state() == x0, "zero-velocity prediction moved the state");

  using F1 = KalmanFilter<double, 1, 1>;
  const double q = 0.05, r = 0.8;
  F1 f(F1::StateCov::Constant(1), F1::Observation::Constant(1), F1::StateCov::Constant(q),
       F1::MeasCov::Constant(r), F1::State::Constant(1), F1::StateCov::Constant(2));
  double x = 1, p = 2, worst = 0;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0, 2);
  for (int i = 0; i < 1000; ++i) {
    f.predict();
    p += q;
    const double m = z(rng);
    f.update(F1::Measurement::Constant(m));
    const double k = p / (p + r);
    x += k * (m - x);
    p *= 1 - k;
    worst = std::max({worst, std::abs(f.state()(0) - x), std::abs(f.covariance()(0, 0) - p)});
  }
  o.require(worst <= 1e-12, "scalar recursion differs by " + formatNumber(worst));

  std::uniform_real_distribution<double> u(-40, 40), s(1, 60);
  KalmanTrack fz = KalmanTrack::fromBox(BoundingBox(100, 100, 20, 20));
  double minEig = 0;
  for (int i = 0; i < 10000; ++i) {
    fz.predict();
    if (rng() % 3) fz.update(BoundingBox(100 + u(rng), 100 + u(rng), s(rng), s(rng)));
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 7, 7>> es(fz.filter().covariance());
    minEig = std::min(minEig, es.eigenvalues().minCoeff());
  }
  o.require(minEig >= -1e-9, "negative covariance eigenvalue " + formatNumber(minEig));
  if (o.pass) o.detail = "identity exact, scalar error " + formatNumber(worst) + ", min eigenvalue " + formatNumber(minEig);
  return o;
}

// --- 8 -------------------------------------------------------------------

Outcome endToEnd() {
  Outcome o;
  const auto t0 = Clock::now();
  ExperimentConfig cfg = loadExperimentConfig(kSource / "data/experiments/drift_occlusion.json");
  o.require(cfg.sequences.size() == 1, "expected one sequence");
  o.require(cfg.detector.mode == DetectorMode::simulated && cfg.detector.noise.target_iou_mean == 0.7,
            "detector is not the noisy IOU 0.7 model");
  const Sequence seq = loadSequence(cfg.sequences[0], cfg.seed);
  o.require(seq.size() == 500, "sequence is not 500 frames");

  auto run = [&](const UpdatePolicy& p) { return runExperiment(cfg, seq, 0, p); };
  const TrackRecord ad = run(UpdatePolicy::adaptiveOnly());
  const TrackRecord p60 = run(UpdatePolicy::periodic(60));
  const TrackRecord p30 = run(UpdatePolicy::periodic(30));
  const TrackRecord again = run(UpdatePolicy::adaptiveOnly());

  const double gap = ad.average_overlap - p60.average_overlap;
  o.require(gap >= 0.05, "(a) adaptive leads periodic(60) by only " + formatNumber(gap * 100) + " pp");
  o.require(ad.stats.detector_calls <= p30.stats.detector_calls,
            "(b) adaptive made " + std::to_string(ad.stats.detector_calls) + " calls vs " +
                std::to_string(p30.stats.detector_calls));
  std::string recovery;
  int occlusions = 0;
  for (const auto& ev : seq.events) {
    if (ev.kind != SequenceEvent::Kind::occlusion) continue;
    ++occlusions;
    const int end = ev.frame + ev.duration;
    int hit = -1;
    for (int t = end; t <= end + 20 && t < static_cast<int>(seq.size()); ++t) {
      if (ad.iou[static_cast<std::size_t>(t)] > 0.5) {
        hit = t - end;
        break;
      }
    }
    o.require(hit >= 0, "(c) no recovery within 20 frames after the occlusion at " + std::to_string(ev.frame));
    recovery += (recovery.empty() ? "" : ",") + std::to_string(hit);
  }
  o.require(occlusions >= 1, "(c) sequence has no occlusion events");
  o.require(bitwiseEqual(ad, again) && ad.stats.detector_calls == again.stats.detector_calls,
            "rerun differs");
  const double dt = seconds(t0);
  o.require(dt < 60, "runtime over 60 s");
  std::ostringstream d;
  d.precision(4);
  d << "adaptive " << ad.average_overlap * 100 << "% (" << ad.stats.detector_calls
    << " calls), periodic(60) " << p60.average_overlap * 100 << "%, periodic(30) "
    << p30.stats.detector_calls << " calls, recovery offsets [" << recovery << "], " << dt << " s";
  if (o.pass) o.detail = d.str();
  else o.detail += "; " + d.str();
  return o;
}

// --- 9 -------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int runCli(const std::string& args) {
  const std::string cmd = std::string(ADATRACK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "adatrack_acceptance_repro";
  fs::remove_all(root);
  const std::string golden = (kSource / "data/experiments/golden.json").string();
  const std::string synth = (kSource / "data/synthetic/appearance_switch.json").string();
  const std::vector<std::string> commands{
      "run --config " + golden,
      "sweep --config " + golden + " --jobs 2",
      "trace --config " + golden,
      "synth --config " + synth + " --seed 5",
  };
  int files = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    const fs::path a = root / ("a" + std::to_string(c)), b = root / ("b" + std::to_string(c));
    o.require(runCli(commands[c] + " --out " + a.string()) == 0, "failed: " + commands[c]);
    o.require(runCli(commands[c] + " --out " + b.string()) == 0, "failed: " + commands[c]);
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      const fs::path other = b / fs::relative(e.path(), a);
      o.require(fs::exists(other) && slurp(e.path()) == slurp(other),
                "differs: " + fs::relative(e.path(), a).string());
      ++files;
    }
  }
  fs::remove_all(root);
  if (o.pass) o.detail = std::to_string(files) + " files byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"geometry oracle", geometry},
      {"correlation oracle", correlation},
      {"change detection", changeDetection},
      {"memory semantics", memorySemantics},
      {"policy reductions", policyReductions},
      {"association optimality", associationOptimality},
      {"kalman sanity", kalmanSanity},
      {"end-to-end seeded experiment", endToEnd},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %zu %-30s %s  %s\n", i + 1, criteria[i].first.c_str(),
                o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
