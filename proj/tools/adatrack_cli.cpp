// Command-line harness: run tables, update-rate sweeps, synthetic sequence
// generation and per-frame traces.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "adatrack/experiment.hpp"

namespace fs = std::filesystem;
using namespace adatrack;

namespace {

constexpr int kOk = 0, kConfigError = 1, kDataError = 2, kRuntimeError = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string policy;
  std::string detector;
  int jobs = 1;
};

std::ofstream openOut(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

ExperimentConfig loadWithOverrides(const Options& o) {
  ExperimentConfig cfg = loadExperimentConfig(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    for (auto& s : cfg.sequences) s.seed.reset();
  }
  if (!o.detector.empty()) cfg.detector.mode = parseDetectorMode(o.detector);
  if (!o.policy.empty()) cfg.policies = {UpdatePolicy::parse(o.policy)};
  for (auto& p : cfg.policies) p.detector_mode = cfg.detector.mode;
  cfg.validate();
  return cfg;
}

std::string safeName(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

int runCommand(const Options& o) {
  const ExperimentConfig cfg = loadWithOverrides(o);
  const ExperimentReport report = runTable(cfg, o.jobs);
  auto csv = openOut(fs::path(o.out) / "table.csv");
  writeTableCsv(report, csv);
  auto txt = openOut(fs::path(o.out) / "table.txt");
  writeTableText(report, txt);
  writeTableText(report, std::cout);
  return kOk;
}

int sweepCommand(const Options& o) {
  const ExperimentConfig cfg = loadWithOverrides(o);
  const auto points = sweepUpdateRate(cfg, cfg.sweep.betas, cfg.sweep.periods, o.jobs);
  auto csv = openOut(fs::path(o.out) / "sweep.csv");
  writeSweepCsv(points, csv);
  writeSweepCsv(points, std::cout);
  return kOk;
}

int synthCommand(const Options& o) {
  const SyntheticConfig cfg = loadSyntheticConfig(o.config);
  const Sequence seq = generateSynthetic(cfg, o.seed.value_or(0));
  writeSequence(seq, o.out);
  std::cout << "wrote " << seq.size() << " frames to " << o.out << '\n';
  return kOk;
}

int traceCommand(const Options& o) {
  const ExperimentConfig cfg = loadWithOverrides(o);
  const ExperimentReport report = runTable(cfg, o.jobs);
  for (const auto& r : report.records) {
    const fs::path path = fs::path(o.out) / ("trace_" + safeName(r.sequence) + "_" + safeName(r.policy) + ".csv");
    auto f = openOut(path);
    writeFrameTrace(r, f);
    std::cout << path.string() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive detector-tracker interaction experiments"};
  app.require_subcommand(1);
  Options o;

  auto addCommon = [&](CLI::App* sub, bool experiment) {
    sub->add_option("--config", o.config, experiment ? "Experiment JSON" : "Synthetic sequence JSON")
        ->required();
    sub->add_option("--seed", o.seed, "Seed override");
    sub->add_option("--out", o.out, "Output directory");
    if (experiment) {
      sub->add_option("--policy", o.policy, "none | periodic:<N> | adaptive");
      sub->add_option("--detector", o.detector, "ideal | noisy | external | gt");
      sub->add_option("--jobs", o.jobs, "Parallel workers")->check(CLI::PositiveNumber);
    }
  };
  auto* run = app.add_subcommand("run", "Run every sequence under every policy and write table.csv");
  auto* sweep = app.add_subcommand("sweep", "Accuracy versus update rate; writes sweep.csv");
  auto* synth = app.add_subcommand("synth", "Render a synthetic sequence to a frame directory");
  auto* trace = app.add_subcommand("trace", "Write per-frame IOU/quality/CUSUM traces");
  addCommon(run, true);
  addCommon(sweep, true);
  addCommon(synth, false);
  addCommon(trace, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) return runCommand(o);
    if (*sweep) return sweepCommand(o);
    if (*synth) return synthCommand(o);
    if (*trace) return traceCommand(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
