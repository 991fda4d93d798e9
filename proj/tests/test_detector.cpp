#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "adatrack/detector_sim.hpp"
#include "adatrack/tracker.hpp"

using namespace adatrack;

#ifndef FAKE_DETECTOR_PATH
#error "FAKE_DETECTOR_PATH must point at the helper executable"
#endif

namespace {

// Best summed IOU over every partial one-to-one assignment.
double exhaustiveBest(const std::vector<BoundingBox>& t, const std::vector<BoundingBox>& d,
                      double gate, std::size_t i, std::vector<char>& used) {
  if (i == t.size()) return 0.0;
  double best = exhaustiveBest(t, d, gate, i + 1, used);
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (used[j]) continue;
    const double v = iou(t[i], d[j]);
    if (v <= 0 || v < gate) continue;
    used[j] = 1;
    best = std::max(best, v + exhaustiveBest(t, d, gate, i + 1, used));
    used[j] = 0;
  }
  return best;
}

std::vector<BoundingBox> randomBoxes(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0, 30), side(5, 20);
  std::vector<BoundingBox> out;
  for (int i = 0; i < n; ++i) out.emplace_back(pos(rng), pos(rng), side(rng), side(rng));
  return out;
}

}  // namespace

TEST_CASE("perturbation hits the requested overlap") {
  const BoundingBox gt(50, 40, 30, 60);
  for (double target : {0.9, 0.7, 0.5, 0.3}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const PerturbResult r = perturbBoxToIou(gt, target, seed);
      REQUIRE(r.within_tolerance);
      REQUIRE(std::abs(iou(gt, r.box) - target) <= kPerturbTolerance);
      REQUIRE(r.achieved_iou == iou(gt, r.box));
    }
  }
  const PerturbResult a = perturbBoxToIou(gt, 0.5, 7), b = perturbBoxToIou(gt, 0.5, 7);
  const PerturbResult c = perturbBoxToIou(gt, 0.5, 8);
  CHECK(a.box == b.box);
  CHECK_FALSE(a.box == c.box);
  CHECK(perturbBoxToIou(gt, 1.0, 3).box == gt);
  CHECK_THROWS_AS(perturbBoxToIou(gt, 0.0, 3), InvalidInput);
  CHECK_THROWS_AS(perturbBoxToIou(gt, 1.2, 3), InvalidInput);
}

TEST_CASE("simulated detections") {
  const BoundingBox gt(100, 80, 40, 40);
  DetectorNoiseConfig cfg;
  cfg.target_iou_mean = 0.7;
  cfg.seed = 42;

  const auto d = simulateDetections(5, gt, cfg, 320, 240);
  REQUIRE(d.size() == 1);
  CHECK(std::abs(iou(gt, d[0].box) - 0.7) <= 0.02);
  CHECK(d[0].confidence == iou(gt, d[0].box));
  CHECK(simulateDetections(5, gt, cfg, 320, 240)[0].box == d[0].box);
  CHECK_FALSE(simulateDetections(6, gt, cfg, 320, 240)[0].box == d[0].box);

  SUBCASE("misses") {
    cfg.miss_rate = 1.0;
    for (int t = 0; t < 50; ++t) CHECK(simulateDetections(t, gt, cfg, 320, 240).empty());
  }
  SUBCASE("occluded targets are not detected") {
    CHECK(simulateDetections(1, gt, cfg, 320, 240, 0.3).empty());
    CHECK(simulateDetections(1, gt, cfg, 320, 240, 0.6).size() == 1);
  }
  SUBCASE("false positives stay inside the frame") {
    cfg.false_positive_rate = 3.0;
    int spurious = 0;
    for (int t = 0; t < 100; ++t) {
      const auto ds = simulateDetections(t, gt, cfg, 320, 240);
      for (std::size_t k = 1; k < ds.size(); ++k) {
        ++spurious;
        CHECK(ds[k].box.x >= 0);
        CHECK(ds[k].box.y >= 0);
        CHECK(ds[k].box.right() <= 320 + 1e-9);
      }
    }
    CHECK(spurious > 200);
    CHECK(spurious < 400);
  }
  SUBCASE("ideal detector") {
    DetectorNoiseConfig ideal;
    CHECK(simulateDetections(3, gt, ideal, 320, 240)[0].box == gt);
  }
  SUBCASE("invalid noise") {
    cfg.miss_rate = 1.5;
    CHECK_THROWS_AS(simulateDetections(0, gt, cfg, 320, 240), InvalidInput);
  }
}

TEST_CASE("assignment solver") {
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto a = solveMinCostAssignment(c);
  double cost = 0;
  for (int i = 0; i < 3; ++i) cost += c(i, a[static_cast<std::size_t>(i)]);
  // all six permutations
  std::vector<int> perm{0, 1, 2};
  double best = 1e9;
  do {
    best = std::min(best, c(0, perm[0]) + c(1, perm[1]) + c(2, perm[2]));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(cost == best);

  Eigen::MatrixXd tall(3, 2);
  tall << 1, 9, 9, 1, 0, 0;
  const auto t = solveMinCostAssignment(tall);
  CHECK(std::count(t.begin(), t.end(), -1) == 1);
}

TEST_CASE("association against exhaustive search") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 300; ++n) {
    const auto tracks = randomBoxes(rng, static_cast<int>(rng() % 6));
    const auto dets = randomBoxes(rng, static_cast<int>(rng() % 6));
    for (double gate : {0.0, 0.3}) {
      std::vector<char> used(dets.size(), 0);
      const double best = exhaustiveBest(tracks, dets, gate, 0, used);
      const Assignment a = associateBoxes(tracks, dets, gate);
      REQUIRE(a.total_iou == doctest::Approx(best).epsilon(1e-12));
      REQUIRE(a.matches.size() + a.unmatched_tracks.size() == tracks.size());
      REQUIRE(a.matches.size() + a.unmatched_detections.size() == dets.size());
      for (const auto& [ti, di] : a.matches) REQUIRE(iou(tracks[ti], dets[di]) >= gate);
    }
  }
}

TEST_CASE("association gate and greedy mode") {
  const std::vector<BoundingBox> tracks{{0, 0, 10, 10}};
  const std::vector<BoundingBox> dets{{8, 8, 10, 10}, {1, 0, 10, 10}};
  const Assignment a = associateBoxes(tracks, dets, 0.3);
  REQUIRE(a.matches.size() == 1);
  CHECK(a.matches[0].second == 1);
  CHECK(a.unmatched_detections == std::vector<int>{0});

  const Assignment none = associateBoxes(tracks, {{8, 8, 10, 10}}, 0.3);
  CHECK(none.matches.empty());
  CHECK(none.unmatched_tracks == std::vector<int>{0});

  // Greedy takes the single best pair first; the optimum splits differently.
  const std::vector<BoundingBox> t2{{0, 0, 10, 10}, {4, 0, 10, 10}};
  const std::vector<BoundingBox> d2{{2, 0, 10, 10}, {-3, 0, 10, 10}};
  const Assignment opt = associateBoxes(t2, d2, 0.0);
  const Assignment greedy = associateBoxes(t2, d2, 0.0, true);
  CHECK(opt.total_iou >= greedy.total_iou);
  CHECK_THROWS_AS(associateBoxes(t2, d2, 1.5), InvalidInput);
  CHECK(associateBoxes({}, d2, 0.3).unmatched_detections.size() == 2);
}

TEST_CASE("detection lines") {
  const Detection d = parseDetectionLine("3 0.75 10 20 30 40");
  CHECK(d.class_id == 3);
  CHECK(d.confidence == 0.75);
  CHECK(d.box == BoundingBox(10, 20, 30, 40));
  CHECK(parseDetectionLine(formatDetectionLine(d)).box == d.box);
  CHECK_THROWS_AS(parseDetectionLine("3 0.75 10 20 30"), InvalidInput);
  CHECK_THROWS_AS(parseDetectionLine("3 0.75 10 20 30 40 50"), InvalidInput);
  CHECK_THROWS_AS(parseDetectionLine("3 0.75 10 20 0 40"), InvalidInput);
}

TEST_CASE("external detector process") {
  const auto dir = std::filesystem::temp_directory_path() / "adatrack_test_external";
  std::filesystem::create_directories(dir);
  const auto gt = dir / "gt.txt";
  std::ofstream(gt) << "10,20,30,40\n11,21,30,40\n";
  const std::string helper = FAKE_DETECTOR_PATH;

  ExternalDetector det(helper + " " + gt.string() + " 2");
  const auto d1 = det.request(1);
  REQUIRE(d1.size() == 2);
  CHECK(d1[0].box == BoundingBox(13, 21, 30, 40));
  CHECK(d1[1].class_id == 1);
  CHECK(det.request(0)[0].box == BoundingBox(12, 20, 30, 40));
  CHECK(det.request(7).empty());

  ExternalDetector dying(helper + " --die");
  CHECK_THROWS(dying.request(0));
  ExternalDetector garbage(helper + " --garbage");
  CHECK_THROWS_AS(garbage.request(0), DataError);
  CHECK_THROWS_AS(ExternalDetector(""), ConfigError);
}
