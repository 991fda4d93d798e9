#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kSource = ADATRACK_SOURCE_DIR;

int runCli(const std::string& args) {
  const std::string cmd = std::string(ADATRACK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adatrack_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void writeText(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_CASE("golden outputs") {
  const fs::path cfg = kSource / "data/experiments/golden.json";
  const fs::path golden = kSource / "data/golden";
  const fs::path out = scratch("golden");
  REQUIRE(runCli("run --config " + cfg.string() + " --out " + out.string()) == 0);
  REQUIRE(runCli("sweep --config " + cfg.string() + " --out " + out.string() + " --jobs 2") == 0);
  REQUIRE(runCli("trace --config " + cfg.string() + " --policy adaptive --out " + out.string()) == 0);
  CHECK(slurp(out / "table.csv") == slurp(golden / "table.csv"));
  CHECK(slurp(out / "sweep.csv") == slurp(golden / "sweep.csv"));
  for (const char* t : {"trace_appearance_switch_adaptive.csv", "trace_color_crossing_adaptive.csv"}) {
    CHECK(slurp(out / t) == slurp(golden / t));
  }
  CHECK(fs::exists(out / "table.txt"));
}

TEST_CASE("seed and detector overrides") {
  const fs::path cfg = kSource / "data/experiments/golden.json";
  const fs::path a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("det");
  REQUIRE(runCli("run --config " + cfg.string() + " --policy periodic:30 --seed 1 --out " + a.string()) == 0);
  REQUIRE(runCli("run --config " + cfg.string() + " --policy periodic:30 --seed 2 --out " + b.string()) == 0);
  CHECK(slurp(a / "table.csv") != slurp(b / "table.csv"));
  REQUIRE(runCli("run --config " + cfg.string() + " --policy periodic:30 --detector gt --out " + c.string()) == 0);
  CHECK(slurp(c / "table.csv").find("periodic:30") != std::string::npos);
}

TEST_CASE("synthetic rendering") {
  const fs::path out = scratch("synth");
  REQUIRE(runCli("synth --config " + (kSource / "data/synthetic/color_crossing.json").string() +
                 " --seed 4 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "img" / "0001.ppm"));
  CHECK(fs::exists(out / "img" / "0160.ppm"));
  CHECK(fs::exists(out / "groundtruth_rect.txt"));

  // The rendered directory is a valid OTB-style input.
  const fs::path cfg = out / "otb.json";
  writeText(cfg, R"({"sequences": [{"name": "rendered", "frames": "img", "groundtruth": "groundtruth_rect.txt"}],
                     "policies": ["none"]})");
  const fs::path res = scratch("otb_run");
  CHECK(runCli("run --config " + cfg.string() + " --out " + res.string()) == 0);
  CHECK(slurp(res / "table.csv").find("rendered,none,160,") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(runCli("run --config " + (dir / "missing.json").string()) == 1);
  writeText(dir / "broken.json", "{ not json");
  CHECK(runCli("run --config " + (dir / "broken.json").string()) == 1);
  writeText(dir / "badkey.json", R"({"sequences": [], "unknown": 1})");
  CHECK(runCli("run --config " + (dir / "badkey.json").string()) == 1);
  CHECK(runCli("run --config " + (kSource / "data/experiments/golden.json").string() +
               " --policy hourly") == 1);
  CHECK(runCli("run") == 1);
  CHECK(runCli("") == 1);
  CHECK(runCli("frobnicate --config x") == 1);

  writeText(dir / "nodata.json",
            R"({"sequences": [{"frames": "nowhere", "groundtruth": "nothing.txt"}], "policies": ["none"]})");
  CHECK(runCli("run --config " + (dir / "nodata.json").string() + " --out " + dir.string()) == 2);

  fs::create_directories(dir / "frames");
  writeText(dir / "frames" / "0001.pgm", "P5\n4 4\n255\n");  // truncated pixel data
  writeText(dir / "gt.txt", "0,0,2,2\n");
  writeText(dir / "truncated.json",
            R"({"sequences": [{"frames": "frames", "groundtruth": "gt.txt"}], "policies": ["none"]})");
  CHECK(runCli("run --config " + (dir / "truncated.json").string() + " --out " + dir.string()) == 2);
}
