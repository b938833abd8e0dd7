// Copyright 2026 The LatentDecode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "testing.hpp"

namespace fs = std::filesystem;
using latentdecode::testing::slurp;
using latentdecode::testing::spit;
using latentdecode::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + LD_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

const fs::path kSmoke = fs::path(LD_CONFIG_DIR) / "smoke.ini";

const std::string kMinimal = R"([oracle]
seed = 7
[synthetic]
seed = 1
n_train = 6
n_test = 3
n_voxels = 40
repetitions = 2
[inversion]
extract = false
[variants]
random_seed = 1
[roi]
enabled = true
)";

}  // namespace

TEST_CASE("smoke run is reproducible byte for byte") {
  TempDir tmp;
  const Run a = run_cli("synthetic --config '" + kSmoke.string() + "' --output '" + (tmp.path() / "a").string() +
                            "' --threads 1",
                        tmp.path());
  REQUIRE(a.code == 0);
  CHECK(a.err.empty());
  const Run b = run_cli("synthetic --config '" + kSmoke.string() + "' --output '" + (tmp.path() / "b").string() +
                            "' --threads 2",
                        tmp.path());
  REQUIRE(b.code == 0);

  const auto hash_of = [](const std::string& line) { return line.substr(line.rfind(' ') + 1); };
  CHECK(hash_of(a.out) == hash_of(b.out));
  const auto fa = files_under(tmp.path() / "a");
  REQUIRE(fa == files_under(tmp.path() / "b"));
  for (const auto& f : fa) CHECK_MESSAGE(slurp(tmp.path() / "a" / f) == slurp(tmp.path() / "b" / f), f.string());

  // One row per (variant, metric) after the header.
  const std::string metrics = slurp(tmp.path() / "a" / "metrics" / "metrics.csv");
  CHECK(metrics.rfind("variant,metric,value\n", 0) == 0);
  CHECK(count_lines(metrics) == 1 + 3 * 3);
  CHECK(fs::exists(tmp.path() / "a" / "manifest_synthetic.txt"));
  CHECK(fs::exists(tmp.path() / "a" / "roi" / "weight_map.csv"));
  CHECK_FALSE(fs::exists(tmp.path() / "a" / ".lock"));
}

TEST_CASE("steps rerun in place give identical manifests") {
  TempDir tmp;
  spit(tmp.path() / "run.ini", kMinimal);
  const std::string base = "--config '" + (tmp.path() / "run.ini").string() + "' --output '" +
                           (tmp.path() / "out").string() + "'";
  for (const char* step : {"fit", "decode", "evaluate", "roi"}) {
    const Run first = run_cli(std::string(step) + " " + base, tmp.path());
    REQUIRE_MESSAGE(first.code == 0, first.err);
    const std::string manifest = slurp(tmp.path() / "out" / (std::string("manifest_") + step + ".txt"));
    const Run second = run_cli(std::string(step) + " " + base, tmp.path());
    REQUIRE(second.code == 0);
    CHECK(first.out == second.out);
    CHECK(manifest == slurp(tmp.path() / "out" / (std::string("manifest_") + step + ".txt")));
  }
}

TEST_CASE("configuration errors exit 2 with one line") {
  TempDir tmp;
  spit(tmp.path() / "both.ini", kMinimal + "[data]\nx_train = x.ldm\n");
  const Run r = run_cli("synthetic --config '" + (tmp.path() / "both.ini").string() + "'", tmp.path());
  CHECK(r.code == 2);
  CHECK(count_lines(r.err) == 1);
  CHECK(r.err.rfind("error kind=config code=ConfigError message=\"", 0) == 0);
  CHECK(r.out.empty());

  const Run usage = run_cli("fit", tmp.path());
  CHECK(usage.code == 2);
  CHECK(count_lines(usage.err) == 1);

  const Run threads = run_cli("fit --config '" + (tmp.path() / "both.ini").string() + "' --threads 0", tmp.path());
  CHECK(threads.code == 2);
}

TEST_CASE("missing upstream artifacts exit 3") {
  TempDir tmp;
  std::string text = kMinimal;
  text.replace(text.find("extract = false"), 15, "extract = true\ncmaes_seed = 1");
  spit(tmp.path() / "run.ini", text);
  const Run r = run_cli("fit --config '" + (tmp.path() / "run.ini").string() + "' --output '" +
                            (tmp.path() / "out").string() + "'",
                        tmp.path());
  CHECK(r.code == 3);
  CHECK(r.err.rfind("error kind=data code=UpstreamMissing", 0) == 0);
  CHECK(count_lines(r.err) == 1);
  CHECK_FALSE(fs::exists(tmp.path() / "out" / "manifest_fit.txt"));
}

TEST_CASE("a held lock refuses a second run") {
  TempDir tmp;
  spit(tmp.path() / "run.ini", kMinimal);
  fs::create_directories(tmp.path() / "out");
  spit(tmp.path() / "out" / ".lock", "");
  const Run r = run_cli("fit --config '" + (tmp.path() / "run.ini").string() + "' --output '" +
                            (tmp.path() / "out").string() + "'",
                        tmp.path());
  CHECK(r.code == 2);
  CHECK(r.err.find("locked") != std::string::npos);
  CHECK(fs::exists(tmp.path() / "out" / ".lock"));
}
