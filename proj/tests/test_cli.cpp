// End-to-end checks of the command-line binary. The test runner exports
// DUALTREE_CLI with the binary path; without it these cases are skipped.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

const char* cli_path() { return std::getenv("DUALTREE_CLI"); }

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "dualtree_cli_tests";
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("cli round trip with oracle verification") {
  if (!cli_path()) return;
  const fs::path dir = scratch_dir();
  const std::string pts = (dir / "pts.csv").string();
  REQUIRE(run_cli("generate --n 120 --d 3 --seed 9 --output " + pts) == 0);

  CHECK(run_cli("run --task knn --k 4 --reference " + pts +
                " --exclude-self --verify --output /dev/null") == 0);
  CHECK(run_cli("run --task kfn --k 2 --reference " + pts +
                " --tree cover --verify --output /dev/null") == 0);
  CHECK(run_cli("run --task range --range-min 0.1 --range-max 0.5 --reference " + pts +
                " --traversal dual-bfs --verify --output /dev/null") == 0);
  CHECK(run_cli("run --task emst --reference " + pts + " --verify --output /dev/null") ==
        0);
  CHECK(run_cli("run --task kde --epsilon 0.01 --bandwidth 0.2 --reference " + pts +
                " --verify --output /dev/null") == 0);
  CHECK(run_cli("validate-tree --reference " + pts + " --tree cover") == 0);
}

TEST_CASE("cli exit codes") {
  if (!cli_path()) return;
  const fs::path dir = scratch_dir();
  const std::string pts = (dir / "pts2.csv").string();
  REQUIRE(run_cli("generate --n 50 --d 2 --seed 3 --output " + pts) == 0);

  CHECK(run_cli("run --task knn --reference " + pts) == 2);  // missing --k
  CHECK(run_cli("run --task knn --k 2 --no-such-flag --reference " + pts) == 2);
  CHECK(run_cli("run --task emst --traversal single --reference " + pts) == 2);
  CHECK(run_cli("run --task knn --k 60 --reference " + pts) == 2);  // k out of range

  const std::string ragged = (dir / "ragged.csv").string();
  std::ofstream(ragged) << "1,2\n3\n";
  CHECK(run_cli("run --task emst --reference " + ragged) == 1);

  // The min-only range prune drops matches on a self join, so verification
  // fails with the dedicated exit code.
  CHECK(run_cli("run --task range --range-min 0.2 --range-max 0.5 --reference " + pts +
                " --unsafe-range-prune --verify --output /dev/null") == 3);
}

TEST_CASE("cli determinism and traversal independence") {
  if (!cli_path()) return;
  const fs::path dir = scratch_dir();
  const std::string pts = (dir / "pts3.csv").string();
  REQUIRE(run_cli("generate --n 150 --d 2 --seed 11 --output " + pts) == 0);

  const std::string base = "run --task knn --k 3 --reference " + pts + " --output ";
  const fs::path a = dir / "a.csv", b = dir / "b.csv", c = dir / "c.csv",
                 d = dir / "d.csv";
  REQUIRE(run_cli(base + a.string()) == 0);
  REQUIRE(run_cli(base + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));  // identical config: byte-identical output

  REQUIRE(run_cli(base + c.string() + " --traversal dual-bfs") == 0);
  CHECK(slurp(a) == slurp(c));  // traversal-independent results

  REQUIRE(run_cli(base + d.string() + " --traversal dual-dfs-parallel --workers 1") == 0);
  CHECK(slurp(a) == slurp(d));  // one worker degenerates to the serial run
}

TEST_CASE("cli bench reports at least as many would-be prunes for combined") {
  if (!cli_path()) return;
  const fs::path dir = scratch_dir();
  const fs::path table = dir / "bench.csv";
  const std::string cmd = std::string(cli_path()) +
                          " bench --task knn --k 1 --generate-n 400 --seed 5"
                          " --repetitions 1 > " +
                          table.string() + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  std::ifstream in(table);
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, long> prunes;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string label, bases, scores, pruned;
    std::getline(row, label, ',');
    std::getline(row, bases, ',');
    std::getline(row, scores, ',');
    std::getline(row, pruned, ',');
    prunes[label] = std::stol(pruned);
  }
  REQUIRE(prunes.count("knn-combined"));
  REQUIRE(prunes.count("knn-b1"));
  CHECK(prunes["knn-combined"] >= prunes["knn-b1"]);
}

TEST_CASE("cli emst on a tiny line") {
  if (!cli_path()) return;
  const fs::path dir = scratch_dir();
  const std::string line = (dir / "line.csv").string();
  std::ofstream(line) << "0\n1\n3\n";
  const fs::path out = dir / "line_mst.csv";
  REQUIRE(run_cli("run --task emst --reference " + line + " --output " + out.string()) ==
          0);
  const std::string text = slurp(out);
  CHECK(text.find("# total_weight=3") != std::string::npos);
}
