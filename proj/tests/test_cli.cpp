#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

std::string g_work_dir;

const fs::path& work() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("qkdnn_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    g_work_dir = p.string();
    std::atexit([] { fs::remove_all(g_work_dir); });
    return p;
  }();
  return dir;
}

Run run(const std::string& args) {
  const fs::path capture = work() / "stdout.txt";
  const std::string cmd = std::string(QKDNN_BIN) + " " + args + " > " + capture.string() + " 2> " +
                          (work() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// a few solves at nc=3, shared by the later cases
const fs::path& small_dataset() {
  static const fs::path p = [] {
    const fs::path out = work() / "data.csv";
    const Run r = run("gen-data --xi-values 0.004 --L-values 10,20 --samplings 1 --instances 3 "
                      "--mu-first 0.45 --mu-last 0.6 --mu-step 0.05 --nc 3 --out " + out.string());
    REQUIRE(r.code == 0);
    return out;
  }();
  return p;
}

const fs::path& small_model() {
  static const fs::path p = [] {
    const fs::path out = work() / "model.bin";
    const Run r = run("train --quiet --epochs 3 --data " + small_dataset().string() + " --out " + out.string());
    REQUIRE(r.code == 0);
    return out;
  }();
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 64") {
  CHECK(run("").code == 64);
  CHECK(run("frobnicate").code == 64);
  CHECK(run("solve --L 10 --mu 0.4 --xi -1").code == 64);
  CHECK(run("solve --L 10 --mu 0.4 --probs 0.5,0.5,0.5,0.5").code == 64);
  CHECK(run("solve --config /nonexistent/file.cfg").code == 64);
  CHECK(run("gen-data --preset galactic --out x.csv").code == 64);
  CHECK(run("--help").code == 0);
}

TEST_CASE("solve prints a report") {
  const Run r = run("solve --L 10 --mu 0.4 --xi 0.004 --nc 3");
  CHECK(r.code == 0);
  CHECK(r.out.find("key_rate: 0.27") != std::string::npos);
  CHECK(r.out.find("status: converged") != std::string::npos);
  // an iteration cap that stops Frank-Wolfe early
  const Run capped = run("solve --L 10 --mu 0.4 --xi 0.004 --nc 3 --max-iter 1");
  CHECK(capped.code == 2);
  CHECK(capped.out.find("status: max_iterations") != std::string::npos);
}

TEST_CASE("config files") {
  const fs::path cfg = work() / "solve.cfg";
  write(cfg, "# protocol\nL = 10\nmu = 0.4\n\nxi = 0.004  # noise\nnc = 3\n");
  const Run a = run("solve --config " + cfg.string());
  const Run b = run("solve --L 10 --mu 0.4 --xi 0.004 --nc 3");
  CHECK(a.code == 0);
  auto rate = [](const std::string& s) { return s.substr(0, s.find('\n')); };
  CHECK(rate(a.out) == rate(b.out));
  // flags after --config win
  const Run c = run("solve --config " + cfg.string() + " --L 20");
  const Run d = run("solve --L 20 --mu 0.4 --xi 0.004 --nc 3");
  CHECK(rate(c.out) == rate(d.out));
  CHECK(rate(c.out) != rate(a.out));

  write(cfg, "L 10\n");
  CHECK(run("solve --config " + cfg.string()).code == 64);
}

TEST_CASE("gen-data, train, predict, eval, bench") {
  const std::string data = read(small_dataset());
  CHECK(std::count(data.begin(), data.end(), '\n') == 7);
  CHECK_FALSE(fs::exists(small_dataset().string() + ".tmp"));

  const fs::path model = small_model();
  CHECK(fs::file_size(model) > 92401 * 8);

  const Run p = run("predict --model " + model.string() + " --L 10 --mu 0.5 --xi 0.004");
  CHECK(p.code == 0);
  CHECK(std::stod(p.out) > 0.0);

  const Run batch = run("predict --model " + model.string() + " --features " + small_dataset().string());
  CHECK(batch.code == 0);
  CHECK(std::count(batch.out.begin(), batch.out.end(), '\n') == 7);

  const fs::path eval_dir = work() / "eval";
  const Run e = run("eval --model " + model.string() + " --data " + small_dataset().string() + " --out-dir " +
                    eval_dir.string());
  CHECK(e.code == 0);
  CHECK(e.out.find("secure_fraction: ") != std::string::npos);
  CHECK(fs::exists(eval_dir / "deviations.csv"));
  CHECK(fs::exists(eval_dir / "histogram.csv"));
  CHECK(fs::exists(eval_dir / "per_grid.csv"));

  const fs::path bench = work() / "bench.csv";
  const Run b = run("bench --model " + model.string() + " --points 0.004:10 --solver-runs 1 --out " + bench.string());
  CHECK(b.code == 0);
  const std::string report = read(bench);
  CHECK(report.rfind("xi,L,solver_seconds,surrogate_seconds,log10_ratio,status\n", 0) == 0);
  CHECK(report.find("converged") != std::string::npos);
}

TEST_CASE("failed commands leave existing outputs alone") {
  const fs::path out = work() / "keep.bin";
  write(out, "previous");
  CHECK(run("train --quiet --data /nonexistent.csv --out " + out.string()).code == 1);
  CHECK(read(out) == "previous");

  const fs::path broken = work() / "broken.csv";
  write(broken, "not,a,dataset\n");
  CHECK(run("train --quiet --data " + broken.string() + " --out " + out.string()).code == 1);
  CHECK(read(out) == "previous");

  const fs::path bad_model = work() / "bad_model.bin";
  write(bad_model, "qkdnn-mlp 1\ngarbage\n");
  CHECK(run("predict --model " + bad_model.string() + " --L 10 --mu 0.5 --xi 0.004").code == 1);
}
