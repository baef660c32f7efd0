#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "reel/dataset.hpp"
#include "support.hpp"

namespace {

const std::filesystem::path kDir = testing::scratch("cli");

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(REEL_CLI) + " " + args + " 2>" + (kDir / "stderr.txt").string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string path(const std::string& name) { return (kDir / name).string(); }
std::string cfg(const std::string& name) { return std::string(REEL_CONFIGS) + "/" + name; }

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

const std::string kSmallHeat = "--config " + cfg("heat.cfg") + " --set nx=16 --set ny=16";

}  // namespace

TEST_CASE("simulate writes a file of the documented size") {
  Run r = run("simulate " + kSmallHeat + " --steps 10 --out " + path("a.reel"));
  REQUIRE(r.code == 0);
  const auto h = reel::read_header(path("a.reel"));
  CHECK(h.n_states == 11);
  CHECK(std::filesystem::file_size(path("a.reel")) == h.payload_offset + 11 * 1 * 256 * 8);
}

TEST_CASE("simulate is reproducible byte for byte") {
  REQUIRE(run("simulate " + kSmallHeat + " --steps 5 --seed 3 --out " + path("r1.reel")).code == 0);
  REQUIRE(run("simulate " + kSmallHeat + " --steps 5 --seed 3 --out " + path("r2.reel")).code == 0);
  REQUIRE(run("simulate " + kSmallHeat + " --steps 5 --seed 4 --out " + path("r3.reel")).code == 0);
  CHECK(slurp(path("r1.reel")) == slurp(path("r2.reel")));
  CHECK(slurp(path("r1.reel")) != slurp(path("r3.reel")));
}

TEST_CASE("simulate exit codes") {
  CHECK(run("simulate " + kSmallHeat + " --set dt=50 --steps 3 --out " + path("x.reel")).code == 1);
  CHECK(slurp(path("stderr.txt")).find("heat: dt <=") != std::string::npos);
  CHECK(run("simulate --config " + path("nope.cfg") + " --out " + path("x.reel")).code == 1);
  CHECK(run("simulate " + kSmallHeat + " --set model=ising --out " + path("x.reel")).code == 1);
  // a loosened guard lets an unstable step through until it overflows
  CHECK(run("simulate " + kSmallHeat + " --set c_stab=100 --set dt=3 --steps 600 --out " + path("x.reel")).code == 3);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("preprocess and train produce the fixed CSV layout") {
  REQUIRE(run("simulate " + kSmallHeat + " --steps 20 --out " + path("t.reel")).code == 0);
  REQUIRE(run("preprocess " + path("t.reel") + " -r 0.25 --out " + path("t.rlcd")).code == 0);
  Run r = run("train " + path("t.rlcd") + " --epochs 3 --lr 0.1 --theta-out " + path("t.theta"));
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) == "epoch,loss,wall_ms,k,rhoCp");
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
  CHECK(std::filesystem::exists(path("t.theta")));

  Run b = run("train " + path("t.reel") + " --baseline --epochs 2 --lr 0.1 --csv " + path("b.csv"));
  REQUIRE(b.code == 0);
  CHECK(first_line(slurp(path("b.csv"))) == "epoch,loss,wall_ms,k,rhoCp");

  CHECK(run("train " + path("t.rlcd") + " --epochs 0").code == 1);
  CHECK(run("train " + path("t.rlcd") + " --baseline --epochs 1").code == 2);
  CHECK(run("train " + path("missing.rlcd") + " --epochs 1").code == 2);
  CHECK(run("preprocess " + path("missing.reel") + " --out " + path("m.rlcd")).code == 2);
  CHECK(slurp(path("stderr.txt")).find(path("missing.reel")) != std::string::npos);
  CHECK(run("preprocess " + path("t.reel") + " -r 0.0001 --out " + path("z.rlcd")).code == 1);
}

TEST_CASE("training divergence exits with code 3") {
  REQUIRE(run("simulate --config " + cfg("sintering.cfg") +
              " --set nx=16 --set ny=16 --steps 10 --out " + path("s.reel")).code == 0);
  CHECK(run("train " + path("s.reel") + " --baseline --lr 100 --epochs 50").code == 3);
}

TEST_CASE("eval reports zero error at the true parameters") {
  Run r = run("eval --theta true " + kSmallHeat + " --rollout-steps 10 --n-ics 3");
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) == "field,mse,n_ok,n_failed");
  CHECK(r.out.find("T,0,3,0") != std::string::npos);

  std::ofstream(path("bad.theta")) << "k = 0.5\n";
  CHECK(run("eval --theta " + path("bad.theta") + " " + kSmallHeat + " --rollout-steps 2 --n-ics 1").code == 2);
  CHECK(run("eval --theta " + path("none.theta") + " " + kSmallHeat + " --rollout-steps 2 --n-ics 1").code == 2);
}

TEST_CASE("verify runs suites and rejects unknown names") {
  Run r = run("verify --suite taylor");
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(run("verify --suite nope").code == 1);
}

TEST_CASE("every verify suite passes on defaults") {
  Run r = run("verify --suite all");
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("verify seed moves the JL trials but not the verdict") {
  Run a = run("verify --suite jl --seed 1");
  Run b = run("verify --suite jl --seed 2");
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(a.out != b.out);
}
