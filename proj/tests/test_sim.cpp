#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "reel/dataset.hpp"
#include "reel/error.hpp"
#include "reel/heat.hpp"
#include "reel/sim.hpp"
#include "support.hpp"

using namespace reel;

namespace {

std::unique_ptr<Model> heat(const std::string& extra = "") {
  return make_model(Config::parse("model = heat\nnx = 16\nny = 16\ndt = 0.2\n" + extra));
}

void truncate_file(const std::string& path, std::uintmax_t size) {
  std::filesystem::resize_file(path, size);
}

}  // namespace

TEST_CASE("explicit Euler damps a Fourier mode by the stencil factor") {
  auto m = heat("laser_power = 0\n");
  const GridSpec& g = m->grid();
  ModelState s = m->initial_state(0);
  ScalarField T(g);
  const int kx = 2;
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) T(i, j) = std::sin(2 * std::numbers::pi * kx * double(i) / g.nx);
  s.at("T") = T;
  const std::size_t n = 10;
  Trajectory tr = rollout(*m, s, n);
  const double lam = (2 * std::cos(2 * std::numbers::pi * kx / g.nx) - 2) / (g.dx * g.dx);
  const double factor = 1.0 + g.dt * (0.5 / 2.0) * lam;
  const double expect = std::pow(factor, double(n));
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(tr.steps[n].at("T")[k] == doctest::Approx(expect * T[k]).scale(1.0));
}

TEST_CASE("steps beyond the stability budget are refused") {
  auto m = heat("dt = 5.0\n");
  try {
    simulate(*m, 1, 3);
    FAIL("expected StabilityError");
  } catch (const StabilityError& e) {
    CHECK(std::string(e.what()).find("heat") != std::string::npos);
  }
  auto s = make_model(Config::parse("model = sintering\nnx = 16\nny = 16\ndt = 50\n"));
  CHECK_THROWS_AS(simulate(*s, 1, 1), StabilityError);
}

TEST_CASE("simulation is deterministic and depends on the seed") {
  auto m = make_model(Config::parse("model = nanovoid\nnx = 16\nny = 16\n"));
  Trajectory a = simulate(*m, 3, 5), b = simulate(*m, 3, 5), c = simulate(*m, 4, 5);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.steps.size() == 6);
  CHECK(a.steps.back().step == 5);
}

TEST_CASE("monolithic and decomposed steps agree for heat") {
  auto m = heat();
  Trajectory a = simulate(*m, 2, 20, StepRule::Monolithic);
  Trajectory b = simulate(*m, 2, 20, StepRule::Decomposed);
  CHECK(testing::max_abs_diff(a.steps.back().at("T"), b.steps.back().at("T")) < 1e-12);
  CHECK(parse_step_rule("decomposed") == StepRule::Decomposed);
  CHECK_THROWS_AS(parse_step_rule("rk4"), UsageError);
}

TEST_CASE("changes telescope to the end-to-end difference") {
  auto m = heat();
  Trajectory tr = simulate(*m, 5, 8);
  auto ch = extract_changes(tr, *m);
  REQUIRE(ch.size() == 8);
  ScalarField total(m->grid());
  for (const auto& c : ch) total = total + c[0];
  CHECK(testing::max_abs_diff(total, tr.steps.back().at("T") - tr.steps.front().at("T")) < 1e-12);
}

TEST_CASE("trajectory files round trip bitwise") {
  auto dir = testing::scratch("sim_io");
  for (std::string name : {"heat", "sintering", "nanovoid"}) {
    auto m = make_model(Config::parse("model = " + name + "\nnx = 8\nny = 8\n"));
    Trajectory tr = simulate(*m, 9, 3);
    const std::string path = (dir / (name + ".reel")).string();
    save(tr, path);
    Trajectory back = load(path);
    CHECK(back == tr);
    DatasetHeader h = read_header(path);
    CHECK(h.n_states == 4);
    CHECK(h.model == name);
    CHECK(h.fields == m->state_fields());
    CHECK(std::filesystem::file_size(path) == expected_file_size(h));
    CHECK(expected_file_size(h) - h.payload_offset == 4 * h.fields.size() * 64 * 8);
    auto rebuilt = model_for(back);
    CHECK(rebuilt->true_params() == m->true_params());
  }
}

TEST_CASE("corrupt trajectory files raise format errors") {
  auto dir = testing::scratch("sim_bad");
  auto m = heat();
  Trajectory tr = simulate(*m, 1, 2);
  const std::string path = (dir / "t.reel").string();
  save(tr, path);
  const auto size = std::filesystem::file_size(path);

  const std::string cut = (dir / "cut.reel").string();
  std::filesystem::copy_file(path, cut);
  truncate_file(cut, size - 5);
  CHECK_THROWS_AS(load(cut), FormatError);
  CHECK_THROWS_AS(read_header(cut), FormatError);

  const std::string magic = (dir / "magic.reel").string();
  std::filesystem::copy_file(path, magic);
  {
    std::fstream f(magic, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load(magic), FormatError);

  const std::string ver = (dir / "ver.reel").string();
  std::filesystem::copy_file(path, ver);
  {
    std::fstream f(ver, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v[4] = {9, 0, 0, 0};
    f.write(v, 4);
  }
  CHECK_THROWS_AS(load(ver), FormatError);

  const std::string extra = (dir / "extra.reel").string();
  std::filesystem::copy_file(path, extra);
  {
    std::ofstream f(extra, std::ios::app | std::ios::binary);
    f.write("z", 1);
  }
  CHECK_THROWS_AS(load(extra), FormatError);
  CHECK_THROWS_AS(load((dir / "missing.reel").string()), FormatError);
}
