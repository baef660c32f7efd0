// Parallel kernels against the serial reference versions. Prints CSV:
// kernel,size,parallel_ms,serial_ms,speedup,threads

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reel/field.hpp"
#include "reel/reference.hpp"
#include "reel/rng.hpp"
#include "reel/sketch.hpp"
#include "reel/spectral.hpp"

using namespace reel;

namespace {

// median wall time in ms
double time_ms(int reps, const std::function<void()>& fn) {
  std::vector<double> t;
  fn();  // warm-up
  for (int r = 0; r < reps; ++r) {
    const auto a = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - a).count());
  }
  std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
  return t[t.size() / 2];
}

ScalarField random_field(const GridSpec& g, std::uint64_t seed, double lo, double hi) {
  Xoshiro256 rng(seed);
  ScalarField f(g);
  for (double& v : f.values()) v = lo + (hi - lo) * rng.uniform();
  return f;
}

template <class T>
void keep(const T& v) {
  asm volatile("" : : "g"(&v) : "memory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel vs serial kernel timings"};
  int reps = 5;
  std::string csv;
  std::vector<std::size_t> sizes = {64, 128};
  app.add_option("--reps", reps, "Timed repetitions per kernel (median reported)")->check(CLI::PositiveNumber);
  app.add_option("--sizes", sizes, "Grid edge lengths");
  app.add_option("--csv", csv, "Write CSV here instead of stdout");
  CLI11_PARSE(app, argc, argv);

  std::ofstream file;
  if (!csv.empty()) file.open(csv);
  std::ostream& out = csv.empty() ? std::cout : file;
  const int threads = omp_get_max_threads();
  out << "kernel,size,parallel_ms,serial_ms,speedup,threads\n";
  auto row = [&](const std::string& kernel, const std::string& size, double par, double ser) {
    out << kernel << ',' << size << ',' << par << ',' << ser << ',' << ser / par << ',' << threads << '\n';
    out.flush();
  };

  for (std::size_t n : sizes) {
    const GridSpec g(n, n, 1.0, 1.0);
    const ScalarField f = random_field(g, 1, -1.0, 1.0);
    const ScalarField m = random_field(g, 2, 0.5, 1.5);
    const std::string sz = std::to_string(n) + "x" + std::to_string(n);
    row("laplacian", sz, time_ms(reps, [&] { keep(laplacian(f)); }),
        time_ms(reps, [&] { keep(serial::laplacian(f)); }));
    row("grad_sq", sz, time_ms(reps, [&] { keep(grad_sq(f)); }),
        time_ms(reps, [&] { keep(serial::grad_sq(f)); }));
    row("div_flux", sz, time_ms(reps, [&] { keep(div_flux(m, f)); }),
        time_ms(reps, [&] { keep(serial::div_flux(m, f)); }));
    // the direct transform is O(N^2) in cells; skip it past 64x64
    if (n <= 64) {
      row("dft2", sz, time_ms(reps, [&] { keep(dft2(f)); }),
          time_ms(1, [&] { keep(serial::dft2(f)); }));
    }
  }

  for (std::size_t n : sizes) {
    const std::size_t d = n * n;
    for (double r : {0.01, 0.1}) {
      const ProjectionSpec spec = make_projection(projected_dim(r, d), d, 7);
      const Projector proj(spec);
      const ScalarField x = random_field(GridSpec(n, n, 1.0, 1.0), 3, -1.0, 1.0);
      const std::string sz = "d=" + std::to_string(d) + " n=" + std::to_string(spec.n());
      row("project", sz, time_ms(reps, [&] { keep(proj.project(x.values())); }),
          time_ms(1, [&] { keep(serial::project(spec, x.values())); }));
      // many columns at once, as preprocessing does for one timestep
      const std::size_t cols = 61;
      std::vector<double> X(d * cols), Y(spec.n() * cols);
      Xoshiro256 rng(4);
      for (double& v : X) v = rng.uniform() - 0.5;
      std::vector<double> col(d);
      // serial time is measured on 4 columns and scaled to 61
      const std::size_t sample = 4;
      const double ser = time_ms(1, [&] {
        for (std::size_t c = 0; c < sample; ++c) {
          for (std::size_t j = 0; j < d; ++j) col[j] = X[j * cols + c];
          keep(serial::project(spec, col));
        }
      });
      row("project_x61", sz, time_ms(reps, [&] { proj.apply(X, cols, Y); keep(Y); }),
          ser * static_cast<double>(cols) / static_cast<double>(sample));
    }
  }
  return 0;
}
