#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "reel/error.hpp"
#include "reel/reference.hpp"
#include "reel/rng.hpp"
#include "reel/sketch.hpp"

using namespace reel;

namespace {

std::vector<double> random_vector(std::size_t d, std::uint64_t seed) {
  NormalStream ns(seed);
  std::vector<double> v(d);
  for (double& x : v) x = ns.next();
  return v;
}

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("projected dimension rounds up") {
  CHECK(projected_dim(0.01, 10000) == 100);
  CHECK(projected_dim(0.05, 4096) == 205);
  CHECK(projected_dim(1.0, 17) == 17);
  CHECK(projected_dim(0.1, 15) == 2);
  CHECK_THROWS_AS(projected_dim(0.0, 100), UsageError);
  CHECK_THROWS_AS(projected_dim(1.5, 100), UsageError);
  CHECK_THROWS_AS(projected_dim(0.001, 100), UsageError);
  CHECK_THROWS_AS(make_projection(0, 10, 1), UsageError);
  CHECK_THROWS_AS(make_projection(11, 10, 1), UsageError);
}

TEST_CASE("rows are regenerated from per-row streams") {
  auto spec = make_projection(5, 40, 99);
  std::vector<double> row(40);
  spec.fill_row(3, row);
  NormalStream ns(derive_seed(99, 3));
  for (double v : row) CHECK(v == doctest::Approx(ns.next() / std::sqrt(5.0)).epsilon(1e-15));
}

TEST_CASE("materialized, streaming and serial projections agree bitwise") {
  const std::size_t d = 300, n = 31;
  auto spec = make_projection(n, d, 5);
  auto x = random_vector(d, 6);
  auto ref = serial::project(spec, x);
  auto stream = project(spec, x).values;
  Projector dense(spec);
  Projector lazy(spec, 10);
  CHECK(dense.materialized());
  CHECK_FALSE(lazy.materialized());
  auto a = dense.project(x).values;
  auto b = lazy.project(x).values;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::memcmp(&ref[i], &stream[i], 8) == 0);
    CHECK(std::memcmp(&ref[i], &a[i], 8) == 0);
    CHECK(std::memcmp(&ref[i], &b[i], 8) == 0);
  }
}

TEST_CASE("multi-column apply and sparse-row apply match dense products") {
  const std::size_t d = 64, n = 9, m = 3;
  auto spec = make_projection(n, d, 17);
  Projector proj(spec);
  std::vector<double> x(d * m, 0.0);
  std::vector<std::size_t> rows = {2, 5, 40, 63};
  std::vector<double> compact;
  auto vals = random_vector(rows.size() * m, 8);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < m; ++c) {
      x[rows[r] * m + c] = vals[r * m + c];
      compact.push_back(vals[r * m + c]);
    }
  std::vector<double> y(n * m), ys(n * m);
  proj.apply(x, m, y);
  proj.apply_rows(rows, compact, m, ys);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    spec.fill_row(i, row);
    for (std::size_t c = 0; c < m; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j * m + c];
      CHECK(y[i * m + c] == doctest::Approx(acc).epsilon(1e-13));
      CHECK(ys[i * m + c] == doctest::Approx(acc).epsilon(1e-13));
    }
  }
}

TEST_CASE("complex vectors are projected part by part") {
  auto spec = make_projection(4, 20, 3);
  std::vector<std::complex<double>> z(20);
  auto re = random_vector(20, 1), im = random_vector(20, 2);
  for (std::size_t k = 0; k < 20; ++k) z[k] = {re[k], im[k]};
  auto pz = project(spec, std::span<const std::complex<double>>(z)).values;
  auto pr = project(spec, re).values;
  auto pi = project(spec, im).values;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(pz[i].real() == pr[i]);
    CHECK(pz[i].imag() == pi[i]);
  }
  CHECK_THROWS_AS(project(spec, std::vector<double>(19)), GridMismatch);
}

TEST_CASE("identity projection is the identity") {
  auto id = make_identity_projection(12);
  auto x = random_vector(12, 4);
  CHECK(project(id, x).values == x);
}

TEST_CASE("entries have zero mean and variance 1/n") {
  const std::size_t n = 50, d = 2000;
  auto spec = make_projection(n, d, 123);
  std::vector<double> row(d);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    spec.fill_row(i, row);
    for (double v : row) {
      s += v;
      s2 += v * v;
    }
  }
  const double N = double(n * d);
  const double mean = s / N, var = s2 / N;
  // standard error of the mean is sqrt(1/n / N)
  CHECK(std::abs(mean) < 5 * std::sqrt(1.0 / n / N));
  CHECK(std::abs(var * n - 1.0) < 0.02);
}

TEST_CASE("squared norms are preserved in expectation") {
  const std::size_t d = 256, n = 16;
  auto x = random_vector(d, 77);
  const double target = norm_sq(x);
  double acc = 0.0;
  const int trials = 400;
  for (int s = 0; s < trials; ++s) acc += norm_sq(project(make_projection(n, d, 1000 + s), x).values);
  // var of |Px|^2/|x|^2 is 2/n, so the mean has sd sqrt(2/(n trials))
  CHECK(std::abs(acc / trials / target - 1.0) < 4 * std::sqrt(2.0 / (n * trials)));
}

TEST_CASE("sandwich holds for sparse differences") {
  const std::size_t d = 1024, n = projected_dim(0.05, d);
  std::vector<double> x(d, 0.0), y(d, 0.0);
  Xoshiro256 rng(5);
  for (int k = 0; k < 5; ++k) x[rng.next() % d] = 1.0 + rng.uniform();
  std::vector<std::uint64_t> seeds(100);
  std::iota(seeds.begin(), seeds.end(), 0);
  CHECK(jl_sandwich_trial(seeds, n, x, y, 0.5) >= 0.95);
  // far too small a sketch fails often
  CHECK(jl_sandwich_trial(seeds, 1, x, y, 0.5) < 0.6);
}

TEST_CASE("tiled multi-column apply is bitwise equal to per-column serial projection") {
  const std::size_t d = 700, n = 19, m = 21;
  auto spec = make_projection(n, d, 31);
  Projector proj(spec);
  auto x = random_vector(d * m, 32);
  std::vector<double> y(n * m);
  proj.apply(x, m, y);
  std::vector<double> col(d);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t j = 0; j < d; ++j) col[j] = x[j * m + c];
    auto ref = serial::project(spec, col);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = y[i * m + c];
      CHECK(std::memcmp(&a, &ref[i], 8) == 0);
    }
  }
}
