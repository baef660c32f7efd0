#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "reel/error.hpp"
#include "reel/reference.hpp"
#include "reel/spectral.hpp"
#include "support.hpp"

using namespace reel;

namespace {

double rel_reconstruction_error(const ScalarField& f, const VfddPair& p) {
  ScalarField back = idft2_real(p.frequency);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double e = p.value[k] + back[k] - f[k];
    num += e * e;
    den += f[k] * f[k];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("dft2 matches direct summation") {
  GridSpec g(8, 6, 1.0, 0.1);
  auto f = testing::random_field(g, 10);
  Spectrum fast = dft2(f);
  Spectrum ref = serial::dft2(f);
  // direct oracle written out here as well
  for (std::size_t kx = 0; kx < g.nx; ++kx) {
    for (std::size_t ky = 0; ky < g.ny; ++ky) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
          const double ang = -2 * std::numbers::pi * (double(kx * i) / g.nx + double(ky * j) / g.ny);
          acc += f(i, j) * Complex(std::cos(ang), std::sin(ang));
        }
      const std::size_t k = g.index(kx, ky);
      CHECK(std::abs(fast.coeffs[k] - acc) < 1e-12);
      CHECK(std::abs(ref.coeffs[k] - acc) < 1e-12);
    }
  }
}

TEST_CASE("inverse transform round trips") {
  GridSpec g(16, 12, 1.0, 0.1);
  auto f = testing::random_field(g, 11);
  double imag = 1.0;
  ScalarField back = idft2_real(dft2(f), &imag);
  CHECK(testing::max_abs_diff(back, f) < 1e-13);
  CHECK(imag < 1e-13);
  auto full = idft2(dft2(f));
  auto ref = serial::idft2(serial::dft2(f));
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::abs(full[k] - ref[k]) < 1e-12);
}

TEST_CASE("vfdd reconstructs random fields at every threshold") {
  for (std::size_t n : {16u, 64u}) {
    GridSpec g(n, n, 1.0, 0.1);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto f = testing::random_field(g, 100 + seed);
      Spectrum s = dft2(f);
      std::vector<double> mags;
      for (auto c : s.coeffs) mags.push_back(std::abs(c));
      std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
      for (double beta : {0.0, mags[mags.size() / 2], std::numeric_limits<double>::infinity()}) {
        VfddPair p = vfdd(f, beta);
        CHECK(rel_reconstruction_error(f, p) <= 1e-10);
        CHECK(p.mask.conjugate_symmetric());
        CHECK(p.max_imag_residue < 1e-10);
      }
    }
  }
}

TEST_CASE("vfdd extremes") {
  GridSpec g(16, 16, 1.0, 0.1);
  auto f = testing::random_field(g, 7);
  VfddPair all_val = vfdd(f, std::numeric_limits<double>::infinity());
  CHECK_FALSE(all_val.mask.any());
  CHECK(testing::max_abs_diff(all_val.value, f) < 1e-13);
  for (auto c : all_val.frequency.coeffs) CHECK(c == Complex(0.0));

  // beta = 0 keeps every nonzero bin
  VfddPair all_freq = vfdd(f, 0.0);
  CHECK(all_freq.mask.all());
  CHECK(max_abs(all_freq.value) < 1e-13);

  CHECK_THROWS_AS(vfdd(f, -1.0), DomainError);
  CHECK_THROWS_AS(vfdd(f, std::nan("")), DomainError);
}

TEST_CASE("a single cosine mode lands in two conjugate bins") {
  const std::size_t n = 32;
  GridSpec g(n, n, 1.0, 0.1);
  ScalarField f(g);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) f(i, j) = std::cos(2 * std::numbers::pi * 3.0 * double(i) / n);
  VfddPair p = vfdd(f, 1.0);
  CHECK(p.mask.count() == 2);
  CHECK(p.mask.keep[g.index(3, 0)] == 1);
  CHECK(p.mask.keep[g.index(n - 3, 0)] == 1);
  CHECK(std::abs(p.frequency.coeffs[g.index(3, 0)] - Complex(n * n / 2.0)) < 1e-9);
  CHECK(max_abs(p.value) < 1e-12);
  SparsityCounts sc = sparsity_report(p, 1e-9);
  CHECK(sc.frequency == 2);
  CHECK(sc.value == 0);
}

TEST_CASE("threshold mask is symmetrized") {
  GridSpec g(8, 8, 1.0, 0.1);
  Spectrum s(g);
  s.coeffs[g.index(1, 2)] = 5.0;  // deliberately not Hermitian
  FrequencyMask m = threshold_mask(s, 1.0);
  CHECK(m.count() == 2);
  CHECK(m.keep[conjugate_bin(g, g.index(1, 2))] == 1);
  CHECK(conjugate_bin(g, g.index(1, 2)) == g.index(7, 6));
  CHECK(conjugate_bin(g, 0) == 0);
}

TEST_CASE("keep_top_beta keeps roughly the requested fraction") {
  GridSpec g(32, 32, 1.0, 0.1);
  auto f = testing::random_field(g, 21);
  Spectrum s = dft2(f);
  const double beta = keep_top_beta(s, 0.1);
  std::size_t above = 0;
  for (auto c : s.coeffs) above += std::abs(c) > beta ? 1 : 0;
  CHECK(above <= g.size() / 10 + 1);
  CHECK(above >= g.size() / 10 - 2);
  CHECK(keep_top_beta(s, 0.0) >= max_abs(f) * 0.0);
}

TEST_CASE("decompose_with_mask checks the grid") {
  GridSpec a(8, 8, 1.0, 0.1), b(16, 16, 1.0, 0.1);
  auto f = testing::random_field(a, 1);
  CHECK_THROWS_AS(decompose_with_mask(f, FrequencyMask(b, true)), GridMismatch);
  VfddPair p = decompose_with_mask(f, FrequencyMask(a, false));
  CHECK(std::isnan(p.beta));
  CHECK(testing::max_abs_diff(p.value, f) < 1e-13);
}
