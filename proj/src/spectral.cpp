#include "reel/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include "reel/error.hpp"

namespace reel {

namespace {

// FFTW planning is not thread-safe; execution of a finished plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t nx, std::size_t ny, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(nx, ny, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> in(nx * ny), out(nx * ny);
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(nx), static_cast<int>(ny),
                                      reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void transform(const GridSpec& g, const Complex* in, Complex* out, int sign) {
  fftw_plan plan = plan_cache().get(g.nx, g.ny, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void require_mask_grid(const ScalarField& f, const FrequencyMask& mask) {
  if (!f.grid().same_mesh(mask.grid) || mask.keep.size() != f.size()) {
    throw GridMismatch("decompose_with_mask: mask and field live on different grids");
  }
}

VfddPair split(const ScalarField& f, const Spectrum& full, FrequencyMask mask) {
  const GridSpec& g = f.grid();
  Spectrum kept(g);
  Spectrum rest(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask.keep[k]) {
      kept.coeffs[k] = full.coeffs[k];
    } else {
      rest.coeffs[k] = full.coeffs[k];
    }
  }
  VfddPair pair;
  pair.value = idft2_real(rest, &pair.max_imag_residue);
  pair.frequency = std::move(kept);
  pair.mask = std::move(mask);
  return pair;
}

}  // namespace

std::size_t FrequencyMask::count() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

bool FrequencyMask::any() const {
  return std::any_of(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; });
}

bool FrequencyMask::all() const {
  return std::all_of(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; });
}

bool FrequencyMask::conjugate_symmetric() const {
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] != keep[conjugate_bin(grid, k)]) return false;
  }
  return true;
}

std::size_t conjugate_bin(const GridSpec& g, std::size_t k) {
  const std::size_t i = k / g.ny;
  const std::size_t j = k % g.ny;
  return g.index((g.nx - i) % g.nx, (g.ny - j) % g.ny);
}

Spectrum dft2(const ScalarField& f) {
  const GridSpec& g = f.grid();
  std::vector<Complex> in(f.values().begin(), f.values().end());
  Spectrum s(g);
  transform(g, in.data(), s.coeffs.data(), FFTW_FORWARD);
  return s;
}

std::vector<Complex> idft2(const Spectrum& s) {
  std::vector<Complex> out(s.coeffs.size());
  transform(s.grid, s.coeffs.data(), out.data(), FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(s.coeffs.size());
  for (auto& v : out) v *= scale;
  return out;
}

ScalarField idft2_real(const Spectrum& s, double* max_imag) {
  const std::vector<Complex> z = idft2(s);
  ScalarField out(s.grid);
  double worst = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = z[k].real();
    worst = std::max(worst, std::abs(z[k].imag()));
  }
  if (max_imag) *max_imag = worst;
  return out;
}

FrequencyMask threshold_mask(const Spectrum& s, double beta) {
  FrequencyMask mask(s.grid, false);
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
    if (std::abs(s.coeffs[k]) > beta) {
      mask.keep[k] = 1;
      mask.keep[conjugate_bin(s.grid, k)] = 1;
    }
  }
  return mask;
}

double keep_top_beta(const Spectrum& s, double keep_fraction) {
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
    throw DomainError("keep fraction must lie in [0, 1]");
  }
  const std::size_t n = s.coeffs.size();
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n)));
  if (keep == 0) return std::numeric_limits<double>::infinity();
  if (keep >= n) return 0.0;
  std::vector<double> mags(n);
  for (std::size_t k = 0; k < n; ++k) mags[k] = std::abs(s.coeffs[k]);
  // The (keep+1)-th largest magnitude: exactly `keep` bins lie strictly above it
  // when there are no ties.
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(keep), mags.end(),
                   std::greater<>());
  return mags[keep];
}

VfddPair vfdd(const ScalarField& f, double beta) {
  if (std::isnan(beta) || beta < 0.0) throw DomainError("vfdd threshold must be >= 0");
  Spectrum full = dft2(f);
  FrequencyMask mask = threshold_mask(full, beta);
  VfddPair pair = split(f, full, std::move(mask));
  pair.beta = beta;
  return pair;
}

VfddPair decompose_with_mask(const ScalarField& f, const FrequencyMask& mask) {
  require_mask_grid(f, mask);
  VfddPair pair = split(f, dft2(f), mask);
  pair.beta = std::numeric_limits<double>::quiet_NaN();
  return pair;
}

SparsityCounts sparsity_report(const VfddPair& p, double tol) {
  SparsityCounts c;
  for (double v : p.value.values()) {
    if (std::abs(v) > tol) ++c.value;
  }
  for (const Complex& z : p.frequency.coeffs) {
    if (std::abs(z) > tol) ++c.frequency;
  }
  return c;
}

}  // namespace reel
