#pragma once

// Discrete Fourier transforms over the 2D grid and the value/frequency domain
// decomposition (VFDD): the large-magnitude DFT coefficients of a signal are kept
// in the frequency domain, the inverse transform of the rest in the value domain.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "reel/field.hpp"

namespace reel {

using Complex = std::complex<double>;

/// Unnormalized forward 2D DFT coefficients, row-major like ScalarField.
struct Spectrum {
  GridSpec grid;
  std::vector<Complex> coeffs;

  Spectrum() = default;
  explicit Spectrum(const GridSpec& g) : grid(g), coeffs(g.size()) {}
};

/// Per-bin keep flags; true means the bin belongs to the frequency component.
struct FrequencyMask {
  GridSpec grid;
  std::vector<std::uint8_t> keep;

  FrequencyMask() = default;
  FrequencyMask(const GridSpec& g, bool value) : grid(g), keep(g.size(), value ? 1 : 0) {}

  std::size_t count() const;
  bool any() const;
  bool all() const;
  /// keep[k] == keep[-k mod N] for every bin.
  bool conjugate_symmetric() const;
};

struct VfddPair {
  ScalarField value;       // s_val
  Spectrum frequency;      // s_freq, zero outside the mask
  FrequencyMask mask;
  double beta = 0.0;       // NaN when the mask was supplied by the caller
  double max_imag_residue = 0.0;  // largest |Im| discarded when forming s_val
};

/// Bin index of -k (mod nx, ny).
std::size_t conjugate_bin(const GridSpec& g, std::size_t k);

Spectrum dft2(const ScalarField& f);
/// Inverse transform including the 1/N factor.
std::vector<Complex> idft2(const Spectrum& s);
/// Inverse transform of a conjugate-symmetric spectrum; returns the real part and
/// reports the largest discarded imaginary magnitude through max_imag if given.
ScalarField idft2_real(const Spectrum& s, double* max_imag = nullptr);

/// keep = |F| > beta, OR-ed with the conjugate bin.
FrequencyMask threshold_mask(const Spectrum& s, double beta);

/// Threshold such that a fraction keep_fraction of bins has |F| strictly above it
/// (ties permitting). keep_fraction = 0.1 is the 90th percentile of |F|.
double keep_top_beta(const Spectrum& s, double keep_fraction);

/// Split f with threshold beta (>= 0, may be +inf). Throws DomainError on a bad beta.
VfddPair vfdd(const ScalarField& f, double beta);

/// Same split with a caller-supplied mask. Throws GridMismatch.
VfddPair decompose_with_mask(const ScalarField& f, const FrequencyMask& mask);

struct SparsityCounts {
  std::size_t value = 0;
  std::size_t frequency = 0;
};

SparsityCounts sparsity_report(const VfddPair& p, double tol);

}  // namespace reel
