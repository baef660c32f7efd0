#pragma once

// Serial reference implementations of the parallel kernels. Written as plain
// double loops straight from the formulas; the unit tests compare the fast paths
// against these and the benchmark times them side by side.

#include <complex>
#include <span>
#include <vector>

#include "reel/field.hpp"
#include "reel/sketch.hpp"
#include "reel/spectral.hpp"

namespace reel::serial {

ScalarField laplacian(const ScalarField& f);
ScalarField grad_sq(const ScalarField& f);
ScalarField div_flux(const ScalarField& m, const ScalarField& mu);

/// O(N^2) direct summation, unnormalized forward transform.
Spectrum dft2(const ScalarField& f);
/// O(N^2) direct summation including the 1/N factor.
std::vector<Complex> idft2(const Spectrum& s);

/// Row-by-row dot products with the regenerated entry stream.
std::vector<double> project(const ProjectionSpec& spec, std::span<const double> x);

}  // namespace reel::serial
