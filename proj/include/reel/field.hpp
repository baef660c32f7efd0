#pragma once

// 2D periodic scalar fields and the finite-difference stencils the models use.
//
// Layout is row-major with index = i * ny + j, where i runs along x and j
// along y. Every stencil wraps periodically. The stencils in this header are
// OpenMP-parallel over rows; reel::serial holds naive double-loop versions that
// round identically and are used as test oracles.

#include <cstddef>
#include <span>
#include <vector>

namespace reel {

struct GridSpec {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 1.0;
  double dt = 1.0;

  GridSpec() = default;
  /// Throws UsageError unless nx, ny >= 4 and dx, dt > 0.
  GridSpec(std::size_t nx, std::size_t ny, double dx, double dt);

  std::size_t size() const noexcept { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * ny + j; }

  /// Same cell layout and spacing; dt is not compared.
  bool same_mesh(const GridSpec& other) const noexcept {
    return nx == other.nx && ny == other.ny && dx == other.dx;
  }
  bool operator==(const GridSpec&) const = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, double value = 0.0);
  /// Throws GridMismatch if data.size() != grid.size().
  ScalarField(const GridSpec& grid, std::vector<double> data);

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& vector() const noexcept { return data_; }

  double& operator[](std::size_t k) noexcept { return data_[k]; }
  double operator[](std::size_t k) const noexcept { return data_[k]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[grid_.index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[grid_.index(i, j)];
  }

  bool operator==(const ScalarField& other) const {
    return grid_.same_mesh(other.grid_) && data_ == other.data_;
  }

 private:
  GridSpec grid_;
  std::vector<double> data_;
};

/// Throws GridMismatch when the two fields live on different meshes.
void require_same_mesh(const ScalarField& a, const ScalarField& b, const char* op);

/// 5-point periodic Laplacian:
/// (f[i+1,j] + f[i-1,j] + f[i,j+1] + f[i,j-1] - 4 f[i,j]) / dx^2.
ScalarField laplacian(const ScalarField& f);

/// (df/dx)^2 + (df/dy)^2 with centered differences over 2 dx.
ScalarField grad_sq(const ScalarField& f);

/// Conservative div(m grad mu). Face fluxes use the arithmetic mean of m over the
/// two adjacent cells, so the grid sum of the result vanishes up to rounding.
ScalarField div_flux(const ScalarField& m, const ScalarField& mu);

// Pointwise helpers. Binary ones throw GridMismatch on mesh mismatch.
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
/// y += s * x
void axpy(double s, const ScalarField& x, ScalarField& y);

double sum(const ScalarField& f);
double sum_sq(const ScalarField& f);
double max_abs(const ScalarField& f);
bool all_finite(const ScalarField& f);

}  // namespace reel
