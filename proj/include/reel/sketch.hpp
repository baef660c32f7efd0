#pragma once

// Gaussian random projections P (n x d) with p_ij = y_ij / sqrt(n), y_ij ~ N(0, 1).
//
// Entry stream: row i is drawn from NormalStream(derive_seed(seed, i)) in column
// order. Rows are independent streams, so a materialized matrix and on-the-fly
// row regeneration produce bitwise-identical entries and rows can be generated in
// parallel. The stream is named by kProjectionStreamId in compressed dataset
// headers.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace reel {

inline constexpr const char* kProjectionStreamId = "xoshiro256ss-rowseed-boxmuller/1";

enum class ProjectionKind : std::uint8_t { Gaussian = 0, Identity = 1 };

class ProjectionSpec {
 public:
  ProjectionSpec() = default;

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  std::uint64_t seed() const noexcept { return seed_; }
  ProjectionKind kind() const noexcept { return kind_; }

  /// Writes row i (d entries). Identity rows are unit vectors.
  void fill_row(std::size_t i, std::span<double> out) const;

  bool operator==(const ProjectionSpec&) const = default;

 private:
  friend ProjectionSpec make_projection(std::size_t, std::size_t, std::uint64_t);
  friend ProjectionSpec make_identity_projection(std::size_t);
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::uint64_t seed_ = 0;
  ProjectionKind kind_ = ProjectionKind::Gaussian;
};

/// Throws UsageError unless 1 <= n <= d.
ProjectionSpec make_projection(std::size_t n, std::size_t d, std::uint64_t seed);
/// n = d, P = I. Used to evaluate the unprojected two-part loss.
ProjectionSpec make_identity_projection(std::size_t d);

/// n = max(1, ceil(r d)). Throws UsageError unless 0 < r <= 1 and r d >= 1.
std::size_t projected_dim(double ratio, std::size_t d);

template <class T>
struct Sketch {
  ProjectionSpec spec;
  std::vector<T> values;
};

/// P x, regenerating rows on the fly. Throws GridMismatch on a length mismatch.
Sketch<double> project(const ProjectionSpec& spec, std::span<const double> x);
/// P applied to real and imaginary parts separately.
Sketch<std::complex<double>> project(const ProjectionSpec& spec,
                                     std::span<const std::complex<double>> x);

/// Materialized projection for repeated use. Large matrices (above max_entries)
/// fall back to per-row regeneration inside the kernels.
class Projector {
 public:
  explicit Projector(ProjectionSpec spec, std::size_t max_entries = std::size_t{1} << 26);

  const ProjectionSpec& spec() const noexcept { return spec_; }
  bool materialized() const noexcept { return !matrix_.empty(); }

  /// Y = P X for X (d x m, row-major) into Y (n x m, row-major). Each output is
  /// accumulated over columns in ascending order, so results match a serial dot
  /// product bitwise. Rows are distributed over OpenMP threads.
  void apply(std::span<const double> x, std::size_t m, std::span<double> y) const;

  /// Same as apply for an X whose only nonzero rows are `rows` (ascending);
  /// x holds those rows compactly (rows.size() x m).
  void apply_rows(std::span<const std::size_t> rows, std::span<const double> x, std::size_t m,
                  std::span<double> y) const;

  Sketch<double> project(std::span<const double> x) const;
  Sketch<std::complex<double>> project(std::span<const std::complex<double>> x) const;

 private:
  // Y (n x m) = P X for the first `cols` rows of X; materialized matrices only.
  void dense_product(const double* x, std::size_t cols, std::size_t m, double* y) const;

  ProjectionSpec spec_;
  std::vector<double> matrix_;  // row panels, see sketch.cpp
};

/// Fraction of seeds for which
/// (1 - delta) |x - y|^2 <= |P (x - y)|^2 <= (1 + delta) |x - y|^2, P being n x len(x).
/// `ratios`, when given, receives |P (x - y)|^2 / |x - y|^2 per seed.
double jl_sandwich_trial(std::span<const std::uint64_t> seeds, std::size_t n,
                         std::span<const double> x, std::span<const double> y, double delta,
                         std::vector<double>* ratios = nullptr);

}  // namespace reel
