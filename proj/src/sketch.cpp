#include "reel/sketch.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <string>

#include "reel/error.hpp"
#include "reel/rng.hpp"

namespace reel {

void ProjectionSpec::fill_row(std::size_t i, std::span<double> out) const {
  // out may be a prefix of the row; the stream is generated in column order.
  if (kind_ == ProjectionKind::Identity) {
    std::fill(out.begin(), out.end(), 0.0);
    if (i < out.size()) out[i] = 1.0;
    return;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  NormalStream stream(derive_seed(seed_, i));
  for (double& v : out) v = stream.next() * scale;
}

ProjectionSpec make_projection(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || n > d) {
    throw UsageError("projection needs 1 <= n <= d, got n=" + std::to_string(n) +
                     " d=" + std::to_string(d));
  }
  ProjectionSpec spec;
  spec.n_ = n;
  spec.d_ = d;
  spec.seed_ = seed;
  spec.kind_ = ProjectionKind::Gaussian;
  return spec;
}

ProjectionSpec make_identity_projection(std::size_t d) {
  if (d == 0) throw UsageError("identity projection needs d >= 1");
  ProjectionSpec spec;
  spec.n_ = d;
  spec.d_ = d;
  spec.kind_ = ProjectionKind::Identity;
  return spec;
}

std::size_t projected_dim(double ratio, std::size_t d) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw UsageError("compression ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
  const double target = ratio * static_cast<double>(d);
  if (target < 1.0) {
    throw UsageError("compression ratio " + std::to_string(ratio) +
                     " leaves fewer than one projected dimension for d=" + std::to_string(d));
  }
  // Guard against r*d landing a hair above an integer through rounding of r.
  const auto n = static_cast<std::size_t>(std::ceil(target * (1.0 - 1e-12)));
  return std::clamp<std::size_t>(n, 1, d);
}

namespace {

void require_length(const ProjectionSpec& spec, std::size_t len) {
  if (len != spec.d()) {
    throw GridMismatch("projection expects vectors of length " + std::to_string(spec.d()) +
                       ", got " + std::to_string(len));
  }
}

// Index one past the last nonzero row of X (d x m).
std::size_t active_rows(std::span<const double> x, std::size_t m) {
  std::size_t rows = x.size() / m;
  while (rows > 0) {
    const double* r = x.data() + (rows - 1) * m;
    if (std::any_of(r, r + m, [](double v) { return v != 0.0; })) break;
    --rows;
  }
  return rows;
}

inline void accumulate_row(const double* p, std::size_t cols, const double* x, std::size_t m,
                           double* y) {
  std::fill(y, y + m, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    const double pij = p[j];
    const double* xr = x + j * m;
    for (std::size_t k = 0; k < m; ++k) y[k] += pij * xr[k];
  }
}

// The materialized matrix is stored in panels of kPanel rows, column-major
// inside a panel: entry (i, j) sits at ((i / kPanel) * d + j) * kPanel + i % kPanel.
// Rows past n in the last panel are zero.
constexpr std::size_t kPanel = 8;
// Columns per tile, sized so a tile of X (tile x m doubles) stays near 256 KiB.
constexpr std::size_t kTileDoubles = std::size_t{1} << 15;

// Eight doubles per vector; the compiler lowers this to whatever width the
// target has. Multiplies and adds stay separate (no contraction), so each lane
// rounds exactly like the scalar loop.
typedef double vec8 __attribute__((vector_size(64)));
constexpr std::size_t kLanes = 8;
constexpr std::size_t kColBlock = 2 * kLanes;

inline void load8(vec8& v, const double* p) { std::memcpy(&v, p, sizeof v); }

// Adds columns [j0, j1) of panel * X into the kPanel x m block y, m a multiple
// of kColBlock. Each output sums over j in ascending order, so visiting the
// tiles in order reproduces the serial dot product.
inline void accumulate_panel(const double* panel, std::size_t j0, std::size_t j1, const double* x,
                             std::size_t m, double* y) {
  for (std::size_t k0 = 0; k0 < m; k0 += kColBlock) {
    vec8 a0[kPanel], a1[kPanel];
    for (std::size_t b = 0; b < kPanel; ++b) {
      load8(a0[b], y + b * m + k0);
      load8(a1[b], y + b * m + k0 + kLanes);
    }
    for (std::size_t j = j0; j < j1; ++j) {
      vec8 x0, x1;
      load8(x0, x + j * m + k0);
      load8(x1, x + j * m + k0 + kLanes);
      const double* pj = panel + j * kPanel;
      for (std::size_t b = 0; b < kPanel; ++b) {
        a0[b] += pj[b] * x0;
        a1[b] += pj[b] * x1;
      }
    }
    for (std::size_t b = 0; b < kPanel; ++b) {
      std::memcpy(y + b * m + k0, &a0[b], sizeof(vec8));
      std::memcpy(y + b * m + k0 + kLanes, &a1[b], sizeof(vec8));
    }
  }
}

}  // namespace

Projector::Projector(ProjectionSpec spec, std::size_t max_entries) : spec_(spec) {
  if (spec_.kind() == ProjectionKind::Identity) return;
  const std::size_t n = spec_.n(), d = spec_.d();
  if (n * d > max_entries) return;
  const std::size_t panels = (n + kPanel - 1) / kPanel;
  matrix_.assign(panels * kPanel * d, 0.0);
#pragma omp parallel
  {
    std::vector<double> row(d);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      spec_.fill_row(i, row);
      double* panel = matrix_.data() + (i / kPanel) * d * kPanel + i % kPanel;
      for (std::size_t j = 0; j < d; ++j) panel[j * kPanel] = row[j];
    }
  }
}

void Projector::dense_product(const double* x, std::size_t cols, std::size_t m, double* y) const {
  const std::size_t n = spec_.n(), d = spec_.d();
  const std::size_t panels = (n + kPanel - 1) / kPanel;
  // Pad X to whole register tiles and Y to whole panels; padding is discarded.
  const std::size_t mp = (m + kColBlock - 1) / kColBlock * kColBlock;
  std::vector<double> xp;
  const double* xs = x;
  if (mp != m) {
    xp.assign(cols * mp, 0.0);
    for (std::size_t j = 0; j < cols; ++j) std::copy_n(x + j * m, m, xp.data() + j * mp);
    xs = xp.data();
  }
  std::vector<double> yp(panels * kPanel * mp, 0.0);
  const std::size_t tile = std::max<std::size_t>(16, kTileDoubles / mp);
#pragma omp parallel
  for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
    const std::size_t j1 = std::min(cols, j0 + tile);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < panels; ++b) {
      accumulate_panel(matrix_.data() + b * d * kPanel, j0, j1, xs, mp, yp.data() + b * kPanel * mp);
    }
  }
  for (std::size_t i = 0; i < n; ++i) std::copy_n(yp.data() + i * mp, m, y + i * m);
}

void Projector::apply(std::span<const double> x, std::size_t m, std::span<double> y) const {
  const std::size_t n = spec_.n(), d = spec_.d();
  if (m == 0 || x.size() != d * m || y.size() != n * m) {
    throw GridMismatch("Projector::apply: operand shapes do not match the projection");
  }
  if (spec_.kind() == ProjectionKind::Identity) {
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  const std::size_t cols = active_rows(x, m);
  if (materialized()) {
    dense_product(x.data(), cols, m, y.data());
    return;
  }
#pragma omp parallel
  {
    std::vector<double> row(cols);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      spec_.fill_row(i, row);
      accumulate_row(row.data(), cols, x.data(), m, y.data() + i * m);
    }
  }
}

void Projector::apply_rows(std::span<const std::size_t> rows, std::span<const double> x,
                           std::size_t m, std::span<double> y) const {
  const std::size_t n = spec_.n(), d = spec_.d();
  if (m == 0 || x.size() != rows.size() * m || y.size() != n * m) {
    throw GridMismatch("Projector::apply_rows: operand shapes do not match the projection");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= d || (r > 0 && rows[r] <= rows[r - 1])) {
      throw UsageError("Projector::apply_rows: row indices must be ascending and < d");
    }
  }
  if (spec_.kind() == ProjectionKind::Identity) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy_n(x.data() + r * m, m, y.data() + rows[r] * m);
    }
    return;
  }
  const std::size_t cols = rows.empty() ? 0 : rows.back() + 1;
  // Past about one kept row in eight the blocked dense kernel wins, zeros and all.
  if (materialized() && rows.size() * 8 >= cols) {
    std::vector<double> dense(cols * m, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy_n(x.data() + r * m, m, dense.data() + rows[r] * m);
    }
    dense_product(dense.data(), cols, m, y.data());
    return;
  }
  auto sparse_row = [&](const double* p, std::size_t stride, double* out) {
    std::fill(out, out + m, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double pij = p[rows[r] * stride];
      const double* xr = x.data() + r * m;
      for (std::size_t k = 0; k < m; ++k) out[k] += pij * xr[k];
    }
  };
  if (materialized()) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      sparse_row(matrix_.data() + (i / kPanel) * d * kPanel + i % kPanel, kPanel, y.data() + i * m);
    }
    return;
  }
#pragma omp parallel
  {
    std::vector<double> row(cols);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      spec_.fill_row(i, row);
      sparse_row(row.data(), 1, y.data() + i * m);
    }
  }
}

Sketch<double> Projector::project(std::span<const double> x) const {
  require_length(spec_, x.size());
  Sketch<double> s{spec_, std::vector<double>(spec_.n())};
  apply(x, 1, s.values);
  return s;
}

Sketch<std::complex<double>> Projector::project(std::span<const std::complex<double>> x) const {
  require_length(spec_, x.size());
  Sketch<std::complex<double>> s{spec_, std::vector<std::complex<double>>(spec_.n())};
  // A complex vector is a d x 2 row-major real matrix [re, im].
  apply(std::span<const double>(reinterpret_cast<const double*>(x.data()), 2 * x.size()), 2,
        std::span<double>(reinterpret_cast<double*>(s.values.data()), 2 * s.values.size()));
  return s;
}

Sketch<double> project(const ProjectionSpec& spec, std::span<const double> x) {
  return Projector(spec, 0).project(x);
}

Sketch<std::complex<double>> project(const ProjectionSpec& spec,
                                     std::span<const std::complex<double>> x) {
  return Projector(spec, 0).project(x);
}

double jl_sandwich_trial(std::span<const std::uint64_t> seeds, std::size_t n,
                         std::span<const double> x, std::span<const double> y, double delta,
                         std::vector<double>* ratios) {
  if (x.size() != y.size()) throw GridMismatch("jl_sandwich_trial: x and y differ in length");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("jl_sandwich_trial: need 0 < delta < 1");
  if (seeds.empty()) return 0.0;
  std::vector<double> diff(x.size());
  double norm2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    diff[k] = x[k] - y[k];
    norm2 += diff[k] * diff[k];
  }
  std::size_t hits = 0;
  if (ratios) ratios->clear();
  for (std::uint64_t seed : seeds) {
    const Sketch<double> s = project(make_projection(n, x.size(), seed), diff);
    double proj2 = 0.0;
    for (double v : s.values) proj2 += v * v;
    if ((1.0 - delta) * norm2 <= proj2 && proj2 <= (1.0 + delta) * norm2) ++hits;
    if (ratios) ratios->push_back(proj2 / norm2);
  }
  return static_cast<double>(hits) / static_cast<double>(seeds.size());
}

}  // namespace reel
