#include "reel/field.hpp"

#include <cmath>
#include <string>

#include "reel/error.hpp"

namespace reel {

GridSpec::GridSpec(std::size_t nx_, std::size_t ny_, double dx_, double dt_)
    : nx(nx_), ny(ny_), dx(dx_), dt(dt_) {
  if (nx < 4 || ny < 4) {
    throw UsageError("grid needs at least 4 cells per axis, got " + std::to_string(nx) + "x" +
                     std::to_string(ny));
  }
  if (!(dx > 0.0) || !std::isfinite(dx)) throw UsageError("grid spacing dx must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("timestep dt must be > 0");
}

ScalarField::ScalarField(const GridSpec& grid, double value)
    : grid_(grid), data_(grid.size(), value) {}

ScalarField::ScalarField(const GridSpec& grid, std::vector<double> data)
    : grid_(grid), data_(std::move(data)) {
  if (data_.size() != grid_.size()) {
    throw GridMismatch("field data has " + std::to_string(data_.size()) +
                       " values, grid expects " + std::to_string(grid_.size()));
  }
}

void require_same_mesh(const ScalarField& a, const ScalarField& b, const char* op) {
  if (!a.grid().same_mesh(b.grid())) {
    throw GridMismatch(std::string(op) + ": fields live on incompatible grids");
  }
}

ScalarField laplacian(const ScalarField& f) {
  const GridSpec& g = f.grid();
  const std::size_t nx = g.nx, ny = g.ny;
  const double dx2 = g.dx * g.dx;
  const double* in = f.values().data();
  ScalarField out(g);
  double* res = out.values().data();

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nx; ++i) {
    const double* c = in + i * ny;
    const double* up = in + ((i + 1) % nx) * ny;
    const double* dn = in + ((i + nx - 1) % nx) * ny;
    double* r = res + i * ny;
    r[0] = (up[0] + dn[0] + c[1] + c[ny - 1] - 4.0 * c[0]) / dx2;
    for (std::size_t j = 1; j + 1 < ny; ++j) {
      r[j] = (up[j] + dn[j] + c[j + 1] + c[j - 1] - 4.0 * c[j]) / dx2;
    }
    r[ny - 1] = (up[ny - 1] + dn[ny - 1] + c[0] + c[ny - 2] - 4.0 * c[ny - 1]) / dx2;
  }
  return out;
}

ScalarField grad_sq(const ScalarField& f) {
  const GridSpec& g = f.grid();
  const std::size_t nx = g.nx, ny = g.ny;
  const double two_dx = 2.0 * g.dx;
  const double* in = f.values().data();
  ScalarField out(g);
  double* res = out.values().data();

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nx; ++i) {
    const double* c = in + i * ny;
    const double* up = in + ((i + 1) % nx) * ny;
    const double* dn = in + ((i + nx - 1) % nx) * ny;
    double* r = res + i * ny;
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t jp = (j + 1 == ny) ? 0 : j + 1;
      const std::size_t jm = (j == 0) ? ny - 1 : j - 1;
      const double gx = (up[j] - dn[j]) / two_dx;
      const double gy = (c[jp] - c[jm]) / two_dx;
      r[j] = gx * gx + gy * gy;
    }
  }
  return out;
}

namespace {

// Flux across the face between cells a (lower index along the axis) and b.
inline double face_flux(double m_a, double m_b, double mu_a, double mu_b, double dx) {
  return 0.5 * (m_a + m_b) * (mu_b - mu_a) / dx;
}

}  // namespace

ScalarField div_flux(const ScalarField& m, const ScalarField& mu) {
  require_same_mesh(m, mu, "div_flux");
  const GridSpec& g = m.grid();
  const std::size_t nx = g.nx, ny = g.ny;
  const double dx = g.dx;
  const double* mv = m.values().data();
  const double* uv = mu.values().data();
  ScalarField out(g);
  double* res = out.values().data();

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nx; ++i) {
    const double* mc = mv + i * ny;
    const double* mu_ = mv + ((i + 1) % nx) * ny;
    const double* md = mv + ((i + nx - 1) % nx) * ny;
    const double* uc = uv + i * ny;
    const double* uu = uv + ((i + 1) % nx) * ny;
    const double* ud = uv + ((i + nx - 1) % nx) * ny;
    double* r = res + i * ny;
    auto cell = [&](std::size_t jm, std::size_t j, std::size_t jp) {
      const double east = face_flux(mc[j], mu_[j], uc[j], uu[j], dx);
      const double west = face_flux(md[j], mc[j], ud[j], uc[j], dx);
      const double north = face_flux(mc[j], mc[jp], uc[j], uc[jp], dx);
      const double south = face_flux(mc[jm], mc[j], uc[jm], uc[j], dx);
      r[j] = (east - west + north - south) / dx;
    };
    cell(ny - 1, 0, 1);
    for (std::size_t j = 1; j + 1 < ny; ++j) cell(j - 1, j, j + 1);
    cell(ny - 2, ny - 1, 0);
  }
  return out;
}

namespace {

template <class Op>
ScalarField zip(const ScalarField& a, const ScalarField& b, const char* name, Op op) {
  require_same_mesh(a, b, name);
  ScalarField out(a.grid());
  const std::size_t n = a.size();
  const double* x = a.values().data();
  const double* y = b.values().data();
  double* r = out.values().data();
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) r[k] = op(x[k], y[k]);
  return out;
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, "operator+", [](double x, double y) { return x + y; });
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, "operator-", [](double x, double y) { return x - y; });
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, "operator*", [](double x, double y) { return x * y; });
}

ScalarField operator*(double s, const ScalarField& a) {
  ScalarField out(a.grid());
  const std::size_t n = a.size();
  for (std::size_t k = 0; k < n; ++k) out[k] = s * a[k];
  return out;
}

void axpy(double s, const ScalarField& x, ScalarField& y) {
  require_same_mesh(x, y, "axpy");
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) y[k] += s * x[k];
}

double sum(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s;
}

double sum_sq(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return s;
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const ScalarField& f) {
  for (double v : f.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace reel
