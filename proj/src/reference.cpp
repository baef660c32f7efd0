#include "reel/reference.hpp"

#include <cmath>
#include <numbers>

#include "reel/error.hpp"

namespace reel::serial {

namespace {

std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

}  // namespace

ScalarField laplacian(const ScalarField& f) {
  const GridSpec& g = f.grid();
  ScalarField out(g);
  const double dx2 = g.dx * g.dx;
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      out(i, j) = (f(wrap(ii + 1, g.nx), j) + f(wrap(ii - 1, g.nx), j) +
                   f(i, wrap(jj + 1, g.ny)) + f(i, wrap(jj - 1, g.ny)) - 4.0 * f(i, j)) /
                  dx2;
    }
  }
  return out;
}

ScalarField grad_sq(const ScalarField& f) {
  const GridSpec& g = f.grid();
  ScalarField out(g);
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const double gx = (f(wrap(ii + 1, g.nx), j) - f(wrap(ii - 1, g.nx), j)) / (2.0 * g.dx);
      const double gy = (f(i, wrap(jj + 1, g.ny)) - f(i, wrap(jj - 1, g.ny))) / (2.0 * g.dx);
      out(i, j) = gx * gx + gy * gy;
    }
  }
  return out;
}

ScalarField div_flux(const ScalarField& m, const ScalarField& mu) {
  require_same_mesh(m, mu, "serial::div_flux");
  const GridSpec& g = m.grid();
  ScalarField out(g);
  const double dx = g.dx;
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t ip = wrap(ii + 1, g.nx), im = wrap(ii - 1, g.nx);
      const std::size_t jp = wrap(jj + 1, g.ny), jm = wrap(jj - 1, g.ny);
      const double east = 0.5 * (m(i, j) + m(ip, j)) * (mu(ip, j) - mu(i, j)) / dx;
      const double west = 0.5 * (m(im, j) + m(i, j)) * (mu(i, j) - mu(im, j)) / dx;
      const double north = 0.5 * (m(i, j) + m(i, jp)) * (mu(i, jp) - mu(i, j)) / dx;
      const double south = 0.5 * (m(i, jm) + m(i, j)) * (mu(i, j) - mu(i, jm)) / dx;
      out(i, j) = (east - west + north - south) / dx;
    }
  }
  return out;
}

namespace {

std::vector<Complex> direct_dft(const GridSpec& g, const std::vector<Complex>& in, double sign) {
  std::vector<Complex> out(g.size());
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k1 = 0; k1 < g.nx; ++k1) {
    for (std::size_t k2 = 0; k2 < g.ny; ++k2) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < g.nx; ++i) {
        for (std::size_t j = 0; j < g.ny; ++j) {
          // Reduce the phase exactly before converting to an angle.
          const double phase = static_cast<double>((k1 * i) % g.nx) / static_cast<double>(g.nx) +
                               static_cast<double>((k2 * j) % g.ny) / static_cast<double>(g.ny);
          acc += in[g.index(i, j)] * std::polar(1.0, sign * two_pi * phase);
        }
      }
      out[g.index(k1, k2)] = acc;
    }
  }
  return out;
}

}  // namespace

Spectrum dft2(const ScalarField& f) {
  Spectrum s(f.grid());
  s.coeffs = direct_dft(f.grid(), std::vector<Complex>(f.values().begin(), f.values().end()), -1.0);
  return s;
}

std::vector<Complex> idft2(const Spectrum& s) {
  std::vector<Complex> out = direct_dft(s.grid, s.coeffs, 1.0);
  for (auto& v : out) v /= static_cast<double>(out.size());
  return out;
}

std::vector<double> project(const ProjectionSpec& spec, std::span<const double> x) {
  if (x.size() != spec.d()) throw GridMismatch("serial::project: length mismatch");
  std::vector<double> y(spec.n(), 0.0);
  std::vector<double> row(spec.d());
  for (std::size_t i = 0; i < spec.n(); ++i) {
    spec.fill_row(i, row);
    double acc = 0.0;
    for (std::size_t j = 0; j < spec.d(); ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

}  // namespace reel::serial
