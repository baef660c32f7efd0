#include "reel/taylor.hpp"

#include <cmath>

#include "reel/error.hpp"

namespace reel {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<double> TaylorDecomposition::param_values(double theta) const {
  std::vector<double> v(static_cast<std::size_t>(order) + 1);
  double power = 1.0;
  for (int i = 0; i <= order; ++i) {
    v[static_cast<std::size_t>(i)] = power / factorial(i);
    power *= theta - center;
  }
  return v;
}

double TaylorDecomposition::evaluate(double theta) const {
  const std::vector<double> p = param_values(theta);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * feature_scalers[i];
  return s;
}

TaylorDecomposition taylor_decompose(double center, int order,
                                     const std::function<double(int)>& derivative) {
  if (order < 0) throw DomainError("Taylor order must be >= 0");
  TaylorDecomposition t;
  t.center = center;
  t.order = order;
  for (int i = 0; i <= order; ++i) {
    t.param_terms.push_back(i == 0 ? "1" : "(theta-a)^" + std::to_string(i) + "/" +
                                               std::to_string(i) + "!");
    t.feature_scalers.push_back(derivative(i));
  }
  return t;
}

ExpSeries::ExpSeries(int order) : order_(order) {
  if (order < 0) throw DomainError("Taylor order must be >= 0");
  coeffs_.resize(static_cast<std::size_t>(order) + 1);
  for (int i = 0; i <= order; ++i) {
    coeffs_[static_cast<std::size_t>(i)] = (i % 2 == 0 ? 1.0 : -1.0) / factorial(i);
  }
}

double ExpSeries::coefficient(int i) const { return coeffs_[static_cast<std::size_t>(i)]; }

double ExpSeries::operator()(double x) const {
  double s = 0.0;
  double power = 1.0;
  for (int i = 0; i <= order_; ++i) {
    s += coefficient(i) * power;
    power *= x;
  }
  return s;
}

ExpSeries expand_exp_ratio(int order) { return ExpSeries(order); }

RemainderBound remainder_bound_exp(double x, int order) {
  if (order < 0) throw DomainError("Taylor order must be >= 0");
  if (!(x >= 0.0)) throw DomainError("exp remainder bound needs x >= 0");
  return {order, std::pow(x, order + 1) / factorial(order + 1)};
}

ArrheniusTerm::ArrheniusTerm(int order, double kB, double Vm)
    : order_(order), kB_(kB), Vm_(Vm), series_(order) {}

std::vector<double> ArrheniusTerm::param_vector(double D0, double Q) const {
  std::vector<double> p(size());
  double power = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = D0 * power;
    power *= Q;
  }
  return p;
}

std::vector<double> ArrheniusTerm::param_jacobian(double D0, double Q) const {
  std::vector<double> jac(2 * size());
  for (int i = 0; i <= order_; ++i) {
    const auto row = static_cast<std::size_t>(i);
    jac[2 * row] = std::pow(Q, i);
    jac[2 * row + 1] = i == 0 ? 0.0 : i * D0 * std::pow(Q, i - 1);
  }
  return jac;
}

double ArrheniusTerm::feature_scale(int i, double T) const {
  const double kT = kB_ * T;
  return series_.coefficient(i) / std::pow(kT, i) * Vm_ / kT;
}

void ArrheniusTerm::feature_scales(double T, double* out) const {
  const double kT = kB_ * T;
  const double inv = 1.0 / kT;
  double power = Vm_ / kT;
  for (int i = 0; i <= order_; ++i) {
    out[i] = series_.coefficient(i) * power;
    power *= inv;
  }
}

double ArrheniusTerm::exact(double D0, double Q, double T) const {
  const double kT = kB_ * T;
  return D0 * std::exp(-Q / kT) * Vm_ / kT;
}

double ArrheniusTerm::truncated(double D0, double Q, double T) const {
  const double kT = kB_ * T;
  const double x = Q / kT;
  double s = 0.0, power = 1.0;
  for (int i = 0; i <= order_; ++i) {
    s += series_.coefficient(i) * power;
    power *= x;
  }
  return D0 * s * Vm_ / kT;
}

ArrheniusTerm decompose_arrhenius_term(double D0, double Q, int order, double kB, double Vm) {
  if (!(D0 > 0.0)) throw DomainError("Arrhenius prefactor D0 must be > 0");
  if (!(Q >= 0.0)) throw DomainError("activation energy Q must be >= 0");
  if (order < 0) throw DomainError("Taylor order must be >= 0");
  if (!(kB > 0.0)) throw DomainError("Boltzmann constant must be > 0");
  return ArrheniusTerm(order, kB, Vm);
}

}  // namespace reel
