#pragma once

// Taylor-series decomposition of parameter dependence that is not already an
// inner product of parameter functions and state features.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace reel {

/// F(theta) ~ sum_i (theta - a)^i / i! * F^(i)(a).
/// param_terms describe the parameter-side factors, feature_scalers hold F^(i)(a).
struct TaylorDecomposition {
  double center = 0.0;
  int order = 0;
  std::vector<std::string> param_terms;
  std::vector<double> feature_scalers;

  /// [(theta - a)^i / i!] for i = 0..order.
  std::vector<double> param_values(double theta) const;
  /// Inner product of param_values(theta) with feature_scalers.
  double evaluate(double theta) const;
};

/// derivative(i) must return the i-th derivative of F at `center`.
TaylorDecomposition taylor_decompose(double center, int order,
                                     const std::function<double(int)>& derivative);

/// Partial sums of e^{-x} = sum_i (-x)^i / i!.
class ExpSeries {
 public:
  explicit ExpSeries(int order);
  int order() const noexcept { return order_; }
  /// (-1)^i / i!
  double coefficient(int i) const;
  double operator()(double x) const;

 private:
  int order_;
  std::vector<double> coeffs_;
};

/// Throws DomainError for order < 0.
ExpSeries expand_exp_ratio(int order);

struct RemainderBound {
  int order = 0;
  double bound_value = 0.0;
};

/// Lagrange bound for the order-n partial sum of e^{-x} on x >= 0:
/// x^{n+1} / (n+1)!, since every derivative of e^{-x} is at most 1 there.
/// Throws DomainError when x < 0.
RemainderBound remainder_bound_exp(double x, int order);

/// One Arrhenius mobility term D0 exp(-Q / (kB T)) Vm / (kB T) * base, split as
///   param_vector  = [D0, D0 Q, ..., D0 Q^order]
///   feature_i     = (-1)^i / (i! (kB T)^i) * Vm / (kB T) * base
/// so that their inner product is the truncated series.
class ArrheniusTerm {
 public:
  ArrheniusTerm(int order, double kB, double Vm);

  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(order_) + 1; }

  std::vector<double> param_vector(double D0, double Q) const;
  /// Rows i = 0..order, columns (d/dD0, d/dQ).
  std::vector<double> param_jacobian(double D0, double Q) const;
  /// Multiplier of base_field in feature i at temperature T.
  double feature_scale(int i, double T) const;
  /// feature_scale(i, T) for i = 0..order into out, without pow.
  void feature_scales(double T, double* out) const;

  /// Exact D0 exp(-Q/(kB T)) Vm/(kB T).
  double exact(double D0, double Q, double T) const;
  /// Inner product of param_vector and the feature scales.
  double truncated(double D0, double Q, double T) const;

 private:
  int order_;
  double kB_;
  double Vm_;
  ExpSeries series_;
};

/// Throws DomainError unless D0 > 0, Q >= 0, order >= 0, kB > 0.
ArrheniusTerm decompose_arrhenius_term(double D0, double Q, int order, double kB, double Vm = 1.0);

}  // namespace reel
