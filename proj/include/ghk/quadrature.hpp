#pragma once

// Thin wrappers over Boost.Math quadrature. Integrands that are singular at an
// endpoint receive offsets (distance from the left end, distance from the right
// end) so that points near the singularity are represented without cancellation.

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ghk/error.hpp"

namespace ghk::quad {

struct Estimate {
  double value = 0.0;
  double abs_error = 0.0;

  Estimate& operator+=(const Estimate& o) {
    value += o.value;
    abs_error += o.abs_error;
    return *this;
  }
  friend Estimate operator+(Estimate a, const Estimate& b) { return a += b; }
  Estimate scaled(double c) const { return {c * value, std::abs(c) * abs_error}; }
};

inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_engine() {
  thread_local boost::math::quadrature::tanh_sinh<double> engine(15);
  return engine;
}

inline boost::math::quadrature::exp_sinh<double>& exp_sinh_engine() {
  thread_local boost::math::quadrature::exp_sinh<double> engine(12);
  return engine;
}

// ∫_a^b f, where f(dl, dr) is called with dl = x - a and dr = b - x.
template <class F>
Estimate offsets(F&& f, double a, double b, double rel_tol = 1e-10) {
  if (!(b > a)) return {};
  double err = 0.0, l1 = 0.0;
  auto g = [&](double x, double xc) {
    // Boost passes xc = a - x (<= 0) on the left half and b - x on the right half.
    (void)x;
    const double dl = xc < 0 ? -xc : (b - a) - xc;
    const double dr = xc < 0 ? (b - a) + xc : xc;
    const double v = f(dl, dr);
    // Integrable endpoint singularities can overflow at the outermost abscissae,
    // whose weights are far below double resolution.
    if (!std::isfinite(v) && std::min(dl, dr) < 1e-12 * (b - a)) return 0.0;
    return v;
  };
  double v;
  try {
    v = tanh_sinh_engine().integrate(g, a, b, rel_tol, &err, &l1);
  } catch (const std::exception& e) {
    throw NumericalError(std::string("tanh-sinh quadrature failed: ") + e.what());
  }
  if (!std::isfinite(v)) throw NumericalError("tanh-sinh quadrature produced a non-finite value");
  return {v, err};
}

// ∫_a^∞ f(d) dd with d = x - a. Singular behaviour is allowed at d = 0; the
// piece beyond `scale` must be smooth.
template <class F>
Estimate half_line(F&& f, double scale = 1.0, double rel_tol = 1e-10) {
  Estimate near = offsets([&](double dl, double) { return f(dl); }, 0.0, scale, rel_tol);
  double err = 0.0, l1 = 0.0;
  double v;
  try {
    v = exp_sinh_engine().integrate([&](double u) { return f(scale + u); }, 0.0,
                                    std::numeric_limits<double>::infinity(), rel_tol, &err, &l1);
  } catch (const std::exception& e) {
    throw NumericalError(std::string("exp-sinh quadrature failed: ") + e.what());
  }
  if (!std::isfinite(v)) throw NumericalError("exp-sinh quadrature produced a non-finite value");
  return near + Estimate{v, err};
}

// Adaptive Gauss-Kronrod (7/15) for smooth integrands on a finite interval.
template <class F>
Estimate gauss_kronrod(F&& f, double a, double b, double rel_tol = 1e-10, unsigned max_depth = 15) {
  if (!(b > a)) return {};
  double err = 0.0, l1 = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, rel_tol,
                                                                           &err, &l1);
  if (!std::isfinite(v)) throw NumericalError("Gauss-Kronrod quadrature produced a non-finite value");
  return {v, err};
}

// Single non-adaptive Gauss-Kronrod panel; error is |K15 - G7|.
template <class F>
Estimate gk_panel(F&& f, double a, double b) {
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err);
  return {v, err};
}

}  // namespace ghk::quad
