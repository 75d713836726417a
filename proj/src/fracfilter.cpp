#include "ghk/fracfilter.hpp"

#include <algorithm>
#include <cmath>

#include "ghk/correlate.hpp"
#include "ghk/error.hpp"
#include "ghk/quadrature.hpp"

namespace ghk {

namespace {

void require_beta(const KernelSpec& kernel, double beta) {
  if (beta == 0.0) throw SpecError("beta must be nonzero");
  auto w = beta_window(kernel);
  if (!w.contains(beta))
    throw SpecError("beta=" + std::to_string(beta) + " outside the open window (" + std::to_string(w.lo) + ", " +
                    std::to_string(w.hi) + "): the filtered kernel is not square integrable");
}

double pos_pow(double y, double p) { return y > 0.0 ? std::pow(y, p) : 0.0; }

// (u + v)^p - v^p for u, v > 0 without cancellation.
double pow_diff(double u, double v, double p) { return std::pow(v, p) * std::expm1(p * std::log1p(u / v)); }

}  // namespace

OpenInterval beta_window(const KernelSpec& kernel) {
  const double hi = -kernel.alpha - kernel.k / 2.0;
  return {hi - 1.0, hi};
}

double filtered_hurst(const KernelSpec& kernel, double beta) { return kernel.alpha + beta + kernel.k / 2.0 + 1.0; }

FilterFamily family_for(double beta) {
  return beta < 0 ? FilterFamily::TelescopingZeroSum : FilterFamily::PurePower;
}

FilterSpec make_filter_spec(double beta, long length) { return {beta, family_for(beta), length}; }

Eigen::VectorXd build_filter(const FilterSpec& s) {
  if (s.beta == 0.0 || !std::isfinite(s.beta)) throw SpecError("build_filter: beta must be nonzero");
  if (s.length < 1) throw SpecError("build_filter: length must be positive");
  if (s.family == FilterFamily::PurePower && s.beta < 0)
    throw SpecError("build_filter: beta < 0 requires the zero-sum (telescoping) family");
  if (s.family == FilterFamily::TelescopingZeroSum && s.beta > 0)
    throw SpecError("build_filter: the telescoping zero-sum family requires beta < 0");
  Eigen::VectorXd C(s.length);
  if (s.family == FilterFamily::PurePower) {
    for (long n = 1; n <= s.length; ++n) C[n - 1] = std::pow(double(n), s.beta - 1.0);
  } else {
    C[0] = 1.0 / s.beta;
    for (long n = 2; n <= s.length; ++n)
      C[n - 1] = pow_diff(1.0, double(n - 1), s.beta) / s.beta;
  }
  return C;
}

Eigen::VectorXd build_filter(double beta, long length) { return build_filter(make_filter_spec(beta, length)); }

Eigen::VectorXd filter_partial_sums(const Eigen::VectorXd& C) {
  Eigen::VectorXd s(C.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < C.size(); ++j) s[j] = (acc += C[j]);
  return s;
}

FilterTail filter_tail(const FilterSpec& s) {
  const double p = 2.0 * s.beta - 2.0;
  FilterTail t;
  if (s.family == FilterFamily::PurePower) {
    t.sum_sq_tail = std::pow(double(s.length), p + 1.0) / (-p - 1.0);
  } else {
    // |C_n| <= (n-1)^{beta-1} by the mean value theorem.
    t.sum_sq_tail = std::pow(double(std::max(1L, s.length - 1)), p + 1.0) / (-p - 1.0);
    t.residual = std::abs(std::pow(double(s.length), s.beta) / s.beta);
  }
  return t;
}

FilteredPath apply_filter(const Eigen::VectorXd& X, const Eigen::VectorXd& C) {
  const long N = X.size(), L = C.size();
  if (L < 1) throw SpecError("apply_filter: empty filter");
  if (N <= L) throw SpecError("apply_filter: path of length " + std::to_string(N) +
                              " is not longer than the filter (" + std::to_string(L) + ")");
  return {L + 1, causal_filter(C, X.head(N - 1))};
}

double l_beta(double beta, double t, double s) {
  if (beta == 0.0) throw SpecError("l_beta: beta must be nonzero");
  if (s < 0.0 && t > 0.0) return pow_diff(t, -s, beta) / beta;
  return (pos_pow(t - s, beta) - pos_pow(-s, beta)) / beta;
}

IntegratedKernelValue h_beta_evaluate(const KernelSpec& kernel, double beta, double t, std::span<const double> x,
                                      double rel_tol) {
  require_beta(kernel, beta);
  if (!(t > 0)) throw SpecError("h_beta_evaluate: t must be positive");
  if (int(x.size()) != kernel.k) throw SpecError("h_beta_evaluate: point has wrong dimension");
  IntegratedKernelValue out{t, std::vector<double>(x.begin(), x.end()), 0.0, 0.0};
  const double m = *std::max_element(x.begin(), x.end());
  if (m >= t) return out;
  std::vector<double> y(kernel.k);
  auto g_at = [&](double a, double dl) {
    for (int j = 0; j < kernel.k; ++j) y[j] = (a - x[j]) + dl;
    return evaluate(kernel, y);
  };
  quad::Estimate e;
  if (m < 0.0) {
    // s in (m, 0): -s = dr, t - s = t + dr
    e += quad::offsets([&](double dl, double dr) { return pow_diff(t, dr, beta) / beta * g_at(m, dl); }, m, 0.0,
                       rel_tol);
  }
  const double a = std::max(m, 0.0);
  // s in (a, t): t - s = dr, (-s)_+ = 0
  e += quad::offsets([&](double dl, double dr) { return std::pow(dr, beta) / beta * g_at(a, dl); }, a, t, rel_tol);
  out.value = e.value;
  out.abs_error_estimate = e.abs_error;
  return out;
}

NormEstimate h_beta_norm_sq(const KernelSpec& kernel, double beta, double t, double rel_tol) {
  require_beta(kernel, beta);
  if (!(t > 0)) throw SpecError("h_beta_norm_sq: t must be positive");
  const double delta = 2.0 * kernel.alpha + kernel.k + 1.0;
  const double p = beta + delta;
  // s = -d < 0: l(s) [(t-s)^p - (-s)^p]
  auto neg = quad::half_line(
      [&](double d) { return pow_diff(t, d, beta) / beta * pow_diff(t, d, p); }, t, rel_tol);
  // s in (0, t): (t-s)^{beta} (t-s)^{p} / beta
  auto pos = quad::offsets([&](double, double dr) { return std::pow(dr, beta + p) / beta; }, 0.0, t, rel_tol);
  auto I = neg + pos;
  const double C = c_constant_auto(kernel).value;
  const double factor = 2.0 * C * std::beta(beta + 1.0, delta) / beta;
  auto r = I.scaled(factor);
  if (!(r.value > 0) || r.abs_error > 1e-6 * r.value)
    throw NumericalError("h_beta_norm_sq: quadrature did not converge (beta near the window boundary?)");
  return {r.value, r.abs_error};
}

Eigen::VectorXd filtered_acf(const Eigen::VectorXd& gamma_x, const Eigen::VectorXd& C, long n_max) {
  const long L = C.size();
  if (n_max < 0) throw SpecError("filtered_acf: n_max < 0");
  if (gamma_x.size() < n_max + L) throw SpecError("filtered_acf: gamma_x needs lags 0..n_max+L-1");
  const Eigen::VectorXd R = lagged_cross_sums(C, C, L - 1);
  // u(i) = R(i - L) for i = 1..2L-1 (zero-padded), v(i) = gamma_x(|i - L|).
  const Eigen::Index M = n_max + 2 * L - 1;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(M), v(M);
  for (long d = -(L - 1); d <= L - 1; ++d) u[d + L - 1] = R[std::abs(d)];
  for (Eigen::Index i = 0; i < M; ++i) v[i] = gamma_x[std::abs(long(i) - (L - 1))];
  return lagged_cross_sums(u, v, n_max);
}

}  // namespace ghk
