#pragma once

#include <span>

#include <Eigen/Dense>

#include "ghk/kernel.hpp"

namespace ghk {

enum class FilterFamily {
  PurePower,           // C_n = n^{beta-1}, beta > 0
  TelescopingZeroSum,  // C_1 = 1/beta, C_n = (n^beta - (n-1)^beta)/beta, beta < 0
};

struct FilterSpec {
  double beta = 0.0;
  FilterFamily family = FilterFamily::PurePower;
  long length = 2000;
};

struct OpenInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v > lo && v < hi; }
};

OpenInterval beta_window(const KernelSpec& kernel);
double filtered_hurst(const KernelSpec& kernel, double beta);

FilterFamily family_for(double beta);
FilterSpec make_filter_spec(double beta, long length = 2000);
Eigen::VectorXd build_filter(const FilterSpec& spec);
Eigen::VectorXd build_filter(double beta, long length);
Eigen::VectorXd filter_partial_sums(const Eigen::VectorXd& C);

struct FilterTail {
  double sum_sq_tail = 0.0;  // bound on Σ_{m>length} C_m^2
  double residual = 0.0;     // telescoping only: |Σ_{m<=length} C_m| = |length^beta / beta|
};
FilterTail filter_tail(const FilterSpec& spec);

struct FilteredPath {
  long first_index = 0;  // U(first_index), ..., U(first_index + values.size() - 1)
  Eigen::VectorXd values;
};
// U(n) = Σ_{m=1}^{L} C_m X(n-m) for n = L+1..N (1-based path X(1..N)).
FilteredPath apply_filter(const Eigen::VectorXd& X, const Eigen::VectorXd& C);

// (1/beta)[(t-s)_+^beta - (-s)_+^beta], with (y)_+^beta = 0 for y <= 0.
double l_beta(double beta, double t, double s);

IntegratedKernelValue h_beta_evaluate(const KernelSpec& kernel, double beta, double t,
                                      std::span<const double> x, double rel_tol = 1e-10);
NormEstimate h_beta_norm_sq(const KernelSpec& kernel, double beta, double t, double rel_tol = 1e-10);

// gamma_U(n) = Σ_{m,m'} C_m C_m' gamma_X(n - m + m') for n = 0..n_max.
// gamma_x must hold lags 0..n_max + L - 1.
Eigen::VectorXd filtered_acf(const Eigen::VectorXd& gamma_x, const Eigen::VectorXd& C, long n_max);

}  // namespace ghk
