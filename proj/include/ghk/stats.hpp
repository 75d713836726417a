#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace ghk::stats {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Summary summarize(const Eigen::VectorXd& x);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);
// sup_x |F_n(x) - Phi((x - mean)/sd)|
double ks_distance_normal(Eigen::VectorXd x, double mean, double sd);
// Asymptotic Kolmogorov critical value at level `level` for sample size n.
double ks_critical(std::size_t n, double level = 0.01);

// Approximate standard errors of sample skewness and excess kurtosis under normality.
double skewness_z(const Summary& s);
double kurtosis_z(const Summary& s);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd residuals;
  double r2 = 0.0;
};
OlsFit ols(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace ghk::stats
