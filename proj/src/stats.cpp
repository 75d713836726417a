#include "ghk/stats.hpp"

#include <algorithm>
#include <cmath>

#include "ghk/error.hpp"

namespace ghk::stats {

Summary summarize(const Eigen::VectorXd& x) {
  Summary s;
  s.n = std::size_t(x.size());
  if (s.n < 2) throw SpecError("summarize: need at least 2 samples");
  s.mean = x.mean();
  const Eigen::ArrayXd d = x.array() - s.mean;
  const double m2 = d.square().mean();
  const double m3 = d.cube().mean();
  const double m4 = d.square().square().mean();
  s.variance = m2 * double(s.n) / double(s.n - 1);
  if (m2 > 0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

double ks_distance_normal(Eigen::VectorXd x, double mean, double sd) {
  if (x.size() == 0) throw SpecError("ks_distance_normal: empty sample");
  if (!(sd > 0)) throw SpecError("ks_distance_normal: sd must be positive");
  std::sort(x.data(), x.data() + x.size());
  const double n = double(x.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double F = normal_cdf(x[i], mean, sd);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

double ks_critical(std::size_t n, double level) {
  return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(double(n));
}

double skewness_z(const Summary& s) { return s.skewness / std::sqrt(6.0 / double(s.n)); }
double kurtosis_z(const Summary& s) { return s.excess_kurtosis / std::sqrt(24.0 / double(s.n)); }

OlsFit ols(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw SpecError("ols: need two equal-length vectors of size >= 2");
  Eigen::MatrixXd A(x.size(), 2);
  A.col(0).setOnes();
  A.col(1) = x;
  const Eigen::Vector2d b = A.colPivHouseholderQr().solve(y);
  OlsFit f;
  f.intercept = b[0];
  f.slope = b[1];
  f.residuals = y - A * b;
  const double ss = (y.array() - y.mean()).square().sum();
  f.r2 = ss > 0 ? 1.0 - f.residuals.squaredNorm() / ss : 1.0;
  return f;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw SpecError("correlation: size mismatch");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double den = std::sqrt(da.square().sum() * db.square().sum());
  return den > 0 ? (da * db).sum() / den : 0.0;
}

}  // namespace ghk::stats
