#include "ghk/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "ghk/error.hpp"
#include "ghk/parallel.hpp"
#include "ghk/quadrature.hpp"

namespace ghk {

namespace {

using GL8 = boost::math::quadrature::gauss<double, 8>;

long floor_nt(long N, double t) { return long(std::floor(double(N) * t + 1e-9)); }

double pair_inner(const std::vector<double>& a, const std::vector<double>& b, int skip, double t) {
  double pa = 1.0, pb = 1.0, p = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (int(j) == skip) continue;
    pa *= beta_integral(a[j], b[j]);
    pb *= beta_integral(b[j], a[j]);
    p += a[j] + b[j] + 1.0;
  }
  if (p <= -1.0) return std::numeric_limits<double>::infinity();
  return (pa + pb) * std::pow(t, p + 2.0) / ((p + 1.0) * (p + 2.0));
}

const KernelSpec& kernel_or_throw(const ChaosConfig& c, const char* what) {
  const KernelSpec* g = kernel_of(c);
  if (!g) throw SpecError(std::string(what) + ": requires a kernel-generated (LRD) configuration");
  return *g;
}

}  // namespace

double DiscretizedKernel::at(std::span<const long> cell) const {
  Eigen::Index f = 0;
  for (int j = 0; j < kernel.k; ++j) {
    if (cell[j] < lo || cell[j] > hi) return 0.0;
    f = f * side() + (cell[j] - lo);
  }
  return values[f];
}

double window_tail_bound(const KernelSpec& kernel, double t, double window) {
  require_valid(kernel);
  if (!(window > 0)) return std::numeric_limits<double>::infinity();
  const auto& terms = kernel.envelope->terms;
  double total = 0.0;
  for (int j0 = 0; j0 < kernel.k; ++j0)
    for (const auto& m : terms)
      for (const auto& mp : terms) {
        const double q = m.gamma[j0] + mp.gamma[j0];
        const double outer = std::pow(window, q + 1.0) / (-q - 1.0);
        total += std::abs(m.coeff * mp.coeff) * outer * pair_inner(m.gamma, mp.gamma, j0, t);
      }
  return total;
}

DiscretizedKernel discretize_limit_kernel(const KernelSpec& kernel, double t, long N, double window,
                                          double tail_tol, std::size_t max_cells) {
  require_valid(kernel);
  if (!(t > 0)) throw SpecError("discretize_limit_kernel: t must be positive");
  if (N < 1) throw SpecError("discretize_limit_kernel: N must be positive");
  if (!(window >= 0)) throw SpecError("discretize_limit_kernel: window must be nonnegative");
  DiscretizedKernel D;
  D.kernel = kernel;
  D.t = t;
  D.N = N;
  D.window = window;
  D.lo = -long(std::ceil(double(N) * window - 1e-9));
  D.hi = long(std::ceil(double(N) * t - 1e-9)) - 1;
  const int k = kernel.k;
  const long S = D.side();
  const double cells = std::pow(double(S), k);
  if (cells > double(max_cells))
    throw ResourceError("discretize_limit_kernel: " + std::to_string(cells) + " cells exceed the cap");
  D.tail_bound = window_tail_bound(kernel, t, window);
  const double norm = ht_norm_sq(kernel, t);
  if (!(D.tail_bound <= tail_tol * norm))
    throw SpecError("discretize_limit_kernel: window too small, envelope tail " + std::to_string(D.tail_bound) +
                    " exceeds " + std::to_string(tail_tol) + " * ||h_t||^2");

  const long Nt = floor_nt(N, t);
  const double scale = std::pow(double(N), -kernel.alpha - 1.0);
  D.values = Eigen::VectorXd::Zero(Eigen::Index(cells));
  // A cell i is reached from the offset vector d = max(i) - i (min d = 0) and m = max(i):
  // its value sums r -> g(r + d) over max(1, -m) <= r <= Nt - 1 - m, i.e. output times 0..Nt-1.
  parallel_for(0, std::ptrdiff_t(cells), [&](std::ptrdiff_t fd) {
    std::vector<long> d(k);
    std::ptrdiff_t rest = fd;
    for (int j = k - 1; j >= 0; --j) {
      d[j] = long(rest % S);
      rest /= S;
    }
    if (*std::min_element(d.begin(), d.end()) != 0) return;
    const long maxd = *std::max_element(d.begin(), d.end());
    const long m_lo = D.lo + maxd;
    const long r_max = Nt - 1 - m_lo;
    if (r_max < 1) return;
    std::vector<double> prefix(r_max + 1, 0.0), y(k);
    for (long r = 1; r <= r_max; ++r) {
      for (int j = 0; j < k; ++j) y[j] = double(r + d[j]);
      prefix[r] = prefix[r - 1] + evaluate(kernel, y);
    }
    for (long m = m_lo; m <= D.hi; ++m) {
      const long R = Nt - 1 - m;
      if (R < 1) break;
      Eigen::Index f = 0;
      for (int j = 0; j < k; ++j) f = f * S + (m - d[j] - D.lo);
      const long L = std::max(1L, -m);
      if (L > R) continue;
      D.values[f] = scale * (prefix[R] - prefix[L - 1]);
    }
  });
  return D;
}

L2Error l2_discretization_error(const KernelSpec& kernel, double t, long N, const L2ErrorOptions& opts) {
  require_valid(kernel);
  if (kernel.k > 2) throw SpecError("l2_discretization_error: k <= 2 only");
  const int k = kernel.k;
  const double T = opts.window >= 0 ? opts.window : (k == 1 ? 64.0 : 4.0);
  const auto D = discretize_limit_kernel(kernel, t, N, T, std::numeric_limits<double>::infinity());
  const double h_tol = std::max(1e-12, opts.rel_tol);
  const long S = D.side();
  const double inv_n = 1.0 / double(N);

  L2Error out;
  out.N = N;
  out.norm_sq = ht_norm_sq(kernel, t);
  std::vector<double> part;

  if (k == 1) {
    part.assign(S, 0.0);
    const long Nt = floor_nt(N, t);
    parallel_for(0, S, [&](std::ptrdiff_t c) {
      const long i = D.lo + long(c);
      const double a = i * inv_n, b = std::min((i + 1) * inv_n, t);
      if (!(b > a)) return;
      const double v = D.values[c];
      auto f = [&](double x) {
        const double e = v - ht_evaluate(kernel, t, {&x, 1}, h_tol).value;
        return e * e;
      };
      // Cells next to 0 and t see the (x)^{α+1} behaviour of h_t.
      const bool rough = std::abs(i) <= 4 || i >= Nt - 4;
      part[c] = rough ? quad::offsets([&](double dl, double) { return f(a + dl); }, a, b, 1e-8).value
                      : GL8::integrate(f, a, b);
    });
    const double g1 = std::abs(evaluate(kernel, std::vector<double>{1.0}));
    const double al = kernel.alpha;
    const double kappa = std::pow(1.0 - 1.0 / (double(N) * T), al - 1.0);
    const double A = t * kappa * std::abs(al) * g1 * inv_n;
    const double B = (t - double(Nt) * inv_n) * g1;
    out.far_field_bound = A * A * std::pow(T, 2 * al - 1) / (1 - 2 * al) +
                          2 * A * B * std::pow(T, 2 * al) / (-2 * al) +
                          B * B * std::pow(T, 2 * al + 1) / (-2 * al - 1);
  } else {
    part.assign(S * S, 0.0);
    parallel_for(0, S * S, [&](std::ptrdiff_t c) {
      const long i1 = D.lo + long(c / S), i2 = D.lo + long(c % S);
      const double a1 = i1 * inv_n, b1 = std::min((i1 + 1) * inv_n, t);
      const double a2 = i2 * inv_n, b2 = std::min((i2 + 1) * inv_n, t);
      if (!(b1 > a1) || !(b2 > a2)) return;
      const double v = D.values[c];
      auto sq = [&](double x1, double x2) {
        const double p[2] = {x1, x2};
        const double e = v - ht_evaluate(kernel, t, p, h_tol).value;
        return e * e;
      };
      if (i1 != i2) {
        part[c] = GL8::integrate([&](double x1) { return GL8::integrate([&](double x2) { return sq(x1, x2); }, a2, b2); },
                                 a1, b1);
        return;
      }
      // h_t is singular on the diagonal: split the inner range at x2 = x1.
      part[c] = GL8::integrate(
          [&](double x1) {
            return quad::offsets([&](double dl, double) { return sq(x1, a2 + dl); }, a2, x1, 1e-7).value +
                   quad::offsets([&](double dl, double) { return sq(x1, x1 + dl); }, x1, b2, 1e-7).value;
          },
          a1, b1);
    });
    const double c = 1.0 + std::pow(2.0, -kernel.alpha);
    out.far_field_bound = c * c * window_tail_bound(kernel, t, T);
  }
  for (double p : part) out.abs_sq_window += p;
  out.rel_error = std::sqrt(out.abs_sq_window / out.norm_sq);
  out.rel_error_upper = std::sqrt((out.abs_sq_window + out.far_field_bound) / out.norm_sq);
  return out;
}

EnsembleResult summarize_ensemble(Eigen::MatrixXd samples, Eigen::VectorXd t_grid, long N, NoiseSpec noise) {
  EnsembleResult e;
  e.R = samples.rows();
  if (e.R < 2) throw SpecError("ensemble: need at least 2 replications");
  e.samples = std::move(samples);
  e.t_grid = std::move(t_grid);
  e.N = N;
  e.noise = noise;
  for (Eigen::Index j = 0; j < e.samples.cols(); ++j) {
    const Eigen::VectorXd col = e.samples.col(j);
    e.summary.push_back(stats::summarize(col));
    const double sd = std::sqrt(e.summary.back().variance);
    e.ks.push_back(sd > 0 ? stats::ks_distance_normal(col, e.summary.back().mean, sd) : 1.0);
  }
  return e;
}

double config_hurst(const ChaosConfig& config) {
  if (const KernelSpec* g = kernel_of(config)) return hurst(*g);
  return 0.5;
}

EnsembleResult simulate_limit_process(const ChaosConfig& config, const Eigen::VectorXd& t_grid, long N, long R,
                                      SimMode mode) {
  if (config.noise.law != NoiseLaw::Gaussian)
    throw SpecError("simulate_limit_process: Gaussian noise required");
  if (N < 1) throw SpecError("simulate_limit_process: N must be positive");
  if (R < 2) throw SpecError("simulate_limit_process: need at least 2 replications");
  if (t_grid.size() == 0) throw SpecError("simulate_limit_process: empty t grid");
  const PathSimulator sim(config, mode);
  const double H = config_hurst(config);
  Eigen::MatrixXd samples(R, t_grid.size());
  parallel_for(0, R, [&](std::ptrdiff_t r) {
    const Eigen::VectorXd X = sim.path(N, substream(config.noise, std::uint64_t(r)));
    samples.row(r) = partial_sum_process(X, H, t_grid).transpose();
  });
  return summarize_ensemble(std::move(samples), t_grid, N, config.noise);
}

double exact_limit_variance(const ChaosConfig& config, long N, double t) {
  const long m = floor_nt(N, t);
  if (m < 1) throw SpecError("exact_limit_variance: [Nt] must be positive");
  const auto acf = acf_exact(config, m - 1);
  return exact_partial_sum_variance(acf.gamma, m) * std::pow(double(N), -2.0 * config_hurst(config));
}

std::vector<long> power_of_two_grid(int a, int b) {
  if (a < 0 || b < a || b > 40) throw SpecError("power_of_two_grid: need 0 <= a <= b <= 40");
  std::vector<long> g;
  for (int e = a; e <= b; ++e) g.push_back(1L << e);
  return g;
}

ScalingFit variance_scaling_fit(const std::vector<long>& N, const Eigen::VectorXd& variances, long discard) {
  if (Eigen::Index(N.size()) != variances.size()) throw SpecError("scaling fit: N grid and variances differ in size");
  if (discard < 0) throw SpecError("scaling fit: discard must be nonnegative");
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (N[i] < 1 || (i > 0 && N[i] <= N[i - 1])) throw SpecError("degenerate grid: N must be positive and increasing");
    if (!(variances[i] > 0) || !std::isfinite(variances[i]))
      throw SpecError("degenerate grid: variances must be positive and finite");
  }
  const long used = long(N.size()) - discard;
  if (used < 2) throw SpecError("degenerate grid: fewer than 2 points remain after discarding the smallest N");
  Eigen::VectorXd lx(used), ly(used);
  for (long i = 0; i < used; ++i) {
    lx[i] = std::log(double(N[discard + i]));
    ly[i] = std::log(variances[discard + i]);
  }
  const auto fit = stats::ols(lx, ly);
  ScalingFit s;
  s.N = N;
  s.variances = variances;
  s.discarded = discard;
  s.slope = fit.slope;
  s.intercept = fit.intercept;
  s.r2 = fit.r2;
  s.residuals = fit.residuals;
  if (!std::isfinite(s.slope)) throw NumericalError("scaling fit: non-finite slope");
  return s;
}

ScalingFit variance_scaling_fit(const ChaosConfig& config, const std::vector<long>& N, long discard) {
  if (N.empty()) throw SpecError("degenerate grid: empty N grid");
  const long n_max = *std::max_element(N.begin(), N.end());
  const auto acf = acf_exact(config, n_max - 1);
  Eigen::VectorXd v(N.size());
  for (std::size_t i = 0; i < N.size(); ++i) v[i] = exact_partial_sum_variance(acf.gamma, N[i]);
  auto s = variance_scaling_fit(N, v, discard);
  s.expected_slope = 2.0 * config_hurst(config);
  return s;
}

ScalingFit variance_scaling_fit(const ChaosConfig& config, const FilterSpec& filter, const std::vector<long>& N,
                                long discard) {
  const KernelSpec& g = kernel_or_throw(config, "filtered scaling fit");
  if (N.empty()) throw SpecError("degenerate grid: empty N grid");
  const double Hb = filtered_hurst(g, filter.beta);
  const Eigen::VectorXd C = build_filter(filter);
  const long L = C.size();
  const long n_max = *std::max_element(N.begin(), N.end()) - 1;
  const auto acf_x = acf_exact(config, n_max + L - 1);
  const Eigen::VectorXd gu = filtered_acf(acf_x.gamma, C, n_max);
  Eigen::VectorXd v(N.size());
  for (std::size_t i = 0; i < N.size(); ++i) v[i] = exact_partial_sum_variance(gu, N[i]);
  auto s = variance_scaling_fit(N, v, discard);
  s.expected_slope = 2.0 * Hb;
  return s;
}

CltReport clt_ensemble(const ChaosConfig& config, long N, long R) {
  CltReport rep;
  rep.sigma2 = long_run_variance(config);  // rejects LRD configurations
  Eigen::VectorXd t1(1);
  t1[0] = 1.0;
  ChaosConfig c = config;
  const PathSimulator sim(c);
  if (N < 1) throw SpecError("clt_ensemble: N must be positive");
  if (R < 2) throw SpecError("clt_ensemble: need at least 2 replications");
  Eigen::MatrixXd samples(R, 1);
  parallel_for(0, R, [&](std::ptrdiff_t r) {
    const Eigen::VectorXd X = sim.path(N, substream(c.noise, std::uint64_t(r)));
    samples(r, 0) = X.sum() / std::sqrt(double(N));
  });
  rep.ensemble = summarize_ensemble(std::move(samples), t1, N, c.noise);
  const double sd = std::sqrt(rep.sigma2);
  rep.ks = stats::ks_distance_normal(rep.ensemble.samples.col(0), 0.0, sd);
  rep.ks_critical = stats::ks_critical(std::size_t(R));
  const auto& s = rep.ensemble.summary.front();
  rep.variance_rel_error = std::abs(s.variance / rep.sigma2 - 1.0);
  rep.skew_z = stats::skewness_z(s);
  rep.kurt_z = stats::kurtosis_z(s);
  return rep;
}

double moment_ratio(const Eigen::VectorXd& samples, double p) {
  if (samples.size() < 10) throw SpecError("moment_ratio: insufficient samples (need at least 10)");
  if (!(p > 2.0) || !std::isfinite(p)) throw SpecError("moment_ratio: p must be finite and > 2");
  const double mp = samples.array().abs().pow(p).mean();
  const double m2 = samples.array().square().mean();
  if (!(m2 > 0)) throw NumericalError("moment_ratio: zero second moment");
  return std::pow(mp, 1.0 / p) / std::sqrt(m2);
}

double cross_covariance_limit(const ChaosConfig& p, const ChaosConfig& q, double t1, double t2) {
  if (kernel_of(p) || kernel_of(q))
    throw SpecError("non-summable pair: kernel-generated coefficients have non-summable cross-covariances");
  if (!(t1 >= 0) || !(t2 >= 0)) throw SpecError("cross_covariance_limit: times must be nonnegative");
  validate_config(p);
  validate_config(q);
  if (order(p) != order(q)) return 0.0;
  ChaosConfig pp = p, qq = q;
  pp.M = qq.M = std::max(p.M, q.M);
  const auto gp = build_coefficients(pp), gq = build_coefficients(qq);
  return std::min(t1, t2) * cross_acf(gp, gq, pp.M - 1).sum();
}

std::vector<std::vector<double>> halton_probes(int dim, int count) {
  static constexpr int bases[] = {2, 3, 5, 7};
  if (dim < 0 || dim > 4) throw SpecError("halton_probes: dimension must be in [0, 4]");
  std::vector<std::vector<double>> pts;
  if (dim == 0) return {std::vector<double>{}};
  for (int n = 1; n <= count; ++n) {
    std::vector<double> p(dim);
    for (int j = 0; j < dim; ++j) {
      double f = 1.0, r = 0.0;
      for (int i = n; i > 0; i /= bases[j]) {
        f /= bases[j];
        r += f * (i % bases[j]);
      }
      p[j] = 4.0 * r - 2.0;
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

ContractionResult contraction_integral(const KernelSpec& kernel1, const KernelSpec& kernel2, double t,
                                       std::optional<std::vector<std::vector<double>>> probes) {
  require_valid(kernel1);
  require_valid(kernel2);
  if (kernel1.k > 2 || kernel2.k > 2) throw SpecError("contraction_integral: orders p, q <= 2 only");
  if (!(t > 0)) throw SpecError("contraction_integral: t must be positive");
  const KernelSpec g1 = kernel1.symmetric ? kernel1 : symmetrize(kernel1);
  const KernelSpec g2 = kernel2.symmetric ? kernel2 : symmetrize(kernel2);
  const int p = g1.k, q = g2.k, dim = p + q - 2;
  ContractionResult res;
  res.probes = probes ? *probes : halton_probes(dim);
  for (const auto& pr : res.probes) {
    if (int(pr.size()) != dim) throw SpecError("contraction_integral: probe has wrong dimension");
    std::vector<double> x1(pr.begin(), pr.begin() + (p - 1)), x2(pr.begin() + (p - 1), pr.end());
    x1.push_back(0.0);
    x2.push_back(0.0);
    auto F = [&](double y) {
      x1.back() = y;
      x2.back() = y;
      return ht_evaluate(g1, t, x1, 1e-11).value * ht_evaluate(g2, t, x2, 1e-11).value;
    };
    std::vector<double> br{0.0};
    for (double c : pr)
      if (c < t) br.push_back(c);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    quad::Estimate e = quad::half_line([&](double d) { return F(br.front() - d); }, 1.0, 1e-9);
    br.push_back(t);
    for (std::size_t j = 0; j + 1 < br.size(); ++j)
      e += quad::offsets([&](double dl, double) { return F(br[j] + dl); }, br[j], br[j + 1], 1e-9);
    res.values.push_back(e.value);
    res.max_abs = std::max(res.max_abs, std::abs(e.value));
  }
  return res;
}

std::string to_string(BlockTag tag) {
  switch (tag) {
    case BlockTag::S1: return "S1";
    case BlockTag::S2: return "S2";
    case BlockTag::L: return "L";
    case BlockTag::F: return "F";
  }
  return "?";
}

BlockTag block_tag_from_string(const std::string& s) {
  if (s == "S1") return BlockTag::S1;
  if (s == "S2") return BlockTag::S2;
  if (s == "L") return BlockTag::L;
  if (s == "F") return BlockTag::F;
  throw SpecError("unknown block tag '" + s + "' (expected S1, S2, L or F)");
}

void validate_component(const MixedComponent& c) {
  const bool finite = kernel_of(c.config) == nullptr;
  const int k = order(c.config);
  const std::string who = "tag/definition mismatch for '" + c.name + "' (" + to_string(c.tag) + "): ";
  switch (c.tag) {
    case BlockTag::S1:
    case BlockTag::S2:
      if (!finite) throw SpecError(who + "SRD blocks need finite-support coefficients");
      if (c.filter) throw SpecError(who + "SRD blocks are not filtered");
      if ((c.tag == BlockTag::S1) != (k == 1)) throw SpecError(who + "S1 is order 1, S2 is order >= 2");
      long_run_variance(c.config);
      break;
    case BlockTag::L:
      if (finite) throw SpecError(who + "LRD blocks need a kernel");
      if (c.filter) throw SpecError(who + "use tag F for filtered blocks");
      validate_config(c.config);
      break;
    case BlockTag::F:
      if (finite) throw SpecError(who + "fLRD blocks need a kernel");
      if (!c.filter) throw SpecError(who + "fLRD blocks need a filter");
      filtered_hurst(*kernel_of(c.config), c.filter->beta);
      build_filter(*c.filter);
      validate_config(c.config);
      break;
  }
}

MixedReport multivariate_mixed_check(const std::vector<MixedComponent>& components, long N, long R,
                                     const NoiseSpec& noise) {
  if (components.empty()) throw SpecError("multivariate_mixed_check: no components");
  if (N < 1 || R < 2) throw SpecError("multivariate_mixed_check: need N >= 1 and R >= 2");
  for (const auto& c : components) validate_component(c);
  const std::size_t nc = components.size();
  std::vector<PathSimulator> sims;
  std::vector<Eigen::VectorXd> filters(nc);
  std::vector<double> norm(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = components[j];
    sims.emplace_back(c.config);
    double H = config_hurst(c.config);
    if (c.filter) {
      filters[j] = build_filter(*c.filter);
      H = filtered_hurst(*kernel_of(c.config), c.filter->beta);
    }
    norm[j] = std::pow(double(N), -H);
  }
  MixedReport rep;
  rep.samples.resize(R, nc);
  parallel_for(0, R, [&](std::ptrdiff_t r) {
    const NoiseSpec ns = substream(noise, std::uint64_t(r));
    for (std::size_t j = 0; j < nc; ++j) {
      if (filters[j].size() > 0) {
        const long L = filters[j].size();
        const auto U = apply_filter(sims[j].path(N + L, ns), filters[j]);
        rep.samples(r, j) = norm[j] * U.values.head(N).sum();
      } else {
        rep.samples(r, j) = norm[j] * sims[j].path(N, ns).sum();
      }
    }
  });
  rep.threshold = 3.0 / std::sqrt(double(R));
  rep.correlation = Eigen::MatrixXd::Identity(nc, nc);
  for (const auto& c : components) {
    rep.names.push_back(c.name);
    rep.tags.push_back(c.tag);
  }
  rep.degenerate = nc < 2;
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = a + 1; b < nc; ++b) {
      const double r = stats::correlation(rep.samples.col(a), rep.samples.col(b));
      rep.correlation(a, b) = rep.correlation(b, a) = r;
      const bool s2a = rep.tags[a] == BlockTag::S2, s2b = rep.tags[b] == BlockTag::S2;
      if (s2a != s2b) rep.max_s2_cross = std::max(rep.max_s2_cross, std::abs(r));
    }
  rep.passed = rep.max_s2_cross < rep.threshold;
  return rep;
}

}  // namespace ghk
