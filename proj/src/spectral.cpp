#include "ghk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "ghk/error.hpp"
#include "ghk/fracfilter.hpp"
#include "ghk/quadrature.hpp"

namespace ghk {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// (-i u)^{-mu} on the principal branch.
cplx minus_iu_pow(double u, double mu) {
  if (u == 0.0) return std::numeric_limits<double>::infinity();
  const double s = u > 0 ? 1.0 : -1.0;
  return std::pow(std::abs(u), -mu) * std::polar(1.0, s * mu * kPi / 2);
}

// (i z)^{-mu} on the principal branch.
cplx iz_pow(double z, double mu) {
  const double s = z > 0 ? 1.0 : -1.0;
  return std::pow(std::abs(z), -mu) * std::polar(1.0, -s * mu * kPi / 2);
}

// ∫_0^n h(x) e^{iux} dx for complex h that may be singular at 0. A breakpoint c in (0, P)
// splits the first panel where h changes scale.
template <class H>
ComplexEstimate oscillatory(H&& h, double u, double n, double c = 0.0) {
  const double P = u == 0.0 ? n : std::min(n, kPi / std::abs(u));
  // First panel: tanh-sinh on real and imaginary parts, sharing evaluations.
  std::map<double, cplx> memo;
  auto val = [&](double x) {
    auto it = memo.find(x);
    if (it != memo.end()) return it->second;
    return memo[x] = h(x) * std::polar(1.0, u * x);
  };
  ComplexEstimate out{};
  // Each panel is mapped to [0, 1]; tanh-sinh error estimates degrade on very short intervals.
  auto panel = [&](double a, double b) {
    const double L = b - a;
    // A node whose offset underflows to zero has no weight.
    auto at = [&](double dl) { return a + L * dl > 0.0 ? val(a + L * dl) : cplx(0.0); };
    auto re = quad::offsets([&](double dl, double) { return at(dl).real(); }, 0.0, 1.0, 1e-10).scaled(L);
    auto im = quad::offsets([&](double dl, double) { return at(dl).imag(); }, 0.0, 1.0, 1e-10).scaled(L);
    out.value += cplx(re.value, im.value);
    out.abs_error += re.abs_error + im.abs_error;
  };
  if (c > 0.0 && c < P) {
    panel(0.0, c);
    panel(c, P);
  } else {
    panel(0.0, P);
  }
  if (P >= n) return out;
  const double width = kPi / std::abs(u);
  for (double a = P; a < n; a += width) {
    const double b = std::min(n, a + width);
    double err = 0.0;
    cplx v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double x) { return h(x) * std::polar(1.0, u * x); }, a, b, 0, 0.0, &err);
    out.value += v;
    out.abs_error += err;
  }
  return out;
}

ComplexEstimate ghat_rec(const KernelSpec& g, std::span<const double> u, double n, std::vector<double>& x, int dim) {
  const int k = g.k;
  if (dim == k - 1) {
    return oscillatory(
        [&](double v) {
          x[dim] = v;
          return cplx(evaluate(g, x), 0.0);
        },
        u[dim], n, dim ? *std::max_element(x.begin(), x.begin() + dim) : 0.0);
  }
  // The outer error picks up ∫ |inner error|, integrated loosely over the same nodes.
  std::map<double, ComplexEstimate> memo;
  auto inner = [&](double v) -> const ComplexEstimate& {
    auto it = memo.find(v);
    if (it != memo.end()) return it->second;
    // The outer integrand grows at most like v^{-1/2} near a face, so dropping (0, 1e-100 n)
    // costs about 1e-50 relative, and inner integrals there are not resolvable in double.
    if (v < 1e-100 * n) return memo[v] = ComplexEstimate{};
    x[dim] = v;
    return memo[v] = ghat_rec(g, u, n, x, dim + 1);
  };
  auto r = oscillatory([&](double v) { return inner(v).value; }, u[dim], n,
                       dim ? *std::max_element(x.begin(), x.begin() + dim) : 0.0);
  r.abs_error += quad::offsets([&](double dl, double) { return inner(dl).abs_error; }, 0.0, n, 1e-2).value;
  return r;
}

const std::vector<double>& product_gamma(const KernelSpec& g) { return std::get<form::Product>(g.form).gamma; }

// (1/π) ∫_0^∞ 4 sin²(tz/2) w(z) dz; the oscillating part of the tail beyond the
// panel range is bounded, not integrated.
quad::Estimate one_sided_spectral_integral(const std::function<double(double)>& w, double t, int panels,
                                           double& tail_bound) {
  const double P = kPi / t;
  auto f = [&](double z) {
    const double s = std::sin(0.5 * t * z);
    return 4.0 * s * s * w(z);
  };
  quad::Estimate e = quad::offsets([&](double dl, double) { return f(dl); }, 0.0, P, 1e-11);
  for (int j = 1; j < panels; ++j) e += quad::gk_panel(f, j * P, (j + 1) * P);
  const double U = panels * P;
  // Beyond U: 4 sin² = 2 - 2cos; keep the non-oscillating part exactly.
  e += quad::half_line([&](double d) { return 2.0 * w(U + d); }, U, 1e-11);
  tail_bound = 2.0 * w(U) * 2.0 / t / kPi;
  return e.scaled(1.0 / kPi);
}

// J(v) = ∫ |ĝ(w, v-w)|² dw for k = 2, v > 0.
double diagonal_mass(const std::function<double(double, double)>& g2, double v) {
  quad::Estimate e = quad::half_line([&](double d) { return g2(-d, v + d); }, v, 1e-10);
  e += quad::offsets([&](double dl, double dr) { return g2(dl, dr); }, 0.0, v, 1e-10);
  e += quad::half_line([&](double d) { return g2(v + d, -d); }, v, 1e-10);
  return e.value;
}

PlancherelResult plancherel_impl(const KernelSpec& kernel, double t, double time_side,
                                 const std::function<double(double)>& z_weight) {
  if (!is_product(kernel)) throw SpecError("plancherel_check: requires a closed-form (product) kernel");
  if (kernel.k > 2) throw SpecError("plancherel_check: k <= 2 only");
  if (!(t > 0)) throw SpecError("plancherel_check: t must be positive");
  const auto& gamma = product_gamma(kernel);
  PlancherelResult r;
  r.time_norm_sq = time_side;
  double tail = 0.0;
  quad::Estimate s;
  if (kernel.k == 1) {
    auto w = [&](double z) {
      const double u = z;
      return std::norm(ghat_product(gamma, kernel.symmetric, {&u, 1})) * z_weight(z);
    };
    s = one_sided_spectral_integral(w, t, 4000, tail);
  } else {
    auto g2 = [&](double u1, double u2) {
      const double u[2] = {u1, u2};
      return std::norm(ghat_product(gamma, kernel.symmetric, u));
    };
    // (2π)^{-2} ∫ dv F(v) J(v); J is even and homogeneous of degree -2α-3.
    const double j1 = diagonal_mass(g2, 1.0);
    const double expo = -2.0 * kernel.alpha - 3.0;
    auto w = [&](double v) { return j1 * std::pow(v, expo) * z_weight(v); };
    s = one_sided_spectral_integral(w, t, 600, tail);
    s = s.scaled(0.5 / kPi);
    tail *= 0.5 / kPi;
  }
  r.spectral_norm_sq = s.value;
  r.tail_bound = tail + s.abs_error;
  r.rel_error = std::abs(r.spectral_norm_sq - r.time_norm_sq) / r.time_norm_sq;
  if (r.tail_bound > 1e-4 * r.time_norm_sq) throw NumericalError("plancherel_check: frequency tail bound too large");
  return r;
}

}  // namespace

SpectralKernel make_spectral(const KernelSpec& kernel, double truncation) {
  require_valid(kernel);
  return {kernel, is_product(kernel), truncation};
}

ComplexEstimate ghat_truncated(const KernelSpec& kernel, std::span<const double> u, double n) {
  if (int(u.size()) != kernel.k) throw SpecError("ghat_truncated: frequency has wrong dimension");
  if (!(n > 0)) throw SpecError("ghat_truncated: n must be positive");
  std::vector<double> x(kernel.k, 1.0);
  auto r = ghat_rec(kernel, u, n, x, 0);
  if (!std::isfinite(r.value.real()) || !std::isfinite(r.value.imag()) || r.abs_error > 1e-6 * std::abs(r.value))
    throw NumericalError("ghat_truncated: oscillatory quadrature did not converge");
  return r;
}

ComplexEstimate ghat_stabilized(const KernelSpec& kernel, double u, double n) {
  if (kernel.k != 1) throw SpecError("ghat_stabilized: k = 1 only");
  auto base = ghat_truncated(kernel, {&u, 1}, n);
  if (u == 0.0) return base;
  const double T = 2 * kPi / std::abs(u);
  auto f = [&](double x) {
    return cplx(evaluate(kernel, {&x, 1}) * (1.0 - (x - n) / T), 0.0) * std::polar(1.0, u * x);
  };
  for (int j = 0; j < 2; ++j) {
    double err = 0.0;
    base.value += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, n + j * T / 2, n + (j + 1) * T / 2,
                                                                                 0, 0.0, &err);
    base.abs_error += err;
  }
  return base;
}

std::complex<double> ghat_product(const std::vector<double>& gamma, bool symmetric, std::span<const double> u) {
  const int k = int(gamma.size());
  if (int(u.size()) != k) throw SpecError("ghat_product: frequency has wrong dimension");
  auto term = [&](std::span<const int> p) {
    cplx v = 1.0;
    for (int j = 0; j < k; ++j) {
      const double mu = gamma[p[j]] + 1.0;
      v *= std::tgamma(mu) * minus_iu_pow(u[j], mu);
    }
    return v;
  };
  if (!symmetric) {
    std::vector<int> id(k);
    for (int j = 0; j < k; ++j) id[j] = j;
    return term(id);
  }
  cplx total = 0.0;
  int count = 0;
  detail::for_each_permutation(k, [&](std::span<const int> p) {
    total += term(p);
    ++count;
  });
  return total / double(count);
}

std::complex<double> ghat(const SpectralKernel& sk, std::span<const double> u) {
  if (sk.closed_form) return ghat_product(product_gamma(sk.kernel), sk.kernel.symmetric, u);
  if (sk.kernel.k == 1) return ghat_stabilized(sk.kernel, u[0], sk.truncation).value;
  return ghat_truncated(sk.kernel, u, sk.truncation).value;
}

double ghat_homogeneity_check(const SpectralKernel& sk, const std::vector<std::vector<double>>& samples,
                              const std::vector<double>& lambdas) {
  const double expo = -sk.kernel.alpha - sk.kernel.k;
  double worst = 0.0;
  for (const auto& u : samples) {
    const cplx base = ghat(sk, u);
    for (double lam : lambdas) {
      if (lam == 1.0) continue;
      std::vector<double> v(u);
      for (auto& c : v) c *= lam;
      const cplx scaled = ghat(sk, v);
      worst = std::max(worst, std::abs(scaled - std::pow(lam, expo) * base) / std::abs(base));
    }
  }
  return worst;
}

std::complex<double> spectral_ht(const SpectralKernel& sk, double t, std::span<const double> u) {
  if (t == 0.0) return 0.0;
  double z = 0.0;
  for (double v : u) z += v;
  cplx factor;
  const double tz = t * z;
  if (std::abs(tz) < 1e-4) {
    const cplx a(0.0, tz);
    factor = t * (1.0 + a / 2.0 + a * a / 6.0 + a * a * a / 24.0);
  } else {
    factor = (std::polar(1.0, tz) - 1.0) / cplx(0.0, z);
  }
  std::vector<double> mu(u.begin(), u.end());
  for (auto& c : mu) c = -c;
  return factor * ghat(sk, mu);
}

std::complex<double> spectral_ht_beta(const SpectralKernel& sk, double beta, double t, std::span<const double> u) {
  if (beta == 0.0) throw SpecError("spectral_ht_beta: beta = 0 is the unfiltered case (use spectral_ht)");
  if (!beta_window(sk.kernel).contains(beta)) throw SpecError("spectral_ht_beta: beta outside the window");
  double z = 0.0;
  for (double v : u) z += v;
  if (t == 0.0) return 0.0;
  if (z == 0.0) return beta < 0 ? cplx(0.0) : cplx(std::numeric_limits<double>::infinity());
  std::vector<double> mu(u.begin(), u.end());
  for (auto& c : mu) c = -c;
  return (std::polar(1.0, t * z) - 1.0) * iz_pow(z, beta + 1.0) * ghat(sk, mu) * std::tgamma(beta);
}

PlancherelResult plancherel_check(const KernelSpec& kernel, double t) {
  require_valid(kernel);
  return plancherel_impl(kernel, t, ht_norm_sq(kernel, t), [](double z) { return 1.0 / (z * z); });
}

PlancherelResult plancherel_check_beta(const KernelSpec& kernel, double beta, double t) {
  require_valid(kernel);
  const double time_side = h_beta_norm_sq(kernel, beta, t).value;
  const double gb = std::tgamma(beta);
  return plancherel_impl(kernel, t, time_side,
                         [beta, gb](double z) { return gb * gb * std::pow(std::abs(z), -2.0 * beta - 2.0); });
}

}  // namespace ghk
