#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ghk/error.hpp"
#include "ghk/limits.hpp"
#include "ghk/presets.hpp"
#include "ghk/stats.hpp"
#include "oracle.hpp"

using namespace ghk;

namespace {

ChaosConfig kernel_config(KernelSpec g, long M, std::uint64_t seed = 1) {
  ChaosConfig c;
  c.source = std::move(g);
  c.M = M;
  c.noise.seed = seed;
  return c;
}

ChaosConfig finite(int k, std::vector<std::pair<std::vector<long>, double>> e, long M, std::uint64_t seed = 1) {
  ChaosConfig c;
  c.source = FiniteCoefficients{k, std::move(e)};
  c.M = M;
  c.noise.seed = seed;
  return c;
}

// Contraction of x^γ (k = 1) with a symmetrized product kernel (k = 2) at probe x',
// ∫ dy h1(y) h2(x', y), by nested reference quadrature in e = y - x'.
double contraction_oracle(double gamma, double a, double b, double t, double xp) {
  auto h1 = [&](double y) {
    const double lo = std::max(y, 0.0);
    return lo >= t ? 0.0 : (std::pow(t - y, gamma + 1.0) - std::pow(lo - y, gamma + 1.0)) / (gamma + 1.0);
  };
  // h2 at y = x' + e, with both gaps to s = max(x', y, 0) formed exactly from e.
  auto h2 = [&](double e) {
    const double gx = e < 0 ? std::max(0.0, -xp) : std::max(0.0, -xp - e) + e;  // lo - x'
    const double gy = gx - e;                                                    // lo - y
    const double lo = xp + gx;
    if (lo >= t) return 0.0;
    return oracle::offsets(
        [&](double dl, double) {
          const double u = gx + dl, v = gy + dl;
          return 0.5 * (std::pow(u, a) * std::pow(v, b) + std::pow(u, b) * std::pow(v, a));
        },
        t - lo, 1e-12);
  };
  auto f = [&](double e) { return h1(xp + e) * h2(e); };
  std::vector<double> br{0.0, -xp, t - xp};
  std::sort(br.begin(), br.end());
  const double left = br.front() - 1.0;
  double total = oracle::semi_infinite([&](double d) { return f(left - d); }, 0.0, 1e-10);
  br.insert(br.begin(), left);
  for (std::size_t j = 0; j + 1 < br.size(); ++j) {
    const double lo = br[j], hi = br[j + 1];
    if (hi > lo)
      total += oracle::offsets([&](double dl, double dr) { return f(dl < dr ? lo + dl : hi - dr); }, hi - lo, 1e-10);
  }
  return total;
}

}  // namespace

TEST_SUITE("limits") {
  TEST_CASE("discretized kernel") {
    const auto g = make_product({-0.7});
    const long N = 64;
    // The envelope tail guard is not under test here.
    const auto D = discretize_limit_kernel(g, 1.0, N, 64.0, 1e6);
    // x = 0 is cell 0: N^{-α-1} Σ_{n=2}^{N} (n-1)^{-0.7}.
    double want = 0.0;
    for (long r = 1; r <= N - 1; ++r) want += std::pow(double(r), -0.7);
    want *= std::pow(double(N), -0.3);
    const long zero = 0;
    CHECK(D.at({&zero, 1}) == doctest::Approx(want).epsilon(1e-12));
    // Cells at or beyond [Nt] vanish.
    const long late = N - 1, beyond = N + 5;
    CHECK(D.at({&late, 1}) == 0.0);
    CHECK(D.at({&beyond, 1}) == 0.0);
    // A negative cell against a direct sum.
    const long i = -37;
    double neg = 0.0;
    for (long n = 1; n <= N; ++n)
      if (n > i + 1) neg += std::pow(double(n - i - 1), -0.7);
    neg *= std::pow(double(N), -0.3);
    CHECK(D.at({&i, 1}) == doctest::Approx(neg).epsilon(1e-10));
  }

  TEST_CASE("discretized kernel for k = 2") {
    const auto g = symmetrize(make_product({-0.75, -0.625}));
    const long N = 16;
    const auto D = discretize_limit_kernel(g, 1.0, N, 2.0, 1e6);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<long> cell(D.lo, D.hi);
    for (int n = 0; n < 50; ++n) {
      const long c[2] = {cell(rng), cell(rng)};
      const long sw[2] = {c[1], c[0]};
      CHECK(D.at(c) == doctest::Approx(D.at(sw)).epsilon(1e-14));
      double direct = 0.0;
      for (long s = 1; s <= N; ++s)
        if (s > c[0] + 1 && s > c[1] + 1) {
          const double y[2] = {double(s - c[0] - 1), double(s - c[1] - 1)};
          direct += evaluate(g, y);
        }
      direct *= std::pow(double(N), -g.alpha - 1.0);
      CHECK(D.at(c) == doctest::Approx(direct).epsilon(1e-10));
    }
    const long both[2] = {N - 1, N - 1};
    CHECK(D.at(both) == 0.0);
  }

  TEST_CASE("discretization caps") {
    const auto g = make_product({-0.75, -0.625});
    CHECK_THROWS_AS(discretize_limit_kernel(g, 1.0, 4096, 4.0), ResourceError);
    CHECK_THROWS_AS(discretize_limit_kernel(make_product({-0.7}), 1.0, 64, 0.01), SpecError);
  }

  TEST_CASE("L2 discretization error") {
    const auto g = make_product({-0.7});
    const auto e64 = l2_discretization_error(g, 1.0, 64);
    const auto e512 = l2_discretization_error(g, 1.0, 512);
    CHECK(e512.rel_error < e64.rel_error);
    CHECK(e512.far_field_bound < 1e-6 * e512.norm_sq);
    MESSAGE("relative L2 error at N=512: " << e512.rel_error);
    CHECK(e512.rel_error < 0.05);
  }

  TEST_CASE("L2 error is invariant under (t, N) -> (2t, N/2)") {
    const auto g = make_product({-0.7});
    L2ErrorOptions o;
    o.window = 64.0;
    const auto a = l2_discretization_error(g, 1.0, 128, o);
    L2ErrorOptions o2;
    o2.window = 128.0;
    const auto b = l2_discretization_error(g, 2.0, 64, o2);
    CHECK(a.rel_error == doctest::Approx(b.rel_error).epsilon(1e-6));
  }

  TEST_CASE("limit process ensembles") {
    const auto c = find_preset("nonsym-rosenblatt").config;
    Eigen::VectorXd t(2);
    t << 0.5, 1.0;
    const long N = 256, R = 400;
    const auto e = simulate_limit_process(c, t, N, R);
    const double v1 = exact_limit_variance(c, N, 1.0), vh = exact_limit_variance(c, N, 0.5);
    const double s1 = e.summary[1].variance;
    const double se = v1 * std::sqrt((2.0 + std::max(0.0, e.summary[1].excess_kurtosis)) / double(R));
    CHECK(std::abs(s1 - v1) <= 4.0 * se);
    CHECK(vh / v1 == doctest::Approx(std::pow(0.5, 2.0 * 0.625)).epsilon(0.05));

    const auto g1 = kernel_config(make_product({-0.7}), 20000, 3);
    const auto e1 = simulate_limit_process(g1, t, 512, 400);
    CHECK(e1.ks[1] < stats::ks_critical(400));
    CHECK(std::abs(stats::skewness_z(e1.summary[1])) < 4.0);

    auto rad = c;
    rad.noise.law = NoiseLaw::Rademacher;
    CHECK_THROWS_AS(simulate_limit_process(rad, t, N, 10), SpecError);
  }

  TEST_CASE("variance scaling fits") {
    const auto grid = power_of_two_grid(8, 14);
    const auto k1 = variance_scaling_fit(kernel_config(make_product({-0.7}), 100000), grid);
    CHECK(k1.slope >= 1.57);
    CHECK(k1.slope <= 1.63);
    const auto srd = variance_scaling_fit(find_preset("srd-finite-k2").config, grid);
    CHECK(srd.slope >= 0.97);
    CHECK(srd.slope <= 1.03);
    const auto& anti = find_preset("frac-k1-antipersistent");
    const auto f = variance_scaling_fit(anti.config, *anti.filter, grid);
    CHECK(f.expected_slope == doctest::Approx(0.7));
    CHECK(f.slope >= 0.6);
    CHECK(f.slope <= 0.8);

    Eigen::VectorXd v(2);
    v << 1.0, 2.0;
    CHECK_THROWS_AS(variance_scaling_fit({4, 8}, v, 1), SpecError);
    CHECK_THROWS_AS(variance_scaling_fit({8, 4}, v, 0), SpecError);
  }

  TEST_CASE("clt ensembles") {
    const auto r = clt_ensemble(find_preset("srd-finite-k2").config, 1L << 12, 10000);
    CHECK(r.ks < 0.02);
    CHECK(r.variance_rel_error < 0.05);
    const auto iid = clt_ensemble(finite(1, {{{1}, 1.0}}, 1, 5), 64, 4000);
    CHECK(iid.sigma2 == doctest::Approx(1.0));
    CHECK(iid.ks < iid.ks_critical);
    CHECK(std::abs(iid.skew_z) < 4.0);
    CHECK(std::abs(iid.kurt_z) < 4.0);
    CHECK_THROWS_AS(clt_ensemble(kernel_config(make_product({-0.7}), 100), 64, 100), SpecError);
  }

  TEST_CASE("moment ratio") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    Eigen::VectorXd s(400000);
    for (auto& v : s) v = z(rng);
    CHECK(moment_ratio(s, 4.0) == doctest::Approx(std::pow(3.0, 0.25)).epsilon(0.01));
    CHECK(moment_ratio(7.0 * s, 3.0) == doctest::Approx(moment_ratio(s, 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(moment_ratio(s.head(5), 3.0), SpecError);
    CHECK_THROWS_AS(moment_ratio(s, 2.0), SpecError);
  }

  TEST_CASE("cross covariance limit") {
    const auto p = finite(1, {{{1}, 1.0}, {{2}, 0.5}}, 3);
    const auto q = finite(2, {{{1, 2}, 1.0}, {{2, 3}, 0.5}}, 3);
    CHECK(cross_covariance_limit(p, q, 1.0, 1.0) == 0.0);
    CHECK(cross_covariance_limit(p, p, 0.4, 0.9) == doctest::Approx(0.4 * long_run_variance(p)).epsilon(1e-12));
    // a(1) = 1, a(2) = 0.5 against b(2) = 1, b(3) = 0.5: Σ_n Σ_i a(i) b(i + n) over lags n = 0, 1, 2.
    const auto s = finite(1, {{{2}, 1.0}, {{3}, 0.5}}, 3);
    const double hand = (0.5 * 1.0) + (1.0 * 1.0 + 0.5 * 0.5) + (1.0 * 0.5);
    CHECK(cross_covariance_limit(p, s, 1.0, 2.0) == doctest::Approx(hand).epsilon(1e-12));
    CHECK_THROWS_AS(cross_covariance_limit(kernel_config(make_product({-0.7}), 10), p, 1.0, 1.0), SpecError);
  }

  TEST_CASE("contraction integral") {
    const auto g1 = make_product({-0.7});
    const auto g2 = make_product({-0.75, -0.625});
    const auto r = contraction_integral(g1, g2, 2.0);
    REQUIRE(r.values.size() == 16);
    for (double v : r.values) CHECK(v > 0.0);
    for (int j : {0, 5, 11}) {
      const double xp = r.probes[j][0];
      const double want = contraction_oracle(-0.7, -0.75, -0.625, 2.0, xp);
      CHECK(r.values[j] == doctest::Approx(want).epsilon(1e-4));
    }
    // A scaled copy gives the scaled self-contraction.
    const KernelSpec scaled = make_custom(
        1, -0.7, [](std::span<const double> x) { return 3.0 * std::pow(x[0], -0.7); }, Envelope{{{3.0, {-0.7}}}}, true);
    const auto self = contraction_integral(g1, g1, 2.0);
    const auto sc = contraction_integral(g1, scaled, 2.0);
    for (std::size_t j = 0; j < self.values.size(); ++j) {
      CHECK(self.values[j] > 0.0);
      CHECK(sc.values[j] == doctest::Approx(3.0 * self.values[j]).epsilon(1e-8));
    }
  }

  TEST_CASE("multivariate mixed check") {
    const auto s1 = find_preset("srd-linear-k1").config;
    const auto s2 = find_preset("srd-finite-k2").config;
    NoiseSpec noise{NoiseLaw::Gaussian, 11, 0};
    const auto r = multivariate_mixed_check({{"a", BlockTag::S1, s1, {}}, {"b", BlockTag::S2, s2, {}}}, 4096, 10000, noise);
    CHECK(r.max_s2_cross < 0.03);
    CHECK(r.passed);

    const auto lrd = kernel_config(make_product({-0.7}), 4096);
    const auto dep = multivariate_mixed_check({{"x", BlockTag::L, lrd, {}}, {"y", BlockTag::L, lrd, {}}}, 1024, 200, noise);
    CHECK(dep.correlation(0, 1) > 0.5);

    const auto one = multivariate_mixed_check({{"a", BlockTag::S1, s1, {}}}, 256, 100, noise);
    CHECK(one.degenerate);
    CHECK(one.correlation.size() == 1);

    CHECK_THROWS_AS(validate_component({"bad", BlockTag::S1, s2, {}}), SpecError);
    CHECK_THROWS_AS(validate_component({"bad", BlockTag::L, s1, {}}), SpecError);
  }
}
