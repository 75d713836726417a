#include <doctest.h>

#include <cmath>

#include "ghk/chaos.hpp"
#include "ghk/correlate.hpp"
#include "ghk/error.hpp"
#include "ghk/noise.hpp"
#include "ghk/stats.hpp"

using namespace ghk;

namespace {

ChaosConfig kernel_config(KernelSpec g, long M, std::uint64_t seed = 1) {
  ChaosConfig c;
  c.source = std::move(g);
  c.M = M;
  c.noise.seed = seed;
  return c;
}

ChaosConfig finite_config(int k, std::vector<std::pair<std::vector<long>, double>> entries, long M,
                          std::uint64_t seed = 1) {
  ChaosConfig c;
  c.source = FiniteCoefficients{k, std::move(entries)};
  c.M = M;
  c.noise.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("noise") {
  TEST_CASE("values are pure functions of (seed, stream, index)") {
    NoiseSpec n{NoiseLaw::Gaussian, 42, 0};
    const auto block = noise_block(n, -5, 10);
    for (int j = 0; j < 10; ++j) CHECK(block[j] == noise_value(n, -5 + j));
    CHECK(noise_value(substream(n, 1), 3) != noise_value(n, 3));
  }

  TEST_CASE("every law has mean 0 and variance 1") {
    for (auto law : {NoiseLaw::Gaussian, NoiseLaw::Rademacher, NoiseLaw::CenteredUniform}) {
      const auto x = noise_block({law, 7, 0}, 0, 200000);
      const auto s = stats::summarize(x);
      CHECK(std::abs(s.mean) < 4.0 / std::sqrt(200000.0));
      CHECK(s.variance == doctest::Approx(1.0).epsilon(0.02));
    }
    const auto r = noise_block({NoiseLaw::Rademacher, 7, 0}, 0, 1000);
    for (double v : r) CHECK(std::abs(v) == 1.0);
  }
}

TEST_SUITE("chaos") {
  TEST_CASE("build_coefficients") {
    auto g = build_coefficients(kernel_config(make_product({-0.7}), 4));
    for (long i = 1; i <= 4; ++i) CHECK(g(std::vector<long>{i}) == doctest::Approx(std::pow(double(i), -0.7)));

    auto g2 = build_coefficients(kernel_config(make_product({-0.75, -0.625}), 5));
    const double want = 0.5 * (std::pow(2.0, -0.625) + std::pow(2.0, -0.75));
    CHECK(g2.sym(std::vector<long>{1, 2}) == doctest::Approx(want).epsilon(1e-14));
    CHECK(g2.sym(std::vector<long>{2, 1}) == doctest::Approx(want).epsilon(1e-14));
    CHECK(g2(std::vector<long>{3, 3}) == 0.0);
    CHECK(g2.tail_bound > 0.0);

    auto c = kernel_config(make_product({-0.7}), 4);
    c.perturbation = perturbation::RationalDecay{1.0};
    CHECK(build_coefficients(c)(std::vector<long>{1}) == doctest::Approx(2.0));
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(validate_config(kernel_config(make_product({-0.75, -0.625}), 1)), SpecError);
    CHECK_THROWS_AS(validate_config(finite_config(2, {{{1, 1}, 1.0}}, 3)), SpecError);
    auto big = kernel_config(make_product({-0.75, -0.625}), 100000);
    CHECK_THROWS_AS(build_coefficients(big), ResourceError);
  }

  TEST_CASE("single off-diagonal coefficient") {
    const auto c = finite_config(2, {{{1, 2}, 0.8}}, 2, 9);
    const auto X = simulate(c, 50);
    for (long n = 1; n <= 50; ++n)
      CHECK(X[n - 1] == doctest::Approx(0.8 * noise_value(c.noise, n - 1) * noise_value(c.noise, n - 2)).epsilon(1e-14));
  }

  TEST_CASE("fast product and low rank agree with the naive sum") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto c = kernel_config(make_product({-0.75, -0.625}), 30, seed);
      const auto naive = simulate(c, 100, SimMode::Naive);
      CHECK((simulate(c, 100, SimMode::FastProduct) - naive).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((simulate(c, 100, SimMode::LowRank) - naive).cwiseAbs().maxCoeff() <= 1e-10);
    }
    for (std::uint64_t seed : {4u, 5u}) {
      const auto c = kernel_config(make_product({-0.55, -0.6, -0.55}), 12, seed);
      CHECK((simulate(c, 40, SimMode::FastProduct) - simulate(c, 40, SimMode::Naive)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    auto r = kernel_config(make_product({-0.75, -0.625}), 30);
    r.noise.law = NoiseLaw::Rademacher;
    CHECK((simulate(r, 100, SimMode::FastProduct) - simulate(r, 100, SimMode::Naive)).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("paths of a and its symmetrization coincide") {
    const auto a = kernel_config(make_product({-0.75, -0.625}), 40, 3);
    const auto s = kernel_config(symmetrize(make_product({-0.75, -0.625})), 40, 3);
    CHECK((simulate(a, 200, SimMode::Naive) - simulate(s, 200, SimMode::Naive)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("simulate_joint") {
    const auto c1 = finite_config(1, {{{1}, 1.0}, {{2}, 0.5}}, 2, 4);
    const auto one = simulate_joint({c1}, 300);
    CHECK((one.row(0).transpose() - simulate(c1, 300)).cwiseAbs().maxCoeff() == 0.0);
    const auto two = simulate_joint({c1, c1}, 300);
    CHECK((two.row(0) - two.row(1)).cwiseAbs().maxCoeff() == 0.0);
    auto c2 = finite_config(2, {{{1, 2}, 1.0}, {{2, 3}, 0.5}}, 3, 4);
    CHECK_THROWS_AS(simulate_joint({c1, finite_config(1, {{{1}, 1.0}}, 1, 5)}, 10), SpecError);

    const long N = 100000;
    const auto j = simulate_joint({c1, c2}, N);
    const Eigen::VectorXd x1 = j.row(0).transpose(), x2 = j.row(1).transpose();
    const Eigen::VectorXd prod = x1.cwiseProduct(x2);
    const auto s = stats::summarize(prod);
    CHECK(std::abs(s.mean) <= 4.0 * std::sqrt(s.variance / double(N)));
  }

  TEST_CASE("acf_exact on finite grids") {
    const auto a = acf_exact(finite_config(1, {{{1}, 1.0}}, 1), 5);
    CHECK(a.gamma[0] == doctest::Approx(1.0));
    for (int n = 1; n <= 5; ++n) CHECK(a.gamma[n] == 0.0);

    const auto b = acf_exact(finite_config(2, {{{1, 2}, 0.5}, {{2, 1}, 0.5}}, 2), 3);
    CHECK(b.gamma[0] == doctest::Approx(1.0));
    CHECK(b.gamma[1] == doctest::Approx(0.0));
    CHECK(long_run_variance(finite_config(2, {{{1, 2}, 0.5}, {{2, 1}, 0.5}}, 2)) == doctest::Approx(1.0));
    CHECK(long_run_variance(finite_config(1, {{{1}, 1.0}}, 1)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(long_run_variance(kernel_config(make_product({-0.7}), 100)), SpecError);
  }

  TEST_CASE("acf routes agree") {
    const auto c = kernel_config(make_product({-0.75, -0.625}), 60);
    const auto grid = acf_exact(c, 20, AcfRoute::Grid);
    const auto sep = acf_exact(c, 20, AcfRoute::Separable);
    for (int n = 0; n <= 20; ++n) CHECK(grid.gamma[n] == doctest::Approx(sep.gamma[n]).epsilon(1e-10));
  }

  TEST_CASE("acf asymptote") {
    const auto c = kernel_config(make_product({-0.7}), 100000);
    CHECK(acf_asymptote(c, 100.0) == doctest::Approx(std::beta(0.3, 0.4) * std::pow(100.0, -0.4)).epsilon(1e-12));
    CHECK(acf_asymptote(c, 200.0) / acf_asymptote(c, 100.0) == doctest::Approx(std::pow(2.0, -0.4)).epsilon(1e-14));
    // Large-M exact sums approach the asymptote as the lag grows.
    const auto big = kernel_config(make_product({-0.7}), 1000000);
    const auto a = acf_exact(big, 1000);
    const double r100 = a.gamma[100] / acf_asymptote(big, 100.0), r1000 = a.gamma[1000] / acf_asymptote(big, 1000.0);
    MESSAGE("acf ratio at M=1e6: n=100 " << r100 << ", n=1000 " << r1000);
    CHECK(std::abs(r1000 - 1.0) < std::abs(r100 - 1.0));
  }

  TEST_CASE("acf ratio band at M = 1e5") {
    const auto c = kernel_config(make_product({-0.7}), 100000);
    const auto a = acf_exact(c, 200);
    double lo = 1e9, hi = 0.0;
    for (int n = 50; n <= 200; ++n) {
      const double r = a.gamma[n] / acf_asymptote(c, n);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    MESSAGE("ratio range over [50,200]: [" << lo << ", " << hi << "]");
    CHECK(lo >= 0.95);
    CHECK(hi <= 1.05);
  }

  TEST_CASE("perturbation leaves the asymptotics in place") {
    auto c = kernel_config(make_product({-0.7}), 100000);
    auto p = c;
    p.perturbation = perturbation::RationalDecay{1.0};
    const auto a = acf_exact(c, 400).gamma, b = acf_exact(p, 400).gamma;
    // The perturbed/unperturbed ratio tends to 1 as the lag grows.
    CHECK(std::abs(b[400] / a[400] - 1.0) < std::abs(b[50] / a[50] - 1.0));
    CHECK(std::abs(b[400] / a[400] - 1.0) < std::abs(b[200] / a[200] - 1.0));
  }

  TEST_CASE("exact_partial_sum_variance") {
    Eigen::VectorXd white = Eigen::VectorXd::Zero(4);
    white[0] = 1.0;
    CHECK(exact_partial_sum_variance(white, 4) == doctest::Approx(4.0));
    const auto iid = acf_exact(finite_config(1, {{{1}, 1.0}}, 1), 99);
    CHECK(exact_partial_sum_variance(iid.gamma, 100) == doctest::Approx(100.0));

    const auto c = kernel_config(make_product({-0.7}), 100000);
    const long N = 1L << 12;
    const auto a = acf_exact(c, N - 1);
    const double want = std::beta(0.3, 0.4) / (0.8 * 0.6) * std::pow(double(N), 1.6);
    const double r = exact_partial_sum_variance(a.gamma, N) / want;
    MESSAGE("variance ratio at N=2^12: " << r);
    CHECK(r == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("partial_sum_process") {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(16);
    Eigen::VectorXd t(3);
    t << 0.0, 0.5, 1.0;
    const auto y = partial_sum_process(ones, 1.0, t);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == doctest::Approx(0.5));
    CHECK(y[2] == doctest::Approx(1.0));
    const auto x = simulate(finite_config(1, {{{1}, 1.0}}, 1), 16);
    CHECK((partial_sum_process(2.0 * x, 0.5, t) - 2.0 * partial_sum_process(x, 0.5, t)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("sample variance matches gamma(0)") {
    for (auto law : {NoiseLaw::Gaussian, NoiseLaw::Rademacher}) {
      auto c = kernel_config(make_product({-0.75, -0.625}), 40, 21);
      c.noise.law = law;
      const auto X = simulate(c, 100000);
      const double g0 = acf_exact(c, 0).gamma[0];
      const double m2 = X.squaredNorm() / double(X.size());
      // X(n)² is strongly dependent only over M lags; inflate the standard error accordingly.
      const Eigen::VectorXd sq = X.array().square();
      const double se = std::sqrt(stats::summarize(sq).variance * 2.0 * double(c.M) / double(X.size()));
      CHECK(std::abs(m2 - g0) <= 4.0 * se);
    }
  }

  TEST_CASE("ensemble variance of partial sums") {
    const auto c = kernel_config(make_product({-0.75, -0.625}), 30, 17);
    const long N = 200, R = 1000;
    const PathSimulator sim(c);
    Eigen::VectorXd s(R);
    for (long r = 0; r < R; ++r) s[r] = sim.path(N, substream(c.noise, std::uint64_t(r))).sum();
    const double v = stats::summarize(s).variance;
    const double want = exact_partial_sum_variance(acf_exact(c, N - 1).gamma, N);
    // Standard error of a sample variance, with a kurtosis allowance for order-2 chaos.
    const double se = want * std::sqrt((2.0 + std::max(0.0, stats::summarize(s).excess_kurtosis)) / double(R));
    CHECK(std::abs(v - want) <= 5.0 * se);
  }

  TEST_CASE("distinct orders are uncorrelated") {
    const auto p = build_coefficients(finite_config(1, {{{1}, 1.0}, {{2}, 0.5}}, 3));
    const auto q = build_coefficients(finite_config(2, {{{1, 2}, 1.0}, {{2, 3}, 0.5}}, 3));
    const auto x = cross_acf(p, q, 4);
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_SUITE("correlate") {
  TEST_CASE("lagged cross sums match direct sums") {
    Eigen::VectorXd u = noise_block({NoiseLaw::Gaussian, 1, 0}, 0, 300);
    Eigen::VectorXd v = noise_block({NoiseLaw::Gaussian, 2, 0}, 0, 300);
    const auto fast = lagged_cross_sums(u, v, 20);
    for (int n = 0; n <= 20; ++n) {
      double direct = 0.0;
      for (int i = 0; i + n < 300; ++i) direct += u[i] * v[i + n];
      CHECK(fast[n] == doctest::Approx(direct).epsilon(1e-10));
    }
  }

  TEST_CASE("causal filter matches direct convolution") {
    Eigen::VectorXd f(3), x(10);
    f << 1.0, -0.5, 0.25;
    for (int i = 0; i < 10; ++i) x[i] = i * i - 3.0;
    // x holds s(-2), ..., s(7); out(n) = Σ_i f(i) s(n - i) for n = 1..8.
    const auto y = causal_filter(f, x);
    REQUIRE(y.size() == 8);
    for (int n = 1; n <= 8; ++n) {
      double d = 0.0;
      for (int i = 1; i <= 3; ++i) d += f[i - 1] * x[n - i + 2];
      CHECK(y[n - 1] == doctest::Approx(d).epsilon(1e-12));
    }
  }
}
