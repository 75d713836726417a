#include <doctest.h>

#include <cmath>

#include "ghk/chaos.hpp"
#include "ghk/error.hpp"
#include "ghk/fracfilter.hpp"
#include "ghk/stats.hpp"
#include "oracle.hpp"

using namespace ghk;

namespace {

// ∫_0^t dr ∫_{max x}^{r} (r - s)^{β-1} g(s1 - x) ds, nested reference quadrature.
double h_beta_double_integral(const KernelSpec& g, double beta, double t, const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> y(x.size());
  // s = m + dl, r - s = dr
  auto inner = [&](double L) {
    return oracle::offsets(
        [&](double dl, double dr) {
          for (std::size_t j = 0; j < x.size(); ++j) y[j] = (m - x[j]) + dl;
          return std::pow(dr, beta - 1.0) * evaluate(g, y);
        },
        L, 1e-12);
  };
  const double lo = std::max(m, 0.0);
  return oracle::finite([&](double r) { return r <= m ? 0.0 : inner(r - m); }, lo, t, 1e-11);
}

ChaosConfig finite(int k, std::vector<std::pair<std::vector<long>, double>> e, long M, std::uint64_t seed = 1) {
  ChaosConfig c;
  c.source = FiniteCoefficients{k, std::move(e)};
  c.M = M;
  c.noise.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("fracfilter") {
  TEST_CASE("beta window") {
    const auto w1 = beta_window(make_product({-0.7}));
    CHECK(w1.lo == doctest::Approx(-0.8));
    CHECK(w1.hi == doctest::Approx(0.2));
    const auto w2 = beta_window(make_product({-0.75, -0.625}));
    CHECK(w2.lo == doctest::Approx(-0.625));
    CHECK(w2.hi == doctest::Approx(0.375));
    for (const auto& g : {make_product({-0.7}), make_product({-0.75, -0.625}), make_norm_power(3, -1.6)}) {
      const auto w = beta_window(g);
      for (int i = 1; i < 20; ++i) {
        const double b = w.lo + (w.hi - w.lo) * i / 20.0;
        if (std::abs(b) < 1e-12) continue;
        const double H = filtered_hurst(g, b);
        CHECK(H > 0.0);
        CHECK(H < 1.0);
      }
    }
  }

  TEST_CASE("build_filter") {
    const auto tel = build_filter(-0.25, 10000);
    const auto S = filter_partial_sums(tel);
    CHECK(S[9999] == doctest::Approx(-4.0 * std::pow(1e4, -0.25)).epsilon(1e-12));
    for (long m = 1; m <= 10000; m += 37) {
      const double want = std::pow(double(m), -0.25) / -0.25;
      CHECK(std::abs(S[m - 1] - want) <= 1e-12 * std::abs(want));
    }
    CHECK(tel[9999] / std::pow(1e4, -1.25) == doctest::Approx(1.0).epsilon(0.02));

    const auto pp = build_filter(0.3, 100);
    CHECK(pp[0] == 1.0);
    for (int n = 1; n <= 100; ++n) CHECK(pp[n - 1] == doctest::Approx(std::pow(double(n), -0.7)).epsilon(1e-14));

    CHECK_THROWS_AS(build_filter(0.0, 10), SpecError);
    CHECK_THROWS_AS(build_filter(FilterSpec{-0.2, FilterFamily::PurePower, 10}), SpecError);
    CHECK_THROWS_AS(build_filter(FilterSpec{0.2, FilterFamily::TelescopingZeroSum, 10}), SpecError);
  }

  TEST_CASE("regular variation beyond 1e4 for both families") {
    for (double beta : {-0.45, -0.25, 0.15, 0.3}) {
      const auto C = build_filter(beta, 40000);
      for (long n : {10000L, 20000L, 40000L}) {
        const double r = C[n - 1] * std::pow(double(n), 1.0 - beta);
        CHECK(r >= 0.98);
        CHECK(r <= 1.02);
      }
    }
  }

  TEST_CASE("filter tail") {
    const auto t = filter_tail(make_filter_spec(-0.45, 2000));
    CHECK(t.residual == doctest::Approx(std::pow(2000.0, -0.45) / 0.45).epsilon(1e-12));
    CHECK(t.sum_sq_tail > 0.0);
    const auto p = filter_tail(make_filter_spec(0.15, 2000));
    // Σ_{m>L} m^{2β-2} is below the integral from L.
    double direct = 0.0;
    for (long m = 2001; m <= 2000000; ++m) direct += std::pow(double(m), -1.7);
    CHECK(p.sum_sq_tail >= direct);
  }

  TEST_CASE("apply_filter") {
    Eigen::VectorXd X(12);
    for (int i = 0; i < 12; ++i) X[i] = std::sin(1.0 + i);
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(4);
    shift[0] = 1.0;
    auto u = apply_filter(X, shift);
    CHECK(u.first_index == 5);
    REQUIRE(u.values.size() == 8);
    for (int j = 0; j < 8; ++j) CHECK(u.values[j] == doctest::Approx(X[u.first_index + j - 2]));
    Eigen::VectorXd diff(2);
    diff << 1.0, -1.0;
    auto d = apply_filter(X, diff);
    for (int j = 0; j < d.values.size(); ++j) {
      const long n = d.first_index + j;
      CHECK(d.values[j] == doctest::Approx(X[n - 2] - X[n - 3]));
    }
    CHECK_THROWS_AS(apply_filter(X.head(3), shift), SpecError);
  }

  TEST_CASE("filtered variance bilinear form") {
    const auto c = finite(2, {{{1, 2}, 1.0}, {{2, 4}, -0.5}, {{1, 3}, 0.3}}, 4, 3);
    const auto C = build_filter(-0.3, 6);
    const long L = C.size();
    const auto gx = acf_exact(c, 12 + L).gamma;
    const auto gu = filtered_acf(gx, C, 12);
    for (long n = 0; n <= 12; ++n) {
      double direct = 0.0;
      for (long m = 1; m <= L; ++m)
        for (long mp = 1; mp <= L; ++mp) direct += C[m - 1] * C[mp - 1] * gx[std::abs(n - m + mp)];
      CHECK(std::abs(gu[n] - direct) <= 1e-10 * (1.0 + std::abs(direct)));
    }
    // Empirical variance of U against gamma_U(0).
    const auto X = simulate(c, 200000);
    const auto U = apply_filter(X, C).values;
    const double m2 = U.squaredNorm() / double(U.size());
    const Eigen::VectorXd sq = U.array().square();
    const double se = std::sqrt(stats::summarize(sq).variance * 2.0 * double(L + c.M) / double(U.size()));
    CHECK(std::abs(m2 - gu[0]) <= 4.0 * se);
  }

  TEST_CASE("l_beta") {
    CHECK(l_beta(0.5, 1.0, 1.5) == 0.0);
    CHECK(l_beta(-0.3, 1.0, 2.0) == 0.0);
    CHECK(l_beta(0.5, 1.0, 0.75) == doctest::Approx(1.0));
    for (double beta : {0.3, -0.4}) {
      for (double s : {-3.0, -0.5, 0.2, 0.9, 1.7}) {
        CHECK(l_beta(beta, 2.0, s) == doctest::Approx(std::pow(2.0, beta) * l_beta(beta, 1.0, s / 2.0)).epsilon(1e-13));
      }
    }
    CHECK(l_beta(0.4, 1.0, -1e8) == doctest::Approx((std::pow(1e8 + 1.0, 0.4) - std::pow(1e8, 0.4)) / 0.4).epsilon(1e-6));
  }

  TEST_CASE("h_beta_evaluate matches the double-integral form for beta > 0") {
    const auto g1 = make_product({-0.7});
    for (double x : {-0.3, 0.2, -2.0}) {
      const std::vector<double> p{x};
      CHECK(h_beta_evaluate(g1, 0.15, 1.0, p).value ==
            doctest::Approx(h_beta_double_integral(g1, 0.15, 1.0, p)).epsilon(1e-6));
    }
    const auto g2 = make_product({-0.75, -0.625});
    for (auto p : {std::vector<double>{-0.3, 0.1}, std::vector<double>{0.4, -1.0}}) {
      CHECK(h_beta_evaluate(g2, 0.2, 1.5, p).value ==
            doctest::Approx(h_beta_double_integral(g2, 0.2, 1.5, p)).epsilon(1e-6));
    }
  }

  TEST_CASE("h_beta_evaluate tail and linearity") {
    const auto g = make_product({-0.7});
    double prev = 1e300;
    for (double x : {-1.0, -10.0, -100.0, -1000.0}) {
      const std::vector<double> p{x};
      const double v = std::abs(h_beta_evaluate(g, -0.45, 1.0, p).value);
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-3);
    const KernelSpec twice = make_custom(
        1, -0.7, [](std::span<const double> x) { return 2.0 * std::pow(x[0], -0.7); },
        Envelope{{{2.0, {-0.7}}}}, true);
    const std::vector<double> p{-0.4};
    CHECK(h_beta_evaluate(twice, 0.1, 1.0, p).value ==
          doctest::Approx(2.0 * h_beta_evaluate(g, 0.1, 1.0, p).value).epsilon(1e-10));
  }

  TEST_CASE("h_beta_norm_sq") {
    const auto g = make_product({-0.7});
    const double oracle_value = oracle::h_beta_norm_sq(-0.7, 0.1, 1.0);
    CHECK(h_beta_norm_sq(g, 0.1, 1.0).value == doctest::Approx(oracle_value).epsilon(1e-4));
    for (double beta : {0.1, -0.45}) {
      const double H = filtered_hurst(g, beta);
      const double v1 = h_beta_norm_sq(g, beta, 1.0).value;
      for (double t : {2.0, 4.0})
        CHECK(h_beta_norm_sq(g, beta, t).value / v1 == doctest::Approx(std::pow(t, 2.0 * H)).epsilon(1e-8));
    }
    const auto g2 = make_product({-0.75, -0.625});
    const double H2 = filtered_hurst(g2, 0.2);
    CHECK(h_beta_norm_sq(g2, 0.2, 2.0).value / h_beta_norm_sq(g2, 0.2, 1.0).value ==
          doctest::Approx(std::pow(2.0, 2.0 * H2)).epsilon(1e-8));
    const auto w = beta_window(g);
    CHECK_THROWS_AS(h_beta_norm_sq(g, w.hi, 1.0), SpecError);
    CHECK_THROWS_AS(h_beta_norm_sq(g, w.lo, 1.0), SpecError);
  }
}
