#include "ghk/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "ghk/error.hpp"
#include "ghk/overloaded.hpp"
#include "ghk/quadrature.hpp"

namespace ghk {

namespace {

double lower_alpha(int k) { return -(k + 1) / 2.0; }
double upper_alpha(int k) { return -k / 2.0; }

bool in_exponent_range(double g) { return g > -1.0 && g < -0.5; }

double raw_eval(const KernelSpec& s, std::span<const double> x) {
  return std::visit(
      overloaded{
          [&](const form::Product& p) {
            double acc = 0.0;
            for (int j = 0; j < s.k; ++j) acc += p.gamma[j] * std::log(x[j]);
            return std::exp(acc);
          },
          [&](const form::NormPower&) {
            // Scaled so that tiny coordinates do not underflow.
            const double m = *std::max_element(x.begin(), x.end());
            double ss = 0.0;
            for (double v : x) ss += (v / m) * (v / m);
            return std::pow(m, s.alpha) * std::pow(ss, 0.5 * s.alpha);
          },
          [&](const form::RatioProduct& r) {
            double num = 0.0, den = 0.0;
            for (int j = 0; j < s.k; ++j) {
              num += r.a[j] * std::log(x[j]);
              den += std::pow(x[j], r.b);
            }
            return std::exp(num) / den;
          },
          [&](const form::MaxCombo&) {
            double lp = 0.0, den = 0.0;
            const double b = s.k - s.alpha;
            for (double v : x) {
              lp += std::log(v);
              den += std::pow(v, b);
            }
            return std::max(std::exp(lp) / den, std::exp(lp * s.alpha / s.k));
          },
          [&](const form::Custom& c) { return c.eval(x); }},
      s.form);
}

bool inherently_symmetric(const KernelSpec& s) {
  return std::visit(overloaded{[](const form::Product& p) {
                                 return std::adjacent_find(p.gamma.begin(), p.gamma.end(),
                                                           std::not_equal_to<>()) == p.gamma.end();
                               },
                               [](const form::NormPower&) { return true; },
                               [](const form::RatioProduct& r) {
                                 return std::adjacent_find(r.a.begin(), r.a.end(),
                                                           std::not_equal_to<>()) == r.a.end();
                               },
                               [](const form::MaxCombo&) { return true; },
                               [](const form::Custom&) { return false; }},
                    s.form);
}

Envelope single_term(int k, double coeff, double gamma) {
  return Envelope{{EnvelopeTerm{coeff, std::vector<double>(k, gamma)}}};
}

// sup over the unit sphere of prod x^a / sum x^b (a_j > 0) is at most this.
double ratio_sphere_sup(int k, double b) { return std::max(1.0, std::pow(double(k), 0.5 * b - 1.0)); }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

double Envelope::operator()(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& t : terms) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += t.gamma[j] * std::log(x[j]);
    total += t.coeff * std::exp(acc);
  }
  return total;
}

namespace detail {

void for_each_permutation(int k, const std::function<void(std::span<const int>)>& f) {
  std::array<int, kMaxOrder> p{};
  std::iota(p.begin(), p.begin() + k, 0);
  do {
    f(std::span<const int>(p.data(), k));
  } while (std::next_permutation(p.begin(), p.begin() + k));
}

Envelope symmetrize_envelope(const Envelope& env, int k) {
  double nperm = std::tgamma(k + 1.0);
  Envelope out;
  for (const auto& t : env.terms) {
    for_each_permutation(k, [&](std::span<const int> p) {
      std::vector<double> g(k);
      for (int j = 0; j < k; ++j) g[j] = t.gamma[p[j]];
      auto it = std::find_if(out.terms.begin(), out.terms.end(),
                             [&](const EnvelopeTerm& e) { return e.gamma == g; });
      if (it == out.terms.end())
        out.terms.push_back({t.coeff / nperm, std::move(g)});
      else
        it->coeff += t.coeff / nperm;
    });
  }
  return out;
}

}  // namespace detail

KernelSpec make_product(std::vector<double> gamma) {
  KernelSpec s;
  s.k = int(gamma.size());
  s.alpha = std::accumulate(gamma.begin(), gamma.end(), 0.0);
  s.envelope = Envelope{{EnvelopeTerm{1.0, gamma}}};
  s.form = form::Product{std::move(gamma)};
  return s;
}

KernelSpec make_norm_power(int k, double alpha) {
  KernelSpec s;
  s.k = k;
  s.alpha = alpha;
  s.form = form::NormPower{};
  // AM-GM: |x| >= sqrt(k) (prod x_j)^{1/k}, and alpha < 0.
  s.envelope = single_term(k, std::pow(double(k), 0.5 * alpha), alpha / k);
  return s;
}

KernelSpec make_ratio_product(std::vector<double> a, double b) {
  KernelSpec s;
  s.k = int(a.size());
  s.alpha = std::accumulate(a.begin(), a.end(), 0.0) - b;
  s.envelope = single_term(s.k, ratio_sphere_sup(s.k, b) * std::pow(double(s.k), 0.5 * s.alpha),
                           s.alpha / s.k);
  s.form = form::RatioProduct{std::move(a), b};
  return s;
}

KernelSpec make_max_combo(int k, double alpha) {
  KernelSpec s;
  s.k = k;
  s.alpha = alpha;
  s.form = form::MaxCombo{};
  const double c_ratio = ratio_sphere_sup(k, k - alpha) * std::pow(double(k), 0.5 * alpha);
  s.envelope = single_term(k, 1.0 + c_ratio, alpha / k);
  return s;
}

KernelSpec make_custom(int k, double alpha, std::function<double(std::span<const double>)> eval,
                       std::optional<Envelope> envelope, bool continuity_attested) {
  KernelSpec s;
  s.k = k;
  s.alpha = alpha;
  s.form = form::Custom{std::move(eval), "custom", continuity_attested};
  s.envelope = std::move(envelope);
  return s;
}

std::string form_name(const KernelSpec& spec) {
  static const char* names[] = {"product", "norm_power", "ratio_product", "max_combo", "custom"};
  return names[spec.form.index()];
}

bool is_product(const KernelSpec& spec) { return std::holds_alternative<form::Product>(spec.form); }

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ValidationReport::failures() const {
  std::string out;
  for (const auto& c : checks) {
    if (c.passed) continue;
    if (!out.empty()) out += "; ";
    out += c.name + ": " + c.detail;
  }
  return out;
}

ValidationReport validate(const KernelSpec& s) {
  ValidationReport r;
  auto add = [&](std::string name, bool ok, std::string detail) {
    r.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const bool order_ok = s.k >= 1 && s.k <= kMaxOrder;
  add("order", order_ok, "k=" + std::to_string(s.k) + " (supported 1.." + std::to_string(kMaxOrder) + ")");
  if (!order_ok) return r;

  const double lo = lower_alpha(s.k), hi = upper_alpha(s.k);
  add("alpha_range", s.alpha > lo && s.alpha < hi,
      "alpha=" + fmt_double(s.alpha) + " must lie in (" + fmt_double(lo) + ", " + fmt_double(hi) + ")");

  bool form_ok = std::visit(
      overloaded{
          [&](const form::Product& p) {
            bool ok = int(p.gamma.size()) == s.k;
            std::string bad;
            for (double g : p.gamma)
              if (!in_exponent_range(g)) {
                ok = false;
                bad += " " + fmt_double(g);
              }
            double sum = std::accumulate(p.gamma.begin(), p.gamma.end(), 0.0);
            if (std::abs(sum - s.alpha) > 1e-12) ok = false;
            add("product_exponents", ok,
                bad.empty() ? "gamma_j in (-1,-1/2), sum = alpha"
                            : "exponents outside (-1,-1/2) or on its boundary:" + bad);
            return ok;
          },
          [&](const form::RatioProduct& q) {
            bool ok = int(q.a.size()) == s.k && q.b > 0 &&
                      std::all_of(q.a.begin(), q.a.end(), [](double v) { return v > 0; });
            double a_sum = std::accumulate(q.a.begin(), q.a.end(), 0.0);
            ok = ok && std::abs(a_sum - q.b - s.alpha) <= 1e-12;
            add("ratio_parameters", ok, "a_j > 0, b > 0 and alpha = sum(a) - b");
            return ok;
          },
          [&](const form::Custom& c) {
            add("custom_evaluator", bool(c.eval), "evaluator present");
            add("custom_continuity_attested", c.continuity_attested,
                "a.e.-continuity must be attested for custom kernels");
            return bool(c.eval);
          },
          [&](const auto&) { return true; }},
      s.form);

  add("envelope_present", s.envelope.has_value() && !s.envelope->terms.empty(),
      s.envelope ? "envelope has " + std::to_string(s.envelope->terms.size()) + " term(s)"
                 : "custom kernels must declare a Class-(L) envelope");
  if (!s.envelope || s.envelope->terms.empty()) return r;

  const Envelope& env = *s.envelope;
  bool exp_ok = true, sum_ok = true;
  std::string exp_detail;
  for (const auto& t : env.terms) {
    if (int(t.gamma.size()) != s.k || !(t.coeff > 0)) exp_ok = false;
    for (double g : t.gamma)
      if (!in_exponent_range(g)) {
        exp_ok = false;
        exp_detail += " " + fmt_double(g);
      }
    if (std::abs(std::accumulate(t.gamma.begin(), t.gamma.end(), 0.0) - s.alpha) > 1e-12) sum_ok = false;
  }
  add("envelope_exponents", exp_ok,
      exp_detail.empty() ? "all exponents in (-1,-1/2), positive coefficients"
                         : "exponent outside (-1,-1/2) or on its boundary:" + exp_detail);
  add("envelope_sum", sum_ok, "each term's exponents sum to alpha");
  if (!exp_ok) return r;

  double bound = envelope_cross_bound(env);
  add("integrability_bound", std::isfinite(bound) && bound > 0,
      "envelope Beta bound on int |g(x)g(1+x)| dx = " + fmt_double(bound));

  if (!form_ok) return r;

  // Sampled certification of homogeneity and domination.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  std::vector<double> x(s.k), y(s.k);
  bool homog_ok = true, dom_ok = true;
  double worst_h = 0.0, worst_d = 0.0;
  for (int n = 0; n < 2000; ++n) {
    for (auto& v : x) {
      do v = unif(rng);
      while (v <= 0.0);
    }
    double gx = evaluate(s, x);
    double ex = env(x);
    if (!(std::abs(gx) <= ex * (1 + 1e-12))) {
      dom_ok = false;
      worst_d = std::max(worst_d, std::abs(gx) / ex);
    }
    if (n < 200) {
      for (double lam : {0.5, 2.0, 10.0}) {
        for (int j = 0; j < s.k; ++j) y[j] = lam * x[j];
        double expect = std::pow(lam, s.alpha) * gx;
        double dev = std::abs(evaluate(s, y) - expect);
        if (!(dev <= 1e-10 * (1 + std::abs(expect)))) {
          homog_ok = false;
          worst_h = std::max(worst_h, dev);
        }
      }
    }
  }
  add("homogeneity_sampled", homog_ok,
      homog_ok ? "200 points x 3 scales" : "max deviation " + fmt_double(worst_h));
  add("envelope_domination_sampled", dom_ok,
      dom_ok ? "2000 points in (0,10]^k" : "max |g|/envelope " + fmt_double(worst_d));
  return r;
}

void require_valid(const KernelSpec& spec) {
  auto r = validate(spec);
  if (!r.ok()) throw SpecError("invalid kernel: " + r.failures());
}

double evaluate(const KernelSpec& s, std::span<const double> x) {
  if (int(x.size()) != s.k) throw SpecError("evaluate: point has wrong dimension");
  for (double v : x)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("kernel evaluated outside the open orthant");
  if (!s.symmetric || inherently_symmetric(s)) return raw_eval(s, x);
  std::array<double, kMaxOrder> y{};
  double total = 0.0;
  int count = 0;
  detail::for_each_permutation(s.k, [&](std::span<const int> p) {
    for (int j = 0; j < s.k; ++j) y[j] = x[p[j]];
    total += raw_eval(s, std::span<const double>(y.data(), s.k));
    ++count;
  });
  return total / count;
}

KernelSpec symmetrize(const KernelSpec& spec) {
  if (spec.symmetric) return spec;
  KernelSpec out = spec;
  out.symmetric = true;
  if (out.envelope && !inherently_symmetric(spec)) out.envelope = detail::symmetrize_envelope(*out.envelope, spec.k);
  return out;
}

KernelSpec tensor_product(const KernelSpec& s1, const KernelSpec& s2) {
  const int k = s1.k + s2.k;
  const double alpha = s1.alpha + s2.alpha;
  if (!(alpha > lower_alpha(k)))
    throw SpecError("tensor_product: alpha1 + alpha2 = " + fmt_double(alpha) + " must exceed " +
                    fmt_double(lower_alpha(k)));
  if (k > kMaxOrder) throw SpecError("tensor_product: order too large");
  if (is_product(s1) && is_product(s2) && !s1.symmetric && !s2.symmetric) {
    auto g = std::get<form::Product>(s1.form).gamma;
    const auto& g2 = std::get<form::Product>(s2.form).gamma;
    g.insert(g.end(), g2.begin(), g2.end());
    return make_product(std::move(g));
  }
  std::optional<Envelope> env;
  if (s1.envelope && s2.envelope) {
    env.emplace();
    for (const auto& a : s1.envelope->terms)
      for (const auto& b : s2.envelope->terms) {
        EnvelopeTerm t{a.coeff * b.coeff, a.gamma};
        t.gamma.insert(t.gamma.end(), b.gamma.begin(), b.gamma.end());
        env->terms.push_back(std::move(t));
      }
  }
  const int k1 = s1.k;
  auto eval = [s1, s2, k1](std::span<const double> x) {
    return evaluate(s1, x.first(k1)) * evaluate(s2, x.subspan(k1));
  };
  KernelSpec out = make_custom(k, alpha, eval, std::move(env), true);
  std::get<form::Custom>(out.form).label = "tensor(" + form_name(s1) + "," + form_name(s2) + ")";
  return out;
}

double beta_integral(double gamma, double delta) { return std::beta(gamma + 1.0, -gamma - delta - 1.0); }

double envelope_cross_bound(const Envelope& env) {
  double total = 0.0;
  for (const auto& a : env.terms)
    for (const auto& b : env.terms) {
      double p = a.coeff * b.coeff;
      for (std::size_t j = 0; j < a.gamma.size(); ++j) p *= beta_integral(a.gamma[j], b.gamma[j]);
      total += p;
    }
  return total;
}

namespace {

CConstant c_closed(const KernelSpec& s) {
  const auto& g = std::get<form::Product>(s.form).gamma;
  if (!s.symmetric || inherently_symmetric(s)) {
    double v = 1.0;
    for (double gj : g) v *= beta_integral(gj, gj);
    return {v, 0.0};
  }
  // (1/k!) Σ_π ∏_j B(γ_j+1, -γ_j-γ_π(j)-1)
  double total = 0.0;
  int count = 0;
  detail::for_each_permutation(s.k, [&](std::span<const int> p) {
    double v = 1.0;
    for (int j = 0; j < s.k; ++j) v *= beta_integral(g[j], g[p[j]]);
    total += v;
    ++count;
  });
  return {total / count, 0.0};
}

CConstant c_quadrature(const KernelSpec& s, double tol) {
  if (s.k == 1) {
    auto f = [&](double x) {
      double a = x, b = 1.0 + x;
      return evaluate(s, {&a, 1}) * evaluate(s, {&b, 1});
    };
    auto e = quad::half_line(f, 1.0, tol);
    return {e.value, e.abs_error};
  }
  if (s.k != 2) throw SpecError("c_constant: quadrature supports k <= 2; use monte_carlo");
  double worst_rel = 0.0;
  auto outer = [&](double x1) {
    auto inner = [&](double x2) {
      std::array<double, 2> p{x1, x2}, q{1.0 + x1, 1.0 + x2};
      return evaluate(s, p) * evaluate(s, q);
    };
    auto e = quad::half_line(inner, std::max(x1, 1e-3), tol * 0.1);
    if (e.value != 0.0) worst_rel = std::max(worst_rel, e.abs_error / std::abs(e.value));
    return e.value;
  };
  auto e = quad::half_line(outer, 1.0, tol);
  return {e.value, e.abs_error + worst_rel * std::abs(e.value)};
}

CConstant c_monte_carlo(const KernelSpec& s, const CConstantOptions& o) {
  if (!s.envelope || s.envelope->terms.empty()) throw SpecError("c_constant: monte_carlo needs an envelope");
  const auto& terms = s.envelope->terms;
  const int k = s.k;
  // Proposal: mixture over envelope terms of products of beta-prime(γ+1, -2γ-1) laws.
  std::vector<double> weights, lognorm;
  for (const auto& t : terms) {
    double z = 1.0, ln = 0.0;
    for (double g : t.gamma) {
      double b = beta_integral(g, g);
      z *= b;
      ln += std::log(b);
    }
    weights.push_back(t.coeff * z);
    lognorm.push_back(ln);
  }
  double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::mt19937_64 rng(o.seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::gamma_distribution<double>> ga, gb;
  std::vector<double> x(k), y(k);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < o.samples; ++n) {
    const auto& t = terms[pick(rng)];
    for (int j = 0; j < k; ++j) {
      std::gamma_distribution<double> a(t.gamma[j] + 1.0), b(-2.0 * t.gamma[j] - 1.0);
      double u = a(rng), v = b(rng);
      x[j] = u / v;
      if (!(x[j] > 0) || !std::isfinite(x[j])) x[j] = std::numeric_limits<double>::min();
      y[j] = 1.0 + x[j];
    }
    double q = 0.0;
    for (std::size_t m = 0; m < terms.size(); ++m) {
      double lq = -lognorm[m];
      for (int j = 0; j < k; ++j) lq += terms[m].gamma[j] * (std::log(x[j]) + std::log1p(x[j]));
      q += weights[m] / wsum * std::exp(lq);
    }
    double w = evaluate(s, x) * evaluate(s, y) / q;
    double d = w - mean;
    mean += d / double(n + 1);
    m2 += d * (w - mean);
  }
  double var = o.samples > 1 ? m2 / double(o.samples - 1) : 0.0;
  return {mean, std::sqrt(var / double(o.samples))};
}

}  // namespace

CConstant c_constant(const KernelSpec& spec, CMethod method, const CConstantOptions& opts) {
  switch (method) {
    case CMethod::ClosedForm:
      if (!is_product(spec)) throw SpecError("c_constant: closed form requires a product kernel");
      return c_closed(spec);
    case CMethod::Quadrature:
      return c_quadrature(spec, opts.rel_tol);
    case CMethod::MonteCarlo:
      return c_monte_carlo(spec, opts);
  }
  throw SpecError("c_constant: unknown method");
}

CConstant c_constant_auto(const KernelSpec& spec) {
  if (is_product(spec)) return c_constant(spec, CMethod::ClosedForm);
  if (spec.k <= 2) return c_constant(spec, CMethod::Quadrature);
  CConstantOptions o;
  o.samples = 2000000;
  return c_constant(spec, CMethod::MonteCarlo, o);
}

double hurst(const KernelSpec& spec) { return spec.alpha + spec.k / 2.0 + 1.0; }

IntegratedKernelValue ht_evaluate_gaps(const KernelSpec& spec, double t, double m, std::span<const double> gaps,
                                       double rel_tol) {
  if (!(t > 0)) throw SpecError("ht_evaluate: t must be positive");
  if (int(gaps.size()) != spec.k) throw SpecError("ht_evaluate: point has wrong dimension");
  if (!(m >= 0)) throw SpecError("ht_evaluate: m must be nonnegative");
  IntegratedKernelValue out{t, std::vector<double>(spec.k), 0.0, 0.0};
  for (int j = 0; j < spec.k; ++j) {
    if (!(gaps[j] >= 0)) throw SpecError("ht_evaluate: gaps must be nonnegative");
    out.x[j] = m - gaps[j];
  }
  if (m >= t) return out;
  if (spec.k > 1 && std::all_of(gaps.begin(), gaps.end(), [](double g) { return g == 0.0; })) {
    // g(d, ..., d) = d^alpha g(1, ..., 1) with alpha < -1
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  // Homogeneity: with δ the smallest positive gap (or t - m if there is none),
  //   h = δ^{α+1} [ ∫_0^1 g(gaps/δ + u) du + ∫_0^{ln Λ} g(gaps/δ + e^v) e^v dv ],  Λ = (t-m)/δ,
  // which keeps every integrand O(1) however close the coordinates are.
  const double len = t - m;
  double delta = len;
  for (int j = 0; j < spec.k; ++j)
    if (gaps[j] > 0.0) delta = std::min(delta, gaps[j]);
  // Keep gaps/δ and Λ finite. Gaps this extreme only arise at quadrature nodes with negligible weight.
  delta = std::max(delta, len * 1e-280);
  std::array<double, kMaxOrder> gs{}, y{};
  for (int j = 0; j < spec.k; ++j) gs[j] = std::min(gaps[j] / delta, 1e300);
  const std::span<const double> ys(y.data(), spec.k);
  const double log_lam = std::log(len) - std::log(delta);
  quad::Estimate e = quad::offsets(
      [&](double dl, double) {
        for (int j = 0; j < spec.k; ++j) y[j] = gs[j] + dl;
        return evaluate(spec, ys);
      },
      0.0, std::min(1.0, len / delta), rel_tol);
  if (log_lam > 0.0) {
    // The integrand changes regime where e^v passes a scaled gap; split there.
    std::array<double, kMaxOrder + 2> br{};
    int nb = 0;
    br[nb++] = 0.0;
    for (int j = 0; j < spec.k; ++j) {
      const double l = std::log(gs[j]);
      if (l > 1.0 && l < log_lam - 1.0) br[nb++] = l;
    }
    br[nb++] = log_lam;
    std::sort(br.begin(), br.begin() + nb);
    for (int p = 0; p + 1 < nb; ++p) {
      const double lo = br[p], hi = br[p + 1];
      e += quad::offsets(
          [&](double dl, double dr) {
            const double u = std::exp(dl < dr ? lo + dl : hi - dr);
            for (int j = 0; j < spec.k; ++j) y[j] = gs[j] + u;
            return evaluate(spec, ys) * u;
          },
          lo, hi, rel_tol);
    }
  }
  e = e.scaled(std::pow(delta, spec.alpha + 1.0));
  out.value = e.value;
  out.abs_error_estimate = e.abs_error;
  return out;
}

IntegratedKernelValue ht_evaluate(const KernelSpec& spec, double t, std::span<const double> x,
                                  double rel_tol) {
  if (int(x.size()) != spec.k) throw SpecError("ht_evaluate: point has wrong dimension");
  const double m = std::max(0.0, *std::max_element(x.begin(), x.end()));
  std::array<double, kMaxOrder> gaps{};
  for (int j = 0; j < spec.k; ++j) gaps[j] = m - x[j];
  auto out = ht_evaluate_gaps(spec, t, m, std::span<const double>(gaps.data(), spec.k), rel_tol);
  out.x.assign(x.begin(), x.end());
  return out;
}

double ht_norm_sq(const KernelSpec& spec, double t) {
  if (!(t > 0)) throw SpecError("ht_norm_sq: t must be positive");
  const double H = hurst(spec);
  return std::pow(t, 2 * H) * c_constant_auto(spec).value / (H * (2 * H - 1));
}

NormEstimate ht_norm_sq_direct(const KernelSpec& spec, double t, double rel_tol) {
  const double h_tol = std::max(1e-13, rel_tol * 1e-2);
  if (spec.k == 1) {
    auto h2 = [&](double x) {
      double v = ht_evaluate(spec, t, {&x, 1}, h_tol).value;
      return v * v;
    };
    auto neg = quad::half_line([&](double d) { return h2(-d); }, t, rel_tol);
    auto pos = quad::offsets([&](double dl, double) { return h2(dl); }, 0.0, t, rel_tol);
    auto e = neg + pos;
    return {e.value, e.abs_error};
  }
  if (spec.k != 2) throw SpecError("ht_norm_sq_direct: k <= 2 only");
  // h_t vanishes unless both coordinates are below t. It is singular on the diagonal
  // inside (0,t)^2 and has kinks on the axes, so the inner range is split at x1 and 0
  // and every piece hands exact gaps to the evaluator.
  auto h2 = [&](double m, double g1, double g2) {
    const double g[2] = {g1, g2};
    const double v = ht_evaluate_gaps(spec, t, m, g, h_tol).value;
    return v * v;
  };
  auto inner = [&](double x1) {
    // Outer nodes this close to the axis carry no weight, and the pieces below would run on subnormal gaps.
    if (std::abs(x1) < 1e-200 * t) x1 = 0.0;
    quad::Estimate e;
    if (x1 <= 0) {
      const double a = -x1;
      // x2 = x1 - d
      e += quad::half_line([&](double d) { return h2(0.0, a, a + d); }, std::max(t, a), rel_tol);
      // x2 in (x1, 0)
      if (a > 0) e += quad::offsets([&](double dl, double dr) { return h2(0.0, a, dl < dr ? a - dl : dr); },
                                   x1, 0.0, rel_tol);
      // x2 in (0, t)
      e += quad::offsets([&](double dl, double) { return h2(dl, dl + a, 0.0); }, 0.0, t, rel_tol);
    } else {
      // x2 = -d
      e += quad::half_line([&](double d) { return h2(x1, 0.0, x1 + d); }, t, rel_tol);
      // x2 in (0, x1)
      e += quad::offsets([&](double, double dr) { return h2(x1, 0.0, dr); }, 0.0, x1, rel_tol);
      // x2 in (x1, t)
      e += quad::offsets([&](double dl, double) { return h2(x1 + dl, dl, 0.0); }, x1, t, rel_tol);
    }
    return e.value;
  };
  auto neg = quad::half_line([&](double d) { return inner(-d); }, t, rel_tol);
  auto pos = quad::offsets([&](double dl, double) { return inner(dl); }, 0.0, t, rel_tol);
  auto e = neg + pos;
  return {e.value, e.abs_error};
}

}  // namespace ghk
