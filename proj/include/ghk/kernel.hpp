#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ghk {

inline constexpr int kMaxOrder = 8;

/// One term c * prod_j x_j^{gamma_j} of a domination certificate.
struct EnvelopeTerm {
  double coeff = 1.0;
  std::vector<double> gamma;
};

/// Finite sum of non-symmetric Hermite kernels dominating |g| on the open orthant.
struct Envelope {
  std::vector<EnvelopeTerm> terms;

  double operator()(std::span<const double> x) const;
};

namespace form {
struct Product {
  std::vector<double> gamma;
};
struct NormPower {};
struct RatioProduct {
  std::vector<double> a;
  double b = 0.0;
};
// max(prod x_j / sum x_j^{k-alpha}, prod x_j^{alpha/k})
struct MaxCombo {};
struct Custom {
  std::function<double(std::span<const double>)> eval;
  std::string label = "custom";
  bool continuity_attested = false;
};
}  // namespace form

using KernelForm =
    std::variant<form::Product, form::NormPower, form::RatioProduct, form::MaxCombo, form::Custom>;

struct KernelSpec {
  int k = 1;
  double alpha = 0.0;
  KernelForm form;
  std::optional<Envelope> envelope;
  bool symmetric = false;
};

KernelSpec make_product(std::vector<double> gamma);
KernelSpec make_norm_power(int k, double alpha);
KernelSpec make_ratio_product(std::vector<double> a, double b);
KernelSpec make_max_combo(int k, double alpha);
KernelSpec make_custom(int k, double alpha, std::function<double(std::span<const double>)> eval,
                       std::optional<Envelope> envelope, bool continuity_attested = false);

std::string form_name(const KernelSpec& spec);
bool is_product(const KernelSpec& spec);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<Check> checks;

  bool ok() const;
  std::string failures() const;
};

ValidationReport validate(const KernelSpec& spec);
// Throws SpecError listing every failed check.
void require_valid(const KernelSpec& spec);

double evaluate(const KernelSpec& spec, std::span<const double> x);
KernelSpec symmetrize(const KernelSpec& spec);
KernelSpec tensor_product(const KernelSpec& s1, const KernelSpec& s2);

enum class CMethod { ClosedForm, Quadrature, MonteCarlo };

struct CConstantOptions {
  double rel_tol = 1e-10;
  std::size_t samples = 400000;
  std::uint64_t seed = 0x5eed;
};

struct CConstant {
  double value = 0.0;
  double error_estimate = 0.0;
};

CConstant c_constant(const KernelSpec& spec, CMethod method, const CConstantOptions& opts = {});
// Closed form when the kernel is a product, otherwise quadrature (k <= 2) or Monte Carlo.
CConstant c_constant_auto(const KernelSpec& spec);

double hurst(const KernelSpec& spec);

struct IntegratedKernelValue {
  double t = 0.0;
  std::vector<double> x;
  double value = 0.0;
  double abs_error_estimate = 0.0;
};

IntegratedKernelValue ht_evaluate(const KernelSpec& spec, double t, std::span<const double> x,
                                  double rel_tol = 1e-10);
// h_t at x_j = m - gaps_j with m = max(max_j x_j, 0) >= 0. Taking the gaps directly keeps
// full relative precision when coordinates nearly coincide.
IntegratedKernelValue ht_evaluate_gaps(const KernelSpec& spec, double t, double m, std::span<const double> gaps,
                                       double rel_tol = 1e-10);
double ht_norm_sq(const KernelSpec& spec, double t);

// Direct quadrature of the squared L2 norm of h_t over R^k (k <= 2), for cross-checks.
struct NormEstimate {
  double value = 0.0;
  double abs_error = 0.0;
};
NormEstimate ht_norm_sq_direct(const KernelSpec& spec, double t, double rel_tol = 1e-9);

// ∫_0^∞ x^gamma (1+x)^delta dx = B(gamma+1, -gamma-delta-1).
double beta_integral(double gamma, double delta);

// Σ_{m,m'} c_m c_m' ∏_j B(γ_mj+1, -γ_mj-γ_m'j-1): finite bound on ∫|g(x)g(1+x)|dx.
double envelope_cross_bound(const Envelope& env);

namespace detail {
// Calls f(perm) for every permutation of 0..k-1 in lexicographic order.
void for_each_permutation(int k, const std::function<void(std::span<const int>)>& f);
Envelope symmetrize_envelope(const Envelope& env, int k);
}  // namespace detail

}  // namespace ghk
