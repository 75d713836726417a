#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ghk/kernel.hpp"

namespace ghk {

/// Pseudo-Fourier transform of a kernel: closed form for product kernels,
/// truncated oscillatory quadrature over (0,n]^k otherwise.
struct SpectralKernel {
  KernelSpec kernel;
  bool closed_form = false;
  double truncation = 1e4;
};

SpectralKernel make_spectral(const KernelSpec& kernel, double truncation = 1e4);

struct ComplexEstimate {
  std::complex<double> value;
  double abs_error = 0.0;
};

// ∫_{(0,n]^k} g(x) e^{i<u,x>} dx. Half-period panels; the panel at the origin uses
// tanh-sinh for the power singularity, the rest Gauss-Kronrod 15.
ComplexEstimate ghat_truncated(const KernelSpec& kernel, std::span<const double> u, double n);
// k = 1: ĝ_n averaged over n in [n, n + 2pi/|u|], which removes the leading
// oscillating truncation term.
ComplexEstimate ghat_stabilized(const KernelSpec& kernel, double u, double n);
// ∏_j Γ(γ_j+1) (-i u_j)^{-(γ_j+1)}, averaged over permutations when symmetric.
std::complex<double> ghat_product(const std::vector<double>& gamma, bool symmetric, std::span<const double> u);

std::complex<double> ghat(const SpectralKernel& sk, std::span<const double> u);

// max over samples and lambdas of |ĝ(λu) - λ^{-α-k} ĝ(u)| / |ĝ(u)|
double ghat_homogeneity_check(const SpectralKernel& sk, const std::vector<std::vector<double>>& samples,
                              const std::vector<double>& lambdas = {2.0, 4.0});

std::complex<double> spectral_ht(const SpectralKernel& sk, double t, std::span<const double> u);
std::complex<double> spectral_ht_beta(const SpectralKernel& sk, double beta, double t, std::span<const double> u);

struct PlancherelResult {
  double spectral_norm_sq = 0.0;
  double time_norm_sq = 0.0;
  double rel_error = 0.0;
  double tail_bound = 0.0;
};

// (2π)^{-k} ∫ |ĥ_t(u)|² du against ht_norm_sq, product kernels with k <= 2.
PlancherelResult plancherel_check(const KernelSpec& kernel, double t);
// Same for ĥ_t^β against h_beta_norm_sq.
PlancherelResult plancherel_check_beta(const KernelSpec& kernel, double beta, double t);

}  // namespace ghk
