#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ghk/chaos.hpp"
#include "ghk/fracfilter.hpp"
#include "ghk/kernel.hpp"
#include "ghk/noise.hpp"
#include "ghk/stats.hpp"

namespace ghk {

/// Lattice values of the discretized integrated kernel
///   N^{-α-1} Σ_{n=1}^{[Nt]} g(n - i - 1) 1{n > max_j i_j + 1},  i = [N x],
/// on the cells i ∈ [lo, hi]^k, where lo = -ceil(N window) and hi = ceil(N t) - 1.
struct DiscretizedKernel {
  KernelSpec kernel;
  double t = 1.0;
  long N = 1;
  double window = 0.0;
  long lo = 0;
  long hi = 0;
  // Envelope bound on ∫ h_t² over the complement of [-window, t]^k.
  double tail_bound = 0.0;
  Eigen::VectorXd values;  // flat, last index fastest

  long side() const { return hi - lo + 1; }
  // Zero outside the stored cells.
  double at(std::span<const long> cell) const;
};

// Throws SpecError if tail_bound > tail_tol * ||h_t||², ResourceError above max_cells.
DiscretizedKernel discretize_limit_kernel(const KernelSpec& kernel, double t, long N, double window,
                                          double tail_tol = 1e-2, std::size_t max_cells = 40'000'000);

// Bound on ∫ h_t² over points with some coordinate below -window, from the envelope.
double window_tail_bound(const KernelSpec& kernel, double t, double window);

struct L2ErrorOptions {
  double window = -1.0;  // < 0: 64 for k = 1, 4 for k = 2
  double rel_tol = 1e-10;
};

struct L2Error {
  long N = 0;
  double rel_error = 0.0;        // over the window
  double rel_error_upper = 0.0;  // including the far-field bound
  double abs_sq_window = 0.0;
  double far_field_bound = 0.0;  // bound on ∫(h~ - h)² outside the window
  double norm_sq = 0.0;
};

// ||h~_{t,N} - h_t|| / ||h_t||, k <= 2, by per-cell quadrature against ht_evaluate.
L2Error l2_discretization_error(const KernelSpec& kernel, double t, long N, const L2ErrorOptions& opts = {});

struct EnsembleResult {
  Eigen::MatrixXd samples;  // R x t_grid.size()
  Eigen::VectorXd t_grid;
  long N = 0;
  long R = 0;
  NoiseSpec noise;  // replication r uses substream(noise, r)
  std::vector<stats::Summary> summary;
  std::vector<double> ks;  // KS distance to the normal with the sample mean and variance
};

EnsembleResult summarize_ensemble(Eigen::MatrixXd samples, Eigen::VectorXd t_grid, long N, NoiseSpec noise);

// R replications of Y_N(t) = N^{-H} Σ_{n <= [Nt]} X(n), t in (0,1], Gaussian noise.
EnsembleResult simulate_limit_process(const ChaosConfig& config, const Eigen::VectorXd& t_grid, long N, long R,
                                      SimMode mode = SimMode::Auto);
// N^{-2H} Var(Σ_{n <= [Nt]} X(n)) from the exact autocovariance.
double exact_limit_variance(const ChaosConfig& config, long N, double t);
double config_hurst(const ChaosConfig& config);

struct ScalingFit {
  std::vector<long> N;
  Eigen::VectorXd variances;
  long discarded = 1;  // smallest N values left out of the fit
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  Eigen::VectorXd residuals;  // on the fitted points
  double expected_slope = 0.0;
};

ScalingFit variance_scaling_fit(const std::vector<long>& N, const Eigen::VectorXd& variances, long discard = 1);
ScalingFit variance_scaling_fit(const ChaosConfig& config, const std::vector<long>& N, long discard = 1);
ScalingFit variance_scaling_fit(const ChaosConfig& config, const FilterSpec& filter, const std::vector<long>& N,
                                long discard = 1);

// 2^a, 2^{a+1}, ..., 2^b
std::vector<long> power_of_two_grid(int a, int b);

struct CltReport {
  EnsembleResult ensemble;
  double sigma2 = 0.0;
  double ks = 0.0;
  double ks_critical = 0.0;
  double variance_rel_error = 0.0;
  double skew_z = 0.0;
  double kurt_z = 0.0;
};

// R samples of N^{-1/2} Σ_{n<=N} X(n) for an SRD config, compared with Normal(0, sigma²).
CltReport clt_ensemble(const ChaosConfig& config, long N, long R);

// (mean |y|^p)^{1/p} / (mean y²)^{1/2}
double moment_ratio(const Eigen::VectorXd& samples, double p);

// (t1 ∧ t2) Σ_n gamma_{p,q}(n) for two finite-support configurations.
double cross_covariance_limit(const ChaosConfig& p, const ChaosConfig& q, double t1, double t2);

struct ContractionResult {
  std::vector<std::vector<double>> probes;
  std::vector<double> values;
  double max_abs = 0.0;
};

// The default probe set: points 1..count of the Halton sequence (bases 2, 3) mapped to (-2,2)^dim.
std::vector<std::vector<double>> halton_probes(int dim, int count = 16);

// ∫ dy h1(x, y) h2(x', y) with h = h_t of the symmetrized kernels, at probes (x, x') in R^{p+q-2}.
ContractionResult contraction_integral(const KernelSpec& kernel1, const KernelSpec& kernel2, double t,
                                       std::optional<std::vector<std::vector<double>>> probes = std::nullopt);

enum class BlockTag { S1, S2, L, F };
std::string to_string(BlockTag tag);
BlockTag block_tag_from_string(const std::string& s);

struct MixedComponent {
  std::string name;
  BlockTag tag = BlockTag::S1;
  ChaosConfig config;
  std::optional<FilterSpec> filter;
};

struct MixedReport {
  std::vector<std::string> names;
  std::vector<BlockTag> tags;
  Eigen::MatrixXd samples;      // R x components, normalized sums
  Eigen::MatrixXd correlation;  // components x components
  double threshold = 0.0;       // 3 / sqrt(R)
  double max_s2_cross = 0.0;    // max |corr| between an S2 component and a non-S2 component
  bool degenerate = false;      // fewer than two components
  bool passed = true;
};

void validate_component(const MixedComponent& c);
// All components are driven by one noise realization per replication: substream(noise, r).
MixedReport multivariate_mixed_check(const std::vector<MixedComponent>& components, long N, long R,
                                     const NoiseSpec& noise);

}  // namespace ghk
