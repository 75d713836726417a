#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ghk/kernel.hpp"
#include "ghk/noise.hpp"

namespace ghk {

namespace perturbation {
struct Identity {};
// L(i) = 1 + c / (i_1 + ... + i_k)
struct RationalDecay {
  double c = 0.0;
};
struct Custom {
  std::function<double(std::span<const long>)> eval;
  double bound = 1.0;
};
}  // namespace perturbation

using PerturbationSpec =
    std::variant<perturbation::Identity, perturbation::RationalDecay, perturbation::Custom>;

double perturbation_value(const PerturbationSpec& p, std::span<const long> i);
double perturbation_bound(const PerturbationSpec& p);

/// Explicit finite-support coefficients a(i), for short-range dependent processes
/// that are not generated by a homogeneous kernel.
struct FiniteCoefficients {
  int k = 1;
  std::vector<std::pair<std::vector<long>, double>> entries;
};

using CoefficientSource = std::variant<KernelSpec, FiniteCoefficients>;

struct ChaosConfig {
  CoefficientSource source;
  long M = 1000;
  PerturbationSpec perturbation = perturbation::Identity{};
  NoiseSpec noise;
  std::size_t max_grid_elements = 40'000'000;
};

int order(const ChaosConfig& c);
const KernelSpec* kernel_of(const ChaosConfig& c);
void validate_config(const ChaosConfig& c);

/// a(i) = g(i) L(i) on (0,M]^k, stored flat with the last index fastest. Entries with
/// repeated indices are held at 0: they never enter X(n) or gamma(n).
struct CoefficientGrid {
  int k = 1;
  long M = 0;
  Eigen::VectorXd a;
  Eigen::VectorXd a_sym;
  // Upper bound on the sum of a(i)^2 over i outside (0,M]^k.
  double tail_bound = 0.0;

  Eigen::Index flat(std::span<const long> i) const;
  double operator()(std::span<const long> i) const { return a[flat(i)]; }
  double sym(std::span<const long> i) const { return a_sym[flat(i)]; }
};

CoefficientGrid build_coefficients(const ChaosConfig& config);

enum class SimMode { Auto, Naive, FastProduct, LowRank };

/// Prepared simulator: coefficient grid, separable factors or the eigen-factorization
/// of the k=2 coefficient matrix are built once and reused across replications.
class PathSimulator {
 public:
  explicit PathSimulator(const ChaosConfig& config, SimMode mode = SimMode::Auto);
  ~PathSimulator();
  PathSimulator(PathSimulator&&) noexcept;

  // X(1..N) driven by `noise`.
  Eigen::VectorXd path(long N, const NoiseSpec& noise) const;
  SimMode mode() const { return mode_; }
  long M() const { return M_; }

 private:
  struct State;
  SimMode mode_;
  long M_;
  std::unique_ptr<State> state_;
};

Eigen::VectorXd simulate(const ChaosConfig& config, long N, SimMode mode = SimMode::Auto);
// Rows are paths of each config on one shared noise realization.
Eigen::MatrixXd simulate_joint(const std::vector<ChaosConfig>& configs, long N);

struct AcfResult {
  Eigen::VectorXd gamma;  // lags 0..n_max
  double trunc_bound = 0.0;
};

enum class AcfRoute { Auto, Grid, Separable };

AcfResult acf_exact(const ChaosConfig& config, long n_max, AcfRoute route = AcfRoute::Auto);
AcfResult acf_exact(const CoefficientGrid& grid, long n_max);

/// k! C_{g~} n^{2H-2}
struct AsymptoteLaw {
  double coeff = 0.0;
  double exponent = 0.0;
  double operator()(double n) const;
};
AsymptoteLaw asymptote_law(const KernelSpec& kernel);
double acf_asymptote(const ChaosConfig& config, double n);

double long_run_variance(const ChaosConfig& config);
double exact_partial_sum_variance(const Eigen::VectorXd& gamma, long N);
Eigen::VectorXd partial_sum_process(const Eigen::VectorXd& X, double H, const Eigen::VectorXd& t_grid);

// gamma_{p,q}(n) = k! Σ' ã_p(i) ã_q(i + n1) for n = -n_max..n_max (index n + n_max).
// Zero when the orders differ. Grids must share M.
Eigen::VectorXd cross_acf(const CoefficientGrid& p, const CoefficientGrid& q, long n_max);

}  // namespace ghk
