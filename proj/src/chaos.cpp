#include "ghk/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "ghk/correlate.hpp"
#include "ghk/error.hpp"
#include "ghk/overloaded.hpp"
#include "ghk/parallel.hpp"

namespace ghk {

namespace {

bool distinct(std::span<const long> i) {
  for (std::size_t a = 0; a < i.size(); ++a)
    for (std::size_t b = a + 1; b < i.size(); ++b)
      if (i[a] == i[b]) return false;
  return true;
}

// Advances a 1-based multi-index over (0,M]^k, last coordinate fastest.
bool advance(std::vector<long>& i, long M) {
  for (std::size_t j = i.size(); j-- > 0;) {
    if (++i[j] <= M) return true;
    i[j] = 1;
  }
  return false;
}

double power_sum(double p, long M) {
  double s = 0.0;
  for (long i = M; i >= 1; --i) s += std::pow(double(i), p);
  return s;
}

// Set partitions of {0..k-1} as block bitmasks, with Möbius weights
// prod_B (-1)^{|B|-1} (|B|-1)!.
struct Partition {
  std::vector<unsigned> blocks;
  double mobius = 1.0;
};

std::vector<Partition> set_partitions(int k) {
  std::vector<Partition> out;
  std::vector<int> rgs(k, 0);
  while (true) {
    int nb = *std::max_element(rgs.begin(), rgs.end()) + 1;
    Partition p;
    p.blocks.assign(nb, 0u);
    for (int j = 0; j < k; ++j) p.blocks[rgs[j]] |= 1u << j;
    for (unsigned b : p.blocks) {
      int sz = __builtin_popcount(b);
      p.mobius *= ((sz - 1) % 2 ? -1.0 : 1.0) * std::tgamma(double(sz));
    }
    out.push_back(std::move(p));
    // next restricted growth string
    int j = k - 1;
    for (; j > 0; --j) {
      int mx = *std::max_element(rgs.begin(), rgs.begin() + j);
      if (rgs[j] <= mx) {
        ++rgs[j];
        std::fill(rgs.begin() + j + 1, rgs.end(), 0);
        break;
      }
    }
    if (j == 0) break;
  }
  return out;
}

bool separable(const ChaosConfig& c) {
  const KernelSpec* g = kernel_of(c);
  return g && is_product(*g) && std::holds_alternative<perturbation::Identity>(c.perturbation);
}

const std::vector<double>& product_gamma(const ChaosConfig& c) {
  return std::get<form::Product>(kernel_of(c)->form).gamma;
}

// Σ_{i in [1,M-n]^k} A(i) B(i + n1) on flat grids with the last index fastest.
double lagged_box_sum(const Eigen::VectorXd& A, const Eigen::VectorXd& B, int k, long M, long n) {
  const long L = M - n;
  if (L <= 0) return 0.0;
  std::vector<Eigen::Index> stride(k);
  Eigen::Index s = 1;
  for (int j = k - 1; j >= 0; --j) {
    stride[j] = s;
    s *= M;
  }
  Eigen::Index shift = 0;
  for (int j = 0; j < k; ++j) shift += n * stride[j];
  if (k == 1) return A.head(L).dot(B.segment(shift, L));
  std::vector<long> pre(k - 1, 0);
  double total = 0.0;
  while (true) {
    Eigen::Index base = 0;
    for (int j = 0; j < k - 1; ++j) base += pre[j] * stride[j];
    total += A.segment(base, L).dot(B.segment(base + shift, L));
    int j = k - 2;
    for (; j >= 0; --j) {
      if (++pre[j] < L) break;
      pre[j] = 0;
    }
    if (j < 0) break;
  }
  return total;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

double bias_bound(int k, double sum_sq_sym, double tail) {
  if (tail <= 0) return 0.0;
  return 2.0 * factorial(k) * std::sqrt(sum_sq_sym + tail) * std::sqrt(tail);
}

}  // namespace

double perturbation_value(const PerturbationSpec& p, std::span<const long> i) {
  return std::visit(overloaded{[](const perturbation::Identity&) { return 1.0; },
                               [&](const perturbation::RationalDecay& r) {
                                 double s = 0.0;
                                 for (long v : i) s += double(v);
                                 return 1.0 + r.c / s;
                               },
                               [&](const perturbation::Custom& c) { return c.eval(i); }},
                    p);
}

double perturbation_bound(const PerturbationSpec& p) {
  return std::visit(overloaded{[](const perturbation::Identity&) { return 1.0; },
                               [](const perturbation::RationalDecay& r) { return 1.0 + std::abs(r.c); },
                               [](const perturbation::Custom& c) { return c.bound; }},
                    p);
}

int order(const ChaosConfig& c) {
  return std::visit(overloaded{[](const KernelSpec& g) { return g.k; },
                               [](const FiniteCoefficients& f) { return f.k; }},
                    c.source);
}

const KernelSpec* kernel_of(const ChaosConfig& c) { return std::get_if<KernelSpec>(&c.source); }

void validate_config(const ChaosConfig& c) {
  const int k = order(c);
  if (k < 1 || k > kMaxOrder) throw SpecError("chaos: unsupported order " + std::to_string(k));
  if (c.M < k) throw SpecError("chaos: truncation M must be at least k");
  if (const KernelSpec* g = kernel_of(c)) require_valid(*g);
  if (auto* f = std::get_if<FiniteCoefficients>(&c.source)) {
    for (const auto& [idx, v] : f->entries) {
      if (int(idx.size()) != k) throw SpecError("chaos: coefficient index has wrong dimension");
      for (long i : idx)
        if (i < 1 || i > c.M) throw SpecError("chaos: coefficient index outside (0,M]^k");
      if (!distinct(idx)) throw SpecError("chaos: diagonal coefficients do not enter the off-diagonal sum");
      if (!std::isfinite(v)) throw SpecError("chaos: non-finite coefficient");
    }
  }
  if (auto* p = std::get_if<perturbation::RationalDecay>(&c.perturbation))
    if (!std::isfinite(p->c) || p->c <= -double(k)) throw SpecError("chaos: RationalDecay must keep L > 0");
  if (auto* p = std::get_if<perturbation::Custom>(&c.perturbation))
    if (!p->eval || !(p->bound > 0)) throw SpecError("chaos: custom perturbation needs an evaluator and a bound");
}

Eigen::Index CoefficientGrid::flat(std::span<const long> i) const {
  Eigen::Index f = 0;
  for (int j = 0; j < k; ++j) f = f * M + (i[j] - 1);
  return f;
}

CoefficientGrid build_coefficients(const ChaosConfig& c) {
  validate_config(c);
  CoefficientGrid g;
  g.k = order(c);
  g.M = c.M;
  const double elements = std::pow(double(c.M), g.k);
  if (elements > double(c.max_grid_elements))
    throw ResourceError("coefficient grid of M^k = " + std::to_string(c.M) + "^" + std::to_string(g.k) +
                        " elements exceeds the cap of " + std::to_string(c.max_grid_elements));
  const Eigen::Index n = Eigen::Index(elements);
  g.a = Eigen::VectorXd::Zero(n);

  std::vector<long> i(g.k, 1);
  if (const KernelSpec* kern = kernel_of(c)) {
    std::vector<double> x(g.k);
    Eigen::Index f = 0;
    do {
      if (distinct(i)) {
        for (int j = 0; j < g.k; ++j) x[j] = double(i[j]);
        g.a[f] = evaluate(*kern, x) * perturbation_value(c.perturbation, i);
      }
      ++f;
    } while (advance(i, c.M));
  } else {
    for (const auto& [idx, v] : std::get<FiniteCoefficients>(c.source).entries)
      g.a[g.flat(idx)] += v * perturbation_value(c.perturbation, idx);
  }

  if (g.k == 1) {
    g.a_sym = g.a;
  } else if (g.k == 2) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(g.a.data(), c.M, c.M);
    g.a_sym.resize(n);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> S(g.a_sym.data(), c.M, c.M);
    S = 0.5 * (A + A.transpose());
  } else {
    g.a_sym = Eigen::VectorXd::Zero(n);
    std::fill(i.begin(), i.end(), 1);
    std::vector<long> p(g.k);
    const double nperm = factorial(g.k);
    Eigen::Index f = 0;
    do {
      if (distinct(i)) {
        double s = 0.0;
        detail::for_each_permutation(g.k, [&](std::span<const int> perm) {
          for (int j = 0; j < g.k; ++j) p[j] = i[perm[j]];
          s += g.a[g.flat(p)];
        });
        g.a_sym[f] = s / nperm;
      }
      ++f;
    } while (advance(i, c.M));
  }

  if (const KernelSpec* kern = kernel_of(c)) {
    // Σ_{i outside the box} env(i)^2 <= Σ_{m,m'} c c' [∏(S_M + T_M) - ∏ S_M], with
    // S_M(p) = Σ_{i<=M} i^p and T_M(p) = ∫_M^∞ x^p dx for p = γ_mj + γ_m'j < -1.
    const auto& terms = kern->envelope->terms;
    std::map<double, double> cache;
    auto S = [&](double p) {
      auto it = cache.find(p);
      if (it != cache.end()) return it->second;
      return cache[p] = power_sum(p, c.M);
    };
    double tail = 0.0;
    for (const auto& a : terms)
      for (const auto& b : terms) {
        double full = 1.0, box = 1.0;
        for (int j = 0; j < g.k; ++j) {
          const double p = a.gamma[j] + b.gamma[j];
          const double s = S(p);
          full *= s + std::pow(double(c.M), p + 1.0) / (-p - 1.0);
          box *= s;
        }
        tail += a.coeff * b.coeff * (full - box);
      }
    const double L = perturbation_bound(c.perturbation);
    g.tail_bound = L * L * tail;
  }
  return g;
}

struct PathSimulator::State {
  // Naive: nonzero off-diagonal entries.
  std::vector<std::vector<long>> idx;
  std::vector<double> val;
  // FastProduct
  std::vector<Partition> partitions;
  std::map<unsigned, Eigen::VectorXd> factors;
  // LowRank
  Eigen::VectorXd lambda;
  Eigen::MatrixXd vectors;
  int k = 1;
};

PathSimulator::PathSimulator(const ChaosConfig& config, SimMode mode)
    : mode_(mode), M_(config.M), state_(std::make_unique<State>()) {
  validate_config(config);
  const int k = order(config);
  state_->k = k;
  if (mode_ == SimMode::Auto) {
    if (separable(config))
      mode_ = SimMode::FastProduct;
    else if (k == 2 && kernel_of(config))
      mode_ = SimMode::LowRank;
    else
      mode_ = SimMode::Naive;
  }
  switch (mode_) {
    case SimMode::FastProduct: {
      if (!separable(config))
        throw SpecError("simulate: fast_product requires a product kernel with Identity perturbation");
      const auto& gamma = product_gamma(config);
      state_->partitions = set_partitions(k);
      for (const auto& p : state_->partitions)
        for (unsigned b : p.blocks) {
          if (state_->factors.count(b)) continue;
          double e = 0.0;
          for (int j = 0; j < k; ++j)
            if (b & (1u << j)) e += gamma[j];
          Eigen::VectorXd f(config.M);
          for (long i = 1; i <= config.M; ++i) f[i - 1] = std::pow(double(i), e);
          state_->factors.emplace(b, std::move(f));
        }
      break;
    }
    case SimMode::LowRank: {
      if (k != 2) throw SpecError("simulate: low-rank mode requires k = 2");
      CoefficientGrid grid = build_coefficients(config);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> S(
          grid.a_sym.data(), config.M, config.M);
      const Eigen::MatrixXd dense = S;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
      const Eigen::VectorXd& ev = es.eigenvalues();
      // Keep the largest |lambda| until the dropped mass is negligible.
      std::vector<Eigen::Index> order_idx(ev.size());
      std::iota(order_idx.begin(), order_idx.end(), 0);
      std::sort(order_idx.begin(), order_idx.end(),
                [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev[a]) > std::abs(ev[b]); });
      const double total = ev.cwiseAbs().sum();
      double dropped = total;
      Eigen::Index keep = 0;
      while (keep < ev.size() && dropped > 1e-13 * total) dropped -= std::abs(ev[order_idx[keep++]]);
      state_->lambda.resize(keep);
      state_->vectors.resize(config.M, keep);
      for (Eigen::Index r = 0; r < keep; ++r) {
        state_->lambda[r] = ev[order_idx[r]];
        state_->vectors.col(r) = es.eigenvectors().col(order_idx[r]);
      }
      break;
    }
    case SimMode::Naive: {
      CoefficientGrid grid = build_coefficients(config);
      std::vector<long> i(k, 1);
      Eigen::Index f = 0;
      do {
        if (grid.a[f] != 0.0) {
          state_->idx.push_back(i);
          state_->val.push_back(grid.a[f]);
        }
        ++f;
      } while (advance(i, config.M));
      break;
    }
    case SimMode::Auto:
      break;
  }
}

PathSimulator::~PathSimulator() = default;
PathSimulator::PathSimulator(PathSimulator&&) noexcept = default;

Eigen::VectorXd PathSimulator::path(long N, const NoiseSpec& noise) const {
  if (N < 1) throw SpecError("simulate: path length must be at least 1");
  const long M = M_;
  // eps_{1-M}, ..., eps_{N-1}; eps_j sits at position j + M - 1.
  const Eigen::VectorXd E = noise_block(noise, 1 - M, N + M - 1);
  Eigen::VectorXd X = Eigen::VectorXd::Zero(N);
  switch (mode_) {
    case SimMode::Naive: {
      Eigen::VectorXd term(N);
      for (std::size_t e = 0; e < state_->idx.size(); ++e) {
        const auto& i = state_->idx[e];
        term = E.segment(M - i[0], N);
        for (std::size_t j = 1; j < i.size(); ++j) term.array() *= E.segment(M - i[j], N).array();
        X += state_->val[e] * term;
      }
      break;
    }
    case SimMode::FastProduct: {
      std::vector<Eigen::VectorXd> powers(state_->k + 1);
      powers[1] = E;
      for (int p = 2; p <= state_->k; ++p) powers[p] = powers[p - 1].cwiseProduct(E);
      std::map<unsigned, Eigen::VectorXd> W;
      for (const auto& [b, f] : state_->factors) W.emplace(b, causal_filter(f, powers[__builtin_popcount(b)]));
      for (const auto& p : state_->partitions) {
        Eigen::VectorXd prod = Eigen::VectorXd::Constant(N, p.mobius);
        for (unsigned b : p.blocks) prod.array() *= W.at(b).array();
        X += prod;
      }
      break;
    }
    case SimMode::LowRank: {
      for (Eigen::Index r = 0; r < state_->lambda.size(); ++r) {
        Eigen::VectorXd s = causal_filter(state_->vectors.col(r), E);
        X += state_->lambda[r] * s.cwiseAbs2();
      }
      break;
    }
    case SimMode::Auto:
      break;
  }
  return X;
}

Eigen::VectorXd simulate(const ChaosConfig& config, long N, SimMode mode) {
  return PathSimulator(config, mode).path(N, config.noise);
}

Eigen::MatrixXd simulate_joint(const std::vector<ChaosConfig>& configs, long N) {
  if (configs.empty()) throw SpecError("simulate_joint: no configs");
  for (const auto& c : configs)
    if (!(c.noise == configs.front().noise)) throw SpecError("simulate_joint: configs must share one noise spec");
  Eigen::MatrixXd out(configs.size(), N);
  for (std::size_t j = 0; j < configs.size(); ++j) out.row(j) = simulate(configs[j], N).transpose();
  return out;
}

AcfResult acf_exact(const CoefficientGrid& g, long n_max) {
  if (n_max < 0) throw SpecError("acf_exact: n_max < 0");
  AcfResult r;
  r.gamma = Eigen::VectorXd::Zero(n_max + 1);
  const double kf = factorial(g.k);
  const long lags = std::min<long>(n_max, g.M - 1);
  if (g.k == 1) {
    r.gamma.head(lags + 1) = lagged_cross_sums(g.a_sym, g.a_sym, lags);
  } else {
    parallel_for(0, lags + 1, [&](std::ptrdiff_t n) {
      r.gamma[n] = kf * lagged_box_sum(g.a_sym, g.a_sym, g.k, g.M, long(n));
    });
  }
  r.trunc_bound = bias_bound(g.k, g.a_sym.squaredNorm(), g.tail_bound);
  return r;
}

namespace {

AcfResult acf_separable(const ChaosConfig& c, long n_max, double tail_bound) {
  const auto& gamma = product_gamma(c);
  const int k = int(gamma.size());
  const long M = c.M;
  const long lags = std::min<long>(n_max, M - 1);
  auto parts = set_partitions(k);
  std::vector<std::vector<int>> perms;
  detail::for_each_permutation(k, [&](std::span<const int> p) { perms.emplace_back(p.begin(), p.end()); });

  // Lagged sums Σ_i i^p (i+n)^q, keyed by the exponent index multisets.
  std::map<std::pair<std::vector<int>, std::vector<int>>, Eigen::VectorXd> cache;
  auto xc = [&](std::vector<int> su, std::vector<int> sv) -> const Eigen::VectorXd& {
    std::sort(su.begin(), su.end());
    std::sort(sv.begin(), sv.end());
    auto key = std::make_pair(su, sv);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    double p = 0.0, q = 0.0;
    for (int j : su) p += gamma[j];
    for (int j : sv) q += gamma[j];
    auto gen = [](double e) {
      return [e](Eigen::Index first, Eigen::Ref<Eigen::VectorXd> out) {
        for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = std::pow(double(first + j), e);
      };
    };
    return cache.emplace(key, lagged_cross_sums(gen(p), gen(q), M, lags)).first->second;
  };

  Eigen::VectorXd total = Eigen::VectorXd::Zero(lags + 1);
  for (const auto& s : perms)
    for (const auto& t : perms)
      for (const auto& part : parts) {
        Eigen::VectorXd prod = Eigen::VectorXd::Constant(lags + 1, part.mobius);
        for (unsigned b : part.blocks) {
          std::vector<int> su, sv;
          for (int j = 0; j < k; ++j)
            if (b & (1u << j)) {
              su.push_back(s[j]);
              sv.push_back(t[j]);
            }
          prod.array() *= xc(su, sv).array();
        }
        total += prod;
      }
  AcfResult r;
  r.gamma = Eigen::VectorXd::Zero(n_max + 1);
  r.gamma.head(lags + 1) = total / factorial(k);
  r.trunc_bound = bias_bound(k, r.gamma[0] / factorial(k), tail_bound);
  return r;
}

double separable_tail_bound(const ChaosConfig& c) {
  const auto& gamma = product_gamma(c);
  double full = 1.0, box = 1.0;
  for (double g : gamma) {
    const double p = 2 * g;
    const double s = power_sum(p, c.M);
    full *= s + std::pow(double(c.M), p + 1.0) / (-p - 1.0);
    box *= s;
  }
  return full - box;
}

}  // namespace

AcfResult acf_exact(const ChaosConfig& c, long n_max, AcfRoute route) {
  if (n_max < 0) throw SpecError("acf_exact: n_max < 0");
  validate_config(c);
  const int k = order(c);
  if (route == AcfRoute::Auto) {
    const double cells = std::pow(double(c.M), k);
    const double work = cells * double(std::min<long>(n_max + 1, c.M));
    route = (separable(c) && k >= 2 && (cells > double(c.max_grid_elements) || work > 2e9)) ? AcfRoute::Separable
                                                                                           : AcfRoute::Grid;
  }
  if (route == AcfRoute::Separable) {
    if (!separable(c)) throw SpecError("acf_exact: separable route requires a product kernel with Identity perturbation");
    return acf_separable(c, n_max, separable_tail_bound(c));
  }
  return acf_exact(build_coefficients(c), n_max);
}

double AsymptoteLaw::operator()(double n) const { return coeff * std::pow(n, exponent); }

AsymptoteLaw asymptote_law(const KernelSpec& kernel) {
  const double H = hurst(kernel);
  return {factorial(kernel.k) * c_constant_auto(symmetrize(kernel)).value, 2 * H - 2};
}

double acf_asymptote(const ChaosConfig& c, double n) {
  const KernelSpec* g = kernel_of(c);
  if (!g) throw SpecError("acf_asymptote: requires a kernel-generated (LRD) config");
  return asymptote_law(*g)(n);
}

double long_run_variance(const ChaosConfig& c) {
  if (const KernelSpec* g = kernel_of(c))
    throw SpecError("not SRD: kernel-generated coefficients have autocovariance ~ n^" +
                    std::to_string(2 * hurst(*g) - 2) + ", which is not summable");
  auto r = acf_exact(build_coefficients(c), c.M);
  const double abs_sum = r.gamma[0] + 2.0 * r.gamma.tail(r.gamma.size() - 1).cwiseAbs().sum();
  const double s2 = r.gamma[0] + 2.0 * r.gamma.tail(r.gamma.size() - 1).sum();
  if (!(s2 > 1e-12 * std::max(abs_sum, 1e-300)))
    throw NumericalError("long_run_variance: sigma^2 <= 0 (degenerate SRD process)");
  return s2;
}

double exact_partial_sum_variance(const Eigen::VectorXd& gamma, long N) {
  if (N < 1) throw SpecError("exact_partial_sum_variance: N must be positive");
  if (gamma.size() < N) throw SpecError("exact_partial_sum_variance: need gamma(0..N-1)");
  double v = double(N) * gamma[0];
  for (long n = 1; n < N; ++n) v += 2.0 * double(N - n) * gamma[n];
  return v;
}

Eigen::VectorXd partial_sum_process(const Eigen::VectorXd& X, double H, const Eigen::VectorXd& t_grid) {
  if (!(H > 0.0 && H <= 1.0)) throw SpecError("partial_sum_process: H must lie in (0,1]");
  const long N = X.size();
  if (N < 1) throw SpecError("partial_sum_process: empty path");
  Eigen::VectorXd cum(N + 1);
  cum[0] = 0.0;
  for (long n = 0; n < N; ++n) cum[n + 1] = cum[n] + X[n];
  const double scale = std::pow(double(N), -H);
  Eigen::VectorXd Y(t_grid.size());
  for (Eigen::Index j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    if (!(t >= 0.0 && t <= 1.0)) throw SpecError("partial_sum_process: t outside [0,1]");
    const long m = std::min<long>(N, long(std::floor(double(N) * t + 1e-9)));
    Y[j] = scale * cum[m];
  }
  return Y;
}

Eigen::VectorXd cross_acf(const CoefficientGrid& p, const CoefficientGrid& q, long n_max) {
  if (n_max < 0) throw SpecError("cross_acf: n_max < 0");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n_max + 1);
  if (p.k != q.k) return out;
  if (p.M != q.M) throw SpecError("cross_acf: grids must share M");
  const double kf = factorial(p.k);
  for (long n = 0; n <= n_max; ++n) {
    out[n_max + n] = kf * lagged_box_sum(p.a_sym, q.a_sym, p.k, p.M, n);
    if (n > 0) out[n_max - n] = kf * lagged_box_sum(q.a_sym, p.a_sym, p.k, p.M, n);
  }
  return out;
}

}  // namespace ghk
