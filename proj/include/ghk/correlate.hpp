#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ghk {

/// Fills `out` with u(first), ..., u(first + out.size() - 1); indices are 1-based.
using SequenceBlock = std::function<void(Eigen::Index first, Eigen::Ref<Eigen::VectorXd> out)>;

/// out(n) = sum_{i=1}^{L} f(i) s(n-i) for n = 1..N, with L = f.size() and
/// s(1-L), ..., s(N-1) stored in `signal` (length N+L-1).
Eigen::VectorXd causal_filter(const Eigen::VectorXd& f, const Eigen::VectorXd& signal);

/// c(n) = sum_{i=1}^{M-n} u(i) v(i+n) for n = 0..n_max. Blocked FFT for large M.
Eigen::VectorXd lagged_cross_sums(const SequenceBlock& u, const SequenceBlock& v, Eigen::Index M,
                                  Eigen::Index n_max);
Eigen::VectorXd lagged_cross_sums(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::Index n_max);

}  // namespace ghk
