#include "ghk/correlate.hpp"

#include <algorithm>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ghk/error.hpp"

namespace ghk {

namespace {

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

constexpr double kDirectWork = 4e6;

}  // namespace

Eigen::VectorXd causal_filter(const Eigen::VectorXd& f, const Eigen::VectorXd& signal) {
  const Eigen::Index L = f.size();
  const Eigen::Index N = signal.size() - L + 1;
  if (L < 1 || N < 1) throw SpecError("causal_filter: signal shorter than filter");
  Eigen::VectorXd out(N);
  if (double(L) * double(N) <= kDirectWork) {
    // out(n) = sum_i f(i) S[n - i + L - 1] with 1-based n, i
    Eigen::VectorXd fr = f.reverse();
    for (Eigen::Index n = 0; n < N; ++n) out[n] = fr.dot(signal.segment(n, L));
    return out;
  }
  const Eigen::Index P = next_pow2(L + signal.size());
  std::vector<double> a(P, 0.0), b(P, 0.0), c;
  std::copy(f.data(), f.data() + L, a.begin());
  std::copy(signal.data(), signal.data() + signal.size(), b.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (Eigen::Index j = 0; j < P; ++j) fa[j] *= fb[j];
  fft.inv(c, fa);
  for (Eigen::Index n = 0; n < N; ++n) out[n] = c[n + L - 1];
  return out;
}

Eigen::VectorXd lagged_cross_sums(const SequenceBlock& u, const SequenceBlock& v, Eigen::Index M,
                                  Eigen::Index n_max) {
  if (n_max < 0) throw SpecError("lagged_cross_sums: n_max < 0");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_max + 1);
  if (M <= 0) return c;
  const Eigen::Index lags = std::min(n_max, M - 1);

  if (double(M) * double(lags + 1) <= kDirectWork) {
    Eigen::VectorXd uu(M), vv(M);
    u(1, uu);
    v(1, vv);
    for (Eigen::Index n = 0; n <= lags; ++n) c[n] = uu.head(M - n).dot(vv.tail(M - n));
    return c;
  }

  // Block of u starting at i0 (length B) against v on [i0, i0 + B + lags); the
  // circular correlation of size P >= B + lags has no wrap-around on lags 0..lags.
  const Eigen::Index P = std::max<Eigen::Index>(4096, next_pow2(4 * (lags + 1)));
  const Eigen::Index B = P - lags;
  Eigen::FFT<double> fft;
  std::vector<double> a(P), b(P), r;
  std::vector<std::complex<double>> fa, fb;
  Eigen::VectorXd buf(P);
  for (Eigen::Index i0 = 1; i0 <= M; i0 += B) {
    const Eigen::Index bu = std::min(B, M - i0 + 1);
    const Eigen::Index bv = std::min(B + lags, M - i0 + 1);
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    u(i0, buf.head(bu));
    std::copy(buf.data(), buf.data() + bu, a.begin());
    v(i0, buf.head(bv));
    std::copy(buf.data(), buf.data() + bv, b.begin());
    fft.fwd(fa, a);
    fft.fwd(fb, b);
    for (Eigen::Index j = 0; j < P; ++j) fa[j] = std::conj(fa[j]) * fb[j];
    fft.inv(r, fa);
    for (Eigen::Index n = 0; n <= lags; ++n) c[n] += r[n];
  }
  return c;
}

Eigen::VectorXd lagged_cross_sums(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::Index n_max) {
  if (u.size() != v.size()) throw SpecError("lagged_cross_sums: length mismatch");
  auto from = [](const Eigen::VectorXd& x) {
    return [&x](Eigen::Index first, Eigen::Ref<Eigen::VectorXd> out) {
      out = x.segment(first - 1, out.size());
    };
  };
  return lagged_cross_sums(from(u), from(v), u.size(), n_max);
}

}  // namespace ghk
