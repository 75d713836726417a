#include "ghk/presets.hpp"

#include "ghk/error.hpp"

namespace ghk {

namespace {

ChaosConfig with_kernel(KernelSpec g, long M) {
  ChaosConfig c;
  c.source = std::move(g);
  c.M = M;
  return c;
}

ChaosConfig with_entries(int k, std::vector<std::pair<std::vector<long>, double>> entries, long M) {
  ChaosConfig c;
  c.source = FiniteCoefficients{k, std::move(entries)};
  c.M = M;
  return c;
}

std::vector<Preset> build() {
  std::vector<Preset> p;
  p.push_back({"hermite-k1-d03", "k=1 product kernel x^-0.7 (H = 0.8)", with_kernel(make_product({-0.7}), 100000),
               std::nullopt});
  p.push_back({"nonsym-rosenblatt", "k=2 non-symmetric product x1^-3/4 x2^-5/8 (H = 0.625)",
               with_kernel(make_product({-0.75, -0.625}), 1500), std::nullopt});
  p.push_back({"maxcombo-k2", "k=2 max(x1 x2 / (x1^3.2 + x2^3.2), (x1 x2)^-0.6), alpha = -1.2 (H = 0.8)",
               with_kernel(make_max_combo(2, -1.2), 64), std::nullopt});
  p.push_back({"normpower-k2", "k=2 |x|^-1.2 (H = 0.8)", with_kernel(make_norm_power(2, -1.2), 64), std::nullopt});
  p.push_back({"ratio-k2", "k=2 x1 x2 / (x1^3.2 + x2^3.2), alpha = -1.2 (H = 0.8)",
               with_kernel(make_ratio_product({1.0, 1.0}, 3.2), 64), std::nullopt});
  p.push_back({"srd-finite-k2", "k=2 finite support: a(1,2) = 1, a(2,3) = 0.5",
               with_entries(2, {{{1, 2}, 1.0}, {{2, 3}, 0.5}}, 3), std::nullopt});
  p.push_back({"srd-linear-k1", "k=1 finite support: a(1) = 1, a(2) = 0.5, a(3) = 0.25",
               with_entries(1, {{{1}, 1.0}, {{2}, 0.5}, {{3}, 0.25}}, 3), std::nullopt});
  p.push_back({"frac-k1-antipersistent", "x^-0.7 filtered with the telescoping zero-sum filter, beta = -0.45 (H = 0.35)",
               with_kernel(make_product({-0.7}), 1L << 20), make_filter_spec(-0.45, 1L << 16)});
  p.push_back({"frac-k1-persistent", "x^-0.7 filtered with n^(beta-1), beta = 0.15 (H = 0.95)",
               with_kernel(make_product({-0.7}), 1L << 20), make_filter_spec(0.15, 1L << 16)});
  return p;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = build();
  return list;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw SpecError("unknown preset '" + name + "'");
}

}  // namespace ghk
