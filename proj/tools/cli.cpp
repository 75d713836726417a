#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iostream>
#include <iomanip>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ghk/error.hpp"
#include "ghk/presets.hpp"
#include "ghk/spectral.hpp"
#include "ghk/stats.hpp"

namespace ghk::cli {

namespace {

using io::json;

std::string short_number(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

const std::set<std::string> kKeys = {"preset", "kernel", "gamma",         "alpha",         "k",     "a",
                                     "b",      "symmetric", "M",          "N",             "reps",  "seed",
                                     "noise",  "beta",   "filter-family", "filter-length", "out",   "tol",
                                     "lags",   "n-min",  "t",             "window",        "mode",  "max-grid",
                                     "max-reps", "components"};

template <class T>
T get(const json& s, const std::string& key) {
  try {
    return s.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SpecError("bad value for '" + key + "': " + e.what());
  }
}

std::vector<long> parse_grid(const json& v) {
  std::vector<long> N;
  if (v.is_array()) {
    for (const auto& e : v) N.push_back(e.get<long>());
  } else if (v.is_number_integer()) {
    N.push_back(v.get<long>());
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto dots = s.find("..");
    try {
      if (dots == std::string::npos) {
        std::size_t pos = 0;
        while (pos <= s.size()) {
          const auto comma = std::min(s.find(',', pos), s.size());
          N.push_back(std::stol(s.substr(pos, comma - pos)));
          pos = comma + 1;
        }
      } else {
        const long a = std::stol(s.substr(0, dots)), b = std::stol(s.substr(dots + 2));
        if (a < 1 || b < a) throw SpecError("N range a..b needs 1 <= a <= b");
        for (long n = a; n <= b; n *= 2) N.push_back(n);
      }
    } catch (const std::logic_error&) {
      throw SpecError("cannot parse N grid '" + s + "'");
    }
  } else {
    throw SpecError("N: expected an integer, a list or a range a..b");
  }
  for (std::size_t i = 0; i < N.size(); ++i)
    if (N[i] < 1 || (i && N[i] <= N[i - 1])) throw SpecError("N grid must be positive and increasing");
  return N;
}

KernelSpec kernel_from_settings(const json& s, bool check) {
  const auto form = get<std::string>(s, "kernel");
  auto need = [&](const char* key) {
    if (!s.contains(key)) throw SpecError("kernel '" + form + "' needs --" + key);
  };
  KernelSpec g;
  if (form == "product") {
    need("gamma");
    g = make_product(get<std::vector<double>>(s, "gamma"));
  } else if (form == "norm_power" || form == "max_combo") {
    need("k");
    need("alpha");
    g = form == "norm_power" ? make_norm_power(get<int>(s, "k"), get<double>(s, "alpha"))
                             : make_max_combo(get<int>(s, "k"), get<double>(s, "alpha"));
  } else if (form == "ratio_product") {
    need("a");
    need("b");
    g = make_ratio_product(get<std::vector<double>>(s, "a"), get<double>(s, "b"));
  } else {
    throw SpecError("unknown kernel '" + form + "' (expected product, norm_power, ratio_product or max_combo)");
  }
  if (s.value("symmetric", false)) g = symmetrize(g);
  if (check) require_valid(g);
  return g;
}

SimMode mode_from_string(const std::string& m) {
  if (m == "auto") return SimMode::Auto;
  if (m == "naive") return SimMode::Naive;
  if (m == "fast-product") return SimMode::FastProduct;
  if (m == "low-rank") return SimMode::LowRank;
  throw SpecError("unknown mode '" + m + "' (expected auto, naive, fast-product or low-rank)");
}

std::string mode_name(SimMode m) {
  switch (m) {
    case SimMode::Auto:
      return "auto";
    case SimMode::Naive:
      return "naive";
    case SimMode::FastProduct:
      return "fast-product";
    case SimMode::LowRank:
      return "low-rank";
  }
  return "auto";
}

MixedComponent component_from_json(const json& j, const NoiseSpec& noise) {
  MixedComponent c;
  c.name = get<std::string>(j, "name");
  c.tag = block_tag_from_string(get<std::string>(j, "tag"));
  if (j.contains("preset")) {
    const auto& p = find_preset(get<std::string>(j, "preset"));
    c.config = p.config;
    c.filter = p.filter;
  } else if (j.contains("config")) {
    c.config = io::config_from_json(j["config"]);
  } else {
    throw SpecError("component '" + c.name + "' needs 'preset' or 'config'");
  }
  if (j.contains("filter")) c.filter = io::filter_from_json(j["filter"]);
  c.config.noise = noise;
  validate_component(c);
  return c;
}

json component_to_json(const MixedComponent& c) {
  json j{{"name", c.name}, {"tag", to_string(c.tag)}, {"config", io::config_to_json(c.config)}};
  if (c.filter) j["filter"] = io::filter_to_json(*c.filter);
  return j;
}

const KernelSpec& require_kernel(const ExperimentConfig& c) {
  if (!c.chaos) throw SpecError(c.kind + ": needs a kernel (--kernel or --preset)");
  const KernelSpec* g = kernel_of(*c.chaos);
  if (!g) throw SpecError(c.kind + ": needs a kernel source, not finite coefficients");
  return *g;
}

const ChaosConfig& require_chaos(const ExperimentConfig& c) {
  if (!c.chaos) throw SpecError(c.kind + ": needs a coefficient source (--kernel or --preset)");
  return *c.chaos;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Eigen::VectorXd to_vector(const std::vector<long>& v) {
  Eigen::VectorXd out(Eigen::Index(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[Eigen::Index(i)] = double(v[i]);
  return out;
}

Eigen::VectorXd iota(Eigen::Index n, double first) {
  return Eigen::VectorXd::LinSpaced(n, first, first + double(n - 1));
}

class Report {
 public:
  explicit Report(const ExperimentConfig& c) : cfg_(c) {}

  json& metrics() { return metrics_; }

  void criterion(const std::string& name, double value, const std::string& rule, double threshold, bool passed) {
    criteria_.push_back(
        {{"name", name}, {"value", value}, {"rule", rule}, {"threshold", threshold}, {"passed", passed}});
    passed_ = passed_ && passed;
  }

  void csv(const std::string& file, const std::vector<std::string>& header, const std::vector<Eigen::VectorXd>& cols) {
    io::write_csv(cfg_.out / file, header, cols);
    files_.push_back(file);
  }

  RunOutput finish() {
    json r;
    r["schema"] = 1;
    r["experiment"] = cfg_.kind;
    r["timestamp"] = utc_timestamp();
    r["params"] = config_to_json(cfg_);
    r["seeds"] = {{"seed", cfg_.seed}, {"streams", "replication r uses noise stream r"}};
    r["metrics"] = metrics_;
    r["criteria"] = criteria_;
    r["passed"] = passed_;
    r["files"] = files_;
    io::write_json(cfg_.out / "report.json", r);
    return {r, passed_};
  }

 private:
  const ExperimentConfig& cfg_;
  json metrics_ = json::object();
  json criteria_ = json::array();
  json files_ = json::array();
  bool passed_ = true;
};

RunOutput run_validate(const ExperimentConfig& c, Report& rep) {
  const KernelSpec& g = require_kernel(c);
  const auto v = validate(g);
  json checks = json::array();
  for (const auto& ch : v.checks) checks.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
  rep.metrics()["kernel"] = io::kernel_to_json(g);
  rep.metrics()["checks"] = checks;
  rep.metrics()["valid"] = v.ok();
  if (v.ok()) {
    rep.metrics()["hurst"] = hurst(g);
    const auto C = c_constant_auto(g);
    rep.metrics()["c_constant"] = C.value;
    rep.metrics()["c_constant_error"] = C.error_estimate;
  }
  auto result = rep.finish();
  if (!v.ok()) throw SpecError("invalid kernel: " + v.failures());
  return result;
}

void run_simulate(const ExperimentConfig& c, Report& rep) {
  const ChaosConfig& cfg = require_chaos(c);
  const long N = c.N.back();
  const PathSimulator sim(cfg, c.mode);
  std::vector<std::string> header{"n"};
  std::vector<Eigen::VectorXd> cols{iota(N, 1.0)};
  double sum = 0.0, sum_sq = 0.0;
  for (long r = 0; r < c.reps; ++r) {
    cols.push_back(sim.path(N, substream(cfg.noise, std::uint64_t(r))));
    header.push_back("x" + std::to_string(r));
    sum += cols.back().sum();
    sum_sq += cols.back().squaredNorm();
  }
  rep.csv("paths.csv", header, cols);
  const double count = double(N) * double(c.reps);
  rep.metrics()["mode"] = mode_name(sim.mode());
  rep.metrics()["sample_mean"] = sum / count;
  rep.metrics()["sample_second_moment"] = sum_sq / count;
  rep.metrics()["gamma0_exact"] = acf_exact(cfg, 0).gamma[0];
}

void run_acf(const ExperimentConfig& c, Report& rep) {
  const ChaosConfig& cfg = require_chaos(c);
  const auto acf = acf_exact(cfg, c.lags);
  const Eigen::Index n = acf.gamma.size();
  rep.metrics()["trunc_bound"] = acf.trunc_bound;
  if (!kernel_of(cfg)) {
    rep.csv("acf.csv", {"n", "gamma"}, {iota(n, 0.0), acf.gamma});
    rep.metrics()["long_run_variance"] = long_run_variance(cfg);
    return;
  }
  Eigen::VectorXd asym(n), ratio(n);
  asym[0] = ratio[0] = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 1; i < n; ++i) {
    asym[i] = acf_asymptote(cfg, double(i));
    ratio[i] = acf.gamma[i] / asym[i];
  }
  rep.csv("acf.csv", {"n", "gamma", "asymptote", "ratio"}, {iota(n, 0.0), acf.gamma, asym, ratio});
  if (c.n_min > c.lags || c.n_min < 1) throw SpecError("acf: need 1 <= n-min <= lags");
  const auto band = ratio.segment(c.n_min, c.lags - c.n_min + 1);
  const double tol = *c.tol;
  rep.metrics()["ratio_min"] = band.minCoeff();
  rep.metrics()["ratio_max"] = band.maxCoeff();
  const double worst = std::max(1.0 - band.minCoeff(), band.maxCoeff() - 1.0);
  rep.criterion("acf_ratio_band", worst, "max |ratio - 1| over [n-min, lags] <= tol", tol, worst <= tol);
}

void run_scaling(const ExperimentConfig& c, Report& rep) {
  const ChaosConfig& cfg = require_chaos(c);
  const ScalingFit fit = c.filter ? variance_scaling_fit(cfg, *c.filter, c.N) : variance_scaling_fit(cfg, c.N);
  Eigen::VectorXd used = Eigen::VectorXd::Ones(Eigen::Index(c.N.size()));
  used.head(fit.discarded).setZero();
  rep.csv("scaling.csv", {"N", "variance", "in_fit"}, {to_vector(c.N), fit.variances, used});
  rep.metrics()["slope"] = fit.slope;
  rep.metrics()["intercept"] = fit.intercept;
  rep.metrics()["r2"] = fit.r2;
  rep.metrics()["expected_slope"] = fit.expected_slope;
  rep.metrics()["variances"] = std::vector<double>(fit.variances.data(), fit.variances.data() + fit.variances.size());
  const double dev = std::abs(fit.slope - fit.expected_slope);
  rep.criterion("slope", dev, "|slope - 2H| <= tol", *c.tol, dev <= *c.tol);
}

void run_clt(const ExperimentConfig& c, Report& rep) {
  const ChaosConfig& cfg = require_chaos(c);
  const auto r = clt_ensemble(cfg, c.N.back(), c.reps);
  rep.csv("samples.csv", {"r", "y"}, {iota(c.reps, 0.0), r.ensemble.samples.col(0)});
  rep.metrics()["sigma2"] = r.sigma2;
  rep.metrics()["sample_variance"] = r.ensemble.summary[0].variance;
  rep.metrics()["ks"] = r.ks;
  rep.metrics()["ks_critical_1pct"] = r.ks_critical;
  rep.metrics()["skewness_z"] = r.skew_z;
  rep.metrics()["kurtosis_z"] = r.kurt_z;
  rep.criterion("ks", r.ks, "KS distance < tol", *c.tol, r.ks < *c.tol);
  rep.criterion("variance", r.variance_rel_error, "|var / sigma2 - 1| < 0.05", 0.05, r.variance_rel_error < 0.05);
}

void run_filter(const ExperimentConfig& c, Report& rep) {
  if (!c.filter) throw SpecError("filter: needs --beta or a preset with a filter");
  const FilterSpec& f = *c.filter;
  const Eigen::VectorXd C = build_filter(f);
  const Eigen::VectorXd S = filter_partial_sums(C);
  const Eigen::Index L = C.size();
  const Eigen::VectorXd m = iota(L, 1.0);
  Eigen::VectorXd scaled(L);
  for (Eigen::Index i = 0; i < L; ++i) scaled[i] = C[i] * std::pow(m[i], 1.0 - f.beta);
  std::vector<std::string> header{"m", "C", "partial_sum", "C_scaled"};
  std::vector<Eigen::VectorXd> cols{m, C, S, scaled};
  const auto tail = filter_tail(f);
  rep.metrics()["family"] = io::filter_family_name(f.family);
  rep.metrics()["sum_sq_tail"] = tail.sum_sq_tail;
  if (f.family == FilterFamily::TelescopingZeroSum) {
    Eigen::VectorXd closed(L);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < L; ++i) {
      closed[i] = std::pow(m[i], f.beta) / f.beta;
      worst = std::max(worst, std::abs(S[i] - closed[i]) / std::abs(closed[i]));
    }
    header.push_back("closed_form");
    cols.push_back(closed);
    rep.metrics()["residual"] = tail.residual;
    rep.criterion("partial_sums", worst, "max relative deviation from m^beta / beta", *c.tol, worst <= *c.tol);
  }
  rep.csv("filter.csv", header, cols);
  const Eigen::Index probe = std::min<Eigen::Index>(L, 10000);
  const double r = scaled[probe - 1];
  rep.metrics()["scaled_at"] = probe;
  rep.criterion("power_law", r, "C_n n^(1-beta) in [0.98, 1.02] at n = min(length, 10000)", 0.02,
                std::abs(r - 1.0) <= 0.02);
}

void run_limit_kernel(const ExperimentConfig& c, Report& rep) {
  const KernelSpec& g = require_kernel(c);
  L2ErrorOptions opts;
  opts.window = c.window;
  const Eigen::Index n = Eigen::Index(c.N.size());
  Eigen::VectorXd err(n), upper(n), far(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto e = l2_discretization_error(g, c.t, c.N[i], opts);
    err[i] = e.rel_error;
    upper[i] = e.rel_error_upper;
    far[i] = e.far_field_bound;
  }
  rep.csv("l2_error.csv", {"N", "rel_error", "rel_error_upper", "far_field_bound"}, {to_vector(c.N), err, upper, far});
  rep.metrics()["norm_sq"] = ht_norm_sq(g, c.t);
  bool monotone = true;
  for (Eigen::Index i = 1; i < n; ++i) monotone = monotone && err[i] <= 1.01 * err[i - 1];
  rep.criterion("nonincreasing", monotone ? 1.0 : 0.0, "each error <= 1.01 x the previous", 1.01, monotone);
  rep.criterion("final_error", err[n - 1], "error at the largest N < tol", *c.tol, err[n - 1] < *c.tol);
}

void run_spectral(const ExperimentConfig& c, Report& rep) {
  const KernelSpec& g = require_kernel(c);
  const SpectralKernel sk = make_spectral(g);
  if (!sk.closed_form && g.k > 1)
    throw SpecError("spectral: numeric transforms are limited to k = 1; use a product kernel for k > 1");
  std::vector<std::vector<double>> samples;
  if (g.k == 1)
    samples = {{0.5}, {1.0}, {-1.5}};
  else if (g.k == 2)
    samples = {{0.5, 1.0}, {-1.0, 0.7}, {1.3, -0.4}};
  else
    samples = {std::vector<double>(g.k, 0.8)};
  std::vector<Eigen::VectorXd> cols(g.k + 2, Eigen::VectorXd(Eigen::Index(samples.size())));
  std::vector<std::string> header;
  for (int j = 0; j < g.k; ++j) header.push_back("u" + std::to_string(j + 1));
  header.insert(header.end(), {"re", "im"});
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto v = ghat(sk, samples[s]);
    for (int j = 0; j < g.k; ++j) cols[j][Eigen::Index(s)] = samples[s][j];
    cols[g.k][Eigen::Index(s)] = v.real();
    cols[g.k + 1][Eigen::Index(s)] = v.imag();
  }
  rep.csv("ghat.csv", header, cols);
  const double dev = ghat_homogeneity_check(sk, samples);
  rep.metrics()["closed_form"] = sk.closed_form;
  rep.criterion("homogeneity", dev, "max relative deviation < tol", *c.tol, dev < *c.tol);
  if (sk.closed_form && g.k <= 2) {
    const auto p = plancherel_check(g, c.t);
    const double tol = g.k == 1 ? 1e-3 : 1e-2;
    rep.metrics()["plancherel"] = {{"spectral", p.spectral_norm_sq}, {"time", p.time_norm_sq}, {"tail_bound", p.tail_bound}};
    rep.criterion("plancherel", p.rel_error, "relative error", tol, p.rel_error < tol);
    if (c.filter && g.k == 1) {
      const auto pb = plancherel_check_beta(g, c.filter->beta, c.t);
      rep.metrics()["plancherel_beta"] = {
          {"spectral", pb.spectral_norm_sq}, {"time", pb.time_norm_sq}, {"tail_bound", pb.tail_bound}};
      rep.criterion("plancherel_beta", pb.rel_error, "relative error", 1e-3, pb.rel_error < 1e-3);
    }
  }
}

void run_multivariate(const ExperimentConfig& c, Report& rep) {
  NoiseSpec noise;
  if (c.chaos) noise = c.chaos->noise;
  noise.seed = c.seed;
  const auto r = multivariate_mixed_check(c.components, c.N.back(), c.reps, noise);
  const Eigen::Index m = r.correlation.cols();
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> header = r.names;
  for (Eigen::Index j = 0; j < m; ++j) cols.push_back(r.correlation.col(j));
  rep.csv("correlation.csv", header, cols);
  rep.metrics()["max_s2_cross"] = r.max_s2_cross;
  rep.metrics()["threshold_3_over_sqrt_R"] = r.threshold;
  rep.metrics()["degenerate"] = r.degenerate;
  rep.criterion("s2_independence", r.max_s2_cross, "max |corr(S2, other)| < tol", *c.tol, r.max_s2_cross < *c.tol);
}

}  // namespace

ExperimentConfig resolve(const std::string& kind, const json& s) {
  if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end())
    throw SpecError("unknown experiment kind '" + kind + "'");
  if (!s.is_object()) throw SpecError("settings: expected an object");
  for (const auto& [key, _] : s.items())
    if (!kKeys.count(key)) throw SpecError("unknown setting '" + key + "'");

  ExperimentConfig c;
  c.kind = kind;
  c.seed = s.value("seed", std::uint64_t(0));
  if (s.contains("preset")) {
    c.preset = get<std::string>(s, "preset");
    const auto& p = find_preset(*c.preset);
    c.chaos = p.config;
    c.filter = p.filter;
  }
  if (s.contains("kernel")) {
    KernelSpec g = kernel_from_settings(s, kind != "validate");
    if (!c.chaos) c.chaos = ChaosConfig{};
    c.chaos->source = std::move(g);
  } else {
    for (const char* key : {"gamma", "alpha", "k", "a", "b", "symmetric"})
      if (s.contains(key)) throw SpecError(std::string("--") + key + " needs --kernel");
  }
  for (const char* key : {"M", "noise", "max-grid"})
    if (s.contains(key) && !c.chaos) throw SpecError(std::string("--") + key + " needs --kernel or --preset");
  if (c.chaos) {
    if (s.contains("M")) c.chaos->M = get<long>(s, "M");
    if (s.contains("noise")) c.chaos->noise.law = noise_law_from_string(get<std::string>(s, "noise"));
    if (s.contains("max-grid")) c.chaos->max_grid_elements = get<std::size_t>(s, "max-grid");
    c.chaos->noise.seed = c.seed;
    if (kind != "validate") validate_config(*c.chaos);
  }

  if (s.contains("beta")) {
    const long length = s.contains("filter-length") ? get<long>(s, "filter-length")
                        : c.filter                  ? c.filter->length
                        : kind == "filter"          ? 10000
                                                    : 1L << 16;
    c.filter = make_filter_spec(get<double>(s, "beta"), length);
  } else if (s.contains("filter-length")) {
    if (!c.filter) throw SpecError("--filter-length needs --beta or a filtered preset");
    c.filter = make_filter_spec(c.filter->beta, get<long>(s, "filter-length"));
  }
  if (s.contains("filter-family")) {
    if (!c.filter) throw SpecError("--filter-family needs --beta");
    if (io::filter_family_from_string(get<std::string>(s, "filter-family")) != c.filter->family)
      throw SpecError("--filter-family disagrees with the sign of beta (pure_power for beta > 0, telescoping for beta < 0)");
  }
  if (c.filter && c.chaos && kernel_of(*c.chaos) && kind != "validate") {
    const auto w = beta_window(*kernel_of(*c.chaos));
    if (!w.contains(c.filter->beta))
      throw SpecError("beta outside the admissible window (" + short_number(w.lo) + ", " + short_number(w.hi) + ")");
  }

  std::vector<long> default_n{1024};
  long default_reps = 1;
  double default_tol = 0.0;
  if (kind == "scaling") {
    default_n = power_of_two_grid(8, 14);
    default_tol = c.filter ? 0.1 : 0.03;
  } else if (kind == "clt" || kind == "multivariate") {
    default_n = {4096};
    default_reps = 10000;
    default_tol = kind == "clt" ? 0.02 : 0.03;
  } else if (kind == "limit-kernel") {
    default_n = {64, 128, 256, 512};
    default_tol = 0.05;
  } else if (kind == "acf") {
    default_tol = 0.05;
  } else if (kind == "filter") {
    default_tol = 1e-12;
  } else if (kind == "spectral") {
    const bool closed = c.chaos && kernel_of(*c.chaos) && is_product(*kernel_of(*c.chaos));
    default_tol = closed ? 1e-10 : 0.02;
  }
  c.N = s.contains("N") ? parse_grid(s["N"]) : default_n;
  c.reps = s.value("reps", default_reps);
  c.max_reps = s.value("max-reps", c.max_reps);
  if (c.reps < 1) throw SpecError("--reps must be positive");
  if (c.reps > c.max_reps)
    throw ResourceError("--reps " + std::to_string(c.reps) + " exceeds the cap " + std::to_string(c.max_reps));
  c.tol = s.contains("tol") ? get<double>(s, "tol") : default_tol;
  c.lags = s.value("lags", c.lags);
  if (c.lags < 1) throw SpecError("--lags must be positive");
  c.n_min = s.contains("n-min") ? get<long>(s, "n-min") : std::max(1L, c.lags / 4);
  c.t = s.value("t", c.t);
  if (!(c.t > 0)) throw SpecError("--t must be positive");
  c.window = s.value("window", c.window);
  if (s.contains("mode")) c.mode = mode_from_string(get<std::string>(s, "mode"));
  c.out = s.value("out", std::string("ghk-out/") + kind);

  if (kind == "multivariate") {
    NoiseSpec noise;
    if (c.chaos) noise = c.chaos->noise;
    noise.seed = c.seed;
    if (s.contains("components")) {
      for (const auto& j : s["components"]) c.components.push_back(component_from_json(j, noise));
    } else {
      for (const auto& [name, tag] : {std::pair{"srd-linear-k1", BlockTag::S1}, std::pair{"srd-finite-k2", BlockTag::S2}})
        c.components.push_back(component_from_json({{"name", name}, {"tag", to_string(tag)}, {"preset", name}}, noise));
    }
  } else if (s.contains("components")) {
    throw SpecError("'components' applies to multivariate runs only");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = c.kind;
  if (c.preset) j["preset"] = *c.preset;
  if (c.chaos) j["chaos"] = io::config_to_json(*c.chaos);
  if (c.filter) j["filter"] = io::filter_to_json(*c.filter);
  if (!c.components.empty()) {
    json comps = json::array();
    for (const auto& m : c.components) comps.push_back(component_to_json(m));
    j["components"] = comps;
  }
  j["N"] = c.N;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["tol"] = *c.tol;
  j["lags"] = c.lags;
  j["n_min"] = c.n_min;
  j["t"] = c.t;
  j["window"] = c.window;
  j["mode"] = mode_name(c.mode);
  j["max_reps"] = c.max_reps;
  return j;
}

RunOutput run(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw ResourceError("cannot create output directory " + c.out.string() + ": " + ec.message());
  io::write_json(c.out / "resolved_config.json", config_to_json(c));
  Report rep(c);
  if (c.kind == "validate") return run_validate(c, rep);
  if (c.kind == "simulate") run_simulate(c, rep);
  else if (c.kind == "acf") run_acf(c, rep);
  else if (c.kind == "scaling") run_scaling(c, rep);
  else if (c.kind == "clt") run_clt(c, rep);
  else if (c.kind == "filter") run_filter(c, rep);
  else if (c.kind == "limit-kernel") run_limit_kernel(c, rep);
  else if (c.kind == "spectral") run_spectral(c, rep);
  else if (c.kind == "multivariate") run_multivariate(c, rep);
  return rep.finish();
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized Hermite kernel chaos experiments"};
  app.require_subcommand(1);
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write report.json plus CSV series");
  auto* presets_cmd = app.add_subcommand("presets", "List the named configurations");

  std::string kind, config_path, grid;
  json flags = json::object();
  run_cmd->add_option("kind", kind, "Experiment kind")->required()->check(CLI::IsMember(kKinds));
  run_cmd->add_option("--config", config_path, "JSON file whose keys mirror the flags");

  // Each flag writes straight into the settings object so that only given flags override the file.
  auto str = [&](const std::string& name, const std::string& help) {
    run_cmd->add_option_function<std::string>("--" + name, [&flags, name](const std::string& v) { flags[name] = v; },
                                              help);
  };
  auto num = [&](const std::string& name, const std::string& help) {
    run_cmd->add_option_function<double>("--" + name, [&flags, name](double v) { flags[name] = v; }, help);
  };
  auto integer = [&](const std::string& name, const std::string& help) {
    run_cmd->add_option_function<long>("--" + name, [&flags, name](long v) { flags[name] = v; }, help);
  };
  auto list = [&](const std::string& name, const std::string& help) {
    run_cmd
        ->add_option_function<std::vector<double>>(
            "--" + name, [&flags, name](const std::vector<double>& v) { flags[name] = v; }, help)
        ->delimiter(',');
  };
  str("preset", "Named configuration (see `presets`)");
  str("kernel", "product | norm_power | ratio_product | max_combo");
  list("gamma", "Product exponents, comma separated");
  num("alpha", "Homogeneity exponent (norm_power, max_combo)");
  integer("k", "Order (norm_power, max_combo)");
  list("a", "Numerator exponents (ratio_product)");
  num("b", "Denominator power (ratio_product)");
  run_cmd->add_flag_callback("--symmetric", [&] { flags["symmetric"] = true; }, "Symmetrize the kernel");
  integer("M", "Coefficient truncation");
  run_cmd->add_option_function<std::string>("--N", [&](const std::string& v) { flags["N"] = v; },
                                            "N, a comma list, or a..b for doubling steps");
  integer("reps", "Replications");
  run_cmd->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { flags["seed"] = v; }, "Noise seed");
  str("noise", "gaussian | rademacher | uniform");
  num("beta", "Fractional filter exponent");
  str("filter-family", "pure_power | telescoping (must agree with the sign of beta)");
  integer("filter-length", "Filter length L");
  str("out", "Output directory");
  num("tol", "Tolerance override for the experiment's main criterion");
  integer("lags", "Largest ACF lag");
  integer("n-min", "Smallest lag in the ACF ratio band");
  num("t", "Time horizon");
  num("window", "Window for limit-kernel discretization");
  str("mode", "auto | naive | fast-product | low-rank");
  integer("max-grid", "Cap on coefficient grid elements");
  integer("max-reps", "Cap on replications");
  bool presets_json = false;
  presets_cmd->add_flag("--json", presets_json, "Print as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*presets_cmd) {
      if (presets_json) {
        json list = json::array();
        for (const auto& p : presets()) {
          json j{{"name", p.name}, {"description", p.description}, {"config", io::config_to_json(p.config)}};
          if (p.filter) j["filter"] = io::filter_to_json(*p.filter);
          list.push_back(j);
        }
        out << list.dump(2) << '\n';
      } else {
        for (const auto& p : presets()) out << p.name << "  " << p.description << '\n';
      }
      return 0;
    }
    json settings = config_path.empty() ? json::object() : io::read_json(config_path);
    if (!settings.is_object()) throw SpecError("--config: expected a JSON object");
    for (const auto& [key, value] : flags.items()) settings[key] = value;
    const auto cfg = resolve(kind, settings);
    const auto result = run(cfg);
    out << (result.passed ? "PASS " : "FAIL ") << kind << " -> " << (cfg.out / "report.json").string() << '\n';
    return result.passed ? 0 : 1;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ResourceError& e) {
    err << "resource cap: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace ghk::cli
