#include "ghk/io.hpp"

#include <cstdio>
#include <fstream>

#include "ghk/error.hpp"
#include "ghk/overloaded.hpp"

namespace ghk::io {

namespace {

template <class T>
T get_required(const json& j, const char* key) {
  if (!j.contains(key)) throw SpecError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json envelope_to_json(const Envelope& env) {
  json terms = json::array();
  for (const auto& t : env.terms) terms.push_back({{"coeff", t.coeff}, {"gamma", t.gamma}});
  return terms;
}

}  // namespace

json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["form"] = form_name(spec);
  j["k"] = spec.k;
  j["alpha"] = spec.alpha;
  std::visit(overloaded{[&](const form::Product& p) { j["gamma"] = p.gamma; },
                        [&](const form::RatioProduct& r) {
                          j["a"] = r.a;
                          j["b"] = r.b;
                        },
                        [](const form::NormPower&) {}, [](const form::MaxCombo&) {},
                        [](const form::Custom&) { throw SpecError("custom kernels cannot be serialized"); }},
             spec.form);
  j["symmetric"] = spec.symmetric;
  if (spec.envelope) j["envelope"] = envelope_to_json(*spec.envelope);
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  if (!j.is_object()) throw SpecError("kernel: expected an object");
  const auto name = get_required<std::string>(j, "form");
  KernelSpec s;
  if (name == "product") {
    s = make_product(get_required<std::vector<double>>(j, "gamma"));
  } else if (name == "norm_power") {
    s = make_norm_power(get_required<int>(j, "k"), get_required<double>(j, "alpha"));
  } else if (name == "ratio_product") {
    s = make_ratio_product(get_required<std::vector<double>>(j, "a"), get_required<double>(j, "b"));
  } else if (name == "max_combo") {
    s = make_max_combo(get_required<int>(j, "k"), get_required<double>(j, "alpha"));
  } else {
    throw SpecError("kernel: unknown form '" + name + "'");
  }
  if (j.contains("k") && j["k"].get<int>() != s.k) throw SpecError("kernel: 'k' disagrees with the parameters");
  if (j.contains("alpha") && std::abs(j["alpha"].get<double>() - s.alpha) > 1e-12)
    throw SpecError("kernel: 'alpha' disagrees with the parameters");
  if (j.value("symmetric", false)) s = symmetrize(s);
  if (j.contains("envelope")) {
    Envelope env;
    for (const auto& t : j["envelope"])
      env.terms.push_back({get_required<double>(t, "coeff"), get_required<std::vector<double>>(t, "gamma")});
    s.envelope = env;
  }
  require_valid(s);
  return s;
}

json noise_to_json(const NoiseSpec& n) {
  return {{"law", to_string(n.law)}, {"seed", n.seed}, {"stream_id", n.stream_id}};
}

NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  if (j.contains("law")) n.law = noise_law_from_string(j["law"].get<std::string>());
  n.seed = j.value("seed", std::uint64_t(0));
  n.stream_id = j.value("stream_id", std::uint64_t(0));
  return n;
}

json config_to_json(const ChaosConfig& c) {
  json j;
  if (const KernelSpec* g = kernel_of(c)) {
    j["kernel"] = kernel_to_json(*g);
  } else {
    const auto& f = std::get<FiniteCoefficients>(c.source);
    json e = json::array();
    for (const auto& [idx, v] : f.entries) e.push_back({{"index", idx}, {"value", v}});
    j["coefficients"] = {{"k", f.k}, {"entries", e}};
  }
  j["M"] = c.M;
  std::visit(overloaded{[&](const perturbation::Identity&) { j["perturbation"] = {{"kind", "identity"}}; },
                        [&](const perturbation::RationalDecay& r) {
                          j["perturbation"] = {{"kind", "rational_decay"}, {"c", r.c}};
                        },
                        [](const perturbation::Custom&) {
                          throw SpecError("custom perturbations cannot be serialized");
                        }},
             c.perturbation);
  j["noise"] = noise_to_json(c.noise);
  j["max_grid_elements"] = c.max_grid_elements;
  return j;
}

ChaosConfig config_from_json(const json& j) {
  if (!j.is_object()) throw SpecError("config: expected an object");
  ChaosConfig c;
  if (j.contains("kernel")) {
    c.source = kernel_from_json(j["kernel"]);
  } else if (j.contains("coefficients")) {
    FiniteCoefficients f;
    f.k = get_required<int>(j["coefficients"], "k");
    for (const auto& e : j["coefficients"].at("entries"))
      f.entries.emplace_back(get_required<std::vector<long>>(e, "index"), get_required<double>(e, "value"));
    c.source = f;
  } else {
    throw SpecError("config: needs 'kernel' or 'coefficients'");
  }
  c.M = j.value("M", c.M);
  if (j.contains("perturbation")) {
    const auto kind = get_required<std::string>(j["perturbation"], "kind");
    if (kind == "rational_decay")
      c.perturbation = perturbation::RationalDecay{get_required<double>(j["perturbation"], "c")};
    else if (kind != "identity")
      throw SpecError("config: unknown perturbation '" + kind + "'");
  }
  if (j.contains("noise")) c.noise = noise_from_json(j["noise"]);
  c.max_grid_elements = j.value("max_grid_elements", c.max_grid_elements);
  validate_config(c);
  return c;
}

std::string filter_family_name(FilterFamily f) {
  return f == FilterFamily::PurePower ? "pure_power" : "telescoping";
}

FilterFamily filter_family_from_string(const std::string& s) {
  if (s == "pure_power") return FilterFamily::PurePower;
  if (s == "telescoping") return FilterFamily::TelescopingZeroSum;
  throw SpecError("unknown filter family '" + s + "' (expected pure_power or telescoping)");
}

json filter_to_json(const FilterSpec& f) {
  return {{"beta", f.beta}, {"family", filter_family_name(f.family)}, {"length", f.length}};
}

FilterSpec filter_from_json(const json& j) {
  FilterSpec f = make_filter_spec(get_required<double>(j, "beta"), j.value("length", 2000L));
  if (j.contains("family")) f.family = filter_family_from_string(j["family"].get<std::string>());
  return f;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns) {
  if (header.size() != columns.size()) throw SpecError("write_csv: header and column counts differ");
  Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw SpecError("write_csv: columns differ in length");
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << format_number(columns[j][r]);
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace ghk::io
