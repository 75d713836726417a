#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ghk/chaos.hpp"
#include "ghk/fracfilter.hpp"
#include "ghk/kernel.hpp"

namespace ghk::io {

using json = nlohmann::ordered_json;

// Keys: form, k, alpha, gamma | a + b, symmetric, envelope. Custom kernels cannot be serialized.
json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const json& j);

json noise_to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const json& j);

json config_to_json(const ChaosConfig& c);
ChaosConfig config_from_json(const json& j);

json filter_to_json(const FilterSpec& f);
FilterSpec filter_from_json(const json& j);

std::string filter_family_name(FilterFamily f);
FilterFamily filter_family_from_string(const std::string& s);

// Numbers are written with %.17g so that a rerun reproduces the file byte for byte.
std::string format_number(double v);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace ghk::io
