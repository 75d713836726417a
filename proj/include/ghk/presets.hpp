#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ghk/chaos.hpp"
#include "ghk/fracfilter.hpp"

namespace ghk {

struct Preset {
  std::string name;
  std::string description;
  ChaosConfig config;
  std::optional<FilterSpec> filter;
};

// Stable list; names never change meaning.
const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

}  // namespace ghk
