#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcsaddle/hcsaddle.h"

namespace hcstool {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key = value file; list values are comma separated, '#' starts a comment.
using RawConfig = std::map<std::string, std::string>;

[[nodiscard]] RawConfig parse_config_text(const std::string& text);
[[nodiscard]] RawConfig read_config_file(const std::string& path);

struct ExperimentConfig {
  std::vector<std::string> methods{"PU", "PL", "PCG-K"};
  std::vector<int> cells{64};
  std::vector<int> inclusion_cells{2};
  std::vector<std::string> layouts{"periodic"};
  double removal_fraction = 0.25;
  std::string eps_mode = "random";
  std::vector<double> eps_values{1e-2, 1e-4, 1e-6};
  double eps_upper = 1e-2;
  std::vector<double> deltas{1e-6};
  std::vector<std::uint64_t> seeds{1};
  int max_iterations = 1000;
  std::string ha = "exact";
  std::string pu_ha;  ///< empty: same as ha
  std::string inner_base = "sgs";
  int inner_steps = 12;
  double spectrum_tolerance = 1e-8;
  double corrupt_q = 1.0;
  std::vector<std::string> matrices{"A"};

  /// Canonical "key = value" text; the config hash is taken over it.
  [[nodiscard]] std::string canonical() const;
};

/// Parses and validates every sweep combination; throws ConfigError on the
/// first invalid key or value.
[[nodiscard]] ExperimentConfig make_experiment_config(const RawConfig& raw);

[[nodiscard]] std::uint64_t fnv1a(const std::string& text);

[[nodiscard]] int32_t method_code(const std::string& name);
[[nodiscard]] int32_t ha_code(const std::string& name);
[[nodiscard]] int32_t layout_code(const std::string& name);

/// Inclusions removed from the lattice for a random layout.
[[nodiscard]] int removal_count(int cells, int inclusion_cells, double fraction);

}  // namespace hcstool
