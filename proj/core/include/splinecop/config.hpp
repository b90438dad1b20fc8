#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splinecop/inference.hpp"
#include "splinecop/parametric.hpp"
#include "splinecop/posterior.hpp"
#include "splinecop/summaries.hpp"

namespace splinecop {

struct SimulateSpec {
  Family family = Family::clayton;
  TauFunction tau = TauFunction::constant(0.3);
  int n = 500;
};

struct StudySpec {
  Family family = Family::clayton;
  TauFunction tau = TauFunction::constant(0.3);
  std::vector<int> n{100, 500};
  int replicates = 25;
  int draws = 1000;  // 0: summarise by the MAP plug-in, without intervals
};

// Flat `key = value` configuration. Unknown keys are errors.
struct RunConfig {
  ModelKind model = ModelKind::unconditional;
  int K = 11;
  int K_star = 5;
  double epsilon = kDefaultEpsilon;
  PriorConfig priors;

  std::optional<DrawKind> sampler;  // unset: importance if unconditional, else metropolis
  int draws = 30000;
  int burnin = 1000;
  double dof = 4.0;

  std::uint64_t seed = 1;
  int workers = 1;

  std::vector<double> u_grid = table_u_grid();
  int x_grid_points = 101;
  BandKind band = BandKind::pointwise;
  std::vector<double> levels = kDefaultLevels;

  MapOptions map;
  std::vector<std::string> covariates;  // data columns; empty: all but u, v

  SimulateSpec simulate;
  std::optional<StudySpec> study;

  void set(std::string_view key, std::string_view value);
  void validate() const;

  ModelSpec model_spec(int covariates = 1) const;
  DrawKind effective_sampler() const;
  std::vector<double> x_grid() const;

  // Every effective setting in a fixed order; the hash is FNV-1a over it.
  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

std::string format_tau_function(const TauFunction& tau);
TauFunction parse_tau_function(std::string_view text);

}  // namespace splinecop
