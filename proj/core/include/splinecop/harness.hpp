#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "splinecop/config.hpp"
#include "splinecop/inference.hpp"
#include "splinecop/observations.hpp"
#include "splinecop/posterior.hpp"
#include "splinecop/summaries.hpp"

namespace splinecop {

// Runs fn(0..count-1) on up to `workers` threads. Results must be written to
// per-index slots; the first exception is rethrown after all threads join.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

// Kendall's tau from the `window` observations nearest to `center` in covariate 0.
double local_kendall_tau(const ObservationSet& data, double center, int window);

// Coefficients of the spline generator equivalent to Gumbel with this tau.
double gumbel_equivalent_theta(double tau);

// Data-driven starting point for the MAP search.
std::vector<double> initial_params(const CopulaModel& model, const ObservationSet& data);

LogDensity make_log_posterior(const CopulaModel& model, const ObservationSet& data);
BlockPartition model_blocks(const CopulaModel& model);

FitResult fit_model(const CopulaModel& model, const ObservationSet& data,
                    const MapOptions& options = {});

struct SamplerSettings {
  DrawKind kind = DrawKind::importance;
  int draws = 1000;
  int burnin = 1000;
  double dof = 4.0;
};

PosteriorDraws draw_posterior(const CopulaModel& model, const ObservationSet& data,
                              const FitResult& fit, const SamplerSettings& settings,
                              std::uint64_t seed);

// Seed streams used by the pipelines.
enum class SeedStream : std::uint64_t { data = 0, sampler = 1 };

ObservationSet simulate_data(const RunConfig& config);

struct ReplicateSettings {
  Family family = Family::clayton;
  TauFunction tau = TauFunction::constant(0.3);
  int n = 500;
  std::uint64_t seed = 1;
  int draws = 1000;  // 0: MAP plug-in only
};

// One simulate -> fit -> summarise pass. Unconditional models yield the
// lambda curve on grid (values of u); conditional models the tau curve
// (values of x).
ReplicateCurve run_replicate(const RunConfig& config, const ReplicateSettings& settings,
                             const std::vector<double>& grid);

// True lambda (constant tau) or tau(x) (varying tau) on the grid.
std::vector<double> study_truth(const StudySpec& study, bool conditional,
                                const std::vector<double>& grid);

std::uint64_t replicate_seed(std::uint64_t master, int n, int replicate);

// One report per sample size in the study block.
std::vector<StudyReport> run_study(const RunConfig& config, int workers);

std::string format_study_table(const std::vector<StudyReport>& reports,
                               const std::vector<double>& rows);
std::string format_study_records(const std::vector<StudyReport>& reports,
                                 const RunConfig& config);

struct CommandOptions {
  std::string subcommand;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> data;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> model;
  std::optional<std::string> sampler;
};

// Builds the effective config (file, then command-line overrides), runs the
// pipeline and writes artifacts into options.out. Throws Error.
void run_command(const CommandOptions& options, std::ostream& log);

// 0 success, 1 usage/config/data error, 2 numerical failure.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace splinecop
