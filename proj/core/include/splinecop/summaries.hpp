#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "splinecop/inference.hpp"
#include "splinecop/posterior.hpp"

namespace splinecop {

inline const std::vector<double> kDefaultLevels{0.80, 0.90, 0.95};

// Smallest value whose cumulative normalised weight reaches p (values and
// weights are taken in ascending order of value). Empty weights mean equal
// weights.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p);

struct Band {
  double level = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct FunctionalSummary {
  std::vector<double> point;  // posterior mean per component
  std::vector<Band> bands;    // central intervals, one per level
};

// Rows of `values` are draws, columns are components of the functional.
FunctionalSummary summarize_values(const Eigen::MatrixXd& values, const PosteriorDraws& draws,
                                   const std::vector<double>& levels = kDefaultLevels);

using VectorFunctional = std::function<std::vector<double>(std::span<const double>)>;
using ScalarFunctional = std::function<double(std::span<const double>)>;

// Evaluates fn on every draw with positive weight; zero-weight importance
// draws contribute nothing and are skipped.
Eigen::MatrixXd evaluate_functional(const PosteriorDraws& draws, const VectorFunctional& fn);

FunctionalSummary posterior_functional(const PosteriorDraws& draws, const VectorFunctional& fn,
                                       const std::vector<double>& levels = kDefaultLevels);
FunctionalSummary posterior_functional(const PosteriorDraws& draws, const ScalarFunctional& fn,
                                       const std::vector<double>& levels = kDefaultLevels);

enum class BandKind { pointwise, simultaneous };
std::string_view to_string(BandKind kind) noexcept;
BandKind parse_band_kind(std::string_view name);

struct CurveEstimate {
  std::vector<double> grid;
  std::vector<double> point;
  std::vector<Band> bands;
  BandKind band_kind = BandKind::pointwise;

  const Band& band(double level) const;
};

// Bands from a matrix of trajectories (draws x grid). Simultaneous bands
// scale each pointwise interval about the mean by the smallest common factor
// (at least 1) that keeps the required weight of whole trajectories inside.
CurveEstimate curve_from_trajectories(std::vector<double> grid,
                                      const Eigen::MatrixXd& trajectories,
                                      const PosteriorDraws& draws, BandKind kind,
                                      const std::vector<double>& levels = kDefaultLevels);

CurveEstimate tau_curve(const PosteriorDraws& draws, const CopulaModel& model,
                        std::vector<double> grid, BandKind kind,
                        const std::vector<double>& levels = kDefaultLevels);
CurveEstimate lambda_curve(const PosteriorDraws& draws, const CopulaModel& model,
                           std::vector<double> grid, std::span<const double> x = {},
                           const std::vector<double>& levels = kDefaultLevels);

struct DicResult {
  double dic = 0.0;
  double effective_dim = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
};

DicResult dic(const PosteriorDraws& chain, const ScalarFunctional& loglik);

// One replicate's estimate on the study grid, with its credible intervals.
struct ReplicateCurve {
  std::vector<double> estimate;
  std::vector<Band> bands;
  double seconds = 0.0;
};

struct StudyReport {
  std::string family;
  std::string tau;
  int n = 0;
  int replicates = 0;
  std::vector<double> grid;      // full evaluation grid, ascending
  std::vector<double> truth;
  std::vector<double> bias;
  std::vector<double> rmse;
  double rmise = 0.0;
  std::vector<double> coverage_grid;
  std::vector<double> levels;
  std::vector<double> coverage;  // per level, averaged over coverage_grid
  double mean_seconds = 0.0;
  double total_seconds = 0.0;

  // Bias and RMSE at a grid value; throws grid_mismatch if absent.
  double bias_at(double u) const;
  double rmse_at(double u) const;
};

// RMISE integrates the per-point mean squared error by the trapezoid rule
// over grid values in [0.01, 0.99]; coverage averages interval hits over
// coverage_grid, each value of which must appear in grid.
StudyReport study_metrics(const std::vector<double>& grid, const std::vector<double>& truth,
                          const std::vector<ReplicateCurve>& replicates,
                          const std::vector<double>& coverage_grid);

std::vector<double> paper_u_grid();       // 0.05, 0.10, ..., 0.95
std::vector<double> fine_u_grid();        // 0.01, 0.02, ..., 0.99
std::vector<double> table_u_grid();       // 0.05, 0.10, 0.20, ..., 0.90, 0.95
std::vector<double> linear_grid(double lo, double hi, int points);

}  // namespace splinecop
