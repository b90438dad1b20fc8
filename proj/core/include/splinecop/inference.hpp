#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "splinecop/rng.hpp"

namespace splinecop {

// Log density up to a constant; -inf marks points outside the support.
using LogDensity = std::function<double(std::span<const double>)>;

struct FitResult {
  Eigen::VectorXd map;
  Eigen::MatrixXd hessian;  // of the log posterior at map
  double log_post_at_map = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // sup-norm at map
  double hessian_shift = 0.0;  // diagonal shift applied to make -hessian PD
};

struct MapOptions {
  double tol = 1e-6;
  int max_iter = 500;
  bool compute_hessian = true;
  double gradient_step = 1e-6;  // relative: h = step * (1 + |x|)
  double hessian_step = 1e-4;
  // Called after each accepted step with (iteration, log posterior, gradient sup-norm).
  std::function<void(int, double, double)> trace;
};

Eigen::VectorXd numerical_gradient(const LogDensity& f, const Eigen::VectorXd& x,
                                   double rel_step = 1e-6);
Eigen::MatrixXd numerical_hessian(const LogDensity& f, const Eigen::VectorXd& x,
                                  double rel_step = 1e-4);

// Smallest shift s >= 0 with min eig(-hessian + s I) >= floor; applied in place.
double regularize_negative_hessian(Eigen::MatrixXd& hessian, double floor = 1e-8);

FitResult map_estimate(const LogDensity& logpost, const Eigen::VectorXd& init,
                       const MapOptions& options = {});

enum class DrawKind { importance, metropolis };
std::string_view to_string(DrawKind kind) noexcept;
DrawKind parse_draw_kind(std::string_view name);

struct PosteriorDraws {
  Eigen::MatrixXd draws;                 // M x d
  std::optional<Eigen::VectorXd> weights;  // normalised, importance sampling only
  std::vector<double> acceptance;        // per block, Metropolis only
  std::uint64_t seed = 0;
  DrawKind kind = DrawKind::importance;
  double ess = 0.0;

  int size() const { return static_cast<int>(draws.rows()); }
  int dimension() const { return static_cast<int>(draws.cols()); }
  void validate() const;
};

// Multivariate Student t(location, scale, dof) with scale = (-hessian)^{-1}.
class StudentProposal {
 public:
  StudentProposal(Eigen::VectorXd location, const Eigen::MatrixXd& neg_hessian, double dof);

  int dimension() const noexcept { return static_cast<int>(location_.size()); }
  double dof() const noexcept { return dof_; }
  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd draw(Rng& rng) const;

  const Eigen::MatrixXd& scale_cholesky() const noexcept { return chol_scale_; }

 private:
  Eigen::VectorXd location_;
  Eigen::MatrixXd chol_scale_;      // lower factor of the scale matrix
  Eigen::MatrixXd chol_precision_;  // lower factor of -hessian
  double dof_;
  double log_norm_ = 0.0;
};

struct ImportanceOptions {
  int draws = 1000;
  double dof = 4.0;
};

PosteriorDraws importance_sample(const LogDensity& logpost, const FitResult& fit,
                                 const ImportanceOptions& options, std::uint64_t seed);

// Exactly min{1, exp(delta)} as an acceptance rule: accept iff u <= exp(delta).
bool metropolis_accept(double delta, double u) noexcept;

struct MetropolisOptions {
  int draws = 30000;  // kept after burn-in
  int burnin = 1000;
  double target_acceptance = 0.20;
  double adapt_rate = 1.0;
  int adapt_interval = 100;
  bool adapt = true;
  int thin = 1;
};

using BlockPartition = std::vector<std::vector<int>>;

PosteriorDraws adaptive_block_metropolis(const LogDensity& logpost, const BlockPartition& blocks,
                                         const FitResult& fit, const MetropolisOptions& options,
                                         std::uint64_t seed);

}  // namespace splinecop
