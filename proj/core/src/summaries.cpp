#include "splinecop/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "splinecop/error.hpp"

namespace splinecop {

namespace {

std::vector<double> normalized_weights(const PosteriorDraws& draws) {
  draws.validate();
  const int m = draws.size();
  if (draws.weights) {
    return std::vector<double>(draws.weights->data(), draws.weights->data() + m);
  }
  return std::vector<double>(m, 1.0 / m);
}

std::size_t find_grid_index(const std::vector<double>& grid, double value) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - value) <= 1e-12) return i;
  }
  throw Error(Errc::grid_mismatch, "grid value " + std::to_string(value) + " not found");
}

// Makes bands contain the point and nest across ascending levels.
void tidy_bands(std::vector<Band>& bands, const std::vector<double>& point) {
  std::sort(bands.begin(), bands.end(),
            [](const Band& a, const Band& b) { return a.level < b.level; });
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t j = 0; j < point.size(); ++j) {
      double lo = std::min(bands[b].lower[j], point[j]);
      double hi = std::max(bands[b].upper[j], point[j]);
      if (b > 0) {
        lo = std::min(lo, bands[b - 1].lower[j]);
        hi = std::max(hi, bands[b - 1].upper[j]);
      }
      bands[b].lower[j] = lo;
      bands[b].upper[j] = hi;
    }
  }
}

}  // namespace

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p) {
  const std::size_t m = values.size();
  if (m == 0) throw Error(Errc::empty_draws, "quantile of an empty sample");
  if (!weights.empty() && weights.size() != m) {
    throw Error(Errc::dimension_mismatch, "weights do not match values");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::out_of_range, "quantile level outside [0,1]");
  // Zero-weight entries never matter and may hold placeholders (NaN), so
  // they are left out of the ordering.
  std::vector<std::size_t> order;
  order.reserve(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w > 0.0) {
      order.push_back(i);
      total += w;
    }
  }
  if (!(total > 0.0)) throw Error(Errc::out_of_range, "weights sum to zero");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double target = p * total * (1.0 - 1e-12);
  double cum = 0.0;
  for (const std::size_t k : order) {
    cum += weights.empty() ? 1.0 : weights[k];
    if (cum >= target) return values[k];
  }
  // p == 1 up to rounding.
  return values[order.back()];
}

FunctionalSummary summarize_values(const Eigen::MatrixXd& values, const PosteriorDraws& draws,
                                   const std::vector<double>& levels) {
  const auto w = normalized_weights(draws);
  if (values.rows() != static_cast<Eigen::Index>(w.size())) {
    throw Error(Errc::dimension_mismatch, "functional values do not match the draws");
  }
  const Eigen::Index j = values.cols();
  FunctionalSummary out;
  out.point.assign(j, 0.0);
  for (const double level : levels) {
    if (!(level > 0.0 && level < 1.0)) throw Error(Errc::out_of_range, "level outside (0,1)");
    out.bands.push_back(Band{level, std::vector<double>(j), std::vector<double>(j)});
  }
  std::vector<double> col(values.rows());
  for (Eigen::Index c = 0; c < j; ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      col[r] = values(r, c);
      if (w[r] > 0.0) {
        if (std::isnan(col[r])) throw Error(Errc::non_finite, "NaN in posterior functional");
        mean += w[r] * col[r];
      }
    }
    out.point[c] = mean;
    for (auto& band : out.bands) {
      band.lower[c] = weighted_quantile(col, w, 0.5 * (1.0 - band.level));
      band.upper[c] = weighted_quantile(col, w, 0.5 * (1.0 + band.level));
    }
  }
  tidy_bands(out.bands, out.point);
  return out;
}

Eigen::MatrixXd evaluate_functional(const PosteriorDraws& draws, const VectorFunctional& fn) {
  const auto w = normalized_weights(draws);
  const int m = draws.size();
  Eigen::MatrixXd values;
  std::vector<double> params(draws.dimension());
  for (int r = 0; r < m; ++r) {
    if (!(w[r] > 0.0)) continue;
    for (int c = 0; c < draws.dimension(); ++c) params[c] = draws.draws(r, c);
    const auto v = fn(params);
    if (values.size() == 0) {
      values = Eigen::MatrixXd::Constant(m, static_cast<Eigen::Index>(v.size()),
                                         std::numeric_limits<double>::quiet_NaN());
    }
    if (static_cast<Eigen::Index>(v.size()) != values.cols()) {
      throw Error(Errc::dimension_mismatch, "functional changed length between draws");
    }
    for (std::size_t c = 0; c < v.size(); ++c) values(r, static_cast<Eigen::Index>(c)) = v[c];
  }
  if (values.size() == 0) throw Error(Errc::empty_draws, "no draw with positive weight");
  return values;
}

FunctionalSummary posterior_functional(const PosteriorDraws& draws, const VectorFunctional& fn,
                                       const std::vector<double>& levels) {
  return summarize_values(evaluate_functional(draws, fn), draws, levels);
}

FunctionalSummary posterior_functional(const PosteriorDraws& draws, const ScalarFunctional& fn,
                                       const std::vector<double>& levels) {
  const VectorFunctional vf = [&](std::span<const double> p) {
    return std::vector<double>{fn(p)};
  };
  return posterior_functional(draws, vf, levels);
}

std::string_view to_string(BandKind kind) noexcept {
  return kind == BandKind::pointwise ? "pointwise" : "simultaneous";
}

BandKind parse_band_kind(std::string_view name) {
  if (name == "pointwise") return BandKind::pointwise;
  if (name == "simultaneous") return BandKind::simultaneous;
  throw Error(Errc::malformed_config, "unknown band kind '" + std::string(name) + "'");
}

const Band& CurveEstimate::band(double level) const {
  for (const auto& b : bands) {
    if (std::abs(b.level - level) < 1e-12) return b;
  }
  throw Error(Errc::out_of_range, "no band at level " + std::to_string(level));
}

CurveEstimate curve_from_trajectories(std::vector<double> grid,
                                      const Eigen::MatrixXd& trajectories,
                                      const PosteriorDraws& draws, BandKind kind,
                                      const std::vector<double>& levels) {
  if (trajectories.cols() != static_cast<Eigen::Index>(grid.size())) {
    throw Error(Errc::grid_mismatch, "trajectories do not match the grid");
  }
  const auto summary = summarize_values(trajectories, draws, levels);
  CurveEstimate out;
  out.grid = std::move(grid);
  out.point = summary.point;
  out.bands = summary.bands;
  out.band_kind = kind;
  if (kind == BandKind::simultaneous) {
    const auto w = normalized_weights(draws);
    const Eigen::Index m = trajectories.rows();
    const Eigen::Index j = trajectories.cols();
    std::vector<double> need(m);
    for (auto& band : out.bands) {
      // Factor each trajectory needs to lie inside the scaled band everywhere.
      for (Eigen::Index r = 0; r < m; ++r) {
        double c = 0.0;
        if (w[r] > 0.0) {
          for (Eigen::Index k = 0; k < j; ++k) {
            const double dev = trajectories(r, k) - out.point[k];
            const double half = dev >= 0.0 ? band.upper[k] - out.point[k]
                                           : out.point[k] - band.lower[k];
            const double a = std::abs(dev);
            if (a == 0.0) continue;
            c = std::max(c, half > 0.0 ? a / half : std::numeric_limits<double>::infinity());
          }
        }
        need[r] = c;
      }
      double factor = weighted_quantile(need, w, band.level);
      if (!std::isfinite(factor)) {
        throw Error(Errc::non_finite, "simultaneous band needs an unbounded scale factor");
      }
      factor = std::max(1.0, factor);
      for (Eigen::Index k = 0; k < j; ++k) {
        band.lower[k] = out.point[k] - factor * (out.point[k] - band.lower[k]);
        band.upper[k] = out.point[k] + factor * (band.upper[k] - out.point[k]);
      }
    }
    tidy_bands(out.bands, out.point);
  }
  return out;
}

CurveEstimate tau_curve(const PosteriorDraws& draws, const CopulaModel& model,
                        std::vector<double> grid, BandKind kind,
                        const std::vector<double>& levels) {
  if (!model.conditional() || model.covariates() != 1) {
    throw Error(Errc::dimension_mismatch, "tau curves need a conditional model with one covariate");
  }
  for (const double x : grid) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_range, "tau grid outside [0,1]");
  }
  const VectorFunctional fn = [&](std::span<const double> p) {
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid[k];
      out[k] = model.tau(p, std::span<const double>(&x, 1));
    }
    return out;
  };
  const auto traj = evaluate_functional(draws, fn);
  return curve_from_trajectories(std::move(grid), traj, draws, kind, levels);
}

CurveEstimate lambda_curve(const PosteriorDraws& draws, const CopulaModel& model,
                           std::vector<double> grid, std::span<const double> x,
                           const std::vector<double>& levels) {
  for (const double u : grid) {
    if (!(u > 0.0 && u < 1.0)) throw Error(Errc::out_of_range, "u grid outside (0,1)");
  }
  const VectorFunctional fn = [&](std::span<const double> p) {
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] = model.lambda(p, grid[k], x);
    return out;
  };
  const auto traj = evaluate_functional(draws, fn);
  return curve_from_trajectories(std::move(grid), traj, draws, BandKind::pointwise, levels);
}

DicResult dic(const PosteriorDraws& chain, const ScalarFunctional& loglik) {
  chain.validate();
  if (chain.weights) {
    throw Error(Errc::weighted_draws, "DIC is defined on unweighted chains only");
  }
  const int m = chain.size();
  const int d = chain.dimension();
  std::vector<double> params(d);
  double mean_dev = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < d; ++c) params[c] = chain.draws(r, c);
    const double ll = loglik(params);
    if (!std::isfinite(ll)) throw Error(Errc::non_finite, "non-finite log-likelihood in chain");
    mean_dev += -2.0 * ll;
  }
  mean_dev /= m;
  mean = chain.draws.colwise().mean().transpose();
  const double dev_mean = -2.0 * loglik(std::span<const double>(mean.data(), d));
  if (!std::isfinite(dev_mean)) {
    throw Error(Errc::non_finite, "log-likelihood is not finite at the posterior mean");
  }
  DicResult out;
  out.mean_deviance = mean_dev;
  out.deviance_at_mean = dev_mean;
  out.effective_dim = mean_dev - dev_mean;
  out.dic = mean_dev + out.effective_dim;
  return out;
}

double StudyReport::bias_at(double u) const { return bias[find_grid_index(grid, u)]; }
double StudyReport::rmse_at(double u) const { return rmse[find_grid_index(grid, u)]; }

StudyReport study_metrics(const std::vector<double>& grid, const std::vector<double>& truth,
                          const std::vector<ReplicateCurve>& replicates,
                          const std::vector<double>& coverage_grid) {
  const std::size_t j = grid.size();
  if (truth.size() != j) throw Error(Errc::grid_mismatch, "truth does not match the grid");
  if (replicates.size() < 2) throw Error(Errc::out_of_range, "need at least two replicates");
  for (const auto& r : replicates) {
    if (r.estimate.size() != j) throw Error(Errc::grid_mismatch, "replicate grid mismatch");
    for (const auto& b : r.bands) {
      if (b.lower.size() != j || b.upper.size() != j) {
        throw Error(Errc::grid_mismatch, "replicate band grid mismatch");
      }
    }
  }
  std::vector<std::size_t> order(j);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });

  const double s = static_cast<double>(replicates.size());
  StudyReport rep;
  rep.replicates = static_cast<int>(replicates.size());
  rep.grid.resize(j);
  rep.truth.resize(j);
  rep.bias.resize(j);
  rep.rmse.resize(j);
  std::vector<double> mse(j);
  for (std::size_t k = 0; k < j; ++k) {
    const std::size_t src = order[k];
    double sum = 0.0, sq = 0.0;
    for (const auto& r : replicates) {
      const double e = r.estimate[src] - truth[src];
      sum += e;
      sq += e * e;
    }
    rep.grid[k] = grid[src];
    rep.truth[k] = truth[src];
    rep.bias[k] = sum / s;
    mse[k] = sq / s;
    rep.rmse[k] = std::max(std::sqrt(mse[k]), std::abs(rep.bias[k]));
  }
  double ise = 0.0;
  for (std::size_t k = 0; k + 1 < j; ++k) {
    const double a = rep.grid[k], b = rep.grid[k + 1];
    if (a < 0.01 - 1e-12 || b > 0.99 + 1e-12) continue;
    ise += 0.5 * (b - a) * (mse[k] + mse[k + 1]);
  }
  rep.rmise = std::sqrt(ise);

  rep.coverage_grid = coverage_grid;
  std::sort(rep.coverage_grid.begin(), rep.coverage_grid.end());
  if (!replicates.front().bands.empty() && !coverage_grid.empty()) {
    for (const auto& b : replicates.front().bands) rep.levels.push_back(b.level);
    std::vector<std::size_t> idx;
    for (const double u : rep.coverage_grid) idx.push_back(find_grid_index(grid, u));
    for (std::size_t l = 0; l < rep.levels.size(); ++l) {
      double hits = 0.0;
      for (const auto& r : replicates) {
        if (r.bands.size() != rep.levels.size() ||
            std::abs(r.bands[l].level - rep.levels[l]) > 1e-12) {
          throw Error(Errc::grid_mismatch, "replicates disagree on credible levels");
        }
        for (const std::size_t k : idx) {
          if (r.bands[l].lower[k] <= truth[k] && truth[k] <= r.bands[l].upper[k]) hits += 1.0;
        }
      }
      rep.coverage.push_back(hits / (s * static_cast<double>(idx.size())));
    }
  }
  double total = 0.0;
  for (const auto& r : replicates) total += r.seconds;
  rep.total_seconds = total;
  rep.mean_seconds = total / s;
  return rep;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2) return {lo};
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  return g;
}

std::vector<double> paper_u_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(i / 20.0);
  return g;
}

std::vector<double> fine_u_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
  return g;
}

std::vector<double> table_u_grid() {
  std::vector<double> g{0.05};
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  g.push_back(0.95);
  return g;
}

}  // namespace splinecop
