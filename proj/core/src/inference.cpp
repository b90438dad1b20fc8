#include "splinecop/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "splinecop/error.hpp"

namespace splinecop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double eval(const LogDensity& f, const Eigen::VectorXd& x) {
  const double v = f(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  return std::isnan(v) ? kNegInf : v;
}

}  // namespace

Eigen::VectorXd numerical_gradient(const LogDensity& f, const Eigen::VectorXd& x,
                                   double rel_step) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd g(d);
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    y[i] = x[i] + h;
    const double fp = eval(f, y);
    y[i] = x[i] - h;
    const double fm = eval(f, y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd numerical_hessian(const LogDensity& f, const Eigen::VectorXd& x,
                                  double rel_step) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd h(d, d);
  Eigen::VectorXd step(d);
  for (Eigen::Index i = 0; i < d; ++i) step[i] = rel_step * (1.0 + std::abs(x[i]));
  const double f0 = eval(f, x);
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    y[i] = x[i] + step[i];
    const double fp = eval(f, y);
    y[i] = x[i] - step[i];
    const double fm = eval(f, y);
    y[i] = x[i];
    h(i, i) = (fp - 2.0 * f0 + fm) / (step[i] * step[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      y[i] = x[i] + step[i];
      y[j] = x[j] + step[j];
      const double fpp = eval(f, y);
      y[j] = x[j] - step[j];
      const double fpm = eval(f, y);
      y[i] = x[i] - step[i];
      const double fmm = eval(f, y);
      y[j] = x[j] + step[j];
      const double fmp = eval(f, y);
      y[i] = x[i];
      y[j] = x[j];
      h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * step[i] * step[j]);
    }
  }
  return h;
}

double regularize_negative_hessian(Eigen::MatrixXd& hessian, double floor) {
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
  if (!hessian.allFinite()) {
    throw Error(Errc::non_finite, "hessian has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-hessian, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig >= floor) return 0.0;
  const double shift = floor - min_eig;
  hessian.diagonal().array() -= shift;
  return shift;
}

FitResult map_estimate(const LogDensity& logpost, const Eigen::VectorXd& init,
                       const MapOptions& options) {
  const Eigen::Index d = init.size();
  Eigen::VectorXd x = init;
  double fx = eval(logpost, x);
  if (!std::isfinite(fx)) {
    throw Error(Errc::non_finite, "log posterior is not finite at the initial point");
  }
  auto grad = [&](const Eigen::VectorXd& at) {
    return numerical_gradient(logpost, at, options.gradient_step);
  };

  // BFGS on -logpost; hinv approximates the inverse Hessian of -logpost.
  Eigen::VectorXd g = -grad(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(d, d);
  bool scaled = false;
  int iter = 0;
  bool converged = g.lpNorm<Eigen::Infinity>() <= options.tol;
  // Hessian of logpost at x when known, reused by the final report.
  std::optional<Eigen::MatrixXd> hess_at_x;
  int newton_steps = 0;
  int restarts = 0;

  // Near the optimum the remaining ascent can fall below the rounding of
  // logpost itself, so the line search stops resolving progress. A Newton
  // step on the numerical Hessian then finishes the job; it is accepted
  // when it shrinks the gradient. When it cannot, and the gain it predicts
  // is below the resolution of logpost, the gradient is at the noise floor
  // of the central differences and x is reported as stationary.
  enum class Polish { progress, stationary, failed };
  auto newton_polish = [&]() -> Polish {
    if (newton_steps >= 8) return Polish::failed;
    ++newton_steps;
    if (!hess_at_x) hess_at_x = numerical_hessian(logpost, x, options.hessian_step);
    const Eigen::MatrixXd neg = -*hess_at_x;
    Eigen::LLT<Eigen::MatrixXd> llt(neg);
    if (llt.info() != Eigen::Success) return Polish::failed;
    const Eigen::VectorXd delta = llt.solve(g);
    const double predicted_gain = 0.5 * g.dot(delta);
    const bool at_floor = predicted_gain <= 1e-12 * std::max(1.0, std::abs(fx));
    const Eigen::VectorXd xn = x - delta;
    const double fn = eval(logpost, xn);
    if (!std::isfinite(fn)) return at_floor ? Polish::stationary : Polish::failed;
    const Eigen::VectorXd gn = -grad(xn);
    if (!(gn.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()))
      return at_floor ? Polish::stationary : Polish::failed;
    x = xn;
    fx = fn;
    g = gn;
    hinv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    scaled = true;
    hess_at_x.reset();
    return Polish::progress;
  };

  while (!converged && iter < options.max_iter) {
    ++iter;
    Eigen::VectorXd dir = -hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      dir = -g;
      slope = g.dot(dir);
    }
    if (!scaled) {
      // Keep the very first trial step modest.
      const double len = dir.lpNorm<Eigen::Infinity>();
      if (len > 1.0) {
        dir /= len;
        slope /= len;
      }
    }
    double step = 1.0;
    Eigen::VectorXd xn;
    double fn = kNegInf;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      xn = x + step * dir;
      fn = eval(logpost, xn);
      // Armijo on the minimised function -logpost, with strict progress.
      if (std::isfinite(fn) && fn > fx && -fn <= -fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      const Polish polish = newton_polish();
      if (polish == Polish::progress) {
        converged = g.lpNorm<Eigen::Infinity>() <= options.tol;
        if (options.trace) options.trace(iter, fx, g.lpNorm<Eigen::Infinity>());
        continue;
      }
      if (polish == Polish::stationary) {
        converged = true;
        break;
      }
      if (scaled && restarts < 2) {
        // One more try from a fresh metric before giving up.
        ++restarts;
        hinv.setIdentity();
        scaled = false;
        continue;
      }
      break;
    }
    hess_at_x.reset();
    Eigen::VectorXd gn = -grad(xn);
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(d, d);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      hinv += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) -
              rho * (hy * s.transpose() + s * hy.transpose());
    }
    x = xn;
    fx = fn;
    g = gn;
    converged = g.lpNorm<Eigen::Infinity>() <= options.tol;
    if (options.trace) options.trace(iter, fx, g.lpNorm<Eigen::Infinity>());
  }

  // The gradient test leaves x within |A^{-1}| * tol of the optimum. One
  // Newton step on the Hessian that is computed for the report anyway
  // removes most of that; the Hessian is kept from the pre-step point,
  // which is closer than its own differencing error.
  if (converged && options.compute_hessian) {
    if (!hess_at_x) hess_at_x = numerical_hessian(logpost, x, options.hessian_step);
    Eigen::LLT<Eigen::MatrixXd> llt(-*hess_at_x);
    if (llt.info() == Eigen::Success) {
      const Eigen::VectorXd xn = x - llt.solve(g);
      const double fn = eval(logpost, xn);
      if (std::isfinite(fn) && fn >= fx) {
        const Eigen::VectorXd gn = -grad(xn);
        if (gn.lpNorm<Eigen::Infinity>() <= g.lpNorm<Eigen::Infinity>()) {
          x = xn;
          fx = fn;
          g = gn;
        }
      }
    }
  }

  FitResult fit;
  fit.map = x;
  fit.log_post_at_map = fx;
  fit.iterations = iter;
  fit.gradient_norm = g.lpNorm<Eigen::Infinity>();
  fit.converged = converged;
  if (options.compute_hessian) {
    fit.hessian = hess_at_x ? *hess_at_x : numerical_hessian(logpost, x, options.hessian_step);
    fit.hessian_shift = regularize_negative_hessian(fit.hessian);
    if (fit.hessian_shift > 0.0) fit.converged = false;
  }
  return fit;
}

std::string_view to_string(DrawKind kind) noexcept {
  return kind == DrawKind::importance ? "importance" : "metropolis";
}

DrawKind parse_draw_kind(std::string_view name) {
  if (name == "importance") return DrawKind::importance;
  if (name == "metropolis") return DrawKind::metropolis;
  throw Error(Errc::malformed_config, "unknown sampler '" + std::string(name) + "'");
}

void PosteriorDraws::validate() const {
  if (draws.rows() < 1) throw Error(Errc::empty_draws, "no posterior draws");
  if (weights) {
    if (weights->size() != draws.rows()) {
      throw Error(Errc::dimension_mismatch, "weights do not match the number of draws");
    }
    if ((weights->array() < 0.0).any() || std::abs(weights->sum() - 1.0) > 1e-9) {
      throw Error(Errc::out_of_range, "weights must be nonnegative and sum to one");
    }
  }
}

StudentProposal::StudentProposal(Eigen::VectorXd location, const Eigen::MatrixXd& neg_hessian,
                                 double dof)
    : location_(std::move(location)), dof_(dof) {
  const Eigen::Index d = location_.size();
  if (neg_hessian.rows() != d || neg_hessian.cols() != d) {
    throw Error(Errc::dimension_mismatch, "proposal precision has the wrong shape");
  }
  if (!(dof > 0.0)) throw Error(Errc::out_of_range, "proposal dof must be positive");
  Eigen::LLT<Eigen::MatrixXd> prec(neg_hessian);
  if (prec.info() != Eigen::Success) {
    throw Error(Errc::degenerate_proposal, "-hessian is not positive definite");
  }
  chol_precision_ = prec.matrixL();
  const Eigen::MatrixXd scale =
      prec.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::LLT<Eigen::MatrixXd> sc(0.5 * (scale + scale.transpose()));
  if (sc.info() != Eigen::Success) {
    throw Error(Errc::degenerate_proposal, "proposal scale is not positive definite");
  }
  chol_scale_ = sc.matrixL();
  const double dd = static_cast<double>(d);
  // log det(scale) = -log det(-hessian) = -2 sum log diag(L_prec)
  const double log_det_scale = -2.0 * chol_precision_.diagonal().array().log().sum();
  log_norm_ = std::lgamma(0.5 * (dof + dd)) - std::lgamma(0.5 * dof) -
              0.5 * dd * std::log(dof * std::numbers::pi) - 0.5 * log_det_scale;
}

double StudentProposal::log_density(const Eigen::VectorXd& x) const {
  // (x-m)' P (x-m) = |L' (x-m)|^2 with P = L L'
  const Eigen::VectorXd z = chol_precision_.transpose() * (x - location_);
  const double q = z.squaredNorm();
  const double dd = static_cast<double>(location_.size());
  return log_norm_ - 0.5 * (dof_ + dd) * std::log1p(q / dof_);
}

Eigen::VectorXd StudentProposal::draw(Rng& rng) const {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::chi_squared_distribution<double> chi2(dof_);
  const Eigen::Index d = location_.size();
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
  const double w = chi2(rng);
  return location_ + (chol_scale_ * z) * std::sqrt(dof_ / w);
}

PosteriorDraws importance_sample(const LogDensity& logpost, const FitResult& fit,
                                 const ImportanceOptions& options, std::uint64_t seed) {
  if (options.draws < 1) throw Error(Errc::empty_draws, "importance sample size must be >= 1");
  const StudentProposal proposal(fit.map, -fit.hessian, options.dof);
  Rng rng(seed);
  const int m = options.draws;
  const Eigen::Index d = fit.map.size();
  PosteriorDraws out;
  out.kind = DrawKind::importance;
  out.seed = seed;
  out.draws.resize(m, d);
  Eigen::VectorXd logw(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd x = proposal.draw(rng);
    out.draws.row(i) = x.transpose();
    logw[i] = eval(logpost, x) - proposal.log_density(x);
  }
  const double top = logw.maxCoeff();
  if (!std::isfinite(top)) {
    throw Error(Errc::degenerate_proposal, "every importance draw has zero weight");
  }
  Eigen::VectorXd w = (logw.array() - top).exp().matrix();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) w[i] = 0.0;
  }
  w /= w.sum();
  out.ess = 1.0 / w.squaredNorm();
  out.weights = std::move(w);
  return out;
}

bool metropolis_accept(double delta, double u) noexcept {
  if (std::isnan(delta)) return false;
  if (delta >= 0.0) return u <= 1.0;
  return u <= std::exp(delta);
}

PosteriorDraws adaptive_block_metropolis(const LogDensity& logpost, const BlockPartition& blocks,
                                         const FitResult& fit, const MetropolisOptions& options,
                                         std::uint64_t seed) {
  const Eigen::Index d = fit.map.size();
  {
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& b : blocks) {
      if (b.empty()) throw Error(Errc::dimension_mismatch, "empty parameter block");
      for (int i : b) {
        if (i < 0 || i >= d) throw Error(Errc::dimension_mismatch, "block index out of range");
        seen.insert(i);
      }
      total += b.size();
    }
    if (seen.size() != static_cast<std::size_t>(d) || total != static_cast<std::size_t>(d)) {
      throw Error(Errc::dimension_mismatch, "blocks must partition the coordinates");
    }
  }
  if (options.draws < 1) throw Error(Errc::empty_draws, "chain length must be >= 1");
  if (options.burnin < 0 || options.thin < 1) {
    throw Error(Errc::out_of_range, "burn-in must be >= 0 and thinning >= 1");
  }
  if (fit.hessian.rows() != d || fit.hessian.cols() != d) {
    throw Error(Errc::dimension_mismatch, "fit lacks a hessian");
  }

  const std::size_t nb = blocks.size();
  Eigen::VectorXd x = fit.map;
  double fx = eval(logpost, x);
  if (!std::isfinite(fx)) {
    throw Error(Errc::non_finite, "log posterior is not finite at the chain start");
  }

  // Proposal scale per block: conditional variances from the block of -H.
  std::vector<Eigen::MatrixXd> chol(nb);
  std::vector<double> log_scale(nb);
  auto default_scale = [](std::size_t size) {
    return std::log(2.38 * 2.38 / static_cast<double>(size));
  };
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& idx = blocks[b];
    const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd var(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double prec = -fit.hessian(idx[i], idx[i]);
      var[i] = prec > 0.0 ? 1.0 / prec : 1.0;
    }
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = -fit.hessian(idx[i], idx[j]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
      var = inv.diagonal();
    }
    chol[b] = var.cwiseSqrt().asDiagonal();
    log_scale[b] = default_scale(idx.size());
  }

  Rng rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const int burnin = options.burnin;
  const int total = burnin + options.draws * options.thin;
  const int refresh_at = burnin / 2;

  PosteriorDraws out;
  out.kind = DrawKind::metropolis;
  out.seed = seed;
  out.draws.resize(options.draws, d);
  std::vector<long> window_accept(nb, 0), kept_accept(nb, 0);
  long kept_iters = 0;
  int window = 0;
  Eigen::MatrixXd history(std::max(refresh_at, 1), d);

  Eigen::VectorXd prop = x;
  int row = 0;
  for (int it = 0; it < total; ++it) {
    const bool in_burnin = it < burnin;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& idx = blocks[b];
      const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
      Eigen::VectorXd z(k);
      for (Eigen::Index i = 0; i < k; ++i) z[i] = normal(rng);
      const Eigen::VectorXd step = std::exp(0.5 * log_scale[b]) * (chol[b] * z);
      prop = x;
      for (Eigen::Index i = 0; i < k; ++i) prop[idx[i]] += step[i];
      const double fp = eval(logpost, prop);
      const double u = uniform_open(rng);
      if (metropolis_accept(fp - fx, u)) {
        x = prop;
        fx = fp;
        ++window_accept[b];
        if (!in_burnin) ++kept_accept[b];
      }
    }
    if (in_burnin) {
      if (it < refresh_at) history.row(it) = x.transpose();
      ++window;
      if (options.adapt && window == options.adapt_interval) {
        for (std::size_t b = 0; b < nb; ++b) {
          const double rate = static_cast<double>(window_accept[b]) / window;
          log_scale[b] += options.adapt_rate * (rate - options.target_acceptance);
          window_accept[b] = 0;
        }
        window = 0;
      }
      if (options.adapt && it + 1 == refresh_at && refresh_at >= 2) {
        const Eigen::MatrixXd centered = history.rowwise() - history.colwise().mean();
        for (std::size_t b = 0; b < nb; ++b) {
          const auto& idx = blocks[b];
          const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
          Eigen::MatrixXd cov(k, k);
          for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
              cov(i, j) = centered.col(idx[i]).dot(centered.col(idx[j])) / (refresh_at - 1);
            }
          }
          // A tiny jitter keeps rarely-moving chains proposable.
          cov.diagonal().array() += 1e-10 * (1.0 + cov.diagonal().array());
          Eigen::LLT<Eigen::MatrixXd> llt(cov);
          const Eigen::VectorXd prev = (chol[b] * chol[b].transpose()).diagonal();
          const bool moved = (cov.diagonal().array() > 1e-6 * prev.array()).all();
          if (llt.info() == Eigen::Success && moved) {
            chol[b] = llt.matrixL();
            log_scale[b] = default_scale(idx.size());
          }
        }
      }
    } else {
      ++kept_iters;
      if ((it - burnin) % options.thin == 0) out.draws.row(row++) = x.transpose();
    }
  }
  out.acceptance.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    out.acceptance[b] = static_cast<double>(kept_accept[b]) / static_cast<double>(kept_iters);
  }
  out.ess = static_cast<double>(options.draws);
  return out;
}

}  // namespace splinecop
