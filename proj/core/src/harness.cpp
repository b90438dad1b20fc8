#include "splinecop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "splinecop/error.hpp"
#include "splinecop/parametric.hpp"

namespace splinecop {

using json = nlohmann::ordered_json;

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double local_kendall_tau(const ObservationSet& data, double center, int window) {
  const auto n = static_cast<int>(data.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  window = std::clamp(window, 2, n);
  std::partial_sort(idx.begin(), idx.begin() + window, idx.end(), [&](int a, int b) {
    const double da = std::abs(data.x(a, 0) - center);
    const double db = std::abs(data.x(b, 0) - center);
    return da < db || (da == db && a < b);
  });
  std::vector<double> u(window), v(window);
  for (int i = 0; i < window; ++i) {
    u[i] = data.u[idx[i]];
    v[i] = data.v[idx[i]];
  }
  return empirical_kendall_tau(u, v);
}

double gumbel_equivalent_theta(double tau) {
  tau = std::clamp(tau, 0.02, 0.9);
  return std::sqrt(1.0 / (1.0 - tau) - 1.0);
}

namespace {

// Least-squares coefficients c with sum_k b*_k(x_l) c_k ~ target_l.
std::vector<double> fit_covariate_spline(const BSplineBasis& basis,
                                         const std::vector<double>& xs,
                                         const std::vector<double>& target) {
  const int k = basis.size();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()), k);
  for (std::size_t l = 0; l < xs.size(); ++l) {
    const auto b = basis.eval(xs[l], BasisMode::value);
    for (int m = 0; m < k; ++m) design(static_cast<Eigen::Index>(l), m) = b[m];
  }
  const Eigen::Map<const Eigen::VectorXd> y(target.data(), static_cast<Eigen::Index>(target.size()));
  Eigen::MatrixXd normal = design.transpose() * design;
  normal.diagonal().array() += 1e-6;
  const Eigen::VectorXd c = normal.ldlt().solve(design.transpose() * y);
  return std::vector<double>(c.data(), c.data() + c.size());
}

}  // namespace

std::vector<double> initial_params(const CopulaModel& model, const ObservationSet& data) {
  model.check_data(data);
  const auto& spec = model.spec();
  const int n = static_cast<int>(data.size());
  const double tau_all = empirical_kendall_tau(data.u, data.v);
  const double theta_all = gumbel_equivalent_theta(tau_all);
  std::vector<double> p;
  if (spec.kind == ModelKind::unconditional) {
    p.assign(spec.K, theta_all);
    return p;
  }
  const int window = std::max(40, n / 5);
  const auto centers = linear_grid(0.05, 0.95, 2 * spec.K_star);
  std::vector<double> local(centers.size());
  for (std::size_t l = 0; l < centers.size(); ++l) {
    local[l] = local_kendall_tau(data, centers[l], window);
  }
  const auto& xb = *model.x_basis();
  switch (spec.kind) {
    case ModelKind::additive: {
      p.assign(spec.K, theta_all);
      std::vector<double> resid(centers.size());
      for (std::size_t l = 0; l < centers.size(); ++l) {
        resid[l] = gumbel_equivalent_theta(local[l]) - theta_all;
      }
      const auto beta = fit_covariate_spline(xb, centers, resid);
      for (int j = 0; j < spec.covariates; ++j) {
        for (int m = 0; m < spec.K_star; ++m) p.push_back(j == 0 ? beta[m] : 0.0);
      }
      break;
    }
    case ModelKind::flexpower: {
      double tmin = *std::min_element(local.begin(), local.end());
      tmin = std::clamp(tmin, 0.02, 0.9);
      p.assign(spec.K, gumbel_equivalent_theta(tmin));
      // Zero is a stationary point of the squared links; start slightly off it.
      for (int m = 0; m < spec.K_star; ++m) p.push_back(0.1);
      std::vector<double> h(centers.size());
      for (std::size_t l = 0; l < centers.size(); ++l) {
        const double t = std::clamp(local[l], tmin, 0.9);
        h[l] = std::sqrt(std::max(0.0, (1.0 - tmin) / (1.0 - t) - 1.0));
      }
      const auto beta = fit_covariate_spline(xb, centers, h);
      for (int m = 0; m < spec.K_star; ++m) p.push_back(std::max(beta[m], 0.0) + 0.05);
      break;
    }
    case ModelKind::tensor: {
      const auto cols = linear_grid(0.0, 1.0, spec.K_star);
      p.resize(static_cast<std::size_t>(spec.K) * spec.K_star);
      for (int l = 0; l < spec.K_star; ++l) {
        const double th = gumbel_equivalent_theta(local_kendall_tau(data, cols[l], window));
        for (int k = 0; k < spec.K; ++k) p[static_cast<std::size_t>(l) * spec.K + k] = th;
      }
      break;
    }
    case ModelKind::unconditional:
      break;
  }
  return p;
}

LogDensity make_log_posterior(const CopulaModel& model, const ObservationSet& data) {
  return [&model, &data](std::span<const double> p) {
    return model.log_posterior_or_neg_inf(p, data);
  };
}

BlockPartition model_blocks(const CopulaModel& model) {
  BlockPartition blocks;
  for (const auto& b : model.blocks()) {
    std::vector<int> idx(b.size);
    std::iota(idx.begin(), idx.end(), b.offset);
    blocks.push_back(std::move(idx));
  }
  return blocks;
}

FitResult fit_model(const CopulaModel& model, const ObservationSet& data,
                    const MapOptions& options) {
  const auto init = initial_params(model, data);
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(init.data(), init.size());
  return map_estimate(make_log_posterior(model, data), x0, options);
}

PosteriorDraws draw_posterior(const CopulaModel& model, const ObservationSet& data,
                              const FitResult& fit, const SamplerSettings& settings,
                              std::uint64_t seed) {
  const auto logpost = make_log_posterior(model, data);
  if (settings.kind == DrawKind::importance) {
    return importance_sample(logpost, fit, ImportanceOptions{settings.draws, settings.dof}, seed);
  }
  MetropolisOptions mo;
  mo.draws = settings.draws;
  mo.burnin = settings.burnin;
  return adaptive_block_metropolis(logpost, model_blocks(model), fit, mo, seed);
}

ObservationSet simulate_data(const RunConfig& config) {
  return sample_data(config.simulate.family, config.simulate.tau, config.simulate.n,
                     derive_seed(config.seed, static_cast<std::uint64_t>(SeedStream::data)));
}

std::uint64_t replicate_seed(std::uint64_t master, int n, int replicate) {
  return derive_seed(master, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replicate));
}

std::vector<double> study_truth(const StudySpec& study, bool conditional,
                                const std::vector<double>& grid) {
  std::vector<double> truth(grid.size());
  if (conditional) {
    for (std::size_t k = 0; k < grid.size(); ++k) truth[k] = study.tau(grid[k]);
    return truth;
  }
  if (study.tau.needs_covariate()) {
    throw Error(Errc::malformed_config, "a varying tau has no single lambda curve");
  }
  if (study.tau.tau0 == 0.0) {
    for (std::size_t k = 0; k < grid.size(); ++k) truth[k] = grid[k] * std::log(grid[k]);
    return truth;
  }
  const auto ref = make_reference(study.family, theta_of_tau(study.family, study.tau.tau0));
  for (std::size_t k = 0; k < grid.size(); ++k) truth[k] = ref.lambda(grid[k]);
  return truth;
}

ReplicateCurve run_replicate(const RunConfig& config, const ReplicateSettings& settings,
                             const std::vector<double>& grid) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = sample_data(settings.family, settings.tau, settings.n,
                                derive_seed(settings.seed, static_cast<std::uint64_t>(SeedStream::data)));
  const CopulaModel model(config.model_spec(data.covariates()));
  const auto fit = fit_model(model, data, config.map);
  ReplicateCurve out;
  const bool cond = model.conditional();
  const std::vector<double> map(fit.map.data(), fit.map.data() + fit.map.size());
  if (settings.draws == 0) {
    out.estimate.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double g = grid[k];
      out.estimate[k] = cond ? model.tau(map, std::span<const double>(&g, 1)) : model.lambda(map, g);
    }
  } else {
    SamplerSettings ss{config.effective_sampler(), settings.draws, config.burnin, config.dof};
    const auto draws = draw_posterior(model, data, fit, ss,
                                      derive_seed(settings.seed, static_cast<std::uint64_t>(SeedStream::sampler)));
    const auto curve = cond ? tau_curve(draws, model, grid, config.band, config.levels)
                            : lambda_curve(draws, model, grid, {}, config.levels);
    out.estimate = curve.point;
    out.bands = curve.bands;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<StudyReport> run_study(const RunConfig& config, int workers) {
  if (!config.study) throw Error(Errc::malformed_config, "config has no study block");
  config.validate();
  const auto& study = *config.study;
  const bool cond = config.model != ModelKind::unconditional;
  const auto grid = fine_u_grid();
  const auto truth = study_truth(study, cond, grid);
  std::vector<StudyReport> reports;
  for (const int n : study.n) {
    std::vector<ReplicateCurve> reps(study.replicates);
    parallel_for(study.replicates, workers, [&](int r) {
      ReplicateSettings rs{study.family, study.tau, n, replicate_seed(config.seed, n, r), study.draws};
      reps[r] = run_replicate(config, rs, grid);
    });
    auto report = study_metrics(grid, truth, reps, study.draws > 0 ? paper_u_grid() : std::vector<double>{});
    report.family = std::string(to_string(study.family));
    report.tau = format_tau_function(study.tau);
    report.n = n;
    reports.push_back(std::move(report));
  }
  return reports;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

}  // namespace

std::string format_study_table(const std::vector<StudyReport>& reports,
                               const std::vector<double>& rows) {
  std::ostringstream o;
  if (reports.empty()) return {};
  o << "# family=" << reports.front().family << " tau=" << reports.front().tau
    << " replicates=" << reports.front().replicates << "\n";
  o << std::setw(6) << "";
  for (const auto& r : reports) o << std::setw(20) << ("n=" + std::to_string(r.n));
  o << "\n" << std::setw(6) << "u";
  for (std::size_t i = 0; i < reports.size(); ++i) o << std::setw(10) << "Bias" << std::setw(10) << "RMSE";
  o << "\n";
  for (const double u : rows) {
    o << std::setw(6) << fixed(u, 2);
    for (const auto& r : reports) {
      o << std::setw(10) << fixed(r.bias_at(u), 4) << std::setw(10) << fixed(r.rmse_at(u), 4);
    }
    o << "\n";
  }
  o << std::setw(6) << "RMISE";
  for (const auto& r : reports) o << std::setw(20) << fixed(r.rmise, 4);
  o << "\n";
  if (!reports.front().levels.empty()) {
    for (std::size_t l = 0; l < reports.front().levels.size(); ++l) {
      o << std::setw(6) << ("cov" + fixed(reports.front().levels[l], 2).substr(1));
      for (const auto& r : reports) o << std::setw(20) << fixed(r.coverage[l], 3);
      o << "\n";
    }
  }
  return o.str();
}

std::string format_study_records(const std::vector<StudyReport>& reports,
                                 const RunConfig& config) {
  std::string out;
  for (const auto& r : reports) {
    json j;
    j["config_hash"] = config.hash_hex();
    j["seed"] = config.seed;
    j["model"] = to_string(config.model);
    j["family"] = r.family;
    j["tau"] = r.tau;
    j["n"] = r.n;
    j["replicates"] = r.replicates;
    j["grid"] = r.grid;
    j["truth"] = r.truth;
    j["bias"] = r.bias;
    j["rmse"] = r.rmse;
    j["rmise"] = r.rmise;
    j["levels"] = r.levels;
    j["coverage"] = r.coverage;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_artifact(const std::filesystem::path& path, const std::string& content,
                    double seconds) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::malformed_data, "cannot write " + path.string());
    out << content;
  }
  json meta;
  meta["artifact"] = path.filename().string();
  meta["created_utc"] = utc_timestamp();
  meta["wall_seconds"] = seconds;
  std::ofstream side(path.string() + ".meta.json", std::ios::binary | std::ios::trunc);
  side << meta.dump(2) << "\n";
}

json header_json(const RunConfig& config, const CopulaModel* model) {
  json j;
  j["config_hash"] = config.hash_hex();
  j["seed"] = config.seed;
  if (model) {
    j["model"] = to_string(model->spec().kind);
    j["K"] = model->spec().K;
    j["K_star"] = model->spec().K_star;
    j["dimension"] = model->dimension();
    json blocks = json::array();
    for (const auto& b : model->blocks()) {
      blocks.push_back({{"name", b.name}, {"offset", b.offset}, {"size", b.size}});
    }
    j["blocks"] = blocks;
  }
  return j;
}

json fit_json(const RunConfig& config, const CopulaModel& model, const FitResult& fit) {
  json j = header_json(config, &model);
  j["map"] = std::vector<double>(fit.map.data(), fit.map.data() + fit.map.size());
  json h = json::array();
  for (Eigen::Index r = 0; r < fit.hessian.rows(); ++r) {
    std::vector<double> row(fit.hessian.cols());
    for (Eigen::Index c = 0; c < fit.hessian.cols(); ++c) row[c] = fit.hessian(r, c);
    h.push_back(row);
  }
  j["hessian"] = h;
  j["log_post_at_map"] = fit.log_post_at_map;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["hessian_shift"] = fit.hessian_shift;
  const std::vector<double> map(fit.map.data(), fit.map.data() + fit.map.size());
  if (model.conditional()) {
    if (model.covariates() == 1) {
      const auto grid = config.x_grid();
      std::vector<double> tau(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) tau[k] = model.tau(map, std::span<const double>(&grid[k], 1));
      j["x_grid"] = grid;
      j["tau_at_map"] = tau;
    }
  } else {
    j["tau_at_map"] = model.tau(map);
    std::vector<double> lam(config.u_grid.size());
    for (std::size_t k = 0; k < lam.size(); ++k) lam[k] = model.lambda(map, config.u_grid[k]);
    j["u_grid"] = config.u_grid;
    j["lambda_at_map"] = lam;
  }
  return j;
}

// Comment line carried by every CSV artifact.
std::string csv_provenance(const RunConfig& config) {
  return "# config_hash=" + config.hash_hex() + " seed=" + std::to_string(config.seed) + "\n";
}

std::string draws_csv(const PosteriorDraws& d) {
  std::string out = "weight";
  for (int c = 0; c < d.dimension(); ++c) out += ",p" + std::to_string(c + 1);
  out += "\n";
  for (int r = 0; r < d.size(); ++r) {
    out += format_double(d.weights ? (*d.weights)[r] : 1.0 / d.size());
    for (int c = 0; c < d.dimension(); ++c) out += "," + format_double(d.draws(r, c));
    out += "\n";
  }
  return out;
}

std::string curve_csv(const CurveEstimate& curve, std::string_view grid_name) {
  std::string out(grid_name);
  out += ",mean";
  for (const auto& b : curve.bands) {
    const std::string l = format_double(b.level);
    out += ",lower_" + l + ",upper_" + l;
  }
  out += "\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    out += format_double(curve.grid[k]) + "," + format_double(curve.point[k]);
    for (const auto& b : curve.bands) {
      out += "," + format_double(b.lower[k]) + "," + format_double(b.upper[k]);
    }
    out += "\n";
  }
  return out;
}

json curve_json(const CurveEstimate& curve) {
  json j;
  j["band_kind"] = to_string(curve.band_kind);
  j["grid"] = curve.grid;
  j["point"] = curve.point;
  json bands = json::array();
  for (const auto& b : curve.bands) {
    bands.push_back({{"level", b.level}, {"lower", b.lower}, {"upper", b.upper}});
  }
  j["bands"] = bands;
  return j;
}

json draws_json(const PosteriorDraws& d) {
  json j;
  j["kind"] = to_string(d.kind);
  j["sampler_seed"] = d.seed;
  j["draws"] = d.size();
  j["ess"] = d.ess;
  if (!d.acceptance.empty()) j["acceptance"] = d.acceptance;
  return j;
}

}  // namespace

void run_command(const CommandOptions& options, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  RunConfig config = options.config ? load_config(*options.config) : RunConfig{};
  if (options.seed) config.seed = *options.seed;
  if (options.workers) config.set("workers", std::to_string(*options.workers));
  if (options.model) config.set("model", *options.model);
  if (options.sampler) config.set("sampler", *options.sampler);
  config.validate();

  const auto& cmd = options.subcommand;
  std::filesystem::create_directories(options.out);
  const auto out = [&](const std::string& name) { return options.out / name; };

  if (cmd == "simulate") {
    const auto data = simulate_data(config);
    const std::vector<std::string> comments{
        "config_hash=" + config.hash_hex(), "seed=" + std::to_string(config.seed),
        "family=" + std::string(to_string(config.simulate.family)),
        "tau=" + format_tau_function(config.simulate.tau)};
    write_artifact(out("data.csv"), format_observations(data, comments), elapsed());
    log << "wrote " << data.size() << " observations to " << out("data.csv").string() << "\n";
    return;
  }
  if (cmd == "study") {
    if (!config.study) throw Error(Errc::malformed_config, "config has no study block (study.*)");
    const auto reports = run_study(config, config.workers);
    const bool cond = config.model != ModelKind::unconditional;
    const auto rows = cond ? paper_u_grid() : table_u_grid();
    std::string table = "# config_hash=" + config.hash_hex() + " seed=" + std::to_string(config.seed) +
                        " model=" + std::string(to_string(config.model)) + "\n" +
                        format_study_table(reports, rows);
    write_artifact(out("study.txt"), table, elapsed());
    write_artifact(out("study.jsonl"), format_study_records(reports, config), elapsed());
    log << table;
    return;
  }
  if (cmd != "fit" && cmd != "sample" && cmd != "tau" && cmd != "dic") {
    throw Error(Errc::malformed_config, "unknown subcommand '" + cmd + "'");
  }
  if (!options.data) throw Error(Errc::malformed_data, cmd + " needs --data");
  const auto data = ingest_observations(*options.data, config.covariates);
  if (config.model == ModelKind::unconditional && data.conditional()) {
    log << "note: ignoring " << data.covariates() << " covariate column(s) for the unconditional model\n";
  }
  ObservationSet used = data;
  if (config.model == ModelKind::unconditional) used.x.resize(static_cast<Eigen::Index>(data.size()), 0);
  if (config.model != ModelKind::unconditional && !used.conditional()) {
    throw Error(Errc::malformed_data, "model '" + std::string(to_string(config.model)) +
                                          "' needs covariate columns");
  }
  const CopulaModel model(config.model_spec(used.covariates()));
  const auto fit = fit_model(model, used, config.map);
  if (cmd == "fit") {
    write_artifact(out("fit.json"), fit_json(config, model, fit).dump(2) + "\n", elapsed());
    log << "MAP log posterior " << fit.log_post_at_map << " after " << fit.iterations
        << " iterations (converged=" << (fit.converged ? "yes" : "no") << ")\n";
    return;
  }
  SamplerSettings ss{cmd == "dic" && !config.sampler ? DrawKind::metropolis : config.effective_sampler(),
                     config.draws, config.burnin, config.dof};
  const std::uint64_t sampler_seed =
      derive_seed(config.seed, static_cast<std::uint64_t>(SeedStream::sampler));
  const auto draws = draw_posterior(model, used, fit, ss, sampler_seed);
  if (cmd == "sample") {
    json j = header_json(config, &model);
    j.update(draws_json(draws));
    write_artifact(out("draws.csv"), csv_provenance(config) + draws_csv(draws), elapsed());
    write_artifact(out("sample.json"), j.dump(2) + "\n", elapsed());
    log << "drew " << draws.size() << " " << to_string(draws.kind) << " draws\n";
    return;
  }
  if (cmd == "tau") {
    json j = header_json(config, &model);
    j.update(draws_json(draws));
    if (model.conditional()) {
      if (model.covariates() != 1) {
        throw Error(Errc::dimension_mismatch, "tau curves need exactly one covariate");
      }
      const auto curve = tau_curve(draws, model, config.x_grid(), config.band, config.levels);
      j["tau_curve"] = curve_json(curve);
      write_artifact(out("tau.csv"), csv_provenance(config) + curve_csv(curve, "x"), elapsed());
    } else {
      const ScalarFunctional tau_fn = [&](std::span<const double> p) { return model.tau(p); };
      const auto tau = posterior_functional(draws, tau_fn, config.levels);
      json t;
      t["mean"] = tau.point[0];
      json bands = json::array();
      for (const auto& b : tau.bands) bands.push_back({{"level", b.level}, {"lower", b.lower[0]}, {"upper", b.upper[0]}});
      t["bands"] = bands;
      j["tau"] = t;
      const auto curve = lambda_curve(draws, model, config.u_grid, {}, config.levels);
      j["lambda_curve"] = curve_json(curve);
      write_artifact(out("lambda.csv"), csv_provenance(config) + curve_csv(curve, "u"), elapsed());
    }
    write_artifact(out("tau.json"), j.dump(2) + "\n", elapsed());
    log << "wrote tau summaries to " << options.out.string() << "\n";
    return;
  }
  // dic
  const ScalarFunctional loglik = [&](std::span<const double> p) {
    return model.log_likelihood(p, used);
  };
  const auto d = dic(draws, loglik);
  json j = header_json(config, &model);
  j.update(draws_json(draws));
  j["dic"] = d.dic;
  j["effective_dim"] = d.effective_dim;
  j["mean_deviance"] = d.mean_deviance;
  j["deviance_at_mean"] = d.deviance_at_mean;
  write_artifact(out("dic.json"), j.dump(2) + "\n", elapsed());
  log << "DIC " << d.dic << " (effective dimension " << d.effective_dim << ")\n";
}

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->numerical() ? 2 : 1;
  return 1;
}

}  // namespace splinecop
