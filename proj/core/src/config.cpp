#include "splinecop/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splinecop/error.hpp"

namespace splinecop {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view what) {
  throw Error(Errc::malformed_config, "config field '" + std::string(key) + "': " +
                                          std::string(what) + " (got '" + std::string(value) +
                                          "')");
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto v = trim(value);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad(key, value, "expected a number");
  return out;
}

long long to_int(std::string_view key, std::string_view value) {
  long long out = 0;
  const auto v = trim(value);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad(key, value, "expected an integer");
  return out;
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto pos = value.find(',', start);
    const auto item = trim(value.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += format_double(xs[i]);
  }
  return out;
}

template <class F>
auto wrap(std::string_view key, std::string_view value, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::malformed_config) {
      bad(key, value, e.what());
    }
    throw;
  }
}

}  // namespace

std::string format_tau_function(const TauFunction& tau) {
  return tau.kind == TauFunction::Kind::paper_sine ? "sine" : format_double(tau.tau0);
}

TauFunction parse_tau_function(std::string_view text) {
  const auto t = trim(text);
  if (t == "sine") return TauFunction::sine();
  const double v = to_double("tau", t);
  if (!(v >= 0.0 && v < 1.0)) bad("tau", text, "expected 'sine' or a value in [0,1)");
  return TauFunction::constant(v);
}

void RunConfig::set(std::string_view key_in, std::string_view value_in) {
  const auto key = trim(key_in);
  const auto value = trim(value_in);
  const std::string k(key);
  auto pos_int = [&](int lo) {
    const auto v = to_int(key, value);
    if (v < lo || v > 1'000'000'000) bad(key, value, "integer out of range");
    return static_cast<int>(v);
  };
  auto pos_double = [&] {
    const double v = to_double(key, value);
    if (!(v > 0.0)) bad(key, value, "expected a positive number");
    return v;
  };
  auto nonneg_double = [&] {
    const double v = to_double(key, value);
    if (!(v >= 0.0)) bad(key, value, "expected a nonnegative number");
    return v;
  };

  if (k == "model") {
    model = wrap(key, value, [&] { return parse_model_kind(value); });
  } else if (k == "K") {
    K = pos_int(4);
  } else if (k == "K_star") {
    K_star = pos_int(4);
  } else if (k == "epsilon") {
    epsilon = pos_double();
    if (!(epsilon < 0.5)) bad(key, value, "expected a value in (0, 0.5)");
  } else if (k == "prior.a") {
    priors.generator.a = pos_double();
  } else if (k == "prior.b") {
    priors.generator.b = pos_double();
  } else if (k == "prior.order") {
    priors.generator.order = pos_int(1);
  } else if (k == "covariate.a") {
    priors.covariate.a = pos_double();
  } else if (k == "covariate.b") {
    priors.covariate.b = pos_double();
  } else if (k == "covariate.order") {
    priors.covariate.order = pos_int(1);
  } else if (k == "ridge") {
    priors.covariate.ridge = nonneg_double();
  } else if (k == "kappa1") {
    priors.kappa1 = nonneg_double();
  } else if (k == "kappa2") {
    priors.kappa2 = nonneg_double();
  } else if (k == "sampler") {
    if (value == "auto") {
      sampler.reset();
    } else {
      sampler = wrap(key, value, [&] { return parse_draw_kind(value); });
    }
  } else if (k == "draws") {
    draws = pos_int(1);
  } else if (k == "burnin") {
    burnin = pos_int(0);
  } else if (k == "dof") {
    dof = pos_double();
  } else if (k == "seed") {
    const auto v = to_int(key, value);
    if (v < 0) bad(key, value, "expected a nonnegative integer");
    seed = static_cast<std::uint64_t>(v);
  } else if (k == "workers") {
    workers = pos_int(1);
  } else if (k == "u_grid") {
    std::vector<double> g;
    for (auto item : split_list(value)) {
      const double u = to_double(key, item);
      if (!(u > 0.0 && u < 1.0)) bad(key, value, "grid values must lie in (0,1)");
      g.push_back(u);
    }
    if (g.empty()) bad(key, value, "empty grid");
    u_grid = std::move(g);
  } else if (k == "x_grid_points") {
    x_grid_points = pos_int(2);
  } else if (k == "band") {
    band = wrap(key, value, [&] { return parse_band_kind(value); });
  } else if (k == "levels") {
    std::vector<double> ls;
    for (auto item : split_list(value)) {
      const double l = to_double(key, item);
      if (!(l > 0.0 && l < 1.0)) bad(key, value, "levels must lie in (0,1)");
      ls.push_back(l);
    }
    if (ls.empty()) bad(key, value, "no levels");
    levels = std::move(ls);
  } else if (k == "map.tol") {
    map.tol = pos_double();
  } else if (k == "map.max_iter") {
    map.max_iter = pos_int(1);
  } else if (k == "covariates") {
    covariates.clear();
    for (auto item : split_list(value)) covariates.emplace_back(item);
  } else if (k == "simulate.family") {
    simulate.family = wrap(key, value, [&] { return parse_family(value); });
  } else if (k == "simulate.tau") {
    simulate.tau = wrap(key, value, [&] { return parse_tau_function(value); });
  } else if (k == "simulate.n") {
    simulate.n = pos_int(2);
  } else if (k.rfind("study.", 0) == 0) {
    if (!study) study.emplace();
    if (k == "study.family") {
      study->family = wrap(key, value, [&] { return parse_family(value); });
    } else if (k == "study.tau") {
      study->tau = wrap(key, value, [&] { return parse_tau_function(value); });
    } else if (k == "study.n") {
      std::vector<int> ns;
      for (auto item : split_list(value)) {
        const auto v = to_int(key, item);
        if (v < 10 || v > 10'000'000) bad(key, value, "sample sizes must be >= 10");
        ns.push_back(static_cast<int>(v));
      }
      if (ns.empty()) bad(key, value, "no sample sizes");
      study->n = std::move(ns);
    } else if (k == "study.replicates") {
      study->replicates = pos_int(2);
    } else if (k == "study.draws") {
      study->draws = pos_int(0);
    } else {
      bad(key, value, "unknown key");
    }
  } else {
    bad(key, value, "unknown key");
  }
}

void RunConfig::validate() const {
  priors.validate();
  if (priors.generator.order >= K) {
    throw Error(Errc::malformed_config, "config field 'prior.order': must be below K");
  }
  if (model != ModelKind::unconditional && priors.covariate.order >= K_star) {
    throw Error(Errc::malformed_config, "config field 'covariate.order': must be below K_star");
  }
  if (study && study->tau.needs_covariate() && model == ModelKind::unconditional) {
    throw Error(Errc::malformed_config,
                "config field 'model': a varying study.tau needs a conditional model");
  }
}

ModelSpec RunConfig::model_spec(int covariates_count) const {
  ModelSpec s;
  s.kind = model;
  s.K = K;
  s.K_star = K_star;
  s.covariates = model == ModelKind::unconditional ? 0 : covariates_count;
  s.epsilon = epsilon;
  s.priors = priors;
  return s;
}

DrawKind RunConfig::effective_sampler() const {
  if (sampler) return *sampler;
  return model == ModelKind::unconditional ? DrawKind::importance : DrawKind::metropolis;
}

std::vector<double> RunConfig::x_grid() const { return linear_grid(0.0, 1.0, x_grid_points); }

std::string RunConfig::canonical() const {
  std::ostringstream o;
  auto line = [&](std::string_view k, const std::string& v) { o << k << '=' << v << '\n'; };
  line("model", std::string(to_string(model)));
  line("K", std::to_string(K));
  line("K_star", std::to_string(K_star));
  line("epsilon", format_double(epsilon));
  line("prior.a", format_double(priors.generator.a));
  line("prior.b", format_double(priors.generator.b));
  line("prior.order", std::to_string(priors.generator.order));
  line("covariate.a", format_double(priors.covariate.a));
  line("covariate.b", format_double(priors.covariate.b));
  line("covariate.order", std::to_string(priors.covariate.order));
  line("ridge", format_double(priors.covariate.ridge));
  line("kappa1", format_double(priors.kappa1));
  line("kappa2", format_double(priors.kappa2));
  line("sampler", sampler ? std::string(to_string(*sampler)) : "auto");
  line("draws", std::to_string(draws));
  line("burnin", std::to_string(burnin));
  line("dof", format_double(dof));
  line("seed", std::to_string(seed));
  line("u_grid", join(u_grid));
  line("x_grid_points", std::to_string(x_grid_points));
  line("band", std::string(to_string(band)));
  line("levels", join(levels));
  line("map.tol", format_double(map.tol));
  line("map.max_iter", std::to_string(map.max_iter));
  std::string cov;
  for (std::size_t i = 0; i < covariates.size(); ++i) cov += (i ? "," : "") + covariates[i];
  line("covariates", cov);
  line("simulate.family", std::string(to_string(simulate.family)));
  line("simulate.tau", format_tau_function(simulate.tau));
  line("simulate.n", std::to_string(simulate.n));
  if (study) {
    line("study.family", std::string(to_string(study->family)));
    line("study.tau", format_tau_function(study->tau));
    std::string ns;
    for (std::size_t i = 0; i < study->n.size(); ++i) ns += (i ? "," : "") + std::to_string(study->n[i]);
    line("study.n", ns);
    line("study.replicates", std::to_string(study->replicates));
    line("study.draws", std::to_string(study->draws));
  }
  // workers is deliberately absent: it never changes results.
  return o.str();
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::size_t start = 0;
  int lineno = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? end : end - start);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(Errc::malformed_config,
                    "config line " + std::to_string(lineno) + ": expected key = value");
      }
      cfg.set(line.substr(0, eq), line.substr(eq + 1));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::malformed_config, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace splinecop
