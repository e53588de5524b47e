// entropy-bridge: command-line front end over the C interface.
//
//   entropy-bridge bridge     --config problem.toml [--verify-mc N]
//   entropy-bridge robustness --config problem.toml [--gamma 1.5,2]
//   entropy-bridge fig1       [--grid 1:10:0.05]
//   entropy-bridge oracle     [--config oracle.toml]
//   entropy-bridge simulate   --config problem.toml
//
// Exit codes: 0 success, 1 usage or input error, 2 infeasible (unreachable
// horizon or unattainable gamma), 3 nonconvergence, 4 oracle identity breach.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "entropy_bridge/entropy_bridge.h"

namespace {

using eb_cli::Config;
using eb_cli::ConfigError;

constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNonconvergence = 3;
constexpr int kExitOracleBreach = 4;

struct CliFailure {
  int code;
  std::string message;
};

int exit_code_for(eb_status s) {
  switch (s) {
    case EB_ERR_UNREACHABLE: return kExitInfeasible;
    case EB_ERR_NONCONVERGENCE: return kExitNonconvergence;
    default: return kExitUsage;
  }
}

void check(eb_status s, const std::string& context) {
  if (s != EB_OK) {
    throw CliFailure{exit_code_for(s), context + ": " + eb_last_error()};
  }
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using System = std::unique_ptr<eb_system, Deleter<eb_system, eb_system_destroy>>;
using Gaussian =
    std::unique_ptr<eb_gaussian, Deleter<eb_gaussian, eb_gaussian_destroy>>;
using Bridge = std::unique_ptr<eb_bridge, Deleter<eb_bridge, eb_bridge_destroy>>;
using Strategy =
    std::unique_ptr<eb_strategy, Deleter<eb_strategy, eb_strategy_destroy>>;
using Chain = std::unique_ptr<eb_chain, Deleter<eb_chain, eb_chain_destroy>>;
using Report = std::unique_ptr<eb_identity_report,
                               Deleter<eb_identity_report, eb_identity_report_destroy>>;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) {
    if (path.empty() || path == "-") {
      file_ = stdout;
    } else {
      file_ = std::fopen(path.c_str(), "w");
      if (!file_) throw CliFailure{kExitUsage, "cannot open " + path};
      owned_ = true;
    }
  }
  ~CsvWriter() {
    if (owned_) std::fclose(file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::fputs(cells[i].c_str(), file_);
      std::fputc(i + 1 < cells.size() ? ',' : '\n', file_);
    }
  }

 private:
  std::FILE* file_ = nullptr;
  bool owned_ = false;
};

struct Options {
  std::string config;
  std::string out = "-";
  std::optional<std::uint64_t> seed;
  long long verify_mc = 0;
  std::string gamma;
  std::string grid = "1:10:0.05";
};

int thread_cap(std::size_t jobs) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("ENTROPY_BRIDGE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, std::min<int>(n, static_cast<int>(jobs)));
}

/// Runs job(i) for i in [0, count) over a bounded thread pool.
template <typename Job>
void parallel_for(std::size_t count, Job job) {
  const int threads = thread_cap(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(v)) {
      throw CliFailure{kExitUsage, std::string(flag) + ": bad number '" + tok + "'"};
    }
    out.push_back(v);
  }
  if (out.empty()) throw CliFailure{kExitUsage, std::string(flag) + ": empty list"};
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  double start = 0, stop = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' ||
      !(step > 0) || stop < start || !in.eof()) {
    throw CliFailure{kExitUsage, "--grid expects start:stop:step with step > 0"};
  }
  const long long count = std::llround((stop - start) / step) + 1;
  std::vector<double> g;
  for (long long i = 0; i < count; ++i) g.push_back(start + i * step);
  return g;
}

Config require_config(const Options& opt) {
  if (opt.config.empty()) throw CliFailure{kExitUsage, "--config is required"};
  return Config::Load(opt.config);
}

std::uint64_t seed_of(const Options& opt, const Config* cfg) {
  if (opt.seed) return *opt.seed;
  if (cfg) return static_cast<std::uint64_t>(cfg->integer_or("task", "seed", 1));
  return 1;
}

System load_system(const Config& cfg) {
  const long long n = cfg.integer("system", "n");
  const long long m = cfg.integer("system", "m");
  if (n < 1 || m < 1 || n > 64 || m > 64) {
    throw ConfigError(cfg.where("system", "n") + ": n and m must lie in [1, 64]");
  }
  const auto a = cfg.list("system", "A", n * n);
  const auto b = cfg.list("system", "B", n * m);
  eb_system* sys = nullptr;
  check(eb_system_create(n, m, a.data(), b.data(), &sys),
        cfg.where("system", "A"));
  return System(sys);
}

int state_dim(const eb_system* sys) {
  eb_system_info info;
  check(eb_system_get_info(sys, &info), "system");
  return info.state_dim;
}

Gaussian load_gaussian(const Config& cfg, const std::string& section,
                       const eb_system* sys) {
  eb_gaussian* g = nullptr;
  if (cfg.boolean_or(section, "invariant", false)) {
    check(eb_gaussian_invariant(sys, &g), cfg.where(section, "invariant"));
    return Gaussian(g);
  }
  const int n = state_dim(sys);
  const auto mean = cfg.list(section, "mean", n);
  const auto cov = cfg.list(section, "cov", static_cast<std::size_t>(n) * n);
  check(eb_gaussian_create(n, mean.data(), cov.data(), &g),
        cfg.where(section, "cov"));
  return Gaussian(g);
}

int horizon_of(const Config& cfg) {
  const long long t = cfg.integer("task", "horizon");
  if (t < 1 || t > 10000) {
    throw ConfigError(cfg.where("task", "horizon") + ": horizon must lie in [1, 10000]");
  }
  return static_cast<int>(t);
}

void emit_moments(CsvWriter& csv, const std::string& prefix, int n,
                  const std::vector<double>& mean,
                  const std::vector<double>& mean_se,
                  const std::vector<double>& cov,
                  const std::vector<double>& cov_se, const double supply[2],
                  bool bridge_layout) {
  auto put = [&](const std::string& stat, int i, int j, double v, double se) {
    if (bridge_layout) {
      csv.row({prefix + stat, std::to_string(i * (j < 0 ? 1 : n) + std::max(j, 0)),
               fmt(v)});
      if (!std::isnan(se)) {
        csv.row({prefix + stat + "_se",
                 std::to_string(i * (j < 0 ? 1 : n) + std::max(j, 0)), fmt(se)});
      }
    } else {
      csv.row({stat, std::to_string(i), std::to_string(std::max(j, 0)), fmt(v),
               fmt(se)});
    }
  };
  for (int i = 0; i < n; ++i) put("mean", i, -1, mean[i], mean_se[i]);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) put("cov", i, j, cov[i * n + j], cov_se[i * n + j]);
  }
  put("supply", 0, -1, supply[0], supply[1]);
}

int cmd_bridge(const Options& opt) {
  const Config cfg = require_config(opt);
  System sys = load_system(cfg);
  Gaussian init = load_gaussian(cfg, "initial", sys.get());
  Gaussian term = load_gaussian(cfg, "terminal", sys.get());
  const int t = horizon_of(cfg);

  eb_bridge* raw = nullptr;
  check(eb_bridge_solve(sys.get(), t, init.get(), term.get(), &raw), "bridge");
  Bridge bridge(raw);
  eb_bridge_summary s;
  check(eb_bridge_get_summary(bridge.get(), &s), "bridge");
  const int n = s.state_dim, mt = s.noise_dim;
  std::vector<double> eig(n), w(mt), gain(static_cast<std::size_t>(mt) * n),
      cond(static_cast<std::size_t>(mt) * mt);
  check(eb_bridge_mho_eigenvalues(bridge.get(), eig.data()), "bridge");
  eb_strategy* sraw = nullptr;
  check(eb_bridge_strategy(bridge.get(), &sraw), "bridge");
  Strategy strategy(sraw);
  check(eb_strategy_params(strategy.get(), w.data(), gain.data(), cond.data()),
        "bridge");

  CsvWriter csv(opt.out);
  csv.row({"field", "index", "value"});
  csv.row({"J", "0", fmt(s.J)});
  csv.row({"mean_part", "0", fmt(s.mean_part)});
  csv.row({"cov_part", "0", fmt(s.cov_part)});
  for (int i = 0; i < n; ++i) csv.row({"mho_eigenvalue", std::to_string(i), fmt(eig[i])});
  for (int i = 0; i < mt; ++i) csv.row({"w_mean", std::to_string(i), fmt(w[i])});
  for (std::size_t i = 0; i < gain.size(); ++i) {
    csv.row({"gain", std::to_string(i), fmt(gain[i])});
  }
  for (std::size_t i = 0; i < cond.size(); ++i) {
    csv.row({"cond_cov", std::to_string(i), fmt(cond[i])});
  }

  if (opt.verify_mc > 0) {
    eb_sim_config sc{opt.verify_mc, seed_of(opt, &cfg), 0};
    std::vector<double> mean(n), mean_se(n), cov(n * n), cov_se(n * n);
    double supply[2];
    check(eb_simulate(sys.get(), strategy.get(), init.get(), &sc, mean.data(),
                      mean_se.data(), cov.data(), cov_se.data(), supply),
          "verify-mc");
    emit_moments(csv, "mc_", n, mean, mean_se, cov, cov_se, supply, true);
  }
  return 0;
}

int cmd_robustness(const Options& opt) {
  const Config cfg = require_config(opt);
  System sys = load_system(cfg);
  const int n = state_dim(sys.get());
  std::vector<double> weight;
  if (cfg.has("task", "weight")) {
    weight = cfg.list("task", "weight", static_cast<std::size_t>(n) * n);
  }
  const std::vector<double> gammas =
      !opt.gamma.empty() ? parse_list(opt.gamma, "--gamma")
                         : cfg.list("task", "gamma");

  struct Outcome {
    eb_status status = EB_OK;
    eb_robustness_result r{};
    std::string message;
  };
  std::vector<Outcome> results(gammas.size());
  parallel_for(gammas.size(), [&](std::size_t i) {
    Outcome& o = results[i];
    o.status = eb_robustness_index(sys.get(), weight.empty() ? nullptr : weight.data(),
                                   gammas[i], &o.r);
    if (o.status != EB_OK) o.message = eb_last_error();
  });

  CsvWriter csv(opt.out);
  csv.row({"gamma", "lambda", "Z", "sigma_residual", "constraint_residual",
           "converged"});
  int code = 0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const Outcome& o = results[i];
    if (o.status != EB_OK) {
      std::fprintf(stderr, "gamma = %s: %s\n", fmt(gammas[i]).c_str(),
                   o.message.c_str());
      code = std::max(code, exit_code_for(o.status));
      continue;
    }
    csv.row({fmt(gammas[i]), fmt(o.r.lambda), fmt(o.r.Z), fmt(o.r.sigma_residual),
             fmt(o.r.constraint_residual), o.r.converged ? "1" : "0"});
    if (!o.r.converged) code = std::max(code, kExitNonconvergence);
  }
  return code;
}

int cmd_fig1(const Options& opt) {
  const std::vector<double> grid = parse_grid(opt.grid);
  if (grid.front() < 1.0) {
    throw CliFailure{kExitUsage, "--grid must start at gamma >= 1"};
  }
  CsvWriter csv(opt.out);
  csv.row({"A", "gamma", "Z", "asymptote"});
  for (int k = 1; k <= 9; ++k) {
    const double a = k / 10.0;
    for (double g : grid) {
      double z = 0.0;
      check(eb_z_1d(a, g, &z, nullptr), "fig1");
      csv.row({fmt(a), fmt(g), fmt(z), fmt(eb_z_1d_asymptote(a, g))});
    }
  }
  return 0;
}

int cmd_oracle(const Options& opt) {
  std::optional<Config> cfg;
  if (!opt.config.empty()) cfg = Config::Load(opt.config);
  const std::uint64_t seed = seed_of(opt, cfg ? &*cfg : nullptr);
  const int horizon =
      cfg ? static_cast<int>(cfg->integer_or("task", "horizon", 3)) : 3;
  if (horizon < 1 || horizon > 6) {
    throw CliFailure{kExitUsage, "oracle horizon must lie in [1, 6]"};
  }

  struct Case {
    std::string label;
    Chain chain;
  };
  std::vector<Case> cases;
  if (cfg && cfg->has("task", "model")) {
    // Relative model paths are taken from the config file's directory.
    std::filesystem::path model = cfg->string_or("task", "model", "");
    if (model.is_relative()) {
      model = std::filesystem::path(opt.config).parent_path() / model;
    }
    const std::string path = model.string();
    eb_chain* c = nullptr;
    check(eb_chain_load(path.c_str(), &c), cfg->where("task", "model"));
    cases.push_back({path, Chain(c)});
  } else {
    const long long fuzz = cfg ? cfg->integer_or("task", "fuzz", 100) : 100;
    for (long long i = 0; i < fuzz; ++i) {
      const int size = 2 + static_cast<int>(i % 2);
      eb_chain* c = nullptr;
      check(eb_chain_random(size, size, seed * 1000003ULL + i, &c), "oracle");
      cases.push_back({"fuzz" + std::to_string(i), Chain(c)});
    }
  }

  CsvWriter csv(opt.out);
  csv.row({"model", "strategy", "check", "value", "passed"});
  std::size_t total = 0, failed = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (int markov = 0; markov <= 1; ++markov) {
      eb_identity_report* raw = nullptr;
      check(eb_chain_identity_suite(cases[i].chain.get(), horizon, seed + 7919 * i,
                                    markov, &raw),
            "oracle " + cases[i].label);
      Report rep(raw);
      for (std::size_t k = 0; k < eb_identity_report_size(rep.get()); ++k) {
        const char* name = nullptr;
        double value = 0.0;
        int passed = 0;
        check(eb_identity_report_get(rep.get(), k, &name, &value, &passed), "oracle");
        csv.row({cases[i].label, markov ? "markov" : "history", name, fmt(value),
                 passed ? "1" : "0"});
        ++total;
        if (!passed) ++failed;
      }
    }
  }
  std::fprintf(stderr, "oracle: %zu checks, %zu failed\n", total, failed);
  return failed ? kExitOracleBreach : 0;
}

int cmd_simulate(const Options& opt) {
  const Config cfg = require_config(opt);
  System sys = load_system(cfg);
  Gaussian init = load_gaussian(cfg, "initial", sys.get());
  const int t = horizon_of(cfg);
  const int n = state_dim(sys.get());
  const std::string kind = cfg.string_or("task", "strategy", "optimal");
  const long long samples = cfg.integer_or("task", "samples", 100000);

  Strategy strategy;
  eb_strategy* sraw = nullptr;
  if (kind == "nominal") {
    std::vector<double> anchor(n, 0.0);
    check(eb_strategy_nominal(sys.get(), t, anchor.data(), &sraw), "simulate");
  } else if (kind == "optimal" || kind == "feasible") {
    Gaussian term = load_gaussian(cfg, "terminal", sys.get());
    if (kind == "optimal") {
      eb_bridge* b = nullptr;
      check(eb_bridge_solve(sys.get(), t, init.get(), term.get(), &b), "simulate");
      Bridge bridge(b);
      check(eb_bridge_strategy(bridge.get(), &sraw), "simulate");
    } else {
      check(eb_strategy_feasible(sys.get(), t, init.get(), term.get(),
                                 cfg.number_or("task", "epsilon", 0.0), &sraw),
            "simulate");
    }
  } else {
    throw ConfigError(cfg.where("task", "strategy") +
                      ": strategy must be \"optimal\", \"feasible\" or \"nominal\"");
  }
  strategy.reset(sraw);

  eb_sim_config sc{samples, seed_of(opt, &cfg), 0};
  std::vector<double> mean(n), mean_se(n), cov(n * n), cov_se(n * n);
  double supply[2];
  check(eb_simulate(sys.get(), strategy.get(), init.get(), &sc, mean.data(),
                    mean_se.data(), cov.data(), cov_se.data(), supply),
        "simulate");
  CsvWriter csv(opt.out);
  csv.row({"statistic", "row", "col", "value", "std_error"});
  emit_moments(csv, "", n, mean, mean_se, cov, cov_se, supply, false);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum relative-entropy supply for steering stochastic systems"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config, "Problem file");
  app.add_option("--out", opt.out, "Output CSV path, '-' for stdout");
  app.add_option("--seed", opt.seed, "Random seed");
  app.add_option("--verify-mc", opt.verify_mc,
                 "Monte Carlo samples for bridge verification")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--gamma", opt.gamma, "Comma-separated gamma values");
  app.add_option("--grid", opt.grid, "Gamma grid start:stop:step");

  auto* bridge = app.add_subcommand("bridge", "Minimum supply and optimal strategy");
  auto* robust = app.add_subcommand("robustness", "Robustness index per gamma");
  auto* fig1 = app.add_subcommand("fig1", "Scalar robustness curves");
  auto* oracle = app.add_subcommand("oracle", "Finite-state identity suite");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo moments");
  for (auto* sub : {bridge, robust, fig1, oracle, simulate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*bridge) return cmd_bridge(opt);
    if (*robust) return cmd_robustness(opt);
    if (*fig1) return cmd_fig1(opt);
    if (*oracle) return cmd_oracle(opt);
    if (*simulate) return cmd_simulate(opt);
  } catch (const CliFailure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
