#include "entropy_bridge/chain_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>

namespace entropy_bridge {

namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void check_atoms(std::size_t nx, std::size_t nw, int t) {
  double atoms = static_cast<double>(nx) * std::pow(static_cast<double>(nw), t);
  if (atoms > static_cast<double>(kMaxChainAtoms)) {
    std::ostringstream os;
    os << "enumeration of " << atoms << " atoms exceeds the limit of "
       << kMaxChainAtoms;
    throw ParameterError(os.str());
  }
}

void check_probability_slice(const double* p, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      throw ParameterError("strategy masses must be finite and nonnegative");
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "strategy conditional slice sums to " << total;
    throw ParameterError(os.str());
  }
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n,
                                   double floor) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& x : p) total += (x = u(rng));
  for (double& x : p) x /= total;
  return p;
}

double max_abs_diff(const FiniteDist& a, const FiniteDist& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

/// Masses of the (x0, prefix) histories at step k, indexed x0 * nw^k + prefix.
std::vector<double> history_masses(const PathLaw& law, std::size_t nx,
                                   std::size_t nw, int k) {
  const int t = law.horizon();
  const std::size_t tail = ipow(nw, t - k);
  const std::size_t heads = ipow(nw, k);
  std::vector<double> out(nx * heads, 0.0);
  for (std::size_t x0 = 0; x0 < nx; ++x0) {
    for (std::size_t word = 0; word < law.words(); ++word) {
      out[x0 * heads + word / tail] += law(x0, word);
    }
  }
  return out;
}

/// Kullback-Leibler I-projection of phi x R^t onto the joints with X_0 ~ phi
/// and X_k ~ targets[k] for every listed k.
struct ProjectionProblem {
  const FiniteChainModel* model;
  const FiniteDist* phi;
  int t;
  std::vector<int> steps;
  std::vector<const FiniteDist*> targets;
};

BridgeOracleResult i_projection(const ProjectionProblem& p) {
  const FiniteChainModel& m = *p.model;
  const std::size_t nx = m.nx(), nw = m.nw();
  check_atoms(nx, nw, p.t);
  const std::size_t words = ipow(nw, p.t);
  std::vector<double> ref(nx * words);
  for (std::size_t x0 = 0; x0 < nx; ++x0) {
    for (std::size_t w = 0; w < words; ++w) {
      ref[x0 * words + w] = (*p.phi)[x0] * word_mass(m.noise(), w, p.t);
    }
  }
  // State index of each atom at each constrained step.
  std::vector<std::vector<int>> state(p.steps.size(),
                                      std::vector<int>(nx * words));
  for (std::size_t c = 0; c < p.steps.size(); ++c) {
    for (std::size_t x0 = 0; x0 < nx; ++x0) {
      for (std::size_t w = 0; w < words; ++w) {
        state[c][x0 * words + w] =
            static_cast<int>(m.state_after(x0, w, p.t, p.steps[c]));
      }
    }
  }

  BridgeOracleResult out;
  std::vector<double> q = ref;
  std::vector<double> marg(nx);
  auto defect = [&]() {
    double worst = 0.0;
    for (std::size_t c = 0; c < p.steps.size(); ++c) {
      std::fill(marg.begin(), marg.end(), 0.0);
      for (std::size_t a = 0; a < q.size(); ++a) marg[state[c][a]] += q[a];
      double d = 0.0;
      for (std::size_t y = 0; y < nx; ++y) {
        d += std::abs(marg[y] - (*p.targets[c])[y]);
      }
      worst = std::max(worst, d);
    }
    return worst;
  };

  constexpr int kMaxIterations = 200000;
  constexpr double kDefectTol = 1e-11;
  out.defect = defect();
  while (out.defect >= kDefectTol) {
    if (++out.iterations > kMaxIterations) {
      std::ostringstream os;
      os << "I-projection stalled with marginal defect " << out.defect;
      throw NonconvergenceError(os.str(), Matrix());
    }
    for (std::size_t c = 0; c < p.steps.size(); ++c) {
      std::fill(marg.begin(), marg.end(), 0.0);
      for (std::size_t a = 0; a < q.size(); ++a) marg[state[c][a]] += q[a];
      for (std::size_t a = 0; a < q.size(); ++a) {
        const double mm = marg[state[c][a]];
        q[a] = mm > 0.0 ? q[a] * (*p.targets[c])[state[c][a]] / mm : 0.0;
      }
    }
    for (std::size_t x0 = 0; x0 < nx; ++x0) {
      double row = 0.0;
      for (std::size_t w = 0; w < words; ++w) row += q[x0 * words + w];
      const double scale = row > 0.0 ? (*p.phi)[x0] / row : 0.0;
      for (std::size_t w = 0; w < words; ++w) q[x0 * words + w] *= scale;
    }
    out.defect = defect();
  }

  double j = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (q[a] > 0.0) j += q[a] * std::log(q[a] / ref[a]);
  }
  out.J = std::max(j, 0.0);
  out.feasible = true;
  out.joint = std::move(q);
  return out;
}

/// Hall condition for moving phi to psi along the t-step reachable sets.
/// Returns the most violated terminal subset, or an empty vector.
std::vector<int> hall_violation(const FiniteChainModel& m,
                                const FiniteDist& phi, const FiniteDist& psi,
                                int t) {
  const std::size_t nx = m.nx();
  if (nx > 24) throw ParameterError("feasibility check limited to nx <= 24");
  const std::size_t words = ipow(m.nw(), t);
  std::vector<std::uint32_t> reach(nx, 0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t w = 0; w < words; ++w) {
      if (word_mass(m.noise(), w, t) > 0.0) {
        reach[x] |= 1u << m.state_after(x, w, t, t);
      }
    }
  }
  double worst = 1e-12;
  std::uint32_t worst_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << nx); ++mask) {
    double demand = 0.0, supply_mass = 0.0;
    for (std::size_t y = 0; y < nx; ++y) {
      if (mask & (1u << y)) demand += psi[y];
    }
    for (std::size_t x = 0; x < nx; ++x) {
      if (reach[x] & mask) supply_mass += phi[x];
    }
    if (demand - supply_mass > worst) {
      worst = demand - supply_mass;
      worst_mask = mask;
    }
  }
  std::vector<int> cert;
  for (std::size_t y = 0; y < nx; ++y) {
    if (worst_mask & (1u << y)) cert.push_back(static_cast<int>(y));
  }
  return cert;
}

void check_law(const FiniteChainModel& m, const FiniteDist& d,
               const char* what) {
  if (d.size() != m.nx()) {
    throw DimensionError(std::string(what) + " has " +
                         std::to_string(d.size()) + " masses, expected " +
                         std::to_string(m.nx()));
  }
}

}  // namespace

FiniteChainModel::FiniteChainModel(std::size_t nx, std::size_t nw,
                                   std::vector<int> f_table, FiniteDist noise,
                                   FiniteDist initial)
    : nx_(nx),
      nw_(nw),
      f_(std::move(f_table)),
      noise_(std::move(noise)),
      initial_(std::move(initial)) {
  if (nx_ == 0 || nw_ == 0) throw DimensionError("empty alphabet");
  if (f_.size() != nx_ * nw_) {
    throw DimensionError("transition table has " + std::to_string(f_.size()) +
                         " entries, expected " + std::to_string(nx_ * nw_));
  }
  for (int y : f_) {
    if (y < 0 || static_cast<std::size_t>(y) >= nx_) {
      throw ParameterError("transition table entry " + std::to_string(y) +
                           " outside [0, " + std::to_string(nx_) + ")");
    }
  }
  if (noise_.size() != nw_ || initial_.size() != nx_) {
    throw DimensionError("noise or initial law has the wrong alphabet size");
  }
}

std::size_t FiniteChainModel::state_after(std::size_t x0, std::size_t word,
                                          int t, int k) const {
  std::size_t x = x0;
  std::size_t scale = ipow(nw_, t - 1);
  for (int i = 0; i < k; ++i) {
    x = static_cast<std::size_t>(f(x, (word / scale) % nw_));
    scale /= nw_;
  }
  return x;
}

FiniteChainModel parse_chain_model(std::istream& in, const std::string& source) {
  struct Token {
    std::string text;
    int line;
  };
  std::vector<Token> tokens;
  std::string line;
  for (int ln = 1; std::getline(in, line); ++ln) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    for (std::string tok; ls >> tok;) tokens.push_back({tok, ln});
  }
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> void {
    const int ln = pos < tokens.size() ? tokens[pos].line
                                       : (tokens.empty() ? 0 : tokens.back().line);
    throw ParseError(source + ":" + std::to_string(ln) + ": " + msg);
  };
  auto next_number = [&](const char* what) {
    if (pos >= tokens.size()) fail(std::string("unexpected end of input, expected ") + what);
    try {
      std::size_t used = 0;
      const double v = std::stod(tokens[pos].text, &used);
      if (used != tokens[pos].text.size()) throw std::invalid_argument("");
      ++pos;
      return v;
    } catch (const std::exception&) {
      fail(std::string("expected ") + what + ", got '" + tokens[pos].text + "'");
    }
    return 0.0;
  };
  auto next_index = [&](const char* what, std::size_t bound) {
    const std::size_t at = pos;
    const double v = next_number(what);
    if (v != std::floor(v) || v < 0 || v >= static_cast<double>(bound)) {
      pos = at;
      fail(std::string(what) + " must be an integer in [0, " +
           std::to_string(bound) + ")");
    }
    return static_cast<std::size_t>(v);
  };

  const std::size_t limit = 1u << 20;
  const std::size_t nx = next_index("nx", limit);
  const std::size_t nw = next_index("nw", limit);
  if (nx == 0 || nw == 0) fail("alphabet sizes must be positive");
  std::vector<int> f(nx * nw, -1);
  for (std::size_t i = 0; i < nx * nw; ++i) {
    const std::size_t x = next_index("state index", nx);
    const std::size_t w = next_index("noise index", nw);
    const std::size_t y = next_index("successor state", nx);
    if (f[x * nw + w] != -1) {
      --pos;
      fail("duplicate entry for (" + std::to_string(x) + ", " +
           std::to_string(w) + ")");
    }
    f[x * nw + w] = static_cast<int>(y);
  }
  std::vector<double> r(nw), p0(nx);
  for (double& v : r) v = next_number("noise mass");
  for (double& v : p0) v = next_number("initial mass");
  if (pos != tokens.size()) fail("trailing tokens after the initial law");
  try {
    return FiniteChainModel(nx, nw, std::move(f), FiniteDist(std::move(r)),
                            FiniteDist(std::move(p0)));
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

FiniteChainModel load_chain_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open model file " + path);
  return parse_chain_model(in, path);
}

std::string format_chain_model(const FiniteChainModel& model) {
  std::ostringstream os;
  os.precision(17);
  os << model.nx() << ' ' << model.nw() << '\n';
  for (std::size_t x = 0; x < model.nx(); ++x) {
    for (std::size_t w = 0; w < model.nw(); ++w) {
      os << x << ' ' << w << ' ' << model.f(x, w) << '\n';
    }
  }
  for (double p : model.noise().masses()) os << p << ' ';
  os << '\n';
  for (double p : model.initial().masses()) os << p << ' ';
  os << '\n';
  return os.str();
}

StrategyTable::StrategyTable(std::size_t nx, std::size_t nw,
                             std::vector<std::vector<double>> tables)
    : nx_(nx), nw_(nw), tables_(std::move(tables)) {
  if (tables_.empty()) throw ParameterError("strategy horizon must be >= 1");
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    const std::size_t histories = nx_ * ipow(nw_, static_cast<int>(k));
    if (tables_[k].size() != histories * nw_) {
      throw DimensionError("strategy table for step " + std::to_string(k) +
                           " has the wrong size");
    }
    for (std::size_t h = 0; h < histories; ++h) {
      check_probability_slice(tables_[k].data() + h * nw_, nw_);
    }
  }
}

StrategyTable StrategyTable::Nominal(const FiniteChainModel& model,
                                     int horizon) {
  std::vector<std::vector<double>> tables(horizon);
  for (int k = 0; k < horizon; ++k) {
    const std::size_t histories = model.nx() * ipow(model.nw(), k);
    tables[k].reserve(histories * model.nw());
    for (std::size_t h = 0; h < histories; ++h) {
      for (double r : model.noise().masses()) tables[k].push_back(r);
    }
  }
  return StrategyTable(model.nx(), model.nw(), std::move(tables));
}

StrategyTable StrategyTable::FromMarkovKernels(
    const FiniteChainModel& model,
    const std::vector<std::vector<double>>& kernels) {
  const std::size_t nx = model.nx(), nw = model.nw();
  const int t = static_cast<int>(kernels.size());
  std::vector<std::vector<double>> tables(t);
  for (int k = 0; k < t; ++k) {
    if (kernels[k].size() != nx * nw) {
      throw DimensionError("Markov kernel must have nx * nw entries");
    }
    const std::size_t heads = ipow(nw, k);
    tables[k].resize(nx * heads * nw);
    for (std::size_t x0 = 0; x0 < nx; ++x0) {
      for (std::size_t prefix = 0; prefix < heads; ++prefix) {
        const std::size_t xk = model.state_after(x0, prefix, k, k);
        for (std::size_t w = 0; w < nw; ++w) {
          tables[k][(x0 * heads + prefix) * nw + w] = kernels[k][xk * nw + w];
        }
      }
    }
  }
  return StrategyTable(nx, nw, std::move(tables));
}

PathLaw::PathLaw(const FiniteChainModel& model, const StrategyTable& strategy)
    : PathLaw(model, strategy, model.initial()) {}

PathLaw::PathLaw(const FiniteChainModel& model, const StrategyTable& strategy,
                 const FiniteDist& initial)
    : model_(&model), t_(strategy.horizon()) {
  const std::size_t nx = model.nx(), nw = model.nw();
  if (strategy.nx() != nx || strategy.nw() != nw || initial.size() != nx) {
    throw DimensionError("strategy does not match the model alphabets");
  }
  check_atoms(nx, nw, t_);
  words_ = ipow(nw, t_);
  masses_.assign(nx * words_, 0.0);
  double total = 0.0;
  for (std::size_t x0 = 0; x0 < nx; ++x0) {
    for (std::size_t word = 0; word < words_; ++word) {
      double m = initial[x0];
      std::size_t scale = words_ / nw;
      std::size_t prefix = 0;
      for (int k = 0; k < t_ && m > 0.0; ++k) {
        const std::size_t w = (word / scale) % nw;
        m *= strategy(k, x0 * ipow(nw, k) + prefix, w);
        prefix = prefix * nw + w;
        scale /= nw;
      }
      masses_[x0 * words_ + word] = m;
      total += m;
    }
  }
  for (double& m : masses_) m /= total;
}

FiniteDist PathLaw::state_law(int k) const {
  const FiniteChainModel& m = *model_;
  std::vector<double> p(m.nx(), 0.0);
  for (std::size_t x0 = 0; x0 < m.nx(); ++x0) {
    for (std::size_t w = 0; w < words_; ++w) {
      p[m.state_after(x0, w, t_, k)] += (*this)(x0, w);
    }
  }
  return FiniteDist::Normalized(std::move(p));
}

FiniteJoint PathLaw::joint(int s, int t) const {
  if (s < 0 || s > t || t > t_) throw ParameterError("joint: need 0 <= s <= t <= horizon");
  const FiniteChainModel& m = *model_;
  const std::size_t nw = m.nw();
  const std::size_t block = ipow(nw, t - s);
  const std::size_t tail = ipow(nw, t_ - t);
  std::vector<double> q(m.nx() * block, 0.0);
  for (std::size_t x0 = 0; x0 < m.nx(); ++x0) {
    for (std::size_t w = 0; w < words_; ++w) {
      const std::size_t xs = m.state_after(x0, w, t_, s);
      q[xs * block + (w / tail) % block] += (*this)(x0, w);
    }
  }
  double total = 0.0;
  for (double v : q) total += v;
  for (double& v : q) v /= total;
  return FiniteJoint(m.nx(), nw, t - s, std::move(q));
}

std::vector<double> nominal_kernel(const FiniteChainModel& model) {
  const std::size_t nx = model.nx();
  std::vector<double> g(nx * nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t w = 0; w < model.nw(); ++w) {
      g[x * nx + model.f(x, w)] += model.noise()[w];
    }
  }
  return g;
}

InvariantResult invariant_dist(const FiniteChainModel& model) {
  const std::size_t nx = model.nx();
  const std::vector<double> g = nominal_kernel(model);
  InvariantResult out;

  // Closed communicating classes from the transitive closure of supp G.
  std::vector<std::vector<char>> reach(nx, std::vector<char>(nx, 0));
  for (std::size_t x = 0; x < nx; ++x) {
    reach[x][x] = 1;
    for (std::size_t y = 0; y < nx; ++y) {
      if (g[x * nx + y] > 0.0) reach[x][y] = 1;
    }
  }
  for (std::size_t k = 0; k < nx; ++k) {
    for (std::size_t i = 0; i < nx; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < nx; ++j) {
        if (reach[k][j]) reach[i][j] = 1;
      }
    }
  }
  std::vector<int> class_of(nx, -1);
  int closed = 0;
  for (std::size_t x = 0; x < nx; ++x) {
    bool is_closed = true;
    for (std::size_t y = 0; y < nx && is_closed; ++y) {
      if (reach[x][y] && !reach[y][x]) is_closed = false;
    }
    if (!is_closed || class_of[x] != -1) continue;
    for (std::size_t y = 0; y < nx; ++y) {
      if (reach[x][y]) class_of[y] = closed;
    }
    ++closed;
  }
  out.closed_classes = closed;
  if (closed > 1) {
    out.warnings.push_back(
        "invariant law is not unique (" + std::to_string(closed) +
        " closed classes); returning the limit from the initial law");
  }

  std::vector<double> p = model.initial().masses();
  std::vector<double> next(nx);
  auto step = [&](double lazy) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t y = 0; y < nx; ++y) next[y] += p[x] * g[x * nx + y];
    }
    double update = 0.0;
    for (std::size_t y = 0; y < nx; ++y) {
      next[y] = lazy * p[y] + (1.0 - lazy) * next[y];
      update += std::abs(next[y] - p[y]);
    }
    p.swap(next);
    return update;
  };
  constexpr double kUpdateTol = 1e-13;
  bool converged = false;
  for (int it = 0; it < 10000 && !converged; ++it, ++out.iterations) {
    converged = step(0.0) < kUpdateTol;
  }
  if (!converged) {
    out.warnings.push_back(
        "power iteration did not settle (periodic chain); using the lazy "
        "kernel (I + G)/2");
    for (int it = 0; it < 2000000 && !converged; ++it, ++out.iterations) {
      converged = step(0.5) < kUpdateTol;
    }
    if (!converged) {
      throw NonconvergenceError("invariant law iteration did not converge",
                                Matrix());
    }
  }
  // Transient states carry no invariant mass; drop the geometric tail.
  for (std::size_t x = 0; x < nx; ++x) {
    if (class_of[x] == -1) p[x] = 0.0;
  }
  out.dist = FiniteDist::Normalized(p);
  std::fill(next.begin(), next.end(), 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < nx; ++y) next[y] += out.dist[x] * g[x * nx + y];
  }
  for (std::size_t y = 0; y < nx; ++y) {
    out.residual += std::abs(next[y] - out.dist[y]);
  }
  return out;
}

Propagation propagate(const FiniteChainModel& model,
                      const StrategyTable& strategy, int s, int t) {
  const PathLaw law(model, strategy);
  if (s < 0 || s > t || t > law.horizon()) {
    throw ParameterError("propagate: need 0 <= s <= t <= horizon");
  }
  std::vector<FiniteDist> laws;
  for (int k = s; k <= t; ++k) laws.push_back(law.state_law(k));
  return Propagation{std::move(laws), law.joint(s, t)};
}

double supply(const FiniteChainModel& model, const StrategyTable& strategy,
              int s, int t) {
  const PathLaw law(model, strategy);
  return finite_cond_relent(law.joint(s, t), model.noise(), t - s);
}

BalanceTerms balance_terms(const FiniteChainModel& model,
                           const StrategyTable& strategy,
                           const FiniteDist& invariant) {
  check_law(model, invariant, "invariant law");
  const PathLaw law(model, strategy);
  const int t = law.horizon();
  const FiniteDist p0 = law.state_law(0);
  for (std::size_t x = 0; x < model.nx(); ++x) {
    if (p0[x] > 0.0 && !(invariant[x] > 0.0)) {
      throw ParameterError(
          "balance_terms: initial law charges state " + std::to_string(x) +
          " outside the invariant support, so the storage is infinite");
    }
  }
  BalanceTerms out;
  out.supply = finite_cond_relent(law.joint(0, t), model.noise(), t);
  const FiniteDist pt = law.state_law(t);
  out.storage_gain = finite_relent(pt, invariant) -
                     finite_relent(p0, invariant);
  double diss = 0.0;
  for (std::size_t x0 = 0; x0 < model.nx(); ++x0) {
    for (std::size_t w = 0; w < law.words(); ++w) {
      const double q = law(x0, w);
      if (q == 0.0) continue;
      const std::size_t xt = model.state_after(x0, w, t, t);
      const double nominal =
          invariant[x0] * word_mass(model.noise(), w, t) / invariant[xt];
      if (!(nominal > 0.0)) return {out.supply, out.storage_gain, kInfinity};
      diss += q * std::log((q / pt[xt]) / nominal);
    }
  }
  out.dissipation = diss;
  return out;
}

StrategyTable markovize(const StrategyTable& strategy,
                        const FiniteChainModel& model, int s) {
  const int t = strategy.horizon();
  if (s < 0 || s > t) throw ParameterError("markovize: split outside [0, t]");
  const PathLaw law(model, strategy);
  const std::size_t nx = model.nx(), nw = model.nw();
  std::vector<std::vector<double>> tables = strategy.tables();
  for (int k = s; k < t; ++k) {
    // Law of (X_s, W_s..W_k).
    const FiniteJoint q = law.joint(s, k + 1);
    const std::size_t heads = ipow(nw, k);
    const std::size_t block = ipow(nw, k - s);
    for (std::size_t x0 = 0; x0 < nx; ++x0) {
      for (std::size_t prefix = 0; prefix < heads; ++prefix) {
        const std::size_t xs = model.state_after(x0, prefix, k, s);
        const std::size_t b = prefix % block;
        double den = 0.0;
        for (std::size_t w = 0; w < nw; ++w) den += q(xs, b * nw + w);
        double* row = &tables[k][(x0 * heads + prefix) * nw];
        for (std::size_t w = 0; w < nw; ++w) {
          row[w] = den > 0.0 ? q(xs, b * nw + w) / den : model.noise()[w];
        }
        // Renormalize away rounding so the slice check stays exact.
        double total = 0.0;
        for (std::size_t w = 0; w < nw; ++w) total += row[w];
        for (std::size_t w = 0; w < nw; ++w) row[w] /= total;
      }
    }
  }
  return StrategyTable(nx, nw, std::move(tables));
}

bool markov_at(const FiniteChainModel& model, const StrategyTable& strategy,
               int s) {
  const int t = strategy.horizon();
  if (s < 0 || s > t) throw ParameterError("markov_at: split outside [0, t]");
  const PathLaw law(model, strategy);
  const std::size_t nx = model.nx(), nw = model.nw();
  const std::size_t block = ipow(nw, t - s);
  const std::size_t heads = ipow(nw, s);
  const FiniteJoint q = law.joint(s, t);
  std::vector<double> qx(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t b = 0; b < block; ++b) qx[x] += q(x, b);
  }
  constexpr double kTol = 1e-8;
  for (std::size_t x0 = 0; x0 < nx; ++x0) {
    for (std::size_t prefix = 0; prefix < heads; ++prefix) {
      double my = 0.0;
      for (std::size_t b = 0; b < block; ++b) my += law(x0, prefix * block + b);
      if (my <= 0.0) continue;
      const std::size_t xs = model.state_after(x0, prefix, s, s);
      for (std::size_t b = 0; b < block; ++b) {
        const double cy = law(x0, prefix * block + b) / my;
        const double cx = q(xs, b) / qx[xs];
        if (std::abs(cy - cx) > kTol) return false;
      }
    }
  }
  return true;
}

bool is_markov(const FiniteChainModel& model, const StrategyTable& strategy) {
  const PathLaw law(model, strategy);
  const std::size_t nx = model.nx(), nw = model.nw();
  for (int k = 0; k < strategy.horizon(); ++k) {
    const std::vector<double> hm = history_masses(law, nx, nw, k);
    const std::size_t heads = ipow(nw, k);
    std::vector<std::size_t> ref(nx, SIZE_MAX);
    for (std::size_t h = 0; h < hm.size(); ++h) {
      if (hm[h] <= 0.0) continue;
      const std::size_t xk = model.state_after(h / heads, h % heads, k, k);
      if (ref[xk] == SIZE_MAX) {
        ref[xk] = h;
        continue;
      }
      for (std::size_t w = 0; w < nw; ++w) {
        if (std::abs(strategy(k, h, w) - strategy(k, ref[xk], w)) > 1e-8) {
          return false;
        }
      }
    }
  }
  return true;
}

BridgeOracleResult one_step_min_supply(const FiniteChainModel& model,
                                       const FiniteDist& phi,
                                       const FiniteDist& psi) {
  return exact_min_supply(model, phi, psi, 1);
}

BridgeOracleResult exact_min_supply(const FiniteChainModel& model,
                                    const FiniteDist& phi,
                                    const FiniteDist& psi, int t) {
  check_law(model, phi, "initial law");
  check_law(model, psi, "terminal law");
  if (t < 1) throw ParameterError("horizon must be >= 1");
  BridgeOracleResult out;
  out.certificate = hall_violation(model, phi, psi, t);
  if (!out.certificate.empty()) return out;
  return i_projection(ProjectionProblem{&model, &phi, t, {t}, {&psi}});
}

BridgeOracleResult tracking_min_supply(const FiniteChainModel& model,
                                       const FiniteDist& phi, int t) {
  check_law(model, phi, "tracked law");
  if (t < 1) throw ParameterError("horizon must be >= 1");
  BridgeOracleResult out;
  // Feasible exactly when a single step phi -> phi is.
  out.certificate = hall_violation(model, phi, phi, 1);
  if (!out.certificate.empty()) return out;
  ProjectionProblem p{&model, &phi, t, {}, {}};
  for (int k = 1; k <= t; ++k) {
    p.steps.push_back(k);
    p.targets.push_back(&phi);
  }
  return i_projection(p);
}

BellmanResult bellman_two_step(const FiniteChainModel& model,
                               const FiniteDist& phi, const FiniteDist& psi,
                               int grid_points) {
  if (model.nx() != 2) throw ParameterError("bellman_two_step needs nx = 2");
  if (grid_points < 3) throw ParameterError("grid needs at least 3 points");
  auto cost = [&](double p) {
    const FiniteDist theta({p, 1.0 - p});
    return one_step_min_supply(model, phi, theta).J +
           one_step_min_supply(model, theta, psi).J;
  };
  const double h = 1.0 / (grid_points - 1);
  int best = 0;
  double best_value = kInfinity;
  for (int i = 0; i < grid_points; ++i) {
    const double v = cost(i * h);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double a = std::max(0.0, (best - 1) * h);
  double b = std::min(1.0, (best + 1) * h);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = cost(c), fd = cost(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = cost(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = cost(d);
    }
  }
  BellmanResult out{best_value, best * h};
  const double mid = 0.5 * (a + b);
  const double fm = cost(mid);
  if (fm < out.value) out = {fm, mid};
  return out;
}

namespace {

bool strongly_connected(std::size_t nx, std::size_t nw,
                        const std::vector<int>& f) {
  for (std::size_t start = 0; start < nx; ++start) {
    std::vector<bool> seen(nx, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < nw; ++w) {
        const auto y = static_cast<std::size_t>(f[x * nw + w]);
        if (!seen[y]) {
          seen[y] = true;
          ++count;
          stack.push_back(y);
        }
      }
    }
    if (count < nx) return false;
  }
  return true;
}

}  // namespace

FiniteChainModel random_chain_model(std::size_t nx, std::size_t nw,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(nx) - 1);
  std::vector<int> f(nx * nw);
  // Redraw until every state reaches every other.
  do {
    for (int& y : f) y = pick(rng);
  } while (!strongly_connected(nx, nw, f));
  FiniteDist r(random_simplex(rng, nw, 0.1));
  FiniteDist p0(random_simplex(rng, nx, 0.1));
  return FiniteChainModel(nx, nw, std::move(f), std::move(r), std::move(p0));
}

FiniteChainModel random_mixing_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(0.5);
  std::vector<int> f(4);
  for (int x = 0; x < 2; ++x) {
    const int b = bit(rng) ? 1 : 0;
    f[x * 2] = b;
    f[x * 2 + 1] = 1 - b;
  }
  std::uniform_real_distribution<double> u(0.2, 0.8);
  const double q = u(rng), p = u(rng);
  return FiniteChainModel(2, 2, std::move(f), FiniteDist({q, 1.0 - q}),
                          FiniteDist({p, 1.0 - p}));
}

StrategyTable random_strategy(const FiniteChainModel& model, int horizon,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t nx = model.nx(), nw = model.nw();
  std::vector<std::vector<double>> tables(horizon);
  for (int k = 0; k < horizon; ++k) {
    const std::size_t histories = nx * ipow(nw, k);
    for (std::size_t h = 0; h < histories; ++h) {
      const auto slice = random_simplex(rng, nw, 0.05);
      tables[k].insert(tables[k].end(), slice.begin(), slice.end());
    }
  }
  return StrategyTable(nx, nw, std::move(tables));
}

StrategyTable random_markov_strategy(const FiniteChainModel& model,
                                     int horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> kernels(horizon);
  for (int k = 0; k < horizon; ++k) {
    for (std::size_t x = 0; x < model.nx(); ++x) {
      const auto slice = random_simplex(rng, model.nw(), 0.05);
      kernels[k].insert(kernels[k].end(), slice.begin(), slice.end());
    }
  }
  return StrategyTable::FromMarkovKernels(model, kernels);
}

bool IdentityReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const IdentityCheck& c) { return c.passed; });
}

IdentityReport identity_suite(const FiniteChainModel& model,
                              const StrategyTable& strategy) {
  IdentityReport rep;
  auto add = [&](std::string name, double value, bool ok) {
    rep.checks.push_back({std::move(name), value, ok});
  };
  const int t = strategy.horizon();
  const InvariantResult inv = invariant_dist(model);
  add("invariant_residual", inv.residual, inv.residual < 1e-12);

  bool finite_storage = true;
  for (std::size_t x = 0; x < model.nx(); ++x) {
    if (model.initial()[x] > 0.0 && !(inv.dist[x] > 0.0)) finite_storage = false;
  }
  if (finite_storage) {
    const BalanceTerms bal = balance_terms(model, strategy, inv.dist);
    const double bal_res =
        std::abs(bal.supply - bal.storage_gain - bal.dissipation);
    add("balance_residual", bal_res, bal_res < 1e-10);
    add("dissipation_nonnegative", bal.dissipation,
        bal.dissipation >= -1e-12);
  } else {
    // Transient initial mass: the balance reads inf = inf and is not checked.
    add("balance_infinite_storage", kInfinity, true);
  }

  const PathLaw law(model, strategy);
  std::vector<FiniteDist> laws;
  for (int k = 0; k <= t; ++k) laws.push_back(law.state_law(k));
  const double e0t = supply(model, strategy, 0, t);

  for (int s = 1; s < t; ++s) {
    const std::string tag = "[" + std::to_string(s) + "]";
    const double gap =
        e0t - supply(model, strategy, 0, s) - supply(model, strategy, s, t);
    add("superadditivity" + tag, gap, gap >= -1e-12);
    const bool equal = std::abs(gap) <= 1e-10;
    add("equality_iff_markov" + tag, gap,
        equal == markov_at(model, strategy, s));
  }

  for (int s = 0; s <= t; ++s) {
    const std::string tag = "[" + std::to_string(s) + "]";
    const StrategyTable m = markovize(strategy, model, s);
    const PathLaw mlaw(model, m);
    double drift = 0.0;
    for (int k = 0; k <= t; ++k) {
      drift = std::max(drift, max_abs_diff(mlaw.state_law(k), laws[k]));
    }
    add("markovize_preserves_laws" + tag, drift, drift <= 1e-12);
    const double em = supply(model, m, 0, t);
    add("markovize_nonincreasing" + tag, em - e0t, em <= e0t + 1e-12);
    if (s > 0 && s < t) {
      const double split =
          supply(model, strategy, 0, s) + supply(model, strategy, s, t);
      add("markovize_additive" + tag, em - split,
          std::abs(em - split) <= 1e-10);
    }
    add("markov_after_markovize" + tag, 0.0, markov_at(model, m, s));
    const StrategyTable mm = markovize(m, model, s);
    double idem = 0.0;
    for (int k = 0; k < t; ++k) {
      for (std::size_t i = 0; i < m.tables()[k].size(); ++i) {
        idem = std::max(idem, std::abs(m.tables()[k][i] - mm.tables()[k][i]));
      }
    }
    add("markovize_idempotent" + tag, idem, idem <= 1e-12);
  }

  if (t >= 2) {
    StrategyTable chained = strategy;
    for (int s = 1; s < t; ++s) chained = markovize(chained, model, s);
    double steps = 0.0;
    for (int k = 0; k < t; ++k) steps += supply(model, chained, k, k + 1);
    const double whole = supply(model, chained, 0, t);
    add("chained_markovize_additive", whole - steps,
        std::abs(whole - steps) <= 1e-10);
  }
  if (t >= 3) {
    const PathLaw a(model, markovize(markovize(strategy, model, 1), model, 2));
    const PathLaw b(model, markovize(markovize(strategy, model, 2), model, 1));
    double diff = 0.0;
    for (std::size_t i = 0; i < a.masses().size(); ++i) {
      diff = std::max(diff, std::abs(a.masses()[i] - b.masses()[i]));
    }
    add("markovize_commute", diff, diff <= 1e-12);
  }

  if (finite_relent(laws[0], inv.dist) < kInfinity) {
    add("support_inherited", 0.0, finite_relent(laws[t], inv.dist) < kInfinity);
  }
  return rep;
}

}  // namespace entropy_bridge
