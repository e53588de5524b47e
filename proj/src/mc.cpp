#include "entropy_bridge/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace entropy_bridge {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  void merge(const CompensatedSum& o) {
    add(o.sum);
    add(o.comp);
  }
  double value() const { return sum + comp; }
};

/// First and second moments of vectors about a fixed shift.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Vector shift)
      : shift_(std::move(shift)),
        first_(shift_.size()),
        second_(shift_.size() * shift_.size()) {}

  void add(const Vector& x) {
    const auto n = shift_.size();
    const Vector d = x - shift_;
    for (Eigen::Index i = 0; i < n; ++i) {
      first_[i].add(d[i]);
      for (Eigen::Index j = 0; j <= i; ++j) second_[i * n + j].add(d[i] * d[j]);
    }
    ++count_;
  }

  void merge(const MomentAccumulator& o) {
    for (std::size_t i = 0; i < first_.size(); ++i) first_[i].merge(o.first_[i]);
    for (std::size_t i = 0; i < second_.size(); ++i) {
      second_[i].merge(o.second_[i]);
    }
    count_ += o.count_;
  }

  long long count() const { return count_; }

  Vector mean() const {
    Vector m(shift_.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m[i] = shift_[i] + first_[i].value() / count_;
    }
    return m;
  }

  Matrix cov() const {
    const auto n = shift_.size();
    Matrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double s = second_[i * n + j].value() -
                         first_[i].value() * first_[j].value() / count_;
        c(i, j) = c(j, i) = s / (count_ - 1);
      }
    }
    return c;
  }

 private:
  Vector shift_;
  std::vector<CompensatedSum> first_;
  std::vector<CompensatedSum> second_;
  long long count_ = 0;
};

struct ShardResult {
  MomentAccumulator terminal;
  MomentAccumulator initial;
  MomentAccumulator supply;
};

Matrix cholesky_factor(const SymMatrix& s, const char* what) {
  Eigen::LLT<Matrix> llt(s.matrix());
  if (llt.info() != Eigen::Success) {
    throw NotPdError(std::string(what) + " has no Cholesky factor",
                     s.min_eigenvalue());
  }
  return llt.matrixL();
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t shard) {
  return mix64(seed ^ mix64(shard + 0xD1B54A32D192ED03ULL));
}

std::uint64_t NormalStream::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double NormalStream::next_uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

std::vector<double> normal_stream(std::uint64_t seed, std::size_t count) {
  NormalStream s(seed);
  std::vector<double> out(count);
  for (double& x : out) x = s.next_normal();
  return out;
}

int resolve_threads(int requested) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("ENTROPY_BRIDGE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

MomentReport simulate(const LinearSystem& sys, const NoiseStrategy& strategy,
                      const GaussianDist& initial, const SimConfig& config,
                      const std::optional<InitialMixture>& mixture) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int t = strategy.horizon();
  if (strategy.state_dim() != n || strategy.noise_dim() != m * t ||
      initial.dim() != n) {
    throw DimensionError("strategy, initial law and system shapes disagree");
  }
  if (config.samples < 2) throw ParameterError("need at least 2 samples");
  if (config.shards < 1) throw ParameterError("need at least 1 shard");

  const Matrix noise_factor =
      cholesky_factor(strategy.cond_cov(), "conditional noise covariance");
  const double half_logdet =
      0.5 * logdet_pd(strategy.cond_cov(), "conditional noise covariance");
  Matrix init_factor;
  Vector shift_dir = Vector::Zero(n);
  if (mixture) {
    if (mixture->direction.size() != n) {
      throw DimensionError("mixture direction has the wrong length");
    }
    shift_dir = mixture->offset * mixture->direction;
    const SymMatrix inner = SymMatrix::FromSymmetricProduct(
        initial.cov().matrix() - shift_dir * shift_dir.transpose());
    init_factor = cholesky_factor(inner, "mixture component covariance");
  } else {
    init_factor = cholesky_factor(initial.cov(), "initial covariance");
  }
  const Vector terminal_shift = push_forward(sys, strategy, initial).mean();

  const int shards = config.shards;
  std::vector<std::optional<ShardResult>> results(shards);
  auto run_shard = [&](int shard) {
    ShardResult r{MomentAccumulator(terminal_shift),
                  MomentAccumulator(initial.mean()),
                  MomentAccumulator(Vector::Zero(1))};
    const long long base = config.samples / shards;
    const long long count = base + (shard < config.samples % shards ? 1 : 0);
    NormalStream rng(substream_seed(config.seed, static_cast<std::uint64_t>(shard)));
    Vector z0(n), z(m * t), x0(n), x(n), supply_sample(1);
    for (long long i = 0; i < count; ++i) {
      for (int j = 0; j < n; ++j) z0[j] = rng.next_normal();
      x0 = initial.mean() + init_factor * z0;
      if (mixture) {
        x0 += (rng.next_uniform() < 0.5 ? 1.0 : -1.0) * shift_dir;
      }
      for (int j = 0; j < m * t; ++j) z[j] = rng.next_normal();
      const Vector w = strategy.w_mean() +
                       strategy.gain() * (x0 - strategy.anchor_mean()) +
                       noise_factor * z;
      x = x0;
      for (int k = 0; k < t; ++k) {
        x = sys.A() * x + sys.B() * w.segment(k * m, m);
      }
      supply_sample[0] = 0.5 * (w.squaredNorm() - z.squaredNorm()) - half_logdet;
      r.terminal.add(x);
      r.initial.add(x0);
      r.supply.add(supply_sample);
    }
    results[shard].emplace(std::move(r));
  };

  const int threads = std::min(resolve_threads(config.threads), shards);
  if (threads <= 1) {
    for (int s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (int s = next++; s < shards; s = next++) run_shard(s);
      });
    }
    for (auto& th : pool) th.join();
  }

  ShardResult total = std::move(*results[0]);
  for (int s = 1; s < shards; ++s) {
    total.terminal.merge(results[s]->terminal);
    total.initial.merge(results[s]->initial);
    total.supply.merge(results[s]->supply);
  }

  MomentReport rep;
  const long long N = total.terminal.count();
  rep.samples = N;
  rep.mean = total.terminal.mean();
  rep.cov = total.terminal.cov();
  rep.mean_se = (rep.cov.diagonal() / static_cast<double>(N)).cwiseSqrt();
  rep.cov_se.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      rep.cov_se(i, j) = std::sqrt(
          (rep.cov(i, i) * rep.cov(j, j) + rep.cov(i, j) * rep.cov(i, j)) /
          static_cast<double>(N - 1));
    }
  }
  rep.initial_mean = total.initial.mean();
  rep.initial_cov = total.initial.cov();
  rep.supply = total.supply.mean()[0];
  rep.supply_se =
      std::sqrt(total.supply.cov()(0, 0) / static_cast<double>(N));
  return rep;
}

}  // namespace entropy_bridge
