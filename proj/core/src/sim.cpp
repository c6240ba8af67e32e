#include "mshift/sim.hpp"

#include <algorithm>
#include <cmath>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/observables.hpp"
#include "mshift/parallel.hpp"
#include "mshift/rng.hpp"

namespace mshift {

namespace {

// Cumulative rows for inverse-CDF sampling.
struct Sampler {
  std::vector<double> init;
  std::vector<std::vector<std::vector<double>>> rows;  // [j][x] cumulative

  explicit Sampler(const ChainModel& m) {
    const auto& mu = m.spec().initial;
    double c = 0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) init.push_back(c += mu[i]);
    rows.resize(m.horizon());
    for (std::size_t j = 0; j < m.horizon(); ++j) {
      const auto& p = m.forward(j);
      rows[j].resize(static_cast<std::size_t>(p.rows()));
      for (Eigen::Index x = 0; x < p.rows(); ++x) {
        double s = 0;
        for (Eigen::Index y = 0; y < p.cols(); ++y) rows[j][static_cast<std::size_t>(x)].push_back(s += p(x, y));
      }
    }
  }

  static std::size_t pick(const std::vector<double>& cum, double u) {
    // Scale by the final sum so rounding in the cumulative never strands u.
    const double target = u * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    std::size_t k = static_cast<std::size_t>(it - cum.begin());
    if (k >= cum.size()) k = cum.size() - 1;
    // Skip zero-probability states that upper_bound can land on at the edges.
    while (k > 0 && cum[k] == cum[k - 1]) --k;
    return k;
  }

  template <class Out>
  void draw(CounterRng& rng, std::size_t last, Out&& out) const {
    std::size_t x = pick(init, rng.uniform());
    out(0, x);
    for (std::size_t j = 0; j < last; ++j) {
      x = pick(rows[j][x], rng.uniform());
      out(j + 1, x);
    }
  }
};

constexpr std::size_t kChunk = 4096;

}  // namespace

SampleBatch sample_paths(const ChainModel& model, std::size_t count, std::uint64_t seed,
                         std::size_t threads) {
  const Sampler s(model);
  SampleBatch b;
  b.seed = seed;
  b.count = count;
  b.length = model.horizon() + 1;
  b.states.resize(count * b.length);
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    for (std::size_t k = c * kChunk; k < std::min(count, (c + 1) * kChunk); ++k) {
      CounterRng rng(seed, k);
      auto* row = b.states.data() + k * b.length;
      s.draw(rng, model.horizon(), [&](std::size_t j, std::size_t x) {
        row[j] = static_cast<std::uint32_t>(x);
      });
    }
  });
  return b;
}

SumBatch sample_sums(const ChainModel& model, const WindowObservable& f, std::size_t n,
                     std::size_t count, std::uint64_t seed, std::size_t threads) {
  if (n > f.length()) throw InputError("partial sum longer than the observable");
  if (f.sizes() != model.sizes()) throw InputError("observable and chain disagree on state spaces");
  std::size_t last = 0;
  for (std::size_t k = 0; k < n; ++k) last = std::max(last, k + f.term(k).future);
  const Sampler s(model);
  SumBatch out;
  out.seed = seed;
  out.n = n;
  out.sums.resize(count);
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<std::size_t> path(last + 1);
    for (std::size_t k = c * kChunk; k < std::min(count, (c + 1) * kChunk); ++k) {
      CounterRng rng(seed, k);
      s.draw(rng, last, [&](std::size_t j, std::size_t x) { path[j] = x; });
      out.sums[k] = f.partial_sum(n, path);
    }
  });
  return out;
}

std::vector<double> batch_sums(const SampleBatch& batch, const WindowObservable& f, std::size_t n) {
  std::vector<double> out(batch.count);
  std::vector<std::size_t> path(batch.length);
  for (std::size_t k = 0; k < batch.count; ++k) {
    const auto row = batch.path(k);
    std::copy(row.begin(), row.end(), path.begin());
    out[k] = f.partial_sum(n, path);
  }
  return out;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

Estimate batch_means(std::span<const double> values, std::size_t batches) {
  Estimate e;
  if (values.empty()) return e;
  e.mean = pairwise_sum(values) / static_cast<double>(values.size());
  batches = std::min(batches, values.size());
  if (batches < 2) return e;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * values.size() / batches;
    const std::size_t hi = (b + 1) * values.size() / batches;
    means[b] = pairwise_sum(values.subspan(lo, hi - lo)) / static_cast<double>(hi - lo);
  }
  double ss = 0.0;
  for (double m : means) ss += (m - e.mean) * (m - e.mean);
  e.std_error = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
  return e;
}

LocalCounts empirical_local_counts(std::span<const double> sums, const TestKernel& g,
                                   std::span<const double> u_grid, bool integer_valued,
                                   std::size_t min_hits) {
  validate_kernel(g);
  LocalCounts out;
  out.u.assign(u_grid.begin(), u_grid.end());
  std::vector<double> buf(sums.size());
  for (double u : u_grid) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < sums.size(); ++k) {
      const double s = sums[k] - u;
      if (s > g.support_lo() && s < g.support_hi()) {
        buf[k] = g(s);
        ++hits;
      } else {
        buf[k] = 0.0;
      }
    }
    const auto e = batch_means(buf);
    out.estimate.push_back(e.mean);
    out.std_error.push_back(e.std_error);
    out.hits.push_back(hits);
    out.flagged.push_back(hits < min_hits);
    if (integer_valued) {
      for (std::size_t k = 0; k < sums.size(); ++k)
        buf[k] = std::abs(sums[k] - u) < 1e-9 ? 1.0 : 0.0;
      const auto f = batch_means(buf);
      out.lattice_frequency.push_back(f.mean);
      out.lattice_std_error.push_back(f.std_error);
    }
  }
  return out;
}

}  // namespace mshift
