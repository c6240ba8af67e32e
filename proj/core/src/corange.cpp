#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/llt.hpp"
#include "mshift/parallel.hpp"
#include "mshift/rng.hpp"
#include "mshift/transfer.hpp"

namespace mshift {

namespace {

// Shared, frequency-independent pieces of the decay statistic.
struct StatContext {
  const ChainModel* model = nullptr;
  const WindowObservable* f = nullptr;
  std::size_t n = 0;
  bool cocycle = false;  // one-sided with enough cocycle steps
  double c1 = 1.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> laws;  // law of V_m, m = 1..n
  std::shared_ptr<const WindowObservable> reduced;  // owns *f when the scan runs on g
};

// Per-frequency cost of the bridge sweep: every start window drives a DP
// over all end windows.
double bridge_work(const ChainModel& model, const WindowObservable& f, std::size_t n) {
  std::size_t m = 1;
  for (std::size_t s : model.sizes()) m = std::max(m, s);
  const double windows = std::pow(static_cast<double>(m), static_cast<double>(f.max_past() + f.max_future() + 1));
  return windows * windows * static_cast<double>(n) * static_cast<double>(m);
}

StatContext make_context(const ChainModel& model, const WindowObservable& f, std::size_t n,
                         double t_max, std::size_t samples, std::uint64_t seed, double bridge_budget) {
  StatContext ctx;
  ctx.model = &model;
  ctx.f = &f;
  ctx.n = n;
  ctx.samples = samples;
  ctx.seed = seed;
  if (!f.one_sided() && bridge_work(model, f, n) > bridge_budget) {
    // Too wide for the bridge: f and its one-sided reduction share the corange.
    auto red = sinai_reduce(f);
    if (!(red.residual <= 1e-9))
      throw NumericalError("reduction residual " + std::to_string(red.residual) + " too large for the corange scan");
    ctx.reduced = std::make_shared<const WindowObservable>(std::move(red.reduced));
    ctx.f = ctx.reduced.get();
  }
  const WindowObservable& g = *ctx.f;
  if (g.one_sided()) {
    const TwistedCocycle probe(model, g, cd{0.0, 0.0});
    if (n <= probe.steps()) {
      ctx.cocycle = true;
      ctx.c1 = ly_constants(model, g, t_max).c1;
      for (std::size_t m = 1; m <= n; ++m) ctx.laws.push_back(model.window_law(m, probe.width()));
    }
  }
  return ctx;
}

std::vector<double> stat_curve(const StatContext& ctx, double t) {
  if (!ctx.cocycle) return bridge_sup_curve(*ctx.model, *ctx.f, t, ctx.n);
  const TwistedCocycle L(*ctx.model, *ctx.f, cd{0.0, t});
  std::vector<CVec> g;
  std::vector<double> scale;
  g.emplace_back(L.dim(0), cd{1.0, 0.0});
  scale.push_back(1.0);
  CounterRng rng(ctx.seed, 0);
  for (std::size_t s = 0; s < ctx.samples; ++s) {
    CVec h(L.dim(0));
    for (auto& v : h) v = std::polar(1.0, 2.0 * M_PI * rng.uniform());
    scale.push_back(1.0 / star_norm(L.space(0), h, ctx.model->a(), ctx.c1));
    g.push_back(std::move(h));
  }
  std::vector<double> out(ctx.n);
  for (std::size_t m = 1; m <= ctx.n; ++m) {
    double best = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) {
      g[s] = L.apply(m - 1, g[s]);
      best = std::max(best, sup_norm(g[s]) * scale[s]);
    }
    cd phi{0.0, 0.0};
    const auto& law = ctx.laws[m - 1];
    for (std::size_t i = 0; i < law.size(); ++i) phi += law[i] * g[0][i];
    out[m - 1] = std::max(best, std::abs(phi));
  }
  return out;
}

// exp of the least-squares slope of log(stat) over the last half.
double fitted_rate(const std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t lo = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double cnt = 0;
  for (std::size_t m = lo; m < n; ++m) {
    if (!(v[m] > 0.0)) return 0.0;
    const double x = static_cast<double>(m), y = std::log(v[m]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt += 1;
  }
  if (cnt < 2) return 0.0;
  return std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
}

std::size_t usable_length(const ChainModel& model, const WindowObservable& f, std::size_t cap) {
  std::size_t n = std::min(cap, f.length());
  while (n > 0) {
    std::size_t Q = 0;
    for (std::size_t k = 0; k < n; ++k) Q = std::max(Q, f.term(k).future);
    if (n - 1 + Q <= model.horizon()) break;
    --n;
  }
  return n;
}

}  // namespace

std::vector<double> corange_statistic(const ChainModel& model, const WindowObservable& f, double t,
                                      std::size_t n, std::size_t samples, std::uint64_t seed) {
  return stat_curve(make_context(model, f, n, std::abs(t), samples, seed, CorangeOptions{}.bridge_budget), t);
}

CorangeResult corange_scan(const ChainModel& model, const WindowObservable& f,
                           const CorangeOptions& opts) {
  if (!(opts.resolution > 0.0) || !(opts.t_max > opts.resolution))
    throw InputError("corange grid needs 0 < resolution < t_max");
  CorangeResult out;
  out.scan_max_t = opts.t_max;
  out.integer_valued = f.integer_valued();
  std::ostringstream msg;

  const std::size_t n = usable_length(model, f, opts.n_max);
  if (n < 8) throw InputError("corange scan needs at least 8 usable terms");
  if (opts.check_regime) {
    const auto vr = variance_regime(model, f, n);
    if (vr.regime == Regime::bounded) {
      out.all_frequencies = true;
      out.message = "variance bounded: every frequency is in the corange";
      return out;
    }
    if (vr.regime == Regime::inconclusive) msg << "variance regime inconclusive (" << vr.evidence << "); ";
  }

  const auto ctx = make_context(model, f, n, opts.t_max, opts.samples, opts.seed, opts.bridge_budget);
  if (ctx.reduced) msg << "two-sided input scanned through its one-sided reduction; ";
  const auto count = static_cast<std::size_t>(std::floor(opts.t_max / opts.resolution + 1e-9));
  out.t_grid.resize(count);
  out.rates.resize(count);
  std::vector<char> stuck(count, 0);
  parallel_for(count, opts.threads, [&](std::size_t i) {
    const double t = static_cast<double>(i + 1) * opts.resolution;
    const auto v = stat_curve(ctx, t);
    out.t_grid[i] = t;
    out.rates[i] = fitted_rate(v);
    stuck[i] = out.rates[i] > opts.rate_threshold && v.back() > opts.noise_floor;
  });

  // Runs of non-decaying grid points; the run containing the first point is
  // the trivial frequency 0 smeared by the grid.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < count;) {
    if (!stuck[i]) {
      ++i;
      continue;
    }
    std::size_t k = i;
    while (k + 1 < count && stuck[k + 1]) ++k;
    if (i != 0) runs.emplace_back(i, k);
    i = k + 1;
  }

  auto peak = [&](double t) { return stat_curve(ctx, t).back(); };
  for (const auto& [i, k] : runs) {
    double lo = out.t_grid[i] - opts.resolution, hi = out.t_grid[k] + opts.resolution;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = peak(x1), f2 = peak(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
      if (f1 >= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = peak(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = peak(x2);
      }
    }
    out.cluster_centers.push_back(0.5 * (lo + hi));
  }

  if (out.cluster_centers.empty()) {
    out.irreducible = true;
    msg << "no non-decaying frequency found in (0, " << opts.t_max << "]";
    out.message = msg.str();
    return out;
  }
  const double t0 = out.cluster_centers.front();
  const auto multiples = static_cast<std::size_t>(std::floor((opts.t_max - opts.resolution) / t0));
  bool grid_ok = out.cluster_centers.size() == multiples ||
                 out.cluster_centers.size() == multiples + 1;
  for (std::size_t c = 0; c < out.cluster_centers.size() && grid_ok; ++c) {
    const double k = static_cast<double>(c + 1);
    if (std::abs(out.cluster_centers[c] - k * t0) > opts.resolution) grid_ok = false;
  }
  if (!grid_ok) {
    std::ostringstream e;
    e << "non-decaying frequencies";
    for (double c : out.cluster_centers) e << ' ' << c;
    e << " do not form a grid t0*Z at resolution " << opts.resolution << "; refine the scan";
    throw NumericalError(e.str());
  }
  out.t0 = t0;
  out.h0 = 2.0 * M_PI / t0;
  if (out.integer_valued) out.span_exceeds_one = *out.h0 > 1.0 + 1e-6;
  msg << "non-decaying frequencies at multiples of t0 = " << t0 << ", span h0 = " << *out.h0;
  if (out.span_exceeds_one) msg << (*out.span_exceeds_one ? " (reducible integer sequence)" : " (integer span 1)");
  out.message = msg.str();
  return out;
}

}  // namespace mshift
