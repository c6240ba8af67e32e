#include <algorithm>
#include <cmath>
#include <sstream>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/llt.hpp"
#include "mshift/sim.hpp"

namespace mshift {

namespace {

std::size_t max_grid(std::span<const std::size_t> n_grid) {
  if (n_grid.empty()) throw InputError("empty n grid");
  std::size_t m = 0;
  for (std::size_t n : n_grid) {
    if (n == 0) throw InputError("n grid entries must be positive");
    m = std::max(m, n);
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
  return pairwise_sum(p);
}

void record(MomentData& out, std::span<const std::size_t> grid, std::size_t m, double mean,
            double m2, double m3) {
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid[k] == m) {
      out.mean[k] = mean;
      out.variance[k] = std::max(0.0, m2);
      out.third[k] = m3;
    }
}

MomentData empty_like(std::span<const std::size_t> n_grid) {
  MomentData out;
  out.n.assign(n_grid.begin(), n_grid.end());
  out.mean.assign(n_grid.size(), 0.0);
  out.variance.assign(n_grid.size(), 0.0);
  out.third.assign(n_grid.size(), 0.0);
  return out;
}

}  // namespace

MomentData exact_moments(const ChainModel& model, const WindowObservable& f,
                         std::span<const std::size_t> n_grid) {
  if (!f.one_sided()) throw InputError("the cocycle moment route needs a one-sided observable");
  if (f.sizes() != model.sizes()) throw InputError("observable and chain disagree on state spaces");
  const std::size_t n_max = max_grid(n_grid);
  const std::size_t W = std::max<std::size_t>(f.max_future(), 1);
  const std::size_t N = model.horizon();
  if (W > N || n_max > std::min(f.length(), N - W + 1))
    throw InputError("moment grid runs past the horizon");
  const auto& sizes = model.sizes();

  MomentData out = empty_like(n_grid);
  // a[r] = E[(centred partial sum)^r ; V_j = v] / P(V_j = v), kept as
  // conditional moments given the current window.
  std::vector<std::vector<double>> a(4, std::vector<double>(window_over(sizes, 0, W).size(), 0.0));
  std::fill(a[0].begin(), a[0].end(), 1.0);
  double mean = 0.0;
  for (std::size_t j = 0; j < n_max; ++j) {
    const auto C = window_over(sizes, j, W + 1);
    const auto& t = f.term(j);
    const auto fc = extend_right<double>(t.values, C.size());
    const auto law = model.window_law(j, W + 1);
    const double mu = dot(law, fc);
    mean += mu;
    std::vector<std::vector<double>> lifted(4);
    for (int r = 0; r < 4; ++r) lifted[r] = extend_right<double>(a[r], C.size());
    std::vector<std::vector<double>> next(4, std::vector<double>(C.size()));
    for (std::size_t c = 0; c < C.size(); ++c) {
      const double d = fc[c] - mu;
      const double a0 = lifted[0][c], a1 = lifted[1][c], a2 = lifted[2][c], a3 = lifted[3][c];
      next[0][c] = a0;
      next[1][c] = a1 + d * a0;
      next[2][c] = a2 + 2 * d * a1 + d * d * a0;
      next[3][c] = a3 + 3 * d * a2 + 3 * d * d * a1 + d * d * d * a0;
    }
    for (int r = 0; r < 4; ++r)
      a[r] = condition_on_future<double>(model, j, next[r], W + 1);
    const auto lw = model.window_law(j + 1, W);
    record(out, n_grid, j + 1, mean, dot(lw, a[2]), dot(lw, a[3]));
  }
  return out;
}

MomentData forward_moments(const ChainModel& model, const WindowObservable& f,
                           std::span<const std::size_t> n_grid) {
  const std::size_t n_max = max_grid(n_grid);
  const ForwardLayout lay(model, f, n_max);
  MomentData out = empty_like(n_grid);
  // m[r][state] = E[(centred sum)^r ; state]
  std::vector<std::vector<double>> m(4);
  m[0] = lay.initial_law();
  for (int r = 1; r < 4; ++r) m[r].assign(m[0].size(), 0.0);
  double mean = 0.0;
  auto add_term = [&](const std::vector<double>& v, std::size_t count) {
    const double mu = dot(m[0], v);
    mean += mu;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - mu;
      const double a0 = m[0][i], a1 = m[1][i], a2 = m[2][i], a3 = m[3][i];
      m[1][i] = a1 + d * a0;
      m[2][i] = a2 + 2 * d * a1 + d * d * a0;
      m[3][i] = a3 + 3 * d * a2 + 3 * d * d * a1 + d * d * d * a0;
    }
    record(out, n_grid, count, mean, pairwise_sum(m[2]), pairwise_sum(m[3]));
  };
  for (std::size_t k = 0; k < lay.init_terms(); ++k) add_term(lay.initial_term(k), k + 1);
  for (std::size_t s = 1; s <= lay.extensions(); ++s) {
    std::vector<std::vector<double>> next(4, std::vector<double>(lay.space(s).size(), 0.0));
    lay.for_each_move(s, [&](std::size_t from, std::size_t to, double p) {
      for (int r = 0; r < 4; ++r) next[r][to] += p * m[r][from];
    });
    m = std::move(next);
    add_term(lay.extension_term(s), lay.init_terms() + s);
  }
  return out;
}

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::divergent:
      return "divergent";
    case Regime::bounded:
      return "bounded";
    case Regime::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

VarianceRegime variance_regime(const ChainModel& model, const WindowObservable& f,
                               std::optional<std::size_t> horizon) {
  std::size_t H = f.length();
  while (H > 0) {
    std::size_t Q = 0;
    for (std::size_t k = 0; k < H; ++k) Q = std::max(Q, f.term(k).future);
    if (H - 1 + Q <= model.horizon()) break;
    --H;
  }
  if (horizon) {
    if (*horizon > H) throw InputError("requested horizon exceeds what the chain supports");
    H = *horizon;
  }
  if (H == 0) throw InputError("observable has no usable terms");
  std::vector<std::size_t> grid(H);
  for (std::size_t n = 1; n <= H; ++n) grid[n - 1] = n;
  const auto mom = forward_moments(model, f, grid);

  VarianceRegime out;
  out.variance = mom.variance;
  out.max_variance = *std::max_element(mom.variance.begin(), mom.variance.end());
  std::ostringstream ev;
  if (H < 8) {
    out.regime = Regime::inconclusive;
    ev << "horizon " << H << " too short to separate bounded from divergent variance";
    out.evidence = ev.str();
    return out;
  }
  const std::size_t lo = H / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(H - lo + 1);
  for (std::size_t n = lo; n <= H; ++n) {
    const double x = static_cast<double>(n), y = mom.variance[n - 1];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  out.tail_increase = out.slope * static_cast<double>(H - lo);
  const double scale = std::max(out.max_variance, 1e-300);
  if (out.max_variance < 1e-20 || out.tail_increase <= 1e-3 * scale)
    out.regime = Regime::bounded;
  else if (out.tail_increase >= 0.1 * scale)
    out.regime = Regime::divergent;
  else
    out.regime = Regime::inconclusive;
  ev << "Var(S_n) over n in [" << lo << ", " << H << "]: fitted slope " << out.slope
     << ", increase " << out.tail_increase << " against max " << out.max_variance;
  if (out.regime == Regime::inconclusive)
    ev << "; neither bounded (increase <= 1e-3 max) nor divergent (>= 0.1 max)";

  if (out.regime == Regime::bounded && f.one_sided()) {
    try {
      out.decomposition = gordin_decomposition(model, f.prefix(std::min(H, model.horizon())));
      ev << "; sum Var(M_j) = " << out.decomposition->martingale_variance_sum;
    } catch (const Error& e) {
      ev << "; decomposition unavailable: " << e.what();
    }
  }
  out.evidence = ev.str();
  return out;
}

}  // namespace mshift
