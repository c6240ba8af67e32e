#include <algorithm>
#include <cmath>
#include <deque>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/observables.hpp"

namespace mshift {

namespace {

std::vector<std::size_t> full_anchor(const Anchor& anchor, const std::vector<std::size_t>& sizes) {
  if (anchor.empty()) return std::vector<std::size_t>(sizes.size(), 0);
  if (anchor.size() != sizes.size()) throw InputError("anchor must give one state per index");
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (anchor[i] >= sizes[i])
      throw InputError("anchor state outside the state space at index " + std::to_string(i));
  return anchor;
}

// Writes window configuration `idx` of `shp` into `path`.
void place(const WindowShape& shp, std::size_t idx, std::vector<std::size_t>& path) {
  for (std::size_t i = 0; i < shp.width(); ++i) {
    path[shp.first() + i] = idx % shp.radix(i);
    idx /= shp.radix(i);
  }
}

// Lookup of a window term on a path.
double lookup(const WindowShape& shp, const std::vector<double>& values,
              const std::vector<std::size_t>& path) {
  std::size_t idx = 0;
  for (std::size_t i = shp.width(); i-- > 0;) idx = idx * shp.radix(i) + path[shp.first() + i];
  return values[idx];
}

// Splitmix-style step; only used to pick deterministic verification samples.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::size_t kFullCheckLimit = std::size_t{1} << 16;

}  // namespace

SinaiReduction sinai_reduce(const WindowObservable& f, const Anchor& anchor_in) {
  const auto& sizes = f.sizes();
  const auto alpha = full_anchor(anchor_in, sizes);
  const std::size_t n = f.length();

  // u_j = sum over k with k < p_{j+k} of f_{j+k}(x) - f_{j+k}(alpha below j, x).
  std::vector<WindowTerm> u(n + 1);
  std::vector<WindowShape> ushape(n + 1);
  std::vector<std::size_t> path = alpha;
  for (std::size_t j = 0; j <= n; ++j) {
    std::size_t lo = j, hi = j;
    std::vector<std::size_t> contributing;
    for (std::size_t m = j; m < n; ++m) {
      const auto& t = f.term(m);
      if (m - t.past < j) {
        contributing.push_back(m);
        lo = std::min(lo, m - t.past);
        hi = std::max(hi, m + t.future);
      }
    }
    u[j].past = j - lo;
    u[j].future = hi - j;
    ushape[j] = window_over(sizes, lo, hi - lo + 1);
    u[j].values.assign(ushape[j].size(), 0.0);
    for (std::size_t idx = 0; idx < ushape[j].size(); ++idx) {
      place(ushape[j], idx, path);
      double s = 0.0;
      for (std::size_t m : contributing) s += f.evaluate(m, path);
      for (std::size_t i = lo; i < j; ++i) path[i] = alpha[i];
      for (std::size_t m : contributing) s -= f.evaluate(m, path);
      u[j].values[idx] = s;
    }
    for (std::size_t i = lo; i <= hi; ++i) path[i] = alpha[i];
  }

  // g_j = f_j + u_{j+1} - u_j evaluated with everything below j frozen at alpha.
  std::vector<WindowTerm> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t hi = std::max({j + f.term(j).future, j + u[j].future,
                                     j + 1 + u[j + 1].future});
    const auto shp = window_over(sizes, j, hi - j + 1);
    g[j].future = hi - j;
    g[j].values.resize(shp.size());
    for (std::size_t idx = 0; idx < shp.size(); ++idx) {
      place(shp, idx, path);
      g[j].values[idx] = f.evaluate(j, path) + lookup(ushape[j + 1], u[j + 1].values, path) -
                         lookup(ushape[j], u[j].values, path);
    }
    for (std::size_t i = j; i <= hi; ++i) path[i] = alpha[i];
  }

  SinaiReduction out{WindowObservable(sizes, std::move(u)), WindowObservable(sizes, std::move(g)),
                     0.0};

  // Reconstruction check f_j = g_j - u_{j+1} + u_j over the joint window
  // (exhaustive when small, a fixed pseudo-random subset otherwise).
  for (std::size_t j = 0; j < n; ++j) {
    const auto& ut = out.transfer;
    const std::size_t lo = std::min({j - f.term(j).past, j - ut.term(j).past,
                                     j + 1 - ut.term(j + 1).past});
    const std::size_t hi = std::max({j + f.term(j).future, j + ut.term(j).future,
                                     j + 1 + ut.term(j + 1).future,
                                     j + out.reduced.term(j).future});
    const auto shp = window_over(sizes, lo, hi - lo + 1);
    const bool full = shp.size() <= kFullCheckLimit;
    const std::size_t count = full ? shp.size() : kFullCheckLimit;
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t idx = full ? s : mix(j * 0x10001ULL + s) % shp.size();
      place(shp, idx, path);
      const double rebuilt = out.reduced.evaluate(j, path) - ut.evaluate(j + 1, path) +
                             ut.evaluate(j, path);
      out.residual = std::max(out.residual, std::abs(rebuilt - f.evaluate(j, path)));
    }
    for (std::size_t i = lo; i <= hi; ++i) path[i] = alpha[i];
  }
  return out;
}

std::size_t default_gordin_depth(double rate, double tol) {
  if (!(rate > 0.0) || rate >= 1.0) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(rate))));
}

namespace {

// A table over X_first .. X_{first+width-1}.
struct Table {
  std::size_t first = 0;
  std::size_t width = 1;
  std::vector<double> v;
};

std::size_t block_size(const ChainModel& m, std::size_t first, std::size_t width) {
  std::size_t s = 1;
  for (std::size_t i = 0; i < width; ++i) s *= m.states(first + i);
  return s;
}

Table lift(const ChainModel& m, const Table& t, std::size_t first, std::size_t width) {
  if (first > t.first || first + width < t.first + t.width)
    throw InputError("lift target does not contain the table window");
  Table out{first, width, t.v};
  if (first < t.first) {
    out.v = extend_left<double>(out.v, block_size(m, first, t.first - first));
  }
  const std::size_t full = block_size(m, first, width);
  if (out.v.size() < full) out.v = extend_right<double>(out.v, full);
  return out;
}

Table condition(const ChainModel& m, const Table& t) {
  Table out;
  out.first = t.first + 1;
  out.width = std::max<std::size_t>(t.width - 1, 1);
  out.v = condition_on_future<double>(m, t.first, t.v, t.width);
  return out;
}

double expectation(const ChainModel& m, const Table& t) {
  const auto law = m.window_law(t.first, t.width);
  double s = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) s += law[i] * t.v[i];
  return s;
}

WindowTerm as_term(const Table& t, std::size_t j) {
  WindowTerm w;
  w.past = j - t.first;
  w.future = t.first + t.width - 1 - j;
  w.values = t.v;
  return w;
}

}  // namespace

Decomposition gordin_decomposition(const ChainModel& model, const WindowObservable& f,
                                   std::optional<std::size_t> depth) {
  if (!f.one_sided()) throw InputError("Gordin decomposition needs a one-sided observable");
  const std::size_t n = f.length();
  const std::size_t N = model.horizon();
  if (n == 0) throw InputError("empty observable");
  if (n > N) throw InputError("observable longer than the horizon");
  if (depth && *depth == 0) throw InputError("truncation depth must be positive");
  if (depth && *depth > n) throw InputError("horizon too short for the requested truncation depth");

  Decomposition d;
  d.depth = depth.value_or(n);
  d.means.resize(n);
  d.martingale_variance.resize(n);
  std::vector<WindowTerm> mterms(n), uterms(n + 1);

  // E[fbar_k | G_j] for the retained k, oldest first; all live on [j, ...).
  std::deque<Table> pending;
  Table u{0, 1, std::vector<double>(model.states(0), 0.0)};
  uterms[0] = as_term(u, 0);

  for (std::size_t j = 0; j < n; ++j) {
    Table fj{j, f.term(j).future + 1, f.term(j).values};
    d.means[j] = expectation(model, fj);
    for (auto& v : fj.v) v -= d.means[j];

    const std::size_t width = std::max({fj.width, u.width, std::size_t{2}});
    if (j + width > N + 1) throw InputError("horizon too short to condition term " + std::to_string(j));
    pending.push_back(fj);
    if (pending.size() > d.depth) pending.pop_front();

    // u_{j+1} = sum over retained k <= j of E[fbar_k | G_{j+1}].
    std::size_t next_width = 1;
    for (auto& p : pending) {
      p = condition(model, p);
      next_width = std::max(next_width, p.width);
    }
    Table unext{j + 1, next_width,
                std::vector<double>(block_size(model, j + 1, next_width), 0.0)};
    for (const auto& p : pending) {
      const auto l = lift(model, p, j + 1, next_width);
      for (std::size_t i = 0; i < l.v.size(); ++i) unext.v[i] += l.v[i];
    }

    // M_j = fbar_j + u_j - u_{j+1}∘T_j on [j, j+width).
    const std::size_t mw = std::max(width, next_width + 1);
    Table mj = lift(model, fj, j, mw);
    const auto uj = lift(model, u, j, mw);
    const auto un = lift(model, unext, j, mw);
    for (std::size_t i = 0; i < mj.v.size(); ++i) mj.v[i] += uj.v[i] - un.v[i];

    // Residual of f_j = mean + M_j + u_{j+1}∘T - u_j, recomputed from the parts.
    const auto fl = lift(model, Table{j, f.term(j).future + 1, f.term(j).values}, j, mw);
    for (std::size_t i = 0; i < mj.v.size(); ++i)
      d.residual = std::max(d.residual,
                            std::abs(fl.v[i] - d.means[j] - mj.v[i] - un.v[i] + uj.v[i]));

    const auto cm = condition_on_future<double>(model, j, mj.v, mj.width);
    for (double v : cm) d.martingale_defect = std::max(d.martingale_defect, std::abs(v));

    Table sq = mj;
    for (auto& v : sq.v) v *= v;
    const double mean = expectation(model, mj);
    d.martingale_variance[j] = std::max(0.0, expectation(model, sq) - mean * mean);
    d.martingale_variance_sum += d.martingale_variance[j];

    mterms[j] = as_term(mj, j);
    u = unext;
    uterms[j + 1] = as_term(u, j + 1);
  }
  d.martingale = WindowObservable(model.sizes(), std::move(mterms));
  d.transfer = WindowObservable(model.sizes(), std::move(uterms));
  return d;
}

AnchorCoboundary anchor_coboundary(const WindowObservable& f, const Anchor& anchor_in,
                                   std::size_t k) {
  if (!f.one_sided()) throw InputError("anchor coboundary needs a one-sided observable");
  const auto& sizes = f.sizes();
  const auto alpha = full_anchor(anchor_in, sizes);
  if (k > f.length()) throw InputError("anchor coboundary index beyond the observable");
  const std::size_t q = f.max_future();
  const std::size_t width = std::max<std::size_t>(q, 1);
  if (k + width > sizes.size()) throw InputError("anchor coboundary window leaves the horizon");
  AnchorCoboundary h{window_over(sizes, k, width), {}};
  h.values.assign(h.shape.size(), 0.0);
  std::vector<std::size_t> path = alpha;
  double base = 0.0;
  const std::size_t m0 = k > q ? k - q : 0;
  for (std::size_t m = m0; m < k; ++m) base += f.evaluate(m, path);
  for (std::size_t idx = 0; idx < h.shape.size(); ++idx) {
    place(h.shape, idx, path);
    double s = 0.0;
    for (std::size_t m = m0; m < k; ++m) s += f.evaluate(m, path);
    h.values[idx] = s - base;
  }
  return h;
}

std::vector<double> anchor_residuals(const WindowObservable& f, const Anchor& anchor_in,
                                     std::size_t j, std::span<const std::size_t> ls) {
  if (!f.one_sided()) throw InputError("anchor residuals need a one-sided observable");
  const auto& sizes = f.sizes();
  const auto alpha = full_anchor(anchor_in, sizes);
  const std::size_t q = f.max_future();
  std::vector<std::size_t> path = alpha;

  // Block anchor coboundary: sum_{m=from}^{to-1} f_m(alpha up to cut, path beyond) - f_m(alpha).
  auto block_h = [&](std::size_t from, std::size_t to, std::size_t cut,
                     const std::vector<std::size_t>& x) {
    std::vector<std::size_t> p = alpha;
    for (std::size_t i = cut; i < x.size(); ++i) p[i] = x[i];
    double s = 0.0;
    for (std::size_t m = from; m < to; ++m) s += f.evaluate(m, p) - f.evaluate(m, alpha);
    return s;
  };

  std::vector<double> out;
  out.reserve(ls.size());
  for (std::size_t l : ls) {
    const std::size_t k = j + l;
    if (k + 1 > f.length() || k + q + 1 > sizes.size())
      throw InputError("anchor residual window leaves the horizon");
    const auto shp = window_over(sizes, k, std::min(q + 1, sizes.size() - k));
    double worst = 0.0;
    for (std::size_t idx = 0; idx < shp.size(); ++idx) {
      path = alpha;
      place(shp, idx, path);
      // x lives on X_{k,∞}; T_k x drops x_k, which the cut at k+1 models.
      const double hj_next = block_h(j, k + 1, k + 1, path);
      const double hj = block_h(j, k, k, path);
      const double h_next = block_h(0, k + 1, k + 1, path);
      const double h = block_h(0, k, k, path);
      worst = std::max(worst, std::abs(hj_next - hj - (h_next - h)));
    }
    out.push_back(worst);
  }
  return out;
}

LinearProcess build_linear_process(std::span<const std::size_t> sizes, std::size_t n,
                                   std::span<const double> coeffs, std::size_t K,
                                   const std::vector<std::vector<double>>& base) {
  if (coeffs.size() % 2 == 0) throw InputError("coefficients must cover -Kmax..Kmax");
  const std::size_t kmax = coeffs.size() / 2;
  if (K > kmax) throw InputError("truncation beyond the declared coefficient support");
  const std::size_t N = sizes.size() - 1;
  if (K > N) throw InputError("truncation exceeds the horizon");
  if (base.empty()) throw InputError("missing base functions");
  auto g = [&](std::size_t m) -> const std::vector<double>& {
    return base.size() == 1 ? base[0] : base.at(m);
  };
  double gmax = 0.0;
  for (const auto& row : base)
    for (double v : row) gmax = std::max(gmax, std::abs(v));
  double tail = 0.0;
  for (std::size_t k = K + 1; k <= kmax; ++k)
    tail += std::abs(coeffs[kmax + k]) + std::abs(coeffs[kmax - k]);

  std::vector<std::size_t> sz(sizes.begin(), sizes.end());
  std::vector<WindowTerm> terms(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto& t = terms[j];
    t.past = std::min(K, j);
    t.future = std::min(K, N - j);
    const auto shp = window_over(sz, j - t.past, t.past + t.future + 1);
    std::vector<std::size_t> x(shp.width());
    t.values.resize(shp.size());
    for (std::size_t idx = 0; idx < shp.size(); ++idx) {
      shp.decode(idx, x);
      double s = 0.0;
      for (std::size_t pos = 0; pos < shp.width(); ++pos) {
        const std::size_t m = shp.first() + pos;  // m = j - k
        const long k = static_cast<long>(j) - static_cast<long>(m);
        s += coeffs[static_cast<std::size_t>(static_cast<long>(kmax) + k)] * g(m).at(x[pos]);
      }
      t.values[idx] = s;
    }
  }
  return {WindowObservable(std::move(sz), std::move(terms)), tail * gmax};
}

}  // namespace mshift
