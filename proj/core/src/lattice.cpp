#include <algorithm>
#include <cmath>
#include <numeric>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/llt.hpp"
#include "mshift/sim.hpp"

namespace mshift {

double LatticeDistribution::total() const { return pairwise_sum(prob); }

namespace {

struct Key {
  long a = 0;
  long b = 0;
};

Key to_key(double v, const LatticeSpec& L) {
  const double x = v / L.scale;
  if (L.beta == 0.0) {
    const double a = std::round(x);
    if (std::abs(x - a) > 1e-9 * std::max(1.0, std::abs(x)))
      throw InputError("value " + std::to_string(v) + " is not on the declared integer lattice");
    return {static_cast<long>(a), 0};
  }
  // Smallest |b| first so integer values never pick up a beta component.
  for (long m = 0; m <= L.b_bound; ++m) {
    for (long b : {m, -m}) {
      const double a = std::round(x - static_cast<double>(b) * L.beta);
      if (std::abs(x - a - static_cast<double>(b) * L.beta) <= 1e-9 * std::max(1.0, std::abs(x)))
        return {static_cast<long>(a), b};
      if (m == 0) break;
    }
  }
  throw InputError("value " + std::to_string(v) + " is not of the form scale*(a + b*beta)");
}

// Dense probability grid over a box of keys, one grid per window state.
struct Grid {
  long a0 = 0, b0 = 0;
  std::size_t na = 1, nb = 1;
  std::vector<std::vector<double>> cells;
};

void check_budget(const Grid& g, std::size_t states, const LatticeSpec& L) {
  if (g.na * g.nb * states > L.max_atoms)
    throw NumericalError("lattice atom count exceeds the budget (" + std::to_string(L.max_atoms) +
                         "); raise max_atoms or shorten n");
}

}  // namespace

LatticeDistribution lattice_distribution(const ChainModel& model, const WindowObservable& f,
                                         std::size_t n, const LatticeSpec& lattice) {
  if (!(lattice.scale > 0.0)) throw InputError("lattice scale must be positive");
  const ForwardLayout lay(model, f, n);
  auto keys_of = [&](const std::vector<double>& v) {
    std::vector<Key> k(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) k[i] = to_key(v[i], lattice);
    return k;
  };

  const auto& law = lay.initial_law();
  std::vector<Key> start(law.size());
  for (std::size_t k = 0; k < lay.init_terms(); ++k) {
    const auto kk = keys_of(lay.initial_term(k));
    for (std::size_t i = 0; i < law.size(); ++i) {
      start[i].a += kk[i].a;
      start[i].b += kk[i].b;
    }
  }
  Grid g;
  long amax = 0, bmax = 0;
  g.a0 = g.b0 = 0;
  bool first = true;
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (!(law[i] > 0.0)) continue;
    if (first) {
      g.a0 = amax = start[i].a;
      g.b0 = bmax = start[i].b;
      first = false;
    }
    g.a0 = std::min(g.a0, start[i].a);
    g.b0 = std::min(g.b0, start[i].b);
    amax = std::max(amax, start[i].a);
    bmax = std::max(bmax, start[i].b);
  }
  g.na = static_cast<std::size_t>(amax - g.a0 + 1);
  g.nb = static_cast<std::size_t>(bmax - g.b0 + 1);
  check_budget(g, law.size(), lattice);
  g.cells.assign(law.size(), {});
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (!(law[i] > 0.0)) continue;
    g.cells[i].assign(g.na * g.nb, 0.0);
    g.cells[i][static_cast<std::size_t>(start[i].a - g.a0) +
               g.na * static_cast<std::size_t>(start[i].b - g.b0)] = law[i];
  }

  for (std::size_t s = 1; s <= lay.extensions(); ++s) {
    const auto kk = keys_of(lay.extension_term(s));
    long da_lo = kk[0].a, da_hi = kk[0].a, db_lo = kk[0].b, db_hi = kk[0].b;
    for (const auto& k : kk) {
      da_lo = std::min(da_lo, k.a);
      da_hi = std::max(da_hi, k.a);
      db_lo = std::min(db_lo, k.b);
      db_hi = std::max(db_hi, k.b);
    }
    Grid h;
    h.a0 = g.a0 + da_lo;
    h.b0 = g.b0 + db_lo;
    h.na = g.na + static_cast<std::size_t>(da_hi - da_lo);
    h.nb = g.nb + static_cast<std::size_t>(db_hi - db_lo);
    const std::size_t states = lay.space(s).size();
    check_budget(h, states, lattice);
    h.cells.assign(states, {});
    lay.for_each_move(s, [&](std::size_t from, std::size_t to, double p) {
      const auto& src = g.cells[from];
      if (src.empty()) return;
      auto& dst = h.cells[to];
      if (dst.empty()) dst.assign(h.na * h.nb, 0.0);
      const std::size_t oa = static_cast<std::size_t>(g.a0 + kk[to].a - h.a0);
      const std::size_t ob = static_cast<std::size_t>(g.b0 + kk[to].b - h.b0);
      for (std::size_t ib = 0; ib < g.nb; ++ib) {
        const double* in = src.data() + ib * g.na;
        double* out = dst.data() + (ib + ob) * h.na + oa;
        for (std::size_t ia = 0; ia < g.na; ++ia)
          if (in[ia] != 0.0) out[ia] += p * in[ia];
      }
    });
    g = std::move(h);
  }

  std::vector<double> agg(g.na * g.nb, 0.0);
  for (const auto& c : g.cells)
    if (!c.empty())
      for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += c[i];

  LatticeDistribution d;
  d.lattice = lattice;
  std::vector<std::size_t> live;
  std::vector<double> vals;
  for (std::size_t i = 0; i < agg.size(); ++i) {
    if (!(agg[i] > 0.0)) continue;
    live.push_back(i);
    const long a = g.a0 + static_cast<long>(i % g.na);
    const long b = g.b0 + static_cast<long>(i / g.na);
    vals.push_back(lattice.scale * (static_cast<double>(a) + static_cast<double>(b) * lattice.beta));
  }
  std::vector<std::size_t> order(live.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return vals[x] < vals[y]; });
  for (std::size_t o : order) {
    const std::size_t i = live[o];
    d.a.push_back(g.a0 + static_cast<long>(i % g.na));
    d.b.push_back(g.b0 + static_cast<long>(i / g.na));
    d.value.push_back(vals[o]);
    d.prob.push_back(agg[i]);
  }
  return d;
}

}  // namespace mshift
