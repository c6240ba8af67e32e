#include <algorithm>
#include <cmath>
#include <limits>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/observables.hpp"
#include "mshift/parallel.hpp"
#include "mshift/rng.hpp"
#include "mshift/transfer.hpp"

namespace mshift {

double sup_norm(std::span<const cd> h) {
  double s = 0.0;
  for (const auto& v : h) s = std::max(s, std::abs(v));
  return s;
}

double window_variation(const WindowShape& shape, std::span<const cd> h, double a) {
  return variation(shape, h, 0, a);
}

double window_variation(const WindowShape& shape, std::span<const double> h, double a) {
  return variation(shape, h, 0, a);
}

double star_norm(const WindowShape& shape, std::span<const cd> h, double a, double c1) {
  return std::max(sup_norm(h), window_variation(shape, h, a) / (2.0 * c1));
}

std::size_t k0_for(double c1, double a) {
  std::size_t k = 0;
  double p = 2.0 * c1;
  while (p > 1.0 + 1e-15) {
    p *= a;
    ++k;
  }
  return std::max<std::size_t>(k, 1);
}

LyConstants ly_constants(const ChainModel& model, const WindowObservable& f, double t_max) {
  LyConstants c;
  c.a = model.a();
  c.t_max = std::abs(t_max);
  for (std::size_t j = 0; j < model.horizon(); ++j)
    c.delta = std::max(c.delta, dobrushin_coefficient(model.backward(j)));
  for (std::size_t j = 0; j < f.length(); ++j)
    c.vmax = std::max(c.vmax, term_variation(f, j, c.a));
  c.c1 = 1.0 + c.t_max * c.vmax * c.a / (1.0 - c.a) + 2.0 * c.delta;
  c.k0 = k0_for(c.c1, c.a);
  return c;
}

double ly_norm_cap(const LyConstants& c, std::size_t n) {
  return std::max(1.0, (c.c1 - 1.0) / (2.0 * c.c1) + std::pow(c.a, static_cast<double>(n)));
}

double dual_star_bound(const WindowShape& shape, std::span<const cd> psi, double a, double c1) {
  if (psi.size() != shape.size()) throw InputError("functional does not match its window");
  // Level k holds one node per configuration of the first k coordinates.
  std::vector<cd> wsum(psi.begin(), psi.end());
  std::vector<double> asum(psi.size()), dev(psi.size(), 0.0), best(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) asum[i] = best[i] = std::abs(psi[i]);
  for (std::size_t k = shape.width(); k-- > 0;) {
    const std::size_t nodes = shape.prefix_size(k);
    const double factor = 2.0 * c1 * std::pow(a, static_cast<double>(k));
    std::vector<cd> w2(nodes, cd{});
    std::vector<double> a2(nodes, 0.0), d2(nodes, 0.0), b2(nodes, 0.0), absw(nodes, 0.0),
        maxw(nodes, 0.0);
    for (std::size_t c = 0; c < wsum.size(); ++c) {
      const std::size_t p = c % nodes;
      w2[p] += wsum[c];
      a2[p] += asum[c];
      d2[p] += dev[c];
      b2[p] += best[c];
      const double m = std::abs(wsum[c]);
      absw[p] += m;
      maxw[p] = std::max(maxw[p], m);
    }
    for (std::size_t p = 0; p < nodes; ++p) {
      d2[p] = std::min(d2[p] + factor * (absw[p] - maxw[p]), factor * a2[p]);
      b2[p] = std::min({a2[p], std::abs(w2[p]) + d2[p], b2[p]});
    }
    wsum = std::move(w2);
    asum = std::move(a2);
    dev = std::move(d2);
    best = std::move(b2);
  }
  return best[0];
}

namespace {

std::size_t first_disagreement(const WindowShape& shape, std::size_t x, std::size_t y) {
  for (std::size_t i = 0; i < shape.width(); ++i)
    if (shape.coordinate(x, i) != shape.coordinate(y, i)) return i;
  return shape.width();
}

// max over output functionals (point evaluations and normalised differences)
// of the dual bound of the pulled-back functional.
double operator_dual_bound(const Eigen::MatrixXcd& m, const WindowShape& in,
                           const WindowShape& out, double a, double c1) {
  const auto rows = static_cast<std::size_t>(m.rows());
  const auto cols = static_cast<std::size_t>(m.cols());
  std::vector<CVec> r(rows, CVec(cols));
  for (std::size_t x = 0; x < rows; ++x)
    for (std::size_t c = 0; c < cols; ++c)
      r[x][c] = m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(c));
  double best = 0.0;
  for (std::size_t x = 0; x < rows; ++x) best = std::max(best, dual_star_bound(in, r[x], a, c1));
  CVec diff(cols);
  for (std::size_t x = 0; x < rows; ++x)
    for (std::size_t y = x + 1; y < rows; ++y) {
      const std::size_t k = first_disagreement(out, x, y);
      const double scale = 2.0 * c1 * std::pow(a, static_cast<double>(k));
      for (std::size_t c = 0; c < cols; ++c) diff[c] = r[x][c] - r[y][c];
      best = std::max(best, dual_star_bound(in, diff, a, c1) / scale);
    }
  return best;
}

CVec apply_matrix(const Eigen::MatrixXcd& m, const CVec& h) {
  CVec out(static_cast<std::size_t>(m.rows()), cd{});
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    cd s{};
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += m(r, c) * h[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = s;
  }
  return out;
}

}  // namespace

NormSandwich norm_estimate(const TwistedCocycle& L, std::size_t j, std::size_t n,
                           const LyConstants& c, std::size_t samples, std::uint64_t seed) {
  if (n == 0) throw InputError("norm estimate needs an interval of length at least 1");
  if (std::abs(L.z().real()) > 0 || std::abs(L.z().imag()) > c.t_max * (1 + 1e-12))
    throw InputError("frequency outside the range certified by the Lasota–Yorke constants");
  const auto m = L.compose(j, n);
  const auto& in = L.space(j);
  const auto& out = L.space(j + n);
  NormSandwich s;

  auto ratio = [&](const CVec& h) {
    const double denom = star_norm(in, h, c.a, c.c1);
    return denom > 0 ? star_norm(out, apply_matrix(m, h), c.a, c.c1) / denom : 0.0;
  };
  s.lower = ratio(CVec(in.size(), cd{1.0, 0.0}));
  CounterRng rng(seed, j * 1000003ULL + n);
  CVec h(in.size());
  for (std::size_t k = 0; k < samples; ++k) {
    for (auto& v : h) v = std::polar(1.0, 2.0 * M_PI * rng.uniform());
    s.lower = std::max(s.lower, ratio(h));
  }

  s.upper_ly = ly_norm_cap(c, n);
  s.upper_dual = std::numeric_limits<double>::infinity();
  if (in.size() <= kDualBoundMaxDim && out.size() <= kDualBoundMaxDim)
    s.upper_dual = operator_dual_bound(m, in, out, c.a, c.c1);
  s.upper = std::min(s.upper_ly, s.upper_dual);
  if (s.lower > s.upper * (1 + 1e-9) + 1e-12)
    throw NumericalError("norm sandwich inverted: lower bound exceeds the certified upper bound");
  return s;
}

std::vector<std::vector<double>> certified_upper_table(const TwistedCocycle& L, std::size_t j,
                                                       std::size_t len, std::size_t max_length,
                                                       const LyConstants& c) {
  if (j + len > L.steps()) throw InputError("interval outside the cocycle range");
  max_length = std::min(max_length, len);
  const bool dual = L.dim(j) <= kDualBoundMaxDim;
  std::vector<std::vector<double>> u(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t reach = std::min(max_length, len - i);
    u[i].assign(reach + 1, 1.0);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(L.dim(j + i)),
                                                    static_cast<Eigen::Index>(L.dim(j + i)));
    for (std::size_t len_i = 1; len_i <= reach; ++len_i) {
      m = L.matrix(j + i + len_i - 1) * m;
      double b = ly_norm_cap(c, len_i);
      if (dual && L.dim(j + i + len_i) <= kDualBoundMaxDim)
        b = std::min(b, operator_dual_bound(m, L.space(j + i), L.space(j + i + len_i), c.a, c.c1));
      u[i][len_i] = b;
    }
  }
  // Close under splitting, shorter intervals first.
  for (std::size_t m = 2; m <= max_length; ++m)
    for (std::size_t i = 0; i + m <= len; ++i)
      for (std::size_t k = 1; k < m; ++k)
        u[i][m] = std::min(u[i][m], u[i][k] * u[i + k][m - k]);
  return u;
}

BlockScan contracting_blocks(const ChainModel& model, const WindowObservable& f,
                             std::span<const double> t_grid, std::size_t n, std::size_t D,
                             double theta, std::size_t threads) {
  if (D == 0) throw InputError("block length must be positive");
  if (t_grid.empty()) throw InputError("empty frequency grid");
  double tmax = 0.0;
  for (double t : t_grid) tmax = std::max(tmax, std::abs(t));
  const auto c = ly_constants(model, f, tmax);
  BlockScan out;
  out.k0 = c.k0;
  out.theta = theta;

  std::vector<std::vector<std::vector<double>>> tables(t_grid.size());
  parallel_for(t_grid.size(), threads, [&](std::size_t k) {
    TwistedCocycle L(model, f, cd{0.0, t_grid[k]});
    if (n > L.steps()) throw InputError("block scan runs past the horizon");
    tables[k] = certified_upper_table(L, 0, n, 2 * D, c);
  });
  auto worst = [&](std::size_t i, std::size_t len) {
    double w = 0.0;
    for (const auto& t : tables) w = std::max(w, t[i][len]);
    return w;
  };

  std::size_t s = 0;
  while (s + D <= n) {
    bool found = false;
    for (std::size_t len = D; len <= 2 * D && s + len <= n; ++len) {
      if (worst(s, len) <= 1.0 - theta) {
        out.contracting.push_back({s, s + len});
        s += len + c.k0;
        found = true;
        break;
      }
    }
    if (!found) ++s;
  }
  out.count = out.contracting.size();
  std::size_t prev = 0;
  for (const auto& b : out.contracting) {
    if (b.begin > prev) out.complementary.push_back({prev, b.begin});
    prev = b.end;
  }
  if (prev < n) out.complementary.push_back({prev, n});
  return out;
}

}  // namespace mshift
