#include "mshift/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mshift/error.hpp"
#include "mshift/rng.hpp"

namespace mshift {

double IrfMap::operator()(double y) const {
  if (knots.empty()) return alpha * y + beta;
  if (y <= knots.front()) return values.front();
  if (y >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), y);
  const std::size_t i = static_cast<std::size_t>(it - knots.begin());
  const double w = (y - knots[i - 1]) / (knots[i] - knots[i - 1]);
  return values[i - 1] + w * (values[i] - values[i - 1]);
}

double IrfMap::lipschitz() const {
  if (knots.empty()) return std::abs(alpha);
  double l = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i)
    l = std::max(l, std::abs(values[i] - values[i - 1]) / (knots[i] - knots[i - 1]));
  return l;
}

std::pair<double, double> IrfMap::image(double lo, double hi) const {
  double a = (*this)(lo), b = (*this)(hi);
  if (a > b) std::swap(a, b);
  for (std::size_t i = 0; i < knots.size(); ++i)
    if (knots[i] > lo && knots[i] < hi) {
      a = std::min(a, values[i]);
      b = std::max(b, values[i]);
    }
  return {a, b};
}

const IrfMap& IrfFamily::at(std::size_t k, std::size_t x) const {
  return maps.size() == 1 ? maps[0][x] : maps[k][x];
}

double IrfFamily::delta0() const {
  double d = 0.0;
  for (const auto& row : maps)
    for (const auto& m : row) d = std::max(d, m.lipschitz());
  return d;
}

IrfFamily affine_irf(const std::vector<std::vector<double>>& alpha,
                     const std::vector<std::vector<double>>& beta, double y0) {
  if (alpha.size() != beta.size()) throw InputError("alpha and beta tables differ in length");
  IrfFamily f;
  f.y0 = y0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (alpha[k].size() != beta[k].size()) throw InputError("alpha and beta rows differ in length");
    std::vector<IrfMap> row;
    for (std::size_t x = 0; x < alpha[k].size(); ++x) row.push_back({alpha[k][x], beta[k][x], {}, {}});
    f.maps.push_back(std::move(row));
  }
  return f;
}

void validate_irf(const IrfFamily& fam, std::span<const std::size_t> sizes) {
  if (fam.maps.empty()) throw InputError("IRF family has no maps");
  if (fam.maps.size() != 1 && fam.maps.size() < sizes.size())
    throw InputError("IRF family covers fewer steps than the chain");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto& row = fam.maps.size() == 1 ? fam.maps[0] : fam.maps[k];
    if (row.size() < sizes[k]) throw InputError("IRF maps missing for states at step " + std::to_string(k));
  }
  for (const auto& row : fam.maps)
    for (const auto& m : row) {
      if (m.knots.empty()) {
        if (!std::isfinite(m.alpha) || !std::isfinite(m.beta)) throw InputError("non-finite affine map");
        continue;
      }
      if (m.knots.size() < 2 || m.knots.size() != m.values.size())
        throw InputError("tabulated map needs matching knots and values");
      for (std::size_t i = 1; i < m.knots.size(); ++i)
        if (!(m.knots[i] > m.knots[i - 1])) throw InputError("tabulated map knots must increase");
    }
  if (fam.radius && !(*fam.radius >= 0)) throw InputError("invariant radius must be non-negative");
}

std::pair<double, double> invariant_interval(const IrfFamily& fam, std::span<const std::size_t> sizes) {
  validate_irf(fam, sizes);
  const double d0 = fam.delta0();
  if (!(d0 < 1.0)) throw InputError("delta0 = " + std::to_string(d0) + " is not below 1");
  double lo = fam.y0, hi = fam.y0, growth = 0.0;
  for (int it = 0; it < 100000; ++it) {
    double nlo = lo, nhi = hi;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (fam.maps.size() == 1 && k > 0) break;
      for (std::size_t x = 0; x < (fam.maps.size() == 1 ? fam.maps[0].size() : sizes[k]); ++x) {
        const auto [a, b] = fam.at(k, x).image(lo, hi);
        nlo = std::min(nlo, a);
        nhi = std::max(nhi, b);
      }
    }
    growth = std::max(lo - nlo, nhi - hi);
    lo = nlo;
    hi = nhi;
    if (growth <= 1e-15 * (1.0 + hi - lo)) break;
  }
  // Remaining growth is geometric with ratio delta0.
  const double pad = growth * d0 / (1.0 - d0);
  return {lo - pad, hi + pad};
}

IrfTrajectory simulate_irf(const IrfFamily& fam, std::span<const std::size_t> sizes,
                           std::span<const std::uint32_t> path, std::size_t n, IrfMode mode,
                           std::size_t burn) {
  validate_irf(fam, sizes);
  if (path.size() < n + 1 || sizes.size() < n + 1) throw InputError("path shorter than the trajectory");
  IrfTrajectory tr;
  auto guard = [&](double y, std::size_t k) {
    if (fam.radius && std::abs(y) > *fam.radius + 1e-9) {
      std::ostringstream e;
      e << "trajectory left the declared invariant ball |y| <= " << *fam.radius << " at step " << k
        << " (y = " << y << ")";
      throw InputError(e.str());
    }
    tr.max_abs = std::max(tr.max_abs, std::abs(y));
  };
  if (mode == IrfMode::initial) {
    double y = fam.y0;
    for (std::size_t k = 0; k <= n; ++k) {
      y = fam.at(k, path[k])(y);
      guard(y, k);
      tr.y.push_back(y);
    }
    return tr;
  }
  const auto [lo, hi] = invariant_interval(fam, sizes);
  const double d0 = fam.delta0();
  tr.coupling_bound = std::pow(d0, static_cast<double>(burn)) * (hi - lo);
  double a = lo, b = hi;
  for (std::size_t k = 0; k <= n; ++k) {
    a = fam.at(k, path[k])(a);
    b = fam.at(k, path[k])(b);
    guard(a, k);
    guard(b, k);
    tr.y.push_back(a);
    if (k >= burn) tr.coupling_gap = std::max(tr.coupling_gap, std::abs(a - b));
  }
  if (tr.coupling_gap > tr.coupling_bound * (1 + 1e-9) + 1e-15)
    throw NumericalError("past-independent runs disagree beyond delta0^burn * range");
  return tr;
}

std::size_t required_window(const IrfFamily& fam, std::span<const std::size_t> sizes,
                            double tolerance) {
  if (!(tolerance > 0)) throw InputError("tolerance must be positive");
  const auto [lo, hi] = invariant_interval(fam, sizes);
  const double d0 = fam.delta0();
  std::size_t w = 1;
  double b = (hi - lo) * d0;
  while (b > tolerance) {
    b *= d0;
    ++w;
  }
  return w;
}

IrfObservable irf_window_observable(const IrfFamily& fam, std::span<const std::size_t> sizes,
                                    std::size_t n, std::size_t window, const Anchor& anchor,
                                    std::optional<double> tolerance) {
  if (window == 0) throw InputError("window must be positive");
  if (n == 0 || n > sizes.size()) throw InputError("observable length outside the horizon");
  const auto [lo, hi] = invariant_interval(fam, sizes);
  IrfObservable out;
  out.delta0 = fam.delta0();
  out.range = hi - lo;
  out.error_bound = out.range * std::pow(out.delta0, static_cast<double>(window));
  if (tolerance && out.error_bound > *tolerance) {
    std::ostringstream e;
    e << "window " << window << " gives truncation bound " << out.error_bound << " above " << *tolerance
      << "; need window " << required_window(fam, sizes, *tolerance);
    throw InputError(e.str());
  }
  double cells = 0.0;  // largest single table; the full observable holds n of them
  for (std::size_t k = 0; k < n; ++k) {
    double c = 1.0;
    for (std::size_t i = k + 1 - std::min(window, k + 1); i <= k; ++i) c *= static_cast<double>(sizes[i]);
    cells = std::max(cells, c);
  }
  if (cells > static_cast<double>(1u << 22))
    throw InputError("window " + std::to_string(window) + " needs tables of " + std::to_string(static_cast<long long>(cells)) +
                     " entries; use a smaller window");
  std::vector<std::size_t> alpha(sizes.size(), 0);
  if (!anchor.empty()) {
    if (anchor.size() != sizes.size()) throw InputError("anchor must give one state per index");
    for (std::size_t i = 0; i < sizes.size(); ++i)
      if (anchor[i] >= sizes[i]) throw InputError("anchor state outside the state space");
    alpha = anchor;
  }
  // ybar[k + 1] = Y_k along the anchor path, ybar[0] = y0.
  std::vector<double> ybar(n + 1, fam.y0);
  for (std::size_t k = 0; k < n; ++k) ybar[k + 1] = fam.at(k, alpha[k])(ybar[k]);

  std::vector<WindowTerm> terms(n);
  std::vector<std::size_t> x(window);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t past = std::min(window - 1, k);
    const std::size_t first = k - past;
    const auto shp = window_over(sizes, first, past + 1);
    terms[k].past = past;
    terms[k].values.resize(shp.size());
    for (std::size_t idx = 0; idx < shp.size(); ++idx) {
      shp.decode(idx, std::span<std::size_t>(x.data(), past + 1));
      double y = ybar[first];
      for (std::size_t i = 0; i <= past; ++i) y = fam.at(first + i, x[i])(y);
      terms[k].values[idx] = y;
    }
  }
  out.observable = WindowObservable(std::vector<std::size_t>(sizes.begin(), sizes.end()), std::move(terms));
  return out;
}

double lipschitz_audit(const IrfFamily& fam, std::span<const std::size_t> sizes, std::size_t samples,
                       std::uint64_t seed) {
  const auto [lo, hi] = invariant_interval(fam, sizes);
  const double a = lo - 1.0, b = hi + 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  CounterRng rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(sizes.size()));
    const auto x = static_cast<std::size_t>(rng.uniform() * static_cast<double>(sizes[k]));
    const double y1 = a + (b - a) * rng.uniform(), y2 = a + (b - a) * rng.uniform();
    if (y1 == y2) continue;
    const auto& m = fam.at(k, x);
    worst = std::max(worst, std::abs(m(y1) - m(y2)) / std::abs(y1 - y2) - m.lipschitz());
  }
  return worst;
}

}  // namespace mshift
