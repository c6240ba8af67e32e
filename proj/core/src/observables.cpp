#include "mshift/observables.hpp"

#include <algorithm>
#include <cmath>

#include "mshift/error.hpp"

namespace mshift {

namespace {

bool near_integer(double v) { return std::abs(v - std::round(v)) <= kIntegerTol; }

}  // namespace

WindowObservable::WindowObservable(std::vector<std::size_t> sizes, std::vector<WindowTerm> terms)
    : sizes_(std::move(sizes)), terms_(std::move(terms)) {
  if (sizes_.empty()) throw InputError("observable needs state-space sizes");
  const std::size_t horizon = sizes_.size() - 1;
  integer_ = true;
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    const auto& t = terms_[j];
    if (t.past > j || j + t.future > horizon)
      throw InputError("window of term " + std::to_string(j) + " leaves the horizon");
    const auto shp = shape(j);
    if (t.values.size() != shp.size())
      throw InputError("term " + std::to_string(j) + " has " + std::to_string(t.values.size()) +
                       " values, expected " + std::to_string(shp.size()));
    for (double v : t.values) {
      if (!std::isfinite(v)) throw InputError("non-finite observable value");
      integer_ = integer_ && near_integer(v);
    }
    max_past_ = std::max(max_past_, t.past);
    max_future_ = std::max(max_future_, t.future);
  }
  if (terms_.empty()) integer_ = false;
}

WindowShape WindowObservable::shape(std::size_t j) const {
  const auto& t = terms_[j];
  return window_over(sizes_, j - t.past, t.past + t.future + 1);
}

double WindowObservable::evaluate(std::size_t j, std::span<const std::size_t> path) const {
  const auto& t = terms_[j];
  const std::size_t lo = j - t.past;
  std::size_t idx = 0;
  for (std::size_t i = j + t.future + 1; i-- > lo;) idx = idx * sizes_[i] + path[i];
  return t.values[idx];
}

double WindowObservable::partial_sum(std::size_t n, std::span<const std::size_t> path) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += evaluate(j, path);
  return s;
}

WindowObservable WindowObservable::prefix(std::size_t n) const {
  if (n > terms_.size()) throw InputError("prefix longer than the observable");
  return WindowObservable(sizes_, std::vector<WindowTerm>(terms_.begin(), terms_.begin() + n));
}

WindowObservable tabulate(std::span<const std::size_t> sizes, std::size_t n, std::size_t past,
                          std::size_t future, const TermFunction& fn) {
  std::vector<std::size_t> sz(sizes.begin(), sizes.end());
  std::vector<WindowTerm> terms(n);
  std::vector<std::size_t> coords;
  for (std::size_t j = 0; j < n; ++j) {
    auto& t = terms[j];
    t.past = std::min(past, j);
    if (j + future >= sz.size()) throw InputError("window of term leaves the horizon");
    t.future = future;
    const auto shp = window_over(sz, j - t.past, t.past + t.future + 1);
    coords.resize(shp.width());
    t.values.resize(shp.size());
    for (std::size_t idx = 0; idx < shp.size(); ++idx) {
      shp.decode(idx, coords);
      t.values[idx] = fn(j, coords);
    }
  }
  return WindowObservable(std::move(sz), std::move(terms));
}

WindowObservable coordinate_observable(std::span<const std::size_t> sizes, std::size_t n,
                                       std::span<const double> values,
                                       std::span<const double> scales) {
  if (!scales.empty() && scales.size() < n) throw InputError("too few scale factors");
  for (std::size_t j = 0; j < n; ++j)
    if (sizes[j] > values.size()) throw InputError("coordinate values do not cover the states");
  return tabulate(sizes, n, 0, 0, [&](std::size_t j, std::span<const std::size_t> x) {
    return (scales.empty() ? 1.0 : scales[j]) * values[x[0]];
  });
}

WindowObservable coboundary_observable(std::span<const std::size_t> sizes, std::size_t n,
                                       const std::vector<std::vector<double>>& w) {
  if (w.size() < n + 1) throw InputError("coboundary needs w_0..w_n");
  return tabulate(sizes, n, 0, 1, [&](std::size_t j, std::span<const std::size_t> x) {
    return w[j].at(x[0]) - w[j + 1].at(x[1]);
  });
}

WindowTerm widen(const WindowTerm& t, std::span<const std::size_t> sizes, std::size_t j,
                 std::size_t past, std::size_t future) {
  if (past < t.past || future < t.future) throw InputError("widen cannot shrink a window");
  if (past == t.past && future == t.future) return t;
  std::size_t lead = 1;
  for (std::size_t i = j - past; i < j - t.past; ++i) lead *= sizes[i];
  std::size_t trail = 1;
  for (std::size_t i = j + t.future + 1; i <= j + future; ++i) trail *= sizes[i];
  WindowTerm out;
  out.past = past;
  out.future = future;
  auto left = extend_left<double>(t.values, lead);
  out.values = extend_right<double>(left, left.size() * trail);
  return out;
}

namespace {

template <class F>
WindowObservable combine(const WindowObservable& f, const WindowObservable& g, F op) {
  if (f.sizes() != g.sizes()) throw InputError("observables live on different chains");
  const std::size_t n = std::min(f.length(), g.length());
  std::vector<WindowTerm> terms(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t p = std::max(f.term(j).past, g.term(j).past);
    const std::size_t q = std::max(f.term(j).future, g.term(j).future);
    auto a = widen(f.term(j), f.sizes(), j, p, q);
    const auto b = widen(g.term(j), g.sizes(), j, p, q);
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = op(a.values[i], b.values[i]);
    terms[j] = std::move(a);
  }
  return WindowObservable(f.sizes(), std::move(terms));
}

}  // namespace

WindowObservable add(const WindowObservable& f, const WindowObservable& g) {
  return combine(f, g, [](double x, double y) { return x + y; });
}

WindowObservable add_constants(const WindowObservable& f, std::span<const double> c) {
  if (c.size() < f.length()) throw InputError("too few constants");
  auto terms = f.terms();
  for (std::size_t j = 0; j < terms.size(); ++j)
    for (auto& v : terms[j].values) v += c[j];
  return WindowObservable(f.sizes(), std::move(terms));
}

WindowObservable scale(const WindowObservable& f, double s) {
  auto terms = f.terms();
  for (auto& t : terms)
    for (auto& v : t.values) v *= s;
  return WindowObservable(f.sizes(), std::move(terms));
}

namespace {

// Positions with |i - origin| < d form the contiguous range [lo, hi).
std::pair<std::size_t, std::size_t> agreement_range(std::size_t width, std::size_t origin,
                                                    std::size_t d) {
  if (d == 0) return {0, 0};
  const std::size_t lo = origin >= d - 1 ? origin - (d - 1) : 0;
  const std::size_t hi = std::min(width, origin + d);
  return {lo, hi};
}

template <class T, class Osc>
double variation_impl(const WindowShape& shape, std::span<const T> values, std::size_t origin,
                      double a, Osc osc) {
  if (values.size() != shape.size()) throw InputError("table does not match its window");
  const std::size_t w = shape.width();
  if (w == 0 || values.size() < 2) return 0.0;
  const std::size_t max_d = std::max(origin, w - 1 - origin);
  double best = 0.0;
  std::vector<std::vector<T>> groups;
  for (std::size_t d = 0; d <= max_d; ++d) {
    const auto [lo, hi] = agreement_range(w, origin, d);
    const std::size_t stride = shape.prefix_size(lo);
    const std::size_t span = shape.prefix_size(hi) / stride;
    groups.assign(span, {});
    for (std::size_t idx = 0; idx < values.size(); ++idx)
      groups[(idx / stride) % span].push_back(values[idx]);
    double o = 0.0;
    for (const auto& g : groups) o = std::max(o, osc(g));
    best = std::max(best, o * std::pow(a, -static_cast<double>(d)));
  }
  return best;
}

}  // namespace

double variation(const WindowShape& shape, std::span<const double> values, std::size_t origin,
                 double a) {
  return variation_impl<double>(shape, values, origin, a, [](const std::vector<double>& g) {
    if (g.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
    return *mx - *mn;
  });
}

double variation(const WindowShape& shape, std::span<const std::complex<double>> values,
                 std::size_t origin, double a) {
  return variation_impl<std::complex<double>>(
      shape, values, origin, a, [](const std::vector<std::complex<double>>& g) {
        double d = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
          for (std::size_t k = i + 1; k < g.size(); ++k) d = std::max(d, std::abs(g[i] - g[k]));
        return d;
      });
}

double term_variation(const WindowObservable& f, std::size_t j, double a) {
  return variation(f.shape(j), std::span<const double>(f.term(j).values), f.term(j).past, a);
}

NormData norm_data(const WindowObservable& f, double a) {
  NormData nd;
  for (std::size_t j = 0; j < f.length(); ++j) {
    for (double v : f.term(j).values) nd.sup_norm = std::max(nd.sup_norm, std::abs(v));
    nd.variation = std::max(nd.variation, term_variation(f, j, a));
  }
  return nd;
}

}  // namespace mshift
