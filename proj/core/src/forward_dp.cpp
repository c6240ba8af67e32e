#include <algorithm>
#include <cmath>
#include <complex>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/llt.hpp"
#include "mshift/transfer.hpp"

namespace mshift {

namespace {

// Values of a term on every configuration of a window whose position `offset`
// holds the term's earliest coordinate.
std::vector<double> term_on(const WindowShape& win, const WindowTerm& t, std::size_t offset) {
  const std::size_t w = t.past + t.future + 1;
  std::vector<std::size_t> stride(w, 1);
  for (std::size_t i = 1; i < w; ++i) stride[i] = stride[i - 1] * win.radix(offset + i - 1);
  std::vector<double> out(win.size());
  for (std::size_t idx = 0; idx < win.size(); ++idx) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < w; ++i) k += win.coordinate(idx, offset + i) * stride[i];
    out[idx] = t.values[k];
  }
  return out;
}

}  // namespace

ForwardLayout::ForwardLayout(const ChainModel& model, const WindowObservable& f, std::size_t n)
    : n_(n) {
  if (n == 0) throw InputError("forward layout needs at least one term");
  if (n > f.length()) throw InputError("partial sum longer than the observable");
  if (f.sizes() != model.sizes()) throw InputError("observable and chain disagree on state spaces");
  std::size_t P = 0, Q = 0;
  for (std::size_t k = 0; k < n; ++k) {
    P = std::max(P, f.term(k).past);
    Q = std::max(Q, f.term(k).future);
  }
  if (n - 1 + Q > model.horizon()) throw InputError("partial sum needs coordinates past the horizon");
  width_ = P + Q + 1;
  init_terms_ = std::min(n, P + 1);
  const auto& sizes = model.sizes();
  for (std::size_t s = 0; s <= n_ - init_terms_; ++s) spaces_.push_back(window_over(sizes, s, width_));
  law_ = model.window_law(0, width_);
  for (std::size_t k = 0; k < init_terms_; ++k)
    init_values_.push_back(term_on(spaces_[0], f.term(k), k - f.term(k).past));
  for (std::size_t s = 1; s < spaces_.size(); ++s) {
    const std::size_t k = P + s;
    ext_values_.push_back(term_on(spaces_[s], f.term(k), k - f.term(k).past - s));
    kernels_.push_back(&model.forward(width_ - 2 + s));
  }
}

namespace {

using cplx = std::complex<double>;

// Sweeps the layout once; `record(m, weights)` sees the state weights after the
// first m terms have been applied.
template <class Record>
void sweep(const ForwardLayout& lay, std::vector<cplx> w, double t, Record&& record) {
  std::vector<cplx> phase(w.size(), cplx{1.0, 0.0});
  for (std::size_t k = 0; k < lay.init_terms(); ++k) {
    const auto& v = lay.initial_term(k);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= std::polar(1.0, t * v[i]);
    record(k + 1, w);
  }
  for (std::size_t s = 1; s <= lay.extensions(); ++s) {
    std::vector<cplx> next(lay.space(s).size());
    lay.for_each_move(s, [&](std::size_t from, std::size_t to, double p) { next[to] += w[from] * p; });
    const auto& v = lay.extension_term(s);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] *= std::polar(1.0, t * v[i]);
    w = std::move(next);
    record(lay.init_terms() + s, w);
  }
}

cplx total(const std::vector<cplx>& w) {
  // Pairwise order keeps the result independent of how callers batch frequencies.
  std::vector<double> re(w.size()), im(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    re[i] = w[i].real();
    im[i] = w[i].imag();
  }
  auto pw = [](auto&& self, const double* p, std::size_t m) -> double {
    if (m <= 8) {
      double s = 0;
      for (std::size_t i = 0; i < m; ++i) s += p[i];
      return s;
    }
    return self(self, p, m / 2) + self(self, p + m / 2, m - m / 2);
  };
  return {pw(pw, re.data(), re.size()), pw(pw, im.data(), im.size())};
}

}  // namespace

std::vector<std::complex<double>> forward_characteristic(const ChainModel& model,
                                                         const WindowObservable& f, double t,
                                                         std::size_t n) {
  const ForwardLayout lay(model, f, n);
  std::vector<cplx> w(lay.initial_law().begin(), lay.initial_law().end());
  std::vector<cplx> out(n);
  sweep(lay, std::move(w), t, [&](std::size_t m, const std::vector<cplx>& v) { out[m - 1] = total(v); });
  return out;
}

std::vector<std::complex<double>> characteristic_curve(const ChainModel& model,
                                                       const WindowObservable& f, double t,
                                                       std::size_t n) {
  if (f.one_sided()) {
    const TwistedCocycle L(model, f, cd{0.0, t});
    if (n <= L.steps()) return L.characteristic_curve(n);
  }
  return forward_characteristic(model, f, t, n);
}

std::vector<double> bridge_sup_curve(const ChainModel& model, const WindowObservable& f, double t,
                                     std::size_t n) {
  const ForwardLayout lay(model, f, n);
  const auto& law = lay.initial_law();
  std::vector<double> out(n, 0.0);
  for (std::size_t start = 0; start < law.size(); ++start) {
    if (!(law[start] > 0.0)) continue;
    std::vector<cplx> w(law.size());
    w[start] = 1.0;
    std::vector<double> mass(law.size());
    mass[start] = 1.0;
    std::size_t seen = 0;
    sweep(lay, w, t, [&](std::size_t m, const std::vector<cplx>& v) {
      // Track the untwisted mass alongside so ratios condition on the end window.
      if (m > lay.init_terms() && m - lay.init_terms() > seen) {
        const std::size_t s = m - lay.init_terms();
        std::vector<double> next(lay.space(s).size());
        lay.for_each_move(s, [&](std::size_t a, std::size_t b, double p) { next[b] += mass[a] * p; });
        mass = std::move(next);
        seen = s;
      }
      double best = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (mass[i] > 1e-300) best = std::max(best, std::abs(v[i]) / mass[i]);
      out[m - 1] = std::max(out[m - 1], best);
    });
  }
  return out;
}

}  // namespace mshift
