#include "mshift/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/observables.hpp"

namespace mshift {

TwistedCocycle::TwistedCocycle(const ChainModel& model, const WindowObservable& f, cd z)
    : model_(&model), z_(z) {
  if (!f.one_sided())
    throw InputError("twisted cocycle needs a one-sided observable; reduce it first");
  if (f.sizes() != model.sizes()) throw InputError("observable and chain disagree on state spaces");
  width_ = std::max<std::size_t>(f.max_future(), 1);
  const std::size_t N = model.horizon();
  if (width_ > N) throw InputError("observable window wider than the horizon");
  steps_ = std::min(f.length(), N - width_ + 1);
  init_spaces();
  twist_.resize(steps_);
  for (std::size_t j = 0; j < steps_; ++j) {
    const auto& t = f.term(j);
    std::size_t full = model.states(j) * spaces_[j + 1].size();
    const auto lifted = extend_right<double>(t.values, full);
    twist_[j].resize(full);
    for (std::size_t i = 0; i < full; ++i) twist_[j][i] = std::exp(z * lifted[i]);
  }
}

TwistedCocycle::TwistedCocycle(const ChainModel& model, std::size_t width)
    : model_(&model), width_(std::max<std::size_t>(width, 1)) {
  const std::size_t N = model.horizon();
  if (width_ > N) throw InputError("window wider than the horizon");
  steps_ = N - width_ + 1;
  init_spaces();
}

void TwistedCocycle::init_spaces() {
  spaces_.clear();
  for (std::size_t j = 0; j <= steps_; ++j)
    spaces_.push_back(window_over(model_->sizes(), j, width_));
}

CVec TwistedCocycle::apply(std::size_t j, std::span<const cd> h) const {
  if (j >= steps_) throw InputError("cocycle step beyond its range");
  if (h.size() != dim(j)) throw InputError("function does not live on the step's window");
  const std::size_t nb = model_->states(j);
  const std::size_t first = model_->states(j + 1);
  const std::size_t out_size = dim(j + 1);
  const std::size_t tail = h.size() / nb;  // configurations of X_{j+1}..X_{j+W-1}
  const auto& b = model_->backward(j);
  const bool twisted = !twist_.empty();
  CVec out(out_size);
  for (std::size_t o = 0; o < out_size; ++o) {
    const auto x = static_cast<Eigen::Index>(o % first);
    const std::size_t base = nb * (o % tail);
    cd acc{};
    for (std::size_t s = 0; s < nb; ++s) {
      cd term = b(x, static_cast<Eigen::Index>(s)) * h[base + s];
      if (twisted) term *= twist_[j][s + nb * o];
      acc += term;
    }
    out[o] = acc;
  }
  return out;
}

CVec TwistedCocycle::apply_adjoint(std::size_t j, std::span<const cd> psi) const {
  if (j >= steps_) throw InputError("cocycle step beyond its range");
  if (psi.size() != dim(j + 1)) throw InputError("functional does not live on the step's window");
  const std::size_t nb = model_->states(j);
  const std::size_t first = model_->states(j + 1);
  const std::size_t tail = dim(j) / nb;
  const auto& b = model_->backward(j);
  const bool twisted = !twist_.empty();
  CVec out(dim(j), cd{});
  for (std::size_t o = 0; o < psi.size(); ++o) {
    const auto x = static_cast<Eigen::Index>(o % first);
    const std::size_t base = nb * (o % tail);
    for (std::size_t s = 0; s < nb; ++s) {
      cd w = b(x, static_cast<Eigen::Index>(s)) * psi[o];
      if (twisted) w *= twist_[j][s + nb * o];
      out[base + s] += w;
    }
  }
  return out;
}

Eigen::MatrixXcd TwistedCocycle::matrix(std::size_t j) const {
  const auto rows = static_cast<Eigen::Index>(dim(j + 1));
  const auto cols = static_cast<Eigen::Index>(dim(j));
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(rows, cols);
  CVec e(dim(j), cd{});
  for (Eigen::Index c = 0; c < cols; ++c) {
    e[static_cast<std::size_t>(c)] = 1.0;
    const auto col = apply(j, e);
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = col[static_cast<std::size_t>(r)];
    e[static_cast<std::size_t>(c)] = 0.0;
  }
  return m;
}

Eigen::MatrixXcd TwistedCocycle::compose(std::size_t j, std::size_t n) const {
  if (j + n > steps_) throw InputError("interval outside the cocycle range");
  const auto d = static_cast<Eigen::Index>(dim(j));
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(d, d);
  for (std::size_t k = j; k < j + n; ++k) m = matrix(k) * m;
  return m;
}

CVec TwistedCocycle::propagate(std::size_t j, std::size_t n, CVec h) const {
  for (std::size_t k = j; k < j + n; ++k) h = apply(k, h);
  return h;
}

CVec TwistedCocycle::pullback(std::size_t j, std::size_t n, CVec psi) const {
  for (std::size_t k = j + n; k-- > j;) psi = apply_adjoint(k, psi);
  return psi;
}

std::vector<cd> TwistedCocycle::characteristic_curve(std::size_t n_max) const {
  if (n_max > steps_) throw InputError("characteristic function requested beyond the horizon");
  std::vector<cd> out;
  out.reserve(n_max);
  CVec h(dim(0), cd{1.0, 0.0});
  for (std::size_t n = 1; n <= n_max; ++n) {
    h = apply(n - 1, h);
    const auto law = model_->window_law(n, width_);
    cd s{};
    for (std::size_t i = 0; i < law.size(); ++i) s += law[i] * h[i];
    out.push_back(s);
  }
  return out;
}

cd TwistedCocycle::characteristic(std::size_t n) const {
  if (n == 0) return {1.0, 0.0};
  return characteristic_curve(n).back();
}

// ---- sequential Perron–Frobenius ---------------------------------------------

namespace {

struct RateFit {
  double c = 0.0;
  double gamma = 0.0;
  bool dominated = true;
};

// Least-squares slope of log values against n over points above the floor;
// C is then the smallest constant that makes C gamma^n dominate those points.
RateFit fit_rate(const std::vector<double>& v, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t n = 1; n < v.size(); ++n)
    if (v[n] > floor) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(v[n]));
    }
  RateFit r;
  if (xs.size() < 2) {
    r.gamma = xs.empty() ? 0.0 : std::exp(ys[0] / xs[0]);
  } else {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
    r.gamma = std::min(1.0, std::exp(sxy / sxx));
  }
  r.c = v.empty() ? 0.0 : v[0];
  for (std::size_t n = 1; n < v.size(); ++n) {
    if (v[n] <= floor) continue;
    if (r.gamma <= 0.0) {
      r.dominated = false;
      continue;
    }
    r.c = std::max(r.c, v[n] / std::pow(r.gamma, static_cast<double>(n)));
  }
  return r;
}

}  // namespace

DecayCurve rpf_decay(const ChainModel& model, std::size_t width, std::span<const double> g,
                     std::size_t j, std::size_t n_max) {
  TwistedCocycle L(model, width);
  if (j + n_max > L.steps()) throw InputError("decay curve runs past the horizon");
  if (g.size() != L.dim(j)) throw InputError("test function does not live on the window");
  const auto law = model.window_law(j, L.width());
  double kappa = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) kappa += law[i] * g[i];

  DecayCurve out;
  CVec h(g.begin(), g.end());
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) h = L.apply(j + n - 1, h);
    CVec centred(h);
    for (auto& v : centred) v -= kappa;
    out.values.push_back(sup_norm(centred) + window_variation(L.space(j + n), centred, model.a()));
  }
  const double scale = std::max(1.0, out.values.front());
  const auto fit = fit_rate(out.values, 1e-13 * scale);
  out.c = fit.c;
  out.gamma = fit.gamma;
  out.dominated = fit.dominated;
  double delta = 0.0;
  for (std::size_t k = j; k < j + n_max; ++k)
    delta = std::max(delta, dobrushin_coefficient(model.backward(k)));
  out.ceiling = delta + model.a();
  return out;
}

double fitted_mixing_rate(const ChainModel& model, std::size_t width, std::size_t j,
                          std::size_t n_max) {
  TwistedCocycle L(model, width);
  n_max = std::min(n_max, L.steps() - j);
  const std::size_t d = std::min<std::size_t>(L.dim(j), 16);
  double rate = 0.0;
  std::vector<double> g(L.dim(j), 0.0);
  for (std::size_t v = 0; v < d; ++v) {
    std::fill(g.begin(), g.end(), 0.0);
    g[v] = 1.0;
    rate = std::max(rate, rpf_decay(model, width, g, j, n_max).gamma);
  }
  return rate;
}

double RpfTriple::interior_residual() const {
  double worst = 0.0;
  const std::size_t steps = lambda.size();
  for (std::size_t j = burn; j + burn < steps; ++j) worst = std::max(worst, residual[j]);
  return worst;
}

cd RpfTriple::log_lambda(std::size_t n) const {
  cd s{};
  for (std::size_t j = 0; j < n; ++j) s += std::log(lambda.at(j));
  return s;
}

namespace {

RpfTriple rpf_with_burn(const TwistedCocycle& L, const ChainModel& model, cd z, std::size_t burn,
                        const RpfOptions& opts) {
  const std::size_t steps = L.steps();
  RpfTriple out;
  out.z = z;
  out.burn = burn;
  out.h.resize(steps + 1);
  out.kappa.resize(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const std::size_t m = std::min(j, burn);
    CVec h(L.dim(j - m), cd{1.0, 0.0});
    for (std::size_t k = j - m; k < j; ++k) {
      h = L.apply(k, h);
      const double s = sup_norm(h);
      if (!(s > opts.collapse))
        throw NumericalError("forward normalizer collapsed at step " + std::to_string(k) +
                             "; try a smaller |z|");
      for (auto& v : h) v /= s;
    }
    const std::size_t e = std::min(steps, j + burn);
    const auto law = model.window_law(e, L.width());
    CVec psi(law.begin(), law.end());
    for (std::size_t k = e; k-- > j;) {
      psi = L.apply_adjoint(k, psi);
      cd s{};
      for (const auto& v : psi) s += v;
      if (!(std::abs(s) > opts.collapse))
        throw NumericalError("adjoint normalizer collapsed at step " + std::to_string(k) +
                             "; try a smaller |z|");
      for (auto& v : psi) v /= s;
    }
    cd pair{};
    for (std::size_t i = 0; i < h.size(); ++i) pair += psi[i] * h[i];
    if (!(std::abs(pair) > opts.collapse))
      throw NumericalError("kappa(h) vanished at index " + std::to_string(j) +
                           "; try a smaller |z|");
    for (auto& v : h) v /= pair;
    out.h[j] = std::move(h);
    out.kappa[j] = std::move(psi);
  }

  out.lambda.resize(steps);
  out.residual.resize(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    const auto lh = L.apply(j, out.h[j]);
    cd lam{};
    for (std::size_t i = 0; i < lh.size(); ++i) lam += out.kappa[j + 1][i] * lh[i];
    out.lambda[j] = lam;
    double r = 0.0;
    for (std::size_t i = 0; i < lh.size(); ++i)
      r = std::max(r, std::abs(lh[i] - lam * out.h[j + 1][i]));
    out.residual[j] = r;
  }
  return out;
}

}  // namespace

RpfTriple complex_rpf(const ChainModel& model, const WindowObservable& f, cd z, RpfOptions opts) {
  TwistedCocycle L(model, f, z);
  const std::size_t steps = L.steps();
  if (steps < 2) throw InputError("horizon too short for the Perron–Frobenius triple");
  const std::size_t cap = std::max<std::size_t>(1, steps / 3);
  if (opts.burn != 0) return rpf_with_burn(L, model, z, std::min(opts.burn, cap), opts);

  const double rate = fitted_mixing_rate(model, L.width(), 0, std::min<std::size_t>(40, steps));
  // A window of width W needs W steps before the contraction even starts.
  std::size_t burn = L.width() + 1;
  if (rate > 0.0 && rate < 1.0)
    burn += static_cast<std::size_t>(std::ceil(std::log(opts.tol) / std::log(rate)));
  burn = std::min(burn, cap);
  // The twist slows forgetting by O(|z|) beyond the untwisted rate, so the
  // burn-in grows until the interior meets the tolerance or hits the cap.
  auto out = rpf_with_burn(L, model, z, burn, opts);
  while (out.interior_residual() > opts.tol && burn < cap) {
    burn = std::min(cap, 2 * burn);
    out = rpf_with_burn(L, model, z, burn, opts);
  }
  return out;
}

LyCheck lasota_yorke_check(const ChainModel& model, const WindowObservable& f,
                           std::span<const cd> h, std::size_t j, std::size_t n_max,
                           std::span<const double> t_grid) {
  double tmax = 0.0;
  for (double t : t_grid) tmax = std::max(tmax, std::abs(t));
  LyCheck out;
  out.constants = ly_constants(model, f, tmax);
  const double a = model.a();
  for (double t : t_grid) {
    TwistedCocycle L(model, f, cd{0.0, t});
    if (j + n_max > L.steps()) throw InputError("Lasota–Yorke check runs past the horizon");
    if (h.size() != L.dim(j)) throw InputError("test function does not live on the window");
    const double hsup = sup_norm(h);
    const double hvar = window_variation(L.space(j), h, a);
    CVec g(h.begin(), h.end());
    for (std::size_t n = 1; n <= n_max; ++n) {
      g = L.apply(j + n - 1, g);
      LyPoint p;
      p.t = t;
      p.n = n;
      const double gs = sup_norm(g);
      p.lhs = gs + window_variation(L.space(j + n), g, a);
      p.rhs_unit = hsup + std::pow(a, static_cast<double>(n)) * hvar;
      p.sup_ratio = hsup > 0 ? gs / hsup : 0.0;
      if (p.rhs_unit > 0) out.c1_empirical = std::max(out.c1_empirical, p.lhs / p.rhs_unit);
      if (p.lhs > out.constants.c1 * p.rhs_unit * (1 + 1e-12) + 1e-14) out.holds = false;
      if (gs > hsup * (1 + 1e-12) + 1e-14) out.sup_contracts = false;
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace mshift
