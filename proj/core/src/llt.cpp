#include "mshift/llt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/parallel.hpp"
#include "mshift/sim.hpp"
#include "mshift/transfer.hpp"

namespace mshift {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

double gauss_shape(double u, double mean, double sigma) {
  const double z = (u - mean) / sigma;
  return std::exp(-0.5 * z * z);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

struct AtomMoments {
  double mean = 0.0, var = 0.0, third = 0.0;
};

AtomMoments atom_moments(const LatticeDistribution& d) {
  AtomMoments m;
  std::vector<double> buf(d.prob.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = d.prob[i] * d.value[i];
  m.mean = pairwise_sum(buf);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = d.prob[i] * std::pow(d.value[i] - m.mean, 2);
  m.var = pairwise_sum(buf);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = d.prob[i] * std::pow(d.value[i] - m.mean, 3);
  m.third = pairwise_sum(buf);
  return m;
}

// Certified upper bounds for ||L^m||, m = 0..len, chaining table entries of
// length at most `chunk`.
std::vector<double> upper_curve(const TwistedCocycle& L, std::size_t len, const LyConstants& c,
                                std::size_t chunk = 8) {
  std::vector<double> best(len + 1, 1.0);
  if (len == 0) return best;
  const auto table = certified_upper_table(L, 0, len, chunk, c);
  for (std::size_t m = 1; m <= len; ++m) {
    best[m] = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= std::min(chunk, m); ++k)
      best[m] = std::min(best[m], best[m - k] * table[m - k][k]);
  }
  return best;
}

double sigma_of(const ChainModel& model, const WindowObservable& f, std::size_t n, double* mean) {
  const std::size_t grid[] = {n};
  const auto mom = forward_moments(model, f, grid);
  if (mean) *mean = mom.mean[0];
  return std::sqrt(mom.variance[0]);
}

std::size_t largest(std::span<const std::size_t> g) {
  if (g.empty()) throw InputError("empty n grid");
  return *std::max_element(g.begin(), g.end());
}

// Second half of a curve never rises above the first half's peak.
bool envelope_decreasing(const std::vector<double>& v) {
  if (v.size() < 2) return true;
  const std::size_t h = v.size() / 2;
  const double a = *std::max_element(v.begin(), v.begin() + static_cast<long>(h));
  const double b = *std::max_element(v.begin() + static_cast<long>(h), v.end());
  return b <= a * (1 + 1e-12);
}

void require_irreducible(const CorangeResult& cr, const char* what) {
  if (cr.all_frequencies)
    throw RefusedError(std::string(what) + ": variance stays bounded, so every frequency is in the corange");
  if (!cr.irreducible)
    throw RefusedError(std::string(what) + ": reducible input (" + cr.message +
                       "); the generalized reducible local law is not implemented");
}

}  // namespace

// ---- lattice LLT ---------------------------------------------------------------

LltReport lattice_llt_check(const ChainModel& model, const WindowObservable& f,
                            std::span<const std::size_t> n_grid, const LatticeLltOptions& opts) {
  if (!f.integer_valued()) throw InputError("lattice LLT needs an integer-valued observable");
  LltReport rep;
  if (opts.run_corange) {
    const auto cr = corange_scan(model, f, opts.corange);
    if (cr.all_frequencies) throw RefusedError("lattice LLT: variance stays bounded");
    if (cr.span_exceeds_one.value_or(false))
      throw RefusedError("lattice LLT: reducible integer sequence (" + cr.message +
                         "); the generalized reducible local law is not implemented");
    rep.labels["corange"] = cr.message;
    rep.regime = to_string(Regime::divergent);
  }
  auto curve = make_curve("lattice_error");
  const std::size_t n_top = largest(n_grid);
  double err_top = 0.0;
  std::vector<double> asymptotic;
  for (std::size_t n : n_grid) {
    const auto d = lattice_distribution(model, f, n, LatticeSpec{.beta = 0.0, .scale = 1.0});
    const auto m = atom_moments(d);
    const double sigma = std::sqrt(m.var);
    double err = 0.0;
    if (sigma > 0) {
      const long lo = static_cast<long>(std::floor(std::min(m.mean - 10 * sigma, d.value.front())));
      const long hi = static_cast<long>(std::ceil(std::max(m.mean + 10 * sigma, d.value.back())));
      std::size_t k = 0;
      for (long u = lo; u <= hi; ++u) {
        while (k < d.value.size() && d.value[k] < static_cast<double>(u) - 0.5) ++k;
        const double p = (k < d.value.size() && std::abs(d.value[k] - static_cast<double>(u)) < 0.5) ? d.prob[k] : 0.0;
        err = std::max(err, std::abs(kSqrt2Pi * sigma * p - gauss_shape(static_cast<double>(u), m.mean, sigma)));
      }
    } else {
      err = std::numeric_limits<double>::infinity();
    }
    curve.x.push_back(static_cast<double>(n));
    curve.y.push_back(err);
    rep.numbers["sigma_n=" + std::to_string(n)] = sigma;
    if (n >= 10) asymptotic.push_back(err);
    if (n == n_top) err_top = err;
  }
  rep.curves.push_back(curve);
  rep.checks.push_back(check_at_most("lattice_error_n=" + std::to_string(n_top), err_top, opts.threshold));
  if (opts.require_envelope && asymptotic.size() >= 2)
    rep.checks.push_back(check_flag("lattice_error_envelope_decreasing", envelope_decreasing(asymptotic)));
  return rep;
}

// ---- non-lattice LLT ------------------------------------------------------------

NonLatticeResult nonlattice_llt_check(const ChainModel& model, const WindowObservable& f,
                                      std::size_t n, const TestKernel& g,
                                      std::span<const double> u_grid,
                                      const NonLatticeOptions& opts) {
  validate_kernel(g);
  if (u_grid.empty()) throw InputError("empty u grid");
  if (!opts.lattice && opts.mc_samples == 0)
    throw InputError("non-lattice check needs an exact lattice route or Monte Carlo samples");
  NonLatticeResult r;
  if (opts.corange) {
    const auto cr = corange_scan(model, f, *opts.corange);
    require_irreducible(cr, "non-lattice LLT");
    r.report.labels["corange"] = cr.message;
  }
  r.sigma = sigma_of(model, f, n, &r.mean);
  if (!(r.sigma > 0)) throw RefusedError("non-lattice LLT: sigma_n = 0 (degenerate sum)");
  r.u.assign(u_grid.begin(), u_grid.end());
  const double mass = g.integral();
  auto display = [&](double u) { return mass * gauss_shape(u, r.mean, r.sigma); };

  if (opts.lattice) {
    const auto d = lattice_distribution(model, f, n, *opts.lattice);
    for (double u : u_grid) {
      const auto lo = std::upper_bound(d.value.begin(), d.value.end(), u + g.support_lo());
      const auto hi = std::lower_bound(d.value.begin(), d.value.end(), u + g.support_hi());
      std::vector<double> terms;
      for (auto it = lo; it < hi; ++it) {
        const auto i = static_cast<std::size_t>(it - d.value.begin());
        terms.push_back(d.prob[i] * g(d.value[i] - u));
      }
      const double e = pairwise_sum(terms);
      r.exact_expect.push_back(e);
      r.error.push_back(std::abs(kSqrt2Pi * r.sigma * e - display(u)));
    }
    r.sup_error = *std::max_element(r.error.begin(), r.error.end());
    r.report.curves.push_back({"nonlattice_error", "u", r.u, r.error, {}});
    r.report.checks.push_back(check_at_most("nonlattice_sup_error", r.sup_error, opts.tolerance));
  }

  if (opts.mc_samples > 0) {
    const auto batch = sample_sums(model, f, n, opts.mc_samples, opts.seed, opts.threads);
    const auto lc = empirical_local_counts(batch.sums, g, u_grid);
    double worst_se = 0.0;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
      const double se = kSqrt2Pi * r.sigma * lc.std_error[i];
      r.mc_expect.push_back(lc.estimate[i]);
      r.mc_expect_se.push_back(lc.std_error[i]);
      r.mc_error.push_back(std::abs(kSqrt2Pi * r.sigma * lc.estimate[i] - display(u_grid[i])));
      r.mc_error_se.push_back(se);
      worst_se = std::max(worst_se, se);
      flagged += lc.flagged[i] ? 1 : 0;
    }
    if (3.0 * worst_se > 0.5 * opts.tolerance) {
      const double factor = std::pow(6.0 * worst_se / opts.tolerance, 2);
      std::ostringstream e;
      e << "Monte Carlo error 3*SE = " << 3.0 * worst_se << " exceeds half the tolerance "
        << opts.tolerance << "; use at least "
        << static_cast<std::size_t>(std::ceil(factor * static_cast<double>(opts.mc_samples)))
        << " samples";
      throw NumericalError(e.str());
    }
    r.mc_sup_error = *std::max_element(r.mc_error.begin(), r.mc_error.end());
    const auto at = static_cast<std::size_t>(
        std::max_element(r.mc_error.begin(), r.mc_error.end()) - r.mc_error.begin());
    r.report.curves.push_back({"nonlattice_error_mc", "u", r.u, r.mc_error, r.mc_error_se});
    r.report.numbers["mc_flagged_bins"] = static_cast<double>(flagged);
    if (!opts.lattice) {
      auto c = check_at_most("nonlattice_sup_error_mc", r.mc_sup_error, opts.tolerance,
                             Provenance::monte_carlo);
      c.std_error = r.mc_error_se[at];
      r.report.checks.push_back(c);
    } else {
      for (std::size_t i = 0; i < u_grid.size(); ++i)
        if (lc.std_error[i] > 0)
          r.max_z = std::max(r.max_z, std::abs(r.exact_expect[i] - lc.estimate[i]) / lc.std_error[i]);
        else if (std::abs(r.exact_expect[i] - lc.estimate[i]) > 1e-12)
          r.max_z = std::numeric_limits<double>::infinity();
      r.report.checks.push_back(check_at_most("mc_vs_exact_max_z", r.max_z, 3.0, Provenance::monte_carlo));
    }
  }
  r.report.numbers["sigma_n"] = r.sigma;
  r.report.numbers["mean"] = r.mean;
  return r;
}

// ---- Edgeworth ------------------------------------------------------------------

EdgeworthResult edgeworth_check(const ChainModel& model, const WindowObservable& f,
                                std::span<const std::size_t> n_grid, const LatticeSpec& lattice,
                                double tolerance) {
  if (n_grid.empty()) throw InputError("empty n grid");
  EdgeworthResult out;
  const double peak = 1.0 / kSqrt2Pi;  // sup |(1 - x^2) phi(x)|, attained at 0
  for (std::size_t n : n_grid) {
    const auto d = lattice_distribution(model, f, n, lattice);
    const auto m = atom_moments(d);
    const double s = std::sqrt(m.var);
    if (!(s > 0)) throw RefusedError("Edgeworth check: sigma_n = 0");
    const double k = m.third / (6.0 * s * s * s);
    EdgeworthPoint p{n, s, m.third, 0, 0, 0, s * std::abs(k) * peak};
    double cum = 0.0;
    auto probe = [&](double x, double F) {
      const double base = F - normal_cdf(x);
      p.residual_gauss = std::max(p.residual_gauss, std::abs(base));
      p.residual_paper = std::max(p.residual_paper, std::abs(base - k * (x * x * x - 3 * x) * normal_pdf(x)));
      p.residual_classical = std::max(p.residual_classical, std::abs(base - k * (1 - x * x) * normal_pdf(x)));
    };
    for (std::size_t i = 0; i < d.value.size(); ++i) {
      const double x = (d.value[i] - m.mean) / s;
      probe(x, cum);  // left limit
      cum += d.prob[i];
      probe(x, cum);
    }
    p.residual_gauss *= s;
    p.residual_paper *= s;
    p.residual_classical *= s;
    out.points.push_back(p);
  }
  const auto& last = out.points.back();
  const bool classical = last.residual_classical <= last.residual_paper;
  out.best_variant = classical ? "classical" : "cubic";
  auto cg = make_curve("edgeworth_residual_gauss"), cp = make_curve("edgeworth_residual_cubic"),
       cc = make_curve("edgeworth_residual_classical"), cs = make_curve("edgeworth_correction_scale");
  std::vector<double> best;
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (const auto& p : out.points) {
    const double x = static_cast<double>(p.n);
    cg.x.push_back(x), cg.y.push_back(p.residual_gauss);
    cp.x.push_back(x), cp.y.push_back(p.residual_paper);
    cc.x.push_back(x), cc.y.push_back(p.residual_classical);
    cs.x.push_back(x), cs.y.push_back(p.correction_scale);
    best.push_back(classical ? p.residual_classical : p.residual_paper);
    cmin = std::min(cmin, p.correction_scale);
    cmax = std::max(cmax, p.correction_scale);
  }
  out.correction_ratio = cmax == 0.0 ? 1.0 : cmax / cmin;
  out.report.curves = {cg, cp, cc, cs};
  out.report.labels["best_variant"] = out.best_variant;
  bool monotone = true;
  for (std::size_t i = 1; i < best.size(); ++i) monotone = monotone && best[i] <= best[i - 1] * (1 + 1e-12);
  out.report.checks.push_back(check_flag("edgeworth_best_residual_nonincreasing", monotone));
  out.report.checks.push_back(check_at_most("edgeworth_best_residual_n=" + std::to_string(last.n),
                                            best.back(), tolerance));
  out.report.checks.push_back(check_at_most("edgeworth_correction_scale_ratio", out.correction_ratio, 1.1));
  return out;
}

// ---- norm decay near t = 0 and away from it ------------------------------------------

SmallTFit small_t_gaussian_bound(const ChainModel& model, const WindowObservable& f, double delta,
                                 std::span<const std::size_t> n_grid, std::size_t t_points) {
  if (!(delta > 0)) throw InputError("delta must be positive");
  if (t_points == 0) throw InputError("need at least one frequency");
  SmallTFit fit;
  const std::size_t n_top = largest(n_grid);
  const auto mom = exact_moments(model, f, n_grid);
  const auto regime = variance_regime(model, f, n_top);
  fit.degenerate = regime.regime == Regime::bounded;
  fit.report.regime = to_string(regime.regime);
  const auto c = ly_constants(model, f, delta);

  std::vector<double> xs, ys;
  double c_lower = 0.0;
  for (std::size_t k = 1; k <= t_points; ++k) {
    const double t = delta * static_cast<double>(k) / static_cast<double>(t_points);
    const TwistedCocycle L(model, f, cd{0.0, t});
    const auto up = upper_curve(L, n_top, c);
    const auto phi = L.characteristic_curve(n_top);
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      const std::size_t n = n_grid[i];
      const double U = up[n], lo = std::abs(phi[n - 1]);
      if (lo > U * (1 + 1e-9) + 1e-12) fit.lower_consistent = false;
      const double x = mom.variance[i] * t * t;
      if (x <= 0) continue;
      xs.push_back(x);
      ys.push_back(std::log(U));
      c_lower = lo > 0 ? std::max(c_lower, -std::log(lo) / x) : std::numeric_limits<double>::infinity();
    }
  }
  fit.c_lower = c_lower;
  fit.report.checks.push_back(check_flag("small_t_lower_below_certified_upper", fit.lower_consistent,
                                         Provenance::certified_bound));
  if (fit.degenerate || xs.size() < 2) {
    fit.report.notes.push_back("variance bounded: the Gaussian fit is undefined and norms stay bounded below");
    return fit;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i], sy += ys[i], sxx += xs[i] * xs[i], sxy += xs[i] * ys[i];
  }
  fit.c2 = std::max(0.0, -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
  fit.big_c2 = 1.0;  // t = 0 gives norm 1
  for (std::size_t i = 0; i < xs.size(); ++i) fit.big_c2 = std::max(fit.big_c2, std::exp(ys[i] + fit.c2 * xs[i]));
  fit.report.numbers["c2"] = fit.c2;
  fit.report.numbers["C2"] = fit.big_c2;
  fit.report.numbers["c_lower"] = fit.c_lower;
  fit.report.checks.push_back(check_at_least("small_t_c2_positive", fit.c2, 1e-12, Provenance::certified_bound));
  return fit;
}

SuffCurve suff_integral(const ChainModel& model, const WindowObservable& f, double delta, double T,
                        std::span<const std::size_t> n_grid, bool lattice_variant,
                        std::size_t t_points, std::size_t threads) {
  if (!(delta > 0)) throw InputError("delta must be positive");
  const double hi = lattice_variant ? 2 * M_PI - delta : T;
  if (!(hi > delta)) throw InputError("empty frequency range");
  if (t_points < 2) throw InputError("need at least two frequencies");
  if (lattice_variant && !f.integer_valued()) throw InputError("lattice variant needs integer values");
  SuffCurve out;
  const std::size_t n_top = largest(n_grid);
  const auto mom = exact_moments(model, f, n_grid);
  for (double v : mom.variance)
    if (!(v > 0)) throw RefusedError("sigma_n = 0: the scaled integral is degenerate");

  CorangeOptions co;
  co.t_max = lattice_variant ? 2 * M_PI + 0.05 : T;
  co.resolution = 1e-3;
  co.n_max = std::min<std::size_t>(200, n_top);
  co.threads = threads;
  const auto cr = corange_scan(model, f, co);
  if (cr.all_frequencies) throw RefusedError("variance bounded; the integral criterion does not apply");
  if (lattice_variant ? cr.span_exceeds_one.value_or(false) : !cr.irreducible)
    throw RefusedError("reducible input (" + cr.message + "); the integral criterion does not apply");
  out.report.labels["corange"] = cr.message;

  const auto c = ly_constants(model, f, hi);
  std::vector<double> ts(t_points);
  for (std::size_t k = 0; k < t_points; ++k)
    ts[k] = delta + (hi - delta) * static_cast<double>(k) / static_cast<double>(t_points - 1);
  std::vector<std::vector<double>> up(t_points);
  parallel_for(t_points, threads, [&](std::size_t k) {
    up[k] = upper_curve(TwistedCocycle(model, f, cd{0.0, ts[k]}), n_top, c);
  });
  const double h = (hi - delta) / static_cast<double>(t_points - 1);
  const double sides = lattice_variant ? 1.0 : 2.0;
  auto cv = make_curve(lattice_variant ? "suff_lattice_scaled" : "suff_scaled");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    std::vector<double> w(t_points);
    for (std::size_t k = 0; k < t_points; ++k)
      w[k] = up[k][n_grid[i]] * ((k == 0 || k + 1 == t_points) ? 0.5 : 1.0);
    const double val = sides * h * pairwise_sum(w) * std::sqrt(mom.variance[i]);
    out.n.push_back(n_grid[i]);
    out.scaled.push_back(val);
    cv.x.push_back(static_cast<double>(n_grid[i]));
    cv.y.push_back(val);
  }
  out.decreasing = envelope_decreasing(out.scaled) && out.scaled.back() < out.scaled.front();
  out.report.curves.push_back(cv);
  out.report.checks.push_back(check_flag("suff_scaled_decreasing", out.decreasing, Provenance::certified_bound));
  return out;
}

// ---- two-sided observables ------------------------------------------------------------

LltReport two_sided_llt(const ChainModel& model, const WindowObservable& f,
                        const TwoSidedOptions& opts) {
  LltReport rep;
  if (f.one_sided()) {
    const auto cr = corange_scan(model, f, opts.corange);
    rep.labels["corange"] = cr.message;
    rep.notes.push_back("observable already one-sided; no reduction needed");
    return rep;
  }
  const auto ar = validate_assumptions(model);
  if (!ar.conditional)
    throw RefusedError("two-sided mode needs a finite conditional-bound constant; got " +
                       std::to_string(ar.cond_constant));
  const double C = ar.cond_constant;
  rep.numbers["cond_constant"] = C;

  const auto red = sinai_reduce(f, opts.anchor);
  rep.numbers["sinai_residual"] = red.residual;
  rep.checks.push_back(check_at_most("sinai_reconstruction_residual", red.residual, 1e-12));
  const auto& g = red.reduced;
  const std::size_t P = f.max_past();

  if (!opts.t_grid.empty() && !opts.n_grid.empty()) {
    const std::size_t n_top = largest(opts.n_grid);
    if (n_top <= P) throw InputError("n grid must exceed the past depth");
    double tmax = 0.0;
    for (double t : opts.t_grid) tmax = std::max(tmax, std::abs(t));
    const auto c = ly_constants(model, g, tmax);
    double worst = 0.0;
    for (double t : opts.t_grid) {
      const auto phi = forward_characteristic(model, f, t, n_top);
      const auto up = upper_curve(TwistedCocycle(model, g, cd{0.0, t}), n_top - P, c);
      for (std::size_t n : opts.n_grid) {
        if (n <= P) continue;
        worst = std::max(worst, std::abs(phi[n - 1]) / (C * up[n - P]));
      }
    }
    rep.numbers["charest_worst_ratio"] = worst;
    rep.checks.push_back(check_at_most("charest_domination_ratio", worst, 1.0 + 1e-9,
                                       Provenance::certified_bound));
  }

  const auto cf = corange_scan(model, f, opts.corange);
  const auto cg = corange_scan(model, g, opts.corange);
  rep.labels["corange_f"] = cf.message;
  rep.labels["corange_g"] = cg.message;
  bool agree = cf.all_frequencies == cg.all_frequencies && cf.irreducible == cg.irreducible &&
               cf.t0.has_value() == cg.t0.has_value();
  if (agree && cf.t0) agree = std::abs(*cf.t0 - *cg.t0) <= opts.corange.resolution;
  if (cf.t0) rep.numbers["t0_f"] = *cf.t0;
  if (cg.t0) rep.numbers["t0_g"] = *cg.t0;
  rep.checks.push_back(check_flag("corange_f_matches_reduction", agree));

  const auto vr = variance_regime(model, g);
  rep.regime = to_string(vr.regime);
  return rep;
}

}  // namespace mshift
