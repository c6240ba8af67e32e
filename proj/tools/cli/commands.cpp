#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/kernel.hpp"
#include "mshift/llt.hpp"
#include "mshift/matrix_products.hpp"
#include "mshift/processes.hpp"
#include "mshift/sim.hpp"
#include "mshift/transfer.hpp"
#include "report_io.hpp"

namespace mshift::cli {
namespace {

const Json kEmpty = Json::object();

const Json& block(const Json& a, const char* key) { return a.contains(key) ? a.at(key) : kEmpty; }

double num(const Json& b, const char* key, double fallback) {
  return b.contains(key) ? b.at(key).get<double>() : fallback;
}

std::size_t cnt(const Json& b, const char* key, std::size_t fallback) {
  if (!b.contains(key)) return fallback;
  const auto& v = b.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw SchemaError(std::string("/analysis/.../") + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<double> reals(const Json& b, const char* key, std::vector<double> fallback) {
  if (!b.contains(key)) return fallback;
  return b.at(key).get<std::vector<double>>();
}

std::vector<std::size_t> sizes_of(const Json& b, const char* key, std::vector<std::size_t> fallback) {
  if (!b.contains(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& v : b.at(key)) {
    if (!v.is_number_integer() || v.get<long long>() <= 0)
      throw SchemaError(std::string("/analysis/") + key, "grid entries must be positive integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

Curve curve(std::string name, std::string x_label, std::vector<double> x, std::vector<double> y,
            std::vector<double> se = {}) {
  Curve c = make_curve(std::move(name), std::move(x_label));
  c.x = std::move(x);
  c.y = std::move(y);
  c.se = std::move(se);
  return c;
}

std::vector<double> as_double(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::vector<double> iota_from(std::size_t first, std::size_t count) {
  std::vector<double> x(count);
  for (std::size_t i = 0; i < count; ++i) x[i] = static_cast<double>(first + i);
  return x;
}

Json optional_index(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

// Everything a command needs, resolved once.
struct Context {
  const Scenario& s;
  const Overrides& o;
  ChainModel model;
  const Json& a;

  Context(const Scenario& sc, const Overrides& ov) : s(sc), o(ov), model(sc.chain), a(sc.analysis) {}

  std::uint64_t seed() const { return o.seed ? *o.seed : cnt(a, "seed", 1); }
  std::size_t threads() const { return o.threads ? *o.threads : std::max<std::size_t>(1, cnt(a, "threads", 1)); }
  double tolerance(double fallback) const { return o.tolerance ? *o.tolerance : num(a, "tolerance", fallback); }

  const WindowObservable& f() const {
    if (s.observable.f.length() == 0) throw InputError("scenario has no observable block");
    return s.observable.f;
  }

  std::vector<std::size_t> n_grid() const {
    const std::size_t L = f().length();
    std::vector<std::size_t> fallback;
    for (std::size_t n : {L / 4, L / 2, L})
      if (n > 0 && (fallback.empty() || fallback.back() != n)) fallback.push_back(n);
    auto g = sizes_of(a, "n_grid", fallback);
    for (std::size_t n : g)
      if (n > L) throw SchemaError("/analysis/n_grid", "entry " + std::to_string(n) + " exceeds the observable length");
    return g;
  }

  CorangeOptions corange() const {
    const auto& b = block(a, "corange");
    CorangeOptions c;
    c.t_max = num(b, "t_max", c.t_max);
    c.resolution = num(b, "resolution", c.resolution);
    c.n_max = std::min(cnt(b, "n_max", c.n_max), f().length());
    c.samples = cnt(b, "samples", c.samples);
    c.seed = cnt(b, "seed", c.seed);
    c.threads = threads();
    return c;
  }

  std::optional<LatticeSpec> lattice() const {
    if (!a.contains("lattice")) return std::nullopt;
    const auto& b = a.at("lattice");
    LatticeSpec l;
    l.beta = num(b, "beta", l.beta);
    l.scale = num(b, "scale", l.scale);
    l.b_bound = static_cast<long>(cnt(b, "b_bound", static_cast<std::size_t>(l.b_bound)));
    l.max_atoms = cnt(b, "max_atoms", l.max_atoms);
    return l;
  }

  TestKernel kernel() const {
    const auto& b = block(a, "kernel");
    if (b.contains("x")) {
      TestKernel g{b.at("x").get<std::vector<double>>(), reals(b, "y", {})};
      validate_kernel(g);
      return g;
    }
    return TestKernel::triangle(num(b, "half_width", 1.0));
  }

  // Explicit grid, or u_points evenly spread over mean +- 4 sd of S_n.
  std::vector<double> u_grid(std::size_t n) const {
    if (a.contains("u_grid")) return a.at("u_grid").get<std::vector<double>>();
    const std::size_t points = std::max<std::size_t>(2, cnt(a, "u_points", 17));
    const std::size_t at[] = {n};
    const auto m = forward_moments(model, f(), at);
    const double sd = std::sqrt(std::max(m.variance[0], 0.0));
    std::vector<double> u(points);
    for (std::size_t i = 0; i < points; ++i)
      u[i] = m.mean[0] + sd * (-4.0 + 8.0 * static_cast<double>(i) / static_cast<double>(points - 1));
    return u;
  }

  void require_llt_assumptions() const {
    const auto r = validate_assumptions(model);
    require_ellipticity(r);
    require_contraction(r);
  }
};

void adopt(CommandResult& r, const LltReport& rep, const std::string& key = "report") {
  // Checks and curves are listed once, at the top level.
  Json j = report_to_json(rep, r.name);
  j.erase("checks");
  j.erase("curves");
  j.erase("pass");
  r.doc[key] = std::move(j);
  r.checks.insert(r.checks.end(), rep.checks.begin(), rep.checks.end());
  r.curves.insert(r.curves.end(), rep.curves.begin(), rep.curves.end());
}

// ---- commands ------------------------------------------------------------------

void cmd_validate(Context& c, CommandResult& r) {
  const auto ar = validate_assumptions(c.model);
  r.doc["horizon"] = c.model.horizon();
  const auto& sz = c.model.sizes();
  if (std::all_of(sz.begin(), sz.end(), [&](std::size_t m) { return m == sz.front(); }))
    r.doc["states"] = sz.front();
  else
    r.doc["states"] = sz;
  r.doc["delta"] = ar.delta;
  r.doc["zeta"] = ar.zeta;
  r.doc["n0"] = ar.n0;
  r.doc["cond_constant"] = ar.cond_constant;
  r.doc["contraction"] = ar.contraction;
  r.doc["ellipticity"] = ar.ellipticity;
  r.doc["conditional"] = ar.conditional;
  r.doc["first_contraction_failure"] = optional_index(ar.first_contraction_failure);
  r.doc["first_ellipticity_failure"] = optional_index(ar.first_ellipticity_failure);
  r.checks.push_back(check_flag("contraction", ar.contraction));
  r.checks.push_back(check_flag("ellipticity", ar.ellipticity));
  r.checks.push_back(check_flag("conditional", ar.conditional));
  r.curves.push_back(curve("dobrushin", "j", iota_from(0, ar.pi.size()), ar.pi));
  r.curves.push_back(curve("backward_floor", "j", iota_from(0, ar.zeta_per_step.size()), ar.zeta_per_step));
}

void cmd_moments(Context& c, CommandResult& r) {
  const auto& f = c.f();
  const auto grid = c.n_grid();
  const auto m = f.one_sided() ? exact_moments(c.model, f, grid) : forward_moments(c.model, f, grid);
  r.doc["n"] = m.n;
  r.doc["mean"] = m.mean;
  r.doc["variance"] = m.variance;
  r.doc["third"] = m.third;
  const auto reg = variance_regime(c.model, f);
  r.doc["regime"] = to_string(reg.regime);
  r.doc["slope"] = reg.slope;
  r.doc["tail_increase"] = reg.tail_increase;
  r.doc["max_variance"] = reg.max_variance;
  r.doc["evidence"] = reg.evidence;
  if (reg.decomposition) {
    const auto& d = *reg.decomposition;
    r.doc["decomposition"] = {{"residual", d.residual},
                              {"martingale_defect", d.martingale_defect},
                              {"martingale_variance_sum", d.martingale_variance_sum},
                              {"depth", d.depth}};
    r.checks.push_back(check_at_most("decomposition_residual", d.residual, 1e-8));
  }
  r.curves.push_back(curve("variance", "n", iota_from(1, reg.variance.size()), reg.variance));
}

void cmd_rpf(Context& c, CommandResult& r) {
  const auto& f = c.f();
  if (!f.one_sided()) throw InputError("rpf needs a one-sided observable (run the Sinai reduction first)");
  const auto& b = block(c.a, "rpf");
  std::vector<cd> zs;
  if (b.contains("z")) {
    for (const auto& z : b.at("z")) {
      const auto v = z.get<std::vector<double>>();
      if (v.size() != 2) throw SchemaError("/analysis/rpf/z", "each z is [re, im]");
      zs.emplace_back(v[0], v[1]);
    }
  } else {
    zs = {{0.1, 0.0}, {0.0, 0.1}};
  }
  const double tol = c.tolerance(1e-8);
  r.doc["z"] = Json::array();
  for (const auto z : zs) {
    const auto trip = complex_rpf(c.model, f, z);
    const double res = trip.interior_residual();
    char label[64];
    std::snprintf(label, sizeof label, "rpf_residual_z=%g%+gi", z.real(), z.imag());
    r.checks.push_back(check_at_most(label, res, tol));
    const cd ll = trip.log_lambda(trip.lambda.size());
    r.doc["z"].push_back({{"re", z.real()}, {"im", z.imag()}, {"burn", trip.burn}, {"interior_residual", res},
                          {"log_lambda_re", ll.real()}, {"log_lambda_im", ll.imag()}});
    if (z == zs.front()) {
      std::vector<double> mod;
      for (const auto& l : trip.lambda) mod.push_back(std::abs(l));
      r.curves.push_back(curve("lambda_modulus", "j", iota_from(0, mod.size()), mod));
    }
  }
  // d/dz log lambda at 0 against the exact mean.
  const double h = 1e-4;
  const auto up = complex_rpf(c.model, f, {h, 0.0});
  const auto dn = complex_rpf(c.model, f, {-h, 0.0});
  const std::size_t steps = up.lambda.size();
  const double deriv = ((up.log_lambda(steps) - dn.log_lambda(steps)) / (2 * h)).real();
  const std::size_t at[] = {steps};
  const double mean = exact_moments(c.model, f, at).mean[0];
  const double rel = std::abs(deriv - mean) / std::max(std::abs(mean), 1.0);
  r.doc["derivative"] = {{"n", steps}, {"d_log_lambda", deriv}, {"exact_mean", mean}, {"relative_gap", rel}};
  r.checks.push_back(check_at_most("log_lambda_derivative", rel, 1e-6));

  const std::size_t W = std::max<std::size_t>(f.max_future(), 1);
  const std::size_t j = cnt(b, "j", 0);
  if (j + W > c.model.horizon()) throw SchemaError("/analysis/rpf/j", "start index beyond the horizon");
  const std::size_t room = c.model.horizon() + 1 - j - W;
  const std::size_t n_max = std::min(cnt(b, "n_max", 40), room);
  const auto shape = window_over(c.model.sizes(), j, W);
  std::vector<double> g(shape.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = shape.coordinate(i, 0) == 0 ? 1.0 : 0.0;
  const auto decay = rpf_decay(c.model, W, g, j, n_max);
  r.doc["decay"] = {{"j", j}, {"c", decay.c}, {"gamma", decay.gamma}, {"ceiling", decay.ceiling},
                    {"dominated", decay.dominated}};
  r.checks.push_back(check_flag("rpf_decay_dominated", decay.dominated));
  r.checks.push_back(check_at_most("rpf_decay_rate", decay.gamma, decay.ceiling, Provenance::certified_bound));
  r.curves.push_back(curve("rpf_decay", "n", iota_from(0, decay.values.size()), decay.values));
}

void cmd_corange(Context& c, CommandResult& r) {
  const auto cr = corange_scan(c.model, c.f(), c.corange());
  if (cr.all_frequencies) {
    r.doc["all_frequencies"] = true;
  } else if (cr.irreducible) {
    r.doc["irreducible"] = true;
    r.doc["scan_max_t"] = cr.scan_max_t;
  } else {
    r.doc["t0"] = cr.t0 ? Json(*cr.t0) : Json(nullptr);
    r.doc["h0"] = cr.h0 ? Json(*cr.h0) : Json(nullptr);
  }
  Json d;
  d["integer_valued"] = cr.integer_valued;
  if (cr.span_exceeds_one) d["span_exceeds_one"] = *cr.span_exceeds_one;
  d["cluster_centers"] = cr.cluster_centers;
  d["message"] = cr.message;
  r.doc["details"] = d;
  r.curves.push_back(curve("corange_rate", "t", cr.t_grid, cr.rates));
}

void cmd_llt(Context& c, CommandResult& r) {
  const auto& f = c.f();
  c.require_llt_assumptions();
  const auto& b = block(c.a, "llt");
  std::string mode = b.contains("mode") ? b.at("mode").get<std::string>() : "auto";
  if (mode == "auto") mode = f.integer_valued() ? "lattice" : "nonlattice";
  r.doc["mode"] = mode;
  if (mode == "lattice") {
    if (!f.integer_valued()) throw InputError("lattice LLT needs an integer-valued observable");
    LatticeLltOptions opts;
    opts.threshold = c.tolerance(num(b, "threshold", 0.02));
    opts.corange = c.corange();
    adopt(r, lattice_llt_check(c.model, f, c.n_grid(), opts));
  } else if (mode == "nonlattice") {
    const auto grid = c.n_grid();
    const std::size_t n = cnt(b, "n", grid.back());
    NonLatticeOptions opts;
    opts.tolerance = c.tolerance(0.05);
    opts.lattice = c.lattice();
    opts.mc_samples = cnt(c.a, "mc_samples", 0);
    opts.seed = c.seed();
    opts.threads = c.threads();
    opts.corange = c.corange();
    if (!opts.lattice && opts.mc_samples == 0)
      throw InputError("non-lattice LLT needs analysis.lattice (exact route) or analysis.mc_samples");
    const auto res = nonlattice_llt_check(c.model, f, n, c.kernel(), c.u_grid(n), opts);
    r.doc["n"] = n;
    r.doc["sigma"] = res.sigma;
    r.doc["mean"] = res.mean;
    r.doc["u"] = res.u;
    if (opts.lattice) {
      r.doc["sup_error"] = res.sup_error;
      r.doc["error"] = res.error;
    }
    if (opts.mc_samples > 0) {
      r.doc["monte_carlo"] = {{"seed", opts.seed}, {"samples", opts.mc_samples}, {"sup_error", res.mc_sup_error},
                              {"error", res.mc_error}, {"error_se", res.mc_error_se}};
      if (opts.lattice) r.doc["monte_carlo"]["max_z"] = res.max_z;
    }
    adopt(r, res.report);
  } else {
    throw SchemaError("/analysis/llt/mode", "expected auto, lattice or nonlattice");
  }
}

void cmd_edgeworth(Context& c, CommandResult& r) {
  const auto& f = c.f();
  const auto lattice = c.lattice().value_or(LatticeSpec{});
  const auto grid = sizes_of(block(c.a, "edgeworth"), "n_grid", c.n_grid());
  const auto res = edgeworth_check(c.model, f, grid, lattice, c.tolerance(0.2));
  r.doc["best_variant"] = res.best_variant;
  r.doc["correction_ratio"] = res.correction_ratio;
  r.doc["points"] = Json::array();
  for (const auto& p : res.points)
    r.doc["points"].push_back({{"n", p.n}, {"sigma", p.sigma}, {"third", p.third},
                               {"residual_gauss", p.residual_gauss}, {"residual_cubic", p.residual_paper},
                               {"residual_classical", p.residual_classical},
                               {"correction_scale", p.correction_scale}});
  adopt(r, res.report);
}

void cmd_blocks(Context& c, CommandResult& r) {
  const auto& f = c.f();
  const auto& b = block(c.a, "blocks");
  const std::size_t n = std::min(cnt(b, "n", f.length()), f.length());
  const std::size_t D = cnt(b, "D", 4);
  const double theta = num(b, "theta", 0.05);
  const auto t_grid = reals(b, "t_grid", reals(c.a, "t_grid", {0.5, 1.0, 2.0, 3.0}));
  const auto scan = contracting_blocks(c.model, f, t_grid, n, D, theta, c.threads());
  auto intervals = [](const std::vector<Interval>& v) {
    Json out = Json::array();
    for (const auto& i : v) out.push_back({i.begin, i.end});
    return out;
  };
  r.doc["n"] = n;
  r.doc["D"] = D;
  r.doc["theta"] = scan.theta;
  r.doc["k0"] = scan.k0;
  r.doc["count"] = scan.count;
  r.doc["contracting"] = intervals(scan.contracting);
  r.doc["complementary"] = intervals(scan.complementary);
}

void cmd_matrix(Context& c, CommandResult& r) {
  if (!c.s.observable.matrices) throw InputError("matrix needs a matrix-log-lambda observable");
  const auto& fam = *c.s.observable.matrices;
  const std::size_t w = *c.s.observable.matrix_window;
  const auto& b = block(c.a, "matrix");
  const auto br = birkhoff_rate(fam);
  const auto pf = sequential_pf(fam, c.model, w);
  r.doc["birkhoff"] = {{"rate", br.rate}, {"diameter", br.diameter}, {"diameter_bound", br.diameter_bound}};
  r.doc["sequential_pf"] = {{"window", w},           {"log_tail", pf.log_tail},     {"lambda_tail", pf.lambda_tail},
                            {"lambda_min", pf.lambda_min}, {"lambda_max", pf.lambda_max}, {"sandwich", pf.sandwich}};

  const std::size_t horizon = fam.horizon();
  const std::size_t j = cnt(b, "j", std::min(w, horizon / 3));
  const std::size_t depth = cnt(b, "depth", w);
  std::vector<std::size_t> fallback;
  for (std::size_t n = 1; n <= 12 && j + n + depth <= horizon; ++n) fallback.push_back(n);
  const auto rr_grid = sizes_of(b, "n_grid", fallback);
  if (rr_grid.empty()) throw InputError("horizon too short for the RRPF certificate at j = " + std::to_string(j));
  const auto cert = rrpf_certificate(fam, c.model, j, rr_grid, depth, cnt(b, "samples", 2000), c.seed());
  r.doc["rrpf"] = {{"j", j},
                   {"depth", depth},
                   {"gamma", cert.gamma},
                   {"c", cert.c},
                   {"paths", cert.paths},
                   {"exhaustive", cert.exhaustive},
                   {"normalization_drift", cert.normalization_drift}};
  r.checks.push_back(check_at_most("rrpf_rate_vs_birkhoff", cert.gamma, br.rate,
                                   cert.exhaustive ? Provenance::exact : Provenance::monte_carlo));
  r.curves.push_back(curve("rrpf_residual", "n", as_double(cert.n), cert.residual));

  const std::size_t sn = std::min(cnt(b, "sandwich_n", 12), horizon);
  const auto norm = b.contains("norm") && b.at("norm") == "entry_sum" ? MatrixNorm::entry_sum : MatrixNorm::max_entry;
  const auto sw = lognorm_sandwich(fam, c.model, pf, sn, norm, cnt(b, "samples", 2000), c.seed());
  r.doc["sandwich"] = {{"n_max", sn}, {"max_deviation", sw.max_deviation}, {"bound", sw.bound},
                       {"paths", sw.paths}, {"exhaustive", sw.exhaustive}};
  r.checks.push_back(check_at_most("lognorm_sandwich", sw.max_deviation, sw.bound,
                                   sw.exhaustive ? Provenance::certified_bound : Provenance::monte_carlo));

  if (const std::size_t mc = cnt(c.a, "mc_samples", 0); mc > 0) {
    LogNormOptions lo;
    lo.norm = norm;
    lo.mc_samples = mc;
    lo.seed = c.seed();
    lo.threads = c.threads();
    lo.tolerance = c.tolerance(lo.tolerance);
    adopt(r, lognorm_llt(fam, c.model, pf, c.n_grid(), lo), "lognorm_llt");
  }
}

void cmd_lyapunov(Context& c, CommandResult& r) {
  const auto& b = block(c.a, "lyapunov");
  if (!b.contains("base") || !b.contains("perturbations"))
    throw SchemaError("/analysis/lyapunov", "needs 'base' and 'perturbations'");
  const auto a = parse_matrix(b.at("base"), "/analysis/lyapunov/base");
  std::vector<Eigen::MatrixXd> table;
  for (std::size_t i = 0; i < b.at("perturbations").size(); ++i)
    table.push_back(parse_matrix(b.at("perturbations")[i], "/analysis/lyapunov/perturbations/" + std::to_string(i)));
  // The driving path is part of the input, so it has its own seed.
  const auto batch = sample_paths(c.model, 1, cnt(b, "path_seed", 1));
  for (std::uint32_t x : batch.path(0))
    if (x >= table.size()) throw InputError("perturbation table has no entry for state " + std::to_string(x));
  const auto pert = perturbation_along(batch.path(0), table);
  const double eps = num(b, "eps", 0.01);
  const std::size_t w = cnt(b, "window", 30);
  const auto sp = lyapunov_splitting(a, pert, eps, w);
  r.doc["eps"] = eps;
  r.doc["window"] = w;
  r.doc["base_values"] = std::vector<double>(sp.base_values.data(), sp.base_values.data() + sp.base_values.size());
  r.doc["interior"] = {sp.first, sp.last};
  r.doc["max_residual"] = sp.max_residual;
  r.doc["lambda_deviation"] = sp.lambda_deviation;
  r.doc["vector_deviation"] = sp.vector_deviation;
  r.doc["worst_condition"] = sp.worst_condition;
  r.checks.push_back(check_at_most("splitting_residual", sp.max_residual, c.tolerance(1e-8)));
  r.curves.push_back(curve("splitting_residual", "j", iota_from(sp.first, sp.residual.size()), sp.residual));
  if (b.contains("eps_grid")) {
    const auto grid = b.at("eps_grid").get<std::vector<double>>();
    const auto st = epsilon_study(a, pert, grid, w);
    r.doc["epsilon_study"] = {{"eps", st.eps}, {"lambda_deviation", st.lambda_deviation},
                              {"vector_deviation", st.vector_deviation}, {"slope_spread", st.slope_spread}};
    r.checks.push_back(check_at_most("epsilon_slope_spread", st.slope_spread, 2.0));
    r.curves.push_back(curve("lambda_deviation", "eps", st.eps, st.lambda_deviation));
  }
}

void cmd_irf(Context& c, CommandResult& r) {
  if (!c.s.observable.irf) throw InputError("irf needs an irf observable");
  const auto& fam = *c.s.observable.irf;
  const auto& sizes = c.model.sizes();
  const auto& b = block(c.a, "irf");
  const auto [lo, hi] = invariant_interval(fam, sizes);
  r.doc["delta0"] = fam.delta0();
  r.doc["invariant_interval"] = {lo, hi};
  if (fam.radius) r.doc["radius"] = *fam.radius;
  r.doc["window"] = *c.s.observable.irf_window;
  r.doc["error_bound"] = c.s.observable.tail_bound.value_or(0.0);

  const std::size_t audit_n = cnt(b, "audit_samples", 10000);
  const double excess = lipschitz_audit(fam, sizes, audit_n, c.seed());
  r.doc["lipschitz_excess"] = excess;
  r.checks.push_back(check_at_most("lipschitz_audit", excess, 1e-9, Provenance::monte_carlo));

  const std::string mode_name = b.contains("mode") ? b.at("mode").get<std::string>() : "initial";
  if (mode_name != "initial" && mode_name != "no_initial")
    throw SchemaError("/analysis/irf/mode", "expected initial or no_initial");
  const auto mode = mode_name == "initial" ? IrfMode::initial : IrfMode::no_initial;
  const std::size_t paths = cnt(b, "paths", 100);
  const std::size_t steps = std::min(cnt(b, "steps", c.model.horizon()), c.model.horizon());
  const std::size_t burn = cnt(b, "burn", 0);
  const auto batch = sample_paths(c.model, paths, c.seed(), c.threads());
  double max_abs = 0.0, gap = 0.0, bound = 0.0, outside = 0.0;
  for (std::size_t k = 0; k < paths; ++k) {
    const auto tr = simulate_irf(fam, sizes, batch.path(k), steps, mode, burn);
    max_abs = std::max(max_abs, tr.max_abs);
    gap = std::max(gap, tr.coupling_gap);
    bound = std::max(bound, tr.coupling_bound);
    for (double y : tr.y) outside = std::max({outside, lo - y, y - hi});
  }
  r.doc["simulation"] = {{"mode", mode_name}, {"paths", paths}, {"steps", steps}, {"max_abs", max_abs},
                         {"coupling_gap", gap}, {"coupling_bound", bound}};
  r.checks.push_back(check_at_most("invariant_interval_excess", std::max(outside, 0.0), 1e-12,
                                   Provenance::monte_carlo));
  if (fam.radius)
    r.checks.push_back(check_at_most("invariant_radius", max_abs, *fam.radius, Provenance::monte_carlo));
}

void cmd_simulate(Context& c, CommandResult& r) {
  const auto& f = c.f();
  const auto& b = block(c.a, "simulate");
  const std::size_t n = std::min(cnt(b, "n", f.length()), f.length());
  const std::size_t samples = cnt(b, "samples", cnt(c.a, "mc_samples", 100000));
  if (samples < 64) throw InputError("simulate needs at least 64 samples for batch means");
  const auto batch = sample_sums(c.model, f, n, samples, c.seed(), c.threads());
  const auto est = batch_means(batch.sums);
  const std::size_t at[] = {n};
  const double exact = forward_moments(c.model, f, at).mean[0];
  const double z = est.std_error > 0 ? std::abs(est.mean - exact) / est.std_error : 0.0;
  r.doc["n"] = n;
  r.doc["monte_carlo"] = {{"seed", c.seed()}, {"samples", samples}, {"mean", est.mean}, {"std_error", est.std_error},
                          {"mean_z", z}};
  r.doc["exact_mean"] = exact;
  Check zc = check_at_most("mean_z_score", z, 4.0, Provenance::monte_carlo);
  zc.std_error = est.std_error;
  r.checks.push_back(zc);

  const auto u = c.u_grid(n);
  const auto lc = empirical_local_counts(batch.sums, c.kernel(), u, f.integer_valued(), cnt(b, "min_hits", 100));
  std::size_t flagged = 0;
  for (bool fl : lc.flagged) flagged += fl ? 1 : 0;
  r.doc["monte_carlo"]["flagged_bins"] = flagged;
  r.curves.push_back(curve("local_counts", "u", lc.u, lc.estimate, lc.std_error));
  if (!lc.lattice_frequency.empty())
    r.curves.push_back(curve("lattice_frequency", "u", lc.u, lc.lattice_frequency, lc.lattice_std_error));
}

using Handler = std::function<void(Context&, CommandResult&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"validate", cmd_validate}, {"moments", cmd_moments},   {"rpf", cmd_rpf},   {"corange", cmd_corange},
      {"llt", cmd_llt},           {"edgeworth", cmd_edgeworth}, {"blocks", cmd_blocks}, {"matrix", cmd_matrix},
      {"lyapunov", cmd_lyapunov}, {"irf", cmd_irf},           {"simulate", cmd_simulate}};
  return h;
}

std::filesystem::path out_dir(const Scenario& s, const Overrides& o) {
  if (o.out_dir) return *o.out_dir;
  return s.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(s.out_dir);
}

Json finish(const CommandResult& r) {
  Json doc = r.doc;
  doc["command"] = r.name;
  doc["pass"] = r.pass();
  doc["checks"] = Json::array();
  for (const auto& c : r.checks) doc["checks"].push_back(check_to_json(c));
  doc["curves"] = Json::array();
  for (const auto& c : r.curves) doc["curves"].push_back(curve_file_name(r.name, c));
  return doc;
}

}  // namespace

bool CommandResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"validate", "moments", "rpf",      "corange", "llt",     "edgeworth",
                                                 "blocks",   "matrix",  "lyapunov", "irf",     "simulate"};
  return names;
}

CommandResult run_command(const std::string& name, const Scenario& s, const Overrides& o) {
  const auto it = handlers().find(name);
  if (it == handlers().end()) throw InputError("unknown command '" + name + "'");
  Context ctx(s, o);
  CommandResult r;
  r.name = name;
  it->second(ctx, r);
  // Adopted reports may repeat a check name; keep the first of each.
  std::set<std::string> seen;
  std::vector<Check> unique;
  for (auto& c : r.checks)
    if (seen.insert(c.name).second) unique.push_back(std::move(c));
  r.checks = std::move(unique);
  return r;
}

int emit_result(const CommandResult& r, const Scenario& s, const Overrides& o) {
  const Json doc = finish(r);
  if (o.to_stdout) {
    std::cout << dump_json(doc);
  } else {
    const auto dir = out_dir(s, o);
    std::filesystem::create_directories(dir);
    write_json(dir / (r.name + ".json"), doc);
    write_curves(dir, r.name, r.curves);
  }
  return r.pass() ? 0 : 2;
}

int run_all(const Scenario& s, const Overrides& o) {
  std::vector<std::string> names{"validate"};
  if (s.analysis.contains("checks")) names = s.analysis.at("checks").get<std::vector<std::string>>();
  Json report;
  report["schema_version"] = kSchemaVersion;
  report["scenario"] = s.raw.contains("description") ? s.raw.at("description") : Json(s.source);
  report["results"] = Json::object();
  bool pass = true;
  const auto dir = out_dir(s, o);
  if (!o.to_stdout) std::filesystem::create_directories(dir);
  for (const auto& name : names) {
    const auto r = run_command(name, s, o);
    const Json doc = finish(r);
    pass = pass && r.pass();
    if (!o.to_stdout) {
      write_json(dir / (name + ".json"), doc);
      write_curves(dir, name, r.curves);
    }
    report["results"][name] = doc;
  }
  report["pass"] = pass;
  if (o.to_stdout)
    std::cout << dump_json(report);
  else
    write_json(dir / "report.json", report);
  return pass ? 0 : 2;
}

}  // namespace mshift::cli
