// Criteria 12-15: matrix products, Lyapunov splitting, iterated random
// functions and Monte Carlo reproducibility.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "criteria.hpp"
#include "instances.hpp"
#include "mshift/chain.hpp"
#include "mshift/kernel.hpp"
#include "mshift/llt.hpp"
#include "mshift/matrix_products.hpp"
#include "mshift/processes.hpp"
#include "mshift/sim.hpp"

namespace acceptance {
namespace {

using mshift::ChainModel;

mshift::ChainSpec trivial_chain(std::size_t horizon) {
  mshift::ChainSpec s;
  s.kernels.assign(horizon, Eigen::MatrixXd::Ones(1, 1));
  s.initial = Eigen::VectorXd::Ones(1);
  s.allow_degenerate = true;
  return s;
}

Outcome criterion_12() {
  Tally t;
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 1;
  const double rho = (3 + std::sqrt(5.0)) / 2;
  const double ratio = ((3 - std::sqrt(5.0)) / 2) / rho;
  {
    ChainModel model(trivial_chain(80));
    const auto fam = mshift::constant_family(a, model.sizes(), 2.0);
    const auto pf = mshift::sequential_pf(fam, model, 20);
    double worst = 0;
    for (const auto& term : pf.log_lambda.terms())
      for (double v : term.values) worst = std::max(worst, std::abs(std::exp(v) - rho));
    t.expect(worst <= 1e-8, "lambda off by " + fmt(worst));
    std::vector<std::size_t> grid;
    for (std::size_t n = 1; n <= 12; ++n) grid.push_back(n);
    const auto cert = mshift::rrpf_certificate(fam, model, 20, grid, 20, 1, 1);
    t.expect(std::abs(cert.gamma / ratio - 1) <= 0.1, "RRPF rate " + fmt(cert.gamma) + " vs " + fmt(ratio));
    t.note("lambda gap " + fmt(worst, 2) + ", RRPF rate " + fmt(cert.gamma, 5));
  }
  {
    ChainModel model(instances::random_chain(12, 40, 2, 0.3));
    const auto fam = mshift::random_family(model.sizes(), 2, 2.0, 12);
    const auto br = mshift::birkhoff_rate(fam);
    std::vector<std::size_t> grid;
    for (std::size_t n = 1; n <= 10; ++n) grid.push_back(n);
    const auto cert = mshift::rrpf_certificate(fam, model, 12, grid, 12, 2000, 3);
    t.expect(cert.gamma <= br.rate, "fitted rate " + fmt(cert.gamma) + " above Birkhoff " + fmt(br.rate));
    const auto pf = mshift::sequential_pf(fam, model, 8);
    const auto sw = mshift::lognorm_sandwich(fam, model, pf, 12, mshift::MatrixNorm::max_entry, 0, 1,
                                             std::size_t{1} << 21);
    t.expect(sw.exhaustive && sw.holds, "sandwich deviation " + fmt(sw.max_deviation) + " vs K " + fmt(sw.bound));
    t.note("C=2 family: rate " + fmt(cert.gamma, 3) + " <= " + fmt(br.rate, 3) + ", sandwich " +
           fmt(sw.max_deviation, 3) + " <= " + fmt(sw.bound, 3) + " over " + std::to_string(sw.paths) + " paths");
  }
  return t.outcome();
}

Outcome criterion_13() {
  Tally t;
  Eigen::MatrixXd a = Eigen::Vector2d(0.5, 2.0).asDiagonal();
  std::mt19937_64 gen(13);
  std::normal_distribution<double> nd;
  std::vector<Eigen::MatrixXd> table(3);
  for (auto& b : table) {
    b = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return nd(gen); });
    b /= b.jacobiSvd().singularValues()(0);  // spectral norm 1
  }
  ChainModel model(instances::random_chain(31, 200, 3, 0.3));
  const auto batch = mshift::sample_paths(model, 1, 99);
  const auto pert = mshift::perturbation_along(batch.path(0), table);
  const auto sp = mshift::lyapunov_splitting(a, pert, 0.01, 30);
  t.expect(sp.max_residual <= 1e-8, "residual " + fmt(sp.max_residual));
  t.expect(sp.lambda_deviation <= 0.05, "eigenvalue deviation " + fmt(sp.lambda_deviation));
  const double eps[] = {0.0025, 0.005, 0.01, 0.02};
  const auto study = mshift::epsilon_study(a, pert, eps, 30);
  t.expect(study.slope_spread <= 2.0, "deviation/eps spread " + fmt(study.slope_spread));
  t.note("residual " + fmt(sp.max_residual, 2) + ", sup|lambda - lambda_i| " + fmt(sp.lambda_deviation, 3) +
         ", deviation/eps spread " + fmt(study.slope_spread, 3));
  return t.outcome();
}

Outcome criterion_14() {
  Tally t;
  const double xs[] = {0.0, 1.0 / std::sqrt(2.0), 1.0};
  mshift::ChainSpec spec;
  {
    Eigen::MatrixXd p(3, 3);
    p << 0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.3, 0.2, 0.5;
    Eigen::MatrixXd q(3, 3);
    q << 0.4, 0.4, 0.2, 0.3, 0.3, 0.4, 0.2, 0.5, 0.3;
    spec = instances::periodic({p, q}, Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3), 1000);
  }
  ChainModel chain(spec);
  auto fam = mshift::affine_irf({{0.5, 0.5, 0.5}}, {{xs[0], xs[1], xs[2]}});
  fam.radius = 2.0;

  // Boundedness along 10^6 sampled steps (1000 paths of 1000 steps).
  const auto batch = mshift::sample_paths(chain, 1000, 14, 8);
  double max_abs = 0;
  for (std::size_t k = 0; k < batch.count; ++k) {
    const auto tr = mshift::simulate_irf(fam, chain.sizes(), batch.path(k), 999);
    max_abs = std::max(max_abs, tr.max_abs);
  }
  t.expect(max_abs <= 2.0, "trajectory reached " + fmt(max_abs));

  // Truncation at w = 6 against a depth-26 reference and the exact recursion.
  // The reference is evaluated along paths: restart from the anchored value
  // (the anchor path sits at state 0, where the orbit of y0 = 0 stays at 0)
  // 26 steps back. A 3^26 table would not fit in memory.
  const std::size_t w = 6, depth = w + 20, n = 200;
  const auto obs = mshift::irf_window_observable(fam, chain.sizes(), n, w);
  const double ref_bound = 2 * std::pow(0.5, static_cast<double>(depth));
  t.expect(obs.error_bound <= 2 * std::pow(obs.delta0, static_cast<double>(w)) * (1 + 1e-12),
           "bound " + fmt(obs.error_bound) + " above 2 delta0^w");
  double gap_ref = 0, gap_exact = 0;
  std::vector<std::size_t> path(chain.horizon() + 1);
  for (std::size_t k = 0; k < batch.count; ++k) {
    const auto p = batch.path(k);
    std::copy(p.begin(), p.end(), path.begin());
    const auto tr = mshift::simulate_irf(fam, chain.sizes(), p, n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      double y = 0.0;
      for (std::size_t i = j + 1 > depth ? j + 1 - depth : 0; i <= j; ++i) y = 0.5 * y + xs[path[i]];
      const double v = obs.observable.evaluate(j, path);
      gap_ref = std::max(gap_ref, std::abs(v - y));
      gap_exact = std::max(gap_exact, std::abs(v - tr.y[j]));
    }
  }
  t.expect(gap_ref <= obs.error_bound + ref_bound, "reference gap " + fmt(gap_ref));
  t.expect(gap_exact <= obs.error_bound, "exact-recursion gap " + fmt(gap_exact));

  // LLT pipeline on the truncated observable with criterion 8's thresholds.
  mshift::NonLatticeOptions o;
  o.tolerance = 0.05;
  o.mc_samples = 1'000'000;
  o.seed = 14;
  o.threads = 8;
  o.corange = mshift::CorangeOptions{.t_max = 7.0, .resolution = 1e-2, .n_max = n, .threads = 8};
  const std::size_t at[] = {n};
  const auto m = mshift::forward_moments(chain, obs.observable, at);
  std::vector<double> u;
  for (int k = -4; k <= 4; ++k) u.push_back(m.mean[0] + 0.5 * k * std::sqrt(m.variance[0]));
  const auto r = mshift::nonlattice_llt_check(chain, obs.observable, n, mshift::TestKernel::triangle(), u, o);
  for (const auto& c : r.report.checks) t.expect(c.pass, c.name + " = " + fmt(c.measured));
  t.note("max|Y| " + fmt(max_abs, 4) + ", bound(6) " + fmt(obs.error_bound, 3) + ", gaps ref " + fmt(gap_ref, 3) +
         " exact " + fmt(gap_exact, 3) + ", MC sup-error " + fmt(r.mc_sup_error, 3));
  return t.outcome();
}

Outcome criterion_15() {
  Tally t;
  ChainModel model(instances::iid({0.6, 0.3, 0.1}, 200));
  const double vals[] = {0, 1, std::sqrt(2.0)};
  const auto f = mshift::coordinate_observable(model.sizes(), 200, vals);

  const auto s1 = mshift::sample_sums(model, f, 200, 100000, 42, 1);
  for (std::size_t threads : {2u, 3u, 8u}) {
    const auto sk = mshift::sample_sums(model, f, 200, 100000, 42, threads);
    t.expect(sk.sums == s1.sums, "sums differ at " + std::to_string(threads) + " threads");
  }
  const auto p1 = mshift::sample_paths(model, 5000, 43, 1);
  const auto p8 = mshift::sample_paths(model, 5000, 43, 8);
  t.expect(p1.states == p8.states, "paths differ across thread counts");

  auto run = [&](std::size_t threads) {
    mshift::NonLatticeOptions o;
    o.lattice = mshift::LatticeSpec{.beta = std::sqrt(2.0)};
    o.mc_samples = 250000;
    o.seed = 15;
    o.threads = threads;
    o.corange = mshift::CorangeOptions{.t_max = 7.0, .resolution = 1e-2, .n_max = 200, .threads = threads};
    std::vector<double> u;
    for (int k = -4; k <= 4; ++k) u.push_back(88.28 + 3.9 * k);
    return mshift::nonlattice_llt_check(model, f, 200, mshift::TestKernel::triangle(), u, o);
  };
  const auto a = run(1), b = run(8);
  double worst = 0;
  auto cmp = [&](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
      worst = INFINITY;
      return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  };
  cmp(a.error, b.error);
  cmp(a.mc_error, b.mc_error);
  cmp(a.mc_error_se, b.mc_error_se);
  cmp(a.mc_expect, b.mc_expect);
  for (const auto& [k, v] : a.report.numbers) worst = std::max(worst, std::abs(v - b.report.numbers.at(k)));
  t.expect(worst <= 1e-9, "reports differ by " + fmt(worst));
  t.note("bit-identical MC multisets at 1/2/3/8 threads, report gap " + fmt(worst, 2));
  return t.outcome();
}

}  // namespace

std::vector<Criterion> application_criteria() {
  return {{12, "matrix products", 0, criterion_12},
          {13, "Lyapunov splitting", 0, criterion_13},
          {14, "iterated random functions", 0, criterion_14},
          {15, "reproducibility", 0, criterion_15}};
}

}  // namespace acceptance
