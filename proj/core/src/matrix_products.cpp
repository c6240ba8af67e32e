#include "mshift/matrix_products.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/kernel.hpp"
#include "mshift/llt.hpp"
#include "mshift/parallel.hpp"
#include "mshift/rng.hpp"
#include "mshift/sim.hpp"

namespace mshift {

void validate_family(const PositiveMatrixFamily& fam) {
  if (fam.dim == 0) throw InputError("matrix dimension must be positive");
  if (!(fam.bound >= 1.0)) throw InputError("entry bound C must be at least 1");
  const double lo = 1.0 / fam.bound - 1e-12, hi = fam.bound + 1e-12;
  for (std::size_t j = 0; j < fam.steps.size(); ++j) {
    if (fam.steps[j].empty()) throw InputError("no matrices at step " + std::to_string(j));
    for (const auto& m : fam.steps[j]) {
      if (static_cast<std::size_t>(m.rows()) != fam.dim || static_cast<std::size_t>(m.cols()) != fam.dim)
        throw InputError("matrix at step " + std::to_string(j) + " has the wrong shape");
      if (m.minCoeff() < lo || m.maxCoeff() > hi)
        throw InputError("matrix entry at step " + std::to_string(j) + " outside [1/C, C]");
    }
  }
}

PositiveMatrixFamily constant_family(const Eigen::MatrixXd& a, std::span<const std::size_t> sizes,
                                     double bound) {
  PositiveMatrixFamily f{static_cast<std::size_t>(a.rows()), bound, {}};
  for (std::size_t s : sizes) f.steps.emplace_back(s, a);
  validate_family(f);
  return f;
}

PositiveMatrixFamily random_family(std::span<const std::size_t> sizes, std::size_t dim,
                                   double bound, std::uint64_t seed) {
  PositiveMatrixFamily f{dim, bound, {}};
  const double span = std::log(bound);
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    std::vector<Eigen::MatrixXd> row;
    for (std::size_t x = 0; x < sizes[j]; ++x) {
      CounterRng rng(seed, j * 1024 + x);
      Eigen::MatrixXd m(dim, dim);
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = std::exp(span * (2.0 * rng.uniform() - 1.0));
      row.push_back(std::move(m));
    }
    f.steps.push_back(std::move(row));
  }
  validate_family(f);
  return f;
}

PositiveMatrixFamily state_family(const std::vector<Eigen::MatrixXd>& per_state,
                                  std::span<const std::size_t> sizes, double bound) {
  if (per_state.empty()) throw InputError("need at least one matrix");
  PositiveMatrixFamily f{static_cast<std::size_t>(per_state[0].rows()), bound, {}};
  for (std::size_t s : sizes) {
    if (s > per_state.size()) throw InputError("fewer matrices than states");
    f.steps.emplace_back(per_state.begin(), per_state.begin() + static_cast<long>(s));
  }
  validate_family(f);
  return f;
}

double hilbert_diameter(const Eigen::MatrixXd& a) {
  // Largest cross ratio a_ki a_lj / (a_li a_kj) over rows k, l and columns i, j.
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      double hi = -std::numeric_limits<double>::infinity(), lo = -hi;
      for (Eigen::Index k = 0; k < a.rows(); ++k) {
        const double r = std::log(a(k, i) / a(k, j));
        hi = std::max(hi, r);
        lo = std::min(lo, r);
      }
      d = std::max(d, hi - lo);
    }
  return d;
}

BirkhoffRate birkhoff_rate(const PositiveMatrixFamily& fam) {
  validate_family(fam);
  BirkhoffRate b;
  for (const auto& row : fam.steps)
    for (const auto& m : row) b.diameter = std::max(b.diameter, hilbert_diameter(m));
  b.rate = std::tanh(b.diameter / 4.0);
  const double d = static_cast<double>(fam.dim);
  b.diameter_bound = std::log(std::pow(fam.bound, 4) * d * d);
  return b;
}

SequentialPf sequential_pf(const PositiveMatrixFamily& fam, const ChainModel& model,
                           std::size_t window) {
  validate_family(fam);
  const auto& sizes = model.sizes();
  if (fam.horizon() != sizes.size()) throw InputError("family and chain disagree on the horizon");
  for (std::size_t j = 0; j < sizes.size(); ++j)
    if (fam.steps[j].size() != sizes[j]) throw InputError("family and chain disagree on state counts");
  if (window == 0) throw InputError("window must be positive");
  if (window > model.horizon()) throw InputError("window exceeds the horizon");

  SequentialPf pf;
  pf.window = window;
  pf.birkhoff = birkhoff_rate(fam);
  pf.log_tail = pf.birkhoff.diameter * std::pow(pf.birkhoff.rate, static_cast<double>(window - 1));
  const double d = static_cast<double>(fam.dim);
  pf.lambda_tail = d * fam.bound * std::expm1(pf.log_tail);
  pf.sandwich = std::log(d * fam.bound * fam.bound);
  pf.lambda_min = std::numeric_limits<double>::infinity();

  const std::size_t terms = model.horizon() - window + 1;
  std::vector<WindowTerm> out(terms);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(fam.dim));
  std::vector<std::size_t> x(window + 1);
  for (std::size_t j = 0; j < terms; ++j) {
    const auto shp = window_over(sizes, j, window + 1);
    if (shp.size() > (1u << 22)) throw InputError("window table too large; use a smaller window");
    out[j].future = window;
    out[j].values.resize(shp.size());
    for (std::size_t idx = 0; idx < shp.size(); ++idx) {
      shp.decode(idx, x);
      Eigen::VectorXd num = fam.at(j, x[0]) * ones;
      Eigen::VectorXd den = ones;
      for (std::size_t i = 1; i <= window; ++i) {
        num = fam.at(j + i, x[i]) * num;
        den = fam.at(j + i, x[i]) * den;
        const double s = den.sum();  // keep both finite; the ratio is unchanged
        num /= s;
        den /= s;
      }
      const double lam = num.sum() / den.sum();
      pf.lambda_min = std::min(pf.lambda_min, lam);
      pf.lambda_max = std::max(pf.lambda_max, lam);
      out[j].values[idx] = std::log(lam);
    }
  }
  pf.log_lambda = WindowObservable(sizes, std::move(out));
  return pf;
}

namespace {

// Paths over [lo, hi): all configurations when few, else sampled full paths.
struct PathSource {
  bool exhaustive = false;
  std::size_t count = 0;
  std::vector<std::size_t> sizes;
  std::size_t lo = 0, hi = 0;
  SampleBatch batch;

  void fill(std::size_t k, std::vector<std::size_t>& path) const {
    std::fill(path.begin(), path.end(), 0);
    if (exhaustive) {
      std::size_t r = k;
      for (std::size_t i = lo; i < hi; ++i) {
        path[i] = r % sizes[i];
        r /= sizes[i];
      }
    } else {
      const auto p = batch.path(k);
      std::copy(p.begin(), p.end(), path.begin());
    }
  }
};

PathSource paths_over(const ChainModel& model, std::size_t lo, std::size_t hi, std::size_t limit,
                      std::size_t samples, std::uint64_t seed) {
  PathSource src;
  src.sizes = model.sizes();
  src.lo = lo;
  src.hi = hi;
  double total = 1.0;
  for (std::size_t i = lo; i < hi; ++i) total *= static_cast<double>(src.sizes[i]);
  if (total <= static_cast<double>(limit)) {
    src.exhaustive = true;
    src.count = static_cast<std::size_t>(total);
  } else {
    src.batch = sample_paths(model, samples, seed);
    src.count = samples;
  }
  return src;
}

}  // namespace

RrpfCertificate rrpf_certificate(const PositiveMatrixFamily& fam, const ChainModel& model,
                                 std::size_t j, std::span<const std::size_t> n_grid,
                                 std::size_t depth, std::size_t samples, std::uint64_t seed,
                                 std::size_t exhaustive_limit) {
  validate_family(fam);
  if (n_grid.empty()) throw InputError("empty n grid");
  const std::size_t n_top = *std::max_element(n_grid.begin(), n_grid.end());
  if (depth == 0 || j < depth) throw InputError("reference depth must be positive and at most j");
  if (j + n_top + depth > fam.horizon()) throw InputError("certificate runs past the horizon");

  RrpfCertificate cert;
  cert.birkhoff_rate = birkhoff_rate(fam).rate;
  cert.n.assign(n_grid.begin(), n_grid.end());
  cert.residual.assign(n_grid.size(), 0.0);
  const auto src = paths_over(model, j - depth, j + n_top + depth, exhaustive_limit, samples, seed);
  cert.paths = src.count;
  cert.exhaustive = src.exhaustive;

  const auto d = static_cast<Eigen::Index>(fam.dim);
  std::vector<std::size_t> path(model.sizes().size());
  for (std::size_t p = 0; p < src.count; ++p) {
    src.fill(p, path);
    auto A = [&](std::size_t k) -> const Eigen::MatrixXd& { return fam.at(k, path[k]); };
    std::vector<Eigen::VectorXd> h(n_top + 1), nu(n_top + 1);
    for (std::size_t m = 0; m <= n_top; ++m) {
      const std::size_t k = j + m;
      Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
      for (std::size_t i = k - depth; i < k; ++i) {
        v = A(i) * v;
        v /= v.sum();
      }
      Eigen::RowVectorXd w = Eigen::RowVectorXd::Ones(d);
      for (std::size_t i = k + depth; i-- > k;) {
        w = w * A(i);
        w /= w.sum();
      }
      nu[m] = w.transpose();
      h[m] = v / nu[m].dot(v);
      cert.normalization_drift = std::max(cert.normalization_drift, std::abs(nu[m].dot(h[m]) - 1.0));
    }
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
    for (std::size_t m = 1; m <= n_top; ++m) {
      const std::size_t k = j + m - 1;
      const double lam = nu[m].dot(A(k) * h[m - 1]);
      P = A(k) * P / lam;
      for (std::size_t g = 0; g < n_grid.size(); ++g)
        if (n_grid[g] == m) {
          const double r = (P - h[m] * nu[0].transpose()).cwiseAbs().maxCoeff();
          cert.residual[g] = std::max(cert.residual[g], r);
        }
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    if (!(cert.residual[g] > 1e-13)) continue;
    const double x = static_cast<double>(n_grid[g]), y = std::log(cert.residual[g]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, cnt += 1;
  }
  if (cnt >= 2) {
    cert.gamma = std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
    for (std::size_t g = 0; g < n_grid.size(); ++g)
      cert.c = std::max(cert.c, cert.residual[g] / std::pow(cert.gamma, static_cast<double>(n_grid[g])));
  }
  return cert;
}

namespace {

double log_norm(const Eigen::MatrixXd& m, MatrixNorm norm) {
  return std::log(norm == MatrixNorm::max_entry ? m.cwiseAbs().maxCoeff() : m.sum());
}

// log ||A_{n-1} ... A_0|| for n = 1..n_max along a path, rescaled as it goes.
std::vector<double> log_norms(const PositiveMatrixFamily& fam, std::span<const std::size_t> path,
                              std::size_t n_max, MatrixNorm norm) {
  std::vector<double> out(n_max);
  const auto d = static_cast<Eigen::Index>(fam.dim);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
  double shift = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    P = fam.at(n - 1, path[n - 1]) * P;
    const double s = P.maxCoeff();
    P /= s;
    shift += std::log(s);
    out[n - 1] = shift + log_norm(P, norm);
  }
  return out;
}

}  // namespace

SandwichCheck lognorm_sandwich(const PositiveMatrixFamily& fam, const ChainModel& model,
                               const SequentialPf& pf, std::size_t n_max, MatrixNorm norm,
                               std::size_t samples, std::uint64_t seed,
                               std::size_t exhaustive_limit) {
  if (n_max == 0 || n_max > pf.log_lambda.length())
    throw InputError("sandwich length outside the log-lambda observable");
  SandwichCheck s;
  s.bound = pf.sandwich + static_cast<double>(n_max) * pf.log_tail;
  const auto src = paths_over(model, 0, n_max + pf.window, exhaustive_limit, samples, seed);
  s.paths = src.count;
  s.exhaustive = src.exhaustive;
  std::vector<std::size_t> path(model.sizes().size());
  for (std::size_t p = 0; p < src.count; ++p) {
    src.fill(p, path);
    const auto ln = log_norms(fam, path, n_max, norm);
    double sn = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
      sn += pf.log_lambda.evaluate(n - 1, path);
      s.max_deviation = std::max(s.max_deviation, std::abs(ln[n - 1] - sn));
    }
  }
  s.holds = s.max_deviation <= s.bound;
  return s;
}

LltReport lognorm_llt(const PositiveMatrixFamily& fam, const ChainModel& model,
                      const SequentialPf& pf, std::span<const std::size_t> n_grid,
                      const LogNormOptions& opts) {
  if (n_grid.empty()) throw InputError("empty n grid");
  const std::size_t n = *std::max_element(n_grid.begin(), n_grid.end());
  LltReport rep;
  const auto sw = lognorm_sandwich(fam, model, pf, n, opts.norm, opts.sandwich_samples, opts.seed);
  rep.numbers["sandwich_max_deviation"] = sw.max_deviation;
  rep.numbers["sandwich_bound"] = sw.bound;
  rep.checks.push_back(check_at_most("lognorm_sandwich", sw.max_deviation, sw.bound,
                                     sw.exhaustive ? Provenance::exact : Provenance::monte_carlo));

  const auto& f = pf.log_lambda;
  const auto vr = variance_regime(model, f, n);
  rep.regime = to_string(vr.regime);
  if (vr.regime != Regime::divergent) {
    rep.notes.push_back("sigma_n does not grow (" + vr.evidence + "); local-law comparisons skipped");
    return rep;
  }
  const std::size_t grid[] = {n};
  const auto mom = forward_moments(model, f, grid);
  const double sigma = std::sqrt(mom.variance[0]);

  // Monte Carlo of log ||A_0^n|| itself.
  const auto batch = sample_paths(model, opts.mc_samples, opts.seed + 1, opts.threads);
  std::vector<double> ln(opts.mc_samples);
  parallel_for(opts.mc_samples, opts.threads, [&](std::size_t k) {
    const auto p = batch.path(k);
    std::vector<std::size_t> path(p.begin(), p.end());
    ln[k] = log_norms(fam, path, n, opts.norm).back();
  });
  const auto est = batch_means(ln);
  const double allowance = 3.0 * est.std_error + sw.bound;
  auto mean_check = check_at_most("lognorm_mc_mean_vs_exact", std::abs(est.mean - mom.mean[0]), allowance,
                                  Provenance::monte_carlo);
  mean_check.std_error = est.std_error;
  rep.checks.push_back(mean_check);
  rep.numbers["lognorm_mc_mean"] = est.mean;
  rep.numbers["log_lambda_exact_mean"] = mom.mean[0];
  rep.numbers["sigma_n"] = sigma;

  const auto g = TestKernel::triangle();
  std::vector<double> u;
  for (int k = -6; k <= 6; ++k) u.push_back(mom.mean[0] + 0.5 * k * sigma);
  const auto lc = empirical_local_counts(ln, g, u);
  auto local = make_curve("lognorm_local_error", "u");
  constexpr double kSqrt2Pi = 2.5066282746310002;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double z = (u[i] - mom.mean[0]) / sigma;
    local.x.push_back(u[i]);
    local.y.push_back(std::abs(kSqrt2Pi * sigma * lc.estimate[i] - g.integral() * std::exp(-0.5 * z * z)));
    local.se.push_back(kSqrt2Pi * sigma * lc.std_error[i]);
  }
  rep.numbers["lognorm_local_sup_error"] = *std::max_element(local.y.begin(), local.y.end());
  rep.curves.push_back(local);

  NonLatticeOptions no;
  no.tolerance = opts.tolerance;
  no.mc_samples = opts.mc_samples;
  no.seed = opts.seed;
  no.threads = opts.threads;
  const auto nl = nonlattice_llt_check(model, f, n, g, u, no);
  rep.merge(nl.report, "log_lambda_");
  return rep;
}

}  // namespace mshift
