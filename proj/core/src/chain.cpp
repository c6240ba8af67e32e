#include "mshift/chain.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "mshift/error.hpp"

namespace mshift {

std::size_t ChainSpec::states(std::size_t j) const {
  if (j == 0) return static_cast<std::size_t>(initial.size());
  return static_cast<std::size_t>(kernels.at(j - 1).cols());
}

std::vector<std::size_t> ChainSpec::sizes() const {
  std::vector<std::size_t> out(horizon() + 1);
  for (std::size_t j = 0; j <= horizon(); ++j) out[j] = states(j);
  return out;
}

void validate_spec(const ChainSpec& spec) {
  if (spec.kernels.empty()) throw InputError("chain needs at least one transition");
  if (!(spec.a > 0.0 && spec.a < 1.0)) throw InputError("weight a must lie in (0,1)");
  const auto n0 = spec.initial.size();
  if (n0 == 0) throw InputError("initial law is empty");
  if ((spec.initial.array() < 0.0).any() ||
      std::abs(spec.initial.sum() - 1.0) > kStochasticTol)
    throw InputError("initial law is not a probability vector");

  for (std::size_t j = 0; j < spec.horizon(); ++j) {
    const auto& p = spec.kernels[j];
    const auto rows = j == 0 ? n0 : spec.kernels[j - 1].cols();
    if (p.rows() != rows)
      throw InputError("kernel " + std::to_string(j) + " has " + std::to_string(p.rows()) +
                       " rows, expected " + std::to_string(rows));
    if (p.cols() == 0) throw InputError("kernel " + std::to_string(j) + " has no columns");
    if ((p.array() < 0.0).any() || !p.allFinite())
      throw InputError("kernel " + std::to_string(j) + " has a negative or non-finite entry");
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      if (std::abs(p.row(r).sum() - 1.0) > kStochasticTol)
        throw InputError("kernel " + std::to_string(j) + " row " + std::to_string(r) +
                         " does not sum to 1");
  }
  if (!spec.allow_degenerate) {
    for (std::size_t j = 0; j <= spec.horizon(); ++j)
      if (spec.states(j) < 2)
        throw InputError("state space " + std::to_string(j) +
                         " has a single state but the chain is not flagged degenerate");
  }
  if (!spec.labels.empty()) {
    if (spec.labels.size() != spec.horizon() + 1)
      throw InputError("labels must cover every index");
    for (std::size_t j = 0; j <= spec.horizon(); ++j)
      if (spec.labels[j].size() != spec.states(j))
        throw InputError("label count mismatch at index " + std::to_string(j));
  }
}

ChainSpec repeat_block(std::span<const Eigen::MatrixXd> block, Eigen::VectorXd initial,
                       std::size_t horizon, double a) {
  if (block.empty()) throw InputError("empty kernel block");
  ChainSpec spec;
  spec.initial = std::move(initial);
  spec.a = a;
  spec.kernels.reserve(horizon);
  for (std::size_t j = 0; j < horizon; ++j) spec.kernels.push_back(block[j % block.size()]);
  return spec;
}

std::vector<Eigen::VectorXd> propagate_marginals(const ChainSpec& spec) {
  std::vector<Eigen::VectorXd> mu;
  mu.reserve(spec.horizon() + 1);
  mu.push_back(spec.initial);
  for (const auto& p : spec.kernels) mu.push_back(p.transpose() * mu.back());
  return mu;
}

namespace {

void check_positive(const Eigen::VectorXd& mu, std::size_t j) {
  for (Eigen::Index x = 0; x < mu.size(); ++x)
    if (!(mu[x] > 0.0)) throw ZeroMarginalError(j, static_cast<std::size_t>(x));
}

Eigen::MatrixXd bayes(const Eigen::MatrixXd& p, const Eigen::VectorXd& mu_j,
                      const Eigen::VectorXd& mu_next) {
  Eigen::MatrixXd b(p.cols(), p.rows());
  for (Eigen::Index x = 0; x < p.cols(); ++x) {
    for (Eigen::Index s = 0; s < p.rows(); ++s) b(x, s) = mu_j[s] * p(s, x) / mu_next[x];
    // Rows are probability vectors up to rounding; renormalize that rounding only.
    b.row(x) /= b.row(x).sum();
  }
  return b;
}

}  // namespace

BackwardKernel backward_kernel(const ChainSpec& spec, std::span<const Eigen::VectorXd> mu,
                               std::size_t j) {
  if (j >= spec.horizon()) throw InputError("backward kernel index beyond horizon");
  check_positive(mu[j + 1], j + 1);
  return {j, bayes(spec.kernels[j], mu[j], mu[j + 1])};
}

BackwardKernel backward_kernel(const ChainSpec& spec, std::size_t j) {
  const auto mu = propagate_marginals(spec);
  return backward_kernel(spec, mu, j);
}

double dobrushin_coefficient(const Eigen::MatrixXd& rows) {
  double best = 0.0;
  for (Eigen::Index x = 0; x < rows.rows(); ++x)
    for (Eigen::Index y = x + 1; y < rows.rows(); ++y)
      best = std::max(best, 0.5 * (rows.row(x) - rows.row(y)).cwiseAbs().sum());
  return std::min(best, 1.0);
}

ChainModel::ChainModel(ChainSpec spec) : spec_(std::move(spec)) {
  validate_spec(spec_);
  sizes_ = spec_.sizes();
  marginals_ = propagate_marginals(spec_);
  for (std::size_t j = 0; j <= horizon(); ++j) check_positive(marginals_[j], j);
  backward_.reserve(horizon());
  for (std::size_t j = 0; j < horizon(); ++j)
    backward_.push_back(bayes(spec_.kernels[j], marginals_[j], marginals_[j + 1]));
}

std::vector<double> ChainModel::window_law(std::size_t j, std::size_t width) const {
  if (width == 0) return {1.0};
  if (j + width > horizon() + 1) throw InputError("window law beyond horizon");
  std::vector<double> law(marginals_[j].data(), marginals_[j].data() + marginals_[j].size());
  std::size_t block = law.size();
  for (std::size_t i = 1; i < width; ++i) {
    const auto& p = spec_.kernels[j + i - 1];
    const std::size_t prev = states(j + i - 1);
    const std::size_t next = states(j + i);
    const std::size_t lower = block / prev;
    std::vector<double> grown(block * next);
    for (std::size_t y = 0; y < next; ++y)
      for (std::size_t idx = 0; idx < block; ++idx) {
        const std::size_t last = idx / lower;  // coordinate j+i-1 is slowest so far
        grown[idx + block * y] = law[idx] * p(static_cast<Eigen::Index>(last),
                                              static_cast<Eigen::Index>(y));
      }
    law = std::move(grown);
    block *= next;
  }
  return law;
}

AssumptionReport validate_assumptions(const ChainModel& model) {
  const std::size_t n = model.horizon();
  if (n < 2) throw InputError("horizon must be at least 2 to validate assumptions");
  AssumptionReport r;
  r.pi.resize(n);
  r.zeta_per_step.resize(n);
  r.zeta = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& b = model.backward(j);
    r.pi[j] = dobrushin_coefficient(b);
    r.zeta_per_step[j] = b.minCoeff();
    r.delta = std::max(r.delta, r.pi[j]);
    r.zeta = std::min(r.zeta, r.zeta_per_step[j]);
    if (!(r.pi[j] < 1.0) && !r.first_contraction_failure) r.first_contraction_failure = j;
    if (!(r.zeta_per_step[j] > 0.0) && !r.first_ellipticity_failure)
      r.first_ellipticity_failure = j;
    const auto& p = model.forward(j);
    const auto& mu = model.marginal(j + 1);
    for (Eigen::Index y = 0; y < p.cols(); ++y)
      r.cond_constant = std::max(r.cond_constant, p.col(y).maxCoeff() / mu[y]);
  }
  r.contraction = r.delta < 1.0;
  r.ellipticity = r.zeta > 0.0;
  r.conditional = std::isfinite(r.cond_constant);
  return r;
}

void require_contraction(const AssumptionReport& r) {
  if (!r.contraction)
    throw AssumptionError("contraction", r.first_contraction_failure,
                          "backward Dobrushin coefficient equals 1");
}

void require_ellipticity(const AssumptionReport& r) {
  if (!r.ellipticity)
    throw AssumptionError("ellipticity", r.first_ellipticity_failure,
                          "a backward transition probability vanishes");
}

double reverse_phi_bound(const AssumptionReport& r, std::size_t n) {
  return std::pow(r.delta, static_cast<double>(n));
}

double reverse_phi_exact(const ChainModel& model, std::size_t n) {
  double best = 0.0;
  const std::size_t N = model.horizon();
  for (std::size_t k = 0; k + n <= N; ++k) {
    // n-step backward law from X_{k+n} down to X_k.
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(
        static_cast<Eigen::Index>(model.states(k + n)),
        static_cast<Eigen::Index>(model.states(k + n)));
    for (std::size_t m = k + n; m-- > k;) q = q * model.backward(m);
    const Eigen::RowVectorXd mu = model.marginal(k).transpose();
    for (Eigen::Index x = 0; x < q.rows(); ++x)
      best = std::max(best, 0.5 * (q.row(x) - mu).cwiseAbs().sum());
  }
  return best;
}

template <class T>
std::vector<T> condition_on_future(const ChainModel& model, std::size_t j,
                                   std::span<const T> table, std::size_t width) {
  if (width == 0) throw InputError("conditioning needs a window of width at least 1");
  if (j + std::max<std::size_t>(width, 2) > model.horizon() + 1)
    throw InputError("conditioning window beyond horizon");
  const std::size_t nb = model.states(j);
  const std::size_t out_width = std::max<std::size_t>(width - 1, 1);
  std::size_t out_size = 1;
  for (std::size_t i = 1; i <= out_width; ++i) out_size *= model.states(j + i);
  const std::size_t tail = width >= 2 ? out_size : 1;
  if (table.size() != nb * tail) throw InputError("table size does not match its window");
  const std::size_t first = model.states(j + 1);
  const auto& b = model.backward(j);
  std::vector<T> out(out_size, T{});
  for (std::size_t o = 0; o < out_size; ++o) {
    const auto x = static_cast<Eigen::Index>(o % first);
    const std::size_t base = nb * (o % tail);
    T acc{};
    for (std::size_t s = 0; s < nb; ++s) acc += b(x, static_cast<Eigen::Index>(s)) * table[base + s];
    out[o] = acc;
  }
  return out;
}

template std::vector<double> condition_on_future<double>(const ChainModel&, std::size_t,
                                                         std::span<const double>, std::size_t);
template std::vector<std::complex<double>> condition_on_future<std::complex<double>>(
    const ChainModel&, std::size_t, std::span<const std::complex<double>>, std::size_t);

}  // namespace mshift
