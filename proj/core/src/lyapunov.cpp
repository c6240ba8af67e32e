#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "mshift/error.hpp"
#include "mshift/matrix_products.hpp"

namespace mshift {

namespace {

Eigen::MatrixXd orthonormal_step(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

struct Base {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double gap = 0.0;
};

Base decompose(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InputError("base matrix must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("eigen decomposition of the base matrix failed");
  const auto d = a.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(es.eigenvalues()[i].imag()) > 1e-12 * (1 + std::abs(es.eigenvalues()[i])))
      throw InputError("base matrix has complex eigenvalues");
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::abs(es.eigenvalues()[x].real()) < std::abs(es.eigenvalues()[y].real());
  });
  Base b;
  b.values.resize(d);
  b.vectors.resize(d, d);
  b.gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto o = order[static_cast<std::size_t>(k)];
    b.values[k] = es.eigenvalues()[o].real();
    Eigen::VectorXd v = es.eigenvectors().col(o).real();
    v.normalize();
    Eigen::Index at;
    v.cwiseAbs().maxCoeff(&at);
    if (v[at] < 0) v = -v;
    b.vectors.col(k) = v;
    if (k > 0) b.gap = std::min(b.gap, std::abs(b.values[k]) - std::abs(b.values[k - 1]));
  }
  if (d > 1 && !(b.gap > 1e-12)) throw InputError("base eigenvalues must have distinct moduli");
  return b;
}

}  // namespace

std::vector<Eigen::MatrixXd> perturbation_along(std::span<const std::uint32_t> path,
                                                const std::vector<Eigen::MatrixXd>& table) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(path.size());
  for (auto x : path) {
    if (x >= table.size()) throw InputError("perturbation table does not cover the state");
    out.push_back(table[x]);
  }
  return out;
}

HyperbolicSplitting lyapunov_splitting(const Eigen::MatrixXd& a,
                                       const std::vector<Eigen::MatrixXd>& perturbation, double eps,
                                       std::size_t window, const SplittingOptions& opts) {
  const Base base = decompose(a);
  const auto d = a.rows();
  double bnorm = 0.0;
  for (const auto& b : perturbation) {
    if (b.rows() != d || b.cols() != d) throw InputError("perturbation has the wrong shape");
    bnorm = std::max(bnorm, b.jacobiSvd().singularValues()[0]);
  }
  if (d > 1 && eps * bnorm > opts.gap_fraction * base.gap) {
    std::ostringstream e;
    e << "perturbation eps*|B| = " << eps * bnorm << " exceeds " << opts.gap_fraction
      << " of the eigenvalue gap " << base.gap;
    throw InputError(e.str());
  }
  const std::size_t T = perturbation.size();
  if (window == 0 || 2 * window >= T) throw InputError("horizon too short for the splitting window");

  HyperbolicSplitting out;
  out.base_values = base.values;
  out.base_vectors = base.vectors;
  out.eps = eps;
  out.window = window;
  out.first = window;
  out.last = T - window;
  auto A = [&](std::size_t k) -> Eigen::MatrixXd { return a + eps * perturbation[k]; };

  for (std::size_t j = out.first; j <= out.last; ++j) {
    Eigen::MatrixXd qb = Eigen::MatrixXd::Identity(d, d);
    for (std::size_t k = j - window; k < j; ++k) qb = orthonormal_step(A(k) * qb);
    Eigen::MatrixXd qf = Eigen::MatrixXd::Identity(d, d);
    for (std::size_t k = j + window; k-- > j;) qf = orthonormal_step(A(k).transpose() * qf);
    Eigen::MatrixXd hj(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      // slow side: directions 0..i; fast side: directions i..d-1
      const Eigen::MatrixXd S = qf.rightCols(i + 1);
      const Eigen::MatrixXd F = qb.leftCols(d - i);
      Eigen::MatrixXd M(d, d + 1);
      M << S, -F;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
      const double smallest = svd.singularValues()[d - 1];
      const double cond = smallest > 0 ? 1.0 / smallest : std::numeric_limits<double>::infinity();
      out.worst_condition = std::max(out.worst_condition, cond);
      if (cond > opts.max_condition) {
        std::ostringstream e;
        e << "subspace intersection ill-conditioned at j = " << j << ", direction " << i
          << ": condition number " << cond;
        throw NumericalError(e.str());
      }
      const Eigen::VectorXd null = svd.matrixV().col(d);
      Eigen::VectorXd v = S * null.head(i + 1);
      v.normalize();
      if (v.dot(base.vectors.col(i)) < 0) v = -v;
      hj.col(i) = v;
      out.vector_deviation = std::max(out.vector_deviation, (v - base.vectors.col(i)).norm());
    }
    out.h.push_back(std::move(hj));
  }
  for (std::size_t j = out.first; j < out.last; ++j) {
    const auto& h0 = out.h[j - out.first];
    const auto& h1 = out.h[j - out.first + 1];
    const Eigen::MatrixXd Aj = A(j);
    Eigen::VectorXd lam(d);
    double res = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::VectorXd img = Aj * h0.col(i);
      lam[i] = h1.col(i).dot(img);
      res = std::max(res, (img - lam[i] * h1.col(i)).norm());
      out.lambda_deviation = std::max(out.lambda_deviation, std::abs(lam[i] - base.values[i]));
    }
    out.lambda.push_back(lam);
    out.residual.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
  }
  return out;
}

EpsilonStudy epsilon_study(const Eigen::MatrixXd& a, const std::vector<Eigen::MatrixXd>& perturbation,
                           std::span<const double> eps_grid, std::size_t window,
                           const SplittingOptions& opts) {
  EpsilonStudy st;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double e : eps_grid) {
    const auto s = lyapunov_splitting(a, perturbation, e, window, opts);
    st.eps.push_back(e);
    st.lambda_deviation.push_back(s.lambda_deviation);
    st.vector_deviation.push_back(s.vector_deviation);
    st.max_residual.push_back(s.max_residual);
    if (e > 0) {
      lo = std::min(lo, s.lambda_deviation / e);
      hi = std::max(hi, s.lambda_deviation / e);
    }
  }
  st.slope_spread = lo > 0 && std::isfinite(lo) ? hi / lo : std::numeric_limits<double>::infinity();
  return st;
}

}  // namespace mshift
