#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mshift {

inline constexpr double kStochasticTol = 1e-12;

// Finite-horizon inhomogeneous chain X_0..X_N. kernels[j] is |X_j| x |X_{j+1}|.
struct ChainSpec {
  std::vector<Eigen::MatrixXd> kernels;
  Eigen::VectorXd initial;
  double a = 0.5;  // weight of the dynamical distance a^{first disagreement}
  std::vector<std::vector<std::string>> labels;  // optional, per index
  bool allow_degenerate = false;                 // permit single-state spaces

  std::size_t horizon() const noexcept { return kernels.size(); }
  std::size_t states(std::size_t j) const;
  std::vector<std::size_t> sizes() const;
};

// Throws InputError on shape, stochasticity or weight violations. Marginal
// positivity is not checked here.
void validate_spec(const ChainSpec& spec);

// Repeats a block of kernels until `horizon` steps are filled.
ChainSpec repeat_block(std::span<const Eigen::MatrixXd> block, Eigen::VectorXd initial,
                       std::size_t horizon, double a);

std::vector<Eigen::VectorXd> propagate_marginals(const ChainSpec& spec);

struct BackwardKernel {
  std::size_t step = 0;
  Eigen::MatrixXd matrix;  // rows: X_{j+1}, columns: X_j
};

BackwardKernel backward_kernel(const ChainSpec& spec,
                               std::span<const Eigen::VectorXd> marginals, std::size_t j);
BackwardKernel backward_kernel(const ChainSpec& spec, std::size_t j);

// Max total-variation distance between rows.
double dobrushin_coefficient(const Eigen::MatrixXd& rows);
inline double dobrushin_coefficient(const BackwardKernel& b) {
  return dobrushin_coefficient(b.matrix);
}

// Immutable bundle of a validated chain with its marginals and backward
// kernels. Everything downstream reads from this.
class ChainModel {
 public:
  explicit ChainModel(ChainSpec spec);

  const ChainSpec& spec() const noexcept { return spec_; }
  std::size_t horizon() const noexcept { return spec_.horizon(); }
  std::size_t states(std::size_t j) const { return sizes_[j]; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  double a() const noexcept { return spec_.a; }
  const Eigen::MatrixXd& forward(std::size_t j) const { return spec_.kernels[j]; }
  const Eigen::VectorXd& marginal(std::size_t j) const { return marginals_[j]; }
  const std::vector<Eigen::VectorXd>& marginals() const noexcept { return marginals_; }
  const Eigen::MatrixXd& backward(std::size_t j) const { return backward_[j]; }

  // Joint law of (X_j, …, X_{j+width-1}), first coordinate fastest.
  std::vector<double> window_law(std::size_t j, std::size_t width) const;

 private:
  ChainSpec spec_;
  std::vector<std::size_t> sizes_;
  std::vector<Eigen::VectorXd> marginals_;
  std::vector<Eigen::MatrixXd> backward_;
};

struct AssumptionReport {
  double delta = 0.0;  // max_j pi_j
  double zeta = 0.0;   // min backward entry
  std::size_t n0 = 1;
  double cond_constant = 0.0;  // max p_j(x,y) / mu_{j+1}(y)
  bool contraction = false;    // delta < 1
  bool ellipticity = false;    // zeta > 0
  bool conditional = false;    // cond_constant finite
  std::vector<double> pi;
  std::vector<double> zeta_per_step;
  std::optional<std::size_t> first_contraction_failure;
  std::optional<std::size_t> first_ellipticity_failure;

  bool all_pass() const noexcept { return contraction && ellipticity && conditional; }
};

AssumptionReport validate_assumptions(const ChainModel& model);

// Throws AssumptionError naming the first failing step.
void require_contraction(const AssumptionReport& report);
void require_ellipticity(const AssumptionReport& report);

double reverse_phi_bound(const AssumptionReport& report, std::size_t n);

// sup over k of the max TV distance between law(X_k | X_{k+n} = x) and mu_k.
double reverse_phi_exact(const ChainModel& model, std::size_t n);

// Applies E[ . | X_{j+1}, …] to a table over X_j..X_{j+w-1}; the result lives
// on X_{j+1}..X_{j+max(w-1,1)}.
template <class T>
std::vector<T> condition_on_future(const ChainModel& model, std::size_t j,
                                   std::span<const T> table, std::size_t width);

}  // namespace mshift
