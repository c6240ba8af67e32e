#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mshift/observables.hpp"
#include "mshift/report.hpp"

namespace mshift {

class ChainModel;

// d x d matrices A_j(x) with entries in [1/C, C], one per time step and state.
struct PositiveMatrixFamily {
  std::size_t dim = 0;
  double bound = 1.0;                               // C
  std::vector<std::vector<Eigen::MatrixXd>> steps;  // [j][x]

  const Eigen::MatrixXd& at(std::size_t j, std::size_t x) const { return steps[j][x]; }
  std::size_t horizon() const noexcept { return steps.size(); }
};

// Throws InputError on shape mismatch or entries outside [1/C, C] (1e-12 slack).
void validate_family(const PositiveMatrixFamily& fam);

PositiveMatrixFamily constant_family(const Eigen::MatrixXd& a, std::span<const std::size_t> sizes,
                                     double bound);
// Entries log-uniform in [1/C, C]; one matrix per (j, x), seeded.
PositiveMatrixFamily random_family(std::span<const std::size_t> sizes, std::size_t dim,
                                   double bound, std::uint64_t seed);
// One matrix per state, shared by every step.
PositiveMatrixFamily state_family(const std::vector<Eigen::MatrixXd>& per_state,
                                  std::span<const std::size_t> sizes, double bound);

// Hilbert projective diameter of the cone spanned by the columns.
double hilbert_diameter(const Eigen::MatrixXd& a);

struct BirkhoffRate {
  double rate = 0.0;           // tanh(diameter / 4)
  double diameter = 0.0;       // max over the family
  double diameter_bound = 0.0; // log(C^4 d^2), a priori
};
BirkhoffRate birkhoff_rate(const PositiveMatrixFamily& fam);

// lambda_j = mu(A_{j+w} ... A_j 1) / mu(A_{j+w} ... A_{j+1} 1) with mu the
// sum of entries, stored as the window observable log lambda_j.
struct SequentialPf {
  std::size_t window = 0;
  BirkhoffRate birkhoff;
  double log_tail = 0.0;      // |log lambda_j - log F_{j,w}| <= diameter * rate^(w-1)
  double lambda_tail = 0.0;   // same bound for |lambda_j - F_{j,w}|
  double lambda_min = 0.0;    // observed range of F_{j,w}
  double lambda_max = 0.0;
  double sandwich = 0.0;      // log(d C^2): |log||A_0^n|| - S_n log lambda| bound
  WindowObservable log_lambda;
};
SequentialPf sequential_pf(const PositiveMatrixFamily& fam, const ChainModel& model,
                           std::size_t window);

struct RrpfCertificate {
  std::vector<std::size_t> n;
  std::vector<double> residual;  // max over paths of the max-entry residual
  double gamma = 0.0;            // fitted decay rate
  double c = 0.0;                // dominating constant
  double birkhoff_rate = 0.0;
  std::size_t paths = 0;
  bool exhaustive = false;
  double normalization_drift = 0.0;  // max |nu_j(h_j) - 1|
};

// Residual ||A_j^n / lambda_{j,n} - h_{j+n} (x) nu_j||_max with h and nu taken
// from products of depth `depth` on either side. Enumerates every path when
// there are at most `exhaustive_limit`, else samples `samples` paths.
RrpfCertificate rrpf_certificate(const PositiveMatrixFamily& fam, const ChainModel& model,
                                 std::size_t j, std::span<const std::size_t> n_grid,
                                 std::size_t depth, std::size_t samples, std::uint64_t seed,
                                 std::size_t exhaustive_limit = 4096);

enum class MatrixNorm { max_entry, entry_sum };

struct SandwichCheck {
  double max_deviation = 0.0;  // sup over paths and n <= n_max
  double bound = 0.0;          // log(d C^2) + n_max * log_tail
  std::size_t paths = 0;
  bool exhaustive = false;
  bool holds = false;
};

SandwichCheck lognorm_sandwich(const PositiveMatrixFamily& fam, const ChainModel& model,
                               const SequentialPf& pf, std::size_t n_max, MatrixNorm norm,
                               std::size_t samples, std::uint64_t seed,
                               std::size_t exhaustive_limit = 1u << 18);

struct LogNormOptions {
  MatrixNorm norm = MatrixNorm::max_entry;
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
  double tolerance = 0.05;
  std::size_t sandwich_samples = 2000;
};

// Runs the sandwich, the regime classifier and Monte Carlo comparisons for
// log ||A_0^n|| against the partial sums of log lambda_j.
LltReport lognorm_llt(const PositiveMatrixFamily& fam, const ChainModel& model,
                      const SequentialPf& pf, std::span<const std::size_t> n_grid,
                      const LogNormOptions& opts = {});

// ---- perturbed hyperbolic products ------------------------------------------------

struct HyperbolicSplitting {
  Eigen::VectorXd base_values;   // eigenvalues of A by increasing modulus
  Eigen::MatrixXd base_vectors;  // unit columns
  double eps = 0.0;
  std::size_t window = 0;
  std::size_t first = 0;  // interior range [first, last]
  std::size_t last = 0;
  std::vector<Eigen::VectorXd> lambda;  // lambda_{j,i}, j in [first, last)
  std::vector<Eigen::MatrixXd> h;       // h_{j,i} as columns, j in [first, last]
  std::vector<double> residual;         // max_i |A_j h_{j,i} - lambda_{j,i} h_{j+1,i}|
  double max_residual = 0.0;
  double lambda_deviation = 0.0;  // sup_j max_i |lambda_{j,i} - lambda_i|
  double vector_deviation = 0.0;  // sup_j max_i |h_{j,i} - h_i|
  double worst_condition = 0.0;   // of the subspace intersections
};

struct SplittingOptions {
  double gap_fraction = 0.25;    // eps * max|B_j| must stay below this fraction of the gap
  double max_condition = 1e10;
};

// A_j = A + eps * B_j for j < B.size(); h_{j,i} from the window [j-w, j+w].
HyperbolicSplitting lyapunov_splitting(const Eigen::MatrixXd& a,
                                       const std::vector<Eigen::MatrixXd>& perturbation, double eps,
                                       std::size_t window, const SplittingOptions& opts = {});

// B_j = table[x_j] along a path.
std::vector<Eigen::MatrixXd> perturbation_along(std::span<const std::uint32_t> path,
                                                const std::vector<Eigen::MatrixXd>& table);

struct EpsilonStudy {
  std::vector<double> eps;
  std::vector<double> lambda_deviation;
  std::vector<double> vector_deviation;
  std::vector<double> max_residual;
  double slope_spread = 0.0;  // max/min of lambda_deviation / eps
};

EpsilonStudy epsilon_study(const Eigen::MatrixXd& a, const std::vector<Eigen::MatrixXd>& perturbation,
                           std::span<const double> eps_grid, std::size_t window,
                           const SplittingOptions& opts = {});

}  // namespace mshift
