#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mshift/window.hpp"

namespace mshift {

class ChainModel;
class WindowObservable;

using cd = std::complex<double>;
using CVec = std::vector<cd>;

// L_{j,z} h = E[e^{z f_j} h | X_{j+1}, …] acting on functions of
// V_j = (X_j, …, X_{j+W-1}), W = max(future depth of f, 1).
class TwistedCocycle {
 public:
  TwistedCocycle(const ChainModel& model, const WindowObservable& f, cd z);
  // Untwisted transfer operator on windows of the given width.
  TwistedCocycle(const ChainModel& model, std::size_t width);

  const ChainModel& model() const noexcept { return *model_; }
  cd z() const noexcept { return z_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t steps() const noexcept { return steps_; }  // operators T_0 .. T_{steps-1}
  const WindowShape& space(std::size_t j) const { return spaces_[j]; }
  std::size_t dim(std::size_t j) const { return spaces_[j].size(); }

  CVec apply(std::size_t j, std::span<const cd> h) const;
  // Row vector psi on V_{j+1} pulled back to V_j: (psi ∘ T_j).
  CVec apply_adjoint(std::size_t j, std::span<const cd> psi) const;
  Eigen::MatrixXcd matrix(std::size_t j) const;
  // L_j^n as a dense |V_{j+n}| x |V_j| matrix; identity for n = 0.
  Eigen::MatrixXcd compose(std::size_t j, std::size_t n) const;
  CVec propagate(std::size_t j, std::size_t n, CVec h) const;
  CVec pullback(std::size_t j, std::size_t n, CVec psi) const;

  // E exp(z S_n) for n = 1..n_max.
  std::vector<cd> characteristic_curve(std::size_t n_max) const;
  cd characteristic(std::size_t n) const;

 private:
  void init_spaces();

  const ChainModel* model_;
  cd z_{0.0, 0.0};
  std::size_t width_ = 1;
  std::size_t steps_ = 0;
  std::vector<WindowShape> spaces_;
  std::vector<CVec> twist_;  // per step, over X_j × V_{j+1}; empty when untwisted
};

// ---- norms ---------------------------------------------------------------

double sup_norm(std::span<const cd> h);
// Variation with the first coordinate as origin (one-sided windows).
double window_variation(const WindowShape& shape, std::span<const cd> h, double a);
double window_variation(const WindowShape& shape, std::span<const double> h, double a);
// ||g||_* = max(sup, v / (2 C1)).
double star_norm(const WindowShape& shape, std::span<const cd> h, double a, double c1);

struct LyConstants {
  double c1 = 1.0;     // certified: 1 + T v_max a/(1-a) + 2 delta
  double delta = 0.0;  // max backward Dobrushin coefficient over the used steps
  double vmax = 0.0;   // max variation of f_j
  double t_max = 0.0;
  double a = 0.5;
  std::size_t k0 = 1;  // smallest k with 2 C1 a^k <= 1
};

LyConstants ly_constants(const ChainModel& model, const WindowObservable& f, double t_max);
std::size_t k0_for(double c1, double a);
// max(1, (C1 - 1)/(2 C1) + a^n): valid ||L^n||_* bound for every |t| <= t_max.
double ly_norm_cap(const LyConstants& c, std::size_t n);

// Upper bound of sup_{||g||_* <= 1} |psi(g)| via the prefix-tree split.
double dual_star_bound(const WindowShape& shape, std::span<const cd> psi, double a, double c1);

struct NormSandwich {
  double lower = 0.0;
  double upper = 0.0;
  double upper_ly = 0.0;
  double upper_dual = 0.0;  // +inf when skipped (space too large)
};

inline constexpr std::size_t kDualBoundMaxDim = 96;

// Sandwich for ||L_{j,t}^n||_* on window functions: the lower side is the best
// ratio over 𝟙 and `samples` random-phase functions, the upper side the
// certified min of the LY cap and the dual-functional bound.
NormSandwich norm_estimate(const TwistedCocycle& cocycle, std::size_t j, std::size_t n,
                           const LyConstants& c, std::size_t samples, std::uint64_t seed);

// Certified upper bounds for the subintervals [j+i, j+i+m) of [j, j+len) with
// m <= max_length, closed under splitting: U(i, m) <= U(i, k) U(i+k, m-k).
// Indexed [i][m]; entry 0 of each row is 1 (empty interval).
std::vector<std::vector<double>> certified_upper_table(const TwistedCocycle& cocycle,
                                                       std::size_t j, std::size_t len,
                                                       std::size_t max_length,
                                                       const LyConstants& c);

// ---- sequential Perron–Frobenius -------------------------------------------

struct DecayCurve {
  std::vector<double> values;  // n = 0..N
  double c = 0.0;              // smallest C making C gamma^n dominate
  double gamma = 0.0;          // least-squares rate
  double ceiling = 0.0;        // delta + a
  bool dominated = true;
};

// ||L_j^n g - kappa_j(g)||_{j+n} for n = 0..n_max with the untwisted operator.
DecayCurve rpf_decay(const ChainModel& model, std::size_t width, std::span<const double> g,
                     std::size_t j, std::size_t n_max);

// Fitted contraction rate from indicator functions of the window at j.
double fitted_mixing_rate(const ChainModel& model, std::size_t width, std::size_t j,
                          std::size_t n_max);

struct RpfOptions {
  std::size_t burn = 0;  // 0: derive from the fitted mixing rate
  double tol = 1e-10;
  double collapse = 1e-8;  // normalizers below this abort
};

struct RpfTriple {
  cd z;
  std::size_t burn = 0;
  std::vector<cd> lambda;  // lambda_j, j < steps
  std::vector<CVec> h;     // h_j, j <= steps
  std::vector<CVec> kappa; // kappa_j as weights on V_j
  std::vector<double> residual;  // ||L_j h_j - lambda_j h_{j+1}||_inf

  double interior_residual() const;
  // log prod_{j<n} lambda_j
  cd log_lambda(std::size_t n) const;
};

RpfTriple complex_rpf(const ChainModel& model, const WindowObservable& f, cd z,
                      RpfOptions opts = {});

struct LyPoint {
  double t;
  std::size_t n;
  double lhs;        // ||L^n h||_{sup+var}
  double rhs_unit;   // ||h||_inf + a^n v(h)
  double sup_ratio;  // ||L^n h||_inf / ||h||_inf
};

struct LyCheck {
  LyConstants constants;
  double c1_empirical = 0.0;
  bool holds = true;
  bool sup_contracts = true;
  std::vector<LyPoint> points;
};

LyCheck lasota_yorke_check(const ChainModel& model, const WindowObservable& f,
                           std::span<const cd> h, std::size_t j, std::size_t n_max,
                           std::span<const double> t_grid);

// ---- contracting blocks ------------------------------------------------------

struct Interval {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const noexcept { return end - begin; }
};

struct BlockScan {
  std::vector<Interval> contracting;
  std::vector<Interval> complementary;
  std::size_t count = 0;
  std::size_t k0 = 0;
  double theta = 0.05;
};

BlockScan contracting_blocks(const ChainModel& model, const WindowObservable& f,
                             std::span<const double> t_grid, std::size_t n, std::size_t D,
                             double theta = 0.05, std::size_t threads = 1);

}  // namespace mshift
