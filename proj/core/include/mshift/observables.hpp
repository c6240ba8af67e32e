#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mshift/window.hpp"

namespace mshift {

class ChainModel;

// f_j(x_{j-past}, …, x_{j+future}); values indexed by the window, earliest
// coordinate fastest.
struct WindowTerm {
  std::size_t past = 0;
  std::size_t future = 0;
  std::vector<double> values;
};

class WindowObservable {
 public:
  WindowObservable() = default;
  // sizes = |X_0| .. |X_N|. Throws InputError on windows that leave the horizon
  // or tables of the wrong size.
  WindowObservable(std::vector<std::size_t> sizes, std::vector<WindowTerm> terms);

  std::size_t length() const noexcept { return terms_.size(); }
  const WindowTerm& term(std::size_t j) const { return terms_[j]; }
  const std::vector<WindowTerm>& terms() const noexcept { return terms_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  WindowShape shape(std::size_t j) const;

  bool one_sided() const noexcept { return max_past_ == 0; }
  bool integer_valued() const noexcept { return integer_; }
  std::size_t max_past() const noexcept { return max_past_; }
  std::size_t max_future() const noexcept { return max_future_; }

  // f_j evaluated on a path indexed by absolute time.
  double evaluate(std::size_t j, std::span<const std::size_t> path) const;
  double partial_sum(std::size_t n, std::span<const std::size_t> path) const;

  WindowObservable prefix(std::size_t n) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<WindowTerm> terms_;
  std::size_t max_past_ = 0;
  std::size_t max_future_ = 0;
  bool integer_ = false;
};

inline constexpr double kIntegerTol = 1e-12;

using TermFunction = std::function<double(std::size_t j, std::span<const std::size_t> window)>;

// Generic builder: fn receives the window coordinates x_{j-past}..x_{j+future}.
WindowObservable tabulate(std::span<const std::size_t> sizes, std::size_t n, std::size_t past,
                          std::size_t future, const TermFunction& fn);

// f_j = scale_j * values[x_j]; `scales` empty means all ones.
WindowObservable coordinate_observable(std::span<const std::size_t> sizes, std::size_t n,
                                       std::span<const double> values,
                                       std::span<const double> scales = {});

// f_j = w_j(x_j) - w_{j+1}(x_{j+1}).
WindowObservable coboundary_observable(std::span<const std::size_t> sizes, std::size_t n,
                                       const std::vector<std::vector<double>>& w);

// Termwise sum; windows are merged to the union.
WindowObservable add(const WindowObservable& f, const WindowObservable& g);
WindowObservable add_constants(const WindowObservable& f, std::span<const double> c);
WindowObservable scale(const WindowObservable& f, double s);
// Same term with windows widened to the given depths (ignored coordinates).
WindowTerm widen(const WindowTerm& t, std::span<const std::size_t> sizes, std::size_t j,
                 std::size_t past, std::size_t future);

// v(g) = max |g(x)-g(y)| / a^{k(x,y)}; `origin` is the window position of
// relative coordinate 0, and k counts from there in both directions.
double variation(const WindowShape& shape, std::span<const double> values, std::size_t origin,
                 double a);
double variation(const WindowShape& shape, std::span<const std::complex<double>> values,
                 std::size_t origin, double a);
double term_variation(const WindowObservable& f, std::size_t j, double a);

struct NormData {
  double sup_norm = 0.0;
  double variation = 0.0;
  double combined() const noexcept { return sup_norm + variation; }
};

NormData norm_data(const WindowObservable& f, double a);

// ---- decompositions -------------------------------------------------------

// Anchor state per absolute index; empty means state 0 everywhere.
using Anchor = std::vector<std::size_t>;

struct SinaiReduction {
  WindowObservable transfer;  // u_0 .. u_n
  WindowObservable reduced;   // g, one-sided
  double residual = 0.0;      // sup |f_j - (g_j - u_{j+1} + u_j)|
};

// g_j = f_j + u_{j+1} - u_j with u_j = sum_k (f_{j+k}(x) - f_{j+k}(anchor below j, x)).
SinaiReduction sinai_reduce(const WindowObservable& f, const Anchor& anchor = {});

struct Decomposition {
  std::vector<double> means;
  WindowObservable martingale;  // M_j, one term per j
  WindowObservable transfer;    // u_j, j = 0..n
  std::vector<double> martingale_variance;
  double martingale_variance_sum = 0.0;
  double residual = 0.0;           // sup |f_j - mean_j - M_j - u_{j+1} + u_j|
  double martingale_defect = 0.0;  // sup |E[M_j | X_{j+1}, …]|
  std::size_t depth = 0;           // truncation depth of the conditional sums
  std::optional<double> span;      // lattice span h when supplied by a caller
};

// Exact when depth is empty; otherwise sums only the last `depth` conditional
// terms (the identity stays exact and the truncation shows up as a defect).
Decomposition gordin_decomposition(const ChainModel& model, const WindowObservable& f,
                                   std::optional<std::size_t> depth = std::nullopt);

// Smallest depth with rate^d <= tol (at least 1).
std::size_t default_gordin_depth(double rate, double tol = 1e-10);

// H_k(x) = S_k f(anchor_0..anchor_{k-1}, x) - S_k f(anchor). Only terms
// m >= k - q see x, so H_k lives on X_k .. X_{k+q-1} (width floored at 1).
struct AnchorCoboundary {
  WindowShape shape;
  std::vector<double> values;
};
AnchorCoboundary anchor_coboundary(const WindowObservable& f, const Anchor& anchor,
                                   std::size_t k);
// sup_x |Delta_{j,l}(x)| for each l, where
// Delta_{j,l} = H_{j,l+1}∘T - H_{j,l} - (H_{j+l+1}∘T - H_{j+l})
// and H_{j,l} is the anchor coboundary of the block sum S_{j,l}.
std::vector<double> anchor_residuals(const WindowObservable& f, const Anchor& anchor,
                                     std::size_t j, std::span<const std::size_t> ls);

// f_j = sum_{|k|<=K} a_k g_{j-k}(x_{j-k}). `coeffs` lists a_k for
// k = -Kmax..Kmax (the declared support, Kmax >= K); `base[m][x]` is g_m, or a
// single row shared by every m. Lags pointing outside [0, N] are dropped.
struct LinearProcess {
  WindowObservable observable;
  double tail_bound = 0.0;  // sum_{K<|k|<=Kmax} |a_k| * max ||g||
};
LinearProcess build_linear_process(std::span<const std::size_t> sizes, std::size_t n,
                                   std::span<const double> coeffs, std::size_t K,
                                   const std::vector<std::vector<double>>& base);

}  // namespace mshift
