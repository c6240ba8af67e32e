#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mshift/kernel.hpp"
#include "mshift/observables.hpp"
#include "mshift/report.hpp"
#include "mshift/window.hpp"

namespace mshift {

class ChainModel;

// ---- forward dynamic programming over sliding windows ------------------------

// State after processing the terms that close at time e is the window
// X_{e-L+1..e}, L = P + Q + 1. Terms are padded to the common future depth Q
// so that term k closes exactly at e = k + Q.
class ForwardLayout {
 public:
  ForwardLayout(const ChainModel& model, const WindowObservable& f, std::size_t n);

  std::size_t terms() const noexcept { return n_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t init_terms() const noexcept { return init_terms_; }
  std::size_t extensions() const noexcept { return n_ - init_terms_; }
  // Space before any extension (s = 0) and after s extensions.
  const WindowShape& space(std::size_t s) const { return spaces_[s]; }
  const std::vector<double>& initial_law() const noexcept { return law_; }
  // Term k (< init_terms) on the initial window.
  const std::vector<double>& initial_term(std::size_t k) const { return init_values_[k]; }
  // Term closed by extension s (1-based) on the window after the extension.
  const std::vector<double>& extension_term(std::size_t s) const { return ext_values_[s - 1]; }

  // Calls fn(from, to, prob) for every transition of extension s (1-based).
  template <class Fn>
  void for_each_move(std::size_t s, Fn&& fn) const {
    const auto& from = spaces_[s - 1];
    const auto& to = spaces_[s];
    const auto& p = *kernels_[s - 1];
    const std::size_t drop = from.radix(0);
    const std::size_t last_stride = from.prefix_size(from.width() - 1);
    const std::size_t rest = from.size() / drop;
    const std::size_t ny = to.radix(to.width() - 1);
    for (std::size_t idx = 0; idx < from.size(); ++idx) {
      const std::size_t last = idx / last_stride;
      const std::size_t base = idx / drop;
      for (std::size_t y = 0; y < ny; ++y) {
        const double pr = p(static_cast<long>(last), static_cast<long>(y));
        if (pr > 0.0) fn(idx, base + rest * y, pr);
      }
    }
  }

 private:
  std::size_t n_ = 0;
  std::size_t width_ = 1;
  std::size_t init_terms_ = 0;
  std::vector<WindowShape> spaces_;
  std::vector<double> law_;
  std::vector<std::vector<double>> init_values_;
  std::vector<std::vector<double>> ext_values_;
  std::vector<const Eigen::MatrixXd*> kernels_;
};

// E exp(i t S_m), m = 1..n, by forward DP (works for two-sided observables).
std::vector<std::complex<double>> forward_characteristic(const ChainModel& model,
                                                         const WindowObservable& f, double t,
                                                         std::size_t n);
// Same quantity through the transfer cocycle when f is one-sided, else forward DP.
std::vector<std::complex<double>> characteristic_curve(const ChainModel& model,
                                                       const WindowObservable& f, double t,
                                                       std::size_t n);

// max over start and end windows of |E[exp(i t S_m) | start, end]|, m = 1..n.
std::vector<double> bridge_sup_curve(const ChainModel& model, const WindowObservable& f, double t,
                                     std::size_t n);

// ---- moments -------------------------------------------------------------------

struct MomentData {
  std::vector<std::size_t> n;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> third;  // third central moment
};

MomentData exact_moments(const ChainModel& model, const WindowObservable& f,
                         std::span<const std::size_t> n_grid);
// Forward-DP route (also handles two-sided observables).
MomentData forward_moments(const ChainModel& model, const WindowObservable& f,
                           std::span<const std::size_t> n_grid);

enum class Regime { divergent, bounded, inconclusive };
const char* to_string(Regime r) noexcept;

struct VarianceRegime {
  Regime regime = Regime::inconclusive;
  std::vector<double> variance;  // Var S_n, n = 1..horizon
  double slope = 0.0;            // least-squares slope over the last half
  double tail_increase = 0.0;    // slope * half length
  double max_variance = 0.0;
  std::optional<Decomposition> decomposition;  // when bounded
  std::string evidence;
};

VarianceRegime variance_regime(const ChainModel& model, const WindowObservable& f,
                               std::optional<std::size_t> horizon = std::nullopt);

// ---- corange ---------------------------------------------------------------------

struct CorangeOptions {
  double t_max = 7.0;
  double resolution = 1e-3;
  std::size_t n_max = 200;
  std::size_t samples = 4;  // random-phase test functions
  double rate_threshold = 1.0 - 1e-6;
  double noise_floor = 1e-10;
  std::uint64_t seed = 0x5eedULL;
  std::size_t threads = 1;
  bool check_regime = true;
  // Two-sided inputs whose bridge sweep would cost more than this many
  // operations per frequency are scanned through their one-sided reduction.
  double bridge_budget = 5e7;
};

struct CorangeResult {
  bool all_frequencies = false;  // variance bounded: corange is the whole line
  bool irreducible = false;
  double scan_max_t = 0.0;
  std::optional<double> t0;
  std::optional<double> h0;
  bool integer_valued = false;
  std::optional<bool> span_exceeds_one;  // integer-valued inputs only
  std::vector<double> cluster_centers;
  std::string message;
  // Evidence curve: fitted rate per grid frequency.
  std::vector<double> t_grid;
  std::vector<double> rates;
};

CorangeResult corange_scan(const ChainModel& model, const WindowObservable& f,
                           const CorangeOptions& opts = {});

// Decay statistic at one frequency for m = 1..n (what the scan fits).
std::vector<double> corange_statistic(const ChainModel& model, const WindowObservable& f, double t,
                                      std::size_t n, std::size_t samples, std::uint64_t seed);

// ---- exact distributions ------------------------------------------------------------

// Values of the form scale * (a + b * beta) with integers a, b; beta = 0 means
// plain integers times scale.
struct LatticeSpec {
  double beta = 0.0;
  double scale = 1.0;
  long b_bound = 64;
  std::size_t max_atoms = 4'000'000;
};

struct LatticeDistribution {
  LatticeSpec lattice;
  std::vector<long> a;
  std::vector<long> b;
  std::vector<double> value;  // sorted ascending
  std::vector<double> prob;
  double total() const;
};

LatticeDistribution lattice_distribution(const ChainModel& model, const WindowObservable& f,
                                         std::size_t n, const LatticeSpec& lattice = {});

// ---- LLT and Edgeworth checks -------------------------------------------------------

struct LatticeLltOptions {
  double threshold = 0.02;  // asserted at the largest n
  bool require_envelope = true;
  CorangeOptions corange{.t_max = 6.8, .resolution = 1e-3, .n_max = 200};
  bool run_corange = true;
};

LltReport lattice_llt_check(const ChainModel& model, const WindowObservable& f,
                            std::span<const std::size_t> n_grid, const LatticeLltOptions& opts = {});

struct NonLatticeOptions {
  double tolerance = 0.05;
  std::optional<LatticeSpec> lattice;  // exact route when set
  std::size_t mc_samples = 0;          // Monte Carlo route (also run when > 0)
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::optional<CorangeOptions> corange;  // run the scan as a precondition
};

struct NonLatticeResult {
  std::vector<double> u;
  std::vector<double> error;        // exact route
  std::vector<double> mc_error;     // Monte Carlo route
  std::vector<double> mc_error_se;  // scaled standard errors
  std::vector<double> exact_expect; // E g(S_n - u)
  std::vector<double> mc_expect;
  std::vector<double> mc_expect_se;
  double sigma = 0.0;
  double mean = 0.0;
  double sup_error = 0.0;
  double mc_sup_error = 0.0;
  double max_z = 0.0;  // max |exact - mc| / se
  LltReport report;
};

NonLatticeResult nonlattice_llt_check(const ChainModel& model, const WindowObservable& f,
                                      std::size_t n, const TestKernel& g,
                                      std::span<const double> u_grid,
                                      const NonLatticeOptions& opts);

struct EdgeworthPoint {
  std::size_t n;
  double sigma;
  double third;
  double residual_gauss;      // sigma * sup |F - Phi|
  double residual_paper;      // (t^3 - 3t) polynomial
  double residual_classical;  // (1 - t^2) polynomial
  double correction_scale;    // sigma * sup_t |classical correction|
};

struct EdgeworthResult {
  std::vector<EdgeworthPoint> points;
  std::string best_variant;  // "classical" or "cubic"
  double correction_ratio = 0.0;  // max c_n / min c_n
  LltReport report;
};

EdgeworthResult edgeworth_check(const ChainModel& model, const WindowObservable& f,
                                std::span<const std::size_t> n_grid, const LatticeSpec& lattice,
                                double tolerance = 0.2);

struct SmallTFit {
  double c2 = 0.0;      // upper: ||L^n_t|| <= C2 exp(-c2 sigma^2 t^2)
  double big_c2 = 1.0;
  double c_lower = 0.0; // |E e^{itS_n}| >= exp(-c_lower sigma^2 t^2)
  bool lower_consistent = true;
  bool degenerate = false;  // bounded variance: fit undefined
  LltReport report;
};

SmallTFit small_t_gaussian_bound(const ChainModel& model, const WindowObservable& f, double delta,
                                 std::span<const std::size_t> n_grid, std::size_t t_points = 16);

struct SuffCurve {
  std::vector<std::size_t> n;
  std::vector<double> scaled;  // sigma_n * integral of the certified upper bound
  bool decreasing = false;
  LltReport report;
};

SuffCurve suff_integral(const ChainModel& model, const WindowObservable& f, double delta, double T,
                        std::span<const std::size_t> n_grid, bool lattice_variant,
                        std::size_t t_points = 200, std::size_t threads = 1);

struct TwoSidedOptions {
  Anchor anchor;
  std::vector<double> t_grid;
  std::vector<std::size_t> n_grid;
  CorangeOptions corange;
};

LltReport two_sided_llt(const ChainModel& model, const WindowObservable& f,
                        const TwoSidedOptions& opts);

}  // namespace mshift
