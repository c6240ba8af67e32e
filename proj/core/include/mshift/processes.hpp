#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mshift/observables.hpp"

namespace mshift {

// Y_k = G_k(Y_{k-1}, X_k). Each (k, x) map is either affine, alpha*y + beta,
// or a piecewise-linear table in y held constant beyond its end knots. Tables
// with a single row are shared by every k.
struct IrfMap {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> knots;   // tabulated form when non-empty
  std::vector<double> values;

  double operator()(double y) const;
  double lipschitz() const;
  // Image of [lo, hi].
  std::pair<double, double> image(double lo, double hi) const;
};

struct IrfFamily {
  std::vector<std::vector<IrfMap>> maps;  // [k][x]
  double y0 = 0.0;                        // Y_{-1}
  std::optional<double> radius;           // declared invariant ball |y| <= r
  double state_constant = 0.0;            // recorded only

  const IrfMap& at(std::size_t k, std::size_t x) const;
  double delta0() const;  // sup of the Lipschitz constants
};

IrfFamily affine_irf(const std::vector<std::vector<double>>& alpha,
                     const std::vector<std::vector<double>>& beta, double y0 = 0.0);

// Throws InputError on empty or malformed maps.
void validate_irf(const IrfFamily& fam, std::span<const std::size_t> sizes);

// Smallest interval containing y0 and mapped into itself by every map
// (certified outer enclosure). Throws when delta0 >= 1.
std::pair<double, double> invariant_interval(const IrfFamily& fam, std::span<const std::size_t> sizes);

enum class IrfMode { initial, no_initial };

struct IrfTrajectory {
  std::vector<double> y;        // Y_0 .. Y_n
  double max_abs = 0.0;
  double coupling_gap = 0.0;    // no_initial: max |Y - Y'| after burn-in
  double coupling_bound = 0.0;  // delta0^burn * |y_a - y_b|
};

// initial: Y_{-1} = y0. no_initial: two runs from the ends of the invariant
// interval must agree to the coupling bound once k >= burn (asserted).
// A declared radius that is exceeded throws InputError.
IrfTrajectory simulate_irf(const IrfFamily& fam, std::span<const std::size_t> sizes,
                           std::span<const std::uint32_t> path, std::size_t n,
                           IrfMode mode = IrfMode::initial, std::size_t burn = 0);

struct IrfObservable {
  WindowObservable observable;  // past depth w-1
  double error_bound = 0.0;     // range * delta0^w
  double range = 0.0;
  double delta0 = 0.0;
};

// f_k(x_{k-w+1..k}) = Y_k with the state Y_{k-w} replaced by its value along
// the anchor path. Throws InputError naming the required window when
// `tolerance` is set and the bound misses it.
IrfObservable irf_window_observable(const IrfFamily& fam, std::span<const std::size_t> sizes,
                                    std::size_t n, std::size_t window, const Anchor& anchor = {},
                                    std::optional<double> tolerance = std::nullopt);

std::size_t required_window(const IrfFamily& fam, std::span<const std::size_t> sizes,
                            double tolerance);

// Largest excess of sampled difference quotients over the declared constants.
double lipschitz_audit(const IrfFamily& fam, std::span<const std::size_t> sizes,
                       std::size_t samples, std::uint64_t seed);

}  // namespace mshift
