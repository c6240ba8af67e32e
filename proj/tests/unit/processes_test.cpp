#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "mshift/processes.hpp"
#include "mshift/rng.hpp"
#include "mshift/sim.hpp"

namespace {

// G(y, x) = y/2 + x on the coin chain.
mshift::IrfFamily half_plus_x() { return mshift::affine_irf({{0.5, 0.5}}, {{0.0, 1.0}}); }

TEST(Irf, InvariantIntervalOfTheHalfMap) {
  const mshift::ChainModel m(instances::coin(50));
  const auto fam = half_plus_x();
  EXPECT_DOUBLE_EQ(fam.delta0(), 0.5);
  const auto [lo, hi] = mshift::invariant_interval(fam, m.sizes());
  EXPECT_LE(lo, 0.0);
  EXPECT_GE(hi, 2.0);
  EXPECT_LE(hi - lo, 2.0 + 1e-9);
}

TEST(Irf, ExpandingMapHasNoInvariantInterval) {
  const mshift::ChainModel m(instances::coin(10));
  EXPECT_THROW(mshift::invariant_interval(mshift::affine_irf({{1.5, 1.5}}, {{0.0, 1.0}}), m.sizes()),
               mshift::Error);
}

TEST(Irf, TranslationMapReproducesTheInput) {
  // G(y, x) = x with y0 = 0: Y_k = x_k exactly.
  const mshift::ChainModel m(instances::coin(40));
  const auto fam = mshift::affine_irf({{0.0, 0.0}}, {{0.0, 1.0}});
  const auto batch = mshift::sample_paths(m, 3, 9);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto tr = mshift::simulate_irf(fam, m.sizes(), batch.path(k), 40);
    for (std::size_t i = 0; i <= 40; ++i) EXPECT_DOUBLE_EQ(tr.y[i], batch.path(k)[i]);
  }
  const auto obs = mshift::irf_window_observable(fam, m.sizes(), 40, 1);
  EXPECT_DOUBLE_EQ(obs.error_bound, 0.0);
  EXPECT_DOUBLE_EQ(obs.observable.term(5).values[1], 1.0);
}

TEST(Irf, CouplingAfterBurnIn) {
  const mshift::ChainModel m(instances::coin(80));
  const auto fam = half_plus_x();
  const auto batch = mshift::sample_paths(m, 4, 11);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto tr = mshift::simulate_irf(fam, m.sizes(), batch.path(k), 80, mshift::IrfMode::no_initial, 40);
    EXPECT_LE(tr.coupling_gap, tr.coupling_bound);
    EXPECT_LE(tr.coupling_bound, 2 * std::pow(0.5, 40) + 1e-15);
  }
}

TEST(Irf, WindowObservableErrorBound) {
  const mshift::ChainModel m(instances::coin(60));
  const auto fam = half_plus_x();
  const auto obs = mshift::irf_window_observable(fam, m.sizes(), 60, 20);
  EXPECT_NEAR(obs.error_bound, 2 * std::pow(0.5, 20), 1e-15);
  // Along any path the truncated value stays within the bound of the full one.
  const auto batch = mshift::sample_paths(m, 20, 13);
  for (std::size_t s = 0; s < batch.count; ++s) {
    const auto path = batch.path(s);
    const auto tr = mshift::simulate_irf(fam, m.sizes(), path, 60, mshift::IrfMode::no_initial, 40);
    for (std::size_t k = 40; k < 60; ++k) {
      const auto& term = obs.observable.term(k);
      const auto window = path.subspan(k - 19, 20);
      std::size_t idx = 0;
      for (std::size_t i = 20; i-- > 0;) idx = idx * 2 + window[i];
      EXPECT_NEAR(term.values[idx], tr.y[k], obs.error_bound + 1e-12);
    }
  }
}

TEST(Irf, ToleranceNamesTheRequiredWindow) {
  const mshift::ChainModel m(instances::coin(30));
  const auto fam = half_plus_x();
  EXPECT_EQ(mshift::required_window(fam, m.sizes(), 2.01 * std::pow(0.5, 10)), 10u);
  try {
    mshift::irf_window_observable(fam, m.sizes(), 30, 4, {}, 1e-3);
    FAIL() << "window 4 cannot meet 1e-3";
  } catch (const mshift::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("11"), std::string::npos) << e.what();
  }
}

TEST(Irf, AuditPassesForExactConstants) {
  const mshift::ChainModel m(instances::coin(20));
  EXPECT_LE(mshift::lipschitz_audit(half_plus_x(), m.sizes(), 2000, 3), 1e-9);
}

TEST(Irf, TabulatedMapReportsItsSlope) {
  const mshift::ChainModel m(instances::coin(20));
  mshift::IrfFamily fam;
  mshift::IrfMap table;
  table.knots = {0.0, 1.0};
  table.values = {0.0, 0.9};
  fam.maps = {{table, table}};
  EXPECT_LE(mshift::lipschitz_audit(fam, m.sizes(), 500, 3), 1e-9);
  EXPECT_NEAR(table.lipschitz(), 0.9, 1e-12);
}

}  // namespace
