#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "instances.hpp"
#include "mshift/chain.hpp"
#include "mshift/observables.hpp"
#include "mshift/transfer.hpp"
#include "oracle.hpp"

namespace {

using mshift::cd;
using mshift::ChainModel;
using mshift::TwistedCocycle;

const double kBits[] = {0.0, 1.0};

// Stationary two-state chain; being two-state it is reversible, so the
// backward kernel equals the forward one and pi_j = 0.7.
mshift::ChainSpec reversible_pair(std::size_t horizon) {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.2, 0.8;
  return instances::periodic({p}, Eigen::Vector2d(2.0 / 3, 1.0 / 3), horizon);
}

TEST(Cocycle, UntwistedFixesConstants) {
  const ChainModel m(instances::random_chain(11, 10, 3));
  const auto f = instances::random_observable(11, m.sizes(), 9, 0, 1, false);
  const TwistedCocycle L(m, f, cd{0.0, 0.0});
  for (std::size_t j = 0; j < L.steps(); ++j) {
    const mshift::CVec one(L.dim(j), cd{1.0, 0.0});
    for (const auto& v : L.apply(j, one)) EXPECT_NEAR(std::abs(v - cd{1.0, 0.0}), 0.0, 1e-14);
  }
}

TEST(Cocycle, BinomialCharacteristicFunction) {
  const ChainModel m(instances::coin(30));
  const auto f = mshift::coordinate_observable(m.sizes(), 30, kBits);
  for (double t : {0.3, 1.0, 2.5}) {
    const TwistedCocycle L(m, f, cd{0.0, t});
    const auto curve = L.characteristic_curve(30);
    for (std::size_t n = 1; n <= 30; ++n) {
      const cd exact = std::pow((1.0 + std::exp(cd{0.0, t})) / 2.0, static_cast<double>(n));
      EXPECT_NEAR(std::abs(curve[n - 1] - exact), 0.0, 1e-12) << "t = " << t << ", n = " << n;
    }
  }
}

TEST(Cocycle, MatchesPathEnumeration) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto spec = instances::random_chain(seed, 9, 3);
    const ChainModel m(spec);
    const auto f = instances::random_observable(seed, m.sizes(), 9, 0, seed % 2, false);
    const auto paths = oracle::enumerate(spec);
    for (double t : {0.7, -1.9}) {
      const TwistedCocycle L(m, f, cd{0.0, t});
      for (std::size_t n = 1; n <= L.steps(); ++n)
        EXPECT_NEAR(std::abs(L.characteristic(n) - oracle::characteristic(paths, f, n, t)), 0.0, 1e-12)
            << "seed " << seed << ", n = " << n;
    }
  }
}

TEST(Cocycle, CompositionSplitsAndSingleStepIsTheOperator) {
  const ChainModel m(instances::random_chain(21, 12, 3));
  const auto f = instances::random_observable(21, m.sizes(), 11, 0, 1, false);
  const TwistedCocycle L(m, f, cd{0.2, 1.1});
  EXPECT_TRUE(L.compose(2, 1).isApprox(L.matrix(2), 1e-14));
  for (std::size_t split = 1; split < 6; ++split) {
    const Eigen::MatrixXcd whole = L.compose(1, 6);
    const Eigen::MatrixXcd parts = L.compose(1 + split, 6 - split) * L.compose(1, split);
    EXPECT_TRUE(whole.isApprox(parts, 1e-12)) << "split " << split;
  }
  const TwistedCocycle L0(m, f, cd{0.0, 0.0});
  const Eigen::MatrixXcd c = L0.compose(0, 7);
  const Eigen::VectorXcd image = c * Eigen::VectorXcd::Ones(c.cols());
  EXPECT_NEAR((image - Eigen::VectorXcd::Ones(c.rows())).cwiseAbs().maxCoeff(), 0.0, 1e-13);
}

TEST(RpfDecay, IidCollapsesAfterOneStep) {
  const ChainModel m(instances::iid({0.2, 0.5, 0.3}, 20));
  const std::vector<double> g{1.0, -2.0, 0.5};
  const auto curve = mshift::rpf_decay(m, 1, g, 3, 10);
  for (std::size_t n = 1; n < curve.values.size(); ++n) EXPECT_NEAR(curve.values[n], 0.0, 1e-15);
  const std::vector<double> one(3, 1.0);
  for (double v : mshift::rpf_decay(m, 1, one, 3, 10).values) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(RpfDecay, RateBelowProofCeiling) {
  const ChainModel m(reversible_pair(60));
  const std::vector<double> g{1.0, 0.0};
  const auto curve = mshift::rpf_decay(m, 1, g, 0, 40);
  EXPECT_NEAR(curve.ceiling, 0.7 + m.a(), 1e-12);
  EXPECT_LE(curve.gamma, curve.ceiling);
  EXPECT_TRUE(curve.dominated);
  EXPECT_NEAR(curve.gamma, 0.7, 1e-6);  // second eigenvalue of the kernel
}

TEST(ComplexRpf, ZeroTwistIsTrivial) {
  const ChainModel m(instances::random_chain(13, 80, 3));
  const auto f = instances::random_observable(13, m.sizes(), 80, 0, 0, false);
  const auto trip = mshift::complex_rpf(m, f, cd{0.0, 0.0});
  for (const auto& l : trip.lambda) EXPECT_NEAR(std::abs(l - cd{1.0, 0.0}), 0.0, 1e-10);
  for (std::size_t j = 0; j < trip.h.size(); ++j)
    for (const auto& v : trip.h[j]) EXPECT_NEAR(std::abs(v - cd{1.0, 0.0}), 0.0, 1e-10);
  for (std::size_t j = 0; j < trip.kappa.size(); ++j)
    for (std::size_t x = 0; x < trip.kappa[j].size(); ++x)
      EXPECT_NEAR(std::abs(trip.kappa[j][x] - m.marginal(j)(static_cast<Eigen::Index>(x))), 0.0, 1e-10);
  EXPECT_LE(trip.interior_residual(), 1e-10);
}

TEST(ComplexRpf, HomogeneousChainMatchesSingleMatrixEigenvalue) {
  const ChainModel m(reversible_pair(200));
  const double vals[] = {0.4, -1.3};
  const auto f = mshift::coordinate_observable(m.sizes(), 200, vals);
  const cd z{0.05, 0.08};
  const auto trip = mshift::complex_rpf(m, f, z);
  // Power iteration on B diag(e^{z v}), written out independently.
  Eigen::Matrix2cd M;
  const Eigen::MatrixXd& B = m.backward(50);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) M(y, x) = B(y, x) * std::exp(z * vals[x]);
  Eigen::Vector2cd v(1.0, 1.0);
  cd rho{1.0, 0.0};
  for (int it = 0; it < 500; ++it) {
    const Eigen::Vector2cd w = M * v;
    rho = w(0) / v(0);
    v = w / w.norm();
  }
  for (std::size_t j = 60; j < 140; ++j) EXPECT_NEAR(std::abs(trip.lambda[j] - rho), 0.0, 1e-10) << "j = " << j;
}

TEST(LasotaYorke, ConstantFunctionNeverGrows) {
  const ChainModel m(instances::random_chain(17, 40, 3));
  const auto f = instances::random_observable(17, m.sizes(), 39, 0, 1, false);
  const TwistedCocycle probe(m, f, cd{0.0, 0.0});
  const mshift::CVec one(probe.dim(0), cd{1.0, 0.0});
  const double t_grid[] = {0.0, 0.5, 2.0};
  const auto ly = mshift::lasota_yorke_check(m, f, one, 0, 20, t_grid);
  EXPECT_TRUE(ly.holds);
  EXPECT_TRUE(ly.sup_contracts);
  for (const auto& p : ly.points) EXPECT_LE(p.sup_ratio, 1.0 + 1e-12);
}

TEST(NormEstimate, ZeroFrequencyPinsToOne) {
  const ChainModel m(instances::random_chain(19, 40, 2));
  const auto f = instances::random_observable(19, m.sizes(), 40, 0, 0, false);
  const TwistedCocycle L(m, f, cd{0.0, 0.0});
  const auto c = mshift::ly_constants(m, f, 1.0);
  const auto s = mshift::norm_estimate(L, 0, c.k0 + 2, c, 8, 1);
  EXPECT_NEAR(s.lower, 1.0, 1e-12);
  EXPECT_LE(s.upper, 1.0 + 1e-12);
}

TEST(NormEstimate, CoinAtPiDecays) {
  const ChainModel m(instances::coin(40));
  const auto f = mshift::coordinate_observable(m.sizes(), 40, kBits);
  const TwistedCocycle L(m, f, cd{0.0, M_PI});
  EXPECT_NEAR(std::abs(L.characteristic(5)), 0.0, 1e-15);
  const auto c = mshift::ly_constants(m, f, M_PI);
  const auto s = mshift::norm_estimate(L, 0, 12, c, 16, 3);
  EXPECT_LT(s.lower, 0.1);
  EXPECT_LE(s.lower, s.upper);
}

TEST(NormEstimate, SingleStepMayExceedOne) {
  const ChainModel m(instances::coin(10));
  const auto f = mshift::coordinate_observable(m.sizes(), 10, kBits);
  const TwistedCocycle L(m, f, cd{0.0, 3.0});
  const auto c = mshift::ly_constants(m, f, 3.0);
  ASSERT_GT(c.k0, 1u);
  const auto s = mshift::norm_estimate(L, 0, 1, c, 4, 5);
  EXPECT_LE(s.lower, s.upper);
  EXPECT_LE(s.upper, mshift::ly_norm_cap(c, 1) + 1e-12);
}

TEST(ContractingBlocks, ZeroObservableNeverContracts) {
  const ChainModel m(instances::coin(80));
  const double zero[] = {0.0, 0.0};
  const auto f = mshift::coordinate_observable(m.sizes(), 80, zero);
  const double t[] = {M_PI - 0.2, M_PI, M_PI + 0.2};
  EXPECT_EQ(mshift::contracting_blocks(m, f, t, 80, 4).count, 0u);
}

TEST(ContractingBlocks, CoinNearPiContractsEverywhere) {
  const ChainModel m(instances::coin(120));
  const auto f = mshift::coordinate_observable(m.sizes(), 120, kBits);
  const double t[] = {M_PI - 0.2, M_PI, M_PI + 0.2};
  const std::size_t D = 4;
  const auto scan = mshift::contracting_blocks(m, f, t, 120, D);
  EXPECT_GE(scan.count, 120 / (2 * D + scan.k0) - 1);
  EXPECT_LE(scan.count, 120 / D);
}

}  // namespace
