#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "mshift/chain.hpp"
#include "mshift/error.hpp"
#include "oracle.hpp"

namespace {

using mshift::ChainModel;
using mshift::ChainSpec;

ChainSpec bayes_chain(std::size_t horizon) {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.2, 0.8;
  return instances::periodic({p}, Eigen::Vector2d(0.5, 0.5), horizon);
}

TEST(Marginals, IdentityKernelKeepsPointMass) {
  ChainSpec s{{Eigen::MatrixXd::Identity(2, 2)}, Eigen::Vector2d(1, 0)};
  s.allow_degenerate = true;
  const auto mu = mshift::propagate_marginals(s);
  EXPECT_DOUBLE_EQ(mu[1](0), 1.0);
  EXPECT_DOUBLE_EQ(mu[1](1), 0.0);
}

TEST(Marginals, HandProduct) {
  const auto mu = mshift::propagate_marginals(bayes_chain(1));
  EXPECT_NEAR(mu[1](0), 0.55, 1e-15);
  EXPECT_NEAR(mu[1](1), 0.45, 1e-15);
}

TEST(Marginals, DoublyStochasticPreservesUniform) {
  Eigen::MatrixXd p(3, 3);
  p << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
  const auto mu = mshift::propagate_marginals(instances::periodic({p}, Eigen::Vector3d::Constant(1.0 / 3), 12));
  for (const auto& m : mu)
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(m(i), 1.0 / 3, 1e-15);
}

TEST(Marginals, RejectsNonStochasticRows) {
  ChainSpec s{{(Eigen::MatrixXd(2, 2) << 0.5, 0.6, 0.5, 0.5).finished()}, Eigen::Vector2d(0.5, 0.5)};
  EXPECT_THROW(mshift::validate_spec(s), mshift::InputError);
}

TEST(BackwardKernel, IidUniformIsUniform) {
  const auto b = mshift::backward_kernel(instances::coin(3), 1);
  EXPECT_TRUE(b.matrix.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5), 1e-15));
}

TEST(BackwardKernel, BayesRule) {
  const auto b = mshift::backward_kernel(bayes_chain(2), 0);
  EXPECT_NEAR(b.matrix(0, 0), 9.0 / 11, 1e-15);
  EXPECT_NEAR(b.matrix(0, 1), 2.0 / 11, 1e-15);
  EXPECT_NEAR(b.matrix.row(1).sum(), 1.0, 1e-15);
}

TEST(BackwardKernel, ReversibleStationaryEqualsForward) {
  // Birth-death chains are reversible; start in the stationary law.
  Eigen::MatrixXd p(3, 3);
  p << 0.6, 0.4, 0.0, 0.2, 0.5, 0.3, 0.0, 0.6, 0.4;
  Eigen::EigenSolver<Eigen::MatrixXd> es(p.transpose());
  Eigen::Index k = 0;
  es.eigenvalues().real().maxCoeff(&k);
  Eigen::VectorXd pi = es.eigenvectors().col(k).real();
  pi /= pi.sum();
  const ChainModel m(instances::periodic({p}, pi, 4));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_TRUE(m.backward(j).isApprox(p, 1e-12)) << "step " << j;
}

TEST(Dobrushin, Examples) {
  EXPECT_DOUBLE_EQ(mshift::dobrushin_coefficient(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3)), 0.0);
  Eigen::MatrixXd rows(2, 2);
  rows << 0.9, 0.1, 0.2, 0.8;
  EXPECT_NEAR(mshift::dobrushin_coefficient(rows), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(mshift::dobrushin_coefficient(Eigen::MatrixXd::Identity(2, 2)), 1.0);
}

TEST(Assumptions, IidUniformPasses) {
  const auto r = mshift::validate_assumptions(ChainModel(instances::coin(10)));
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_DOUBLE_EQ(r.zeta, 0.5);
  EXPECT_DOUBLE_EQ(r.cond_constant, 1.0);
  EXPECT_TRUE(r.all_pass());
}

TEST(Assumptions, DeterministicStepNamesTheStep) {
  ChainSpec s = instances::coin(5);
  s.kernels[2] << 0.0, 1.0, 1.0, 0.0;
  const auto r = mshift::validate_assumptions(ChainModel(s));
  EXPECT_EQ(r.zeta, 0.0);
  EXPECT_FALSE(r.ellipticity);
  ASSERT_TRUE(r.first_ellipticity_failure.has_value());
  EXPECT_EQ(*r.first_ellipticity_failure, 2u);
  try {
    mshift::require_ellipticity(r);
    FAIL() << "expected AssumptionError";
  } catch (const mshift::AssumptionError& e) {
    EXPECT_EQ(e.step(), std::optional<std::size_t>(2));
    EXPECT_NE(std::string(e.what()).find("at step 2"), std::string::npos);
  }
}

TEST(Assumptions, FloorGivesZetaBound) {
  // zeta >= floor * min_b mu(b) / max mu for chains with p >= floor everywhere.
  const auto spec = instances::random_chain(3, 30, 3, 0.3);
  const ChainModel m(spec);
  const auto r = mshift::validate_assumptions(m);
  EXPECT_TRUE(r.all_pass());
  for (std::size_t j = 0; j < m.horizon(); ++j) {
    const double floor = spec.kernels[j].minCoeff();
    const double bound = floor * m.marginal(j).minCoeff() / m.marginal(j + 1).maxCoeff();
    EXPECT_GE(r.zeta_per_step[j], bound - 1e-15) << "step " << j;
  }
}

TEST(ReversePhi, BoundArithmetic) {
  mshift::AssumptionReport r;
  r.delta = 0.0;
  for (std::size_t n = 1; n < 5; ++n) EXPECT_EQ(mshift::reverse_phi_bound(r, n), 0.0);
  r.delta = 0.7;
  EXPECT_NEAR(mshift::reverse_phi_bound(r, 3), 0.343, 1e-15);
}

TEST(ReversePhi, BayesChainEnumerated) {
  const auto spec = bayes_chain(4);
  const auto paths = oracle::enumerate(spec);
  const double phi2 = oracle::reverse_phi(paths, spec, 2);
  EXPECT_LE(phi2, 0.49 + 1e-12);
  EXPECT_NEAR(mshift::reverse_phi_exact(ChainModel(spec), 2), phi2, 1e-12);
}

TEST(ChainModel, WindowLawSumsToOne) {
  const ChainModel m(instances::random_chain(9, 8, 3));
  for (std::size_t w = 1; w <= 3; ++w) {
    const auto law = m.window_law(2, w);
    double s = 0;
    for (double p : law) s += p;
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

}  // namespace
