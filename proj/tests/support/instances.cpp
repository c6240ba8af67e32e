#include "instances.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace instances {

mshift::ChainSpec iid(const std::vector<double>& law, std::size_t horizon, double a) {
  const auto k = static_cast<long>(law.size());
  Eigen::VectorXd row = Eigen::Map<const Eigen::VectorXd>(law.data(), k);
  Eigen::MatrixXd p = row.transpose().replicate(k, 1);
  mshift::ChainSpec spec;
  spec.kernels.assign(horizon, p);
  spec.initial = row;
  spec.a = a;
  return spec;
}

mshift::ChainSpec periodic(const std::vector<Eigen::MatrixXd>& block, Eigen::VectorXd initial,
                           std::size_t horizon, double a) {
  return mshift::repeat_block(block, std::move(initial), horizon, a);
}

mshift::ChainSpec random_chain(std::uint64_t seed, std::size_t horizon, std::size_t max_states,
                               double floor, double a) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(2, std::max<std::size_t>(2, max_states));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> sizes(horizon + 1);
  for (auto& s : sizes) s = pick(gen);
  auto row = [&](std::size_t m) {
    Eigen::VectorXd r(static_cast<long>(m));
    for (long i = 0; i < r.size(); ++i) r(i) = u(gen) + 1e-3;
    r /= r.sum();
    return Eigen::VectorXd((1.0 - floor) * r.array() + floor / static_cast<double>(m));
  };
  mshift::ChainSpec spec;
  spec.initial = row(sizes[0]);
  spec.a = a;
  for (std::size_t j = 0; j < horizon; ++j) {
    Eigen::MatrixXd p(static_cast<long>(sizes[j]), static_cast<long>(sizes[j + 1]));
    for (long i = 0; i < p.rows(); ++i) p.row(i) = row(sizes[j + 1]).transpose();
    spec.kernels.push_back(p);
  }
  return spec;
}

mshift::WindowObservable random_observable(std::uint64_t seed, const std::vector<std::size_t>& sizes,
                                           std::size_t n, std::size_t past, std::size_t future,
                                           bool integer) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> k(-2, 2);
  std::vector<mshift::WindowTerm> terms(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto& t = terms[j];
    t.past = std::min(past, j);
    t.future = std::min(future, sizes.size() - 1 - j);
    std::size_t m = 1;
    for (std::size_t i = j - t.past; i <= j + t.future; ++i) m *= sizes[i];
    t.values.resize(m);
    for (auto& v : t.values) v = integer ? k(gen) : u(gen);
  }
  return mshift::WindowObservable(sizes, std::move(terms));
}

Eigen::MatrixXd kernel_p1() {
  Eigen::MatrixXd p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  return p;
}

Eigen::MatrixXd kernel_p2() {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.2, 0.8;
  return p;
}

}  // namespace instances
