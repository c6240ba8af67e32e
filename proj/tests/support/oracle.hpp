#pragma once

// Brute-force reference computations by explicit path enumeration. Nothing in
// here calls into the library beyond reading the raw spec and table data, so
// agreement with the transfer/DP code is a genuine cross-check.

#include <complex>
#include <cstddef>
#include <map>
#include <vector>

#include "mshift/chain.hpp"
#include "mshift/observables.hpp"

namespace oracle {

struct Path {
  std::vector<std::size_t> x;
  double p = 0.0;
};

// Every path X_0..X_N with positive probability, from the forward kernels.
std::vector<Path> enumerate(const mshift::ChainSpec& spec);
std::size_t path_count(const mshift::ChainSpec& spec);

// f_j read straight off its table (earliest coordinate fastest).
double term(const mshift::WindowObservable& f, std::size_t j, const std::vector<std::size_t>& x);
double partial_sum(const mshift::WindowObservable& f, std::size_t n, const std::vector<std::size_t>& x);

std::complex<double> characteristic(const std::vector<Path>& paths, const mshift::WindowObservable& f,
                                    std::size_t n, double t);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double third = 0.0;
};
Moments moments(const std::vector<Path>& paths, const mshift::WindowObservable& f, std::size_t n);

// Law of S_n keyed by the value rounded to 1e-9.
std::map<long long, double> atoms(const std::vector<Path>& paths, const mshift::WindowObservable& f,
                                  std::size_t n);
inline long long atom_key(double v) { return static_cast<long long>(std::llround(v * 1e9)); }

// sup_k max_x TV(law(X_k | X_{k+n} = x), law(X_k)) from the joint law.
double reverse_phi(const std::vector<Path>& paths, const mshift::ChainSpec& spec, std::size_t n);

// Marginal of X_j.
std::vector<double> marginal(const std::vector<Path>& paths, std::size_t j, std::size_t states);

}  // namespace oracle
