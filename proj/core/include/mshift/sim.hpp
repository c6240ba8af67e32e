#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mshift/kernel.hpp"

namespace mshift {

class ChainModel;
class WindowObservable;

// Paths stored row-major, one row of horizon+1 states per sample. Sample k is
// drawn from substream k of the master seed, whatever the thread count.
struct SampleBatch {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t length = 0;  // horizon + 1
  std::vector<std::uint32_t> states;

  std::span<const std::uint32_t> path(std::size_t k) const {
    return {states.data() + k * length, length};
  }
};

SampleBatch sample_paths(const ChainModel& model, std::size_t count, std::uint64_t seed,
                         std::size_t threads = 1);

// Partial sums S_n for `count` samples without storing paths.
struct SumBatch {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<double> sums;  // index = sample number
};

SumBatch sample_sums(const ChainModel& model, const WindowObservable& f, std::size_t n,
                     std::size_t count, std::uint64_t seed, std::size_t threads = 1);

std::vector<double> batch_sums(const SampleBatch& batch, const WindowObservable& f, std::size_t n);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Batch-means standard error with `batches` contiguous batches (pairwise sums).
Estimate batch_means(std::span<const double> values, std::size_t batches = 32);
double pairwise_sum(std::span<const double> values);

struct LocalCounts {
  std::vector<double> u;
  std::vector<double> estimate;   // mean of g(S_n - u)
  std::vector<double> std_error;
  std::vector<std::size_t> hits;  // samples inside the kernel support
  std::vector<bool> flagged;      // too few hits for a trustworthy error bar
  // Integer-valued sums: exact-match frequencies P(S_n = u) for integer u.
  std::vector<double> lattice_frequency;
  std::vector<double> lattice_std_error;
};

LocalCounts empirical_local_counts(std::span<const double> sums, const TestKernel& g,
                                   std::span<const double> u_grid, bool integer_valued = false,
                                   std::size_t min_hits = 100);

}  // namespace mshift
