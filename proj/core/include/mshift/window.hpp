#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mshift {

// Product index space X_first × … × X_{first+width-1}. Tables over a window
// are flat vectors; coordinate 0 (the earliest time) varies fastest.
class WindowShape {
 public:
  WindowShape() = default;
  WindowShape(std::size_t first, std::vector<std::size_t> radices);

  std::size_t first() const noexcept { return first_; }
  std::size_t width() const noexcept { return radices_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t radix(std::size_t i) const { return radices_[i]; }
  const std::vector<std::size_t>& radices() const noexcept { return radices_; }
  // Number of configurations of the first k coordinates.
  std::size_t prefix_size(std::size_t k) const { return strides_[k]; }

  void decode(std::size_t index, std::span<std::size_t> coords) const;
  std::size_t encode(std::span<const std::size_t> coords) const;
  std::size_t coordinate(std::size_t index, std::size_t i) const {
    return (index / strides_[i]) % radices_[i];
  }

 private:
  std::size_t first_ = 0;
  std::vector<std::size_t> radices_;
  std::vector<std::size_t> strides_{1};
  std::size_t size_ = 1;
};

// Window of sizes[first..first+width).
WindowShape window_over(std::span<const std::size_t> sizes, std::size_t first,
                        std::size_t width);

// Extends a table by trailing coordinates it ignores (cheap: tiling).
template <class T>
std::vector<T> extend_right(std::span<const T> table, std::size_t new_size) {
  std::vector<T> out(new_size);
  const std::size_t m = table.size();
  for (std::size_t i = 0; i < new_size; ++i) out[i] = table[i % m];
  return out;
}

// Prepends `leading` configurations of ignored earlier coordinates.
template <class T>
std::vector<T> extend_left(std::span<const T> table, std::size_t leading) {
  std::vector<T> out(table.size() * leading);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = table[i / leading];
  return out;
}

}  // namespace mshift
