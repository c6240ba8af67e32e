#include "mshift/window.hpp"

#include "mshift/error.hpp"

namespace mshift {

WindowShape::WindowShape(std::size_t first, std::vector<std::size_t> radices)
    : first_(first), radices_(std::move(radices)) {
  strides_.assign(radices_.size() + 1, 1);
  for (std::size_t i = 0; i < radices_.size(); ++i) {
    if (radices_[i] == 0) throw InputError("window coordinate with empty state space");
    strides_[i + 1] = strides_[i] * radices_[i];
  }
  size_ = strides_.back();
}

void WindowShape::decode(std::size_t index, std::span<std::size_t> coords) const {
  for (std::size_t i = 0; i < radices_.size(); ++i) {
    coords[i] = index % radices_[i];
    index /= radices_[i];
  }
}

std::size_t WindowShape::encode(std::span<const std::size_t> coords) const {
  std::size_t idx = 0;
  for (std::size_t i = radices_.size(); i-- > 0;) idx = idx * radices_[i] + coords[i];
  return idx;
}

WindowShape window_over(std::span<const std::size_t> sizes, std::size_t first,
                        std::size_t width) {
  if (first + width > sizes.size()) throw InputError("window exceeds the horizon");
  return WindowShape(first, std::vector<std::size_t>(sizes.begin() + first,
                                                     sizes.begin() + first + width));
}

}  // namespace mshift
