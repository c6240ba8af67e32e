#pragma once

#include <vector>

namespace mshift {

// Piecewise-linear test function with compact support [x.front(), x.back()];
// values at the ends are expected to be zero for continuity.
struct TestKernel {
  std::vector<double> x;
  std::vector<double> y;

  static TestKernel triangle(double half_width = 1.0);
  double operator()(double s) const;
  double integral() const;
  double support_lo() const { return x.front(); }
  double support_hi() const { return x.back(); }
};

// Throws InputError unless knots increase strictly and sizes match.
void validate_kernel(const TestKernel& g);

}  // namespace mshift
