#include <algorithm>
#include <cmath>

#include "mshift/error.hpp"
#include "mshift/kernel.hpp"
#include "mshift/report.hpp"

namespace mshift {

TestKernel TestKernel::triangle(double half_width) {
  if (!(half_width > 0)) throw InputError("triangle kernel needs a positive half width");
  return {{-half_width, 0.0, half_width}, {0.0, 1.0, 0.0}};
}

void validate_kernel(const TestKernel& g) {
  if (g.x.size() < 2 || g.x.size() != g.y.size())
    throw InputError("kernel needs at least two knots with matching values");
  for (std::size_t i = 1; i < g.x.size(); ++i)
    if (!(g.x[i] > g.x[i - 1])) throw InputError("kernel knots must increase strictly");
}

double TestKernel::operator()(double s) const {
  if (s <= x.front() || s >= x.back()) return 0.0;
  const auto it = std::upper_bound(x.begin(), x.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double w = (s - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + w * (y[i] - y[i - 1]);
}

double TestKernel::integral() const {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

const char* to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::exact:
      return "exact";
    case Provenance::certified_bound:
      return "certified-bound";
    case Provenance::monte_carlo:
      return "monte-carlo";
  }
  return "exact";
}

Check check_at_most(std::string name, double measured, double tolerance, Provenance p) {
  Check c{std::move(name), measured, tolerance, measured <= tolerance, p};
  return c;
}

Check check_at_least(std::string name, double measured, double tolerance, Provenance p) {
  Check c{std::move(name), measured, tolerance, measured >= tolerance, p};
  c.at_least = true;
  return c;
}

Check check_flag(std::string name, bool ok, Provenance p) {
  Check c{std::move(name), ok ? 1.0 : 0.0, 1.0, ok, p};
  c.at_least = true;
  return c;
}

void LltReport::merge(const LltReport& other, const std::string& prefix) {
  for (const auto& [k, v] : other.numbers) numbers[prefix + k] = v;
  for (const auto& [k, v] : other.labels) labels[prefix + k] = v;
  for (auto c : other.curves) {
    c.name = prefix + c.name;
    curves.push_back(std::move(c));
  }
  for (auto c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
  for (const auto& n : other.notes) notes.push_back(prefix + n);
}

}  // namespace mshift
