#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mshift {

enum class Provenance { exact, certified_bound, monte_carlo };

const char* to_string(Provenance p) noexcept;

// One asserted comparison: measured <= tolerance unless `at_least` is set.
struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  Provenance provenance = Provenance::exact;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  bool at_least = false;
};

Check check_at_most(std::string name, double measured, double tolerance,
                    Provenance p = Provenance::exact);
Check check_at_least(std::string name, double measured, double tolerance,
                     Provenance p = Provenance::exact);
Check check_flag(std::string name, bool ok, Provenance p = Provenance::exact);

struct Curve {
  std::string name;
  std::string x_label = "n";
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> se;  // empty unless Monte Carlo
};

inline Curve make_curve(std::string name, std::string x_label = "n") {
  Curve c;
  c.name = std::move(name);
  c.x_label = std::move(x_label);
  return c;
}

struct LltReport {
  std::string regime;  // "divergent", "bounded", "inconclusive" or empty
  std::map<std::string, double> numbers;
  std::map<std::string, std::string> labels;
  std::vector<Curve> curves;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void merge(const LltReport& other, const std::string& prefix);
};

}  // namespace mshift
