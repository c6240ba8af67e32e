#pragma once

#include <functional>
#include <string>
#include <vector>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;  // wall-clock ceiling, 0 = none
  std::function<Outcome()> run;
};

std::vector<Criterion> exact_criteria();        // 1-5
std::vector<Criterion> limit_criteria();        // 6-11
std::vector<Criterion> application_criteria();  // 12-15

// Accumulates sub-checks into one outcome line.
class Tally {
 public:
  void expect(bool ok, const std::string& what);
  void note(const std::string& what);
  Outcome outcome() const;

 private:
  bool ok_ = true;
  std::string failures_;
  std::string notes_;
};

std::string fmt(double v, int digits = 4);

}  // namespace acceptance
