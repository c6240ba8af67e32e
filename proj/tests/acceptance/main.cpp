// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Optional arguments restrict the run to the listed criterion numbers.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <set>
#include <string>

#include "criteria.hpp"

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  std::vector<acceptance::Criterion> all;
  for (auto group : {acceptance::exact_criteria, acceptance::limit_criteria,
                     acceptance::application_criteria})
    for (auto& c : group()) all.push_back(std::move(c));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    acceptance::Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      out.pass = false;
      out.detail += "; over time budget " + acceptance::fmt(c.budget_seconds, 3) + " s";
    }
    std::printf("[%s] criterion %2d  %-28s (%.1f s)  %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.title.c_str(), secs, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
