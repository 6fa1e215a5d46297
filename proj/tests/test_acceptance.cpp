// Runs the acceptance suite and prints one line per criterion. Extra
// arguments select criteria by id.

#include <iostream>

#include "stratlabor/acceptance.hpp"
#include "stratlabor/parallel.hpp"

int main(int argc, char** argv) {
  stratlabor::VerifyOptions opt;
  opt.threads = stratlabor::resolve_threads(std::nullopt);
  for (int i = 1; i < argc; ++i) opt.only.emplace_back(argv[i]);
  const auto results = stratlabor::run_acceptance(
      opt, [](const stratlabor::CriterionResult& r) { std::cout << stratlabor::format_result_line(r) << std::endl; });
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
