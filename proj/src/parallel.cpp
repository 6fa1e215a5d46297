#include "stratlabor/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace stratlabor {

int resolve_threads(std::optional<int> flag) {
  if (flag && *flag >= 1) return *flag;
  if (const char* env = std::getenv("STRATEGIC_LABOR_THREADS")) {
    int v = 0;
    const char* end = env + std::strlen(env);
    const auto r = std::from_chars(env, end, v);
    if (r.ec == std::errc() && r.ptr == end && v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace stratlabor
