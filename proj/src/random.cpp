#include "stratlabor/random.hpp"

#include "stratlabor/density.hpp"

namespace stratlabor {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      engine_(splitmix64(master_seed ^ splitmix64(stream_id + 0x5bd1e995ULL))) {}

RngStream RngStream::child(std::uint64_t id) const {
  return RngStream(master_seed_, splitmix64(stream_id_) ^ splitmix64(id + 1));
}

double RngStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return standard_normal_quantile(uniform()); }

}  // namespace stratlabor
