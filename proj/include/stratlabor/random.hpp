#pragma once

#include <cstdint>
#include <random>

namespace stratlabor {

/// A reproducible random stream identified by (master_seed, stream_id).
///
/// The stream is a value: copying it copies the generator state, so two copies
/// produce the same continuation. Parallel tasks derive independent streams
/// with `child(id)` instead of sharing one.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Derived stream; deterministic in (master_seed, stream_id, id).
  RngStream child(std::uint64_t id) const;

  double uniform();  // in the open interval (0, 1), 53 random bits
  double normal();   // standard normal by inversion
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace stratlabor
