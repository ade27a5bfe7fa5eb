#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace stein {

// Counter-based Philox4x64-10 generator. The key is (seed, stream_id); the
// counter is (block, sub1, sub2, 0). Streams with distinct keys or substream
// indices are independent by construction, so replications need no sequencing.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) : key_{seed, stream_id} {}

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }

  // Child stream for an independent sub-task (a probe, a design draw, ...).
  // Two nesting levels are available below the root.
  RngStream substream(std::uint64_t index) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double gaussian();

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint64_t, 4> philox(std::array<std::uint64_t, 4> ctr,
                                             std::array<std::uint64_t, 2> key);

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> ctr_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> buf_{};
  int used_ = 4;
  int depth_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stein
