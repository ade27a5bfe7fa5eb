#include "stein/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stein {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(prod >> 64);
  lo = static_cast<std::uint64_t>(prod);
}

}  // namespace

std::array<std::uint64_t, 4> RngStream::philox(std::array<std::uint64_t, 4> c,
                                               std::array<std::uint64_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

RngStream RngStream::substream(std::uint64_t index) const {
  if (depth_ >= 2) throw std::logic_error("RngStream: substream nesting exceeds two levels");
  RngStream child(key_[0], key_[1]);
  child.ctr_ = {0, ctr_[1], ctr_[2], 0};
  child.depth_ = depth_ + 1;
  // index + 1 keeps every child distinct from its parent's own blocks.
  child.ctr_[static_cast<std::size_t>(child.depth_)] = index + 1;
  return child;
}

RngStream::result_type RngStream::operator()() {
  if (used_ == 4) {
    buf_ = philox(ctr_, key_);
    ++ctr_[0];
    used_ = 0;
  }
  return buf_[static_cast<std::size_t>(used_++)];
}

double RngStream::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace stein
