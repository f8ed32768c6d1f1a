#include "pgcov/rng.hpp"

#include <cmath>

namespace pgcov {
namespace {

constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 product =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(product >> 64);
  lo = static_cast<std::uint64_t>(product);
}

}  // namespace

Philox4x64::Philox4x64(Seed seed, Lane lane)
    : key_{seed.value, seed.stream},
      counter_{0, 0, 0, static_cast<std::uint64_t>(lane)} {}

std::array<std::uint64_t, 4> Philox4x64::block(
    const std::array<std::uint64_t, 4>& counter,
    const std::array<std::uint64_t, 2>& key) {
  std::array<std::uint64_t, 4> ctr = counter;
  std::array<std::uint64_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
  }
  return ctr;
}

void Philox4x64::refill() {
  buffer_ = block(counter_, key_);
  // 128-bit counter in words 0..1; words 2..3 stay fixed (lane).
  if (++counter_[0] == 0) ++counter_[1];
  index_ = 0;
}

Philox4x64::result_type Philox4x64::operator()() {
  if (index_ == 4) refill();
  return buffer_[index_++];
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  std::uint64_t x = engine_();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = engine_();
      m = static_cast<unsigned __int128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

}  // namespace pgcov
