#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pgcov {

// Reproducibility handle. (value, stream) selects a Philox key, so distinct
// pairs give non-overlapping generator sequences.
struct Seed {
  std::uint64_t value = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

// Fixed lanes keep draws for different purposes in disjoint counter spaces
// even when the same Seed is reused.
enum class Lane : std::uint64_t {
  kDesign = 0,
  kError = 1,
  kPivotal = 2,
  kPermutation = 3,
  kFolds = 4,
};

// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
// Key = (seed.value, seed.stream); the counter's top word carries the lane.
// Satisfies std::uniform_random_bit_generator.
class Philox4x64 {
 public:
  using result_type = std::uint64_t;

  Philox4x64(Seed seed, Lane lane = Lane::kDesign);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // One raw block, exposed for known-answer tests.
  static std::array<std::uint64_t, 4> block(
      const std::array<std::uint64_t, 4>& counter,
      const std::array<std::uint64_t, 2>& key);

 private:
  void refill();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> buffer_{};
  int index_ = 4;
};

// Transforms on top of Philox. All of them are written out here instead of
// using <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(Seed seed, Lane lane = Lane::kDesign) : engine_(seed, lane) {}

  std::uint64_t bits() { return engine_(); }
  // [0, 1) with 53 random bits.
  double uniform();
  // (0, 1), never returns an endpoint.
  double uniform_open();
  // Uniform integer in [0, bound), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal, Marsaglia polar method.
  double normal();

 private:
  Philox4x64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pgcov
