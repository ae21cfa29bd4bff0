#pragma once

#include <cstdint>
#include <random>

namespace lcwm {

/// Seeded random stream. Two streams built from the same (seed, stream id)
/// produce identical sequences; substream() derives child streams for
/// parallel tasks without sharing state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Child stream keyed by this stream's identity and `child`. Does not
  // advance this stream.
  [[nodiscard]] RngStream substream(std::uint64_t child) const;

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

} // namespace lcwm
