#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace vbmi {

// Philox4x32-10 block function (Salmon et al. 2011 constants).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Counter-based stream: key = seed, counter high half = stream_id.
// Satisfies UniformRandomBitGenerator so std distributions can drive it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  double uniform();  // in [0, 1)
  double normal();   // standard normal
  double gamma(double shape, double rate);
  double inverse_gamma(double shape, double scale);
  bool bernoulli(double p);
  std::uint64_t below(std::uint64_t n);  // uniform integer in [0, n)

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
};

// Stateless 64-bit mixer used to derive child seeds and stream ids.
std::uint64_t mix64(std::uint64_t x);

}  // namespace vbmi
