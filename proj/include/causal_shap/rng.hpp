#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cshap {

std::uint64_t splitmix64(std::uint64_t x);

// Folds a list of integers into one stream label.
std::uint64_t stream_label(std::initializer_list<std::uint64_t> parts);

// Independent random stream keyed by (master seed, label). Two streams with
// the same key produce identical sequences no matter what other streams do.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t label);

  double normal() { return normal_(engine_); }
  // Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t label() const { return label_; }

 private:
  std::uint64_t seed_;
  std::uint64_t label_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stream domains, mixed into labels so that different consumers never collide.
enum class StreamDomain : std::uint64_t {
  coalition_values = 0x76616c7565ULL,
  permutations = 0x7065726d73ULL,
  single_draw = 0x6472617773ULL,
};

}  // namespace cshap
