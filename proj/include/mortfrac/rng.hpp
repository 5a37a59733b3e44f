#pragma once

#include <cstdint>
#include <span>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace mortfrac::rng {

/// Component tags for per-path substreams.
enum class Tag : std::uint64_t { W1 = 1, W2 = 2, B1 = 3, B2 = 4, Aux = 5 };

/// Seed of the substream for (master seed, path index, component tag).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t path, Tag tag);

/// Standard normal variates from a single substream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  NormalStream(std::uint64_t master, std::uint64_t path, Tag tag);

  double operator()() { return dist_(engine_); }
  void fill(std::span<double> out);

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> dist_;
};

}  // namespace mortfrac::rng
