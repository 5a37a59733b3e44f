#include "mortfrac/rng.hpp"

namespace mortfrac::rng {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t path, Tag tag) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ path);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return h;
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

NormalStream::NormalStream(std::uint64_t master, std::uint64_t path, Tag tag)
    : engine_(substream_seed(master, path, tag)) {}

void NormalStream::fill(std::span<double> out) {
  for (double& x : out) x = dist_(engine_);
}

}  // namespace mortfrac::rng
