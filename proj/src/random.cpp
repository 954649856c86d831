#include "repsample/random.hpp"

namespace repsample {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<SeedLabel> path) {
  std::uint64_t h = splitmix64(root);
  for (const SeedLabel& label : path) {
    if (const auto* s = std::get_if<std::string_view>(&label)) {
      // FNV-1a over the label bytes, tagged so "1" and 1 differ.
      std::uint64_t f = 0xcbf29ce484222325ULL ^ 0x53;
      for (unsigned char c : *s) {
        f ^= c;
        f *= 0x100000001b3ULL;
      }
      h = splitmix64(h ^ f);
    } else {
      h = splitmix64(h ^ splitmix64(std::get<std::uint64_t>(label) + 0x4e));
    }
  }
  return h;
}

}  // namespace repsample
