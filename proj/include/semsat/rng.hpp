#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "semsat/types.hpp"

namespace semsat {

// splitmix64 finalizer. Used to derive child stream seeds from a master seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based child seed: stream `tag` plus up to three counters. The same
// (master, tag, counters) tuple always yields the same stream, so experiment
// arms can share environment draws while keeping policy draws separate.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(master ^ mix64(tag));
  s = mix64(s ^ mix64(a ^ 0x517cc1b727220a95ull));
  s = mix64(s ^ mix64(b ^ 0x6c62272e07bb0142ull));
  return mix64(s ^ mix64(c ^ 0x2f3a9b1c5d7e6f89ull));
}

namespace stream {
constexpr std::uint64_t kPlacement = 1;
constexpr std::uint64_t kArrivals = 2;
constexpr std::uint64_t kChannel = 3;
constexpr std::uint64_t kCsi = 4;
constexpr std::uint64_t kPolicy = 5;
constexpr std::uint64_t kInit = 6;
constexpr std::uint64_t kEpisode = 7;
}  // namespace stream

// Draw source with all value mappings spelled out here rather than delegated
// to std distributions, so sequences are reproducible for a given engine state.
class RandomSource {
 public:
  RandomSource() : eng_(0) {}
  explicit RandomSource(std::uint64_t seed) : eng_(seed) {}

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1), safe as a log argument
  double uniform_pos() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; second value cached
  double gauss() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // circularly symmetric complex normal with total variance 1
  Complex cgauss_unit() {
    const double s = 1.0 / std::sqrt(2.0);
    const double re = gauss();
    const double im = gauss();
    return Complex(s * re, s * im);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // integer in [0, n)
  std::uint64_t integer(std::uint64_t n) {
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(uniform() * static_cast<double>(n)),
                                   n - 1);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << eng_ << ' ' << (have_cached_ ? 1 : 0) << ' ';
    os.precision(17);
    os << cached_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    int flag = 0;
    is >> eng_ >> flag >> cached_;
    have_cached_ = flag != 0;
  }

 private:
  std::mt19937_64 eng_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace semsat
