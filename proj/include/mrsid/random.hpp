#ifndef MRSID_RANDOM_HPP
#define MRSID_RANDOM_HPP

#include "mrsid/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace mrsid {

// Substream ids used by the simulator. Each (seed, stream) pair seeds an
// independent mt19937_64 through a SplitMix64 mix.
enum class Stream : std::uint64_t { kParams = 0, kStateNoise = 1, kObsNoise = 2, kAux = 3 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Standard-normal source whose output depends only on the mt19937_64 stream.
// std::normal_distribution is implementation-defined, so the polar method is
// done here on 53-bit uniforms.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream) + 1))) {}

  explicit NormalStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double operator()() {
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
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Column-major fill.
  template <typename Scalar>
  Mat<Scalar> matrix(Index rows, Index cols) {
    Mat<Scalar> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>((*this)());
    return m;
  }

  template <typename Scalar>
  Vec<Scalar> vector(Index n) {
    Vec<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>((*this)());
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mrsid

#endif  // MRSID_RANDOM_HPP
