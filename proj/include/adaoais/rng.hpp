#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace adaoais {

/// splitmix64 finaliser. Bijective mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Seed of run `run_index` under a master seed. Pure function of its
/// arguments, so adding runs never reshuffles the seeds of earlier ones.
inline std::uint64_t derive_run_seed(std::uint64_t master, std::uint64_t run_index) {
  return mix64(master + kGolden * (run_index + 1));
}

/// Seed of iteration `iter` within a run. The xor constant separates this
/// domain from derive_run_seed, so run seeds and iteration seeds never
/// collide by construction. Seeding each iteration independently lets any
/// single iteration of a recorded run be replayed without re-running the
/// iterations before it.
inline std::uint64_t derive_iter_seed(std::uint64_t run_seed, std::uint64_t iter) {
  return mix64((run_seed ^ 0xa5a5a5a5a5a5a5a5ULL) + kGolden * (iter + 1));
}

/// Deterministic random stream: mt19937_64 plus explicit transforms.
/// std::* distributions are implementation defined and are not used, so a
/// given seed and consumption order reproduces draws bit for bit on any
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1); never returns an endpoint.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. The second variate of each pair is
  /// cached and returned by the next call.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Gamma(shape, 1) via the Marsaglia-Tsang squeeze. Shapes below one use
  /// Gamma(shape + 1) * U^{1/shape}. Consumes a variable number of draws.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Beta(a, b) as Ga / (Ga + Gb) from two gamma draws.
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adaoais
