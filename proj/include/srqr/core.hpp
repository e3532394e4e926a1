// Shared numeric utilities, error types and default tolerances.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace srqr {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Violated precondition or cross-argument contract (caller bug).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Evaluation requested outside a map/chart/potential domain.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solver failed to reach its tolerance and the result cannot be trusted.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double unit_norm = 1e-12;        // | ||z||^2 - 1 |
  double tangency = 1e-10;         // |Re<z,v>|
  double horizontality = 1e-9;     // |alpha(v)| / ||v||
  double branch_locus = 1e-8;      // r_i below this counts as on-locus
  double map_onto_target = 1e-10;  // unit-norm defect of map outputs
  double flow_rel = 1e-8;          // adaptive RK4 relative tolerance
  double path_horizontal = 1e-6;   // per-segment contact residual of paths
};

inline const Tolerances& default_tols() {
  static const Tolerances t{};
  return t;
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

inline double sq(double x) { return x * x; }

/// Deterministic RNG. All randomized routines take an explicit seed so that
/// reruns are bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    // Fixed-width mapping, independent of libstdc++ distribution internals.
    const double u = double(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  double normal() {
    // Marsaglia polar; deterministic across platforms.
    for (;;) {
      const double a = uniform(-1.0, 1.0), b = uniform(-1.0, 1.0);
      const double s = a * a + b * b;
      if (s > 0.0 && s < 1.0) return a * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// Static-chunk parallel map; results keyed by index so output order never
/// depends on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace srqr
