#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace filco {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using u32 = std::uint32_t;

/// All schedule arithmetic runs on integer nanoseconds so interval
/// disjointness checks are exact.
using TimeNs = std::int64_t;

enum class Dtype { f32, i32, i8 };

inline i64 bytes_of(Dtype d) { return d == Dtype::i8 ? 1 : 4; }

/// Accumulator type used for results: i8 operands accumulate into i32.
inline Dtype accum_dtype(Dtype d) { return d == Dtype::i8 ? Dtype::i32 : d; }

std::string dtype_name(Dtype d);
Dtype dtype_from_name(const std::string& s);

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto stable exit codes.
// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EncodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DeadlockError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an exact solve exhausts its budget with no incumbent.
/// Carries the best lower bound proven so far.
struct TimeoutError : std::runtime_error {
  TimeNs lower_bound;
  TimeoutError(const std::string& what, TimeNs lb)
      : std::runtime_error(what), lower_bound(lb) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 core; identical streams on every platform,
// unlike the distributions in <random>.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(u64 seed) : state_(seed) {}

  u64 next_u64() {
    u64 z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  u64 next_below(u64 n) {
    // multiply-shift; bias is < 2^-64 per draw, irrelevant here
    return static_cast<u64>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  i64 next_range(i64 lo, i64 hi) {  // inclusive bounds
    return lo + static_cast<i64>(next_below(static_cast<u64>(hi - lo + 1)));
  }

  bool next_bool(double p) { return next_unit() < p; }

  /// Derive an independent stream; used to split per-chromosome RNGs from a
  /// master seed so parallel and serial evaluation orders agree.
  static Rng fork(u64 seed, u64 stream) {
    Rng r(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    r.next_u64();
    return r;
  }

 private:
  u64 state_;
};

/// FNV-1a over bytes; used for manifest/artifact hashes.
u64 fnv1a64(const void* data, std::size_t len);
u64 fnv1a64(const std::string& s);

i64 ceil_div(i64 a, i64 b);
i64 round_up(i64 a, i64 b);

}  // namespace filco
