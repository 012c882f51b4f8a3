#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nqk {

using cplx = std::complex<double>;

/// Bad run configuration (unknown options, inconsistent shapes requested by
/// the user). CLI exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (files, tables, splits). CLI exit
/// code 3.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-PSD kernel, solver that did not converge. CLI exit
/// code 4.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// splitmix64-style combiner for deriving independent sub-stream seeds from a
/// master seed. Stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Deterministic random source. The transforms (uniform, normal, bounded
/// ints, shuffle) are hand-rolled on top of mt19937_64 so that value streams
/// depend only on the seed, not on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0,1), 53 bits of entropy.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pair-cached).
    double normal();

    /// Unbiased integer in [0, n).
    std::size_t below(std::size_t n);

    /// Fisher-Yates shuffle driven by below().
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Thread count resolution: the NQK_THREADS environment variable wins, then a
/// positive `requested`, then the OpenMP default. Always >= 1. Thread count
/// only changes wall-clock time; all reductions are order-fixed.
int resolve_threads(int requested);

/// Applies a thread count to the OpenMP runtime (no-op without OpenMP).
void apply_thread_count(int n);

}  // namespace nqk
