#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tmsv {

/// Seed of an independent stream, e.g. one shot or one bootstrap resample.
///
/// seed = mix(mix(master) + index * 0x9E3779B97F4A7C15), where mix is the
/// SplitMix64 finalizer. mix is a bijection of 64-bit words and the odd
/// multiplier is invertible mod 2^64, so for a fixed master seed distinct
/// indices always give distinct seeds.
std::uint64_t derive_shot_seed(std::uint64_t master_seed, std::uint64_t index);

/// Random stream with portable sampling routines.
///
/// The engine is std::mt19937_64 (19937-bit state, bit-exact across standard
/// libraries). Distributions are implemented here rather than taken from
/// <random>, whose algorithms are implementation-defined.
class Rng {
public:
    static constexpr std::string_view kGeneratorId = "mt19937_64+splitmix64-derive/v1";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform on (0, 1].
    double uniform_open_zero() { return 1.0 - uniform(); }
    double normal();
    bool bernoulli(double p) { return uniform() < p; }
    /// P(n) = (1 - r) r^n, i.e. the thermal law with mean r / (1 - r).
    std::uint64_t geometric(double ratio);
    /// Number of successes in n independent trials.
    std::uint64_t binomial(std::uint64_t trials, double p);
    /// Index uniformly distributed in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace tmsv
