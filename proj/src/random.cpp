#include "tmsv/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tmsv {

namespace {

constexpr std::uint64_t splitmix_finalize(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_shot_seed(std::uint64_t master_seed, std::uint64_t index)
{
    return splitmix_finalize(splitmix_finalize(master_seed) + index * 0x9E3779B97F4A7C15ULL);
}

double Rng::normal()
{
    // Box-Muller, one variate per call.
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::geometric(double ratio)
{
    const double u = uniform_open_zero();
    if (ratio <= 0.0) {
        return 0;
    }
    // P(N >= n) = ratio^n
    return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(ratio)));
}

std::uint64_t Rng::binomial(std::uint64_t trials, double p)
{
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        hits += bernoulli(p) ? 1 : 0;
    }
    return hits;
}

std::uint64_t Rng::below(std::uint64_t n)
{
    if (n == 0) {
        throw std::invalid_argument("Rng::below needs n > 0");
    }
    // Rejection keeps the index exactly uniform.
    const std::uint64_t limit = (~std::uint64_t(0) / n) * n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

} // namespace tmsv
