#pragma once

// Shared helpers for the test binaries: synthetic count samples and small
// numeric utilities.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "tmsv/counting.hpp"
#include "tmsv/random.hpp"

namespace tmsv::testing {

/// Thermal counts with mean nu.
inline std::vector<int> thermal_counts(double nu, int n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& c : out) {
        c = static_cast<int>(rng.geometric(nu / (1.0 + nu)));
    }
    return out;
}

/// Negative-binomial counts (mean nu, M modes) drawn as a gamma-Poisson mixture.
inline std::vector<int> multimode_counts(double nu, double modes, int n, std::uint64_t seed)
{
    std::mt19937_64 engine(seed);
    std::gamma_distribution<double> rate(modes, nu / modes);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& c : out) {
        std::poisson_distribution<int> counts(rate(engine));
        c = counts(engine);
    }
    return out;
}

inline std::vector<int> poisson_counts(double mean, int n, std::uint64_t seed)
{
    std::mt19937_64 engine(seed);
    std::poisson_distribution<int> counts(mean);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& c : out) {
        c = counts(engine);
    }
    return out;
}

inline CountHistogram histogram(std::vector<int> const& counts)
{
    return CountHistogram::from_counts(counts);
}

/// p-value of the chi-square homogeneity test between two histograms. Bins
/// are merged from the top until every pooled bin expects >= 5 in both.
inline double homogeneity_p_value(CountHistogram const& a, CountHistogram const& b)
{
    const Index top = std::max(a.n_max(), b.n_max());
    auto occ = [top](CountHistogram const& h) {
        std::vector<double> v(static_cast<std::size_t>(top + 1), 0.0);
        for (Index n = 0; n < h.occurrences.size(); ++n) {
            v[static_cast<std::size_t>(n)] = static_cast<double>(h.occurrences[n]);
        }
        return v;
    };
    std::vector<double> oa = occ(a), ob = occ(b);
    const double na = static_cast<double>(a.total_shots);
    const double nb = static_cast<double>(b.total_shots);
    std::vector<std::pair<double, double>> bins;
    double ca = 0.0, cb = 0.0;
    for (std::size_t n = 0; n < oa.size(); ++n) {
        ca += oa[n];
        cb += ob[n];
        const double pooled = ca + cb;
        if (pooled * std::min(na, nb) / (na + nb) >= 5.0) {
            bins.emplace_back(ca, cb);
            ca = cb = 0.0;
        }
    }
    if (ca + cb > 0.0) {
        if (bins.empty()) {
            bins.emplace_back(ca, cb);
        } else {
            bins.back().first += ca;
            bins.back().second += cb;
        }
    }
    double chi2 = 0.0;
    for (auto const& [x, y] : bins) {
        const double ea = (x + y) * na / (na + nb);
        const double eb = (x + y) * nb / (na + nb);
        chi2 += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    const int dof = static_cast<int>(bins.size()) - 1;
    return dof > 0 ? boost::math::gamma_q(0.5 * dof, 0.5 * chi2) : 1.0;
}

} // namespace tmsv::testing
