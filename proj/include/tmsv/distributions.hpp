#pragma once

// Closed-form counting distributions of one arm of a two-mode squeezed
// vacuum source: thermal (single mode), negative binomial (M modes) and
// Poisson, plus the binomial thinning performed by a lossy detector.
//
// Everything here is templated on the scalar type so that the same code can
// be run in long double when checking the double-precision results.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "tmsv/error.hpp"

namespace tmsv {

using Index = Eigen::Index;

/// Tail mass allowed beyond n_max when the support is chosen automatically.
inline constexpr double kDefaultTailTolerance = 1e-10;

/// Probability mass function over n = 0..n_max.
template <typename Scalar>
struct BasicPmf {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Vector probs;
    Scalar tail_tolerance = Scalar(kDefaultTailTolerance);

    Index n_max() const { return probs.size() - 1; }
    Index size() const { return probs.size(); }
    Scalar operator[](Index n) const { return probs[n]; }
    Scalar total() const { return probs.sum(); }
    /// Probability not represented in `probs`.
    Scalar tail_mass() const { return Scalar(1) - total(); }
};

using Pmf = BasicPmf<double>;

template <typename Scalar>
struct Moments {
    Scalar mean;
    Scalar variance;
};

/// Detection efficiency of a counting detector.
struct DetectorModel {
    double eta = 1.0;

    explicit DetectorModel(double efficiency = 1.0) : eta(efficiency)
    {
        if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
            throw DomainError("detection efficiency must lie in [0, 1], got "
                              + std::to_string(efficiency));
        }
    }
};

/// Source parameters: |alpha| of the pair amplitude and the mean occupation
/// nu = |alpha|^2 / (1 - |alpha|^2) of either mode.
class TmsvParams {
public:
    static TmsvParams from_nu(double nu)
    {
        if (!(nu >= 0.0) || !std::isfinite(nu)) {
            throw DomainError("mean occupation must be finite and >= 0");
        }
        return TmsvParams(nu, std::sqrt(nu / (1.0 + nu)));
    }

    static TmsvParams from_alpha(double alpha_mag)
    {
        if (!(alpha_mag >= 0.0 && alpha_mag < 1.0)) {
            throw DomainError("|alpha| must lie in [0, 1)");
        }
        const double a2 = alpha_mag * alpha_mag;
        return TmsvParams(a2 / (1.0 - a2), alpha_mag);
    }

    double nu() const { return nu_; }
    double alpha_mag() const { return alpha_mag_; }
    /// |alpha|^2 = nu / (1 + nu), the ratio of successive thermal terms.
    double alpha_sq() const { return nu_ / (1.0 + nu_); }

private:
    TmsvParams(double nu, double alpha_mag) : nu_(nu), alpha_mag_(alpha_mag) {}

    double nu_;
    double alpha_mag_;
};

inline double detected_mean(double nu, DetectorModel const& det)
{
    if (!(nu >= 0.0)) {
        throw DomainError("mean occupation must be >= 0");
    }
    return det.eta * nu;
}

namespace detail {

template <typename Scalar>
void require_nonnegative(Scalar value, char const* what)
{
    if (!(value >= Scalar(0)) || !std::isfinite(static_cast<double>(value))) {
        throw DomainError(std::string(what) + " must be finite and >= 0");
    }
}

inline void require_support(Index n_max)
{
    if (n_max < 0) {
        throw DomainError("n_max must be >= 0");
    }
}

template <typename Scalar>
BasicPmf<Scalar> point_mass_at_zero(Index n_max)
{
    BasicPmf<Scalar> pmf;
    pmf.probs = BasicPmf<Scalar>::Vector::Zero(n_max + 1);
    pmf.probs[0] = Scalar(1);
    return pmf;
}

// Upper bound of the support scan used by the tail rule.
inline constexpr Index kMaxAutoSupport = 10'000'000;

template <typename Scalar>
Scalar log_multimode_term(Index n, Scalar nu, Scalar modes)
{
    using std::lgamma;
    using std::log1p;
    const Scalar k = Scalar(n);
    return lgamma(k + modes) - lgamma(k + Scalar(1)) - lgamma(modes)
           - k * log1p(modes / nu) - modes * log1p(nu / modes);
}

template <typename Scalar>
Scalar log_poisson_term(Index n, Scalar mean)
{
    using std::lgamma;
    using std::log;
    const Scalar k = Scalar(n);
    return k * log(mean) - mean - lgamma(k + Scalar(1));
}

} // namespace detail

//---------------------------------------------------------------------------//
// Support selection (tail rule)
//---------------------------------------------------------------------------//

/// Smallest n_max whose thermal tail mass nu^(n+1)/(1+nu)^(n+1) is below tol.
template <typename Scalar>
Index thermal_support(Scalar nu, double tol = kDefaultTailTolerance)
{
    using std::floor;
    using std::log;
    detail::require_nonnegative(nu, "mean occupation");
    if (nu == Scalar(0)) {
        return 0;
    }
    const Scalar log_ratio = log(nu / (Scalar(1) + nu));
    const Scalar n = floor(Scalar(log(tol)) / log_ratio);
    return std::max<Index>(0, static_cast<Index>(n));
}

/// Smallest n_max for which the negative-binomial tail is provably below tol.
///
/// Past the mode the term ratio r_n = (n+M)/(n+1) * nu/(M+nu) is monotone
/// and tends to p = nu/(M+nu), so max(r_n, p) bounds every later ratio and the
/// tail is bounded by a geometric series.
template <typename Scalar>
Index multimode_support(Scalar nu, Scalar modes, double tol = kDefaultTailTolerance)
{
    using std::exp;
    detail::require_nonnegative(nu, "mean occupation");
    if (!(modes > Scalar(0))) {
        throw DomainError("degeneracy parameter must be > 0");
    }
    if (nu == Scalar(0)) {
        return 0;
    }
    const Scalar p = nu / (modes + nu);
    for (Index n = 0; n < detail::kMaxAutoSupport; ++n) {
        const Scalar ratio = (Scalar(n) + modes) / Scalar(n + 1) * p;
        if (ratio >= Scalar(1)) {
            continue;
        }
        const Scalar rho = std::max(ratio, p);
        const Scalar term = exp(detail::log_multimode_term(n, nu, modes));
        if (term * rho / (Scalar(1) - rho) < Scalar(tol)) {
            return n;
        }
    }
    throw DomainError("multimode support exceeds scan limit");
}

template <typename Scalar>
Index poisson_support(Scalar mean, double tol = kDefaultTailTolerance)
{
    using std::exp;
    detail::require_nonnegative(mean, "Poisson mean");
    if (mean == Scalar(0)) {
        return 0;
    }
    for (Index n = 0; n < detail::kMaxAutoSupport; ++n) {
        const Scalar ratio = mean / Scalar(n + 1);
        if (ratio >= Scalar(1)) {
            continue;
        }
        const Scalar term = exp(detail::log_poisson_term(n, mean));
        if (term * ratio / (Scalar(1) - ratio) < Scalar(tol)) {
            return n;
        }
    }
    throw DomainError("Poisson support exceeds scan limit");
}

//---------------------------------------------------------------------------//
// Distributions
//---------------------------------------------------------------------------//

/// Thermal (geometric) law P(n) = nu^n / (1+nu)^(n+1).
template <typename Scalar>
BasicPmf<Scalar> thermal_pmf(Scalar nu, Index n_max)
{
    using std::exp;
    using std::log;
    using std::log1p;
    detail::require_nonnegative(nu, "mean occupation");
    detail::require_support(n_max);
    if (nu == Scalar(0)) {
        return detail::point_mass_at_zero<Scalar>(n_max);
    }
    BasicPmf<Scalar> pmf;
    pmf.probs.resize(n_max + 1);
    const Scalar log_nu = log(nu);
    const Scalar log_one_plus = log1p(nu);
    for (Index n = 0; n <= n_max; ++n) {
        pmf.probs[n] = exp(Scalar(n) * log_nu - Scalar(n + 1) * log_one_plus);
    }
    return pmf;
}

template <typename Scalar>
BasicPmf<Scalar> thermal_pmf(Scalar nu)
{
    return thermal_pmf(nu, thermal_support(nu));
}

/// Counting law of M independent thermal modes sharing total mean nu
/// (negative binomial); M need not be an integer.
///
/// Evaluated as exp of a log-gamma expression so large n + M stay finite.
/// nu = 0 gives the point mass at zero for every M.
template <typename Scalar>
BasicPmf<Scalar> multimode_pmf(Scalar nu, Scalar modes, Index n_max)
{
    using std::exp;
    detail::require_nonnegative(nu, "mean occupation");
    detail::require_support(n_max);
    if (!(modes > Scalar(0)) || !std::isfinite(static_cast<double>(modes))) {
        throw DomainError("degeneracy parameter must be finite and > 0");
    }
    if (nu == Scalar(0)) {
        return detail::point_mass_at_zero<Scalar>(n_max);
    }
    BasicPmf<Scalar> pmf;
    pmf.probs.resize(n_max + 1);
    for (Index n = 0; n <= n_max; ++n) {
        pmf.probs[n] = exp(detail::log_multimode_term(n, nu, modes));
    }
    return pmf;
}

template <typename Scalar>
BasicPmf<Scalar> multimode_pmf(Scalar nu, Scalar modes)
{
    return multimode_pmf(nu, modes, multimode_support(nu, modes));
}

template <typename Scalar>
BasicPmf<Scalar> poisson_pmf(Scalar mean, Index n_max)
{
    using std::exp;
    detail::require_nonnegative(mean, "Poisson mean");
    detail::require_support(n_max);
    if (mean == Scalar(0)) {
        return detail::point_mass_at_zero<Scalar>(n_max);
    }
    BasicPmf<Scalar> pmf;
    pmf.probs.resize(n_max + 1);
    for (Index n = 0; n <= n_max; ++n) {
        pmf.probs[n] = exp(detail::log_poisson_term(n, mean));
    }
    return pmf;
}

template <typename Scalar>
BasicPmf<Scalar> poisson_pmf(Scalar mean)
{
    return poisson_pmf(mean, poisson_support(mean));
}

/// Counts seen by a detector that keeps each particle independently with
/// probability eta. The output has the same support as the input; mass that
/// the input does not represent beyond its n_max is not recovered.
template <typename Scalar>
BasicPmf<Scalar> binomial_thin(BasicPmf<Scalar> const& pmf, DetectorModel const& det)
{
    using std::exp;
    using std::lgamma;
    using std::log;
    using std::log1p;
    const Scalar eta = Scalar(det.eta);
    if (eta == Scalar(1)) {
        return pmf;
    }
    BasicPmf<Scalar> out;
    out.tail_tolerance = pmf.tail_tolerance;
    out.probs = BasicPmf<Scalar>::Vector::Zero(pmf.size());
    if (eta == Scalar(0)) {
        out.probs[0] = pmf.total();
        return out;
    }
    const Scalar log_eta = log(eta);
    const Scalar log_miss = log1p(-eta);
    for (Index n = 0; n < pmf.size(); ++n) {
        const Scalar pn = pmf.probs[n];
        if (pn == Scalar(0)) {
            continue;
        }
        const Scalar log_fact_n = lgamma(Scalar(n + 1));
        for (Index k = 0; k <= n; ++k) {
            const Scalar log_weight = log_fact_n - lgamma(Scalar(k + 1))
                                      - lgamma(Scalar(n - k + 1)) + Scalar(k) * log_eta
                                      + Scalar(n - k) * log_miss;
            out.probs[k] += pn * exp(log_weight);
        }
    }
    return out;
}

/// Mean and variance of the represented (truncated) distribution.
template <typename Scalar>
Moments<Scalar> pmf_moments(BasicPmf<Scalar> const& pmf)
{
    const auto n = BasicPmf<Scalar>::Vector::LinSpaced(pmf.size(), Scalar(0),
                                                        Scalar(pmf.n_max()));
    const Scalar mean = pmf.probs.dot(n);
    const Scalar variance = pmf.probs.dot((n.array() - mean).square().matrix());
    return {mean, variance};
}

/// Largest absolute elementwise difference, padding the shorter pmf with zeros.
template <typename Scalar>
Scalar sup_distance(BasicPmf<Scalar> const& a, BasicPmf<Scalar> const& b)
{
    const Index common = std::min(a.size(), b.size());
    Scalar d = common > 0 ? (a.probs.head(common) - b.probs.head(common)).cwiseAbs().maxCoeff()
                          : Scalar(0);
    if (a.size() > common) {
        d = std::max(d, a.probs.tail(a.size() - common).cwiseAbs().maxCoeff());
    }
    if (b.size() > common) {
        d = std::max(d, b.probs.tail(b.size() - common).cwiseAbs().maxCoeff());
    }
    return d;
}

} // namespace tmsv
