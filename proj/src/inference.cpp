#include "tmsv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "tmsv/random.hpp"

namespace tmsv {

//---------------------------------------------------------------------------//
// Degeneracy parameter
//---------------------------------------------------------------------------//

double multimode_log_likelihood(CountHistogram const& hist, double nu, double modes)
{
    double ll = 0.0;
    for (Index n = 0; n < hist.occurrences.size(); ++n) {
        if (hist.occurrences[n] != 0) {
            ll += static_cast<double>(hist.occurrences[n]) * detail::log_multimode_term(n, nu, modes);
        }
    }
    return ll;
}

std::pair<double, double> multimode_score(CountHistogram const& hist, double nu, double modes)
{
    using boost::math::digamma;
    using boost::math::trigamma;
    const double psi_m = digamma(modes);
    const double psi1_m = trigamma(modes);
    const double s = modes + nu;
    double first = 0.0;
    double second = 0.0;
    for (Index n = 0; n < hist.occurrences.size(); ++n) {
        const auto occ = static_cast<double>(hist.occurrences[n]);
        if (occ == 0.0) {
            continue;
        }
        const double k = static_cast<double>(n);
        first += occ * (digamma(k + modes) - psi_m - k / s - std::log1p(nu / modes) + nu / s);
        second += occ * (trigamma(k + modes) - psi1_m + k / (s * s) + nu / (modes * s) - nu / (s * s));
    }
    return {first, second};
}

namespace {

struct BracketSearch {
    double m = 0.0;
    int iterations = 0;
};

BracketSearch brent_on_log_m(CountHistogram const& hist, double nu, double lower, double upper)
{
    auto negative_ll = [&](double log_m) { return -multimode_log_likelihood(hist, nu, std::exp(log_m)); };
    std::uintmax_t iterations = 500;
    const auto [log_m, value] = boost::math::tools::brent_find_minima(negative_ll, std::log(lower), std::log(upper),
                                                                      40, iterations);
    (void)value;
    return {std::exp(log_m), static_cast<int>(iterations)};
}

bool near_bound(double m, double bound)
{
    return std::abs(std::log(m) - std::log(bound)) < 1e-4;
}

} // namespace

DegeneracyFit fit_degeneracy(CountHistogram const& hist, double fixed_mean, DegeneracyFitOptions const& options)
{
    if (!(fixed_mean > 0.0)) {
        throw DomainError("fixed mean must be > 0 for the degeneracy fit");
    }
    const auto distinct = (hist.occurrences.array() > 0).count();
    if (distinct < 2) {
        throw FitError("degeneracy fit needs at least two distinct observed counts");
    }
    if (!(options.lower > 0.0 && options.upper > options.lower)) {
        throw DomainError("invalid bracket for the degeneracy parameter");
    }

    DegeneracyFit fit;
    fit.fixed_mean = fixed_mean;
    fit.bracket_lower = options.lower;
    fit.bracket_upper = options.upper;

    auto search = brent_on_log_m(hist, fixed_mean, fit.bracket_lower, fit.bracket_upper);
    fit.iterations = search.iterations;

    auto rising_at = [&](double m) { return multimode_score(hist, fixed_mean, m).first > 0.0; };

    if (near_bound(search.m, fit.bracket_upper) && rising_at(fit.bracket_upper)) {
        fit.warnings.push_back("maximum on upper bound " + std::to_string(fit.bracket_upper)
                               + "; bracket expanded once");
        fit.bracket_upper *= options.expansion;
        search = brent_on_log_m(hist, fixed_mean, fit.bracket_lower, fit.bracket_upper);
        fit.iterations += search.iterations;
        if (near_bound(search.m, fit.bracket_upper) && rising_at(fit.bracket_upper)) {
            fit.at_upper_bound = true;
            fit.m_hat = fit.bracket_upper;
            fit.log_likelihood = multimode_log_likelihood(hist, fixed_mean, fit.m_hat);
            fit.std_err = std::numeric_limits<double>::infinity();
            fit.warnings.push_back("likelihood still rising at the expanded bound (Poisson limit)");
            return fit;
        }
    }
    if (near_bound(search.m, fit.bracket_lower) && !rising_at(fit.bracket_lower)) {
        std::ostringstream msg;
        msg << "degeneracy fit: no interior maximum, likelihood keeps rising towards M -> " << fit.bracket_lower
            << " (nu = " << fixed_mean << ", " << hist.total_shots << " samples, mean "
            << hist.mean() << ")";
        throw FitError(msg.str());
    }

    // Newton polish on M with the analytic score.
    double m = search.m;
    for (int it = 0; it < 50; ++it) {
        const auto [g, h] = multimode_score(hist, fixed_mean, m);
        if (!(h < 0.0)) {
            break;
        }
        double next = m - g / h;
        next = std::clamp(next, 0.5 * m, 2.0 * m);
        next = std::clamp(next, fit.bracket_lower, fit.bracket_upper);
        ++fit.iterations;
        const bool done = std::abs(next - m) <= 1e-3 * options.relative_tolerance * m;
        if (multimode_log_likelihood(hist, fixed_mean, next) >= multimode_log_likelihood(hist, fixed_mean, m)) {
            m = next;
        } else {
            break;
        }
        if (done) {
            break;
        }
    }

    fit.m_hat = m;
    fit.log_likelihood = multimode_log_likelihood(hist, fixed_mean, m);
    const double curvature = multimode_score(hist, fixed_mean, m).second;
    fit.std_err = curvature < 0.0 ? 1.0 / std::sqrt(-curvature) : std::numeric_limits<double>::infinity();
    return fit;
}

//---------------------------------------------------------------------------//
// Visibility prediction
//---------------------------------------------------------------------------//

double predict_visibility(double nu)
{
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw DomainError("visibility prediction needs a finite nu > 0");
    }
    return 1.0 - 1.0 / (2.0 + 1.0 / (2.0 * nu));
}

double visibility_slope(double nu)
{
    const double d = 4.0 * nu + 1.0;
    return -2.0 / (d * d);
}

VisibilityPrediction propagate_visibility_uncertainty(double nu, double nu_std, int samples, std::uint64_t seed)
{
    if (!(nu_std >= 0.0)) {
        throw DomainError("nu uncertainty must be >= 0");
    }
    VisibilityPrediction pred;
    pred.nu = nu;
    pred.nu_std = nu_std;
    pred.v_pred = predict_visibility(nu);
    pred.v_std = std::abs(visibility_slope(nu)) * nu_std;
    pred.samples = samples;
    if (nu_std == 0.0 || samples < 2) {
        return pred;
    }

    // Clipped draws are evaluated at this floor, where V is 1 to double precision.
    constexpr double kFloor = 1e-12;
    Rng rng(seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        double draw = nu + nu_std * rng.normal();
        if (draw <= 0.0) {
            draw = kFloor;
            ++pred.clipped_samples;
        }
        const double v = predict_visibility(draw);
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    pred.v_std_mc = std::sqrt(m2 / (samples - 1));
    return pred;
}

//---------------------------------------------------------------------------//
// Gaussian dip
//---------------------------------------------------------------------------//

double dip_model(double t2, double visibility, double t0, double sigma, double baseline)
{
    const double d = (t2 - t0) / sigma;
    return baseline * (1.0 - visibility * std::exp(-0.5 * d * d));
}

namespace {

using Params = Eigen::Vector4d; // (V, t0, sigma, B)

Params initial_guess(std::vector<DipPoint> points)
{
    std::sort(points.begin(), points.end(), [](auto const& a, auto const& b) { return a.t2 < b.t2; });
    const auto n = points.size();
    // Outer 30% of the points: 15% from each end.
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.15 * n)));
    double baseline = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        baseline += points[i].value + points[n - 1 - i].value;
    }
    baseline /= 2.0 * k;

    const auto lowest = std::min_element(points.begin(), points.end(),
                                         [](auto const& a, auto const& b) { return a.value < b.value; });
    const double t0 = lowest->t2;
    const double v0 = baseline > 0.0 ? std::clamp(1.0 - lowest->value / baseline, 0.05, 1.0) : 0.5;

    const double half_depth = baseline * (1.0 - 0.5 * v0);
    double lo = t0;
    double hi = t0;
    for (auto const& p : points) {
        if (p.value <= half_depth) {
            lo = std::min(lo, p.t2);
            hi = std::max(hi, p.t2);
        }
    }
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
        if (points[i].t2 > points[i - 1].t2) {
            spacing = std::min(spacing, points[i].t2 - points[i - 1].t2);
        }
    }
    if (!std::isfinite(spacing)) {
        spacing = 1.0;
    }
    const double fwhm = std::max(hi - lo, spacing);
    return {v0, t0, fwhm / 2.3548200450309493, baseline};
}

struct Linearization {
    Eigen::VectorXd residual; // (y - f) / err
    Eigen::MatrixXd jacobian; // d f / d p / err
    double chi2 = 0.0;
};

Linearization linearize(std::vector<DipPoint> const& points, Params const& p)
{
    const auto n = static_cast<Index>(points.size());
    Linearization lin;
    lin.residual.resize(n);
    lin.jacobian.resize(n, 4);
    for (Index i = 0; i < n; ++i) {
        auto const& pt = points[static_cast<std::size_t>(i)];
        const double dt = pt.t2 - p[1];
        const double s2 = p[2] * p[2];
        const double g = std::exp(-0.5 * dt * dt / s2);
        const double f = p[3] * (1.0 - p[0] * g);
        const double w = 1.0 / pt.error;
        lin.residual[i] = (pt.value - f) * w;
        lin.jacobian(i, 0) = -p[3] * g * w;
        lin.jacobian(i, 1) = -p[3] * p[0] * g * dt / s2 * w;
        lin.jacobian(i, 2) = -p[3] * p[0] * g * dt * dt / (s2 * p[2]) * w;
        lin.jacobian(i, 3) = (1.0 - p[0] * g) * w;
    }
    lin.chi2 = lin.residual.squaredNorm();
    return lin;
}

std::string describe(Params const& p, double chi2, int iterations)
{
    std::ostringstream os;
    os << "V=" << p[0] << " t0=" << p[1] << " sigma=" << p[2] << " baseline=" << p[3] << " chi2=" << chi2
       << " after " << iterations << " iterations";
    return os.str();
}

} // namespace

DipFit fit_gaussian_dip(std::vector<DipPoint> const& points, DipFitOptions const& options)
{
    if (points.size() < 5) {
        throw DomainError("dip fit needs at least 5 points");
    }
    for (auto const& p : points) {
        if (!(p.error > 0.0)) {
            throw DomainError("dip fit needs strictly positive errors");
        }
    }

    DipFit fit;
    Params p = initial_guess(points);
    fit.initial = p;
    Linearization lin = linearize(points, p);
    double damping = 1e-3;
    bool converged = lin.chi2 == 0.0;
    int it = 0;
    for (; it < options.max_iterations && !converged; ++it) {
        const Eigen::Matrix4d jtj = lin.jacobian.transpose() * lin.jacobian;
        const Eigen::Vector4d jtr = lin.jacobian.transpose() * lin.residual;
        bool stepped = false;
        while (damping < 1e16) {
            Eigen::Matrix4d a = jtj;
            a.diagonal() += damping * jtj.diagonal().cwiseMax(1e-300);
            const Eigen::Vector4d step = a.ldlt().solve(jtr);
            const Params trial = p + step;
            if (!(trial[2] != 0.0) || !trial.allFinite()) {
                damping *= 10.0;
                continue;
            }
            Linearization next = linearize(points, trial);
            if (next.chi2 <= lin.chi2) {
                const bool small_step = (step.array().abs() <= options.tolerance * (p.array().abs() + options.tolerance)).all();
                const bool flat = (lin.chi2 - next.chi2) <= options.tolerance * lin.chi2;
                p = trial;
                lin = std::move(next);
                damping = std::max(damping / 10.0, 1e-12);
                converged = small_step || flat || lin.chi2 == 0.0;
                stepped = true;
                break;
            }
            damping *= 10.0;
        }
        if (!stepped) {
            // No downhill step at any damping: already at the minimum.
            converged = true;
        }
    }

    p[2] = std::abs(p[2]);
    fit.visibility = p[0];
    fit.t0 = p[1];
    fit.sigma = p[2];
    fit.baseline = p[3];
    fit.chi2 = lin.chi2;
    fit.dof = static_cast<int>(points.size()) - 4;
    fit.iterations = it;
    fit.converged = converged;

    if (!converged) {
        throw FitError("dip fit did not converge: " + describe(p, lin.chi2, it));
    }
    if (!(fit.visibility >= 0.0 && fit.visibility <= 1.0) || !(fit.baseline > 0.0)) {
        throw FitError("dip fit left the physical region: " + describe(p, lin.chi2, it));
    }

    const Linearization at_min = linearize(points, p);
    const Eigen::Matrix4d info = at_min.jacobian.transpose() * at_min.jacobian;
    fit.covariance = info.inverse();
    fit.errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.message = "converged: " + describe(p, lin.chi2, it);
    return fit;
}

//---------------------------------------------------------------------------//

std::vector<DipPoint> hom_correlation_scan(HomRun const& run, HomScanConfig const& config,
                                           BootstrapOptions const& options)
{
    std::vector<DipPoint> points;
    points.reserve(run.points.size());
    for (std::size_t k = 0; k < run.points.size(); ++k) {
        auto const& point = run.points[k];
        const auto shots = static_cast<Index>(point.port_a.shot_count());
        if (shots == 0 || point.port_b.shot_count() != point.port_a.shot_count()) {
            throw DomainError("scan point needs the same non-zero shot count in both ports");
        }
        Eigen::VectorXd product(shots);
        for (Index s = 0; s < shots; ++s) {
            auto count = [&](EventTable const& table, Velocity const& center) {
                auto const& events = table.shots[static_cast<std::size_t>(s)].events;
                return static_cast<double>(std::count_if(events.begin(), events.end(), [&](Velocity const& v) {
                    return in_port_cell(config, center, v);
                }));
            };
            product[s] = count(point.port_a, config.port_a_center) * count(point.port_b, config.port_b_center);
        }
        BootstrapOptions per_point = options;
        per_point.seed = derive_shot_seed(options.seed, k);
        const double err = bootstrap_std(
            shots,
            [&](std::span<Index const> idx) {
                double sum = 0.0;
                for (Index s : idx) {
                    sum += product[s];
                }
                return sum / static_cast<double>(idx.size());
            },
            per_point);
        // A point without a single coincidence has zero spread; one product
        // count in the whole sample is the resolution of the mean.
        points.push_back({point.t2, product.mean(), std::max(err, 1.0 / static_cast<double>(shots))});
    }
    return points;
}

} // namespace tmsv
