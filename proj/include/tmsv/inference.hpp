#pragma once

// Estimators: degeneracy parameter of a count histogram, Gaussian HOM dip,
// and the HOM visibility expected from the pair population.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tmsv/counting.hpp"
#include "tmsv/distributions.hpp"

namespace tmsv {

//---------------------------------------------------------------------------//
// Degeneracy parameter
//---------------------------------------------------------------------------//

struct DegeneracyFitOptions {
    double lower = 1e-3;
    double upper = 1e4;
    /// The upper bound is multiplied by this factor once if the maximum sits on it.
    double expansion = 100.0;
    double relative_tolerance = 1e-6;
};

struct DegeneracyFit {
    double m_hat = 0.0;
    double std_err = 0.0;   ///< from the observed information at m_hat
    double fixed_mean = 0.0;
    double log_likelihood = 0.0;
    /// Likelihood still rising at the (expanded) upper bound: the data are
    /// compatible with the Poisson limit and m_hat is the bound itself.
    bool at_upper_bound = false;
    double bracket_lower = 0.0;
    double bracket_upper = 0.0;
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Multinomial log-likelihood of a histogram under the M-mode law.
double multimode_log_likelihood(CountHistogram const& hist, double nu, double modes);

/// First and second derivative of the log-likelihood with respect to M.
std::pair<double, double> multimode_score(CountHistogram const& hist, double nu, double modes);

/// Maximum-likelihood M with the mean held at `fixed_mean`.
///
/// Brent's method on log M inside the bracket, then Newton steps on M using
/// the analytic score. Throws FitError when the maximum lies on the lower
/// bound or the histogram has fewer than two distinct counts.
DegeneracyFit fit_degeneracy(CountHistogram const& hist, double fixed_mean, DegeneracyFitOptions const& options = {});

//---------------------------------------------------------------------------//
// Visibility prediction
//---------------------------------------------------------------------------//

/// V = 1 - 1 / (2 + 1/(2 nu)).
double predict_visibility(double nu);

/// dV/dnu = -2 / (4 nu + 1)^2.
double visibility_slope(double nu);

struct VisibilityPrediction {
    double nu = 0.0;
    double nu_std = 0.0;
    double v_pred = 0.0;
    double v_std = 0.0;    ///< first-order (delta method)
    double v_std_mc = 0.0; ///< Monte Carlo over nu ~ N(nu, nu_std)
    int samples = 0;
    int clipped_samples = 0; ///< nu draws <= 0 that were clipped
};

VisibilityPrediction propagate_visibility_uncertainty(double nu, double nu_std, int samples = 100000,
                                                      std::uint64_t seed = 0);

//---------------------------------------------------------------------------//
// Gaussian dip
//---------------------------------------------------------------------------//

struct DipPoint {
    double t2;
    double value;
    double error;
};

struct DipFit {
    double visibility = 0.0;
    double t0 = 0.0;
    double sigma = 0.0;
    double baseline = 0.0;
    Eigen::Vector4d errors = Eigen::Vector4d::Zero(); ///< (V, t0, sigma, baseline)
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    Eigen::Vector4d initial = Eigen::Vector4d::Zero();
    double chi2 = 0.0;
    int dof = 0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// B * (1 - V exp(-(t - t0)^2 / (2 sigma^2)))
double dip_model(double t2, double visibility, double t0, double sigma, double baseline);

struct DipFitOptions {
    int max_iterations = 200;
    double tolerance = 1e-12;
};

/// Per-point <n_a n_b> of a simulated scan, counting the events that fall
/// inside each port's integration cylinder. Errors are the shot-bootstrap
/// std, floored at 1/shots; point k resamples with seed
/// derive_shot_seed(options.seed, k).
std::vector<DipPoint> hom_correlation_scan(HomRun const& run, HomScanConfig const& config,
                                           BootstrapOptions const& options = {});

/// Weighted Levenberg-Marquardt (damped Gauss-Newton) fit of the dip model.
/// Throws FitError with the last state when it does not converge.
DipFit fit_gaussian_dip(std::vector<DipPoint> const& points, DipFitOptions const& options = {});

} // namespace tmsv
