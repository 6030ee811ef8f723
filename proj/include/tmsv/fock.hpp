#pragma once

// Brute-force truncated Fock-space calculator. It builds the pair state
// explicitly, applies beam splitters mode by mode and reads count
// distributions off the amplitudes, so every closed-form statement about the
// source (thermal marginal, HOM visibility and its limits) can be checked
// without using the formulas themselves.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tmsv/distributions.hpp"

namespace tmsv {

using Complex = std::complex<double>;

/// Dense state vector over the full (n_max+1)^mode_count occupation grid.
///
/// Mode 0 has stride 1. `truncation_loss()` accumulates the norm that was
/// lost when the state was built or transformed inside the cutoff.
class TruncatedPureState {
public:
    /// Largest number of amplitudes a state may hold (about 1 GiB).
    static constexpr Index kMaxDimension = Index(1) << 26;

    /// Vacuum state.
    TruncatedPureState(int mode_count, int n_max);
    /// All-zero amplitudes, to be filled with set_amplitude.
    static TruncatedPureState empty(int mode_count, int n_max);

    int mode_count() const { return mode_count_; }
    int n_max() const { return n_max_; }
    Index dimension() const { return amplitudes_.size(); }

    Eigen::VectorXcd const& amplitudes() const { return amplitudes_; }
    Complex amplitude(std::span<int const> occupations) const;
    void set_amplitude(std::span<int const> occupations, Complex value);

    Index index_of(std::span<int const> occupations) const;
    void occupations_of(Index index, std::span<int> out) const;

    double norm_squared() const { return amplitudes_.squaredNorm(); }
    double truncation_loss() const { return truncation_loss_; }
    void add_truncation_loss(double loss) { truncation_loss_ += loss; }

    /// Mean occupation of one mode.
    double mean_occupation(int mode) const;

private:
    friend TruncatedPureState beamsplitter(TruncatedPureState const&, int, int);

    int mode_count_;
    int n_max_;
    Eigen::VectorXcd amplitudes_;
    double truncation_loss_ = 0.0;
};

/// Joint distribution of the total counts at two output ports.
struct JointPmf {
    Eigen::MatrixXd probs; ///< probs(n_a, n_b)
    std::string label_a = "a";
    std::string label_b = "b";
    double truncation_loss = 0.0;

    Index n_max_a() const { return probs.rows() - 1; }
    Index n_max_b() const { return probs.cols() - 1; }
    double total() const { return probs.sum(); }
};

/// Overlap amplitude of the two spatio-temporal modes meeting on the splitter.
struct OverlapModel {
    double lambda = 1.0;

    explicit OverlapModel(double overlap = 1.0);
};

/// Two-mode squeezed vacuum sqrt(1-|a|^2) sum_n a^n |n,n> cut at n_max.
TruncatedPureState build_tmsv(TmsvParams const& params, int n_max);

/// Number distribution of one mode, tracing out the others.
Pmf marginal_counts(TruncatedPureState const& state, int mode);

/// Symmetric 50:50 splitter on modes i and j:
///   a_i^+ -> (a_i^+ + i a_j^+)/sqrt2,  a_j^+ -> (i a_i^+ + a_j^+)/sqrt2.
/// Output components beyond n_max are dropped and added to truncation_loss.
TruncatedPureState beamsplitter(TruncatedPureState const& state, int mode_i, int mode_j);

/// HOM output statistics for an arbitrary two-mode input (input mode 0 enters
/// port 1, input mode 1 enters port 2).
///
/// Uses a 4-mode register {(port1,u), (port1,w), (port2,u), (port2,w)}: the
/// first beam occupies shape u, the second beam's shape is lambda*u +
/// sqrt(1-lambda^2)*w. The splitter then mixes (port1,u)/(port2,u) and
/// (port1,w)/(port2,w). Ports a and b collect both shapes.
JointPmf hom_output(TruncatedPureState const& two_mode_input, OverlapModel const& overlap);

/// HOM output statistics for the pair source, per-mode cutoff n_max.
JointPmf hom_joint_pmf(TmsvParams const& params, OverlapModel const& overlap, int n_max = 12);

/// <n_a n_b>
double cross_correlation(JointPmf const& joint);

/// Mean counts at each port.
std::pair<double, double> port_means(JointPmf const& joint);

/// 1 - <n_a n_b>(lambda=1) / <n_a n_b>(lambda=0) for the pair source.
double visibility_oracle(TmsvParams const& params, int n_max = 40);

/// Visibility when each port is fed by an independent thermal mixture of
/// mean nu instead of the pair state.
///
/// The input density matrix is diagonal in the Fock basis, so propagating it
/// amounts to averaging the output statistics of the product states |p,q>
/// weighted by P(p)P(q); this is exact up to the cutoff.
double thermal_input_visibility(double nu, int n_max = 20);

} // namespace tmsv
