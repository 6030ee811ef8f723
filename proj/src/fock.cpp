#include "tmsv/fock.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>

namespace tmsv {

namespace {

constexpr Complex kI{0.0, 1.0};

Index checked_dimension(int mode_count, int n_max)
{
    if (mode_count < 1) {
        throw DomainError("a state needs at least one mode");
    }
    if (n_max < 0) {
        throw DomainError("n_max must be >= 0");
    }
    Index dim = 1;
    for (int k = 0; k < mode_count; ++k) {
        dim *= n_max + 1;
        if (dim > TruncatedPureState::kMaxDimension) {
            throw DomainError("truncated Fock space too large: "
                              + std::to_string(mode_count) + " modes at n_max "
                              + std::to_string(n_max));
        }
    }
    return dim;
}

// Output amplitudes of |p,q> under the 50:50 splitter, indexed by the
// occupation r of the first mode (the second holds p+q-r).
//
// (a^+ + i b^+)^p (i a^+ + b^+)^q expands into a^+^(k+l) b^+^(p-k+q-l) with
// coefficient C(p,k) C(q,l) i^(p-k+l); normalizing the Fock states gives the
// factor sqrt(r! s! / (p! q!)) / 2^((p+q)/2).
class SplitterTable {
public:
    std::vector<Complex> const& row(int p, int q)
    {
        auto [it, inserted] = cache_.try_emplace({p, q});
        if (inserted) {
            it->second = compute(p, q);
        }
        return it->second;
    }

private:
    static std::vector<Complex> compute(int p, int q)
    {
        const int total = p + q;
        std::vector<Complex> out(total + 1, Complex{0.0, 0.0});
        const double log_norm_in = std::lgamma(p + 1.0) + std::lgamma(q + 1.0);
        for (int r = 0; r <= total; ++r) {
            Complex sum{0.0, 0.0};
            for (int k = std::max(0, r - q); k <= std::min(p, r); ++k) {
                const int l = r - k;
                const double mag = binomial(p, k) * binomial(q, l);
                sum += mag * ipow(p - k + l);
            }
            const int s = total - r;
            const double log_scale = 0.5 * (std::lgamma(r + 1.0) + std::lgamma(s + 1.0) - log_norm_in)
                                     - 0.5 * total * std::log(2.0);
            out[r] = sum * std::exp(log_scale);
        }
        return out;
    }

    // Exact in double while C(n,k) < 2^53.
    static double binomial(int n, int k)
    {
        k = std::min(k, n - k);
        double c = 1.0;
        for (int i = 0; i < k; ++i) {
            c = c * (n - i) / (i + 1);
        }
        return c;
    }

    static Complex ipow(int e)
    {
        switch (e % 4) {
        case 0: return {1.0, 0.0};
        case 1: return kI;
        case 2: return {-1.0, 0.0};
        default: return -kI;
        }
    }

    std::map<std::pair<int, int>, std::vector<Complex>> cache_;
};

} // namespace

//---------------------------------------------------------------------------//

TruncatedPureState::TruncatedPureState(int mode_count, int n_max)
    : mode_count_(mode_count), n_max_(n_max),
      amplitudes_(Eigen::VectorXcd::Zero(checked_dimension(mode_count, n_max)))
{
    amplitudes_[0] = 1.0;
}

Index TruncatedPureState::index_of(std::span<int const> occupations) const
{
    if (static_cast<int>(occupations.size()) != mode_count_) {
        throw DomainError("occupation tuple has wrong number of modes");
    }
    Index index = 0;
    Index stride = 1;
    for (int n : occupations) {
        if (n < 0 || n > n_max_) {
            throw DomainError("occupation outside truncated space");
        }
        index += n * stride;
        stride *= n_max_ + 1;
    }
    return index;
}

void TruncatedPureState::occupations_of(Index index, std::span<int> out) const
{
    for (int k = 0; k < mode_count_; ++k) {
        out[k] = static_cast<int>(index % (n_max_ + 1));
        index /= n_max_ + 1;
    }
}

Complex TruncatedPureState::amplitude(std::span<int const> occupations) const
{
    return amplitudes_[index_of(occupations)];
}

void TruncatedPureState::set_amplitude(std::span<int const> occupations, Complex value)
{
    amplitudes_[index_of(occupations)] = value;
}

TruncatedPureState TruncatedPureState::empty(int mode_count, int n_max)
{
    TruncatedPureState state(mode_count, n_max);
    state.amplitudes_[0] = 0.0;
    return state;
}

double TruncatedPureState::mean_occupation(int mode) const
{
    return marginal_counts(*this, mode).probs.dot(
        Eigen::VectorXd::LinSpaced(n_max_ + 1, 0.0, static_cast<double>(n_max_)));
}

OverlapModel::OverlapModel(double overlap) : lambda(overlap)
{
    if (!(overlap >= 0.0 && overlap <= 1.0)) {
        throw DomainError("mode overlap must lie in [0, 1]");
    }
}

//---------------------------------------------------------------------------//

TruncatedPureState build_tmsv(TmsvParams const& params, int n_max)
{
    TruncatedPureState state(2, n_max);
    const double alpha = params.alpha_mag();
    const double norm = std::sqrt(1.0 - alpha * alpha);
    double power = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        std::array<int, 2> occ{n, n};
        state.set_amplitude(occ, norm * power);
        power *= alpha;
    }
    state.add_truncation_loss(std::max(0.0, 1.0 - state.norm_squared()));
    return state;
}

Pmf marginal_counts(TruncatedPureState const& state, int mode)
{
    if (mode < 0 || mode >= state.mode_count()) {
        throw DomainError("mode index out of range");
    }
    const int base = state.n_max() + 1;
    Index stride = 1;
    for (int k = 0; k < mode; ++k) {
        stride *= base;
    }
    Pmf pmf;
    pmf.probs = Eigen::VectorXd::Zero(base);
    auto const& amp = state.amplitudes();
    for (Index i = 0; i < amp.size(); ++i) {
        pmf.probs[(i / stride) % base] += std::norm(amp[i]);
    }
    return pmf;
}

TruncatedPureState beamsplitter(TruncatedPureState const& state, int mode_i, int mode_j)
{
    const int modes = state.mode_count();
    if (mode_i < 0 || mode_j < 0 || mode_i >= modes || mode_j >= modes || mode_i == mode_j) {
        throw DomainError("beam splitter needs two distinct valid mode indices");
    }
    const int n_max = state.n_max();
    auto out = TruncatedPureState::empty(modes, n_max);
    out.truncation_loss_ = state.truncation_loss();

    Index stride_i = 1;
    Index stride_j = 1;
    for (int k = 0; k < mode_i; ++k) stride_i *= n_max + 1;
    for (int k = 0; k < mode_j; ++k) stride_j *= n_max + 1;

    SplitterTable table;
    auto const& in = state.amplitudes();
    for (Index index = 0; index < in.size(); ++index) {
        const Complex a = in[index];
        if (a == Complex{0.0, 0.0}) {
            continue;
        }
        const int p = static_cast<int>((index / stride_i) % (n_max + 1));
        const int q = static_cast<int>((index / stride_j) % (n_max + 1));
        const Index rest = index - p * stride_i - q * stride_j;
        auto const& row = table.row(p, q);
        const int total = p + q;
        for (int r = std::max(0, total - n_max); r <= std::min(total, n_max); ++r) {
            out.amplitudes_[rest + r * stride_i + (total - r) * stride_j] += a * row[r];
        }
    }
    // The full-space map is unitary, so any norm missing from the output went
    // to occupations above the cutoff.
    out.truncation_loss_ += std::max(0.0, state.norm_squared() - out.norm_squared());
    return out;
}

JointPmf hom_output(TruncatedPureState const& input, OverlapModel const& overlap)
{
    if (input.mode_count() != 2) {
        throw DomainError("HOM input must be a two-mode state");
    }
    const int n_max = input.n_max();
    const double lambda = overlap.lambda;
    const double mu = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));

    // Register order: 0 = (port1,u), 1 = (port1,w), 2 = (port2,u), 3 = (port2,w).
    auto loaded = TruncatedPureState::empty(4, n_max);
    loaded.add_truncation_loss(input.truncation_loss());
    for (int n = 0; n <= n_max; ++n) {
        for (int m = 0; m <= n_max; ++m) {
            std::array<int, 2> in_occ{n, m};
            const Complex c = input.amplitude(in_occ);
            if (c == Complex{0.0, 0.0}) {
                continue;
            }
            // (lambda u^+ + mu w^+)^m / sqrt(m!) |0> = sum_k sqrt(C(m,k)) lambda^k mu^(m-k) |k>_u |m-k>_w
            for (int k = 0; k <= m; ++k) {
                const double log_binom = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0);
                const double weight = std::exp(0.5 * log_binom) * std::pow(lambda, k) * std::pow(mu, m - k);
                if (weight == 0.0) {
                    continue;
                }
                std::array<int, 4> occ{n, 0, k, m - k};
                loaded.set_amplitude(occ, c * weight);
            }
        }
    }

    TruncatedPureState mixed = beamsplitter(beamsplitter(loaded, 0, 2), 1, 3);

    JointPmf joint;
    joint.probs = Eigen::MatrixXd::Zero(2 * n_max + 1, 2 * n_max + 1);
    joint.truncation_loss = mixed.truncation_loss();
    auto const& out = mixed.amplitudes();
    std::array<int, 4> occ{};
    for (Index i = 0; i < out.size(); ++i) {
        const double prob = std::norm(out[i]);
        if (prob == 0.0) {
            continue;
        }
        mixed.occupations_of(i, occ);
        joint.probs(occ[0] + occ[1], occ[2] + occ[3]) += prob;
    }
    return joint;
}

JointPmf hom_joint_pmf(TmsvParams const& params, OverlapModel const& overlap, int n_max)
{
    return hom_output(build_tmsv(params, n_max), overlap);
}

double cross_correlation(JointPmf const& joint)
{
    const auto na = Eigen::VectorXd::LinSpaced(joint.probs.rows(), 0.0, double(joint.n_max_a()));
    const auto nb = Eigen::VectorXd::LinSpaced(joint.probs.cols(), 0.0, double(joint.n_max_b()));
    return na.dot(joint.probs * nb);
}

std::pair<double, double> port_means(JointPmf const& joint)
{
    const auto na = Eigen::VectorXd::LinSpaced(joint.probs.rows(), 0.0, double(joint.n_max_a()));
    const auto nb = Eigen::VectorXd::LinSpaced(joint.probs.cols(), 0.0, double(joint.n_max_b()));
    return {na.dot(joint.probs.rowwise().sum()), nb.dot(joint.probs.colwise().sum().transpose())};
}

namespace {

double visibility_from(double overlapped, double distinguishable)
{
    if (!(distinguishable > 0.0)) {
        throw UndefinedVisibility("reference cross-correlation is zero (vacuum input)");
    }
    return 1.0 - overlapped / distinguishable;
}

} // namespace

double visibility_oracle(TmsvParams const& params, int n_max)
{
    const auto input = build_tmsv(params, n_max);
    const double overlapped = cross_correlation(hom_output(input, OverlapModel(1.0)));
    const double distinguishable = cross_correlation(hom_output(input, OverlapModel(0.0)));
    return visibility_from(overlapped, distinguishable);
}

double thermal_input_visibility(double nu, int n_max)
{
    const Pmf thermal = thermal_pmf(nu, n_max);
    double overlapped = 0.0;
    double distinguishable = 0.0;
    for (int p = 0; p <= n_max; ++p) {
        for (int q = 0; q <= n_max; ++q) {
            const double weight = thermal[p] * thermal[q];
            if (weight == 0.0) {
                continue;
            }
            auto product = TruncatedPureState::empty(2, n_max);
            std::array<int, 2> occ{p, q};
            product.set_amplitude(occ, 1.0);
            overlapped += weight * cross_correlation(hom_output(product, OverlapModel(1.0)));
            distinguishable += weight * cross_correlation(hom_output(product, OverlapModel(0.0)));
        }
    }
    return visibility_from(overlapped, distinguishable);
}

} // namespace tmsv
