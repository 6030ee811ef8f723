#pragma once

// Velocity-space cell binning, per-cell occurrence histograms, cell
// selection, histogram aggregation, bootstrap errors and goodness-of-fit.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tmsv/distributions.hpp"
#include "tmsv/random.hpp"
#include "tmsv/source.hpp"

namespace tmsv {

/// Contiguous axis-aligned boxes [origin + i*w, origin + (i+1)*w) per axis.
struct CellGrid {
    Velocity origin{-8.25, -8.25, 18.75};
    Velocity cell_widths{5.5, 5.5, 2.5};
    std::array<int, 3> counts_per_axis{3, 3, 5};

    /// Grid of the given shape centred on `center`.
    static CellGrid centered(Velocity const& center, Velocity const& widths, std::array<int, 3> counts);

    Index cell_count() const { return Index(counts_per_axis[0]) * counts_per_axis[1] * counts_per_axis[2]; }
    /// Linear index with x fastest, or -1 when v is outside the grid.
    Index locate(Velocity const& v) const;
    std::array<int, 3> cell_coords(Index cell) const;
    void validate() const;
};

/// Per-shot, per-cell integer counts.
struct CellCounts {
    Eigen::MatrixXi counts;  ///< rows = shots, cols = cells
    Eigen::VectorXi dropped; ///< events outside the grid, per shot

    Index shot_count() const { return counts.rows(); }
    Index cell_count() const { return counts.cols(); }
};

struct CountHistogram {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> occurrences;
    std::int64_t total_shots = 0;

    Index n_max() const { return occurrences.size() - 1; }
    Eigen::VectorXd probabilities() const;
    double mean() const;
    /// Histogram of a list of per-shot counts.
    static CountHistogram from_counts(std::span<int const> counts);
};

struct CellStats {
    Index cell = 0;
    std::array<int, 3> coords{};
    double mean = 0.0;
    CountHistogram histogram;
};

struct CellSelection {
    std::vector<CellStats> cells;
    std::vector<bool> kept; ///< per input cell, in input order
    double average_mean = 0.0;

    bool empty() const { return cells.empty(); }
    Index kept_count() const { return static_cast<Index>(cells.size()); }
};

CellCounts bin_events(EventTable const& events, CellGrid const& grid);

std::vector<CellStats> cell_histograms(CellCounts const& counts, CellGrid const& grid);

/// Keeps cells with mean >= min_mean.
CellSelection filter_cells(std::vector<CellStats> const& stats, double min_mean = 0.135);

/// Elementwise sum of the selected cells' histograms.
CountHistogram sum_histograms(std::span<CellStats const> selected);

/// Histogram over shots of the counts summed across the selected cells.
CountHistogram pooled_counts_histogram(std::span<CellStats const> selected, CellCounts const& counts);

/// Per-shot totals across the selected cells.
Eigen::VectorXi pooled_counts(std::span<CellStats const> selected, CellCounts const& counts);

//---------------------------------------------------------------------------//
// Bootstrap
//---------------------------------------------------------------------------//

struct BootstrapOptions {
    int resamples = 1000;
    std::uint64_t seed = 0;
};

/// Resamples shot indices with replacement and returns the standard deviation
/// of `statistic` over the resamples. `statistic` receives the resampled
/// indices and returns a double or an Eigen vector (elementwise std).
///
/// Resample b uses the stream derive_shot_seed(seed, b).
template <class Statistic>
auto bootstrap_std(Index shot_count, Statistic&& statistic, BootstrapOptions const& options = {})
{
    if (shot_count <= 0) {
        throw DomainError("bootstrap needs at least one shot");
    }
    if (options.resamples < 100) {
        throw DomainError("bootstrap needs at least 100 resamples");
    }
    using Result = std::decay_t<decltype(statistic(std::span<Index const>{}))>;
    std::vector<Index> sample(static_cast<std::size_t>(shot_count));
    std::vector<Result> values;
    values.reserve(static_cast<std::size_t>(options.resamples));
    for (int b = 0; b < options.resamples; ++b) {
        Rng rng(derive_shot_seed(options.seed, static_cast<std::uint64_t>(b)));
        for (auto& s : sample) {
            s = static_cast<Index>(rng.below(static_cast<std::uint64_t>(shot_count)));
        }
        values.push_back(statistic(std::span<Index const>(sample)));
    }
    const double count = static_cast<double>(values.size());
    if constexpr (std::is_arithmetic_v<Result>) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= count;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        return std::sqrt(ss / (count - 1.0));
    } else {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(values.front().size());
        for (auto const& v : values) mean += v;
        mean /= count;
        Eigen::VectorXd ss = Eigen::VectorXd::Zero(mean.size());
        for (auto const& v : values) ss += (v - mean).cwiseAbs2();
        return Eigen::VectorXd((ss / (count - 1.0)).cwiseSqrt());
    }
}

/// Bootstrap std of a statistic of per-shot values.
double bootstrap_std(std::span<double const> per_shot, std::function<double(std::span<double const>)> const& statistic,
                     BootstrapOptions const& options = {});

/// Bootstrap errors of the normalized summed histogram (bins 0..n_max).
Eigen::VectorXd summed_histogram_errors(std::span<CellStats const> selected, CellCounts const& counts, Index n_max,
                                        BootstrapOptions const& options = {});

/// Bootstrap errors of the normalized pooled histogram (bins 0..n_max).
Eigen::VectorXd pooled_histogram_errors(std::span<CellStats const> selected, CellCounts const& counts, Index n_max,
                                        BootstrapOptions const& options = {});

//---------------------------------------------------------------------------//
// Goodness of fit
//---------------------------------------------------------------------------//

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int bins = 0;
};

/// Pearson chi-square of a histogram against a model pmf.
///
/// Bins n >= first_n are tested. Bins are taken in order and merged until
/// each expected count reaches min_expected; the last bin absorbs the model
/// tail beyond the histogram. When first_n == 0 the totals are constrained,
/// costing one degree of freedom; `fitted_parameters` are subtracted as well.
ChiSquareResult chi_square_test(CountHistogram const& hist, Pmf const& model, Index first_n = 0,
                                int fitted_parameters = 0, double min_expected = 5.0);

} // namespace tmsv
