#include "tmsv/counting.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

namespace tmsv {

CellGrid CellGrid::centered(Velocity const& center, Velocity const& widths, std::array<int, 3> counts)
{
    CellGrid grid;
    grid.cell_widths = widths;
    grid.counts_per_axis = counts;
    grid.origin = center - 0.5 * widths.cwiseProduct(Velocity(counts[0], counts[1], counts[2]));
    return grid;
}

void CellGrid::validate() const
{
    if (!(cell_widths.array() > 0.0).all()) {
        throw DomainError("grid.cell_widths must be > 0");
    }
    if (std::any_of(counts_per_axis.begin(), counts_per_axis.end(), [](int n) { return n < 1; })) {
        throw DomainError("grid.counts_per_axis must be >= 1");
    }
}

Index CellGrid::locate(Velocity const& v) const
{
    Index cell = 0;
    Index stride = 1;
    for (int axis = 0; axis < 3; ++axis) {
        // Half-open boxes: a point on an interior face belongs to the upper cell.
        const double i = std::floor((v[axis] - origin[axis]) / cell_widths[axis]);
        if (!(i >= 0.0 && i < counts_per_axis[axis])) {
            return -1;
        }
        cell += static_cast<Index>(i) * stride;
        stride *= counts_per_axis[axis];
    }
    return cell;
}

std::array<int, 3> CellGrid::cell_coords(Index cell) const
{
    const auto nx = counts_per_axis[0];
    const auto ny = counts_per_axis[1];
    return {static_cast<int>(cell % nx), static_cast<int>((cell / nx) % ny), static_cast<int>(cell / (Index(nx) * ny))};
}

//---------------------------------------------------------------------------//

Eigen::VectorXd CountHistogram::probabilities() const
{
    if (total_shots == 0) {
        return Eigen::VectorXd::Zero(occurrences.size());
    }
    return occurrences.cast<double>() / static_cast<double>(total_shots);
}

double CountHistogram::mean() const
{
    if (total_shots == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (Index n = 0; n < occurrences.size(); ++n) {
        sum += static_cast<double>(n) * static_cast<double>(occurrences[n]);
    }
    return sum / static_cast<double>(total_shots);
}

CountHistogram CountHistogram::from_counts(std::span<int const> counts)
{
    CountHistogram hist;
    const int top = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    hist.occurrences = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(top + 1);
    for (int c : counts) {
        if (c < 0) {
            throw DomainError("negative count in histogram input");
        }
        ++hist.occurrences[c];
    }
    hist.total_shots = static_cast<std::int64_t>(counts.size());
    return hist;
}

//---------------------------------------------------------------------------//

CellCounts bin_events(EventTable const& events, CellGrid const& grid)
{
    grid.validate();
    const auto shots = static_cast<Index>(events.shot_count());
    CellCounts out;
    out.counts = Eigen::MatrixXi::Zero(shots, grid.cell_count());
    out.dropped = Eigen::VectorXi::Zero(shots);
    for (Index s = 0; s < shots; ++s) {
        for (auto const& v : events.shots[static_cast<std::size_t>(s)].events) {
            const Index cell = grid.locate(v);
            if (cell < 0) {
                ++out.dropped[s];
            } else {
                ++out.counts(s, cell);
            }
        }
    }
    return out;
}

std::vector<CellStats> cell_histograms(CellCounts const& counts, CellGrid const& grid)
{
    std::vector<CellStats> stats;
    stats.reserve(static_cast<std::size_t>(counts.cell_count()));
    for (Index c = 0; c < counts.cell_count(); ++c) {
        const Eigen::VectorXi column = counts.counts.col(c);
        CellStats cs;
        cs.cell = c;
        cs.coords = grid.cell_coords(c);
        cs.histogram = CountHistogram::from_counts(std::span<int const>(column.data(), column.size()));
        cs.mean = cs.histogram.mean();
        stats.push_back(std::move(cs));
    }
    return stats;
}

CellSelection filter_cells(std::vector<CellStats> const& stats, double min_mean)
{
    if (!(min_mean >= 0.0)) {
        throw DomainError("selection threshold must be >= 0");
    }
    CellSelection sel;
    sel.kept.reserve(stats.size());
    double sum = 0.0;
    for (auto const& cs : stats) {
        const bool keep = cs.mean >= min_mean;
        sel.kept.push_back(keep);
        if (keep) {
            sel.cells.push_back(cs);
            sum += cs.mean;
        }
    }
    sel.average_mean = sel.cells.empty() ? 0.0 : sum / static_cast<double>(sel.cells.size());
    return sel;
}

CountHistogram sum_histograms(std::span<CellStats const> selected)
{
    if (selected.empty()) {
        throw DomainError("cannot sum an empty cell selection");
    }
    Index top = 0;
    for (auto const& cs : selected) {
        top = std::max(top, cs.histogram.n_max());
    }
    CountHistogram sum;
    sum.occurrences = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(top + 1);
    for (auto const& cs : selected) {
        sum.occurrences.head(cs.histogram.occurrences.size()) += cs.histogram.occurrences;
        sum.total_shots += cs.histogram.total_shots;
    }
    return sum;
}

Eigen::VectorXi pooled_counts(std::span<CellStats const> selected, CellCounts const& counts)
{
    if (selected.empty()) {
        throw DomainError("cannot pool an empty cell selection");
    }
    Eigen::VectorXi pooled = Eigen::VectorXi::Zero(counts.shot_count());
    for (auto const& cs : selected) {
        pooled += counts.counts.col(cs.cell);
    }
    return pooled;
}

CountHistogram pooled_counts_histogram(std::span<CellStats const> selected, CellCounts const& counts)
{
    const Eigen::VectorXi pooled = pooled_counts(selected, counts);
    return CountHistogram::from_counts(std::span<int const>(pooled.data(), pooled.size()));
}

//---------------------------------------------------------------------------//

double bootstrap_std(std::span<double const> per_shot, std::function<double(std::span<double const>)> const& statistic,
                     BootstrapOptions const& options)
{
    if (per_shot.empty()) {
        throw DomainError("bootstrap needs at least one shot");
    }
    std::vector<double> resampled(per_shot.size());
    return bootstrap_std(
        static_cast<Index>(per_shot.size()),
        [&](std::span<Index const> idx) {
            for (std::size_t i = 0; i < idx.size(); ++i) {
                resampled[i] = per_shot[static_cast<std::size_t>(idx[i])];
            }
            return statistic(resampled);
        },
        options);
}

namespace {

Eigen::VectorXd normalized_bins(Eigen::VectorXd const& occ, double total)
{
    return total > 0.0 ? Eigen::VectorXd(occ / total) : occ;
}

} // namespace

Eigen::VectorXd summed_histogram_errors(std::span<CellStats const> selected, CellCounts const& counts, Index n_max,
                                        BootstrapOptions const& options)
{
    if (selected.empty()) {
        throw DomainError("cannot bootstrap an empty cell selection");
    }
    Eigen::VectorXd occ(n_max + 1);
    return bootstrap_std(
        counts.shot_count(),
        [&](std::span<Index const> idx) {
            occ.setZero();
            for (Index s : idx) {
                for (auto const& cs : selected) {
                    const int c = counts.counts(s, cs.cell);
                    if (c <= n_max) {
                        occ[c] += 1.0;
                    }
                }
            }
            return normalized_bins(occ, static_cast<double>(idx.size() * selected.size()));
        },
        options);
}

Eigen::VectorXd pooled_histogram_errors(std::span<CellStats const> selected, CellCounts const& counts, Index n_max,
                                        BootstrapOptions const& options)
{
    const Eigen::VectorXi pooled = pooled_counts(selected, counts);
    Eigen::VectorXd occ(n_max + 1);
    return bootstrap_std(
        counts.shot_count(),
        [&](std::span<Index const> idx) {
            occ.setZero();
            for (Index s : idx) {
                if (pooled[s] <= n_max) {
                    occ[pooled[s]] += 1.0;
                }
            }
            return normalized_bins(occ, static_cast<double>(idx.size()));
        },
        options);
}

//---------------------------------------------------------------------------//

ChiSquareResult chi_square_test(CountHistogram const& hist, Pmf const& model, Index first_n, int fitted_parameters,
                                double min_expected)
{
    if (hist.total_shots <= 0) {
        throw DomainError("chi-square test needs a non-empty histogram");
    }
    const double total = static_cast<double>(hist.total_shots);
    auto prob = [&](Index n) { return n < model.size() ? model[n] : 0.0; };
    auto occ = [&](Index n) { return n < hist.occurrences.size() ? static_cast<double>(hist.occurrences[n]) : 0.0; };

    double cdf = 0.0;
    for (Index n = 0; n < first_n; ++n) {
        cdf += prob(n);
    }

    std::vector<std::pair<double, double>> bins; // (observed, expected)
    double cur_obs = 0.0;
    double cur_exp = 0.0;
    const Index last = std::max(hist.n_max(), model.n_max());
    for (Index n = first_n;; ++n) {
        cur_obs += occ(n);
        cur_exp += total * prob(n);
        cdf += prob(n);
        const double remaining = total * std::max(0.0, 1.0 - cdf);
        if (remaining < min_expected || n >= last) {
            for (Index k = n + 1; k <= hist.n_max(); ++k) {
                cur_obs += occ(k);
            }
            cur_exp += remaining;
            if (cur_exp < min_expected && !bins.empty()) {
                bins.back().first += cur_obs;
                bins.back().second += cur_exp;
            } else {
                bins.emplace_back(cur_obs, cur_exp);
            }
            break;
        }
        if (cur_exp >= min_expected) {
            bins.emplace_back(cur_obs, cur_exp);
            cur_obs = 0.0;
            cur_exp = 0.0;
        }
    }

    ChiSquareResult result;
    for (auto const& [o, e] : bins) {
        if (e > 0.0) {
            result.statistic += (o - e) * (o - e) / e;
        } else if (o > 0.0) {
            result.statistic = std::numeric_limits<double>::infinity();
        }
    }
    result.bins = static_cast<int>(bins.size());
    result.dof = result.bins - (first_n == 0 ? 1 : 0) - fitted_parameters;
    if (result.dof < 1) {
        throw DomainError("chi-square test has no degrees of freedom left");
    }
    result.p_value = std::isfinite(result.statistic)
                         ? boost::math::gamma_q(0.5 * result.dof, 0.5 * result.statistic)
                         : 0.0;
    return result;
}

} // namespace tmsv
