#include "tmsv/source.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "tmsv/fock.hpp"
#include "tmsv/random.hpp"

namespace tmsv {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493; // 2 sqrt(2 ln 2)

void require(bool ok, char const* message)
{
    if (!ok) {
        throw DomainError(message);
    }
}

// Runs body(shot) for shot in [0, count) on up to `threads` workers. Each
// shot owns its output slot, so the result does not depend on scheduling.
template <class Body>
void for_each_shot(std::int64_t count, unsigned threads, Body const& body)
{
    threads = std::max(1u, threads);
    if (threads == 1 || count < 2) {
        for (std::int64_t s = 0; s < count; ++s) {
            body(s);
        }
        return;
    }
    std::vector<std::jthread> workers;
    const std::int64_t chunk = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = std::min(count, begin + chunk);
        if (begin >= end) {
            break;
        }
        workers.emplace_back([begin, end, &body] {
            for (std::int64_t s = begin; s < end; ++s) {
                body(s);
            }
        });
    }
}

} // namespace

void SourceConfig::validate() const
{
    require(peak_separation >= 0.0, "source.peak_separation must be >= 0");
    require(peak_width > 0.0, "source.peak_width must be > 0");
    require((mode_spacing.array() > 0.0).all(), "source.mode_spacing must be > 0");
    require((mode_widths.array() > 0.0).all(), "source.mode_widths must be > 0");
    require(std::all_of(modes_per_axis.begin(), modes_per_axis.end(), [](int n) { return n >= 1; }),
            "source.modes_per_axis must be >= 1");
    require(nu_per_mode >= 0.0 && std::isfinite(nu_per_mode), "source.nu_per_mode must be >= 0");
    require(eta >= 0.0 && eta <= 1.0, "source.eta must lie in [0, 1]");
    require(shots >= 1, "source.shots must be >= 1");
}

std::vector<ModeSite> mode_sites(SourceConfig const& config)
{
    const Velocity center = config.peak_center();
    const double profile_sigma = config.peak_width / kFwhmPerSigma;
    std::vector<ModeSite> sites;
    auto const& n = config.modes_per_axis;
    sites.reserve(std::size_t(n[0]) * n[1] * n[2]);
    for (int iz = 0; iz < n[2]; ++iz) {
        for (int iy = 0; iy < n[1]; ++iy) {
            for (int ix = 0; ix < n[0]; ++ix) {
                const Eigen::Array3d offset
                    = (Eigen::Array3d(ix, iy, iz) - 0.5 * (Eigen::Array3d(n[0], n[1], n[2]) - 1.0))
                      * config.mode_spacing.array();
                double nu = config.nu_per_mode;
                if (config.peak_profile == PeakProfile::gaussian) {
                    nu *= std::exp(-offset.matrix().squaredNorm() / (2.0 * profile_sigma * profile_sigma));
                }
                sites.push_back({center + offset.matrix(), nu});
            }
        }
    }
    return sites;
}

std::size_t EventTable::event_count() const
{
    std::size_t total = 0;
    for (auto const& shot : shots) {
        total += shot.events.size();
    }
    return total;
}

EventTable simulate_counting_run(SourceConfig const& config, unsigned threads)
{
    config.validate();
    const auto sites = mode_sites(config);
    std::vector<double> ratios;
    ratios.reserve(sites.size());
    for (auto const& site : sites) {
        ratios.push_back(site.nu / (1.0 + site.nu));
    }

    EventTable table;
    table.master_seed = config.master_seed;
    table.generator_id = std::string(Rng::kGeneratorId);
    table.shots.resize(static_cast<std::size_t>(config.shots));

    for_each_shot(config.shots, threads, [&](std::int64_t shot) {
        Rng rng(derive_shot_seed(config.master_seed, static_cast<std::uint64_t>(shot)));
        ShotRecord& record = table.shots[static_cast<std::size_t>(shot)];
        record.shot_id = shot;
        for (std::size_t m = 0; m < sites.size(); ++m) {
            const std::uint64_t atoms = rng.geometric(ratios[m]);
            for (std::uint64_t k = 0; k < atoms; ++k) {
                if (!rng.bernoulli(config.eta)) {
                    continue;
                }
                Velocity v = sites[m].center;
                for (int axis = 0; axis < 3; ++axis) {
                    v[axis] += config.mode_widths[axis] * rng.normal();
                }
                record.events.push_back(v);
            }
        }
    });
    return table;
}

//---------------------------------------------------------------------------//

double HomScanConfig::overlap_at(double t2) const
{
    if (overlap_shape == OverlapShape::none) {
        return 0.0;
    }
    const double d = (t2 - t0) / sigma_m;
    return std::exp(-0.5 * d * d);
}

void HomScanConfig::validate() const
{
    require(!t2_values.empty(), "hom.t2_values must not be empty");
    require(sigma_m > 0.0, "hom.sigma_m must be > 0");
    require(nu >= 0.0 && std::isfinite(nu), "hom.nu must be >= 0");
    require(eta >= 0.0 && eta <= 1.0, "hom.eta must lie in [0, 1]");
    require(shots_per_point >= 1, "hom.shots_per_point must be >= 1");
    require(n_max >= 1 && n_max <= 40, "hom.n_max must lie in [1, 40]");
    require(cell_height > 0.0 && cell_diameter > 0.0, "hom cell dimensions must be > 0");
}

bool in_port_cell(HomScanConfig const& config, Velocity const& center, Velocity const& v)
{
    const Velocity d = v - center;
    const double radius = 0.5 * config.cell_diameter;
    return std::abs(d.z()) <= 0.5 * config.cell_height && d.head<2>().squaredNorm() <= radius * radius;
}

namespace {

Velocity sample_in_cylinder(HomScanConfig const& config, Velocity const& center, Rng& rng)
{
    const double r = 0.5 * config.cell_diameter * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double z = (rng.uniform() - 0.5) * config.cell_height;
    return center + Velocity(r * std::cos(phi), r * std::sin(phi), z);
}

} // namespace

HomRun simulate_hom_run(HomScanConfig const& config, unsigned threads)
{
    config.validate();
    const auto params = TmsvParams::from_nu(config.nu);
    HomRun run;
    run.points.reserve(config.t2_values.size());

    for (std::size_t point = 0; point < config.t2_values.size(); ++point) {
        HomScanPoint out;
        out.t2 = config.t2_values[point];
        out.lambda = config.overlap_at(out.t2);

        const JointPmf joint = hom_joint_pmf(params, OverlapModel(out.lambda), config.n_max);
        // Cumulative table over (n_a, n_b) in column-major order, renormalized
        // to the represented mass.
        const Eigen::Map<Eigen::VectorXd const> flat(joint.probs.data(), joint.probs.size());
        std::vector<double> cdf(static_cast<std::size_t>(flat.size()));
        double acc = 0.0;
        for (Index i = 0; i < flat.size(); ++i) {
            acc += flat[i];
            cdf[static_cast<std::size_t>(i)] = acc;
        }
        for (double& c : cdf) {
            c /= acc;
        }
        const Index rows = joint.probs.rows();

        const std::uint64_t point_seed = derive_shot_seed(config.master_seed, point);
        for (EventTable* t : {&out.port_a, &out.port_b}) {
            t->master_seed = config.master_seed;
            t->generator_id = std::string(Rng::kGeneratorId);
            t->shots.resize(static_cast<std::size_t>(config.shots_per_point));
        }

        for_each_shot(config.shots_per_point, threads, [&](std::int64_t shot) {
            Rng rng(derive_shot_seed(point_seed, static_cast<std::uint64_t>(shot)));
            const double u = rng.uniform();
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const Index cell = std::min<Index>(it - cdf.begin(), static_cast<Index>(cdf.size()) - 1);
            const std::uint64_t n_a = rng.binomial(static_cast<std::uint64_t>(cell % rows), config.eta);
            const std::uint64_t n_b = rng.binomial(static_cast<std::uint64_t>(cell / rows), config.eta);

            auto& rec_a = out.port_a.shots[static_cast<std::size_t>(shot)];
            auto& rec_b = out.port_b.shots[static_cast<std::size_t>(shot)];
            rec_a.shot_id = rec_b.shot_id = shot;
            for (std::uint64_t k = 0; k < n_a; ++k) {
                rec_a.events.push_back(sample_in_cylinder(config, config.port_a_center, rng));
            }
            for (std::uint64_t k = 0; k < n_b; ++k) {
                rec_b.events.push_back(sample_in_cylinder(config, config.port_b_center, rng));
            }
        });
        run.points.push_back(std::move(out));
    }
    return run;
}

} // namespace tmsv
