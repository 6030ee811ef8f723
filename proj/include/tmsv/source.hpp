#pragma once

// Seeded Monte Carlo generator of detected-atom events in velocity space.
//
// Counting runs: independent thermal emitters ("modes") sit on a regular
// grid inside one scattering peak; every shot draws each mode's atom number
// from the thermal law, scatters the atoms around the mode centre and keeps
// each with the detection efficiency.
//
// HOM runs: for every splitter time the overlap of the two interfering modes
// sets the exact joint output statistics (from the Fock calculator); each
// shot samples the port counts, thins them with the detector and emits the
// surviving atoms inside the two output integration volumes.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tmsv/distributions.hpp"

namespace tmsv {

using Velocity = Eigen::Vector3d;

enum class PeakProfile { gaussian, flat };

struct SourceConfig {
    double peak_separation = 50.0; ///< mm/s, along z
    double peak_width = 15.0;      ///< full width at half maximum, mm/s
    PeakProfile peak_profile = PeakProfile::gaussian;
    Velocity mode_spacing{5.5, 5.5, 2.5};   ///< mm/s
    Velocity mode_widths{2.75, 2.75, 1.25}; ///< RMS of one mode's envelope, mm/s
    std::array<int, 3> modes_per_axis{7, 7, 9};
    double nu_per_mode = 1.0; ///< mean pairs per mode at the peak centre
    double eta = 0.25;
    std::int64_t shots = 1876;
    std::uint64_t master_seed = 0;

    /// Centre of the simulated peak; the partner peak at -z is not emitted.
    Velocity peak_center() const { return {0.0, 0.0, 0.5 * peak_separation}; }

    /// Throws DomainError naming the offending field.
    void validate() const;
};

struct ModeSite {
    Velocity center;
    double nu;
};

/// Mode centres (x fastest) and their mean occupations under the peak profile.
std::vector<ModeSite> mode_sites(SourceConfig const& config);

struct ShotRecord {
    std::int64_t shot_id = 0;
    std::vector<Velocity> events;
};

struct EventTable {
    std::uint64_t master_seed = 0;
    std::string generator_id;
    std::vector<ShotRecord> shots;

    std::size_t shot_count() const { return shots.size(); }
    std::size_t event_count() const;
};

EventTable simulate_counting_run(SourceConfig const& config, unsigned threads = 1);

//---------------------------------------------------------------------------//

enum class OverlapShape { gaussian, none };

struct HomScanConfig {
    std::vector<double> t2_values; ///< splitter times, us
    double t0 = 0.0;               ///< dip centre, us
    /// RMS width of the overlap lambda(t2); the correlation dip, which goes
    /// as lambda^2, then has RMS width sigma_m / sqrt(2).
    double sigma_m = 121.62236636408618;
    double t1 = 1000.0; ///< mirror time, us (recorded only)
    double nu = 0.33;
    double eta = 0.25;
    std::int64_t shots_per_point = 1000;
    std::uint64_t master_seed = 0;
    OverlapShape overlap_shape = OverlapShape::gaussian;
    int n_max = 12; ///< per-mode cutoff of the Fock register
    Velocity port_a_center{0.0, 0.0, 25.0};
    Velocity port_b_center{0.0, 0.0, -25.0};
    double cell_height = 2.6;   ///< integration cylinder along z, mm/s
    double cell_diameter = 4.1; ///< mm/s

    double overlap_at(double t2) const;
    void validate() const;
};

struct HomScanPoint {
    double t2 = 0.0;
    double lambda = 0.0;
    EventTable port_a;
    EventTable port_b;
};

struct HomRun {
    std::vector<HomScanPoint> points;
};

HomRun simulate_hom_run(HomScanConfig const& config, unsigned threads = 1);

/// True when v lies in the output integration cylinder centred on `center`.
bool in_port_cell(HomScanConfig const& config, Velocity const& center, Velocity const& v);

} // namespace tmsv
