#pragma once

#include <cstdint>
#include <string>

#include "tmsv/counting.hpp"
#include "tmsv/serialization.hpp"
#include "tmsv/source.hpp"

namespace tmsv::cli {

struct AnalysisConfig {
    double min_mean = 0.135;
    int bootstrap_resamples = 1000;
    double m_lower = 1e-3;
    double m_upper = 1e4;
};

struct PredictionConfig {
    double nu = 0.33;
    double nu_std = 0.07;
    int samples = 100000;
};

/// Everything a command needs besides its input files. The master seed is
/// the only source of randomness and is copied into the source and HOM
/// sections after parsing.
struct RunConfig {
    std::uint64_t master_seed = 0;
    std::string output_dir;
    unsigned threads = 1;
    SourceConfig source;
    CellGrid grid;
    AnalysisConfig analysis;
    HomScanConfig hom;
    PredictionConfig prediction;

    void set_seed(std::uint64_t seed);
};

/// Parses and validates a config document. Unknown keys, wrong types and
/// out-of-range values are all collected and reported in one InputError.
RunConfig parse_run_config(Json const& doc);

RunConfig load_run_config(std::string const& path);

/// Full normalized form with every default filled in.
Json to_json(RunConfig const& config);

/// sha256 of the normalized form.
std::string config_digest(RunConfig const& config);

} // namespace tmsv::cli
