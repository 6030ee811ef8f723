#pragma once

// CSV and JSON forms of the library's value types. Numbers are written in
// shortest round-trip form so output bytes depend only on the values.

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tmsv/counting.hpp"
#include "tmsv/distributions.hpp"
#include "tmsv/fock.hpp"
#include "tmsv/inference.hpp"
#include "tmsv/source.hpp"

namespace tmsv {

using Json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

//---------------------------------------------------------------------------//
// Writers
//---------------------------------------------------------------------------//

void write_pmf_csv(std::ostream& os, Pmf const& pmf);
Json pmf_to_json(Pmf const& pmf);
Pmf pmf_from_json(Json const& j);

void write_joint_pmf_csv(std::ostream& os, JointPmf const& joint);

/// One row per detected atom: shot,vx,vy,vz.
void write_events_csv(std::ostream& os, EventTable const& events);
/// Sidecar carrying what the CSV cannot: shot count (empty shots), seed,
/// generator id and the configuration snapshot.
Json events_sidecar(EventTable const& events, Json const& config_snapshot);

/// shot,vx,vy,vz,port,t2_us over all scan points.
void write_hom_events_csv(std::ostream& os, HomRun const& run);

struct NamedPmf {
    std::string name;
    Pmf pmf;
};

/// n,occurrences,probability,err followed by one column per overlay model.
void write_histogram_csv(std::ostream& os, CountHistogram const& hist, Eigen::VectorXd const& err,
                         std::vector<NamedPmf> const& overlays = {});

void write_cell_stats_csv(std::ostream& os, std::vector<CellStats> const& stats, std::vector<bool> const& kept);

Json to_json(ChiSquareResult const& r);
Json to_json(DegeneracyFit const& fit);
Json to_json(DipFit const& fit);
Json to_json(VisibilityPrediction const& pred);

//---------------------------------------------------------------------------//
// Readers
//---------------------------------------------------------------------------//

/// Numeric CSV with a fixed header. Blank lines and lines starting with '#'
/// are skipped. Malformed rows throw InputError naming `source` and the line.
struct NumericCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> line_numbers; ///< 1-based, per row
};

NumericCsv read_numeric_csv(std::istream& is, std::string_view source, std::vector<std::string> const& expected_header);

/// Rebuilds an EventTable from the CSV and its sidecar.
EventTable read_events(std::istream& csv, std::string_view source, Json const& sidecar);

std::vector<DipPoint> read_scan_csv(std::istream& is, std::string_view source);

} // namespace tmsv
