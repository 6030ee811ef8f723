#include "tmsv/serialization.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace tmsv {

std::string format_double(double value)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return {buf, end};
}

//---------------------------------------------------------------------------//

void write_pmf_csv(std::ostream& os, Pmf const& pmf)
{
    os << "# n_max=" << pmf.n_max() << '\n';
    os << "# tail_tolerance=" << format_double(pmf.tail_tolerance) << '\n';
    os << "n,probability\n";
    for (Index n = 0; n < pmf.size(); ++n) {
        os << n << ',' << format_double(pmf[n]) << '\n';
    }
}

Json pmf_to_json(Pmf const& pmf)
{
    Json probs = Json::array();
    for (Index n = 0; n < pmf.size(); ++n) {
        probs.push_back(pmf[n]);
    }
    return {{"n_max", pmf.n_max()}, {"tail_tolerance", pmf.tail_tolerance}, {"probabilities", std::move(probs)}};
}

Pmf pmf_from_json(Json const& j)
{
    auto const& probs = j.at("probabilities");
    Pmf pmf;
    pmf.probs.resize(static_cast<Index>(probs.size()));
    for (std::size_t i = 0; i < probs.size(); ++i) {
        pmf.probs[static_cast<Index>(i)] = probs[i].get<double>();
    }
    pmf.tail_tolerance = j.at("tail_tolerance").get<double>();
    if (j.at("n_max").get<Index>() != pmf.n_max()) {
        throw InputError("pmf json: n_max does not match the number of probabilities");
    }
    return pmf;
}

void write_joint_pmf_csv(std::ostream& os, JointPmf const& joint)
{
    os << "n_" << joint.label_a << ",n_" << joint.label_b << ",probability\n";
    for (Index a = 0; a < joint.probs.rows(); ++a) {
        for (Index b = 0; b < joint.probs.cols(); ++b) {
            os << a << ',' << b << ',' << format_double(joint.probs(a, b)) << '\n';
        }
    }
}

namespace {

void write_velocity(std::ostream& os, Velocity const& v)
{
    os << format_double(v.x()) << ',' << format_double(v.y()) << ',' << format_double(v.z());
}

} // namespace

void write_events_csv(std::ostream& os, EventTable const& events)
{
    os << "shot,vx,vy,vz\n";
    for (auto const& shot : events.shots) {
        for (auto const& v : shot.events) {
            os << shot.shot_id << ',';
            write_velocity(os, v);
            os << '\n';
        }
    }
}

Json events_sidecar(EventTable const& events, Json const& config_snapshot)
{
    return {{"shot_count", events.shot_count()},
            {"event_count", events.event_count()},
            {"master_seed", events.master_seed},
            {"generator_id", events.generator_id},
            {"config", config_snapshot}};
}

void write_hom_events_csv(std::ostream& os, HomRun const& run)
{
    os << "shot,vx,vy,vz,port,t2_us\n";
    for (auto const& point : run.points) {
        const std::string t2 = format_double(point.t2);
        for (std::size_t s = 0; s < point.port_a.shots.size(); ++s) {
            for (auto const& [table, port] : {std::pair{&point.port_a, 'a'}, std::pair{&point.port_b, 'b'}}) {
                auto const& shot = table->shots[s];
                for (auto const& v : shot.events) {
                    os << shot.shot_id << ',';
                    write_velocity(os, v);
                    os << ',' << port << ',' << t2 << '\n';
                }
            }
        }
    }
}

void write_histogram_csv(std::ostream& os, CountHistogram const& hist, Eigen::VectorXd const& err,
                         std::vector<NamedPmf> const& overlays)
{
    os << "n,occurrences,probability,err";
    for (auto const& o : overlays) {
        os << ',' << o.name;
    }
    os << '\n';
    const Eigen::VectorXd p = hist.probabilities();
    for (Index n = 0; n < hist.occurrences.size(); ++n) {
        os << n << ',' << hist.occurrences[n] << ',' << format_double(p[n]) << ','
           << format_double(n < err.size() ? err[n] : 0.0);
        for (auto const& o : overlays) {
            os << ',' << format_double(n < o.pmf.size() ? o.pmf[n] : 0.0);
        }
        os << '\n';
    }
}

void write_cell_stats_csv(std::ostream& os, std::vector<CellStats> const& stats, std::vector<bool> const& kept)
{
    os << "ix,iy,iz,mean,kept\n";
    for (std::size_t i = 0; i < stats.size(); ++i) {
        auto const& cs = stats[i];
        os << cs.coords[0] << ',' << cs.coords[1] << ',' << cs.coords[2] << ',' << format_double(cs.mean) << ','
           << (i < kept.size() && kept[i] ? 1 : 0) << '\n';
    }
}

Json to_json(ChiSquareResult const& r)
{
    return {{"statistic", r.statistic}, {"dof", r.dof}, {"p_value", r.p_value}, {"bins", r.bins}};
}

Json to_json(DegeneracyFit const& fit)
{
    return {{"m_hat", fit.m_hat},
            {"std_err", std::isfinite(fit.std_err) ? Json(fit.std_err) : Json(nullptr)},
            {"fixed_mean", fit.fixed_mean},
            {"log_likelihood", fit.log_likelihood},
            {"at_upper_bound", fit.at_upper_bound},
            {"bracket", {fit.bracket_lower, fit.bracket_upper}},
            {"iterations", fit.iterations},
            {"warnings", fit.warnings}};
}

Json to_json(DipFit const& fit)
{
    static constexpr char const* names[] = {"visibility", "t0", "sigma", "baseline"};
    const Eigen::Vector4d values(fit.visibility, fit.t0, fit.sigma, fit.baseline);
    Json params = Json::object();
    Json initial = Json::object();
    for (int i = 0; i < 4; ++i) {
        params[names[i]] = {{"value", values[i]}, {"error", fit.errors[i]}};
        initial[names[i]] = fit.initial[i];
    }
    Json cov = Json::array();
    for (int r = 0; r < 4; ++r) {
        cov.push_back({fit.covariance(r, 0), fit.covariance(r, 1), fit.covariance(r, 2), fit.covariance(r, 3)});
    }
    return {{"parameters", std::move(params)},
            {"covariance", std::move(cov)},
            {"initial", std::move(initial)},
            {"chi2", fit.chi2},
            {"dof", fit.dof},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"message", fit.message}};
}

Json to_json(VisibilityPrediction const& pred)
{
    return {{"nu", pred.nu},
            {"nu_std", pred.nu_std},
            {"v_pred", pred.v_pred},
            {"v_std", pred.v_std},
            {"v_std_mc", pred.v_std_mc},
            {"samples", pred.samples},
            {"clipped_samples", pred.clipped_samples}};
}

//---------------------------------------------------------------------------//

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, std::string const& what)
{
    std::ostringstream os;
    os << source << ':' << line << ": " << what;
    throw InputError(os.str());
}

} // namespace

NumericCsv read_numeric_csv(std::istream& is, std::string_view source, std::vector<std::string> const& expected_header)
{
    NumericCsv out;
    std::string line;
    std::size_t number = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++number;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto fields = split(view);
        if (!have_header) {
            out.header.assign(fields.begin(), fields.end());
            if (out.header != expected_header) {
                std::string want;
                for (auto const& h : expected_header) {
                    want += (want.empty() ? "" : ",") + h;
                }
                fail(source, number, "unexpected header, want '" + want + "'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != expected_header.size()) {
            fail(source, number, "expected " + std::to_string(expected_header.size()) + " fields, found "
                                     + std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            auto const f = fields[i];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[i]);
            if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(row[i])) {
                fail(source, number, "column '" + expected_header[i] + "': not a finite number '" + std::string(f) + "'");
            }
        }
        out.rows.push_back(std::move(row));
        out.line_numbers.push_back(number);
    }
    if (!have_header) {
        fail(source, number, "missing header");
    }
    return out;
}

EventTable read_events(std::istream& csv, std::string_view source, Json const& sidecar)
{
    EventTable table;
    std::int64_t shots = 0;
    try {
        shots = sidecar.at("shot_count").get<std::int64_t>();
        table.master_seed = sidecar.at("master_seed").get<std::uint64_t>();
        table.generator_id = sidecar.at("generator_id").get<std::string>();
    } catch (Json::exception const& e) {
        throw InputError(std::string(source) + ": sidecar metadata: " + e.what());
    }
    if (shots < 1) {
        throw InputError(std::string(source) + ": sidecar shot_count must be >= 1");
    }
    table.shots.resize(static_cast<std::size_t>(shots));
    for (std::int64_t s = 0; s < shots; ++s) {
        table.shots[static_cast<std::size_t>(s)].shot_id = s;
    }

    const auto parsed = read_numeric_csv(csv, source, {"shot", "vx", "vy", "vz"});
    for (std::size_t r = 0; r < parsed.rows.size(); ++r) {
        auto const& row = parsed.rows[r];
        const double shot = row[0];
        if (shot != std::floor(shot) || shot < 0.0 || shot >= static_cast<double>(shots)) {
            fail(source, parsed.line_numbers[r],
                 "shot id " + format_double(shot) + " outside [0, " + std::to_string(shots) + ")");
        }
        table.shots[static_cast<std::size_t>(shot)].events.emplace_back(row[1], row[2], row[3]);
    }
    return table;
}

std::vector<DipPoint> read_scan_csv(std::istream& is, std::string_view source)
{
    const auto parsed = read_numeric_csv(is, source, {"t2_us", "corr", "err"});
    std::vector<DipPoint> points;
    points.reserve(parsed.rows.size());
    for (std::size_t r = 0; r < parsed.rows.size(); ++r) {
        auto const& row = parsed.rows[r];
        if (!(row[2] > 0.0)) {
            fail(source, parsed.line_numbers[r], "err must be > 0");
        }
        points.push_back({row[0], row[1], row[2]});
    }
    return points;
}

} // namespace tmsv
