#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "run_config.hpp"
#include "version.hpp"
#include "tmsv/inference.hpp"

namespace tmsv::cli {

namespace fs = std::filesystem;

namespace {

// Streams derived from the master seed for the analysis steps. Simulation
// shots use derive_shot_seed(master, shot) directly.
constexpr std::uint64_t kHistogramBootstrapStream = 0xB000000000000001ull;
constexpr std::uint64_t kDegeneracyBootstrapStream = 0xB000000000000002ull;
constexpr std::uint64_t kScanBootstrapStream = 0xB000000000000003ull;
constexpr std::uint64_t kPredictionStream = 0xB000000000000004ull;

class EmptyResult : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool timestamps = false;
};

void add_common(CLI::App& cmd, CommonOptions& opts)
{
    cmd.add_option("--config", opts.config, "Run configuration (JSON)");
    cmd.add_option("--out", opts.out, "Output directory");
    cmd.add_option_function<std::uint64_t>(
        "--seed", [&opts](std::uint64_t seed) { opts.seed = seed; }, "Master seed; overrides the config");
    cmd.add_flag("--timestamps", opts.timestamps, "Record wall-clock timestamps in the manifest");
}

RunConfig load_config(CommonOptions const& opts)
{
    RunConfig cfg = opts.config.empty() ? parse_run_config(Json::object()) : load_run_config(opts.config);
    if (opts.seed) {
        cfg.set_seed(*opts.seed);
    }
    return cfg;
}

fs::path output_path(CommonOptions const& opts, RunConfig const& cfg)
{
    if (!opts.out.empty()) {
        return opts.out;
    }
    if (!cfg.output_dir.empty()) {
        return cfg.output_dir;
    }
    throw InputError("no output directory: pass --out or set output_dir in the config");
}

OutputDir open_output(CommonOptions const& opts, RunConfig const& cfg, std::string command)
{
    OutputDir dir(output_path(opts, cfg), std::move(command));
    dir.set_seed(cfg.master_seed);
    dir.set_config_digest(config_digest(cfg));
    dir.set_timestamps(opts.timestamps);
    if (!opts.config.empty()) {
        dir.add_input(opts.config);
    }
    return dir;
}

std::ifstream open_input(fs::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    return in;
}

Json read_json(fs::path const& path)
{
    auto in = open_input(path);
    try {
        return Json::parse(in);
    } catch (Json::parse_error const& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

template <class Writer>
std::string render(Writer&& writer)
{
    std::ostringstream os;
    writer(os);
    return os.str();
}

Json chi_square_or_null(CountHistogram const& hist, Pmf const& model, Index first_n, int fitted)
{
    try {
        return to_json(chi_square_test(hist, model, first_n, fitted));
    } catch (DomainError const&) {
        return nullptr;
    }
}

double poisson_log_likelihood(CountHistogram const& hist, double mean)
{
    double ll = 0.0;
    for (Index n = 0; n < hist.occurrences.size(); ++n) {
        if (hist.occurrences[n] != 0) {
            ll += static_cast<double>(hist.occurrences[n]) * detail::log_poisson_term(n, mean);
        }
    }
    return ll;
}

//---------------------------------------------------------------------------//

int simulate_source(CommonOptions const& opts, std::ostream& out)
{
    const RunConfig cfg = load_config(opts);
    OutputDir dir = open_output(opts, cfg, "simulate-source");
    const EventTable events = simulate_counting_run(cfg.source, cfg.threads);
    dir.write("events.csv", render([&](std::ostream& os) { write_events_csv(os, events); }));
    dir.write("events.json", events_sidecar(events, to_json(cfg)).dump(2) + "\n");
    dir.finish();
    out << "simulate-source: " << events.shot_count() << " shots, " << events.event_count() << " events -> "
        << dir.dir().string() << '\n';
    return kOk;
}

int analyze_counts(CommonOptions const& opts, std::string const& events_path, std::string sidecar_path,
                   std::ostream& out)
{
    const RunConfig cfg = load_config(opts);
    if (sidecar_path.empty()) {
        sidecar_path = fs::path(events_path).replace_extension(".json").string();
    }
    const Json sidecar = read_json(sidecar_path);
    auto csv = open_input(events_path);
    const EventTable events = read_events(csv, fs::path(events_path).filename().string(), sidecar);

    const CellCounts counts = bin_events(events, cfg.grid);
    const auto stats = cell_histograms(counts, cfg.grid);
    const CellSelection sel = filter_cells(stats, cfg.analysis.min_mean);
    if (sel.empty()) {
        double largest = 0.0;
        for (auto const& cs : stats) {
            largest = std::max(largest, cs.mean);
        }
        throw EmptyResult("no cell reaches min_mean " + format_double(cfg.analysis.min_mean)
                          + " (largest cell mean " + format_double(largest) + ")");
    }

    OutputDir dir = open_output(opts, cfg, "analyze-counts");
    dir.add_input(events_path);
    dir.add_input(sidecar_path);

    BootstrapOptions boot{cfg.analysis.bootstrap_resamples, derive_shot_seed(cfg.master_seed, kHistogramBootstrapStream)};

    dir.write("cell_stats.csv", render([&](std::ostream& os) { write_cell_stats_csv(os, stats, sel.kept); }));

    // Summed histogram of the kept cells.
    const CountHistogram summed = sum_histograms(sel.cells);
    const double summed_mean = summed.mean();
    const Eigen::VectorXd summed_err = summed_histogram_errors(sel.cells, counts, summed.n_max(), boot);
    const Pmf summed_thermal = thermal_pmf(summed_mean);
    const Pmf summed_poisson = poisson_pmf(summed_mean);
    dir.write("summed_histogram.csv", render([&](std::ostream& os) {
                  write_histogram_csv(os, summed, summed_err, {{"thermal", summed_thermal}, {"poisson", summed_poisson}});
              }));

    // Pooled histogram: per-shot sums over the kept cells.
    const Eigen::VectorXi pooled_per_shot = pooled_counts(sel.cells, counts);
    const CountHistogram pooled = pooled_counts_histogram(sel.cells, counts);
    const double pooled_mean = pooled.mean();
    const Eigen::VectorXd pooled_err = pooled_histogram_errors(sel.cells, counts, pooled.n_max(), boot);
    const DegeneracyFitOptions fit_options{cfg.analysis.m_lower, cfg.analysis.m_upper};
    const DegeneracyFit fit = fit_degeneracy(pooled, pooled_mean, fit_options);

    int failed_resamples = 0;
    const double m_boot = bootstrap_std(
        counts.shot_count(),
        [&](std::span<Index const> idx) {
            std::vector<int> sample(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                sample[i] = pooled_per_shot[idx[i]];
            }
            const auto hist = CountHistogram::from_counts(sample);
            try {
                return fit_degeneracy(hist, hist.mean(), fit_options).m_hat;
            } catch (FitError const&) {
                ++failed_resamples;
                return std::numeric_limits<double>::quiet_NaN();
            }
        },
        {cfg.analysis.bootstrap_resamples, derive_shot_seed(cfg.master_seed, kDegeneracyBootstrapStream)});

    const Pmf pooled_thermal = thermal_pmf(pooled_mean);
    const Pmf pooled_poisson = poisson_pmf(pooled_mean);
    const Pmf pooled_multimode = multimode_pmf(pooled_mean, fit.m_hat);
    dir.write("pooled_histogram.csv", render([&](std::ostream& os) {
                  write_histogram_csv(os, pooled, pooled_err,
                                      {{"thermal", pooled_thermal}, {"poisson", pooled_poisson}, {"multimode", pooled_multimode}});
              }));

    Json fit_json = to_json(fit);
    fit_json["bootstrap_std"] = std::isfinite(m_boot) ? Json(m_boot) : Json(nullptr);
    fit_json["bootstrap_failed_resamples"] = failed_resamples;

    const Json analysis = {
        {"cells_total", stats.size()},
        {"cells_kept", sel.kept_count()},
        {"min_mean", cfg.analysis.min_mean},
        {"average_kept_mean", sel.average_mean},
        {"shots", counts.shot_count()},
        {"dropped_events", counts.dropped.sum()},
        {"summed",
         {{"samples", summed.total_shots},
          {"mean", summed_mean},
          {"chi_square_thermal", chi_square_or_null(summed, summed_thermal, 0, 1)},
          {"chi_square_poisson_n_ge_2", chi_square_or_null(summed, summed_poisson, 2, 1)}}},
        {"pooled",
         {{"samples", pooled.total_shots},
          {"mean", pooled_mean},
          {"degeneracy_fit", std::move(fit_json)},
          {"log_likelihood",
           {{"thermal", multimode_log_likelihood(pooled, pooled_mean, 1.0)},
            {"poisson", poisson_log_likelihood(pooled, pooled_mean)},
            {"multimode", fit.log_likelihood}}},
          {"chi_square_thermal", chi_square_or_null(pooled, pooled_thermal, 0, 1)},
          {"chi_square_poisson", chi_square_or_null(pooled, pooled_poisson, 0, 1)},
          {"chi_square_multimode", chi_square_or_null(pooled, pooled_multimode, 0, 2)}}},
    };
    dir.write("analysis.json", analysis.dump(2) + "\n");
    dir.finish();

    out << "analyze-counts: " << sel.kept_count() << " of " << stats.size() << " cells kept, average mean "
        << format_double(sel.average_mean) << "\n  pooled mean " << format_double(pooled_mean) << ", M = "
        << format_double(fit.m_hat) << " +- " << format_double(fit.std_err) << " (bootstrap "
        << format_double(m_boot) << ")" << (fit.at_upper_bound ? " [upper bound]" : "") << '\n';
    return kOk;
}

int simulate_hom(CommonOptions const& opts, std::ostream& out)
{
    const RunConfig cfg = load_config(opts);
    OutputDir dir = open_output(opts, cfg, "simulate-hom");
    const HomRun run = simulate_hom_run(cfg.hom, cfg.threads);
    const auto scan = hom_correlation_scan(
        run, cfg.hom, {cfg.analysis.bootstrap_resamples, derive_shot_seed(cfg.master_seed, kScanBootstrapStream)});
    dir.write("hom_events.csv", render([&](std::ostream& os) { write_hom_events_csv(os, run); }));
    dir.write("scan.csv", render([&](std::ostream& os) {
                  os << "t2_us,corr,err\n";
                  for (auto const& p : scan) {
                      os << format_double(p.t2) << ',' << format_double(p.value) << ',' << format_double(p.error) << '\n';
                  }
              }));
    dir.finish();
    out << "simulate-hom: " << scan.size() << " scan points x " << cfg.hom.shots_per_point << " shots -> "
        << dir.dir().string() << '\n';
    return kOk;
}

int fit_dip(CommonOptions const& opts, std::string const& scan_path, std::ostream& out)
{
    const RunConfig cfg = load_config(opts);
    auto in = open_input(scan_path);
    const auto points = read_scan_csv(in, fs::path(scan_path).filename().string());
    if (points.size() < 5) {
        throw InputError(scan_path + ": dip fit needs at least 5 rows, found " + std::to_string(points.size()));
    }
    const DipFit fit = fit_gaussian_dip(points);
    const VisibilityPrediction pred = propagate_visibility_uncertainty(
        cfg.prediction.nu, cfg.prediction.nu_std, cfg.prediction.samples,
        derive_shot_seed(cfg.master_seed, kPredictionStream));

    OutputDir dir = open_output(opts, cfg, "fit-dip");
    dir.add_input(scan_path);

    Json result = to_json(fit);
    result["input"] = {{"path", fs::path(scan_path).filename().string()}, {"sha256", file_sha256(scan_path)}};
    dir.write("dip_fit.json", result.dump(2) + "\n");

    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](auto const& a, auto const& b) { return a.t2 < b.t2; });
    dir.write("dip_curve.csv", render([&](std::ostream& os) {
                  os << "t2_us,model\n";
                  constexpr int kSamples = 201;
                  for (int i = 0; i < kSamples; ++i) {
                      const double t2 = lo->t2 + (hi->t2 - lo->t2) * i / (kSamples - 1);
                      os << format_double(t2) << ','
                         << format_double(dip_model(t2, fit.visibility, fit.t0, fit.sigma, fit.baseline)) << '\n';
                  }
              }));
    dir.write("visibility_summary.csv", render([&](std::ostream& os) {
                  os << "source,nu,nu_std,visibility,err\n";
                  os << "fit,,," << format_double(fit.visibility) << ',' << format_double(fit.errors[0]) << '\n';
                  os << "predicted," << format_double(pred.nu) << ',' << format_double(pred.nu_std) << ','
                     << format_double(pred.v_pred) << ',' << format_double(pred.v_std) << '\n';
              }));
    dir.finish();

    out << std::fixed << std::setprecision(4);
    out << "                 visibility\n";
    out << "  measured (fit) " << fit.visibility << " +- " << fit.errors[0] << '\n';
    out << "  predicted      " << pred.v_pred << " +- " << pred.v_std << "  (nu = " << pred.nu << " +- "
        << pred.nu_std << ")\n";
    out << "  sigma = " << fit.sigma << " +- " << fit.errors[2] << " us, t0 = " << fit.t0 << " +- "
        << fit.errors[1] << " us, chi2/dof = " << fit.chi2 << "/" << fit.dof << '\n';
    return kOk;
}

int predict(CommonOptions const& opts, CLI::Option const* nu_opt, double nu, CLI::Option const* std_opt,
            double nu_std, std::ostream& out)
{
    const RunConfig cfg = load_config(opts);
    const double mean = nu_opt->count() ? nu : cfg.prediction.nu;
    const double spread = std_opt->count() ? nu_std : cfg.prediction.nu_std;
    const VisibilityPrediction pred = propagate_visibility_uncertainty(
        mean, spread, cfg.prediction.samples, derive_shot_seed(cfg.master_seed, kPredictionStream));

    if (!opts.out.empty() || !cfg.output_dir.empty()) {
        OutputDir dir = open_output(opts, cfg, "predict-visibility");
        dir.write("prediction.json", to_json(pred).dump(2) + "\n");
        dir.finish();
    }
    out << std::fixed << std::setprecision(4);
    out << "nu               V_pred (delta)     V_pred (Monte Carlo)\n";
    out << pred.nu << " +- " << pred.nu_std << "  " << pred.v_pred << " +- " << pred.v_std << "  " << pred.v_pred
        << " +- " << pred.v_std_mc;
    if (pred.clipped_samples > 0) {
        out << "  [" << pred.clipped_samples << " nu draws <= 0 clipped]";
    }
    out << '\n';
    return kOk;
}

} // namespace

int run_cli(int argc, char const* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Pair-source counting statistics and HOM visibility toolkit", "tmsv"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOptions common;

    auto* sim_source = app.add_subcommand("simulate-source", "Simulate a counting run and write its event table");
    add_common(*sim_source, common);

    auto* analyze = app.add_subcommand("analyze-counts", "Cell histograms, summed and pooled statistics, M fit");
    add_common(*analyze, common);
    std::string events_path;
    std::string sidecar_path;
    analyze->add_option("--events", events_path, "Event table CSV")->required();
    analyze->add_option("--sidecar", sidecar_path, "Event table metadata (default: events path with .json)");

    auto* sim_hom = app.add_subcommand("simulate-hom", "Simulate a HOM scan and write the correlation per t2");
    add_common(*sim_hom, common);

    auto* dip = app.add_subcommand("fit-dip", "Fit a Gaussian dip to a correlation scan");
    add_common(*dip, common);
    std::string scan_path;
    dip->add_option("--scan", scan_path, "Scan CSV with columns t2_us,corr,err")->required();

    auto* prediction = app.add_subcommand("predict-visibility", "Expected HOM visibility for a pair occupation");
    add_common(*prediction, common);
    double nu = 0.0;
    double nu_std = 0.0;
    auto* nu_opt = prediction->add_option("--nu", nu, "Mean pair occupation per mode");
    auto* std_opt = prediction->add_option("--nu-std", nu_std, "Standard uncertainty of nu");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (sim_source->parsed()) {
            return simulate_source(common, out);
        }
        if (analyze->parsed()) {
            return analyze_counts(common, events_path, sidecar_path, out);
        }
        if (sim_hom->parsed()) {
            return simulate_hom(common, out);
        }
        if (dip->parsed()) {
            return fit_dip(common, scan_path, out);
        }
        return predict(common, nu_opt, nu, std_opt, nu_std, out);
    } catch (InputError const& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (DomainError const& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (Json::exception const& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (EmptyResult const& e) {
        err << "error: " << e.what() << '\n';
        return kEmptyResult;
    } catch (FitError const& e) {
        err << "fit failed: " << e.what() << '\n';
        return kFitFailure;
    } catch (std::exception const& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

} // namespace tmsv::cli
