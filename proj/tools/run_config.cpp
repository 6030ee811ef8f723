#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "manifest.hpp"

namespace tmsv::cli {

namespace {

std::vector<double> default_t2_values()
{
    std::vector<double> t2;
    for (int i = -16; i <= 16; ++i) {
        t2.push_back(25.0 * i);
    }
    return t2;
}

// Reads one JSON object, remembering which keys were consumed so the rest
// can be reported as unknown.
class Section {
public:
    Section(Json const& j, std::string path, std::vector<std::string>& diagnostics)
        : j_(j), path_(std::move(path)), diag_(diagnostics)
    {
        if (!j_.is_object()) {
            error("", "expected an object");
        }
    }

    Json const* find(char const* key)
    {
        seen_.insert(key);
        if (!j_.is_object()) {
            return nullptr;
        }
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(char const* key, double& out)
    {
        if (auto const* v = find(key)) {
            if (v->is_number()) {
                out = v->get<double>();
            } else {
                error(key, "expected a number");
            }
        }
    }

    template <class Int>
    void integer(char const* key, Int& out)
    {
        if (auto const* v = find(key)) {
            if (!v->is_number_integer()) {
                error(key, "expected an integer");
            } else if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned() || v->template get<std::int64_t>() >= 0) {
                    out = v->template get<Int>();
                } else {
                    error(key, "expected a non-negative integer");
                }
            } else {
                out = v->get<Int>();
            }
        }
    }

    void string(char const* key, std::string& out)
    {
        if (auto const* v = find(key)) {
            if (v->is_string()) {
                out = v->get<std::string>();
            } else {
                error(key, "expected a string");
            }
        }
    }

    void vec3(char const* key, Velocity& out)
    {
        if (auto const* v = find(key)) {
            if (v->is_array() && v->size() == 3 && std::all_of(v->begin(), v->end(), [](auto const& x) { return x.is_number(); })) {
                out = Velocity((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
            } else {
                error(key, "expected an array of 3 numbers");
            }
        }
    }

    void int3(char const* key, std::array<int, 3>& out)
    {
        if (auto const* v = find(key)) {
            if (v->is_array() && v->size() == 3
                && std::all_of(v->begin(), v->end(), [](auto const& x) { return x.is_number_integer(); })) {
                for (int i = 0; i < 3; ++i) {
                    out[static_cast<std::size_t>(i)] = (*v)[static_cast<std::size_t>(i)].get<int>();
                }
            } else {
                error(key, "expected an array of 3 integers");
            }
        }
    }

    void numbers(char const* key, std::vector<double>& out)
    {
        if (auto const* v = find(key)) {
            if (v->is_array() && std::all_of(v->begin(), v->end(), [](auto const& x) { return x.is_number(); })) {
                out.clear();
                for (auto const& x : *v) {
                    out.push_back(x.get<double>());
                }
            } else {
                error(key, "expected an array of numbers");
            }
        }
    }

    template <class Enum>
    void choice(char const* key, Enum& out, std::initializer_list<std::pair<char const*, Enum>> options)
    {
        std::string value;
        if (find(key) == nullptr) {
            return;
        }
        string(key, value);
        for (auto const& [name, e] : options) {
            if (value == name) {
                out = e;
                return;
            }
        }
        std::string names;
        for (auto const& [name, e] : options) {
            names += (names.empty() ? "" : ", ") + std::string(name);
        }
        error(key, "expected one of " + names);
    }

    void finish()
    {
        if (!j_.is_object()) {
            return;
        }
        for (auto const& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                error(key.c_str(), "unknown key");
            }
        }
    }

    void error(char const* key, std::string const& what)
    {
        std::string where = path_;
        if (*key) {
            where += (where.empty() ? "" : ".") + std::string(key);
        }
        diag_.push_back((where.empty() ? "<root>" : where) + ": " + what);
    }

    std::string const& path() const { return path_; }

private:
    Json const& j_;
    std::string path_;
    std::set<std::string> seen_;
    std::vector<std::string>& diag_;
};

template <class F>
void check(std::vector<std::string>& diag, F&& validate)
{
    try {
        validate();
    } catch (DomainError const& e) {
        diag.emplace_back(e.what());
    }
}

char const* name_of(PeakProfile p)
{
    return p == PeakProfile::gaussian ? "gaussian" : "flat";
}

char const* name_of(OverlapShape s)
{
    return s == OverlapShape::gaussian ? "gaussian" : "none";
}

Json vec_json(Velocity const& v)
{
    return Json::array({v.x(), v.y(), v.z()});
}

} // namespace

void RunConfig::set_seed(std::uint64_t seed)
{
    master_seed = seed;
    source.master_seed = seed;
    hom.master_seed = seed;
}

RunConfig parse_run_config(Json const& doc)
{
    RunConfig cfg;
    cfg.hom.t2_values = default_t2_values();
    std::vector<std::string> diag;

    Section root(doc, "", diag);
    root.integer("master_seed", cfg.master_seed);
    root.string("output_dir", cfg.output_dir);
    root.integer("threads", cfg.threads);

    if (auto const* j = root.find("source")) {
        Section s(*j, "source", diag);
        auto& c = cfg.source;
        s.number("peak_separation", c.peak_separation);
        s.number("peak_width", c.peak_width);
        s.choice("peak_profile", c.peak_profile, {{"gaussian", PeakProfile::gaussian}, {"flat", PeakProfile::flat}});
        s.vec3("mode_spacing", c.mode_spacing);
        s.vec3("mode_widths", c.mode_widths);
        s.int3("modes_per_axis", c.modes_per_axis);
        s.number("nu_per_mode", c.nu_per_mode);
        s.number("eta", c.eta);
        s.integer("shots", c.shots);
        s.finish();
    }
    if (auto const* j = root.find("grid")) {
        Section s(*j, "grid", diag);
        auto& g = cfg.grid;
        s.vec3("origin", g.origin);
        s.vec3("cell_widths", g.cell_widths);
        s.int3("counts_per_axis", g.counts_per_axis);
        s.finish();
    }
    if (auto const* j = root.find("analysis")) {
        Section s(*j, "analysis", diag);
        auto& a = cfg.analysis;
        s.number("min_mean", a.min_mean);
        s.integer("bootstrap_resamples", a.bootstrap_resamples);
        s.number("m_lower", a.m_lower);
        s.number("m_upper", a.m_upper);
        s.finish();
    }
    if (auto const* j = root.find("hom")) {
        Section s(*j, "hom", diag);
        auto& h = cfg.hom;
        s.numbers("t2_values", h.t2_values);
        s.number("t0", h.t0);
        s.number("sigma_m", h.sigma_m);
        s.number("t1", h.t1);
        s.number("nu", h.nu);
        s.number("eta", h.eta);
        s.integer("shots_per_point", h.shots_per_point);
        s.choice("overlap_shape", h.overlap_shape, {{"gaussian", OverlapShape::gaussian}, {"none", OverlapShape::none}});
        s.integer("n_max", h.n_max);
        s.vec3("port_a_center", h.port_a_center);
        s.vec3("port_b_center", h.port_b_center);
        s.number("cell_height", h.cell_height);
        s.number("cell_diameter", h.cell_diameter);
        s.finish();
    }
    if (auto const* j = root.find("prediction")) {
        Section s(*j, "prediction", diag);
        auto& p = cfg.prediction;
        s.number("nu", p.nu);
        s.number("nu_std", p.nu_std);
        s.integer("samples", p.samples);
        s.finish();
    }
    root.finish();

    if (diag.empty()) {
        check(diag, [&] { cfg.source.validate(); });
        check(diag, [&] { cfg.grid.validate(); });
        check(diag, [&] { cfg.hom.validate(); });
        if (cfg.threads < 1) {
            diag.emplace_back("threads must be >= 1");
        }
        if (!(cfg.analysis.min_mean >= 0.0)) {
            diag.emplace_back("analysis.min_mean must be >= 0");
        }
        if (cfg.analysis.bootstrap_resamples < 100) {
            diag.emplace_back("analysis.bootstrap_resamples must be >= 100");
        }
        if (!(cfg.analysis.m_lower > 0.0 && cfg.analysis.m_upper > cfg.analysis.m_lower)) {
            diag.emplace_back("analysis.m_lower/m_upper must satisfy 0 < m_lower < m_upper");
        }
        if (!(cfg.prediction.nu > 0.0)) {
            diag.emplace_back("prediction.nu must be > 0");
        }
        if (!(cfg.prediction.nu_std >= 0.0)) {
            diag.emplace_back("prediction.nu_std must be >= 0");
        }
        if (cfg.prediction.samples < 2) {
            diag.emplace_back("prediction.samples must be >= 2");
        }
    }

    if (!diag.empty()) {
        std::ostringstream os;
        os << "invalid config:";
        for (auto const& d : diag) {
            os << "\n  " << d;
        }
        throw InputError(os.str());
    }
    cfg.set_seed(cfg.master_seed);
    return cfg;
}

RunConfig load_run_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config '" + path + "'");
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (Json::parse_error const& e) {
        throw InputError(path + ": " + e.what());
    }
    return parse_run_config(doc);
}

Json to_json(RunConfig const& c)
{
    auto const& s = c.source;
    auto const& g = c.grid;
    auto const& h = c.hom;
    return {
        {"master_seed", c.master_seed},
        {"output_dir", c.output_dir},
        {"threads", c.threads},
        {"source",
         {{"peak_separation", s.peak_separation},
          {"peak_width", s.peak_width},
          {"peak_profile", name_of(s.peak_profile)},
          {"mode_spacing", vec_json(s.mode_spacing)},
          {"mode_widths", vec_json(s.mode_widths)},
          {"modes_per_axis", s.modes_per_axis},
          {"nu_per_mode", s.nu_per_mode},
          {"eta", s.eta},
          {"shots", s.shots}}},
        {"grid", {{"origin", vec_json(g.origin)}, {"cell_widths", vec_json(g.cell_widths)}, {"counts_per_axis", g.counts_per_axis}}},
        {"analysis",
         {{"min_mean", c.analysis.min_mean},
          {"bootstrap_resamples", c.analysis.bootstrap_resamples},
          {"m_lower", c.analysis.m_lower},
          {"m_upper", c.analysis.m_upper}}},
        {"hom",
         {{"t2_values", h.t2_values},
          {"t0", h.t0},
          {"sigma_m", h.sigma_m},
          {"t1", h.t1},
          {"nu", h.nu},
          {"eta", h.eta},
          {"shots_per_point", h.shots_per_point},
          {"overlap_shape", name_of(h.overlap_shape)},
          {"n_max", h.n_max},
          {"port_a_center", vec_json(h.port_a_center)},
          {"port_b_center", vec_json(h.port_b_center)},
          {"cell_height", h.cell_height},
          {"cell_diameter", h.cell_diameter}}},
        {"prediction", {{"nu", c.prediction.nu}, {"nu_std", c.prediction.nu_std}, {"samples", c.prediction.samples}}},
    };
}

std::string config_digest(RunConfig const& config)
{
    return sha256_hex(to_json(config).dump());
}

} // namespace tmsv::cli
