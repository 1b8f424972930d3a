#include "mcf/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "mcf/errors.hpp"

namespace mcf {

using nlohmann::json;

namespace {

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Typed access to one JSON object; finish() rejects keys that were never read.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    const json* find(std::string_view key) {
        seen_.insert(std::string(key));
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(std::string_view key) const { return join(path_, key); }

    double number(std::string_view key, double fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ValidationError(where(key), "must be a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) throw ValidationError(where(key), "must be finite");
        return x;
    }

    long long integer(std::string_view key, long long fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ValidationError(where(key), "must be an integer");
        return v->get<long long>();
    }

    bool boolean(std::string_view key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ValidationError(where(key), "must be a boolean");
        return v->get<bool>();
    }

    std::string string(std::string_view key, const std::string& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ValidationError(where(key), "must be a string");
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(join(path_, it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) throw ValidationError(field, constraint);
}

std::size_t resolution(ObjectReader& r, std::size_t fallback, std::size_t min_res) {
    const long long v = r.integer("res", static_cast<long long>(fallback));
    require(v >= static_cast<long long>(min_res), r.where("res"),
            "must be >= " + std::to_string(min_res));
    return static_cast<std::size_t>(v);
}

int ambient(ObjectReader& r, int fallback) {
    const long long v = r.integer("N", fallback);
    require(v >= 2 && v <= 16, r.where("N"), "must lie in [2, 16]");
    return static_cast<int>(v);
}

IntMatrix2 int_matrix(ObjectReader& r, std::string_view key, const IntMatrix2& fallback) {
    const json* v = r.find(key);
    if (!v) return fallback;
    const std::string field = r.where(key);
    require(v->is_array() && v->size() == 2, field, "must be a 2x2 integer matrix");
    IntMatrix2 m{};
    for (std::size_t i = 0; i < 2; ++i) {
        const json& row = (*v)[i];
        require(row.is_array() && row.size() == 2, field, "must be a 2x2 integer matrix");
        for (std::size_t j = 0; j < 2; ++j) {
            require(row[j].is_number_integer(), field, "must be a 2x2 integer matrix");
            m[i][j] = row[j].get<int>();
        }
    }
    return m;
}

std::vector<FourierTerm> fourier_terms(ObjectReader& r, std::string_view key, bool with_component,
                                       int max_component) {
    const json* v = r.find(key);
    if (!v) return {};
    const std::string field = r.where(key);
    require(v->is_array(), field, "must be an array");
    std::vector<FourierTerm> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
        ObjectReader t((*v)[k], field + "[" + std::to_string(k) + "]");
        FourierTerm term;
        if (with_component) {
            term.component = static_cast<int>(t.integer("component", 0));
            require(term.component >= 0 && term.component < max_component, t.where("component"),
                    "must index a target component");
        }
        term.amplitude = t.number("amplitude", 0.0);
        term.kx = static_cast<int>(t.integer("kx", 0));
        term.ky = static_cast<int>(t.integer("ky", 0));
        term.phase = t.number("phase", 0.0);
        t.finish();
        out.push_back(term);
    }
    return out;
}

ScenarioSpec parse_scenario(const json& j) {
    ObjectReader r(j, "scenario");
    const std::string kind = r.string("kind", "");
    if (kind == "circle") {
        CircleSpec s;
        s.r0 = r.number("r0", s.r0);
        require(s.r0 > 0.0, "scenario.r0", "must be positive");
        s.ambient_dim = ambient(r, s.ambient_dim);
        s.res = resolution(r, s.res, 64);
        r.finish();
        return s;
    }
    if (kind == "ellipse") {
        EllipseSpec s;
        s.a = r.number("a", s.a);
        s.b = r.number("b", s.b);
        require(s.a > 0.0, "scenario.a", "must be positive");
        require(s.b > 0.0, "scenario.b", "must be positive");
        s.ambient_dim = ambient(r, s.ambient_dim);
        s.res = resolution(r, s.res, 64);
        r.finish();
        return s;
    }
    if (kind == "torus_graph") {
        TorusGraphSpec s;
        s.linear = int_matrix(r, "linear", s.linear);
        s.perturbation = fourier_terms(r, "perturbation", true, 2);
        s.random_modes = static_cast<int>(r.integer("random_modes", s.random_modes));
        require(s.random_modes >= 0, "scenario.random_modes", "must be >= 0");
        s.random_amplitude = r.number("random_amplitude", s.random_amplitude);
        require(s.random_amplitude >= 0.0, "scenario.random_amplitude", "must be >= 0");
        s.period = r.number("period", s.period);
        require(s.period > 0.0, "scenario.period", "must be positive");
        s.res = resolution(r, s.res, 8);
        s.pad = static_cast<int>(r.integer("pad", s.pad));
        require(s.pad >= 0 && s.pad <= 8, "scenario.pad", "must lie in [0, 8]");
        s.margin = r.number("margin", s.margin);
        require(s.margin > 0.0 && s.margin < 1.0, "scenario.margin", "must lie in (0, 1)");
        r.finish();
        return s;
    }
    if (kind == "gradient_graph") {
        GradientGraphSpec s;
        s.linear = int_matrix(r, "linear", s.linear);
        require(s.linear[0][1] == s.linear[1][0], "scenario.linear", "must be symmetric");
        s.potential = fourier_terms(r, "potential", false, 0);
        s.period = r.number("period", s.period);
        require(s.period > 0.0, "scenario.period", "must be positive");
        s.res = resolution(r, s.res, 8);
        r.finish();
        return s;
    }
    if (kind == "shear_composition") {
        ShearCompositionSpec s;
        s.eps1 = r.number("eps1", s.eps1);
        s.eps2 = r.number("eps2", s.eps2);
        s.k1 = static_cast<int>(r.integer("k1", s.k1));
        s.k2 = static_cast<int>(r.integer("k2", s.k2));
        s.res = resolution(r, s.res, 8);
        s.pad = static_cast<int>(r.integer("pad", s.pad));
        require(s.pad >= 0 && s.pad <= 8, "scenario.pad", "must lie in [0, 8]");
        s.margin = r.number("margin", s.margin);
        require(s.margin > 0.0 && s.margin < 1.0, "scenario.margin", "must lie in (0, 1)");
        r.finish();
        return s;
    }
    throw ValidationError("scenario.kind",
                          "must be one of circle, ellipse, torus_graph, gradient_graph, "
                          "shear_composition");
}

StepPolicy parse_policy(const json* j) {
    StepPolicy p;
    if (!j) return p;
    ObjectReader r(*j, "policy");
    p.safety = r.number("safety", p.safety);
    p.t_max = r.number("t_max", p.t_max);
    p.convergence_tol = r.number("convergence_tol", p.convergence_tol);
    p.blowup_cap = r.number("blowup_cap", p.blowup_cap);
    p.exhaustion_nodes = static_cast<int>(r.integer("exhaustion_nodes", p.exhaustion_nodes));
    const long long snaps = r.integer("max_snapshots", static_cast<long long>(p.max_snapshots));
    const long long rows = r.integer("max_series_rows", static_cast<long long>(p.max_series_rows));
    require(snaps >= 2, "policy.max_snapshots", "must be >= 2");
    require(rows >= 64, "policy.max_series_rows", "must be >= 64");
    p.max_snapshots = static_cast<std::size_t>(snaps);
    p.max_series_rows = static_cast<std::size_t>(rows);
    r.finish();
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError("policy", e.what());
    }
    return p;
}

DensityPointConfig parse_point(ObjectReader& r) {
    DensityPointConfig p;
    if (const json* x0 = r.find("x0")) {
        if (x0->is_string()) {
            require(x0->get<std::string>() == "centroid", r.where("x0"),
                    "must be \"centroid\" or an array of numbers");
        } else {
            require(x0->is_array() && !x0->empty(), r.where("x0"),
                    "must be \"centroid\" or an array of numbers");
            std::vector<double> v;
            for (const auto& e : *x0) {
                require(e.is_number(), r.where("x0"), "must contain numbers only");
                v.push_back(e.get<double>());
            }
            p.x0 = std::move(v);
        }
    }
    if (const json* t0 = r.find("t0")) {
        if (t0->is_string()) {
            require(t0->get<std::string>() == "extinction", r.where("t0"),
                    "must be \"extinction\" or a number");
        } else {
            require(t0->is_number(), r.where("t0"), "must be \"extinction\" or a number");
            p.t0 = t0->get<double>();
        }
    }
    p.epsilon = r.number("epsilon", p.epsilon);
    require(p.epsilon > 0.0, r.where("epsilon"), "must be positive");
    return p;
}

json point_to_json(const DensityPointConfig& p) {
    json j;
    j["x0"] = p.x0 ? json(*p.x0) : json("centroid");
    j["t0"] = p.t0 ? json(*p.t0) : json("extinction");
    j["epsilon"] = p.epsilon;
    return j;
}

json matrix_to_json(const IntMatrix2& m) { return json::array({m[0], m[1]}); }

json terms_to_json(const std::vector<FourierTerm>& terms, bool with_component) {
    json arr = json::array();
    for (const auto& t : terms) {
        json e;
        if (with_component) e["component"] = t.component;
        e["amplitude"] = t.amplitude;
        e["kx"] = t.kx;
        e["ky"] = t.ky;
        e["phase"] = t.phase;
        arr.push_back(e);
    }
    return arr;
}

json scenario_to_json(const ScenarioSpec& spec) {
    json j;
    j["kind"] = std::string(scenario_kind(spec));
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleSpec>) {
                j["r0"] = s.r0;
                j["N"] = s.ambient_dim;
                j["res"] = s.res;
            } else if constexpr (std::is_same_v<T, EllipseSpec>) {
                j["a"] = s.a;
                j["b"] = s.b;
                j["N"] = s.ambient_dim;
                j["res"] = s.res;
            } else if constexpr (std::is_same_v<T, TorusGraphSpec>) {
                j["linear"] = matrix_to_json(s.linear);
                j["perturbation"] = terms_to_json(s.perturbation, true);
                j["random_modes"] = s.random_modes;
                j["random_amplitude"] = s.random_amplitude;
                j["period"] = s.period;
                j["res"] = s.res;
                j["pad"] = s.pad;
                j["margin"] = s.margin;
            } else if constexpr (std::is_same_v<T, GradientGraphSpec>) {
                j["linear"] = matrix_to_json(s.linear);
                j["potential"] = terms_to_json(s.potential, false);
                j["period"] = s.period;
                j["res"] = s.res;
            } else {
                j["eps1"] = s.eps1;
                j["eps2"] = s.eps2;
                j["k1"] = s.k1;
                j["k2"] = s.k2;
                j["res"] = s.res;
                j["pad"] = s.pad;
                j["margin"] = s.margin;
            }
        },
        spec);
    return j;
}

}  // namespace

json parse_json_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t end = std::min(e.byte, text.size());
        std::size_t line = 1;
        for (std::size_t k = 0; k + 1 < end; ++k) {
            if (text[k] == '\n') ++line;
        }
        std::string msg = e.what();
        // Drop nlohmann's "[json.exception.parse_error.101] " prefix.
        if (auto pos = msg.find("] "); pos != std::string::npos) msg = msg.substr(pos + 2);
        throw ParseError(line, msg);
    }
}

std::string_view scenario_kind(const ScenarioSpec& spec) {
    switch (spec.index()) {
        case 0: return "circle";
        case 1: return "ellipse";
        case 2: return "torus_graph";
        case 3: return "gradient_graph";
        default: return "shear_composition";
    }
}

RunConfig parse_config(std::string_view text) {
    const json doc = parse_json_text(text);
    ObjectReader r(doc, "");
    RunConfig cfg;

    cfg.format_version = static_cast<int>(r.integer("format_version", kFormatVersion));
    if (cfg.format_version != kFormatVersion) throw VersionMismatch(cfg.format_version, kFormatVersion);

    const json* scenario = r.find("scenario");
    if (!scenario) throw ValidationError("scenario", "is required");
    cfg.scenario = parse_scenario(*scenario);
    cfg.policy = parse_policy(r.find("policy"));

    const long long cadence = r.integer("snapshot_cadence", 0);
    require(cadence >= 0, "snapshot_cadence", "must be >= 0");
    cfg.policy.snapshot_cadence = static_cast<std::size_t>(cadence);

    const long long seed = r.integer("seed", 0);
    require(seed >= 0, "seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.output_dir = r.string("output_dir", "");
    cfg.strict = r.boolean("strict", false);

    if (const json* m = r.find("monitors")) {
        ObjectReader mr(*m, "monitors");
        cfg.monitors.eta = mr.boolean("eta", false);
        cfg.monitors.lagrangian = mr.boolean("lagrangian", false);
        cfg.monitors.area_decay = mr.boolean("area_decay", false);
        if (const json* ratio = mr.find("ratio"); ratio && !ratio->is_null()) {
            ObjectReader rr(*ratio, "monitors.ratio");
            const double k = rr.number("k", 0.0);
            require(k >= 0.0 && k < 1.0, "monitors.ratio.k", "must lie in [0, 1)");
            rr.finish();
            cfg.monitors.ratio_k = k;
        }
        if (const json* dens = mr.find("density")) {
            require(dens->is_array(), "monitors.density", "must be an array");
            for (std::size_t k = 0; k < dens->size(); ++k) {
                ObjectReader pr((*dens)[k], "monitors.density[" + std::to_string(k) + "]");
                cfg.density.push_back(parse_point(pr));
                pr.finish();
            }
        }
        cfg.c_mono = mr.number("c_mono", cfg.c_mono);
        require(cfg.c_mono >= 0.0, "monitors.c_mono", "must be >= 0");
        mr.finish();
    }
    r.finish();

    const bool graph = std::holds_alternative<TorusGraphSpec>(cfg.scenario) ||
                       std::holds_alternative<GradientGraphSpec>(cfg.scenario) ||
                       std::holds_alternative<ShearCompositionSpec>(cfg.scenario);
    if ((cfg.monitors.eta || cfg.monitors.ratio_k) && !graph) {
        throw ValidationError("monitors", "eta and ratio need a graph scenario");
    }
    if (cfg.monitors.lagrangian && !std::holds_alternative<GradientGraphSpec>(cfg.scenario)) {
        throw ValidationError("monitors.lagrangian", "needs a gradient_graph scenario");
    }
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json j;
    j["format_version"] = cfg.format_version;
    j["scenario"] = scenario_to_json(cfg.scenario);
    const auto& p = cfg.policy;
    j["policy"] = {{"safety", p.safety},
                   {"t_max", p.t_max},
                   {"convergence_tol", p.convergence_tol},
                   {"blowup_cap", p.blowup_cap},
                   {"exhaustion_nodes", p.exhaustion_nodes},
                   {"max_snapshots", p.max_snapshots},
                   {"max_series_rows", p.max_series_rows}};
    j["snapshot_cadence"] = p.snapshot_cadence;
    json m;
    m["eta"] = cfg.monitors.eta;
    m["lagrangian"] = cfg.monitors.lagrangian;
    m["area_decay"] = cfg.monitors.area_decay;
    m["ratio"] = cfg.monitors.ratio_k ? json{{"k", *cfg.monitors.ratio_k}} : json(nullptr);
    m["density"] = json::array();
    for (const auto& d : cfg.density) m["density"].push_back(point_to_json(d));
    m["c_mono"] = cfg.c_mono;
    j["monitors"] = m;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["strict"] = cfg.strict;
    return j;
}

AnalysisSpec parse_analysis(std::string_view text) {
    const json doc = parse_json_text(text);
    ObjectReader r(doc, "");
    AnalysisSpec spec;
    spec.format_version = static_cast<int>(r.integer("format_version", kFormatVersion));
    if (spec.format_version != kFormatVersion) {
        throw VersionMismatch(spec.format_version, kFormatVersion);
    }
    spec.point = parse_point(r);
    spec.lambda = r.number("lambda", spec.lambda);
    require(spec.lambda > 0.0, "lambda", "must be positive");
    spec.c_mono = r.number("c_mono", spec.c_mono);
    require(spec.c_mono >= 0.0, "c_mono", "must be >= 0");
    spec.max_gap_fraction = r.number("max_gap_fraction", spec.max_gap_fraction);
    require(spec.max_gap_fraction > 0.0 && spec.max_gap_fraction <= 1.0, "max_gap_fraction",
            "must lie in (0, 1]");
    r.finish();
    return spec;
}

json to_json(const AnalysisSpec& spec) {
    json j = point_to_json(spec.point);
    j["format_version"] = spec.format_version;
    j["lambda"] = spec.lambda;
    j["c_mono"] = spec.c_mono;
    j["max_gap_fraction"] = spec.max_gap_fraction;
    return j;
}

}  // namespace mcf
