#include "mcf/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "mcf/calibration_monitor.hpp"
#include "mcf/errors.hpp"
#include "mcf/flow_engine.hpp"
#include "mcf/scenarios.hpp"
#include "mcf/snapshot_io.hpp"

namespace mcf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InsufficientData("missing " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_json_text(ss.str());
}

std::string snapshot_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu.mcfs", k);
    return buf;
}

json flags_to_json(const std::vector<MonotonicityFlag>& flags) {
    json arr = json::array();
    for (const auto& f : flags) {
        arr.push_back({{"quantity", f.quantity},
                       {"t_prev", f.t_prev},
                       {"t", f.t},
                       {"drop", f.drop},
                       {"slack", f.slack}});
    }
    return arr;
}

json singularity_to_json(const std::optional<SingularityReport>& rep) {
    if (!rep) return nullptr;
    return {{"type", std::string(to_string(rep->type))},
            {"t0_est", rep->t0_est},
            {"C_est", rep->C_est},
            {"fit_window", {rep->fit_window.first, rep->fit_window.second}},
            {"fit_residual", rep->fit_residual}};
}

// JSON has no NaN; null reads back as NaN.
double number_or_nan(const json& j) {
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::optional<SingularityReport> singularity_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    SingularityReport rep;
    const std::string type = j.at("type").get<std::string>();
    rep.type = type == "TypeI"    ? SingularityType::TypeI
               : type == "TypeII" ? SingularityType::TypeII
                                  : SingularityType::None;
    rep.t0_est = number_or_nan(j.at("t0_est"));
    rep.C_est = number_or_nan(j.at("C_est"));
    rep.fit_window = {number_or_nan(j.at("fit_window")[0]), number_or_nan(j.at("fit_window")[1])};
    rep.fit_residual = number_or_nan(j.at("fit_residual"));
    return rep;
}

json expectations_to_json(const ScenarioExpectation& e) {
    json j = json::object();
    for (const auto& v : e.values) {
        j[v.name] = {{"value", v.value}, {"provenance", std::string(to_string(v.provenance))}};
    }
    return j;
}

json regularity_to_json(const RegularityReport& rep) {
    return {{"verdict", std::string(to_string(rep.verdict))},
            {"epsilon", rep.epsilon},
            {"terminal_density", rep.terminal_density},
            {"terminal_tau", rep.terminal_tau},
            {"extrapolated_density", rep.extrapolated},
            {"gap_fraction", rep.gap_fraction}};
}

json point_to_json(const SpacetimePoint& pt) { return {{"x0", pt.x0}, {"t0", pt.t0}}; }

// Density audit and regularity verdict for one configured point.
json density_block(const FlowTrajectory& traj, const SpacetimePoint& pt, double epsilon,
                   double c_mono, double max_gap, DensitySeries* series_out = nullptr) {
    json j;
    j["point"] = point_to_json(pt);
    const DensitySeries series = monotonicity_audit(traj, pt, c_mono);
    j["samples"] = series.values.size();
    j["flags"] = flags_to_json(series.violations);
    if (!series.values.empty()) j["terminal_density"] = series.values.back();
    try {
        j["regularity"] = regularity_to_json(regularity_report(series, pt.t0, epsilon, max_gap));
    } catch (const InsufficientData& e) {
        j["regularity"] = {{"verdict", "InsufficientData"}, {"message", e.what()}};
    }
    if (series_out) *series_out = series;
    return j;
}

}  // namespace

fs::path resolve_output_dir(const RunConfig& cfg, std::string_view stem) {
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    const char* root = std::getenv("MCF_OUTPUT_DIR");
    const fs::path base = root && *root ? fs::path(root) : fs::path("out");
    return base / std::string(stem.empty() ? "run" : stem);
}

void write_error(std::ostream& err, const std::exception& e) {
    json j;
    if (const auto* me = dynamic_cast<const Error*>(&e)) {
        j["error"] = me->kind();
        if (const auto* ve = dynamic_cast<const ValidationError*>(&e)) j["field"] = ve->field;
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) j["line"] = pe->line;
    } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
        j["error"] = "InvalidArgument";
    } else {
        j["error"] = "RuntimeError";
    }
    j["message"] = e.what();
    err << j.dump() << '\n';
}

std::vector<double> centroid(const Immersion& imm, const GeometrySnapshot& geo) {
    const std::size_t N = static_cast<std::size_t>(imm.ambient_dim());
    std::vector<double> c(N, 0.0);
    double w = 0.0;
    for (std::size_t node = 0; node < imm.node_count(); ++node) {
        const auto p = imm.point(node);
        const double s = geo.sqrt_det_g[node];
        for (std::size_t A = 0; A < N; ++A) c[A] += s * p[A];
        w += s;
    }
    for (double& x : c) x /= w;
    return c;
}

SpacetimePoint resolve_point(const DensityPointConfig& cfg, const FlowTrajectory& traj,
                             const json& expectations) {
    if (traj.snapshots.empty()) throw InsufficientData("trajectory has no snapshots");
    SpacetimePoint pt;
    if (cfg.x0) {
        pt.x0 = *cfg.x0;
    } else {
        const auto& last = traj.final_snapshot().state;
        pt.x0 = centroid(last, compute_geometry(last));
    }
    if (pt.x0.size() != static_cast<std::size_t>(traj.final_snapshot().state.ambient_dim())) {
        throw ValidationError("x0", "must have one entry per ambient axis");
    }
    if (cfg.t0) {
        pt.t0 = *cfg.t0;
    } else if (traj.singularity && traj.singularity->type != SingularityType::None &&
               std::isfinite(traj.singularity->t0_est)) {
        pt.t0 = traj.singularity->t0_est;
    } else if (expectations.contains("extinction_time")) {
        pt.t0 = expectations["extinction_time"]["value"].get<double>();
    } else {
        throw ValidationError("t0", "\"extinction\" needs a classified singularity or a closed-form "
                                    "extinction time");
    }
    return pt;
}

LoadedTrajectory load_trajectory(const fs::path& dir) {
    LoadedTrajectory out;
    out.manifest = read_json_file(dir / "trajectory.json");
    const auto& m = out.manifest;
    const long version = m.value("format_version", 0L);
    if (version != kFormatVersion) throw VersionMismatch(version, kFormatVersion);
    const auto periods = m.at("periods").get<std::vector<double>>();
    const auto& snaps = m.at("snapshots");
    if (snaps.empty()) throw InsufficientData("trajectory lists no snapshots");
    for (const auto& s : snaps) {
        Snapshot snap;
        snap.step = s.at("step").get<std::size_t>();
        snap.t = s.at("t").get<double>();
        snap.dt = s.at("dt").get<double>();
        snap.state = read_snapshot(dir / "snapshots" / s.at("file").get<std::string>(), periods);
        out.traj.snapshots.push_back(std::move(snap));
    }
    out.traj.singularity = singularity_from_json(m.at("singularity"));
    out.traj.steps = m.value("steps", std::size_t{0});
    return out;
}

int cmd_run(RunConfig cfg, std::string_view stem, std::ostream& out, std::ostream& err) {
    try {
        const fs::path dir = resolve_output_dir(cfg, stem);
        cfg.output_dir = dir.string();
        fs::create_directories(dir);
        fs::remove_all(dir / "snapshots");
        fs::create_directories(dir / "snapshots");
        write_text(dir / "config.echo.json", to_json(cfg).dump(2) + "\n");

        const Scenario scenario = make_scenario(cfg.scenario, cfg.seed);
        const FlowTrajectory traj = run_flow(scenario, cfg.policy, cfg.monitors);

        {
            std::ofstream os(dir / "series.csv", std::ios::binary | std::ios::trunc);
            write_series_csv(os, traj.series);
        }
        json manifest;
        manifest["format_version"] = kFormatVersion;
        manifest["scenario"] = std::string(scenario_kind(cfg.scenario));
        manifest["n"] = scenario.initial.dim();
        manifest["N"] = scenario.initial.ambient_dim();
        manifest["periods"] = scenario.initial.periods();
        manifest["expectations"] = expectations_to_json(scenario.expect);
        manifest["singularity"] = singularity_to_json(traj.singularity);
        manifest["steps"] = traj.steps;
        manifest["snapshots"] = json::array();
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
            const auto& s = traj.snapshots[k];
            const std::string name = snapshot_name(k);
            write_snapshot(dir / "snapshots" / name, s.state);
            manifest["snapshots"].push_back({{"file", name}, {"step", s.step}, {"t", s.t}, {"dt", s.dt}});
        }
        write_text(dir / "trajectory.json", manifest.dump(2) + "\n");

        json report;
        report["format_version"] = kFormatVersion;
        report["scenario"] = std::string(scenario_kind(cfg.scenario));
        report["analogue_of"] = scenario.analogue_of;
        report["termination"] = std::string(to_string(traj.termination));
        report["termination_detail"] = traj.termination_detail;
        report["steps"] = traj.steps;
        report["final_time"] = traj.snapshots.empty() ? 0.0 : traj.final_snapshot().t;
        report["singularity"] = singularity_to_json(traj.singularity);
        report["expectations"] = manifest["expectations"];

        std::size_t flag_count = 0;
        json audits = json::object();
        if (cfg.monitors.eta) {
            const auto eta = eta_monitor(traj, *scenario.graph, cfg.c_mono);
            audits["eta"] = {{"flags", flags_to_json(eta.flags)},
                             {"terminal_min_eta1", eta.min_eta1.back()},
                             {"terminal_min_eta2", eta.min_eta2.back()},
                             {"terminal_min_mu", eta.min_mu.back()}};
            flag_count += eta.flags.size();
        }
        if (cfg.monitors.lagrangian) {
            const auto lag = lagrangian_residuals(traj, *scenario.graph, cfg.c_mono);
            auto max_of = [](const std::vector<double>& v) {
                double m = 0.0;
                for (double x : v) m = std::fmax(m, x);
                return m;
            };
            audits["lagrangian"] = {{"flags", flags_to_json(lag.flags)},
                                    {"max_r1", max_of(lag.r1)},
                                    {"max_r2", max_of(lag.r2)},
                                    {"max_r3", max_of(lag.r3)},
                                    {"max_symmetry_defect", max_of(lag.symmetry_defect)}};
            flag_count += lag.flags.size();
        }
        if (cfg.monitors.ratio_k) {
            const auto ratio = ratio_monitor(traj, *scenario.graph, *cfg.monitors.ratio_k);
            const auto tail = ratio_tail_bound(ratio);
            audits["ratio"] = {{"k", ratio.k},
                               {"tail_sup", tail.tail_sup},
                               {"window_start_value", tail.window_start_value},
                               {"bounded", tail.bounded}};
        }
        if (cfg.monitors.area_decay) {
            const auto abs_col = traj.series.column(columns::kAreaResidual);
            const auto rel_col = traj.series.column(columns::kAreaResidualRel);
            double a = 0.0, r = 0.0;
            for (double x : abs_col) a = std::fmax(a, x);
            for (double x : rel_col) r = std::fmax(r, x);
            audits["area_decay"] = {{"max_absolute", a}, {"max_relative", r}};
        }
        if (!cfg.density.empty()) {
            audits["density"] = json::array();
            for (const auto& d : cfg.density) {
                const auto pt = resolve_point(d, traj, manifest["expectations"]);
                json block = density_block(traj, pt, d.epsilon, cfg.c_mono, 0.1);
                flag_count += block["flags"].size();
                audits["density"].push_back(std::move(block));
            }
        }
        report["audits"] = audits;
        report["audit_flag_count"] = flag_count;
        report["warnings"] = traj.warnings;
        write_text(dir / "report.json", report.dump(2) + "\n");

        for (const auto& w : traj.warnings) err << "warning: " << w << '\n';
        if (flag_count) err << "warning: " << flag_count << " monotonicity audit flag(s)\n";
        out << "run: " << to_string(traj.termination) << " after " << traj.steps << " steps, t = "
            << format_double(report["final_time"].get<double>()) << "; output in " << dir.string()
            << '\n';
        return flag_count && cfg.strict ? kExitStrictAudit : kExitOk;
    } catch (const std::exception& e) {
        write_error(err, e);
        return kExitModuleError;
    }
}

int cmd_analyze(const fs::path& dir, const AnalysisSpec& spec, std::ostream& out,
                std::ostream& err) {
    try {
        const LoadedTrajectory loaded = load_trajectory(dir);
        const auto& traj = loaded.traj;
        const SpacetimePoint pt = resolve_point(spec.point, traj, loaded.manifest.at("expectations"));

        DensitySeries series;
        json block = density_block(traj, pt, spec.point.epsilon, spec.c_mono, spec.max_gap_fraction,
                                   &series);
        if (series.values.size() < 2) {
            throw InsufficientData("fewer than two snapshots precede t0");
        }
        // A truncated trajectory cannot support a verdict.
        const RegularityReport rep =
            regularity_report(series, pt.t0, spec.point.epsilon, spec.max_gap_fraction);

        {
            std::ofstream os(dir / "density.csv", std::ios::binary | std::ios::trunc);
            os << "t,tau,density,slack\n";
            for (std::size_t k = 0; k < series.values.size(); ++k) {
                const double slack = k == 0 ? 0.0 : series.slack[k - 1];
                os << format_double(series.times[k]) << ',' << format_double(pt.t0 - series.times[k])
                   << ',' << format_double(series.values[k]) << ',' << format_double(slack) << '\n';
            }
        }

        const auto rescaled = parabolic_rescale(traj, pt, spec.lambda);
        fs::remove_all(dir / "rescaled");
        fs::create_directories(dir / "rescaled");
        json rmanifest;
        rmanifest["format_version"] = kFormatVersion;
        rmanifest["lambda"] = spec.lambda;
        rmanifest["point"] = point_to_json(pt);
        rmanifest["periods"] = rescaled.empty() ? std::vector<double>{}
                                                : rescaled.front().state.periods();
        rmanifest["snapshots"] = json::array();
        for (std::size_t k = 0; k < rescaled.size(); ++k) {
            const std::string name = snapshot_name(k);
            write_snapshot(dir / "rescaled" / name, rescaled[k].state);
            rmanifest["snapshots"].push_back({{"file", name},
                                              {"step", rescaled[k].step},
                                              {"s", rescaled[k].t},
                                              {"dt", rescaled[k].dt}});
        }
        write_text(dir / "rescaled" / "manifest.json", rmanifest.dump(2) + "\n");

        json report = regularity_to_json(rep);
        report["format_version"] = kFormatVersion;
        report["point"] = point_to_json(pt);
        report["analysis"] = to_json(spec);
        report["samples"] = series.values.size();
        report["monotonicity_flags"] = block["flags"];
        write_text(dir / "regularity_report.json", report.dump(2) + "\n");

        out << "analyze: " << to_string(rep.verdict) << " (terminal density "
            << format_double(rep.terminal_density) << ", epsilon " << format_double(rep.epsilon)
            << ")\n";
        if (!series.violations.empty()) {
            err << "warning: " << series.violations.size() << " monotonicity audit flag(s)\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        write_error(err, e);
        return kExitModuleError;
    }
}

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
    try {
        const json rep = read_json_file(dir / "report.json");
        const long version = rep.value("format_version", 0L);
        if (version != kFormatVersion) throw VersionMismatch(version, kFormatVersion);
        out << "scenario:     " << rep.at("scenario").get<std::string>() << '\n';
        out << "termination:  " << rep.at("termination").get<std::string>();
        const std::string detail = rep.value("termination_detail", "");
        if (!detail.empty()) out << " (" << detail << ")";
        out << '\n';
        out << "steps:        " << rep.at("steps").get<std::size_t>() << '\n';
        out << "final time:   " << format_double(rep.at("final_time").get<double>()) << '\n';
        const auto& sing = rep.at("singularity");
        if (sing.is_null()) {
            out << "singularity:  not fitted\n";
        } else {
            out << "singularity:  " << sing.at("type").get<std::string>() << ", t0 = "
                << format_double(number_or_nan(sing.at("t0_est"))) << ", C = "
                << format_double(number_or_nan(sing.at("C_est"))) << ", residual = "
                << format_double(number_or_nan(sing.at("fit_residual"))) << '\n';
        }
        out << "audit flags:  " << rep.value("audit_flag_count", std::size_t{0}) << '\n';
        for (const auto& w : rep.value("warnings", json::array())) {
            out << "warning:      " << w.get<std::string>() << '\n';
        }
        if (fs::exists(dir / "regularity_report.json")) {
            const json reg = read_json_file(dir / "regularity_report.json");
            out << "regularity:   " << reg.at("verdict").get<std::string>() << " (density "
                << format_double(reg.at("terminal_density").get<double>()) << ", extrapolated "
                << format_double(reg.at("extrapolated_density").get<double>()) << ", epsilon "
                << format_double(reg.at("epsilon").get<double>()) << ")\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        write_error(err, e);
        return kExitModuleError;
    }
}

}  // namespace mcf
