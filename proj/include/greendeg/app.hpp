#pragma once

// The classify / report / lyapunov pipelines behind the command-line tool.
// Everything is computed in memory first; files are written only when the
// whole run succeeded.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifier.hpp"
#include "config.hpp"
#include "degeneration.hpp"

namespace greendeg::app {

using nlohmann::ordered_json;

enum ExitCode { kCertified = 0, kError = 1, kUndetermined = 2 };

struct OutputFile {
    std::string name;
    std::string content;
};

struct RunResult {
    int exit_code = kCertified;
    std::vector<OutputFile> files;
    /// Human-readable lines for stdout.
    std::string summary;
};

struct Overrides {
    std::optional<double> tol;
    std::optional<int> iterations;
    std::optional<std::uint64_t> seed;
};

inline void apply(FamilyConfig& cfg, const Overrides& o) {
    if (o.tol) {
        if (!(*o.tol > 0)) throw Error("--tol must be positive");
        cfg.tol = *o.tol;
    }
    if (o.iterations) {
        if (*o.iterations < 1) throw Error("--budget-iters must be positive");
        cfg.budget.orbit.iterations = *o.iterations;
    }
    if (o.seed) cfg.seed = *o.seed;
}

namespace detail {

inline std::string str(const Rational& q) { return q.get_str(); }

inline ordered_json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline ordered_json settings(const FamilyConfig& cfg) {
    ordered_json s;
    s["r0"] = cfg.schedule.r0;
    s["levels"] = cfg.schedule.levels;
    s["samples_per_circle"] = cfg.schedule.samples_per_circle;
    s["iterations"] = cfg.budget.orbit.iterations;
    s["precision"] = cfg.budget.orbit.precision;
    s["anchor_level"] = cfg.budget.anchor_level;
    s["max_coefficient_bits"] = cfg.budget.orbit.max_coefficient_bits;
    s["tol"] = cfg.tol;
    s["seed"] = cfg.seed;
    return s;
}

inline ordered_json defaults() {
    const FamilyConfig d;
    ordered_json s = settings(d);
    return s;
}

inline ordered_json family(const FamilyConfig& cfg) {
    ordered_json f;
    f["name"] = cfg.name;
    f["degree"] = cfg.degree();
    f["coefficients"] = ordered_json::array();
    for (const auto& c : cfg.coefficients) f["coefficients"].push_back(c.to_string());
    return f;
}

inline ordered_json header(const FamilyConfig& cfg, const char* command) {
    ordered_json j;
    j["command"] = command;
    j["family"] = family(cfg);
    j["settings"] = settings(cfg);
    j["defaults"] = defaults();
    return j;
}

inline ordered_json ball_json(const Ball& b) {
    ordered_json j;
    j["center"] = b.center.to_string();
    if (b.log_radius) j["log_radius"] = *b.log_radius;
    else j["log_radius"] = nullptr;
    return j;
}

inline ordered_json classification_json(const OrbitClassification& c, bool verified) {
    ordered_json j;
    j["variant"] = variant_name(c);
    j["theorem_case"] = to_string(theorem_case(c));
    if (const auto* e = std::get_if<cert::Escape>(&c)) {
        j["alpha"] = str(e->alpha);
        j["escape_iterate"] = e->n;
    } else if (const auto* b = std::get_if<cert::PeriodicBall>(&c)) {
        j["ball"] = ball_json(b->ball);
        j["preperiod"] = b->preperiod;
        j["period"] = b->period;
    } else if (const auto* v = std::get_if<cert::ConvergentOrbit>(&c)) {
        j["limit"] = v->limit.to_string();
        j["preperiod"] = v->preperiod;
        j["period"] = v->period;
    } else if (const auto* k = std::get_if<cert::CompactAnchors>(&c)) {
        j["level"] = k->level;
        j["normalization_exponent"] = k->normalization_exponent;
        j["anchors"] = ordered_json::array();
        for (const auto& a : k->anchors) j["anchors"].push_back(a.to_string());
        j["recurrence"] = k->recurrence;
        j["note"] = "certifies the computed truncations modulo t^(level+1) in the coordinate t^m z; "
                    "it does not prove compactness of the true orbit closure";
    } else if (const auto* u = std::get_if<cert::Undetermined>(&c)) {
        j["iterations"] = u->iterations;
        j["working_precision"] = u->working_precision;
        j["anchor_level"] = u->anchor_level;
        j["reason"] = u->reason;
    }
    if (!std::holds_alternative<cert::Undetermined>(c)) j["reverified"] = verified;
    return j;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv(const std::vector<GreenSample>& samples) {
    std::ostringstream out;
    out << "level,radius,angle_index,re_t,im_t,g,g_error,h,L,flags\n";
    for (const auto& s : samples) {
        out << s.level << ',' << fmt(s.radius) << ',' << s.angle_index << ',' << fmt(s.t.real()) << ','
            << fmt(s.t.imag()) << ',' << fmt(s.g) << ',' << fmt(s.g_error) << ',' << fmt(s.h) << ',' << fmt(s.L)
            << ',';
        // flags never contain quotes; quote when they contain separators
        if (s.flags.find(',') != std::string::npos) out << '"' << s.flags << '"';
        else out << s.flags;
        out << '\n';
    }
    return out.str();
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline OrbitClassification classify_marked(const FamilyConfig& cfg, const MarkedPoint& m, bool& verified) {
    const auto p = cfg.polynomial();
    const auto c = classify(p, m.value, cfg.budget);
    verified = !std::holds_alternative<cert::Undetermined>(c) && verify_certificate(p, m.value, c, cfg.budget);
    if (!std::holds_alternative<cert::Undetermined>(c) && !verified)
        throw Error("certificate for marked point '" + m.name + "' failed re-verification");
    return c;
}

inline SampleOptions sample_options(const FamilyConfig& cfg, bool with_lyapunov) {
    SampleOptions o;
    o.tol = cfg.tol;
    o.n_max = cfg.budget.orbit.iterations;
    o.with_lyapunov = with_lyapunov;
    o.seed = cfg.seed;
    return o;
}

} // namespace detail

inline RunResult run_classify(const FamilyConfig& cfg) {
    RunResult r;
    ordered_json j = detail::header(cfg, "classify");
    j["marked_points"] = ordered_json::array();
    std::ostringstream summary;
    for (const auto& m : cfg.marked) {
        bool verified = false;
        const auto c = detail::classify_marked(cfg, m, verified);
        if (std::holds_alternative<cert::Undetermined>(c)) r.exit_code = kUndetermined;
        ordered_json e;
        e["name"] = m.name;
        e["value"] = m.value.to_string();
        e["critical"] = m.critical;
        e["classification"] = detail::classification_json(c, verified);
        j["marked_points"].push_back(e);
        summary << cfg.name << " " << m.name << ": " << variant_name(c);
        if (const auto* esc = std::get_if<cert::Escape>(&c)) summary << " alpha=" << esc->alpha.get_str();
        summary << " (" << to_string(theorem_case(c)) << ")\n";
    }
    r.files.push_back({cfg.name + ".classify.json", detail::dump(j)});
    r.summary = summary.str();
    return r;
}

inline RunResult run_report(const FamilyConfig& cfg) {
    RunResult r;
    const auto p = cfg.polynomial();
    ordered_json j = detail::header(cfg, "report");
    j["marked_points"] = ordered_json::array();
    std::ostringstream summary;
    for (const auto& m : cfg.marked) {
        bool verified = false;
        const auto c = detail::classify_marked(cfg, m, verified);
        const auto alpha = alpha_from(c);
        const auto samples = sample_green(p, &m.value, cfg.schedule,
                                          alpha ? std::optional<double>(alpha->get_d()) : std::nullopt,
                                          detail::sample_options(cfg, true));
        const auto fit = fit_alpha(samples);
        const auto diag = continuity_diagnostics(samples, alpha ? alpha->get_d() : fit.slope, cfg.tol);
        const auto rep = decide_case(p, m.value, c, fit, diag);
        if (rep.decided == DegenerationCase::Undetermined) r.exit_code = kUndetermined;

        ordered_json d;
        d["case"] = to_string(rep.decided);
        d["alpha_exact"] = rep.alpha_exact ? ordered_json(detail::str(*rep.alpha_exact)) : ordered_json(nullptr);
        d["alpha_fit"] = detail::number(rep.alpha_fit);
        d["fit_residual"] = detail::number(rep.fit_residual);
        d["h0_estimate"] = detail::number(rep.h0_estimate);
        d["harmonicity_defect"] = detail::number(rep.harmonicity_defect);
        d["circle_oscillations"] = ordered_json::array();
        for (double o : rep.circle_oscillations) d["circle_oscillations"].push_back(detail::number(o));
        d["sample_error"] = detail::number(rep.sample_error);
        d["case_tolerance"] = detail::number(rep.case_tolerance);
        d["delta"] = rep.delta ? ordered_json(*rep.delta) : ordered_json(nullptr);
        d["notes"] = rep.notes;

        const std::string csv_name = cfg.name + "." + m.name + ".samples.csv";
        ordered_json e;
        e["name"] = m.name;
        e["value"] = m.value.to_string();
        e["critical"] = m.critical;
        e["classification"] = detail::classification_json(c, verified);
        e["degeneration"] = d;
        e["samples_csv"] = csv_name;
        j["marked_points"].push_back(e);
        r.files.push_back({csv_name, detail::csv(samples)});

        summary << cfg.name << " " << m.name << ": " << to_string(rep.decided);
        if (rep.alpha_exact) summary << " alpha=" << rep.alpha_exact->get_str();
        summary << " alpha_fit=" << detail::fmt(rep.alpha_fit);
        if (rep.delta) summary << " delta=" << *rep.delta;
        summary << "\n";
    }
    r.files.insert(r.files.begin(), {cfg.name + ".report.json", detail::dump(j)});
    r.summary = summary.str();
    return r;
}

inline RunResult run_lyapunov(const FamilyConfig& cfg) {
    RunResult r;
    const auto l = lyapunov_slope(cfg.polynomial(), cfg.schedule, detail::sample_options(cfg, true), cfg.budget);
    ordered_json j = detail::header(cfg, "lyapunov");
    j["lambda_fit"] = detail::number(l.lambda_fit);
    j["fit_residual"] = detail::number(l.fit_residual);
    j["lambda_exact"] = l.lambda_exact ? ordered_json(detail::str(*l.lambda_exact)) : ordered_json(nullptr);
    j["base_change"] = l.base_change;
    j["warning"] = l.warning.empty() ? ordered_json(nullptr) : ordered_json(l.warning);
    j["samples_csv"] = cfg.name + ".lyapunov.csv";
    r.files.push_back({cfg.name + ".lyapunov.json", detail::dump(j)});
    r.files.push_back({cfg.name + ".lyapunov.csv", detail::csv(l.samples)});
    std::ostringstream summary;
    summary << cfg.name << ": lambda_fit=" << detail::fmt(l.lambda_fit);
    if (l.lambda_exact) summary << " lambda_exact=" << l.lambda_exact->get_str();
    summary << "\n";
    if (!l.warning.empty()) summary << "warning: " << l.warning << "\n";
    r.summary = summary.str();
    return r;
}

/// Writes every file as name.tmp then renames it into place.
inline void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> temps;
    try {
        for (const auto& f : files) {
            const auto tmp = dir / (f.name + ".tmp");
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << f.content;
            out.close();
            if (!out) throw Error("cannot write '" + tmp.string() + "'");
            temps.push_back(tmp);
        }
    } catch (...) {
        for (const auto& t : temps) std::filesystem::remove(t);
        throw;
    }
    for (std::size_t i = 0; i < files.size(); ++i) std::filesystem::rename(temps[i], dir / files[i].name);
}

inline RunResult run(const std::string& command, const FamilyConfig& cfg) {
    if (command == "classify") return run_classify(cfg);
    if (command == "report") return run_report(cfg);
    if (command == "lyapunov") return run_lyapunov(cfg);
    throw Error("unknown command '" + command + "'");
}

} // namespace greendeg::app
