#pragma once

// Sampling g_{P_t}(a(t)) on shrinking circles around t = 0, fitting the
// log|t|^{-1} coefficient, and deciding which degeneration regime applies.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "classifier.hpp"
#include "complex_dyn.hpp"
#include "errors.hpp"
#include "formal_dyn.hpp"
#include "puiseux.hpp"
#include "series.hpp"

namespace greendeg {

/// Circles |t| = r_j = r0^{2^j}, j = 0..levels, each sampled at equally spaced angles.
struct DiagnosticSchedule {
    double r0 = 0.1;
    int levels = 4;
    int samples_per_circle = 16;

    void validate() const {
        if (!(r0 > 0 && r0 < 1)) throw Error("schedule r0 must lie in (0, 1)");
        if (levels < 0 || samples_per_circle < 1) throw Error("schedule needs levels >= 0 and samples >= 1");
        const auto r = radii();
        for (std::size_t j = 1; j < r.size(); ++j)
            if (!(r[j] < r[j - 1]) || !(r[j] > 0)) throw Error("schedule radii underflow");
    }

    std::vector<double> radii() const {
        std::vector<double> r{r0};
        for (int j = 1; j <= levels; ++j) r.push_back(r.back() * r.back());
        return r;
    }
};

struct SampleOptions {
    double tol = 1e-10;
    int n_max = 200;
    bool with_lyapunov = false;
    /// Seed for the critical-point root finder.
    std::uint64_t seed = 0x5eedULL;
};

struct GreenSample {
    int level = 0;
    int angle_index = 0;
    double radius = 0;
    Complex t;
    double g = std::numeric_limits<double>::quiet_NaN();
    double g_error = std::numeric_limits<double>::quiet_NaN();
    double h = std::numeric_limits<double>::quiet_NaN();
    double alpha_used = 0;
    double L = std::numeric_limits<double>::quiet_NaN();
    double L_error = std::numeric_limits<double>::quiet_NaN();
    /// Empty when the sample is clean; otherwise ';'-separated notes.
    std::string flags;

    bool usable() const { return std::isfinite(g); }
};

namespace detail {

inline void add_flag(std::string& flags, const std::string& f) {
    if (!flags.empty()) flags += ';';
    flags += f;
}

} // namespace detail

/// g_{P_t}(a(t)) on every sampled t; evaluation failures are flagged per
/// sample. With a null marked point only L is sampled.
inline std::vector<GreenSample> sample_green(const SeriesPolynomial& family, const LaurentSeries* a,
                                             const DiagnosticSchedule& schedule, std::optional<double> alpha,
                                             const SampleOptions& opt = {}) {
    schedule.validate();
    const double two_pi = 2.0 * std::acos(-1.0);
    const auto radii = schedule.radii();
    std::vector<GreenSample> out;
    for (int j = 0; j <= schedule.levels; ++j) {
        for (int k = 0; k < schedule.samples_per_circle; ++k) {
            GreenSample s;
            s.level = j;
            s.angle_index = k;
            s.radius = radii[static_cast<std::size_t>(j)];
            s.t = std::polar(s.radius, two_pi * k / schedule.samples_per_circle);
            s.alpha_used = alpha.value_or(0.0);
            try {
                const ComplexPoly p = family_at(family.coefficients(), s.t, opt.tol);
                if (p.truncation_warning) detail::add_flag(s.flags, "coefficient_truncation");
                if (a) {
                    const auto z = evaluate_complex(*a, s.t, opt.tol);
                    if (z.truncation_warning) detail::add_flag(s.flags, "marked_point_truncation");
                    const auto g = green_value(p, z.value, opt.tol, opt.n_max);
                    if (g.status == GreenStatus::BoundedToBudget) detail::add_flag(s.flags, "bounded_to_budget");
                    s.g = g.value;
                    s.g_error = g.error_bound;
                    s.h = s.g - s.alpha_used * std::log(1.0 / s.radius);
                }
                if (opt.with_lyapunov) {
                    const auto l = lyapunov(p, opt.tol, opt.n_max, opt.seed);
                    if (!l.critical.converged) detail::add_flag(s.flags, "critical_points_unconverged");
                    s.L = l.value;
                    s.L_error = l.error_bound;
                }
            } catch (const Error& e) {
                detail::add_flag(s.flags, std::string("error:") + e.what());
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

struct LineFit {
    double slope = 0;
    double intercept = 0;
    /// Largest deviation of a circle average from the fitted line.
    double residual = 0;
};

namespace detail {

/// Circle averages of `field` keyed by level, skipping unusable samples.
template <class Field>
std::vector<std::pair<double, double>> circle_means(const std::vector<GreenSample>& samples, Field field) {
    std::vector<std::pair<double, double>> out; // (log 1/r, mean)
    std::vector<double> sums;
    std::vector<int> counts;
    std::vector<double> radii;
    for (const auto& s : samples) {
        const double v = field(s);
        if (!std::isfinite(v)) continue;
        const auto level = static_cast<std::size_t>(s.level);
        if (level >= sums.size()) {
            sums.resize(level + 1, 0.0);
            counts.resize(level + 1, 0);
            radii.resize(level + 1, 0.0);
        }
        sums[level] += v;
        ++counts[level];
        radii[level] = s.radius;
    }
    for (std::size_t j = 0; j < sums.size(); ++j)
        if (counts[j] > 0) out.emplace_back(std::log(1.0 / radii[j]), sums[j] / counts[j]);
    return out;
}

inline LineFit least_squares(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) throw DegenerateFit();
    double mx = 0, my = 0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0)) throw DegenerateFit();
    LineFit f{sxy / sxx, 0, 0};
    f.intercept = my - f.slope * mx;
    for (const auto& [x, y] : pts) f.residual = std::max(f.residual, std::abs(y - (f.intercept + f.slope * x)));
    return f;
}

} // namespace detail

/// Least-squares slope of circle-averaged g against log|t|^{-1}.
inline LineFit fit_alpha(const std::vector<GreenSample>& samples) {
    return detail::least_squares(detail::circle_means(samples, [](const GreenSample& s) { return s.g; }));
}

struct ContinuityDiagnostics {
    double h0_estimate = 0;
    std::vector<double> circle_oscillations;
    /// Max over the larger circles of |mean of h on the circle - h0_estimate|.
    double harmonicity_defect = 0;
    /// max(largest g error bound, tol): the per-sample uncertainty.
    double sample_error = 0;
};

/// h = g - alpha log|t|^{-1} recomputed from stored g with the given alpha.
inline ContinuityDiagnostics continuity_diagnostics(const std::vector<GreenSample>& samples, double alpha,
                                                    double tol = 1e-10) {
    ContinuityDiagnostics d;
    d.sample_error = tol;
    auto h_of = [alpha](const GreenSample& s) { return s.g - alpha * std::log(1.0 / s.radius); };
    int levels = 0;
    for (const auto& s : samples) levels = std::max(levels, s.level + 1);
    std::vector<double> lo(static_cast<std::size_t>(levels), INFINITY), hi(static_cast<std::size_t>(levels), -INFINITY);
    for (const auto& s : samples) {
        if (!s.usable()) continue;
        const double h = h_of(s);
        lo[static_cast<std::size_t>(s.level)] = std::min(lo[static_cast<std::size_t>(s.level)], h);
        hi[static_cast<std::size_t>(s.level)] = std::max(hi[static_cast<std::size_t>(s.level)], h);
        d.sample_error = std::max(d.sample_error, s.g_error);
    }
    for (int j = 0; j < levels; ++j)
        d.circle_oscillations.push_back(std::isfinite(lo[static_cast<std::size_t>(j)]) ? hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)] : NAN);
    const auto means = detail::circle_means(samples, h_of);
    if (means.empty()) {
        d.h0_estimate = NAN;
        d.harmonicity_defect = NAN;
        return d;
    }
    d.h0_estimate = means.back().second;
    for (std::size_t j = 0; j + 1 < means.size(); ++j)
        d.harmonicity_defect = std::max(d.harmonicity_defect, std::abs(means[j].second - d.h0_estimate));
    return d;
}

enum class DegenerationCase { Case1_AnalyticConjugate, Case2_PositiveAlphaHarmonic, Case3_AlphaZero_hZero, Undetermined };

inline const char* to_string(DegenerationCase c) {
    switch (c) {
    case DegenerationCase::Case1_AnalyticConjugate: return "Case1_AnalyticConjugate";
    case DegenerationCase::Case2_PositiveAlphaHarmonic: return "Case2_PositiveAlphaHarmonic";
    case DegenerationCase::Case3_AlphaZero_hZero: return "Case3_AlphaZero_hZero";
    default: return "Undetermined";
    }
}

struct DegenerationReport {
    std::optional<Rational> alpha_exact;
    double alpha_fit = 0;
    double fit_residual = 0;
    DegenerationCase decided = DegenerationCase::Undetermined;
    double h0_estimate = 0;
    double harmonicity_defect = 0;
    std::vector<double> circle_oscillations;
    double sample_error = 0;
    /// 10 x sample_error.
    double case_tolerance = 0;
    std::optional<Rational> lambda_exact;
    std::optional<double> lambda_fit;
    std::optional<int> delta;
    std::vector<std::string> notes;
};

struct GoodReductionProbe {
    bool passed = false;
    std::optional<SeriesPolynomial> centered;
    std::string reason;
};

/// make_monic, then z -> z - a_1/d; passes when every coefficient has
/// valuation >= 0, so the reduction mod t is monic of degree d.
inline GoodReductionProbe good_reduction_probe(const SeriesPolynomial& p, const LaurentSeries& a) {
    GoodReductionProbe out;
    try {
        const MonicForm m = make_monic(p, a);
        const int d = m.polynomial.degree();
        const LaurentSeries shift = Rational(-1, d) * m.polynomial.coefficient(1);
        const SeriesPolynomial c = conjugate(m.polynomial, AffineMap{LaurentSeries::constant(1), shift});
        for (const auto& coeff : c.coefficients()) {
            if (!coeff.valuation_at_least(0)) {
                out.reason = "centered monic form has a coefficient with a pole";
                return out;
            }
        }
        out.passed = true;
        out.centered = c;
    } catch (const Error& e) {
        out.reason = e.what();
    }
    return out;
}

/// Exact alpha implied by a classification: the escape rate, or 0 for any
/// bounded-orbit certificate.
inline std::optional<Rational> alpha_from(const OrbitClassification& c) {
    if (const auto* e = std::get_if<cert::Escape>(&c)) return e->alpha;
    if (std::holds_alternative<cert::Undetermined>(c)) return std::nullopt;
    return Rational(0);
}

inline DegenerationReport decide_case(const SeriesPolynomial& family, const LaurentSeries& a,
                                      const OrbitClassification& classification, const LineFit& fit,
                                      const ContinuityDiagnostics& diag) {
    DegenerationReport r;
    r.alpha_exact = alpha_from(classification);
    r.alpha_fit = fit.slope;
    r.fit_residual = fit.residual;
    r.h0_estimate = diag.h0_estimate;
    r.harmonicity_defect = diag.harmonicity_defect;
    r.circle_oscillations = diag.circle_oscillations;
    r.sample_error = diag.sample_error;
    r.case_tolerance = 10.0 * diag.sample_error;

    if (r.alpha_exact) {
        const double gap = std::abs(r.alpha_fit - r.alpha_exact->get_d());
        if (gap > r.fit_residual + r.sample_error + 1e-2) {
            throw InconsistentEvidence("fitted alpha " + std::to_string(r.alpha_fit) + " disagrees with exact alpha " +
                                       r.alpha_exact->get_str());
        }
    }

    if (std::holds_alternative<cert::Escape>(classification)) {
        r.decided = DegenerationCase::Case2_PositiveAlphaHarmonic;
        return r;
    }
    if (std::holds_alternative<cert::Undetermined>(classification)) {
        r.notes.push_back("orbit classification undetermined within budget");
        return r;
    }
    if (std::holds_alternative<cert::ConvergentOrbit>(classification) ||
        std::holds_alternative<cert::PeriodicBall>(classification)) {
        const auto probe = good_reduction_probe(family, a);
        if (probe.passed) {
            r.decided = DegenerationCase::Case1_AnalyticConjugate;
            r.delta = probe.centered->degree();
            return r;
        }
        r.notes.push_back("good-reduction probe failed: " + probe.reason);
    }
    if (std::isfinite(r.h0_estimate) && std::abs(r.h0_estimate) <= r.case_tolerance) {
        r.decided = DegenerationCase::Case3_AlphaZero_hZero;
    } else {
        r.notes.push_back("h0 estimate not within tolerance of 0");
    }
    return r;
}

struct LyapunovSlope {
    double lambda_fit = 0;
    double fit_residual = 0;
    std::optional<Rational> lambda_exact;
    Exponent base_change = 1;
    /// Why lambda_exact is missing, when it is.
    std::string warning;
    std::vector<GreenSample> samples;
};

/// lambda = (sum over critical branches of their escape rates) / N, where the
/// branches are roots of P' over Q((t^{1/N})).
inline std::optional<Rational> lambda_exact(const SeriesPolynomial& family, const ClassifyBudget& budget,
                                            Exponent& base_change, std::string& warning) {
    try {
        const auto roots = rational_puiseux_roots(derivative_ascending(family), budget.orbit.precision / 2);
        base_change = roots.base_change;
        const SeriesPolynomial based = substitute_power(family, roots.base_change);
        Rational total = 0;
        for (const auto& b : roots.branches) {
            const auto c = classify(based, b.root, budget);
            const auto alpha = alpha_from(c);
            if (!alpha) {
                warning = "critical branch orbit undetermined within budget";
                return std::nullopt;
            }
            total += b.multiplicity * *alpha;
        }
        total /= Rational(Integer(std::to_string(roots.base_change)));
        total.canonicalize();
        return total;
    } catch (const PuiseuxObstruction& e) {
        warning = std::string("PuiseuxObstruction: ") + e.what();
    } catch (const PrecisionExhausted& e) {
        warning = std::string("PrecisionExhausted: ") + e.what();
    }
    return std::nullopt;
}

inline LyapunovSlope lyapunov_slope(const SeriesPolynomial& family, const DiagnosticSchedule& schedule,
                                    const SampleOptions& opt = {}, const ClassifyBudget& budget = {}) {
    LyapunovSlope out;
    SampleOptions o = opt;
    o.with_lyapunov = true;
    out.samples = sample_green(family, nullptr, schedule, std::nullopt, o);
    const auto fit = detail::least_squares(detail::circle_means(out.samples, [](const GreenSample& s) { return s.L; }));
    out.lambda_fit = fit.slope;
    out.fit_residual = fit.residual;
    out.lambda_exact = lambda_exact(family, budget, out.base_change, out.warning);
    return out;
}

} // namespace greendeg
