#include <gtest/gtest.h>

#include <cmath>

#include <greendeg/degeneration.hpp>

#include "fixtures.hpp"

using namespace greendeg;
using fixtures::poly;

namespace {

LaurentSeries S(const char* text) { return parse_series(text); }

double log_inv(double r) { return std::log(1.0 / r); }

// Direct evaluation of g for z^2 + 1/t at z = 0 in long double.
long double naive_green_quadratic_pole(std::complex<long double> t) {
    std::complex<long double> z = 0;
    long double scale = 1;
    for (int n = 0; n < 200 && std::abs(z) < 1e300L; ++n) {
        z = z * z + 1.0L / t;
        scale /= 2;
    }
    return scale * std::log(std::abs(z));
}

struct Pipeline {
    OrbitClassification classification;
    std::vector<GreenSample> samples;
    LineFit fit;
    ContinuityDiagnostics diag;
    DegenerationReport report;
};

Pipeline run(const SeriesPolynomial& p, const LaurentSeries& a, Exponent anchor_level = 32) {
    Pipeline out;
    ClassifyBudget budget;
    budget.anchor_level = anchor_level;
    out.classification = classify(p, a, budget);
    const auto alpha = alpha_from(out.classification);
    out.samples = sample_green(p, &a, DiagnosticSchedule{}, alpha ? std::optional<double>(alpha->get_d()) : std::nullopt);
    out.fit = fit_alpha(out.samples);
    out.diag = continuity_diagnostics(out.samples, alpha ? alpha->get_d() : out.fit.slope);
    out.report = decide_case(p, a, out.classification, out.fit, out.diag);
    return out;
}

} // namespace

TEST(Schedule, Radii) {
    const auto r = DiagnosticSchedule{}.radii();
    ASSERT_EQ(r.size(), 5u);
    EXPECT_DOUBLE_EQ(r[0], 0.1);
    EXPECT_NEAR(r[4], 1e-16, 1e-30);
    EXPECT_THROW((DiagnosticSchedule{1.5, 4, 16}.validate()), Error);
}

TEST(SampleGreen, PowerMapWithPoleMarkedPoint) {
    for (const auto& p : {poly({"1", "0", "0"}), poly({"1", "0", "0", "0"})}) {
        const auto a = S("t^-1");
        const auto samples = sample_green(p, &a, DiagnosticSchedule{}, 1.0);
        ASSERT_EQ(samples.size(), 80u);
        for (const auto& s : samples) {
            EXPECT_NEAR(s.g, log_inv(s.radius), 1e-12);
            EXPECT_NEAR(s.h, 0.0, 1e-12);
            EXPECT_TRUE(s.flags.empty()) << s.flags;
        }
    }
}

TEST(SampleGreen, GoodReductionIsZero) {
    const auto a = LaurentSeries();
    for (const auto& s : sample_green(poly({"1", "0", "t"}), &a, DiagnosticSchedule{}, std::nullopt)) {
        EXPECT_EQ(s.g, 0.0);
        EXPECT_LT(s.g_error, 1e-40);
        EXPECT_EQ(s.flags, "bounded_to_budget");
    }
}

TEST(SampleGreen, QuadraticPoleHTendsToZero) {
    const auto a = LaurentSeries();
    const auto p = poly({"1", "0", "t^-1"});
    const auto samples = sample_green(p, &a, DiagnosticSchedule{}, 0.5);
    std::vector<double> worst(5, 0.0);
    for (const auto& s : samples) {
        worst[static_cast<std::size_t>(s.level)] = std::max(worst[static_cast<std::size_t>(s.level)], std::abs(s.h));
        const auto oracle = naive_green_quadratic_pole({s.t.real(), s.t.imag()});
        EXPECT_NEAR(s.g, static_cast<double>(oracle), 1e-9 * std::max(1.0, s.g));
    }
    for (std::size_t j = 1; j < worst.size(); ++j) EXPECT_LT(worst[j], worst[j - 1] + 1e-15);
    // oracle at r = 1e-4: h = g - (1/2) log 10^4
    const long double g4 = naive_green_quadratic_pole({1e-4L, 0});
    EXPECT_LT(std::abs(static_cast<double>(g4) - 0.5 * log_inv(1e-4)), 1e-4);
    EXPECT_LT(worst[2], 1e-4);
}

TEST(SampleGreen, ErrorsAreFlaggedNotFatal) {
    // t^-400 overflows a double at |t| = 0.1.
    const auto a = S("1");
    const auto samples = sample_green(poly({"1", "0", "t^-400"}), &a, DiagnosticSchedule{0.1, 1, 4}, std::nullopt);
    ASSERT_EQ(samples.size(), 8u);
    int flagged = 0;
    for (const auto& s : samples) flagged += s.flags.find("error:") != std::string::npos;
    EXPECT_GT(flagged, 0);
}

TEST(FitAlpha, SyntheticLine) {
    std::vector<GreenSample> samples;
    for (int j = 0; j < 5; ++j) {
        GreenSample s;
        s.level = j;
        s.radius = std::pow(0.1, 1 << j);
        s.g = 0.5 * log_inv(s.radius) + 0.1;
        samples.push_back(s);
    }
    const auto f = fit_alpha(samples);
    EXPECT_NEAR(f.slope, 0.5, 1e-12);
    EXPECT_NEAR(f.intercept, 0.1, 1e-12);
    EXPECT_LT(f.residual, 1e-12);
}

TEST(FitAlpha, Families) {
    const auto a = LaurentSeries();
    EXPECT_NEAR(fit_alpha(sample_green(poly({"1", "0", "t^-1"}), &a, DiagnosticSchedule{}, std::nullopt)).slope, 0.5, 1e-2);
    EXPECT_NEAR(fit_alpha(sample_green(poly({"1", "0", "t"}), &a, DiagnosticSchedule{}, std::nullopt)).slope, 0.0, 1e-6);
}

TEST(FitAlpha, DegenerateWithOneRadius) {
    const auto a = LaurentSeries();
    EXPECT_THROW(fit_alpha(sample_green(poly({"1", "0", "t"}), &a, DiagnosticSchedule{0.1, 0, 8}, std::nullopt)),
                 DegenerateFit);
}

TEST(Continuity, Examples) {
    const auto pole = S("t^-1");
    const auto flat = continuity_diagnostics(sample_green(poly({"1", "0", "0"}), &pole, DiagnosticSchedule{}, 1.0), 1.0);
    EXPECT_NEAR(flat.h0_estimate, 0.0, 1e-12);
    EXPECT_NEAR(flat.harmonicity_defect, 0.0, 1e-12);
    for (double o : flat.circle_oscillations) EXPECT_NEAR(o, 0.0, 1e-12);

    const auto zero = LaurentSeries();
    const auto samples = sample_green(poly({"1", "0", "t^-1"}), &zero, DiagnosticSchedule{}, 0.5);
    const auto d = continuity_diagnostics(samples, 0.5);
    EXPECT_LT(std::abs(d.h0_estimate), 10 * d.sample_error);
    EXPECT_LT(d.harmonicity_defect, 10 * d.sample_error);

    // misfit by 0.1 shows up across circles: 0.1 * (log 1e16 - log 10)
    const auto bad = continuity_diagnostics(samples, 0.6);
    EXPECT_NEAR(bad.harmonicity_defect, 0.1 * (log_inv(1e-16) - log_inv(0.1)), 1e-6);
}

TEST(Continuity, HOffsetAlgebra) {
    const auto zero = LaurentSeries();
    const auto samples = sample_green(poly({"1", "0", "t^-1"}), &zero, DiagnosticSchedule{}, 0.5);
    const double eps = 0.03;
    const auto shifted = sample_green(poly({"1", "0", "t^-1"}), &zero, DiagnosticSchedule{}, 0.5 + eps);
    ASSERT_EQ(samples.size(), shifted.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        EXPECT_NEAR(shifted[i].h - samples[i].h, -eps * log_inv(samples[i].radius), 1e-12);
}

TEST(DecideCase, Examples) {
    const auto good = run(poly({"1", "0", "t"}), LaurentSeries());
    EXPECT_EQ(good.report.decided, DegenerationCase::Case1_AnalyticConjugate);
    EXPECT_EQ(good.report.delta, std::optional<int>(2));
    EXPECT_EQ(good.report.alpha_exact, std::optional<Rational>(0));

    const auto esc = run(poly({"1", "0", "t^-1"}), LaurentSeries());
    EXPECT_EQ(esc.report.decided, DegenerationCase::Case2_PositiveAlphaHarmonic);
    EXPECT_EQ(esc.report.alpha_exact, std::optional<Rational>(Rational(1, 2)));
    EXPECT_LT(esc.report.harmonicity_defect, esc.report.case_tolerance);

    const auto fixed = run(poly({"1", "0", "t"}), fixtures::repelling_fixed_point(30), 20);
    EXPECT_TRUE(std::holds_alternative<cert::CompactAnchors>(fixed.classification));
    EXPECT_EQ(fixed.report.decided, DegenerationCase::Case3_AlphaZero_hZero);
    EXPECT_LE(std::abs(fixed.report.h0_estimate), fixed.report.case_tolerance);
}

TEST(DecideCase, InconsistentEvidenceIsSurfaced) {
    const auto p = poly({"1", "0", "t^-1"});
    const auto a = LaurentSeries();
    const auto samples = sample_green(p, &a, DiagnosticSchedule{}, 1.0);
    const auto fit = fit_alpha(samples);
    EXPECT_THROW(decide_case(p, a, cert::Escape{Rational(1), 1}, fit, continuity_diagnostics(samples, 1.0)),
                 InconsistentEvidence);
}

TEST(DecideCase, CaseThreeBandShrinks) {
    const auto fixed = run(poly({"1", "0", "t"}), fixtures::repelling_fixed_point(30), 20);
    std::vector<double> band(5, 0.0);
    for (const auto& s : fixed.samples) band[static_cast<std::size_t>(s.level)] = std::max(band[static_cast<std::size_t>(s.level)], std::abs(s.h));
    for (std::size_t j = 0; j < band.size(); ++j) EXPECT_LE(band[j], fixed.report.case_tolerance) << j;
    EXPECT_LE(band.back(), band.front() + 1e-15);
}

TEST(DecideCase, BaseChangeCovariance) {
    struct Fixture {
        SeriesPolynomial p;
        LaurentSeries a;
    };
    const std::vector<Fixture> fixtures{
        {poly({"1", "0", "t^-1"}), LaurentSeries()},
        {poly({"t^-1", "0", "0"}), S("1")},
        {poly({"1", "0", "-3", "t^-1"}), LaurentSeries()},
        {poly({"1", "0", "0", "t"}), S("t^-1 + 2")},
    };
    for (const auto& f : fixtures) {
        const int n = f.p.degree() - 1;
        const auto base = run(f.p, f.a);
        const auto moved = run(substitute_power(f.p, n), substitute_power(f.a, n));
        ASSERT_TRUE(base.report.alpha_exact && moved.report.alpha_exact);
        EXPECT_EQ(*moved.report.alpha_exact, n * *base.report.alpha_exact);
        EXPECT_EQ(moved.report.decided, base.report.decided);
    }
}

TEST(LyapunovSlope, Examples) {
    const auto uni = lyapunov_slope(poly({"1", "0", "t^-1"}), DiagnosticSchedule{});
    ASSERT_TRUE(uni.lambda_exact.has_value()) << uni.warning;
    EXPECT_EQ(*uni.lambda_exact, Rational(1, 2));
    EXPECT_NEAR(uni.lambda_fit, 0.5, 1e-2);

    const auto good = lyapunov_slope(poly({"1", "0", "t"}), DiagnosticSchedule{});
    EXPECT_EQ(good.lambda_exact, std::optional<Rational>(0));
    for (const auto& s : good.samples) {
        if (s.level == 4) { EXPECT_NEAR(s.L, std::log(2.0), 1e-9); }
    }

    for (int d = 2; d <= 4; ++d) {
        std::vector<LaurentSeries> c(static_cast<std::size_t>(d + 1));
        c[0] = LaurentSeries::constant(1);
        const auto l = lyapunov_slope(SeriesPolynomial(c), DiagnosticSchedule{});
        EXPECT_EQ(l.lambda_exact, std::optional<Rational>(0));
        for (const auto& s : l.samples) EXPECT_NEAR(s.L, std::log(static_cast<double>(d)), 1e-9);
    }
}

TEST(LyapunovSlope, ObstructionFallsBackToFit) {
    const auto l = lyapunov_slope(poly({"1", "0", "-6", "t^-1"}), DiagnosticSchedule{});
    EXPECT_FALSE(l.lambda_exact.has_value());
    EXPECT_NE(l.warning.find("PuiseuxObstruction"), std::string::npos);
    // both critical points escape at rate 1/3
    EXPECT_NEAR(l.lambda_fit, 2.0 / 3.0, 1e-2);
}

TEST(LyapunovSlope, BaseChangeBranches) {
    // P = z^3 - 3 t z + t^-1: critical points +-t^{1/2}, each escaping at rate 1/3
    const auto l = lyapunov_slope(poly({"1", "0", "-3*t", "t^-1"}), DiagnosticSchedule{});
    ASSERT_TRUE(l.lambda_exact.has_value()) << l.warning;
    EXPECT_EQ(l.base_change, 2);
    EXPECT_EQ(*l.lambda_exact, Rational(2, 3));
    EXPECT_NEAR(l.lambda_fit, 2.0 / 3.0, 1e-2);
}
