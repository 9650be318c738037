#include <gtest/gtest.h>

#include <random>

#include <greendeg/formal_dyn.hpp>

#include "generators.hpp"

using namespace greendeg;

namespace {

LaurentSeries S(const char* text) { return parse_series(text); }

SeriesPolynomial poly(std::initializer_list<const char*> coeffs) {
    std::vector<LaurentSeries> c;
    for (const char* s : coeffs) c.push_back(S(s));
    return SeriesPolynomial(std::move(c));
}

Rational alpha_of(const GreenOutcome& g) {
    const auto* e = std::get_if<EscapeResult>(&g);
    if (!e) throw std::runtime_error("expected escape");
    return e->alpha;
}

// Oracle for escape rates: d^{-n} * (-val(P^n(a))) computed by exact iteration
// without truncation. Converges to alpha with error O(d^{-n}).
Rational valuation_ratio(const SeriesPolynomial& p, LaurentSeries z, int n) {
    for (int k = 0; k < n; ++k) z = evaluate(p, z);
    Integer dn;
    mpz_ui_pow_ui(dn.get_mpz_t(), static_cast<unsigned long>(p.degree()), static_cast<unsigned long>(n));
    return Rational(-*z.valuation()) / Rational(dn);
}

} // namespace

TEST(FormalEvaluate, Examples) {
    EXPECT_EQ(evaluate(poly({"1", "0", "t"}), LaurentSeries()), S("t"));
    EXPECT_EQ(evaluate(poly({"1", "0", "t^-1"}), S("t^-1")), S("t^-2 + t^-1"));
    EXPECT_EQ(evaluate(poly({"1", "0", "0"}), S("1 + t + O(t^3)")), S("1 + 2*t + t^2 + O(t^3)"));
}

TEST(FormalIterate, Examples) {
    const auto p = poly({"1", "0", "t"});
    EXPECT_EQ(iterate(p, LaurentSeries(), 3), S("t + t^2 + 2*t^3 + t^4"));
    EXPECT_EQ(iterate(p, S("5/7 + t"), 0), S("5/7 + t"));
    EXPECT_EQ(iterate(poly({"1", "0", "t^-1"}), LaurentSeries(), 2), S("t^-2 + t^-1"));
}

TEST(FormalIterate, TruncatedDigitsAreCertified) {
    const auto p = poly({"1", "0", "t"});
    const auto coarse = iterate(p, LaurentSeries(), 40, IterationBudget{200, 64, 16});
    const auto fine = iterate(p, LaurentSeries(), 40, IterationBudget{200, 128, 128});
    ASSERT_TRUE(coarse.precision().has_value());
    EXPECT_TRUE(agree(coarse, fine));
    EXPECT_TRUE(agree(iterate(p, LaurentSeries(), 12, IterationBudget{200, 64, 16}), iterate(p, LaurentSeries(), 12)));
}

TEST(FormalIterate, RestartsOnCancellationThenGivesUp) {
    // P(z) = z^2 - t^40 at a = t^20: P(a) = 0 exactly, but only visible with
    // enough digits once a is given to finite precision.
    const auto p = poly({"1", "0", "-1*t^40"});
    const auto a = S("t^20 + O(t^100)");
    EXPECT_THROW(iterate(p, a, 1, IterationBudget{10, 64, 8}), PrecisionExhausted);
    const auto z = iterate(p, S("t^20 + t^50 + O(t^100)"), 1, IterationBudget{10, 128, 8});
    EXPECT_EQ(*z.valuation(), 70);
}

TEST(FormalEscapeRadius, Examples) {
    EXPECT_EQ(escape_log_radius(poly({"1", "0", "t^-1"})), Rational(1, 2));
    EXPECT_EQ(escape_log_radius(poly({"1", "0", "0"})), Rational(0));
    EXPECT_EQ(escape_log_radius(poly({"t^-1", "0", "0"})), Rational(0));
    EXPECT_EQ(escape_log_radius(poly({"t", "0", "0"})), Rational(1));
    EXPECT_THROW(escape_log_radius(poly({"1", "O(t^3)", "0"})), IndistinguishableFromZero);
}

TEST(FormalGreen, QuadraticWithPole) {
    const auto p = poly({"1", "0", "t^-1"});
    const auto g = green_exact(p, LaurentSeries());
    EXPECT_EQ(alpha_of(g), Rational(1, 2));
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(valuation_ratio(p, LaurentSeries(), n), Rational(1, 2));
}

TEST(FormalGreen, BoundedOrbit) {
    const auto g = green_exact(poly({"1", "0", "t"}), LaurentSeries(), IterationBudget{50, 256, 32});
    const auto* b = std::get_if<BoundedSoFar>(&g);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(b->iterations, 50);
    EXPECT_EQ(b->max_log_norm, std::optional<Exponent>(-1));
}

TEST(FormalGreen, ExactZeroOrbitIsBounded) {
    const auto g = green_exact(poly({"1", "0", "0"}), LaurentSeries(), IterationBudget{10, 64, 8});
    const auto* b = std::get_if<BoundedSoFar>(&g);
    ASSERT_NE(b, nullptr);
    EXPECT_FALSE(b->max_log_norm.has_value());
}

TEST(FormalGreen, NonMonicLeadingPole) {
    const auto p = poly({"t^-1", "0", "0"});
    EXPECT_EQ(alpha_of(green_exact(p, S("1"))), Rational(1));
    // oracle: (2^n - 1)/2^n -> 1
    for (int n = 1; n <= 8; ++n) {
        Rational gap = Rational(1) - valuation_ratio(p, S("1"), n);
        EXPECT_GT(gap, 0);
        EXPECT_LE(gap, Rational(1, 1L << n));
    }
}

TEST(FormalGreen, CubicNonMonicUsesInvarianceConstant) {
    // P = t^{-1} z^3, a = 1: val(P^n(1)) = -(3^n - 1)/2, so alpha = 1/2.
    const auto p = poly({"t^-1", "0", "0", "0"});
    EXPECT_EQ(alpha_of(green_exact(p, S("1"))), Rational(1, 2));
    EXPECT_EQ(valuation_ratio(p, S("1"), 6) + Rational(1, 2 * 729), Rational(1, 2));
}

TEST(FormalConjugate, Examples) {
    const AffineMap scale_t{S("t"), LaurentSeries()};
    EXPECT_EQ(conjugate(poly({"t^-1", "0", "0"}), scale_t), poly({"1", "0", "0"}));
    const auto p = poly({"2/3*t^-1 + 1", "t", "5"});
    EXPECT_EQ(conjugate(p, AffineMap::identity()), p);
    EXPECT_EQ(conjugate(poly({"1", "0", "0"}), AffineMap{S("1"), S("1")}), poly({"1", "2", "0"}));
}

TEST(FormalMonic, Examples) {
    const auto m = make_monic(poly({"t^-1", "0", "0"}), S("1"));
    EXPECT_EQ(m.polynomial, poly({"1", "0", "0"}));
    EXPECT_EQ(m.marked_point, S("t^-1"));
    EXPECT_EQ(m.base_change, 1);
    EXPECT_EQ(alpha_of(green_exact(m.polynomial, m.marked_point)), Rational(1));

    const auto already = make_monic(poly({"1", "t", "t^-1"}), LaurentSeries());
    EXPECT_EQ(already.polynomial, poly({"1", "t", "t^-1"}));

    const auto four = make_monic(poly({"4", "0", "t^-1"}), LaurentSeries());
    EXPECT_EQ(four.polynomial, poly({"1", "0", "4*t^-1"}));
}

TEST(FormalMonic, CubicBaseChangeDoublesAlpha) {
    const auto p = poly({"4*t^-1", "0", "1", "t^-1"});
    const auto a = S("t^-1 + 2");
    const auto m = make_monic(p, a);
    EXPECT_EQ(m.base_change, 2);
    EXPECT_EQ(m.polynomial.leading(), S("1"));
    EXPECT_EQ(alpha_of(green_exact(m.polynomial, m.marked_point)), 2 * alpha_of(green_exact(p, a)));
}

TEST(FormalMonic, RootObstruction) {
    EXPECT_THROW(make_monic(poly({"2*t", "0", "0", "1"}), S("1")), RootObstruction);
}

// --- properties -------------------------------------------------------------

class FormalProperties : public ::testing::Test {
protected:
    std::mt19937_64 rng{424242};
};

TEST_F(FormalProperties, FunctionalEquationAndRationality) {
    int escapes = 0, exhausted = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + static_cast<int>(trial % 2);
        const auto p = gen::random_polynomial(rng, d);
        const auto a = gen::random_series(rng, -2, 1, 3, false);
        GreenOutcome g, g1;
        try {
            g = green_exact(p, a, IterationBudget{30, 128, 16});
            if (!std::holds_alternative<EscapeResult>(g)) continue;
            g1 = green_exact(p, evaluate(p, a), IterationBudget{30, 128, 16});
        } catch (const PrecisionExhausted&) {
            ++exhausted;
            continue;
        }
        const auto* e = std::get_if<EscapeResult>(&g);
        ++escapes;
        EXPECT_EQ(alpha_of(g1), d * e->alpha);
        EXPECT_GT(e->alpha, 0);
        Integer bound;
        mpz_ui_pow_ui(bound.get_mpz_t(), static_cast<unsigned long>(d), static_cast<unsigned long>(e->escape_iterate));
        bound *= d - 1;
        EXPECT_TRUE(mpz_divisible_p(bound.get_mpz_t(), e->alpha.get_den().get_mpz_t()) != 0);
    }
    EXPECT_GT(escapes, 50);
    EXPECT_LT(exhausted, 10);
}

TEST_F(FormalProperties, ConjugationInvariance) {
    int checked = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const auto p = gen::random_polynomial(rng, 2 + trial % 2);
        const auto a = gen::random_series(rng, -2, 1, 3, false);
        std::uniform_int_distribution<Exponent> k(-2, 2);
        const AffineMap phi{LaurentSeries::monomial(gen::random_nonzero_rational(rng), k(rng)),
                            gen::random_laurent(rng, k(rng), 2)};
        GreenOutcome g, gc;
        try {
            g = green_exact(p, a, IterationBudget{30, 128, 16});
            gc = green_exact(conjugate(p, phi), phi.apply_inverse(a), IterationBudget{30, 128, 16});
        } catch (const PrecisionExhausted&) {
            continue;
        }
        ASSERT_EQ(g.index(), gc.index());
        if (std::holds_alternative<EscapeResult>(g)) {
            EXPECT_EQ(alpha_of(g), alpha_of(gc));
            ++checked;
        }
    }
    EXPECT_GT(checked, 30);
}

TEST_F(FormalProperties, EscapeThresholdSoundness) {
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 2 + trial % 3;
        const auto p = gen::random_polynomial(rng, d);
        const Rational rho = escape_log_radius(p);
        // smallest integer log-norm strictly above rho
        Integer floor_rho;
        mpz_fdiv_q(floor_rho.get_mpz_t(), rho.get_num_mpz_t(), rho.get_den_mpz_t());
        std::uniform_int_distribution<Exponent> extra(1, 4);
        const Exponent log_norm = floor_rho.get_si() + extra(rng);
        const auto z = gen::random_laurent(rng, -log_norm, 3);
        const auto pz = evaluate(p, z);
        EXPECT_EQ(-*pz.valuation(), d * log_norm - *p.leading().valuation());
        EXPECT_GT(-*pz.valuation(), log_norm);
    }
}
