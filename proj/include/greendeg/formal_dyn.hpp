#pragma once

// Polynomial dynamics over the Laurent-series field: iteration, the exact
// escape rate, and affine conjugation (including monic normalization).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "series.hpp"

namespace greendeg {

/// P(z) = a_0 z^d + a_1 z^{d-1} + ... + a_d with Laurent-series coefficients.
class SeriesPolynomial {
public:
    /// `coefficients` is a_0..a_d (leading first).
    explicit SeriesPolynomial(std::vector<LaurentSeries> coefficients) : a_(std::move(coefficients)) {
        if (a_.size() < 3) throw Error("polynomial degree must be at least 2");
        if (a_.front().is_zero_to_precision())
            throw IndistinguishableFromZero(a_.front().valuation_lower_bound());
    }

    int degree() const noexcept { return static_cast<int>(a_.size()) - 1; }
    /// a_j multiplies z^{d-j}.
    const LaurentSeries& coefficient(int j) const { return a_.at(static_cast<std::size_t>(j)); }
    const LaurentSeries& leading() const { return a_.front(); }
    const std::vector<LaurentSeries>& coefficients() const noexcept { return a_; }

    /// Coefficients ordered by increasing power of z.
    std::vector<LaurentSeries> ascending() const { return {a_.rbegin(), a_.rend()}; }

    static SeriesPolynomial from_ascending(const std::vector<LaurentSeries>& c) {
        return SeriesPolynomial(std::vector<LaurentSeries>(c.rbegin(), c.rend()));
    }

    friend bool operator==(const SeriesPolynomial& p, const SeriesPolynomial& q) { return p.a_ == q.a_; }

private:
    std::vector<LaurentSeries> a_;
};

/// phi(z) = scale * z + shift; scale must have a determinable valuation.
struct AffineMap {
    LaurentSeries scale = LaurentSeries::constant(1);
    LaurentSeries shift;

    static AffineMap identity() { return {}; }

    LaurentSeries apply(const LaurentSeries& z) const { return scale * z + shift; }

    /// phi^{-1}(w) = (w - shift) / scale.
    LaurentSeries apply_inverse(const LaurentSeries& w, Exponent relative_precision = 128) const {
        return (w - shift) * invert_unit(scale, relative_precision);
    }
};

struct EscapeResult {
    Rational alpha;
    /// First iterate lying in the escape region.
    int escape_iterate = 0;
    bool certified = true;
};

enum class StopReason {
    IterationBudget,
    /// Rational coefficients outgrew IterationBudget::max_coefficient_bits.
    CoefficientGrowth,
};

/// The orbit never entered the escape region within the budget. Not a proof
/// of boundedness.
struct BoundedSoFar {
    int iterations = 0;
    StopReason reason = StopReason::IterationBudget;
    /// Largest -valuation seen along the orbit; nullopt when every iterate was exactly 0.
    std::optional<Exponent> max_log_norm;
    Exponent working_precision = 0;
};

using GreenOutcome = std::variant<EscapeResult, BoundedSoFar>;

struct IterationBudget {
    int iterations = 200;
    /// Largest absolute truncation O(t^W) the orbit computation may use.
    Exponent precision = 256;
    /// First truncation tried; doubled on cancellation.
    Exponent initial_precision = 32;
    /// Largest numerator/denominator size (bits) tolerated along an orbit.
    /// Residue orbits that are not preperiodic grow heights like d^n.
    std::size_t max_coefficient_bits = 1u << 14;
};

/// Largest bit size of any numerator or denominator of f.
inline std::size_t coefficient_bits(const LaurentSeries& f) {
    std::size_t bits = 0;
    for (const auto& c : f.coefficients()) {
        bits = std::max({bits, mpz_sizeinbase(c.get_num_mpz_t(), 2), mpz_sizeinbase(c.get_den_mpz_t(), 2)});
    }
    return bits;
}

/// Horner evaluation over Laurent series.
inline LaurentSeries evaluate(const SeriesPolynomial& p, const LaurentSeries& z) {
    LaurentSeries acc = p.coefficient(0);
    for (int j = 1; j <= p.degree(); ++j) acc = acc * z + p.coefficient(j);
    return acc;
}

namespace detail {

inline LaurentSeries step(const SeriesPolynomial& p, const LaurentSeries& z, Exponent working) {
    return evaluate(p, z).truncated(working);
}

} // namespace detail

/// P^n(a), restarting from a with a doubled truncation whenever the result is
/// zero to its precision, up to `budget.precision`.
inline LaurentSeries iterate(const SeriesPolynomial& p, const LaurentSeries& a, int n,
                             const IterationBudget& budget = {}) {
    if (n < 0) throw Error("iterate needs n >= 0");
    if (n == 0) return a;
    Exponent working = std::min(budget.initial_precision, budget.precision);
    for (;;) {
        LaurentSeries z = a.truncated(working);
        for (int k = 0; k < n; ++k) z = detail::step(p, z, working);
        if (!z.is_zero_to_precision() || z.is_exact_zero()) return z;
        if (working >= budget.precision) throw PrecisionExhausted(budget.precision);
        working = std::min(working * 2, budget.precision);
    }
}

/// rho = max(0, max_i (v(a_0) - v(a_i))/i, v(a_0)/(d-1)): for log|z| > rho the
/// leading term dominates and log|P(z)| = d log|z| - v(a_0) > log|z|.
inline Rational escape_log_radius(const SeriesPolynomial& p) {
    const int d = p.degree();
    const Exponent v0 = p.leading().unit_valuation();
    Rational rho = 0;
    for (int i = 1; i <= d; ++i) {
        const ExtendedExponent vi = p.coefficient(i).valuation();
        if (!vi) continue;
        rho = std::max(rho, Rational(Integer(std::to_string(v0 - *vi)), i));
    }
    rho = std::max(rho, Rational(Integer(std::to_string(v0)), d - 1));
    return rho;
}

namespace detail {

inline Rational power(long base, int n) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), static_cast<unsigned long>(n));
    return Rational(r);
}

inline Rational to_rational(Exponent e) { return Rational(Integer(std::to_string(e))); }

} // namespace detail

/// Exact value of g_P(a) when the orbit escapes. In the escape region
/// g_P(z) = log|z| + log|a_0|/(d-1), so alpha = d^{-n}(-v(P^n a) - v(a_0)/(d-1)).
inline GreenOutcome green_exact(const SeriesPolynomial& p, const LaurentSeries& a, const IterationBudget& budget = {}) {
    const int d = p.degree();
    const Rational rho = escape_log_radius(p);
    const Exponent v0 = p.leading().unit_valuation();
    Exponent working = std::min(budget.initial_precision, budget.precision);

    for (;;) {
        LaurentSeries z = a.truncated(working);
        BoundedSoFar bounded;
        bounded.working_precision = working;
        bool restart = false;
        for (int n = 0; n <= budget.iterations; ++n) {
            if (z.is_zero_to_precision() && !z.is_exact_zero()) {
                restart = true;
                break;
            }
            if (!z.is_exact_zero()) {
                const Exponent log_norm = -z.lowest_exponent();
                if (detail::to_rational(log_norm) > rho) {
                    Rational alpha = (detail::to_rational(log_norm) - Rational(detail::to_rational(v0) / (d - 1))) /
                                     detail::power(d, n);
                    alpha.canonicalize();
                    return EscapeResult{alpha, n, true};
                }
                bounded.max_log_norm = std::max(bounded.max_log_norm.value_or(log_norm), log_norm);
            }
            bounded.iterations = n;
            if (n == budget.iterations) break;
            if (coefficient_bits(z) > budget.max_coefficient_bits) {
                bounded.reason = StopReason::CoefficientGrowth;
                break;
            }
            z = detail::step(p, z, working);
        }
        if (!restart) return bounded;
        if (working >= budget.precision) throw PrecisionExhausted(budget.precision);
        working = std::min(working * 2, budget.precision);
    }
}

namespace detail {

using SeriesPoly = std::vector<LaurentSeries>; // ascending in z

inline SeriesPoly poly_mul_linear(const SeriesPoly& f, const LaurentSeries& u, const LaurentSeries& v) {
    // f(z) * (u z + v)
    SeriesPoly out(f.size() + 1);
    for (std::size_t i = 0; i < f.size(); ++i) {
        out[i] += f[i] * v;
        out[i + 1] += f[i] * u;
    }
    return out;
}

} // namespace detail

/// P(z + c) expanded in powers of z: entry i is the Taylor coefficient of
/// (z - c)^i of P at c.
inline std::vector<LaurentSeries> taylor_coefficients(const SeriesPolynomial& p, const LaurentSeries& c) {
    detail::SeriesPoly acc{p.coefficient(0)};
    const LaurentSeries one = LaurentSeries::constant(1);
    for (int j = 1; j <= p.degree(); ++j) {
        acc = detail::poly_mul_linear(acc, one, c);
        acc[0] += p.coefficient(j);
    }
    return acc;
}

/// phi^{-1} o P o phi.
inline SeriesPolynomial conjugate(const SeriesPolynomial& p, const AffineMap& phi, Exponent relative_precision = 128) {
    detail::SeriesPoly acc{p.coefficient(0)};
    for (int j = 1; j <= p.degree(); ++j) {
        acc = detail::poly_mul_linear(acc, phi.scale, phi.shift);
        acc[0] += p.coefficient(j);
    }
    acc[0] -= phi.shift;
    const LaurentSeries inv = invert_unit(phi.scale, relative_precision);
    for (auto& c : acc) c *= inv;
    return SeriesPolynomial::from_ascending(acc);
}

/// P'(z) as ascending coefficients (degree d-1).
inline std::vector<LaurentSeries> derivative_ascending(const SeriesPolynomial& p) {
    const auto asc = p.ascending();
    std::vector<LaurentSeries> out;
    for (std::size_t i = 1; i < asc.size(); ++i) out.push_back(Rational(static_cast<long>(i)) * asc[i]);
    return out;
}

inline SeriesPolynomial substitute_power(const SeriesPolynomial& p, Exponent n) {
    std::vector<LaurentSeries> c;
    for (const auto& a : p.coefficients()) c.push_back(substitute_power(a, n));
    return SeriesPolynomial(std::move(c));
}

struct MonicForm {
    SeriesPolynomial polynomial;
    LaurentSeries marked_point;
    /// Exponent of the base change t -> t^N applied before conjugating.
    Exponent base_change = 1;
    AffineMap phi;
};

/// Base change t -> t^{d-1}, then conjugation by phi(z) = a_0(t^{d-1})^{-1/(d-1)} z.
/// Escape rates of the transported point are multiplied by d-1.
inline MonicForm make_monic(const SeriesPolynomial& p, const LaurentSeries& a, Exponent relative_precision = 128) {
    const int d = p.degree();
    const Exponent n = d - 1;
    const SeriesPolynomial based = substitute_power(p, n);
    const LaurentSeries lead_root = nth_root(based.leading(), static_cast<unsigned long>(n), relative_precision);
    AffineMap phi{invert_unit(lead_root, relative_precision), LaurentSeries()};
    SeriesPolynomial conj = conjugate(based, phi, relative_precision);
    // The leading coefficient is a_0 u^{d-1} = 1 identically.
    std::vector<LaurentSeries> c = conj.coefficients();
    c[0] = LaurentSeries::constant(1);
    LaurentSeries moved = phi.apply_inverse(substitute_power(a, n), relative_precision);
    return MonicForm{SeriesPolynomial(std::move(c)), std::move(moved), n, std::move(phi)};
}

} // namespace greendeg
