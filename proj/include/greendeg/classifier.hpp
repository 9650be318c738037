#pragma once

// Orbit classification over the Laurent-series field: escape, a periodic
// ball, a convergent orbit, or a finite set of anchor truncations.

#include <algorithm>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "balls.hpp"
#include "errors.hpp"
#include "formal_dyn.hpp"
#include "series.hpp"

namespace greendeg {

struct ClassifyBudget {
    IterationBudget orbit;
    /// Truncation level l: anchors are compared modulo t^{l+1}.
    Exponent anchor_level = 32;
};

namespace cert {

struct Escape {
    Rational alpha;
    int n = 0;
};

struct PeriodicBall {
    Ball ball;
    int preperiod = 0;
    int period = 1;
};

struct ConvergentOrbit {
    /// A point of the attracting cycle the orbit converges to.
    LaurentSeries limit;
    int preperiod = 0;
    int period = 1;
};

/// Orbit truncations taken in the coordinate w = t^m z, where every orbit
/// point has valuation >= 0.
struct CompactAnchors {
    Exponent level = 0;
    Exponent normalization_exponent = 0;
    std::vector<LaurentSeries> anchors;
    /// recurrence[n] is the anchor matching orbit point n.
    std::vector<std::size_t> recurrence;
};

struct Undetermined {
    int iterations = 0;
    Exponent working_precision = 0;
    Exponent anchor_level = 0;
    std::string reason;
};

} // namespace cert

using OrbitClassification =
    std::variant<cert::Escape, cert::PeriodicBall, cert::ConvergentOrbit, cert::CompactAnchors, cert::Undetermined>;

enum class TheoremCase { Escape, PreperiodicBall, CompactClosure, Undetermined };

inline TheoremCase theorem_case(const OrbitClassification& c) {
    switch (c.index()) {
    case 0: return TheoremCase::Escape;
    case 1: return TheoremCase::PreperiodicBall;
    case 2:
    case 3: return TheoremCase::CompactClosure;
    default: return TheoremCase::Undetermined;
    }
}

inline const char* to_string(TheoremCase c) {
    switch (c) {
    case TheoremCase::Escape: return "ThmCase1_Escape";
    case TheoremCase::PreperiodicBall: return "ThmCase2_PreperiodicBall";
    case TheoremCase::CompactClosure: return "ThmCase3_CompactClosure";
    default: return "Undetermined";
    }
}

inline const char* variant_name(const OrbitClassification& c) {
    static const char* names[] = {"Escape", "PeriodicBall", "ConvergentOrbit", "CompactAnchors", "Undetermined"};
    return names[c.index()];
}

/// Exact Laurent polynomial of the digits of z below t^k.
inline LaurentSeries polynomial_part(const LaurentSeries& z, Exponent k) {
    if (z.precision() && *z.precision() < k) throw PrecisionExhausted(k);
    std::vector<Rational> c;
    for (Exponent e = z.lowest_exponent(); e < std::min(k, z.end_exponent()); ++e) c.push_back(z.coefficient(e));
    return LaurentSeries(z.lowest_exponent(), std::move(c));
}

/// P'(z) by Horner on the derivative coefficients.
inline LaurentSeries evaluate_derivative(const SeriesPolynomial& p, const LaurentSeries& z) {
    const auto dp = derivative_ascending(p);
    LaurentSeries acc = dp.back();
    for (std::size_t i = dp.size() - 1; i-- > 0;) acc = acc * z + dp[i];
    return acc;
}

/// z -> t^{-m} z applied to P, so orbit points w = t^m z.
inline AffineMap normalization_map(Exponent m) { return AffineMap{LaurentSeries::t_power(-m), LaurentSeries()}; }

namespace detail {

struct NormalizedOrbit {
    SeriesPolynomial poly;
    Exponent m = 0;
    Exponent working = 0;
    std::vector<LaurentSeries> points;
    bool size_stopped = false;
};

/// Orbit of t^m a under the normalized polynomial, truncated at O(t^W);
/// W doubles (within budget) until every point carries l+1 digits.
inline NormalizedOrbit normalized_orbit(const SeriesPolynomial& p, const LaurentSeries& a, Exponent m,
                                        const ClassifyBudget& budget) {
    const Exponent need = budget.anchor_level + 1;
    if (budget.orbit.precision < need) throw PrecisionExhausted(budget.orbit.precision);
    const SeriesPolynomial q = conjugate(p, normalization_map(m));
    Exponent working = std::min(budget.orbit.precision, 2 * need);
    for (;;) {
        NormalizedOrbit o{q, m, working, {}, false};
        LaurentSeries w = a.shifted(m).truncated(working);
        bool short_precision = false;
        for (int n = 0; n <= budget.orbit.iterations; ++n) {
            if (w.precision() && *w.precision() < need) {
                short_precision = true;
                break;
            }
            o.points.push_back(w);
            if (n == budget.orbit.iterations) break;
            if (coefficient_bits(w) > budget.orbit.max_coefficient_bits) {
                o.size_stopped = true;
                break;
            }
            w = evaluate(q, w).truncated(working);
        }
        if (!short_precision) return o;
        if (working >= budget.orbit.precision) throw PrecisionExhausted(budget.orbit.precision);
        working = std::min(working * 2, budget.orbit.precision);
    }
}

/// Smallest period p with a periodic tail of at least three periods, and the
/// index where that tail starts.
inline std::optional<std::pair<int, int>> eventual_period(const std::vector<LaurentSeries>& u) {
    const int len = static_cast<int>(u.size());
    for (int p = 1; 3 * p < len; ++p) {
        int start = len - p;
        while (start > 0 && u[static_cast<std::size_t>(start - 1)] == u[static_cast<std::size_t>(start - 1 + p)]) --start;
        if (len - start >= 3 * p) return std::make_pair(start, p);
    }
    return std::nullopt;
}

inline LaurentSeries iterate_exact(const SeriesPolynomial& q, LaurentSeries z, int n) {
    for (int k = 0; k < n; ++k) z = evaluate(q, z);
    return z;
}

/// (P^p)'(z) = prod_k P'(P^k z).
inline LaurentSeries cycle_multiplier(const SeriesPolynomial& q, LaurentSeries z, int p) {
    LaurentSeries mult = LaurentSeries::constant(1);
    for (int k = 0; k < p; ++k) {
        mult *= evaluate_derivative(q, z);
        z = evaluate(q, z);
    }
    return mult;
}

inline std::optional<cert::ConvergentOrbit> try_convergent(const NormalizedOrbit& o, const std::vector<LaurentSeries>& u) {
    const auto period = eventual_period(u);
    if (!period) return std::nullopt;
    const auto [start, p] = *period;
    const auto& w = o.points;
    const std::size_t last = w.size() - 1;

    // val(w_{n+p} - w_n) must grow strictly over each period until the
    // difference vanishes to the working precision.
    std::vector<std::optional<Exponent>> vals;
    for (std::size_t n = static_cast<std::size_t>(start); n + static_cast<std::size_t>(p) <= last; ++n) {
        const LaurentSeries diff = w[n + static_cast<std::size_t>(p)] - w[n];
        if (diff.is_zero_to_precision()) vals.emplace_back();
        else vals.emplace_back(diff.lowest_exponent());
    }
    if (vals.empty() || vals.back()) return std::nullopt;
    for (std::size_t i = 0; i + static_cast<std::size_t>(p) < vals.size(); ++i) {
        const auto& a = vals[i];
        const auto& b = vals[i + static_cast<std::size_t>(p)];
        if (!a && b) return std::nullopt;
        if (a && b && *b <= *a) return std::nullopt;
    }

    LaurentSeries limit = w[last];
    const LaurentSeries mult = cycle_multiplier(o.poly, limit, p);
    if (!mult.is_exact_zero() && mult.valuation_lower_bound() <= 0) return std::nullopt;

    // Newton on F(z) = P^p(z) - z; F' = (P^p)' - 1 is a unit.
    for (int step = 0; step < 16; ++step) {
        const LaurentSeries f = iterate_exact(o.poly, limit, p) - limit;
        if (f.is_zero_to_precision()) break;
        const LaurentSeries df = cycle_multiplier(o.poly, limit, p) - LaurentSeries::constant(1);
        limit = (limit - f * invert_unit(df, o.working)).truncated(o.working);
    }
    const LaurentSeries residual = iterate_exact(o.poly, limit, p) - limit;
    if (!residual.is_zero_to_precision()) return std::nullopt;
    return cert::ConvergentOrbit{limit.shifted(-o.m), start, p};
}

inline std::optional<cert::PeriodicBall> try_periodic_ball(const NormalizedOrbit& o, Exponent level) {
    const auto& w = o.points;
    for (Exponent r = level; r >= 0; --r) {
        std::map<std::string, std::vector<std::size_t>> groups;
        std::vector<std::string> order;
        for (std::size_t n = 0; n < w.size(); ++n) {
            const std::string key = polynomial_part(w[n], r).to_string();
            auto [it, fresh] = groups.try_emplace(key);
            if (fresh) order.push_back(key);
            it->second.push_back(n);
        }
        for (const auto& key : order) {
            const auto& idx = groups[key];
            std::vector<Rational> residues;
            for (std::size_t n : idx) {
                const Rational c = w[n].coefficient(r);
                if (std::find(residues.begin(), residues.end(), c) == residues.end()) residues.push_back(c);
            }
            if (residues.size() < 3) continue;
            const Ball x = Ball::closed(w[idx.front()], r);
            std::vector<int> gaps;
            for (std::size_t i = 1; i < idx.size(); ++i) gaps.push_back(static_cast<int>(idx[i] - idx[i - 1]));
            std::sort(gaps.begin(), gaps.end());
            gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());
            for (int p : gaps) {
                try {
                    if (image_power(o.poly, x, p) == x) {
                        return cert::PeriodicBall{Ball::closed(x.center.shifted(-o.m), r - o.m),
                                                  static_cast<int>(idx.front()), p};
                    }
                } catch (const IndistinguishableFromZero&) {
                }
            }
        }
    }
    return std::nullopt;
}

inline std::optional<cert::CompactAnchors> try_anchors(const NormalizedOrbit& o, const std::vector<LaurentSeries>& u,
                                                       Exponent level) {
    cert::CompactAnchors c{level, o.m, {}, {}};
    for (const auto& x : u) {
        auto it = std::find(c.anchors.begin(), c.anchors.end(), x);
        if (it == c.anchors.end()) {
            c.anchors.push_back(x);
            c.recurrence.push_back(c.anchors.size() - 1);
        } else {
            c.recurrence.push_back(static_cast<std::size_t>(it - c.anchors.begin()));
        }
    }
    // Recurrent: the second half of the orbit only revisits anchors already
    // seen in the first half.
    const std::size_t half = u.size() / 2;
    if (half < 2) return std::nullopt;
    const std::size_t seen = 1 + *std::max_element(c.recurrence.begin(), c.recurrence.begin() + static_cast<std::ptrdiff_t>(half) + 1);
    for (std::size_t n = half + 1; n < u.size(); ++n) {
        if (c.recurrence[n] >= seen) return std::nullopt;
    }
    return c;
}

} // namespace detail

inline OrbitClassification classify(const SeriesPolynomial& p, const LaurentSeries& a, const ClassifyBudget& budget = {}) {
    if (budget.orbit.iterations < 1 || budget.orbit.precision < 1 || budget.anchor_level < 1)
        throw Error("classify needs positive budgets and anchor level >= 1");
    const GreenOutcome g = green_exact(p, a, budget.orbit);
    if (const auto* e = std::get_if<EscapeResult>(&g)) return cert::Escape{e->alpha, e->escape_iterate};
    const auto& bounded = std::get<BoundedSoFar>(g);
    if (bounded.reason == StopReason::CoefficientGrowth) {
        return cert::Undetermined{bounded.iterations, bounded.working_precision, budget.anchor_level,
                                  "rational coefficients exceeded the size budget before escape was decided"};
    }

    const Exponent m = std::max<Exponent>(0, bounded.max_log_norm.value_or(0));
    const auto orbit = detail::normalized_orbit(p, a, m, budget);
    std::vector<LaurentSeries> u;
    for (const auto& w : orbit.points) u.push_back(polynomial_part(w, budget.anchor_level + 1));

    if (auto c = detail::try_convergent(orbit, u)) return *c;
    if (auto b = detail::try_periodic_ball(orbit, budget.anchor_level)) return *b;
    if (auto c = detail::try_anchors(orbit, u, budget.anchor_level)) return *c;
    return cert::Undetermined{static_cast<int>(orbit.points.size()) - 1, orbit.working, budget.anchor_level,
                              orbit.size_stopped ? "rational coefficients exceeded the size budget"
                                                 : "no certificate within the iteration budget"};
}

/// Re-checks a certificate from (P, a) alone.
inline bool verify_certificate(const SeriesPolynomial& p, const LaurentSeries& a, const OrbitClassification& c,
                               const ClassifyBudget& budget = {}) {
    if (const auto* e = std::get_if<cert::Escape>(&c)) {
        const LaurentSeries z = iterate(p, a, e->n, budget.orbit);
        const Rational rho = escape_log_radius(p);
        const Exponent log_norm = -z.unit_valuation();
        if (!(detail::to_rational(log_norm) > rho)) return false;
        const int d = p.degree();
        Rational alpha = (detail::to_rational(log_norm) -
                          Rational(detail::to_rational(p.leading().unit_valuation()) / (d - 1))) /
                         detail::power(d, e->n);
        alpha.canonicalize();
        return alpha == e->alpha && sgn(alpha) > 0;
    }
    if (const auto* b = std::get_if<cert::PeriodicBall>(&c)) {
        if (!(image_power(p, b->ball, b->period) == b->ball)) return false;
        return contains(b->ball, Ball::point(iterate(p, a, b->preperiod, budget.orbit)));
    }
    if (const auto* v = std::get_if<cert::ConvergentOrbit>(&c)) {
        LaurentSeries z = v->limit;
        for (int k = 0; k < v->period; ++k) z = evaluate(p, z);
        return agree(z, v->limit);
    }
    if (const auto* k = std::get_if<cert::CompactAnchors>(&c)) {
        const auto orbit = detail::normalized_orbit(p, a, k->normalization_exponent,
                                                    ClassifyBudget{budget.orbit, k->level});
        if (orbit.points.size() != k->recurrence.size()) return false;
        for (std::size_t n = 0; n < orbit.points.size(); ++n) {
            if (k->recurrence[n] >= k->anchors.size()) return false;
            if (!(polynomial_part(orbit.points[n], k->level + 1) == k->anchors[k->recurrence[n]])) return false;
        }
        return true;
    }
    return false;
}

} // namespace greendeg
