#pragma once

// The tree of closed balls B(z, e^{-m}) over the Laurent-series field.

#include <cmath>
#include <optional>
#include <ostream>

#include "formal_dyn.hpp"
#include "series.hpp"

namespace greendeg {

/// Closed ball {w : val(w - center) >= log_radius}, i.e. radius e^{-log_radius}.
/// A missing log_radius encodes a point (radius 0).
struct Ball {
    LaurentSeries center;
    ExtendedExponent log_radius;

    static Ball point(LaurentSeries z) { return {std::move(z), std::nullopt}; }
    static Ball closed(LaurentSeries z, Exponent m) { return {std::move(z), m}; }

    bool is_point() const noexcept { return !log_radius.has_value(); }

    /// diam = e^{-log_radius}, 0 for points.
    double diameter() const { return log_radius ? std::exp(-static_cast<double>(*log_radius)) : 0.0; }
};

namespace detail {

/// a <= b on Z u {+inf}.
inline bool ext_le(ExtendedExponent a, ExtendedExponent b) {
    if (!b) return true;
    if (!a) return false;
    return *a <= *b;
}

inline ExtendedExponent ext_min(ExtendedExponent a, ExtendedExponent b) { return ext_le(a, b) ? a : b; }

/// val(f) >= m for m in Z u {+inf}; +inf requires f to be exactly zero.
inline bool ext_valuation_at_least(const LaurentSeries& f, ExtendedExponent m) {
    if (m) return f.valuation_at_least(*m);
    if (f.is_exact_zero()) return true;
    if (!f.is_zero_to_precision()) return false;
    throw IndistinguishableFromZero(f.valuation_lower_bound());
}

} // namespace detail

/// y is a subset of x.
inline bool contains(const Ball& x, const Ball& y) {
    if (!detail::ext_le(x.log_radius, y.log_radius)) return false;
    return detail::ext_valuation_at_least(x.center - y.center, x.log_radius);
}

inline bool operator==(const Ball& x, const Ball& y) {
    return x.log_radius == y.log_radius && contains(x, y);
}

/// Smallest closed ball containing both.
inline Ball join(const Ball& x, const Ball& y) {
    const ExtendedExponent m = detail::ext_min(x.log_radius, y.log_radius);
    const LaurentSeries diff = x.center - y.center;
    if (detail::ext_valuation_at_least(diff, m)) return Ball{x.center, m};
    return Ball{x.center, diff.unit_valuation()};
}

/// max{|diam(x v y) - diam(x)|, |diam(x v y) - diam(y)|}.
inline double distance(const Ball& x, const Ball& y) {
    const double top = join(x, y).diameter();
    return std::max(std::abs(top - x.diameter()), std::abs(top - y.diameter()));
}

/// P(B(z, r)) = B(P(z), max_i |c_i| r^i) where c_i are the Taylor
/// coefficients of P at z, so log_radius = min_i (val(c_i) + i * m).
inline Ball image(const SeriesPolynomial& p, const Ball& x) {
    if (x.is_point()) return Ball::point(evaluate(p, x.center));
    const Exponent m = *x.log_radius;
    const auto c = taylor_coefficients(p, x.center);
    ExtendedExponent best;
    // Terms whose digits are unknown only give lower bounds; resolve them last.
    std::optional<Exponent> unresolved;
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (c[i].is_exact_zero()) continue;
        const Exponent shift = detail::checked_mul(static_cast<Exponent>(i), m);
        if (c[i].is_zero_to_precision()) {
            const Exponent bound = detail::checked_add(c[i].valuation_lower_bound(), shift);
            unresolved = unresolved ? std::min(*unresolved, bound) : bound;
            continue;
        }
        best = detail::ext_min(best, detail::checked_add(c[i].lowest_exponent(), shift));
    }
    if (unresolved && !detail::ext_le(best, *unresolved)) throw IndistinguishableFromZero(*unresolved);
    if (!best) return Ball::point(c[0]);
    return Ball{c[0], best};
}

/// image applied n times.
inline Ball image_power(const SeriesPolynomial& p, Ball x, int n) {
    for (int k = 0; k < n; ++k) x = image(p, x);
    return x;
}

inline std::ostream& operator<<(std::ostream& os, const Ball& x) {
    os << "B(" << x.center << ", ";
    if (x.log_radius) os << "e^" << -*x.log_radius;
    else os << "0";
    return os << ")";
}

} // namespace greendeg
