#pragma once

// Roots of a polynomial over the Laurent-series field by Newton polygons,
// restricted to branches whose data stays rational after a base change
// t -> t^N.

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "series.hpp"

namespace greendeg {

/// A root in the variable s = t^{1/N}.
struct PuiseuxBranch {
    LaurentSeries root;
    int multiplicity = 1;
};

struct PuiseuxRoots {
    Exponent base_change = 1;
    std::vector<PuiseuxBranch> branches;
};

namespace detail {

using AscPoly = std::vector<LaurentSeries>;

struct NeedBaseChange {
    Exponent factor;
};

inline LaurentSeries eval_asc(const AscPoly& f, const LaurentSeries& z) {
    LaurentSeries acc = f.back();
    for (std::size_t i = f.size() - 1; i-- > 0;) acc = acc * z + f[i];
    return acc;
}

inline AscPoly derivative(const AscPoly& f) {
    AscPoly out;
    for (std::size_t i = 1; i < f.size(); ++i) out.push_back(Rational(static_cast<long>(i)) * f[i]);
    if (out.empty()) out.emplace_back();
    return out;
}

/// f(c + u w) as a polynomial in w.
inline AscPoly compose_affine(const AscPoly& f, const LaurentSeries& c, const LaurentSeries& u) {
    AscPoly acc{f.back()};
    for (std::size_t i = f.size() - 1; i-- > 0;) {
        AscPoly next(acc.size() + 1);
        for (std::size_t k = 0; k < acc.size(); ++k) {
            next[k] += acc[k] * c;
            next[k + 1] += acc[k] * u;
        }
        next[0] += f[i];
        acc = std::move(next);
    }
    return acc;
}

inline std::vector<Integer> divisors(Integer n) {
    n = abs(n);
    if (n == 0) return {};
    if (mpz_sizeinbase(n.get_mpz_t(), 2) > 62) throw PuiseuxObstruction("residual coefficient too large to factor");
    std::vector<Integer> small, large;
    for (Integer k = 1; k * k <= n; ++k) {
        if (mpz_divisible_p(n.get_mpz_t(), k.get_mpz_t())) {
            small.push_back(k);
            if (k * k != n) large.push_back(n / k);
        }
    }
    small.insert(small.end(), large.rbegin(), large.rend());
    return small;
}

inline Rational eval_rational(const std::vector<Rational>& r, const Rational& y) {
    Rational acc = r.back();
    for (std::size_t i = r.size() - 1; i-- > 0;) acc = acc * y + r[i];
    return acc;
}

/// Divides r (ascending) by (y - root).
inline std::vector<Rational> deflate(const std::vector<Rational>& r, const Rational& root) {
    std::vector<Rational> q(r.size() - 1);
    Rational carry = 0;
    for (std::size_t i = r.size() - 1; i-- > 0;) {
        carry = r[i + 1] + carry * root;
        q[i] = carry;
    }
    return q;
}

/// Rational roots with multiplicity; nullopt unless r splits over Q.
inline std::optional<std::vector<std::pair<Rational, int>>> rational_roots(std::vector<Rational> r) {
    std::vector<std::pair<Rational, int>> out;
    while (r.size() > 1) {
        Integer den = 1;
        for (const auto& c : r) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den_mpz_t());
        std::vector<Integer> ints;
        for (const auto& c : r) ints.push_back(Integer(c * den));
        std::optional<Rational> found;
        for (const auto& p : divisors(ints.front())) {
            for (const auto& q : divisors(ints.back())) {
                for (int sign : {1, -1}) {
                    Rational y(sign * p, q);
                    y.canonicalize();
                    if (sgn(eval_rational(r, y)) == 0) {
                        found = y;
                        break;
                    }
                }
                if (found) break;
            }
            if (found) break;
        }
        if (!found) return std::nullopt;
        r = deflate(r, *found);
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == *found; });
        if (it == out.end()) out.emplace_back(*found, 1);
        else ++it->second;
    }
    return out;
}

/// Newton lifting of a simple root from its leading term.
inline LaurentSeries lift_simple_root(const AscPoly& f, LaurentSeries z, Exponent target) {
    const AscPoly df = derivative(f);
    for (int step = 0; step < 64; ++step) {
        const LaurentSeries fz = eval_asc(f, z);
        if (fz.is_zero_to_precision()) break;
        const LaurentSeries correction = fz * invert_unit(eval_asc(df, z), target);
        z = (z - correction).truncated(z.valuation_lower_bound() + target);
        if (correction.valuation_lower_bound() >= z.valuation_lower_bound() + target) break;
    }
    return z;
}

struct RootSearch {
    Exponent target;
    int depth_cap = 64;
};

/// Roots of f (ascending); with `positive_only`, only roots of valuation > 0.
inline std::vector<PuiseuxBranch> newton_puiseux(AscPoly f, bool positive_only, const RootSearch& rs, int depth) {
    if (depth > rs.depth_cap) throw PuiseuxObstruction("Newton-Puiseux recursion did not terminate");
    while (f.size() > 1 && f.back().is_exact_zero()) f.pop_back();
    std::vector<PuiseuxBranch> out;

    // Vanishing low coefficients give the root 0 (exactly, or to precision).
    std::size_t k0 = 0;
    while (k0 < f.size() && f[k0].is_zero_to_precision()) ++k0;
    if (k0 == f.size()) throw IndistinguishableFromZero(f.back().valuation_lower_bound());
    if (k0 > 0) {
        Exponent prec = std::numeric_limits<Exponent>::max();
        bool exact = true;
        for (std::size_t i = 0; i < k0; ++i) {
            if (!f[i].is_exact_zero()) {
                exact = false;
                prec = std::min(prec, f[i].valuation_lower_bound());
            }
        }
        out.push_back({exact ? LaurentSeries() : LaurentSeries::zero_to(std::max<Exponent>(1, prec)), static_cast<int>(k0)});
        f.erase(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(k0));
    }
    const std::size_t n = f.size() - 1;
    if (n == 0) return out;
    if (f.back().is_zero_to_precision()) throw IndistinguishableFromZero(f.back().valuation_lower_bound());

    // Lower convex hull of (i, v_i).
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i <= n; ++i)
        if (!f[i].is_zero_to_precision()) pts.push_back(i);
    auto v = [&](std::size_t i) { return f[i].lowest_exponent(); };
    std::vector<std::size_t> hull;
    for (std::size_t i : pts) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull.back();
            // drop b when it lies on or above segment a-i
            const Exponent lhs = (v(b) - v(a)) * static_cast<Exponent>(i - a);
            const Exponent rhs = (v(i) - v(a)) * static_cast<Exponent>(b - a);
            if (lhs >= rhs) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }

    for (std::size_t e = 0; e + 1 < hull.size(); ++e) {
        const std::size_t i = hull[e], j = hull[e + 1];
        const Exponent rise = v(i) - v(j);
        const Exponent run = static_cast<Exponent>(j - i);
        // roots on this edge have valuation mu = rise / run
        if (positive_only && rise <= 0) continue;
        if (rise % run != 0) throw NeedBaseChange{run / std::gcd(rise < 0 ? -rise : rise, run)};
        const Exponent mu = rise / run;
        std::vector<Rational> residual;
        for (std::size_t k = i; k <= j; ++k) {
            const bool on_edge = !f[k].is_zero_to_precision() && v(k) + static_cast<Exponent>(k) * mu == v(i) + static_cast<Exponent>(i) * mu;
            residual.push_back(on_edge ? f[k].leading_coefficient() : Rational(0));
        }
        const auto roots = rational_roots(residual);
        if (!roots) throw PuiseuxObstruction("residual polynomial does not split over Q");
        for (const auto& [y, m] : *roots) {
            const LaurentSeries lead = LaurentSeries::monomial(y, mu);
            if (m == 1) {
                out.push_back({lift_simple_root(f, lead, rs.target), 1});
                continue;
            }
            const auto g = compose_affine(f, lead, LaurentSeries::t_power(mu));
            for (auto& b : newton_puiseux(g, true, rs, depth + 1)) {
                out.push_back({lead + b.root.shifted(mu), b.multiplicity});
            }
        }
    }
    return out;
}

} // namespace detail

/// All roots of sum_i f_i z^i, after the smallest base change t -> t^N (N <=
/// max_base_change) making every Newton-polygon slope integral. Throws
/// PuiseuxObstruction when a residual polynomial does not split over Q.
inline PuiseuxRoots rational_puiseux_roots(const std::vector<LaurentSeries>& ascending, Exponent target = 64,
                                           Exponent max_base_change = 24) {
    Exponent n = 1;
    for (;;) {
        detail::AscPoly f;
        for (const auto& c : ascending) f.push_back(substitute_power(c, n));
        try {
            return PuiseuxRoots{n, detail::newton_puiseux(f, false, detail::RootSearch{target}, 0)};
        } catch (const detail::NeedBaseChange& need) {
            n *= need.factor;
            if (n > max_base_change) throw PuiseuxObstruction("base change beyond t -> t^" + std::to_string(max_base_change));
        }
    }
}

} // namespace greendeg
