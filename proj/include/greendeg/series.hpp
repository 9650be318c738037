#pragma once

// Truncated Laurent series over Q with the t-adic valuation, normalized by
// |t| = e^{-1}, so log|f| = -valuation(f).

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace greendeg {

using Rational = mpq_class;
using Integer = mpz_class;
using Exponent = std::int64_t;

/// Valuation or log-radius; std::nullopt encodes +infinity.
using ExtendedExponent = std::optional<Exponent>;

namespace detail {

inline Exponent checked_add(Exponent a, Exponent b) {
    Exponent r;
    if (__builtin_add_overflow(a, b, &r)) throw ExponentOverflow();
    return r;
}

inline Exponent checked_sub(Exponent a, Exponent b) {
    Exponent r;
    if (__builtin_sub_overflow(a, b, &r)) throw ExponentOverflow();
    return r;
}

inline Exponent checked_mul(Exponent a, Exponent b) {
    Exponent r;
    if (__builtin_mul_overflow(a, b, &r)) throw ExponentOverflow();
    return r;
}

inline std::optional<Exponent> min_opt(std::optional<Exponent> a, std::optional<Exponent> b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
}

/// Exact k-th root of a rational, if one exists.
inline std::optional<Rational> rational_root(const Rational& q, unsigned long k) {
    if (k == 1) return q;
    if (sgn(q) == 0) return Rational(0);
    Integer num = q.get_num();
    const Integer& den = q.get_den();
    bool negative = sgn(num) < 0;
    if (negative) {
        if (k % 2 == 0) return std::nullopt;
        num = -num;
    }
    Integer rn, rd;
    if (mpz_root(rn.get_mpz_t(), num.get_mpz_t(), k) == 0) return std::nullopt;
    if (mpz_root(rd.get_mpz_t(), den.get_mpz_t(), k) == 0) return std::nullopt;
    Rational r(negative ? Integer(-rn) : rn, rd);
    r.canonicalize();
    return r;
}

} // namespace detail

/// Result of evaluating a truncated series at a concrete complex parameter.
struct ComplexEvaluation {
    std::complex<double> value;
    /// Size estimate of the first omitted term; 0 for exact series.
    double tail_estimate = 0.0;
    bool truncation_warning = false;
};

class LaurentSeries {
public:
    /// Exact zero.
    LaurentSeries() = default;

    /// Builds a series from raw data and normalizes it. `coefficients[i]`
    /// multiplies t^(lowest + i); entries at or beyond `precision` are dropped.
    LaurentSeries(Exponent lowest, std::vector<Rational> coefficients,
                  std::optional<Exponent> precision = std::nullopt)
        : low_(lowest), c_(std::move(coefficients)), prec_(precision) {
        normalize();
    }

    static LaurentSeries constant(const Rational& c) { return monomial(c, 0); }

    static LaurentSeries monomial(const Rational& c, Exponent e) {
        return LaurentSeries(e, {c});
    }

    /// The series t^e.
    static LaurentSeries t_power(Exponent e) { return monomial(Rational(1), e); }

    /// A series known only to be O(t^precision).
    static LaurentSeries zero_to(Exponent precision) { return LaurentSeries(0, {}, precision); }

    bool is_exact() const noexcept { return !prec_.has_value(); }
    std::optional<Exponent> precision() const noexcept { return prec_; }
    Exponent lowest_exponent() const noexcept { return low_; }
    const std::vector<Rational>& coefficients() const noexcept { return c_; }

    bool is_exact_zero() const noexcept { return c_.empty() && !prec_; }
    /// True when no nonzero digit is known (exact zero included).
    bool is_zero_to_precision() const noexcept { return c_.empty(); }
    bool is_monomial() const noexcept { return c_.size() == 1; }

    /// One past the highest stored exponent.
    Exponent end_exponent() const { return detail::checked_add(low_, static_cast<Exponent>(c_.size())); }

    /// Coefficient of t^e. Throws when e is not a known digit.
    Rational coefficient(Exponent e) const {
        if (prec_ && e >= *prec_) {
            throw Error("coefficient of t^" + std::to_string(e) + " lies beyond precision O(t^" +
                        std::to_string(*prec_) + ")");
        }
        if (c_.empty() || e < low_ || e >= end_exponent()) return Rational(0);
        return c_[static_cast<std::size_t>(e - low_)];
    }

    const Rational& leading_coefficient() const {
        if (c_.empty()) throw IndistinguishableFromZero(valuation_lower_bound());
        return c_.front();
    }

    /// Index of the first nonzero coefficient; nullopt for exact zero.
    ExtendedExponent valuation() const {
        if (!c_.empty()) return low_;
        if (!prec_) return std::nullopt;
        throw IndistinguishableFromZero(*prec_);
    }

    /// Valuation for series known to be nonzero.
    Exponent unit_valuation() const {
        auto v = valuation();
        if (!v) throw Error("valuation of exact zero is infinite");
        return *v;
    }

    /// Certified lower bound on the valuation (max for exact zero).
    Exponent valuation_lower_bound() const noexcept {
        if (!c_.empty()) return low_;
        if (prec_) return *prec_;
        return std::numeric_limits<Exponent>::max();
    }

    /// Decides valuation(f) >= m, throwing when the decisive digit is unknown.
    bool valuation_at_least(Exponent m) const {
        if (!c_.empty()) return low_ >= m;
        if (!prec_ || *prec_ >= m) return true;
        throw IndistinguishableFromZero(*prec_);
    }

    /// Lowers the precision to at most m. Exact series whose support lies
    /// below m stay exact.
    LaurentSeries truncated(Exponent m) const {
        if (prec_ && *prec_ <= m) return *this;
        if (!prec_ && (c_.empty() || end_exponent() <= m)) return *this;
        LaurentSeries r = *this;
        r.prec_ = m;
        r.normalize();
        return r;
    }

    /// Same digits with precision forced to m (m may exceed the current one;
    /// used only for values known exactly by construction).
    LaurentSeries with_precision(std::optional<Exponent> m) const {
        LaurentSeries r = *this;
        r.prec_ = m;
        r.normalize();
        return r;
    }

    LaurentSeries operator-() const {
        LaurentSeries r = *this;
        for (auto& c : r.c_) c = -c;
        return r;
    }

    friend LaurentSeries operator+(const LaurentSeries& f, const LaurentSeries& g) {
        return add_scaled(f, g, 1);
    }

    friend LaurentSeries operator-(const LaurentSeries& f, const LaurentSeries& g) {
        return add_scaled(f, g, -1);
    }

    friend LaurentSeries operator*(const LaurentSeries& f, const LaurentSeries& g) {
        if (f.is_exact_zero() || g.is_exact_zero()) return LaurentSeries();
        const Exponent vf = f.valuation_lower_bound();
        const Exponent vg = g.valuation_lower_bound();
        std::optional<Exponent> prec;
        if (f.prec_) prec = detail::checked_add(vg, *f.prec_);
        if (g.prec_) prec = detail::min_opt(prec, detail::checked_add(vf, *g.prec_));
        if (f.c_.empty() || g.c_.empty()) return LaurentSeries(0, {}, prec);

        const Exponent low = detail::checked_add(f.low_, g.low_);
        std::size_t len = f.c_.size() + g.c_.size() - 1;
        if (prec) {
            Exponent room = *prec - low;
            if (room <= 0) return LaurentSeries(0, {}, prec);
            len = std::min<std::size_t>(len, static_cast<std::size_t>(room));
        }
        std::vector<Rational> out(len);
        for (std::size_t i = 0; i < f.c_.size() && i < len; ++i) {
            if (sgn(f.c_[i]) == 0) continue;
            const std::size_t jmax = std::min(g.c_.size(), len - i);
            for (std::size_t j = 0; j < jmax; ++j) {
                out[i + j] += f.c_[i] * g.c_[j];
            }
        }
        return LaurentSeries(low, std::move(out), prec);
    }

    friend LaurentSeries operator*(const Rational& s, const LaurentSeries& f) {
        if (sgn(s) == 0) return LaurentSeries();
        LaurentSeries r = f;
        for (auto& c : r.c_) c *= s;
        return r;
    }

    LaurentSeries& operator+=(const LaurentSeries& g) { return *this = *this + g; }
    LaurentSeries& operator-=(const LaurentSeries& g) { return *this = *this - g; }
    LaurentSeries& operator*=(const LaurentSeries& g) { return *this = *this * g; }

    /// Multiplication by t^e (shifts exponents and precision).
    LaurentSeries shifted(Exponent e) const {
        LaurentSeries r = *this;
        if (!r.c_.empty()) r.low_ = detail::checked_add(r.low_, e);
        if (r.prec_) r.prec_ = detail::checked_add(*r.prec_, e);
        return r;
    }

    /// Digit-wise identity including precision.
    friend bool operator==(const LaurentSeries& f, const LaurentSeries& g) {
        return f.low_ == g.low_ && f.prec_ == g.prec_ && f.c_ == g.c_;
    }

    /// True when f and g agree on every digit known to both.
    friend bool agree(const LaurentSeries& f, const LaurentSeries& g) {
        return (f - g).is_zero_to_precision();
    }

    std::string to_string() const;

    friend std::ostream& operator<<(std::ostream& os, const LaurentSeries& f) {
        return os << f.to_string();
    }

private:
    static LaurentSeries add_scaled(const LaurentSeries& f, const LaurentSeries& g, int sign) {
        const std::optional<Exponent> prec = detail::min_opt(f.prec_, g.prec_);
        if (f.c_.empty() && g.c_.empty()) return LaurentSeries(0, {}, prec);
        Exponent low = std::numeric_limits<Exponent>::max();
        Exponent high = std::numeric_limits<Exponent>::min();
        for (const LaurentSeries* s : {&f, &g}) {
            if (s->c_.empty()) continue;
            low = std::min(low, s->low_);
            high = std::max(high, s->end_exponent());
        }
        if (prec) high = std::min(high, *prec);
        if (high <= low) return LaurentSeries(0, {}, prec);
        std::vector<Rational> out(static_cast<std::size_t>(high - low));
        for (std::size_t i = 0; i < f.c_.size(); ++i) {
            Exponent e = f.low_ + static_cast<Exponent>(i);
            if (e >= high) break;
            out[static_cast<std::size_t>(e - low)] += f.c_[i];
        }
        for (std::size_t i = 0; i < g.c_.size(); ++i) {
            Exponent e = g.low_ + static_cast<Exponent>(i);
            if (e >= high) break;
            if (sign > 0) out[static_cast<std::size_t>(e - low)] += g.c_[i];
            else out[static_cast<std::size_t>(e - low)] -= g.c_[i];
        }
        return LaurentSeries(low, std::move(out), prec);
    }

    void normalize() {
        if (prec_ && !c_.empty()) {
            const Exponent room = *prec_ - low_;
            if (room <= 0) c_.clear();
            else if (static_cast<std::size_t>(room) < c_.size()) c_.resize(static_cast<std::size_t>(room));
        }
        std::size_t lead = 0;
        while (lead < c_.size() && sgn(c_[lead]) == 0) ++lead;
        if (lead == c_.size()) {
            c_.clear();
            low_ = 0;
            return;
        }
        if (lead > 0) {
            c_.erase(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(lead));
            low_ = detail::checked_add(low_, static_cast<Exponent>(lead));
        }
        while (sgn(c_.back()) == 0) c_.pop_back();
    }

    Exponent low_ = 0;
    std::vector<Rational> c_;
    std::optional<Exponent> prec_;
};

/// valuation(f) as a free function; nullopt encodes +infinity.
inline ExtendedExponent valuation(const LaurentSeries& f) { return f.valuation(); }

namespace detail {

/// u^alpha for a unit u = 1 + w_1 t + ..., first `n` coefficients, via
/// n h_n = sum_{j=1..n} (alpha j - (n - j)) w_j h_{n-j}.
inline std::vector<Rational> unit_power(const std::vector<Rational>& w, const Rational& alpha,
                                        std::size_t n) {
    std::vector<Rational> h(n);
    if (n == 0) return h;
    h[0] = 1;
    for (std::size_t k = 1; k < n; ++k) {
        Rational acc = 0;
        const std::size_t jmax = std::min(k, w.size() - 1);
        for (std::size_t j = 1; j <= jmax; ++j) {
            if (sgn(w[j]) == 0) continue;
            acc += (alpha * Rational(static_cast<long>(j)) - Rational(static_cast<long>(k - j))) * w[j] *
                   h[k - j];
        }
        h[k] = acc / Rational(static_cast<long>(k));
    }
    return h;
}

/// Relative precision actually available when asking for `target` digits.
inline std::size_t relative_digits(const LaurentSeries& f, Exponent target) {
    Exponent rel = std::max<Exponent>(target, 1);
    if (f.precision()) rel = std::min(rel, *f.precision() - f.lowest_exponent());
    return static_cast<std::size_t>(std::max<Exponent>(rel, 1));
}

enum class RootFailure { None, OddValuation, NoRationalRoot };

/// f^(1/k) with branch fixed by the positive real root of the leading rational.
inline std::pair<std::optional<LaurentSeries>, RootFailure> try_root(const LaurentSeries& f, unsigned long k,
                                                                      Exponent target) {
    const ExtendedExponent v = f.valuation();
    if (!v) return {LaurentSeries(), RootFailure::None};
    if (*v % static_cast<Exponent>(k) != 0) return {std::nullopt, RootFailure::OddValuation};
    const auto lead = rational_root(f.leading_coefficient(), k);
    if (!lead) return {std::nullopt, RootFailure::NoRationalRoot};
    const Exponent out_low = *v / static_cast<Exponent>(k);
    if (f.is_exact() && f.is_monomial()) return {LaurentSeries::monomial(*lead, out_low), RootFailure::None};

    const std::size_t n = relative_digits(f, target);
    std::vector<Rational> w(std::min(n, f.coefficients().size()));
    const Rational inv = 1 / f.leading_coefficient();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = f.coefficients()[i] * inv;
    std::vector<Rational> h = unit_power(w, Rational(1, static_cast<long>(k)), n);
    for (auto& c : h) c *= *lead;
    return {LaurentSeries(out_low, std::move(h), checked_add(out_low, static_cast<Exponent>(n))), RootFailure::None};
}

} // namespace detail

/// 1/f to `target_precision` relative digits (fewer if f is less precise).
/// Exact monomials invert exactly.
inline LaurentSeries invert_unit(const LaurentSeries& f, Exponent target_precision) {
    const ExtendedExponent v = f.valuation();
    if (!v) throw Error("cannot invert exact zero");
    const Exponent out_low = detail::checked_sub(0, *v);
    if (f.is_exact() && f.is_monomial()) return LaurentSeries::monomial(1 / f.leading_coefficient(), out_low);

    const std::size_t n = detail::relative_digits(f, target_precision);
    const auto& c = f.coefficients();
    std::vector<Rational> g(n);
    const Rational inv0 = 1 / c[0];
    g[0] = inv0;
    for (std::size_t k = 1; k < n; ++k) {
        Rational acc = 0;
        const std::size_t jmax = std::min(k, c.size() - 1);
        for (std::size_t j = 1; j <= jmax; ++j) {
            if (sgn(c[j]) != 0) acc += c[j] * g[k - j];
        }
        g[k] = -acc * inv0;
    }
    return LaurentSeries(out_low, std::move(g), detail::checked_add(out_low, static_cast<Exponent>(n)));
}

/// Square root to `target_precision` relative digits.
inline LaurentSeries sqrt(const LaurentSeries& f, Exponent target_precision) {
    auto [root, failure] = detail::try_root(f, 2, target_precision);
    if (failure == detail::RootFailure::OddValuation) throw NotASquare("odd valuation");
    if (failure == detail::RootFailure::NoRationalRoot)
        throw NotASquare("leading coefficient " + f.leading_coefficient().get_str() + " is not a rational square");
    return *root;
}

/// k-th root to `target_precision` relative digits.
inline LaurentSeries nth_root(const LaurentSeries& f, unsigned long k, Exponent target_precision) {
    if (k == 0) throw Error("zeroth root");
    auto [root, failure] = detail::try_root(f, k, target_precision);
    if (failure == detail::RootFailure::OddValuation)
        throw RootObstruction("valuation not divisible by " + std::to_string(k));
    if (failure == detail::RootFailure::NoRationalRoot)
        throw RootObstruction("leading coefficient " + f.leading_coefficient().get_str() + " has no rational " +
                              std::to_string(k) + "-th root");
    return *root;
}

/// Base change t -> t^n.
inline LaurentSeries substitute_power(const LaurentSeries& f, Exponent n) {
    if (n < 1) throw Error("substitute_power needs n >= 1");
    std::optional<Exponent> prec;
    if (f.precision()) prec = detail::checked_mul(*f.precision(), n);
    if (f.is_zero_to_precision()) return LaurentSeries(0, {}, prec);
    const auto& c = f.coefficients();
    std::vector<Rational> out((c.size() - 1) * static_cast<std::size_t>(n) + 1);
    for (std::size_t i = 0; i < c.size(); ++i) out[i * static_cast<std::size_t>(n)] = c[i];
    return LaurentSeries(detail::checked_mul(f.lowest_exponent(), n), std::move(out), prec);
}

namespace detail {

inline std::complex<double> ipow(std::complex<double> z, Exponent e) {
    if (e < 0) {
        z = 1.0 / z;
        e = -e;
    }
    std::complex<double> r(1.0, 0.0);
    while (e > 0) {
        if (e & 1) r *= z;
        z *= z;
        e >>= 1;
    }
    return r;
}

} // namespace detail

/// Horner evaluation at t0. A truncation warning is attached when the first
/// omitted digit is estimated above `tol` relative to the value.
inline ComplexEvaluation evaluate_complex(const LaurentSeries& f, std::complex<double> t0, double tol = 1e-12) {
    ComplexEvaluation out;
    const auto& c = f.coefficients();
    if (t0 == std::complex<double>(0.0, 0.0)) {
        if (!c.empty() && f.lowest_exponent() < 0) throw ZeroArgumentWithPole();
        out.value = c.empty() ? 0.0 : std::complex<double>(f.coefficient(0).get_d(), 0.0);
        return out;
    }
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * t0 + c[i].get_d();
    out.value = c.empty() ? std::complex<double>(0.0, 0.0) : acc * detail::ipow(t0, f.lowest_exponent());
    if (f.precision()) {
        const double lead = c.empty() ? 1.0 : std::abs(c.back().get_d());
        out.tail_estimate = lead * std::pow(std::abs(t0), static_cast<double>(*f.precision()));
        out.truncation_warning = !(out.tail_estimate <= tol * std::max(1.0, std::abs(out.value)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text form: terms `c*t^e` with c as p/q, optional `+ O(t^M)` suffix.

inline std::string LaurentSeries::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = 0; i < c_.size(); ++i) {
        const Rational& c = c_[i];
        if (sgn(c) == 0) continue;
        const Exponent e = low_ + static_cast<Exponent>(i);
        const bool neg = sgn(c) < 0;
        if (first) os << (neg ? "-" : "");
        else os << (neg ? " - " : " + ");
        os << Rational(abs(c)).get_str();
        if (e != 0) os << "*t^" << e;
        first = false;
    }
    if (prec_) {
        if (!first) os << " + ";
        os << "O(t^" << *prec_ << ")";
    } else if (first) {
        os << "0";
    }
    return os.str();
}

namespace detail {

class SeriesParser {
public:
    SeriesParser(std::string_view text, int line, int column_offset)
        : s_(text), line_(line), col0_(column_offset) {}

    LaurentSeries parse() {
        std::vector<std::pair<Exponent, Rational>> terms;
        std::optional<Exponent> prec;
        skip_ws();
        if (at_end()) fail("empty series");
        bool first = true;
        while (!at_end()) {
            int sign = 1;
            if (peek() == '+' || peek() == '-') {
                sign = peek() == '-' ? -1 : 1;
                ++pos_;
                skip_ws();
            } else if (!first) {
                fail("expected '+' or '-'");
            }
            first = false;
            if (prec) fail("terms after O(...) are not allowed");
            if (peek() == 'O') {
                if (sign < 0) fail("O(...) must be added, not subtracted");
                ++pos_;
                expect('(');
                expect('t');
                Exponent m = 1;
                skip_ws();
                if (peek() == '^') {
                    ++pos_;
                    m = parse_exponent();
                }
                expect(')');
                prec = m;
            } else {
                Rational c(1);
                bool have_coef = false;
                if (std::isdigit(static_cast<unsigned char>(peek()))) {
                    c = parse_rational();
                    have_coef = true;
                }
                skip_ws();
                Exponent e = 0;
                if (have_coef && peek() == '*') {
                    ++pos_;
                    skip_ws();
                    if (peek() != 't') fail("expected 't' after '*'");
                }
                if (peek() == 't') {
                    ++pos_;
                    e = 1;
                    skip_ws();
                    if (peek() == '^') {
                        ++pos_;
                        e = parse_exponent();
                    }
                } else if (!have_coef) {
                    fail("expected coefficient or 't'");
                }
                if (sign < 0) c = -c;
                terms.emplace_back(e, c);
            }
            skip_ws();
        }
        if (terms.empty()) return LaurentSeries(0, {}, prec);
        Exponent low = terms.front().first, high = low;
        for (const auto& [e, c] : terms) {
            low = std::min(low, e);
            high = std::max(high, e);
            if (prec && e >= *prec) fail("term t^" + std::to_string(e) + " lies beyond O(t^" + std::to_string(*prec) + ")");
        }
        if (high - low > (Exponent{1} << 24)) fail("exponent span too large");
        std::vector<Rational> c(static_cast<std::size_t>(high - low + 1));
        for (const auto& [e, v] : terms) c[static_cast<std::size_t>(e - low)] += v;
        return LaurentSeries(low, std::move(c), prec);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what, line_, col0_ + static_cast<int>(pos_) + 1);
    }
    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return at_end() ? '\0' : s_[pos_]; }
    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    void expect(char ch) {
        skip_ws();
        if (peek() != ch) fail(std::string("expected '") + ch + "'");
        ++pos_;
        skip_ws();
    }
    Integer parse_digits() {
        const std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected digits");
        if (peek() == '.' || peek() == 'e' || peek() == 'E') fail("floating-point literals are not allowed");
        return Integer(std::string(s_.substr(start, pos_ - start)));
    }
    Rational parse_rational() {
        Integer num = parse_digits();
        skip_ws();
        Integer den = 1;
        if (peek() == '/') {
            ++pos_;
            skip_ws();
            const std::size_t at = pos_;
            den = parse_digits();
            if (den == 0) {
                pos_ = at;
                fail("zero denominator");
            }
        }
        Rational r(num, den);
        r.canonicalize();
        return r;
    }
    Exponent parse_exponent() {
        skip_ws();
        bool paren = false;
        if (peek() == '(') {
            paren = true;
            ++pos_;
            skip_ws();
        }
        bool neg = false;
        if (peek() == '-' || peek() == '+') {
            neg = peek() == '-';
            ++pos_;
        }
        Integer v = parse_digits();
        if (!v.fits_slong_p()) fail("exponent out of range");
        if (paren) expect(')');
        const Exponent e = v.get_si();
        return neg ? -e : e;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
    int col0_;
};

} // namespace detail

/// Parses the textual form exactly. `line`/`column_offset` locate the text
/// inside an enclosing file for error messages.
inline LaurentSeries parse_series(std::string_view text, int line = 1, int column_offset = 0) {
    return detail::SeriesParser(text, line, column_offset).parse();
}

} // namespace greendeg
