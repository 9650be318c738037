#pragma once

// Floating-point dynamics of P_t at a concrete parameter: Green function
// values with tail bounds, critical points, Lyapunov exponents.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"
#include "series.hpp"

namespace greendeg {

using Complex = std::complex<double>;

/// a_0 z^d + ... + a_d with complex coefficients (leading first).
struct ComplexPoly {
    std::vector<Complex> a;
    /// Set when some coefficient came from a series whose tail may matter.
    bool truncation_warning = false;

    ComplexPoly() = default;
    explicit ComplexPoly(std::vector<Complex> coefficients, bool warning = false)
        : a(std::move(coefficients)), truncation_warning(warning) {
        if (a.size() < 3) throw Error("polynomial degree must be at least 2");
        if (!(std::abs(a.front()) > 1e-300)) throw Error("leading coefficient underflows");
    }

    int degree() const noexcept { return static_cast<int>(a.size()) - 1; }

    Complex operator()(Complex z) const {
        Complex acc = a.front();
        for (std::size_t j = 1; j < a.size(); ++j) acc = acc * z + a[j];
        return acc;
    }
};

enum class GreenStatus { EscapeCertified, BoundedToBudget };

struct GreenValue {
    double value = 0;
    double error_bound = 0;
    GreenStatus status = GreenStatus::BoundedToBudget;
    int iterations = 0;
};

namespace detail {

struct EscapeData {
    double lead_abs;
    /// sum_{i>=1} |a_i|
    double tail_sum;
    /// |z| >= R implies the escape-region conditions below.
    double radius;
    /// log |a_i| for i >= 1 (-inf for zero coefficients).
    std::vector<double> log_tail;
};

inline EscapeData escape_data(const ComplexPoly& p) {
    const int d = p.degree();
    EscapeData e{std::abs(p.a.front()), 0.0, 1.0, {}};
    for (std::size_t i = 1; i < p.a.size(); ++i) {
        e.tail_sum += std::abs(p.a[i]);
        e.log_tail.push_back(std::log(std::abs(p.a[i])));
    }
    e.radius = std::max({1.0, 2.0 * e.tail_sum / e.lead_abs, std::pow(4.0 / e.lead_abs, 1.0 / (d - 1))});
    return e;
}

/// eps(r) = sum_{i>=1} |a_i| r^{-i} / |a_0| bounds |P(z)/(a_0 z^d) - 1| on |z| = r.
inline double relative_tail(const EscapeData& e, double log_r) {
    double eps = 0;
    for (std::size_t i = 0; i < e.log_tail.size(); ++i)
        eps += std::exp(e.log_tail[i] - static_cast<double>(i + 1) * log_r - std::log(e.lead_abs));
    return eps;
}

constexpr double kLogSwitch = 230.2585092994046; // log(1e100)

} // namespace detail

/// g_P(z) = lim d^{-n} log max(1, |P^n z|). Once z_m lies in the escape
/// region (eps_m <= 1/2 and |a_0||z_m|^{d-1} >= 4, so eps halves at each step),
/// g = d^{-m}(log|z_m| + log|a_0|/(d-1)) + tail with |tail| <= 2 d^{-m} eps_m / (d-1).
inline GreenValue green_value(const ComplexPoly& p, Complex z, double tol, int n_max) {
    if (!(tol > 0)) throw Error("green_value needs tol > 0");
    const int d = p.degree();
    const auto esc = detail::escape_data(p);
    const double log_lead = std::log(esc.lead_abs) / (d - 1);
    double scale = 1.0; // d^{-n}
    for (int n = 0;; ++n) {
        const double r = std::abs(z);
        if (!std::isfinite(r)) throw NonFinite("orbit left the floating-point range");
        const double log_r = std::log(r);
        const double eps = r > 0 ? detail::relative_tail(esc, log_r) : INFINITY;
        const bool escaping = r >= 1.0 && eps <= 0.5 && std::log(esc.lead_abs) + (d - 1) * log_r >= std::log(4.0);
        // Past the switchover the next iterate may not be representable, and
        // further steps would not tighten the closed form anyway.
        const bool last = log_r > detail::kLogSwitch;
        if (escaping) {
            const double value = scale * (log_r + log_lead);
            const double err = 2.0 * scale * eps / (d - 1);
            if ((err < tol && err <= value) || ((last || n == n_max) && err <= value)) {
                return GreenValue{value, err, GreenStatus::EscapeCertified, n};
            }
            if (last) throw NonFinite("escape bound not reached before overflow");
        } else if (last) {
            throw NonFinite("escape region beyond the floating-point range");
        }
        if (n == n_max) break;
        z = p(z);
        scale /= d;
    }
    // z_{n_max} is outside the escape region, hence |z| < R, and
    // g <= log R + (log|a_0| + log 1.5)/(d-1) on |w| <= R; g(z) = d^{-n} g(z_n).
    const double cap = std::log(esc.radius) + (std::log(esc.lead_abs) + std::log(1.5)) / (d - 1);
    return GreenValue{0.0, scale * std::max(0.0, cap), GreenStatus::BoundedToBudget, n_max};
}

struct CriticalPoint {
    Complex value;
    int multiplicity = 1;
};

struct CriticalPoints {
    std::vector<CriticalPoint> points;
    bool converged = true;
    double max_residual = 0;
};

namespace detail {

/// Ascending coefficients b_0..b_n of P'.
inline std::vector<Complex> derivative_ascending(const ComplexPoly& p) {
    const int d = p.degree();
    std::vector<Complex> b(static_cast<std::size_t>(d));
    for (int i = 1; i <= d; ++i) b[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) * p.a[static_cast<std::size_t>(d - i)];
    return b;
}

inline std::pair<Complex, Complex> eval_with_derivative(const std::vector<Complex>& b, Complex z) {
    Complex f = b.back(), df = 0;
    for (std::size_t i = b.size() - 1; i-- > 0;) {
        df = df * z + f;
        f = f * z + b[i];
    }
    return {f, df};
}

inline double residual_scale(const std::vector<Complex>& b, Complex z) {
    const double m = std::max(1.0, std::abs(z));
    double s = 0, pw = 1;
    for (const auto& c : b) {
        s += std::abs(c) * pw;
        pw *= m;
    }
    return s;
}

} // namespace detail

/// Roots of P' by Aberth iteration, clustered with multiplicity.
inline CriticalPoints critical_points(const ComplexPoly& p, double tol = 1e-12, std::uint64_t seed = 0x5eedULL) {
    const auto b = detail::derivative_ascending(p);
    const std::size_t n = b.size() - 1;
    if (!(std::abs(b.back()) > 1e-300)) throw Error("derivative leading coefficient underflows");
    std::vector<Complex> z(n);
    if (n == 1) {
        z[0] = -b[0] / b[1];
    } else {
        double bound = 0;
        for (std::size_t k = 1; k <= n; ++k) bound = std::max(bound, std::pow(std::abs(b[n - k] / b[n]), 1.0 / static_cast<double>(k)));
        const double radius = std::max(bound, 1e-3);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> jitter(0.0, 0.5 / static_cast<double>(n));
        const double two_pi = 2.0 * std::acos(-1.0);
        for (std::size_t k = 0; k < n; ++k)
            z[k] = std::polar(radius, two_pi * (static_cast<double>(k) + jitter(rng)) / static_cast<double>(n));
        for (int it = 0; it < 1000; ++it) {
            double biggest_step = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const auto [f, df] = detail::eval_with_derivative(b, z[k]);
                if (f == Complex(0)) continue;
                const Complex ratio = f / df;
                Complex repulsion = 0;
                for (std::size_t j = 0; j < n; ++j)
                    if (j != k) repulsion += 1.0 / (z[k] - z[j]);
                const Complex step = ratio / (1.0 - ratio * repulsion);
                if (std::isfinite(step.real()) && std::isfinite(step.imag())) {
                    z[k] -= step;
                    biggest_step = std::max(biggest_step, std::abs(step) / std::max(1.0, std::abs(z[k])));
                }
            }
            if (biggest_step < 1e-15) break;
        }
    }

    CriticalPoints out;
    for (const auto& c : z) {
        const double res = std::abs(detail::eval_with_derivative(b, c).first) / detail::residual_scale(b, c);
        out.max_residual = std::max(out.max_residual, res);
    }
    out.converged = out.max_residual < tol;

    // Multiple roots are only determined to about sqrt(tol).
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        Complex sum = z[i];
        int mult = 1;
        used[i] = true;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!used[j] && std::abs(z[j] - z[i]) < std::sqrt(tol) * std::max(1.0, std::abs(z[i]))) {
                used[j] = true;
                sum += z[j];
                ++mult;
            }
        }
        out.points.push_back({sum / static_cast<double>(mult), mult});
    }
    return out;
}

struct LyapunovValue {
    double value = 0;
    double error_bound = 0;
    CriticalPoints critical;
};

/// L(P) = log d + sum over critical points (with multiplicity) of g_P(c).
inline LyapunovValue lyapunov(const ComplexPoly& p, double tol, int n_max, std::uint64_t seed = 0x5eedULL) {
    LyapunovValue out;
    out.critical = critical_points(p, tol, seed);
    out.value = std::log(static_cast<double>(p.degree()));
    for (const auto& c : out.critical.points) {
        const auto g = green_value(p, c.value, tol, n_max);
        out.value += c.multiplicity * g.value;
        out.error_bound += c.multiplicity * g.error_bound;
    }
    return out;
}

/// The family at t = t0.
inline ComplexPoly family_at(const std::vector<LaurentSeries>& coefficients, Complex t0, double tol = 1e-12) {
    std::vector<Complex> a;
    bool warning = false;
    for (const auto& c : coefficients) {
        const auto e = evaluate_complex(c, t0, tol);
        a.push_back(e.value);
        warning = warning || e.truncation_warning;
    }
    return ComplexPoly(std::move(a), warning);
}

} // namespace greendeg
