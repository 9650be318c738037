#pragma once

// Shared example families.

#include <vector>

#include <greendeg/formal_dyn.hpp>
#include <greendeg/series.hpp>

namespace greendeg::fixtures {

inline SeriesPolynomial poly(std::initializer_list<const char*> coeffs) {
    std::vector<LaurentSeries> c;
    for (const char* s : coeffs) c.push_back(parse_series(s));
    return SeriesPolynomial(std::move(c));
}

/// Catalan numbers by the convolution recurrence.
inline std::vector<Integer> catalan(int n) {
    std::vector<Integer> c(static_cast<std::size_t>(n), 0);
    c[0] = 1;
    for (int k = 1; k < n; ++k)
        for (int i = 0; i < k; ++i)
            c[static_cast<std::size_t>(k)] += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(k - 1 - i)];
    return c;
}

/// (1 + sqrt(1 - 4t))/2 = 1 - sum_{n>=1} C_{n-1} t^n, the fixed point of
/// z^2 + t near 1, cut below t^k.
inline LaurentSeries repelling_fixed_point(int k) {
    const auto c = catalan(k);
    std::vector<Rational> digits{Rational(1)};
    for (int n = 1; n < k; ++n) digits.push_back(Rational(-c[static_cast<std::size_t>(n - 1)]));
    return LaurentSeries(0, std::move(digits));
}

} // namespace greendeg::fixtures
