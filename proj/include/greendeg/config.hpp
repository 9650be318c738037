#pragma once

// Family configuration files: `key = value` lines, `#` comments.
//
//   name = quadratic_escape
//   degree = 2
//   coefficients = 1, 0, t^-1        # a_0 .. a_d
//   marked a = 0
//   marked c = 0 critical
//   r0 = 1/10
//   levels = 4
//   samples = 16
//   iterations = 200
//   precision = 256
//   anchor_level = 32
//   tol = 1e-10
//   seed = 24301
//
// Series must use exact rationals; only r0 and tol accept decimals.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "classifier.hpp"
#include "degeneration.hpp"
#include "errors.hpp"
#include "formal_dyn.hpp"
#include "series.hpp"

namespace greendeg {

struct MarkedPoint {
    std::string name;
    LaurentSeries value;
    bool critical = false;
};

struct FamilyConfig {
    std::string name;
    std::vector<LaurentSeries> coefficients; // a_0..a_d
    std::vector<MarkedPoint> marked;
    DiagnosticSchedule schedule;
    ClassifyBudget budget;
    double tol = 1e-10;
    std::uint64_t seed = 24301;

    int degree() const { return static_cast<int>(coefficients.size()) - 1; }
    SeriesPolynomial polynomial() const { return SeriesPolynomial(coefficients); }
};

namespace detail {

inline std::string_view trim(std::string_view s, std::size_t& offset) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    offset += b;
    return s.substr(b, e - b);
}

struct Field {
    std::string_view text;
    int line;
    /// 0-based column of text[0].
    int column;
};

inline long long parse_integer(const Field& f, long long lo, long long hi) {
    long long v = 0;
    const auto* end = f.text.data() + f.text.size();
    auto [ptr, ec] = std::from_chars(f.text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError("expected an integer", f.line, f.column + 1);
    if (v < lo || v > hi) {
        throw ParseError("value out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", f.line,
                         f.column + 1);
    }
    return v;
}

/// Decimal or p/q.
inline double parse_real(const Field& f) {
    const std::string s(f.text);
    const auto slash = s.find('/');
    try {
        if (slash != std::string::npos) {
            Rational q(s);
            if (sgn(q.get_den()) == 0) throw ParseError("zero denominator", f.line, f.column + 1);
            q.canonicalize();
            return q.get_d();
        }
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("expected a number", f.line, f.column + 1);
    }
}

} // namespace detail

inline FamilyConfig parse_config(std::istream& in) {
    FamilyConfig cfg;
    std::set<std::string> seen;
    std::optional<int> degree;
    int degree_line = 0, coeff_line = 0;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view(raw);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        std::size_t off = 0;
        view = detail::trim(view, off);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line, static_cast<int>(off) + 1);
        std::size_t key_off = off;
        const std::string_view key = detail::trim(view.substr(0, eq), key_off);
        std::size_t val_off = off + eq + 1;
        const std::string_view value = detail::trim(view.substr(eq + 1), val_off);
        const detail::Field field{value, line, static_cast<int>(val_off)};
        if (value.empty()) throw ParseError("missing value", line, static_cast<int>(val_off) + 1);

        if (key.rfind("marked", 0) == 0 && (key.size() == 6 || std::isspace(static_cast<unsigned char>(key[6])))) {
            std::size_t name_off = key_off + 6;
            const std::string_view name = detail::trim(key.substr(6), name_off);
            if (name.empty()) throw ParseError("marked point needs a name", line, static_cast<int>(key_off) + 1);
            for (char c : name) {
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
                    throw ParseError("marked point names use letters, digits, '_' and '-'", line, static_cast<int>(name_off) + 1);
            }
            MarkedPoint m;
            m.name = std::string(name);
            if (!seen.insert("marked " + m.name).second) throw ParseError("duplicate marked point", line, static_cast<int>(name_off) + 1);
            std::string_view series = value;
            constexpr std::string_view tag = "critical";
            if (series.size() > tag.size() && series.substr(series.size() - tag.size()) == tag &&
                std::isspace(static_cast<unsigned char>(series[series.size() - tag.size() - 1]))) {
                m.critical = true;
                std::size_t unused = 0;
                series = detail::trim(series.substr(0, series.size() - tag.size()), unused);
            }
            m.value = parse_series(series, line, static_cast<int>(val_off));
            cfg.marked.push_back(std::move(m));
            continue;
        }

        const std::string k(key);
        if (!seen.insert(k).second) throw ParseError("duplicate key '" + k + "'", line, static_cast<int>(key_off) + 1);
        if (k == "name") {
            cfg.name = std::string(value);
            for (char c : cfg.name) {
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
                    throw ParseError("names use letters, digits, '_' and '-'", line, static_cast<int>(val_off) + 1);
            }
        } else if (k == "degree") {
            degree = static_cast<int>(detail::parse_integer(field, 2, 64));
            degree_line = line;
        } else if (k == "coefficients") {
            coeff_line = line;
            std::size_t start = 0;
            for (;;) {
                const auto comma = value.find(',', start);
                const std::string_view piece = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
                std::size_t piece_off = val_off + start;
                const std::string_view text = detail::trim(piece, piece_off);
                if (text.empty()) throw ParseError("empty coefficient", line, static_cast<int>(piece_off) + 1);
                cfg.coefficients.push_back(parse_series(text, line, static_cast<int>(piece_off)));
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
        } else if (k == "r0") {
            cfg.schedule.r0 = detail::parse_real(field);
        } else if (k == "levels") {
            cfg.schedule.levels = static_cast<int>(detail::parse_integer(field, 0, 8));
        } else if (k == "samples") {
            cfg.schedule.samples_per_circle = static_cast<int>(detail::parse_integer(field, 1, 4096));
        } else if (k == "iterations") {
            cfg.budget.orbit.iterations = static_cast<int>(detail::parse_integer(field, 1, 100000));
        } else if (k == "precision") {
            cfg.budget.orbit.precision = detail::parse_integer(field, 1, 1 << 20);
        } else if (k == "anchor_level") {
            cfg.budget.anchor_level = detail::parse_integer(field, 1, 1 << 20);
        } else if (k == "tol") {
            cfg.tol = detail::parse_real(field);
            if (!(cfg.tol > 0)) throw ParseError("tol must be positive", line, static_cast<int>(val_off) + 1);
        } else if (k == "seed") {
            cfg.seed = static_cast<std::uint64_t>(detail::parse_integer(field, 0, std::numeric_limits<long long>::max()));
        } else {
            throw ParseError("unknown key '" + k + "'", line, static_cast<int>(key_off) + 1);
        }
    }
    const int end_line = line + 1;
    if (cfg.name.empty()) throw ParseError("missing 'name'", end_line, 1);
    if (cfg.coefficients.empty()) throw ParseError("missing 'coefficients'", end_line, 1);
    if (!degree) throw ParseError("missing 'degree'", end_line, 1);
    if (cfg.degree() != *degree) {
        throw ParseError("degree " + std::to_string(*degree) + " needs " + std::to_string(*degree + 1) +
                             " coefficients, got " + std::to_string(cfg.coefficients.size()),
                         coeff_line ? coeff_line : degree_line, 1);
    }
    if (cfg.coefficients.front().is_zero_to_precision())
        throw ParseError("leading coefficient must be nonzero", coeff_line, 1);
    if (cfg.marked.empty()) throw ParseError("at least one 'marked' point is required", end_line, 1);
    try {
        cfg.schedule.validate();
    } catch (const Error& e) {
        throw ParseError(e.what(), end_line, 1);
    }
    if (cfg.budget.orbit.precision < cfg.budget.anchor_level + 1)
        throw ParseError("precision must exceed anchor_level", end_line, 1);
    return cfg;
}

inline FamilyConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline FamilyConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    return parse_config(in);
}

} // namespace greendeg
