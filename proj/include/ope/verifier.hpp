#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ope/common.hpp"
#include "ope/model.hpp"

namespace ope {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// ----------------------------------------------------------------------------
// CanonicalAnswer
// ----------------------------------------------------------------------------

/// A final answer normalized for equivalence checking. Numeric kinds carry an
/// exact rational value; everything else is whitespace-normalized text.
/// Comparisons never touch floating point.
struct CanonicalAnswer {
    enum class Kind { integer, rational, decimal, symbolic_text };

    Kind kind = Kind::symbolic_text;
    Rational value;    // meaningful for numeric kinds; always fully reduced
    std::string text;  // meaningful for symbolic_text

    bool numeric() const { return kind != Kind::symbolic_text; }

    /// Canonical serialization: "n" or "p/q" for numerics, normalized text otherwise.
    /// Used for vote grouping and the deterministic lexicographic tie-break.
    std::string str() const {
        if (!numeric()) return text;
        const BigInt num = boost::multiprecision::numerator(value);
        const BigInt den = boost::multiprecision::denominator(value);
        if (den == 1) return num.str();
        return num.str() + "/" + den.str();
    }
};

inline std::string to_string(CanonicalAnswer::Kind k) {
    switch (k) {
        case CanonicalAnswer::Kind::integer: return "integer";
        case CanonicalAnswer::Kind::rational: return "rational";
        case CanonicalAnswer::Kind::decimal: return "decimal";
        default: return "symbolic-text";
    }
}

// ----------------------------------------------------------------------------
// Boxed-answer extraction
// ----------------------------------------------------------------------------

/// Returns the balanced-brace content of the last well-formed "\boxed{...}".
/// An occurrence whose braces never balance is skipped in favor of the one
/// before it. Absence is a value, not an error.
inline std::optional<std::string> extract_boxed(std::string_view text) {
    static constexpr std::string_view kTag = "\\boxed{";
    std::vector<std::size_t> starts;
    for (std::size_t pos = text.find(kTag); pos != std::string_view::npos;
         pos = text.find(kTag, pos + 1)) {
        starts.push_back(pos);
    }
    for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
        const std::size_t begin = *it + kTag.size();
        int depth = 1;
        for (std::size_t j = begin; j < text.size(); ++j) {
            const char c = text[j];
            if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                return std::string(text.substr(begin, j - begin));
            }
        }
    }
    return std::nullopt;
}

// ----------------------------------------------------------------------------
// Canonicalization
// ----------------------------------------------------------------------------

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

/// "1,234,567" or "1,234.5" with groups of exactly three digits.
inline bool is_thousands_form(std::string_view s) {
    const std::size_t dot = s.find('.');
    std::string_view intpart = dot == std::string_view::npos ? s : s.substr(0, dot);
    std::string_view fracpart = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (dot != std::string_view::npos && !all_digits(fracpart)) return false;
    const std::size_t comma = intpart.find(',');
    if (comma == std::string_view::npos || comma == 0 || comma > 3) return false;
    if (!all_digits(intpart.substr(0, comma))) return false;
    std::string_view rest = intpart.substr(comma);
    while (!rest.empty()) {
        if (rest.size() < 4 || rest[0] != ',' || !all_digits(rest.substr(1, 3))) return false;
        rest.remove_prefix(4);
    }
    return true;
}

/// Strips one balanced outer {...} layer when it wraps the whole string.
inline bool strip_outer_braces(std::string& s) {
    if (s.size() < 2 || s.front() != '{' || s.back() != '}') return false;
    int depth = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        else if (s[i] == '}' && --depth == 0) return false;  // closes before the end
    }
    s = trim(std::string_view(s).substr(1, s.size() - 2));
    return true;
}

/// Removes presentation-only LaTeX: dollars, \left/\right, spacing commands,
/// \text{} wrappers. Leaves the math content intact.
inline std::string strip_latex(std::string_view raw) {
    std::string s = trim(raw);
    for (std::string_view cmd : {"\\left", "\\right", "\\,", "\\;", "\\:", "\\!", "\\ "})
        s = replace_all(std::move(s), cmd, "");
    s = replace_all(std::move(s), "\\%", "%");
    s = replace_all(std::move(s), "$", "");
    // unwrap \text{...} keeping the inner content
    std::size_t pos = 0;
    while ((pos = s.find("\\text{", pos)) != std::string::npos) {
        const std::size_t begin = pos + 6;
        int depth = 1;
        std::size_t j = begin;
        for (; j < s.size(); ++j) {
            if (s[j] == '{') ++depth;
            else if (s[j] == '}' && --depth == 0) break;
        }
        if (j >= s.size()) break;  // unbalanced: leave as-is
        s = s.substr(0, pos) + s.substr(begin, j - begin) + s.substr(j + 1);
    }
    s = trim(s);
    while (strip_outer_braces(s)) {}
    return s;
}

/// Parses signed integers and decimals (with optional thousands separators)
/// into an exact rational. Returns the surface kind alongside.
inline std::optional<std::pair<Rational, CanonicalAnswer::Kind>> parse_plain_number(
    std::string_view s) {
    bool negative = false;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        negative = s[0] == '-';
        s.remove_prefix(1);
    }
    if (s.empty()) return std::nullopt;
    std::string body(s);
    if (is_thousands_form(body)) body = replace_all(std::move(body), ",", "");
    const std::size_t dot = body.find('.');
    if (dot == std::string::npos) {
        if (!all_digits(body)) return std::nullopt;
        BigInt v(body);
        if (negative) v = -v;
        return std::make_pair(Rational(v), CanonicalAnswer::Kind::integer);
    }
    const std::string intpart = body.substr(0, dot);
    const std::string fracpart = body.substr(dot + 1);
    if (intpart.empty() && fracpart.empty()) return std::nullopt;
    if (!intpart.empty() && !all_digits(intpart)) return std::nullopt;
    if (!fracpart.empty() && !all_digits(fracpart)) return std::nullopt;
    BigInt scaled(intpart.empty() ? std::string("0") : intpart);
    BigInt den = 1;
    for (char c : fracpart) {
        scaled = scaled * 10 + (c - '0');
        den *= 10;
    }
    if (negative) scaled = -scaled;
    return std::make_pair(Rational(scaled, den), CanonicalAnswer::Kind::decimal);
}

/// Parses a signed integer literal, tolerating one brace layer: "{-3}".
inline std::optional<BigInt> parse_integer_arg(std::string_view s) {
    std::string t = trim(s);
    while (strip_outer_braces(t)) {}
    bool negative = false;
    std::string_view v = t;
    if (!v.empty() && (v[0] == '+' || v[0] == '-')) {
        negative = v[0] == '-';
        v.remove_prefix(1);
    }
    if (!all_digits(v)) return std::nullopt;
    BigInt out{std::string(v)};
    return negative ? -out : out;
}

/// Builds a reduced rational, normalizing a negative denominator.
inline Rational make_rational(BigInt num, BigInt den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    return Rational(num, den);
}

/// "\frac{a}{b}" (or \dfrac/\tfrac) with integer arguments, optional sign in front.
inline std::optional<Rational> parse_frac(std::string_view s) {
    bool negative = false;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        negative = s[0] == '-';
        s.remove_prefix(1);
    }
    for (std::string_view name : {"\\frac", "\\dfrac", "\\tfrac"}) {
        if (s.substr(0, name.size()) == name) {
            s.remove_prefix(name.size());
            break;
        }
    }
    if (s.empty() || s[0] != '{') return std::nullopt;
    int depth = 0;
    std::size_t split = std::string_view::npos;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        else if (s[i] == '}' && --depth == 0) {
            split = i;
            break;
        }
    }
    if (split == std::string_view::npos) return std::nullopt;
    std::string_view first = s.substr(1, split - 1);
    std::string_view rest = s.substr(split + 1);
    if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}') return std::nullopt;
    std::string_view second = rest.substr(1, rest.size() - 2);
    const auto num = parse_integer_arg(first);
    const auto den = parse_integer_arg(second);
    if (!num || !den || *den == 0) return std::nullopt;
    const Rational r = make_rational(*num, *den);
    return negative ? -r : r;
}

/// "a/b" with integer literals on both sides.
inline std::optional<Rational> parse_slash(std::string_view s) {
    const std::size_t slash = s.find('/');
    if (slash == std::string_view::npos || s.find('/', slash + 1) != std::string_view::npos)
        return std::nullopt;
    const auto num = parse_integer_arg(s.substr(0, slash));
    const auto den = parse_integer_arg(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    return make_rational(*num, *den);
}

}  // namespace detail

/// Normalizes a raw extracted answer. Numeric forms (integers, \frac and a/b
/// fractions, decimals, percentages, thousands separators) become exact
/// rationals; anything else falls back to whitespace-normalized symbolic text.
inline CanonicalAnswer canonicalize(std::string_view raw) {
    const std::string s = detail::strip_latex(raw);
    CanonicalAnswer out;

    if (!s.empty() && s.back() == '%') {
        const std::string inner = trim(std::string_view(s).substr(0, s.size() - 1));
        if (auto plain = detail::parse_plain_number(inner)) {
            out.kind = CanonicalAnswer::Kind::rational;
            out.value = plain->first / 100;
            return out;
        }
    }
    if (auto frac = detail::parse_frac(s)) {
        out.kind = CanonicalAnswer::Kind::rational;
        out.value = *frac;
        return out;
    }
    if (auto slash = detail::parse_slash(s)) {
        out.kind = CanonicalAnswer::Kind::rational;
        out.value = *slash;
        return out;
    }
    if (auto plain = detail::parse_plain_number(s)) {
        out.kind = plain->second;
        out.value = plain->first;
        return out;
    }
    out.kind = CanonicalAnswer::Kind::symbolic_text;
    out.text = collapse_whitespace(s);
    return out;
}

/// Exact equivalence: numeric kinds compare by rational value across kinds,
/// symbolic text by normalized string equality. Numeric vs symbolic is false.
inline bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b) {
    if (a.numeric() && b.numeric()) return a.value == b.value;
    if (!a.numeric() && !b.numeric()) return a.text == b.text;
    return false;
}

/// Runs extract -> canonicalize -> compare and records the verdict on the path.
/// A path with no extractable answer verifies false. Idempotent.
inline ReasoningPath verify_path(ReasoningPath path, std::string_view ground_truth) {
    const auto boxed = extract_boxed(path.text);
    if (!boxed) {
        path.extracted_answer.reset();
        path.canonical_answer.reset();
        path.correct = false;
        return path;
    }
    path.extracted_answer = *boxed;
    const CanonicalAnswer answer = canonicalize(*boxed);
    path.canonical_answer = answer.str();
    path.correct = answers_equal(answer, canonicalize(ground_truth));
    return path;
}

}  // namespace ope
