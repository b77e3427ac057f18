#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ope {

inline constexpr std::string_view kLibraryVersion = "0.1.0";

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem and stream failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input: JSONL lines, schema mismatches, tag grammars.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A chat backend request failed. `transient` marks failures worth retrying.
class BackendError : public Error {
public:
    BackendError(const std::string& msg, int status_code, bool is_transient)
        : Error(msg), status(status_code), transient(is_transient) {}
    int status = 0;
    bool transient = false;
};

/// The backend answered but the body violated the wire contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Caller misuse at the command layer (maps to exit code 2 in the CLI).
class UsageError : public Error {
public:
    using Error::Error;
};

// ----------------------------------------------------------------------------
// Hashing and deterministic seed derivation
// ----------------------------------------------------------------------------

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::string_view salt) {
    return mix_seed(a, fnv1a64(salt));
}

/// Map 64 random bits onto [0, 1).
constexpr double unit_uniform(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// ----------------------------------------------------------------------------
// Strings
// ----------------------------------------------------------------------------

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

/// Collapse runs of whitespace to single spaces and trim the ends.
inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
        } else {
            if (pending) out.push_back(' ');
            pending = false;
            out.push_back(c);
        }
    }
    return out;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

/// Whitespace-delimited token count, the fallback when a backend reports no usage.
inline long long approx_token_count(std::string_view s) {
    long long count = 0;
    bool in_token = false;
    for (char c : s) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

// ----------------------------------------------------------------------------
// Time
// ----------------------------------------------------------------------------

inline std::string iso8601_utc(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return std::string(buf);
}

/// Wall clock for manifests. Honors SOURCE_DATE_EPOCH for reproducible runs.
inline std::time_t manifest_clock() {
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long v = std::strtoll(env, &end, 10);
        if (end != env) return static_cast<std::time_t>(v);
    }
    return std::time(nullptr);
}

}  // namespace ope
