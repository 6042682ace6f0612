#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clonecurve/error.hpp"

namespace clonecurve {

// Similarity values are integer permille (750 == 75%). All threshold math is
// exact integer arithmetic so preset tables reproduce bit-for-bit and there
// is no float ambiguity at pair-acceptance boundaries.
using permille = std::int32_t;

// One search instance: similarity threshold plus an inclusive token-length
// window. An absent utlt means unbounded (the "+" notation).
struct SearchConfig {
    permille st = 0;
    std::uint32_t ltlt = 0;
    std::optional<std::uint32_t> utlt;

    friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

// Ordered list of search configs, most-similar first: st strictly decreases
// and ltlt strictly increases along the list.
struct ParametricCurve {
    std::vector<SearchConfig> configs;

    friend bool operator==(const ParametricCurve&, const ParametricCurve&) = default;
};

class curve_error : public error {
public:
    using error::error;
};

enum class CurveFault {
    none,
    non_monotone_st,
    non_monotone_ltlt,
    out_of_range,
    empty,
};

struct ValidationResult {
    CurveFault fault = CurveFault::none;
    std::size_t index = 0;
    std::string field;

    bool ok() const { return fault == CurveFault::none; }

    std::string message() const {
        switch (fault) {
        case CurveFault::none:
            return "ok";
        case CurveFault::non_monotone_st:
            return "NonMonotoneST(" + std::to_string(index) + "): similarity thresholds must strictly decrease";
        case CurveFault::non_monotone_ltlt:
            return "NonMonotoneLTLT(" + std::to_string(index) + "): lower length thresholds must strictly increase";
        case CurveFault::out_of_range:
            return "OutOfRange(" + std::to_string(index) + ", " + field + ")";
        case CurveFault::empty:
            return "EmptyCurve: a curve needs at least one config";
        }
        return "ok";
    }
};

inline ValidationResult validate(const ParametricCurve& curve) {
    if (curve.configs.empty())
        return {CurveFault::empty, 0, ""};
    for (std::size_t i = 0; i < curve.configs.size(); ++i) {
        const SearchConfig& c = curve.configs[i];
        if (c.st < 1 || c.st > 1000)
            return {CurveFault::out_of_range, i, "st"};
        if (c.ltlt < 1)
            return {CurveFault::out_of_range, i, "ltlt"};
        if (c.utlt && *c.utlt < c.ltlt)
            return {CurveFault::out_of_range, i, "utlt"};
        if (i > 0) {
            if (c.st >= curve.configs[i - 1].st)
                return {CurveFault::non_monotone_st, i, "st"};
            if (c.ltlt <= curve.configs[i - 1].ltlt)
                return {CurveFault::non_monotone_ltlt, i, "ltlt"};
        }
    }
    return {};
}

// Derives the inclusive upper length bound of each instance from the next
// (less similar) instance's lower bound:
//
//   utlt_i = floor((ltlt_{i+1} - 1) * 1000 / st_i)
//
// A block above that bound cannot form a qualifying pair with any block the
// next instance will not process, so pruning it loses nothing. The last
// instance has no successor and stays unbounded.
inline ParametricCurve apply_upper_bounds(const ParametricCurve& curve) {
    ValidationResult v = validate(curve);
    if (!v.ok())
        throw curve_error(v.message());
    for (std::size_t i = 0; i < curve.configs.size(); ++i) {
        if (curve.configs[i].utlt)
            throw curve_error("AlreadyBounded(" + std::to_string(i) +
                              "): refusing to re-bound a curve that already has utlt values");
    }
    ParametricCurve out = curve;
    for (std::size_t i = 0; i + 1 < out.configs.size(); ++i) {
        std::uint64_t next_ltlt = out.configs[i + 1].ltlt;
        std::uint64_t st = static_cast<std::uint64_t>(out.configs[i].st);
        out.configs[i].utlt = static_cast<std::uint32_t>((next_ltlt - 1) * 1000 / st);
    }
    return out;
}

// Strips the utlt of every config; the exact inverse of apply_upper_bounds
// on the (st, ltlt) projection.
inline ParametricCurve strip_upper_bounds(const ParametricCurve& curve) {
    ParametricCurve out = curve;
    for (SearchConfig& c : out.configs)
        c.utlt.reset();
    return out;
}

// Shipped curve presets, estimated for two block-granularity bag-of-tokens
// detectors over Java corpora. Values include the derived upper bounds.
inline ParametricCurve preset(std::string_view name) {
    auto mk = [](std::initializer_list<SearchConfig> cs) {
        ParametricCurve c;
        c.configs.assign(cs);
        return c;
    };
    if (name == "sourcerercc-java") {
        return mk({
            {750, 19, 30},
            {730, 24, 45},
            {710, 34, 49},
            {700, 36, 78},
            {650, 56, 98},
            {600, 65, 238},
            {550, 144, 389},
            {500, 215, std::nullopt},
        });
    }
    if (name == "cloneworks-java") {
        return mk({
            {770, 19, 27},
            {750, 22, 30},
            {720, 24, 40},
            {710, 30, 47},
            {700, 35, 70},
            {650, 50, 109},
            {600, 72, 231},
            {550, 140, std::nullopt},
        });
    }
    throw curve_error("UnknownPreset(" + std::string(name) +
                      "): known presets are sourcerercc-java, cloneworks-java");
}

inline std::vector<std::string> preset_names() {
    return {"sourcerercc-java", "cloneworks-java"};
}

} // namespace clonecurve
