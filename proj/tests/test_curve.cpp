#include <catch2/catch.hpp>

#include "clonecurve/curve.hpp"

#include <random>

using namespace clonecurve;

namespace {

ParametricCurve make_curve(std::initializer_list<std::pair<permille, std::uint32_t>> points) {
    ParametricCurve c;
    for (auto [st, ltlt] : points)
        c.configs.push_back({st, ltlt, std::nullopt});
    return c;
}

} // namespace

TEST_CASE("validate accepts the shipped presets") {
    CHECK(validate(preset("sourcerercc-java")).ok());
    CHECK(validate(preset("cloneworks-java")).ok());
}

TEST_CASE("validate rejects non-monotone curves") {
    auto equal_st = make_curve({{750, 19}, {750, 24}});
    auto r1 = validate(equal_st);
    CHECK(r1.fault == CurveFault::non_monotone_st);
    CHECK(r1.index == 1);
    CHECK(r1.message() == "NonMonotoneST(1): similarity thresholds must strictly decrease");

    auto equal_ltlt = make_curve({{750, 19}, {700, 19}});
    auto r2 = validate(equal_ltlt);
    CHECK(r2.fault == CurveFault::non_monotone_ltlt);
    CHECK(r2.index == 1);
}

TEST_CASE("validate rejects out-of-range fields") {
    CHECK(validate(make_curve({{0, 19}})).fault == CurveFault::out_of_range);
    CHECK(validate(make_curve({{1001, 19}})).fault == CurveFault::out_of_range);
    CHECK(validate(make_curve({{750, 0}})).fault == CurveFault::out_of_range);
    ParametricCurve bad_utlt;
    bad_utlt.configs.push_back({750, 40, 39});
    auto r = validate(bad_utlt);
    CHECK(r.fault == CurveFault::out_of_range);
    CHECK(r.field == "utlt");
    CHECK(validate(ParametricCurve{}).fault == CurveFault::empty);
}

TEST_CASE("apply_upper_bounds reproduces the worked two-point example") {
    auto bounded = apply_upper_bounds(make_curve({{750, 40}, {700, 60}}));
    REQUIRE(bounded.configs.size() == 2);
    CHECK(bounded.configs[0].utlt == 78u);
    CHECK_FALSE(bounded.configs[1].utlt.has_value());
    CHECK(bounded.configs[0].st == 750);
    CHECK(bounded.configs[0].ltlt == 40u);
}

TEST_CASE("apply_upper_bounds reproduces the preset tables exactly") {
    const std::vector<std::uint32_t> scc_expected = {30, 45, 49, 78, 98, 238, 389};
    auto scc = apply_upper_bounds(strip_upper_bounds(preset("sourcerercc-java")));
    REQUIRE(scc.configs.size() == 8);
    for (std::size_t i = 0; i < 7; ++i) {
        REQUIRE(scc.configs[i].utlt.has_value());
        CHECK(*scc.configs[i].utlt == scc_expected[i]);
    }
    CHECK_FALSE(scc.configs[7].utlt.has_value());
    CHECK(scc == preset("sourcerercc-java"));

    const std::vector<std::uint32_t> cw_expected = {27, 30, 40, 47, 70, 109, 231};
    auto cw = apply_upper_bounds(strip_upper_bounds(preset("cloneworks-java")));
    REQUIRE(cw.configs.size() == 8);
    for (std::size_t i = 0; i < 7; ++i) {
        REQUIRE(cw.configs[i].utlt.has_value());
        CHECK(*cw.configs[i].utlt == cw_expected[i]);
    }
    CHECK_FALSE(cw.configs[7].utlt.has_value());
    CHECK(cw == preset("cloneworks-java"));
}

TEST_CASE("apply_upper_bounds leaves a single-config curve unbounded") {
    auto bounded = apply_upper_bounds(make_curve({{750, 19}}));
    REQUIRE(bounded.configs.size() == 1);
    CHECK_FALSE(bounded.configs[0].utlt.has_value());
}

TEST_CASE("apply_upper_bounds refuses already-bounded input") {
    CHECK_THROWS_WITH(apply_upper_bounds(preset("sourcerercc-java")),
                      Catch::Contains("AlreadyBounded"));
    CHECK_THROWS_WITH(apply_upper_bounds(make_curve({{750, 19}, {750, 24}})),
                      Catch::Contains("NonMonotoneST"));
}

TEST_CASE("preset rejects unknown names") {
    CHECK_THROWS_WITH(preset("nosuch"), Catch::Contains("UnknownPreset(nosuch)"));
}

TEST_CASE("preset exposes the exact threshold columns") {
    auto scc = preset("sourcerercc-java");
    const permille scc_st[] = {750, 730, 710, 700, 650, 600, 550, 500};
    const std::uint32_t scc_ltlt[] = {19, 24, 34, 36, 56, 65, 144, 215};
    REQUIRE(scc.configs.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(scc.configs[i].st == scc_st[i]);
        CHECK(scc.configs[i].ltlt == scc_ltlt[i]);
    }

    auto cw = preset("cloneworks-java");
    const permille cw_st[] = {770, 750, 720, 710, 700, 650, 600, 550};
    const std::uint32_t cw_ltlt[] = {19, 22, 24, 30, 35, 50, 72, 140};
    REQUIRE(cw.configs.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(cw.configs[i].st == cw_st[i]);
        CHECK(cw.configs[i].ltlt == cw_ltlt[i]);
    }
}

TEST_CASE("upper bounds never cut a reachable pair off") {
    // A block one past the bound cannot reach the threshold against any block
    // the next instance will not process.
    auto sound = [](const ParametricCurve& curve) {
        for (std::size_t i = 0; i + 1 < curve.configs.size(); ++i) {
            const auto& cfg = curve.configs[i];
            REQUIRE(cfg.utlt.has_value());
            std::uint64_t next_ltlt = curve.configs[i + 1].ltlt;
            std::uint64_t needed =
                (static_cast<std::uint64_t>(cfg.st) * (*cfg.utlt + 1) + 999) / 1000;
            CHECK(needed > next_ltlt - 1);
        }
    };
    sound(preset("sourcerercc-java"));
    sound(preset("cloneworks-java"));
}

TEST_CASE("apply_upper_bounds is idempotent on the (st, ltlt) projection") {
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        std::size_t n = 1 + rng() % 6;
        std::vector<permille> sts;
        std::vector<std::uint32_t> ltlts;
        while (sts.size() < n) {
            permille st = static_cast<permille>(200 + rng() % 800);
            if (std::find(sts.begin(), sts.end(), st) == sts.end())
                sts.push_back(st);
        }
        while (ltlts.size() < n) {
            std::uint32_t l = static_cast<std::uint32_t>(1 + rng() % 400);
            if (std::find(ltlts.begin(), ltlts.end(), l) == ltlts.end())
                ltlts.push_back(l);
        }
        std::sort(sts.rbegin(), sts.rend());
        std::sort(ltlts.begin(), ltlts.end());
        ParametricCurve curve;
        for (std::size_t i = 0; i < n; ++i)
            curve.configs.push_back({sts[i], ltlts[i], std::nullopt});
        REQUIRE(validate(curve).ok());

        auto once = apply_upper_bounds(curve);
        CHECK(validate(once).ok());
        auto again = apply_upper_bounds(strip_upper_bounds(once));
        CHECK(once == again);
    }
}
