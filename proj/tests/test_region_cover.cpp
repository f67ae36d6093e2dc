#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <dcsamp/cover.hpp>
#include <dcsamp/region.hpp>
#include <dcsamp/rng.hpp>
#include <dcsamp/target.hpp>

using namespace dcsamp;

TEST_CASE("region membership uses closed intervals") {
    const Region r({0.0, -1.0}, {2.0, 1.0});
    REQUIRE(r.dim() == 2);
    REQUIRE(r.contains(std::vector{0.0, -1.0}));
    REQUIRE(r.contains(std::vector{2.0, 1.0}));
    REQUIRE(r.contains(std::vector{1.0, 0.0}));
    REQUIRE_FALSE(r.contains(std::vector{2.0001, 0.0}));
    REQUIRE_FALSE(r.contains(std::vector{1.0, -1.0001}));
}

TEST_CASE("region handles infinite sides") {
    const Region r(0.0, kInf);
    REQUIRE(r.contains(1e300));
    REQUIRE_FALSE(r.contains(-1e-300));
    REQUIRE_FALSE(r.empty());
}

TEST_CASE("region validation") {
    REQUIRE_THROWS_AS(Region({0.0}, {1.0, 2.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(Region(std::vector<double>{}, std::vector<double>{}),
                      std::invalid_argument);
    // inverted bounds are a legitimate empty placeholder, not an error
    REQUIRE(Region(1.0, 0.0).empty());
}

TEST_CASE("intersect clips per dimension") {
    const Region a({0.0, 0.0}, {2.0, 2.0});
    const Region b({1.0, -1.0}, {3.0, 1.0});
    const Region c = intersect(a, b);
    REQUIRE(c.lo == std::vector{1.0, 0.0});
    REQUIRE(c.hi == std::vector{2.0, 1.0});
    REQUIRE_FALSE(c.empty());
    REQUIRE(intersect(Region(0.0, 1.0), Region(2.0, 3.0)).empty());
    REQUIRE_THROWS_AS(intersect(a, Region(0.0, 1.0)), std::invalid_argument);
}

TEST_CASE("linked cover requires consecutive overlap") {
    const Region support(0.0, 3.0);
    REQUIRE_NOTHROW(LinkedCover(support, {Region(0.0, 1.5), Region(1.4, 3.0)}));
    REQUIRE_THROWS_AS(LinkedCover(support, {Region(0.0, 1.0), Region(2.0, 3.0)}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(LinkedCover(support, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(LinkedCover(support, {Region(1.0, 0.5)}), std::invalid_argument);
    REQUIRE_THROWS_AS(LinkedCover(support, {Region({0.0, 0.0}, {1.0, 1.0})}),
                      std::invalid_argument);
}

TEST_CASE("adjacent overlap and prior membership") {
    const LinkedCover cover(Region(0.0, 4.0),
                            {Region(0.0, 2.0), Region(1.0, 3.0), Region(1.5, 4.0)});
    const Region d0 = cover.adjacent_overlap(0);
    REQUIRE(d0.lo[0] == 1.0);
    REQUIRE(d0.hi[0] == 2.0);
    REQUIRE_THROWS_AS(cover.adjacent_overlap(2), std::out_of_range);

    // part 0 has no earlier parts
    REQUIRE_FALSE(cover.in_prior_overlap(0, 1.5));
    // part 2 overlaps both earlier parts: prior region is [1.5, 3]
    REQUIRE(cover.in_prior_overlap(2, 1.7));   // in C_0 n C_2
    REQUIRE(cover.in_prior_overlap(2, 2.5));   // in C_1 n C_2 only
    REQUIRE_FALSE(cover.in_prior_overlap(2, 3.5));
    // membership in the part itself is required
    REQUIRE_FALSE(cover.in_prior_overlap(1, 0.5));
}

TEST_CASE("covers_support probes find holes") {
    Rng rng(11);
    const LinkedCover good(Region(0.0, 3.0), {Region(0.0, 1.6), Region(1.4, 3.0)});
    REQUIRE(good.covers_support(rng));
    // [0, 1.2] u [1.1, 2.0] leaves (2, 3] uncovered
    const LinkedCover holey(Region(0.0, 3.0), {Region(0.0, 1.2), Region(1.1, 2.0)});
    REQUIRE_FALSE(holey.covers_support(rng));
}

TEST_CASE("saturation probes the target for mass") {
    Rng rng(12);
    const LinkedCover cover(Region(0.0, 3.0), {Region(0.0, 1.6), Region(1.4, 3.0)});
    auto positive = [](std::span<const double>) { return true; };
    const SaturationReport ok = validate_saturated(cover, positive, 50, rng);
    REQUIRE(ok.saturated());
    REQUIRE(ok.element_has_mass.size() == 2);
    REQUIRE(ok.overlap_has_mass.size() == 1);

    // density vanishes on the overlap [1.4, 1.6]
    auto gapped = [](std::span<const double> x) { return x[0] < 1.4 || x[0] > 1.6; };
    const SaturationReport bad = validate_saturated(cover, gapped, 200, rng);
    REQUIRE_FALSE(bad.saturated());
    REQUIRE(bad.element_has_mass[0]);
    REQUIRE(bad.element_has_mass[1]);
    REQUIRE_FALSE(bad.overlap_has_mass[0]);
}

TEST_CASE("discrete cover validates linkage and coverage") {
    REQUIRE_NOTHROW(DiscreteCover(7, {{0, 1, 2, 3}, {3, 4, 5, 6}}));
    // missing state 6
    REQUIRE_THROWS_AS(DiscreteCover(7, {{0, 1, 2, 3}, {3, 4, 5}}), std::invalid_argument);
    // no shared state between consecutive parts
    REQUIRE_THROWS_AS(DiscreteCover(4, {{0, 1}, {2, 3}}), std::invalid_argument);
    REQUIRE_THROWS_AS(DiscreteCover(3, {{0, 1, 2}, {}}), std::invalid_argument);
    REQUIRE_THROWS_AS(DiscreteCover(3, {{0, 1, 3}}), std::invalid_argument);
    REQUIRE_THROWS_AS(DiscreteCover(0, {{0}}), std::invalid_argument);
}

TEST_CASE("discrete cover membership and overlaps") {
    const DiscreteCover cover(7, {{0, 1, 2, 3}, {3, 4, 5, 6}});
    REQUIRE(cover.size() == 2);
    REQUIRE(cover.contains(0, 3));
    REQUIRE(cover.contains(1, 3));
    REQUIRE_FALSE(cover.contains(0, 4));
    REQUIRE(cover.adjacent_overlap(0) == std::vector{3});
    REQUIRE(cover.in_prior_overlap(1, 3));
    REQUIRE_FALSE(cover.in_prior_overlap(1, 4));
    REQUIRE_FALSE(cover.in_prior_overlap(0, 3));
}

TEST_CASE("discrete cover deduplicates and sorts part states") {
    const DiscreteCover cover(3, {{1, 0, 1}, {2, 1}});
    REQUIRE(cover.part(0) == std::vector{0, 1});
    REQUIRE(cover.part(1) == std::vector{1, 2});
}
