#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mmfbo/rng.hpp"
#include "mmfbo/sampling.hpp"

using namespace mmfbo;

TEST_CASE("mix64 derives distinct stream seeds") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix64(42, i));
    REQUIRE(seen.size() == 1000);
}

TEST_CASE("rng streams are reproducible") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform01() == b.uniform01());
    Rng c(7), d(7);
    for (int i = 0; i < 100; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("rng normal moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    REQUIRE(std::abs(sum / n) < 0.01);
    REQUIRE(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("unscrambled sobol starts with the classic sequence") {
    SobolSequence seq(1);
    REQUIRE(seq.next()[0] == 0.0);
    REQUIRE(seq.next()[0] == 0.5);
    REQUIRE(seq.next()[0] == 0.75);
    REQUIRE(seq.next()[0] == 0.25);
    REQUIRE(seq.next()[0] == 0.375);
}

TEST_CASE("sobol points stay in the unit cube and fill it") {
    for (std::size_t dim : {2ul, 7ul, 16ul}) {
        SobolSequence seq(dim, 99);
        std::vector<double> mins(dim, 1.0), maxs(dim, 0.0);
        for (int i = 0; i < 512; ++i) {
            const auto x = seq.next();
            for (std::size_t d = 0; d < dim; ++d) {
                REQUIRE(x[d] >= 0.0);
                REQUIRE(x[d] < 1.0);
                mins[d] = std::min(mins[d], x[d]);
                maxs[d] = std::max(maxs[d], x[d]);
            }
        }
        for (std::size_t d = 0; d < dim; ++d) {
            REQUIRE(mins[d] < 0.05);
            REQUIRE(maxs[d] > 0.95);
        }
    }
    REQUIRE_THROWS_AS(SobolSequence(17), DomainError);
}

TEST_CASE("sobol 2d low discrepancy beats bad clustering") {
    // Every dyadic square of a 8x8 partition gets at least one of 256 points.
    SobolSequence seq(2);
    std::set<std::pair<int, int>> cells;
    for (int i = 0; i < 256; ++i) {
        const auto x = seq.next();
        cells.insert({static_cast<int>(x[0] * 8), static_cast<int>(x[1] * 8)});
    }
    REQUIRE(cells.size() == 64);
}

TEST_CASE("latin hypercube stratifies every dimension") {
    const std::size_t n = 20, dim = 4;
    const auto pts = latin_hypercube(n, dim, 5);
    REQUIRE(pts.size() == n);
    for (std::size_t d = 0; d < dim; ++d) {
        std::set<int> strata;
        for (const auto& p : pts) {
            REQUIRE(p[d] >= 0.0);
            REQUIRE(p[d] < 1.0);
            strata.insert(static_cast<int>(p[d] * static_cast<double>(n)));
        }
        REQUIRE(strata.size() == n);
    }
    REQUIRE(latin_hypercube(n, dim, 5) == pts);      // deterministic
    REQUIRE(latin_hypercube(n, dim, 6) != pts);      // seed-sensitive
}
