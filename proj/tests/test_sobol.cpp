#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "geopas/common.hpp"
#include "geopas/sobol.hpp"

using namespace geopas;

TEST_CASE("fixed seed reproduces the sequence exactly") {
    const auto a = sobol::sample(64, 3, 42);
    const auto b = sobol::sample(64, 3, 42);
    CHECK(a == b);
}

TEST_CASE("different seeds scramble differently") {
    const auto a = sobol::sample(64, 3, 1);
    const auto b = sobol::sample(64, 3, 2);
    CHECK(a != b);
}

TEST_CASE("points lie in the half-open unit cube") {
    for (const auto& p : sobol::sample(256, 5, 7)) {
        for (double c : p) {
            CHECK(c >= 0.0);
            CHECK(c < 1.0);
        }
    }
}

// Owen scrambling must preserve the one-dimensional stratification of the
// net: among the first 2^m points, every dyadic interval of width 2^-m
// holds exactly one point of each coordinate projection.
TEST_CASE("dyadic intervals hold exactly one point per 1-D projection") {
    const int m = 6;
    const int count = 1 << m;
    for (int dimension : {1, 2, 3, 5, 10}) {
        for (std::uint64_t seed : {11ULL, 97ULL}) {
            const auto pts = sobol::sample(count, dimension, seed);
            for (int dim = 0; dim < dimension; ++dim) {
                std::vector<int> bucket(count, 0);
                for (const auto& p : pts) {
                    const auto idx = static_cast<int>(p[static_cast<std::size_t>(dim)] * count);
                    REQUIRE(idx >= 0);
                    REQUIRE(idx < count);
                    bucket[static_cast<std::size_t>(idx)] += 1;
                }
                for (int b : bucket) CHECK(b == 1);
            }
        }
    }
}

TEST_CASE("empirical coordinate means sit near one half") {
    const auto pts = sobol::sample(1024, 2, 5);
    for (int dim = 0; dim < 2; ++dim) {
        double mean = 0.0;
        for (const auto& p : pts) mean += p[static_cast<std::size_t>(dim)];
        mean /= static_cast<double>(pts.size());
        CHECK(std::fabs(mean - 0.5) < 0.02);
    }
}

TEST_CASE("dimension beyond the direction table is a configuration error") {
    CHECK_THROWS_AS(sobol::sample(8, sobol::kMaxDimension + 1, 1), config_error);
    CHECK_NOTHROW(sobol::sample(8, sobol::kMaxDimension, 1));
}

TEST_CASE("count below one is rejected") {
    CHECK_THROWS_AS(sobol::sample(0, 2, 1), input_error);
}

TEST_CASE("scrambled points are distinct") {
    const auto pts = sobol::sample(128, 2, 3);
    std::set<std::pair<double, double>> seen;
    for (const auto& p : pts) seen.insert({p[0], p[1]});
    CHECK(seen.size() == pts.size());
}
