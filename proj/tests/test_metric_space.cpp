#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "asymexp/metric_space.hpp"

using namespace asymexp;

namespace {

FiniteMetricSpace ring8() {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 8; ++i) edges.emplace_back(i, (i + 1) % 8);
    return FiniteMetricSpace::fromGraph(8, edges);
}

}  // namespace

TEST_CASE("edge-path metric on the 8-ring") {
    const FiniteMetricSpace X = ring8();
    REQUIRE(X.size() == 8);
    REQUIRE(X.isGraph());
    REQUIRE(X.distance(0, 4) == 4.0);
    REQUIRE(X.distance(0, 5) == 3.0);
    REQUIRE(X.diameter() == 4.0);
    for (int v = 0; v < 8; ++v) REQUIRE(X.degree(v) == 2);
    REQUIRE(X.realizedDistances() == std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("graph construction rejects malformed input") {
    using E = std::vector<std::pair<int, int>>;
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromGraph(0, {}), InvalidArgument);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromGraph(3, E{{0, 3}}), InvalidEdge);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromGraph(3, E{{1, 1}}), InvalidEdge);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromGraph(3, E{{0, 1}, {1, 0}}), InvalidEdge);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromGraph(4, E{{0, 1}, {2, 3}}), DisconnectedGraph);
}

TEST_CASE("explicit matrices are validated as metrics") {
    using M = std::vector<std::vector<double>>;
    const FiniteMetricSpace X = FiniteMetricSpace::fromDistances(M{{0, 5}, {5, 0}});
    REQUIRE(X.size() == 2);
    REQUIRE_FALSE(X.isGraph());
    REQUIRE(X.distance(0, 1) == 5.0);
    REQUIRE_THROWS_AS(X.edges(), NoAdjacency);

    REQUIRE_THROWS_AS(FiniteMetricSpace::fromDistances(M{{0, 1}, {2, 0}}), InvalidMetric);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromDistances(M{{0, -1}, {-1, 0}}), InvalidMetric);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromDistances(M{{1, 2}, {2, 0}}), InvalidMetric);
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromDistances(M{{0, 0}, {0, 0}}), InvalidMetric);
    const double nan = std::nan("");
    REQUIRE_THROWS_AS(FiniteMetricSpace::fromDistances(M{{0, nan}, {nan, 0}}), InvalidMetric);
    // d(0,2) = 10 > d(0,1) + d(1,2) = 2.
    REQUIRE_THROWS_AS(
        FiniteMetricSpace::fromDistances(M{{0, 1, 10}, {1, 0, 1}, {10, 1, 0}}), InvalidMetric);
}

TEST_CASE("boundaries of an arc in the 8-ring") {
    const FiniteMetricSpace X = ring8();
    const std::vector<int> A{0, 1, 2, 3};
    REQUIRE(r_boundary(X, A, 1.0) == std::vector<int>{4, 7});
    REQUIRE(inner_boundary(X, A, 1.0) == std::vector<int>{0, 3});
    REQUIRE(r_boundary(X, A, 2.0) == std::vector<int>{4, 5, 6, 7});
    REQUIRE(inner_boundary(X, A, 2.0) == A);
    REQUIRE(r_neighborhood(X, {0}, 2.0) == std::vector<int>{0, 1, 2, 6, 7});
    REQUIRE(r_boundary(X, A, 0.0).empty());
}

TEST_CASE("empty-set conventions") {
    const FiniteMetricSpace X = ring8();
    REQUIRE(point_to_set_distance(X, 0, {}) == kInf);
    REQUIRE(set_distance(X, {}, {0, 1}) == kInf);
    REQUIRE(r_boundary(X, {}, 3.0).empty());
    REQUIRE(inner_boundary(X, {}, 3.0).empty());
    REQUIRE(r_neighborhood(X, {}, 3.0).empty());
    REQUIRE(set_diameter(X, {}) == 0.0);
}

TEST_CASE("set helpers and validation") {
    const FiniteMetricSpace X = ring8();
    REQUIRE(set_distance(X, {0, 1}, {4, 5}) == 3.0);
    REQUIRE(set_diameter(X, {0, 3, 4}) == 4.0);
    REQUIRE(set_complement(8, {0, 3, 4}) == std::vector<int>{1, 2, 5, 6, 7});
    REQUIRE_THROWS_AS(r_boundary(X, {3, 1}, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(r_boundary(X, {1, 1}, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(r_boundary(X, {8}, 1.0), OutOfRange);
    REQUIRE_THROWS_AS(r_boundary(X, {0}, -1.0), InvalidArgument);
}

TEST_CASE("growth function values") {
    const FiniteMetricSpace C8 = ring8();
    REQUIRE(growth_function(C8, 1.0) == 3);
    REQUIRE(growth_function(C8, 2.0) == 5);
    REQUIRE(growth_function(C8, 4.0) == 8);
    REQUIRE(growth_function(C8, 0.0) == 1);

    using E = std::vector<std::pair<int, int>>;
    const FiniteMetricSpace P3 = FiniteMetricSpace::fromGraph(3, E{{0, 1}, {1, 2}});
    REQUIRE(growth_function(P3, 1.0) == 3);
    const FiniteMetricSpace K5 = FiniteMetricSpace::fromGraph(
        5, E{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});
    REQUIRE(growth_function(K5, 1.0) == 5);
}

TEST_CASE("threshold connectivity") {
    const FiniteMetricSpace C8 = ring8();
    REQUIRE(d_connected(C8, 1.0));
    REQUIRE_FALSE(d_connected(C8, 0.5));
    const FiniteMetricSpace two =
        FiniteMetricSpace::fromDistances({{0, 5}, {5, 0}});
    REQUIRE_FALSE(d_connected(two, 4.0));
    REQUIRE(d_connected(two, 5.0));
}

TEST_CASE("triangle inequality holds on graph metrics") {
    const FiniteMetricSpace X = ring8();
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            for (int k = 0; k < 8; ++k) {
                REQUIRE(X.distance(i, j) <= X.distance(i, k) + X.distance(k, j));
            }
        }
    }
}
