#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <numeric>
#include <vector>

#include "asymexp/generators.hpp"
#include "asymexp/ula.hpp"

using namespace asymexp;

TEST_CASE("normalized measure") {
    const std::vector<int> F{0, 1, 2, 3, 4, 5, 6, 7};
    REQUIRE(normalized_measure(F, F) == 1.0);
    REQUIRE(normalized_measure(F, {9, 10}) == 0.0);
    REQUIRE(normalized_measure(F, {2, 5}) == 0.25);
    REQUIRE(normalized_measure(F, {2, 5, 99}) == 0.25);
    REQUIRE(normalized_measure({3, 1, 1, 3}, {1}) == 0.5);  // inputs canonicalized
    REQUIRE_THROWS_AS(normalized_measure({}, {0}), InvalidArgument);
}

TEST_CASE("witness search on model graphs") {
    const FiniteMetricSpace k6 = complete(6);
    std::vector<int> all6(6);
    std::iota(all6.begin(), all6.end(), 0);
    // The whole space has empty boundary; the radius-1 ball hits it first.
    const auto wk6 = ula_witness(k6, all6, 1.0, 2.0, 2.0);
    REQUIRE(wk6.has_value());
    REQUIRE(*wk6 == all6);

    const FiniteMetricSpace c8 = cycle(8);
    std::vector<int> all8(8);
    std::iota(all8.begin(), all8.end(), 0);
    // A singleton has 4 points within distance 2; eps above that succeeds,
    // the tie fails (strict inequality).
    const auto loose = ula_witness(c8, all8, 2.0, 5.0, 0.0);
    REQUIRE(loose.has_value());
    REQUIRE(*loose == std::vector<int>{0});
    REQUIRE_FALSE(ula_witness(c8, all8, 2.0, 4.0, 0.0).has_value());
    // Tiny eps at scale 1: singletons and adjacent pairs all have boundary 4.
    REQUIRE_FALSE(ula_witness(c8, all8, 2.0, 0.1, 1.0).has_value());

    REQUIRE_THROWS_AS(ula_witness(c8, {}, 1.0, 1.0, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(ula_witness(c8, {0, 0}, 1.0, 1.0, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(ula_witness(c8, all8, -1.0, 1.0, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(ula_witness(c8, all8, 1.0, 0.0, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(ula_witness(c8, all8, 1.0, 1.0, 1.0, 0), InvalidArgument);
}

TEST_CASE("exhaustive witnesses go beyond ball traces") {
    // On the 10-cycle at S=3 no ball trace works: radius-1 balls are arcs of
    // 3 with boundary 2 >= 0.55*3, radius-2 balls have diameter 4. The arc
    // of 4 qualifies and only the exhaustive stage can find it.
    const FiniteMetricSpace c10 = cycle(10);
    std::vector<int> all10(10);
    std::iota(all10.begin(), all10.end(), 0);
    const auto w = ula_witness(c10, all10, 1.0, 0.55, 3.0);
    REQUIRE(w.has_value());
    REQUIRE(*w == std::vector<int>{0, 1, 2, 3});

    // Same geometry on a 20-cycle with the cap below |F|: the exhaustive
    // stage is skipped and no witness is reported.
    const FiniteMetricSpace c20 = cycle(20);
    std::vector<int> all20(20);
    std::iota(all20.begin(), all20.end(), 0);
    REQUIRE_FALSE(ula_witness(c20, all20, 1.0, 0.55, 3.0, 10).has_value());
    REQUIRE(ula_witness(c20, all20, 1.0, 0.55, 3.0, 20).has_value());
}

TEST_CASE("greedy decomposition peels witnesses") {
    const FiniteMetricSpace k6 = complete(6);
    std::vector<int> all6(6);
    std::iota(all6.begin(), all6.end(), 0);
    const DecompositionResult one = greedy_decomposition(k6, all6, 1.0, 2.0, 1.0);
    REQUIRE(one.success);
    REQUIRE(one.decomposition.blocks.size() == 1);
    REQUIRE(one.decomposition.blocks[0].points == all6);
    REQUIRE(one.decomposition.mu == 1.0);
    REQUIRE(decomposition_invariants_ok(k6, one.decomposition));

    // C_12, R=2, S=1, eps=3: no ball trace works on the full cycle, the
    // exhaustive stage peels the first edge, after which singletons see only
    // two in-set neighbors and suffice.
    const FiniteMetricSpace c12 = cycle(12);
    std::vector<int> all12(12);
    std::iota(all12.begin(), all12.end(), 0);
    const DecompositionResult run = greedy_decomposition(c12, all12, 2.0, 3.0, 1.0);
    REQUIRE(run.success);
    REQUIRE(run.decomposition.blocks.size() == 3);
    REQUIRE(run.decomposition.blocks[0].points == std::vector<int>{0, 1});
    REQUIRE(run.decomposition.blocks[1].points == std::vector<int>{4});
    REQUIRE(run.decomposition.blocks[2].points == std::vector<int>{7});
    REQUIRE(run.decomposition.mu == 4.0 / 12.0);
    REQUIRE(decomposition_invariants_ok(c12, run.decomposition));
    // The proof's telescoping bound: mu > 1/(1+eps).
    REQUIRE(run.decomposition.mu > 1.0 / 4.0);

    // Starved of eps the search gets stuck on the full residual.
    const FiniteMetricSpace c8 = cycle(8);
    std::vector<int> all8(8);
    std::iota(all8.begin(), all8.end(), 0);
    const DecompositionResult stuck = greedy_decomposition(c8, all8, 2.0, 0.1, 1.0);
    REQUIRE_FALSE(stuck.success);
    REQUIRE(stuck.stuckAt == all8);
    REQUIRE(stuck.decomposition.blocks.empty());
    REQUIRE(stuck.decomposition.mu == 0.0);
}

TEST_CASE("successful decompositions satisfy the telescoping bound") {
    for (std::uint64_t seed : {1u, 4u, 7u}) {
        const FiniteMetricSpace X = random_regular(14, 3, seed);
        std::vector<int> all(14);
        std::iota(all.begin(), all.end(), 0);
        for (double R : {1.0, 2.0}) {
            for (double eps : {1.0, 3.0}) {
                for (double S : {2.0, 3.0}) {
                    const DecompositionResult run = greedy_decomposition(X, all, R, eps, S);
                    REQUIRE(decomposition_invariants_ok(X, run.decomposition));
                    std::int64_t covered = 0;
                    for (const PointSet& b : run.decomposition.blocks) {
                        covered += static_cast<std::int64_t>(b.points.size());
                    }
                    if (run.success) {
                        // |F| < (1+eps)|Omega|, exactly.
                        REQUIRE(covered * (1.0 + eps) > 14.0);
                        REQUIRE(run.stuckAt.empty());
                    } else {
                        REQUIRE_FALSE(run.stuckAt.empty());
                        REQUIRE_FALSE(
                            ula_witness(X, run.stuckAt, R, eps, S).has_value());
                    }
                }
            }
        }
    }
}

TEST_CASE("balanced splits") {
    const BalancedSplit even = balanced_split(std::vector<int>{3, 3, 3, 3}, 3);
    REQUIRE(even.sumFirst == 6);
    REQUIRE(even.sumSecond == 6);
    REQUIRE(even.first == std::vector<int>{0, 2});
    REQUIRE(even.second == std::vector<int>{1, 3});

    const BalancedSplit skew = balanced_split(std::vector<int>{5, 1, 1, 1}, 5);
    REQUIRE(skew.sumFirst == 5);
    REQUIRE(skew.sumSecond == 3);
    REQUIRE(skew.first == std::vector<int>{0});

    const BalancedSplit single = balanced_split(std::vector<int>{7}, 7);
    REQUIRE(single.sumFirst == 7);
    REQUIRE(single.sumSecond == 0);
    REQUIRE(single.second.empty());

    // Greedy discrepancy never exceeds the largest block.
    DetRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int count = 1 + static_cast<int>(rng.below(12));
        std::vector<int> sizes;
        int maxSize = 1;
        for (int i = 0; i < count; ++i) {
            sizes.push_back(1 + static_cast<int>(rng.below(9)));
            maxSize = std::max(maxSize, sizes.back());
        }
        const BalancedSplit split = balanced_split(sizes, 9);
        REQUIRE(std::abs(split.sumFirst - split.sumSecond) <= maxSize);
        REQUIRE(split.sumFirst + split.sumSecond ==
                std::accumulate(sizes.begin(), sizes.end(), 0ll));
    }

    REQUIRE_THROWS_AS(balanced_split(std::vector<int>{3}, 2), InvalidArgument);
    REQUIRE_THROWS_AS(balanced_split(std::vector<int>{0}, 2), InvalidArgument);
    REQUIRE_THROWS_AS(balanced_split(std::vector<int>{1}, 0), InvalidArgument);
}

TEST_CASE("separation certificate on the 64-cycle") {
    const NonUlaReport rep = non_ula_certificate(SpaceSequence({cycle(64)}), 2.0);
    REQUIRE(rep.allCertified);
    const NonUlaRow& row = rep.rows[0];
    REQUIRE(row.applicable);
    REQUIRE(row.certified);
    REQUIRE(row.eps == 1.0);
    // Smallest workable scale: an arc of 5 sheds 4 points within distance 2.
    REQUIRE(row.S == 4.0);
    REQUIRE(row.decomposition.blocks.size() == 12);
    REQUIRE(row.decomposition.blocks[0].points == std::vector<int>{0, 1, 2, 62, 63});
    REQUIRE(row.decomposition.blocks[1].points == std::vector<int>{5, 6, 7});
    REQUIRE(row.decomposition.mu == 38.0 / 64.0);
    REQUIRE(row.gateMu);
    // The sufficient size gate fails (ball of radius 4 has 9 of 64 points)
    // while the verified product still clears 1/32.
    REQUIRE_FALSE(row.gateSizeRatio);
    REQUIRE(row.A.points.size() == 20);
    REQUIRE(row.B.points.size() == 18);
    REQUIRE(row.product == 360);
    REQUIRE(row.normalized == 360.0 / 4096.0);
    // Re-verify the certified inequalities directly.
    const FiniteMetricSpace c64 = cycle(64);
    REQUIRE(set_distance(c64, row.A.points, row.B.points) >= 2.0);
    REQUIRE(32 * row.product >= 64ull * 64ull);
    REQUIRE(decomposition_invariants_ok(c64, row.decomposition));
    REQUIRE(row.A.scope == 0);
    REQUIRE(row.decomposition.blocks[0].scope == 0);
}

TEST_CASE("certificate reports inapplicable pieces") {
    const NonUlaReport rep = non_ula_certificate(SpaceSequence({cycle(64), cycle(8)}), 2.0);
    REQUIRE_FALSE(rep.allCertified);
    REQUIRE(rep.rows[0].certified);
    const NonUlaRow& small = rep.rows[1];
    REQUIRE_FALSE(small.applicable);
    REQUIRE_FALSE(small.certified);
    REQUIRE_FALSE(small.reason.empty());
    REQUIRE(small.piece == 1);

    REQUIRE_THROWS_AS(non_ula_certificate(SpaceSequence({cycle(8)}), 2.0, 0.0), InvalidArgument);
    REQUIRE_THROWS_AS(non_ula_certificate(SpaceSequence({cycle(8)}), 2.0, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(non_ula_certificate(SpaceSequence({cycle(8)}), -1.0), InvalidArgument);
}

TEST_CASE("certificate rows are thread-count independent") {
    const SpaceSequence S({cycle(64), cycle(32), cycle(8)});
    const NonUlaReport a = non_ula_certificate(S, 2.0, 0.5, 18, 1);
    const NonUlaReport b = non_ula_certificate(S, 2.0, 0.5, 18, 8);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        REQUIRE(a.rows[i].certified == b.rows[i].certified);
        REQUIRE(a.rows[i].S == b.rows[i].S);
        REQUIRE(a.rows[i].product == b.rows[i].product);
        REQUIRE(a.rows[i].A.points == b.rows[i].A.points);
        REQUIRE(a.rows[i].B.points == b.rows[i].B.points);
    }
}
