#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "asymexp/generators.hpp"

using namespace asymexp;

TEST_CASE("cycle family") {
    const FiniteMetricSpace C8 = cycle(8);
    REQUIRE(C8.size() == 8);
    REQUIRE(C8.distance(0, 4) == 4.0);
    REQUIRE(C8.diameter() == 4.0);

    const FiniteMetricSpace C3 = cycle(3);
    REQUIRE(C3.diameter() == 1.0);
    for (int i = 0; i < 3; ++i) REQUIRE(C3.degree(i) == 2);

    REQUIRE(cycle(1).size() == 1);
    const FiniteMetricSpace C2 = cycle(2);
    REQUIRE(C2.distance(0, 1) == 1.0);
    REQUIRE(C2.degree(0) == 1);
    REQUIRE_THROWS_AS(cycle(0), InvalidArgument);
}

TEST_CASE("path, complete, hypercube") {
    const FiniteMetricSpace P4 = path(4);
    REQUIRE(P4.distance(0, 3) == 3.0);
    REQUIRE(P4.degree(0) == 1);
    REQUIRE(P4.degree(1) == 2);

    const FiniteMetricSpace K5 = complete(5);
    REQUIRE(K5.diameter() == 1.0);
    REQUIRE(growth_function(K5, 1.0) == 5);

    const FiniteMetricSpace Q3 = hypercube(3);
    REQUIRE(Q3.size() == 8);
    REQUIRE(Q3.distance(0, 7) == 3.0);
    for (int v = 0; v < 8; ++v) REQUIRE(Q3.degree(v) == 3);
    REQUIRE(hypercube(0).size() == 1);
    REQUIRE_THROWS_AS(hypercube(12), InvalidArgument);
    REQUIRE_THROWS_AS(path(0), InvalidArgument);
    REQUIRE_THROWS_AS(complete(0), InvalidArgument);
}

TEST_CASE("random regular graphs are regular, simple, and seed-stable") {
    // n=4, k=3 admits exactly one graph.
    const FiniteMetricSpace K4 = random_regular(4, 3, 123);
    REQUIRE(K4.diameter() == 1.0);

    const FiniteMetricSpace G = random_regular(10, 3, 7);
    for (int v = 0; v < 10; ++v) REQUIRE(G.degree(v) == 3);
    const FiniteMetricSpace G2 = random_regular(10, 3, 7);
    REQUIRE(G.edges() == G2.edges());

    const FiniteMetricSpace H = random_regular(50, 3, 1);
    for (int v = 0; v < 50; ++v) REQUIRE(H.degree(v) == 3);

    REQUIRE_THROWS_AS(random_regular(5, 3, 0), InvalidArgument);   // nk odd
    REQUIRE_THROWS_AS(random_regular(4, 2, 0), InvalidArgument);   // k < 3
    REQUIRE_THROWS_AS(random_regular(4, 5, 0), InvalidArgument);   // k >= n
}

TEST_CASE("gluing attaches one bridge edge") {
    const FiniteMetricSpace glued = glue_example(complete(4), path(2), 0, 0);
    REQUIRE(glued.size() == 6);
    REQUIRE(glued.edges().size() == 8);
    // Attached part occupies indices 4,5; its 1-boundary is the attach vertex.
    REQUIRE(r_boundary(glued, {4, 5}, 1.0) == std::vector<int>{0});
    REQUIRE(glued.distance(0, 5) == 2.0);
    // Hand BFS: far base vertex to far attached vertex.
    REQUIRE(glued.distance(1, 5) == 3.0);
    REQUIRE(glued.distance(3, 5) == 3.0);

    const FiniteMetricSpace twoPaths = glue_example(path(2), path(2), 1, 0);
    REQUIRE(twoPaths.size() == 4);
    REQUIRE(twoPaths.edges().size() == 3);
    REQUIRE(twoPaths.diameter() == 3.0);

    REQUIRE_THROWS_AS(
        glue_example(FiniteMetricSpace::fromDistances({{0, 1}, {1, 0}}), path(2), 0, 0),
        InvalidArgument);
    REQUIRE_THROWS_AS(glue_example(complete(4), path(2), 4, 0), OutOfRange);
}

TEST_CASE("glued family enforces the size hypotheses") {
    GluedSpec spec;
    spec.baseSizes = {16, 36, 64};
    spec.seed = 7;
    const GluedFamily fam = glued_sequence(spec);
    REQUIRE(fam.smallSizes == std::vector<int>{4, 6, 8});
    REQUIRE(fam.seq.pieceCount() == 3);
    REQUIRE(fam.seq.piece(0).size() == 20);
    REQUIRE(fam.seq.piece(1).size() == 42);
    REQUIRE(fam.seq.piece(2).size() == 72);
    for (int p = 0; p < 3; ++p) REQUIRE(fam.seq.piece(p).isGraph());

    REQUIRE(default_glued_sizes(6) == std::vector<int>{16, 36, 64, 100, 144, 196});

    // ceil(sqrt(17)) = 5 pushes the ratio back up: 5/17 > 4/16.
    GluedSpec bad;
    bad.baseFamily = "cycle";
    bad.baseSizes = {16, 17};
    REQUIRE_THROWS_AS(glued_sequence(bad), InvalidArgument);

    GluedSpec empty;
    REQUIRE_THROWS_AS(glued_sequence(empty), InvalidArgument);
}

TEST_CASE("interleaved bundle splits union pieces into separate codomain pieces") {
    const SpaceSequence expanders({complete(5), complete(6), complete(7)});
    const InterleavedBundle bundle = interleaved_counterexample(expanders, 3);
    REQUIRE(bundle.X->pieceCount() == 3);
    REQUIRE(bundle.Y->pieceCount() == 6);

    // Domain piece n holds W_n then a cycle of length n at internal gap 2n.
    const FiniteMetricSpace& X3 = bundle.X->piece(2);
    REQUIRE(X3.size() == 7 + 3);
    REQUIRE(X3.distance(0, 7) == 6.0);
    REQUIRE(X3.distance(7, 8) == 1.0);
    REQUIRE_FALSE(X3.isGraph());

    // Codomain interleaves cycle-first.
    REQUIRE(bundle.Y->piece(0).size() == 1);
    REQUIRE(bundle.Y->piece(1).size() == 5);
    REQUIRE(bundle.Y->piece(2).size() == 2);
    REQUIRE(bundle.Y->piece(3).size() == 6);

    // Identity on points: W part goes to the W piece, cycle part to the cycle piece.
    REQUIRE(bundle.map.image(0, 2) == std::pair<int, int>{1, 2});
    REQUIRE(bundle.map.image(0, 5) == std::pair<int, int>{0, 0});
    REQUIRE(bundle.map.image(2, 9) == std::pair<int, int>{4, 2});
    REQUIRE(bundle.map.targetPieces(0) == std::vector<int>{0, 1});
    REQUIRE(bundle.map.domainPieceForTarget(3) == 1);

    REQUIRE_THROWS_AS(interleaved_counterexample(expanders, 4), InvalidArgument);
    REQUIRE_THROWS_AS(interleaved_counterexample(expanders, 0), InvalidArgument);

    // A first part with diameter above 4n cannot keep the 2n internal gap.
    const SpaceSequence longPiece({path(6)});
    REQUIRE_THROWS_AS(interleaved_counterexample(longPiece, 1), GenerationFailed);
}

TEST_CASE("interleaved map moduli: identity with zero density radius") {
    const SpaceSequence expanders({complete(5), complete(6)});
    const InterleavedBundle bundle = interleaved_counterexample(expanders, 2);
    const CoarseModuli mod = estimate_moduli(bundle.map);
    REQUIRE(mod.K == 1);
    REQUIRE(mod.D == 0.0);
    // Within-part pairs keep their distance; rho_- at 0 is 0.
    REQUIRE(mod.rhoMinus.eval(0.0) == 0.0);
    REQUIRE(mod.rhoPlus.eval(1.0) >= 1.0);
    // Cross-part pairs at domain distance 2 land in different codomain
    // pieces, at least the smallest codomain gap apart.
    REQUIRE(mod.rhoPlus.eval(2.0) >= 4.0);
}

TEST_CASE("deterministic shuffling is bit-stable") {
    DetRng a(42), b(42);
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<int> v2 = v1;
    det_shuffle(v1, a);
    det_shuffle(v2, b);
    REQUIRE(v1 == v2);
    REQUIRE(a.below(10) == b.below(10));
    REQUIRE_THROWS_AS(a.below(0), InvalidArgument);
}
