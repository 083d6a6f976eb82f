#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <memory>
#include <vector>

#include "asymexp/coarse_map.hpp"
#include "asymexp/generators.hpp"

using namespace asymexp;

namespace {

std::shared_ptr<const SpaceSequence> seqOf(std::vector<FiniteMetricSpace> pieces) {
    return std::make_shared<SpaceSequence>(std::move(pieces));
}

CoarseMap identity_map(const std::shared_ptr<const SpaceSequence>& S) {
    std::vector<MapEntry> entries;
    for (int p = 0; p < S->pieceCount(); ++p) {
        MapEntry e;
        e.from = p;
        e.to = p;
        e.map.resize(static_cast<std::size_t>(S->piece(p).size()));
        for (int i = 0; i < S->piece(p).size(); ++i) e.map[static_cast<std::size_t>(i)] = i;
        entries.push_back(std::move(e));
    }
    return CoarseMap(S, S, std::move(entries));
}

// i -> floor(i/2) from a 2n-cycle onto an n-cycle.
CoarseMap halving_map(int n2, std::shared_ptr<const SpaceSequence>* domOut = nullptr) {
    auto dom = seqOf({cycle(n2)});
    auto cod = seqOf({cycle(n2 / 2)});
    MapEntry e;
    e.from = 0;
    e.to = 0;
    for (int i = 0; i < n2; ++i) e.map.push_back(i / 2);
    if (domOut) *domOut = dom;
    return CoarseMap(dom, cod, {e});
}

}  // namespace

TEST_CASE("coarse map construction rejects malformed entries") {
    auto dom = seqOf({cycle(4)});
    auto cod = seqOf({cycle(4), cycle(4)});
    const std::vector<int> id4{0, 1, 2, 3};

    REQUIRE_THROWS_AS(CoarseMap(nullptr, cod, {}), InvalidArgument);
    // Wrong map length.
    REQUIRE_THROWS_AS(CoarseMap(dom, cod, {MapEntry{0, 0, {0, 1}}}), InvalidMap);
    // Image index out of range.
    REQUIRE_THROWS_AS(CoarseMap(dom, cod, {MapEntry{0, 0, {0, 1, 2, 4}}}), InvalidMap);
    // Not total: one point unassigned.
    REQUIRE_THROWS_AS(CoarseMap(dom, cod, {MapEntry{0, 0, {0, 1, 2, -1}}}), InvalidMap);
    // Entry with no points.
    REQUIRE_THROWS_AS(CoarseMap(dom, cod,
                                {MapEntry{0, 0, id4}, MapEntry{0, 1, {-1, -1, -1, -1}}}),
                      InvalidMap);
    // Duplicate (from,to).
    REQUIRE_THROWS_AS(CoarseMap(dom, cod,
                                {MapEntry{0, 0, {0, 1, -1, -1}}, MapEntry{0, 0, {-1, -1, 2, 3}}}),
                      InvalidMap);
    // Point mapped twice across entries.
    REQUIRE_THROWS_AS(CoarseMap(dom, cod,
                                {MapEntry{0, 0, id4}, MapEntry{0, 1, {0, -1, -1, -1}}}),
                      InvalidMap);
    // Two domain pieces feeding one codomain piece.
    auto dom2 = seqOf({cycle(4), cycle(4)});
    REQUIRE_THROWS_AS(CoarseMap(dom2, cod,
                                {MapEntry{0, 0, id4}, MapEntry{1, 0, id4}}),
                      InvalidMap);

    // A valid multi-target map: accessors agree with the entries.
    const CoarseMap split(dom, cod, {MapEntry{0, 0, {0, 1, -1, -1}}, MapEntry{0, 1, {-1, -1, 2, 3}}});
    REQUIRE(split.targetPieces(0) == std::vector<int>{0, 1});
    REQUIRE(split.domainPieceForTarget(1) == 0);
    REQUIRE(split.image(0, 1) == std::pair<int, int>{0, 1});
    REQUIRE(split.image(0, 2) == std::pair<int, int>{1, 2});
    REQUIRE(split.preimage(0, 1, {2, 3}) == std::vector<int>{2, 3});
}

TEST_CASE("empirical moduli of model maps") {
    // Identity: both envelopes are the identity on realized distances.
    auto c8 = seqOf({cycle(8)});
    const CoarseModuli idm = estimate_moduli(identity_map(c8));
    REQUIRE(idm.D == 0.0);
    REQUIRE(idm.K == 1);
    for (double t : {0.0, 1.0, 2.0, 3.0, 4.0}) {
        REQUIRE(idm.rhoPlus.eval(t) == t);
        REQUIRE(idm.rhoMinus.eval(t) == t);
    }
    REQUIRE(idm.rhoPlus.eval(2.5) == 2.0);
    REQUIRE(idm.rhoMinus.eval(2.5) == 3.0);
    REQUIRE(idm.rhoMinus.eval(5.0) == kInf);

    // Paired quotient P_4 -> P_2.
    auto p4 = seqOf({path(4)});
    auto p2 = seqOf({path(2)});
    const CoarseMap pairs(p4, p2, {MapEntry{0, 0, {0, 0, 1, 1}}});
    const CoarseModuli pm = estimate_moduli(pairs);
    REQUIRE(pm.K == 2);
    REQUIRE(pm.D == 0.0);
    REQUIRE(pm.rhoPlus.knots ==
            std::vector<std::pair<double, double>>{{0, 0}, {1, 1}, {2, 1}, {3, 1}});
    REQUIRE(pm.rhoMinus.knots ==
            std::vector<std::pair<double, double>>{{0, 0}, {1, 0}, {2, 1}, {3, 1}});
    REQUIRE(pm.rhoPlus.eval(1.0) == 1.0);
    REQUIRE(pm.rhoPlus.eval(0.5) == 0.0);
    REQUIRE(pm.rhoMinus.eval(1.5) == 1.0);
    REQUIRE(pm.rhoMinus.eval(3.5) == kInf);

    // Constant map: flat upper envelope, density radius = eccentricity of
    // the image point, fiber = everything.
    auto pa4 = seqOf({path(4)});
    const CoarseMap constant(pa4, pa4, {MapEntry{0, 0, {0, 0, 0, 0}}});
    const CoarseModuli cm = estimate_moduli(constant);
    REQUIRE(cm.K == 4);
    REQUIRE(cm.D == 3.0);
    for (double t : {0.0, 1.0, 3.0}) {
        REQUIRE(cm.rhoPlus.eval(t) == 0.0);
        REQUIRE(cm.rhoMinus.eval(t) == 0.0);
    }
}

TEST_CASE("moduli envelopes sandwich their own prefix") {
    std::vector<CoarseMap> maps;
    maps.push_back(halving_map(16));
    auto dom = seqOf({random_regular(12, 3, 7)});
    auto cod = seqOf({cycle(6)});
    DetRng rng(31);
    MapEntry e;
    e.from = 0;
    e.to = 0;
    for (int i = 0; i < 12; ++i) e.map.push_back(static_cast<int>(rng.below(6)));
    maps.emplace_back(dom, cod, std::vector<MapEntry>{e});
    for (const CoarseMap& m : maps) {
        const CoarseModuli mod = estimate_moduli(m);
        REQUIRE(mod.K >= 1);
        REQUIRE(mod.D >= 0.0);
        for (const auto& knot : mod.rhoPlus.knots) {
            REQUIRE(mod.rhoMinus.eval(knot.first) <= mod.rhoPlus.eval(knot.first));
        }
        for (int p = 0; p < m.domain().pieceCount(); ++p) {
            const FiniteMetricSpace& piece = m.domain().piece(p);
            for (int i = 0; i < piece.size(); ++i) {
                for (int j = i; j < piece.size(); ++j) {
                    const double d = piece.distance(i, j);
                    const double di =
                        m.codomain().distance(m.imageGlobal(p, i), m.imageGlobal(p, j));
                    REQUIRE(di <= mod.rhoPlus.eval(d));
                    REQUIRE(di >= mod.rhoMinus.eval(d));
                }
            }
        }
    }
}

TEST_CASE("pullback counting bound") {
    auto c8 = seqOf({cycle(8)});
    const CoarseMap id = identity_map(c8);
    // Identity at D=0: equality.
    const InequalityCheck eq = pullback_bound_check(id, 0, {1, 3, 5}, 0.0);
    REQUIRE(eq.ok);
    REQUIRE(eq.lhs == 3.0);
    REQUIRE(eq.rhs == 3.0);
    // Empty B: vacuous.
    const InequalityCheck empty = pullback_bound_check(id, 0, {}, 0.0);
    REQUIRE(empty.ok);
    REQUIRE(empty.rhs == 0.0);

    // Two-to-one halving map.
    const CoarseMap half = halving_map(16);
    const InequalityCheck two = pullback_bound_check(half, 0, {0, 1}, 0.0);
    REQUIRE(two.ok);
    REQUIRE(two.lhs == 4.0);
    REQUIRE(two.rhs == 2.0);
    // At D=1 the whole of B is inner boundary, so the bound degenerates.
    const InequalityCheck deg = pullback_bound_check(half, 0, {0, 1}, 1.0);
    REQUIRE(deg.ok);
    REQUIRE(deg.rhs == 0.0);

    // Density precondition: a constant map is not 1-dense in an 8-cycle.
    const CoarseMap constant(c8, c8, {MapEntry{0, 0, {0, 0, 0, 0, 0, 0, 0, 0}}});
    REQUIRE_THROWS_AS(pullback_bound_check(constant, 0, {4}, 1.0), DensityViolated);
    REQUIRE_THROWS_AS(pullback_bound_check(id, 0, {9}, 0.0), OutOfRange);
}

TEST_CASE("gated half selection") {
    auto c8 = seqOf({cycle(8)});
    const CoarseMap id = identity_map(c8);
    const HalfSelection same = half_selection(id, 0, {0, 1, 2}, 0.0);
    REQUIRE(same.ok);
    REQUIRE(same.branch == HalfBranch::Preimage);
    REQUIRE(same.A == std::vector<int>{0, 1, 2});
    REQUIRE(same.halfBound.ok);
    REQUIRE(same.lowerBound.ok);

    // Heavy fiber forces the complement branch.
    auto cod = seqOf({cycle(4)});
    const CoarseMap uneven(c8, cod, {MapEntry{0, 0, {0, 0, 0, 0, 0, 1, 2, 3}}});
    const HalfSelection comp = half_selection(uneven, 0, {0}, 0.0);
    REQUIRE(comp.ok);
    REQUIRE(comp.branch == HalfBranch::Complement);
    REQUIRE(comp.A == std::vector<int>{5, 6, 7});
    REQUIRE(comp.halfBound.ok);
    REQUIRE(comp.lowerBound.ok);

    // Gate failures report which hypothesis broke.
    const HalfSelection tooBig = half_selection(id, 0, {0, 1, 2, 3, 4}, 0.0);
    REQUIRE_FALSE(tooBig.ok);
    REQUIRE(tooBig.failedGate == "BSizeGate");
    const HalfSelection ragged = half_selection(id, 0, {0, 1}, 1.0);
    REQUIRE_FALSE(ragged.ok);
    REQUIRE(ragged.failedGate == "BoundaryGate");
    REQUIRE(ragged.gateLhs == -2.0);
}

TEST_CASE("boundary transfer bound") {
    auto c8 = seqOf({cycle(8)});
    const CoarseMap id = identity_map(c8);
    const CoarseModuli mod = estimate_moduli(id);
    const BoundaryTransfer bt = boundary_transfer_check(id, 0, {0, 1, 2}, 1.0, mod.K, mod.rhoPlus);
    REQUIRE(bt.codomainBoundary == 2.0);
    REQUIRE(bt.preimageBranch.ok);
    REQUIRE(bt.preimageBranch.lhs == 2.0);
    REQUIRE(bt.preimageBranch.rhs == 6.0);  // K=1, N_X(1)=3, boundary 2
    REQUIRE(bt.complementBranch.ok);
    REQUIRE(bt.complementBranch.lhs == 2.0);

    const BoundaryTransfer empty = boundary_transfer_check(id, 0, {}, 1.0, mod.K, mod.rhoPlus);
    REQUIRE(empty.preimageBranch.ok);
    REQUIRE(empty.preimageBranch.lhs == 0.0);
    REQUIRE(empty.complementBranch.ok);
    REQUIRE(empty.complementBranch.lhs == 0.0);
}

TEST_CASE("lemma battery over randomized maps and sets") {
    std::vector<CoarseMap> maps;
    maps.push_back(halving_map(16));
    auto dom = seqOf({random_regular(12, 3, 5)});
    auto cod = seqOf({cycle(6)});
    DetRng mapRng(77);
    MapEntry e;
    e.from = 0;
    e.to = 0;
    for (int i = 0; i < 12; ++i) e.map.push_back(static_cast<int>(mapRng.below(6)));
    maps.emplace_back(dom, cod, std::vector<MapEntry>{e});
    auto c8 = seqOf({cycle(8)});
    maps.push_back(CoarseMap(c8, seqOf({cycle(4)}),
                             {MapEntry{0, 0, {0, 0, 0, 0, 0, 1, 2, 3}}}));

    DetRng rng(123);
    int checked = 0;
    for (const CoarseMap& m : maps) {
        const CoarseModuli mod = estimate_moduli(m);
        const int ySize = m.codomain().piece(0).size();
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<int> B;
            for (int b = 0; b < ySize; ++b) {
                if (rng.below(3) == 0) B.push_back(b);
            }
            const InequalityCheck pull = pullback_bound_check(m, 0, B, mod.D);
            REQUIRE(pull.ok);
            for (double S : {1.0, 2.0}) {
                const BoundaryTransfer bt =
                    boundary_transfer_check(m, 0, B, S, mod.K, mod.rhoPlus);
                REQUIRE(bt.preimageBranch.ok);
                REQUIRE(bt.complementBranch.ok);
            }
            const HalfSelection sel = half_selection(m, 0, B, mod.D);
            if (sel.ok) {
                REQUIRE(sel.halfBound.ok);
                REQUIRE(sel.lowerBound.ok);
            } else {
                REQUIRE((sel.failedGate == "BSizeGate" || sel.failedGate == "BoundaryGate"));
            }
            ++checked;
        }
    }
    REQUIRE(checked == 75);
}

TEST_CASE("refutation transfer along the identity returns the witness") {
    auto c8 = seqOf({cycle(8)});
    const CoarseMap id = identity_map(c8);
    const std::vector<CodomainWitness> witnesses{{0, {0, 1, 2, 3}, 1.0}};
    const std::vector<TransferRow> rows = transfer_refutation(id, witnesses, 1.0);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].transferred);
    REQUIRE(rows[0].branch == HalfBranch::Preimage);
    REQUIRE(rows[0].A == std::vector<int>{0, 1, 2, 3});
    REQUIRE(rows[0].steps.size() == 7);
    for (const TransferStep& st : rows[0].steps) {
        INFO(st.name);
        REQUIRE(st.check.ok);
    }

    // Witness below the transferred scale is skipped, not faked.
    const std::vector<TransferRow> skipped =
        transfer_refutation(id, {{0, {0, 1, 2, 3}, 0.5}}, 1.0);
    REQUIRE_FALSE(skipped[0].transferred);
    REQUIRE(skipped[0].skipReason.substr(0, 9) == "ScaleGate");

    // Oversized witness hits the selection gate.
    const std::vector<TransferRow> gated =
        transfer_refutation(id, {{0, {0, 1, 2, 3, 4}, 1.0}}, 1.0);
    REQUIRE_FALSE(gated[0].transferred);
    REQUIRE(gated[0].skipReason == "BSizeGate");
}

TEST_CASE("refutation transfer across the interleaved bundle") {
    const SpaceSequence expanders({complete(4), complete(4), complete(4)});
    const InterleavedBundle bundle = interleaved_counterexample(expanders, 3);
    // Witnesses live on the cycle-backed codomain pieces 0, 2, 4.
    std::vector<CodomainWitness> witnesses;
    for (int i = 0; i < 3; ++i) {
        witnesses.push_back({2 * i, {0}, 1.0});
    }
    const std::vector<TransferRow> rows = transfer_refutation(bundle.map, witnesses, 1.0);
    REQUIRE(rows.size() == 3);
    for (const TransferRow& row : rows) {
        REQUIRE(row.transferred);
        for (const TransferStep& st : row.steps) {
            INFO("piece " << row.codomainPiece << " step " << st.name);
            REQUIRE(st.check.ok);
        }
    }
    // Cycle point 0 of piece i sits at local index |W| = 4 in the domain.
    REQUIRE(rows[0].A == std::vector<int>{4});
    REQUIRE(rows[0].domainPiece == 0);
}
