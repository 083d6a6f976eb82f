#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/errors.hpp"
#include "asymexp/metric_space.hpp"
#include "asymexp/space_sequence.hpp"

namespace asymexp {

// Monotone step function sampled at realized parameter values. Used for the
// distortion moduli of a coarse map.
struct StepFunction {
    enum class Kind { UpperEnvelope, LowerEnvelope };

    Kind kind = Kind::UpperEnvelope;
    std::vector<std::pair<double, double>> knots;  // (t, value), t strictly increasing

    // UpperEnvelope (rho_plus): value over parameters <= t. LowerEnvelope
    // (rho_minus): value over parameters >= t (+inf past the last knot).
    double eval(double t) const {
        if (kind == Kind::UpperEnvelope) {
            double v = 0.0;
            for (const auto& k : knots) {
                if (k.first <= t) {
                    v = k.second;
                } else {
                    break;
                }
            }
            return v;
        }
        for (const auto& k : knots) {
            if (k.first >= t) return k.second;
        }
        return kInf;
    }
};

struct CoarseModuli {
    StepFunction rhoPlus;
    StepFunction rhoMinus;
    double D = 0.0;  // density radius: every target point within D of the image
    int K = 0;       // largest fiber cardinality
};

// One block of a coarse map: a (possibly partial) point map from domain
// piece `from` into codomain piece `to`. map has one slot per domain point;
// -1 marks points covered by another entry of the same domain piece.
struct MapEntry {
    int from = 0;
    int to = 0;
    std::vector<int> map;
};

// A map between two space sequences, stored blockwise. Every domain point is
// covered by exactly one entry; no codomain piece is targeted by two
// different domain pieces. A domain piece may span several codomain pieces
// (then the map is not piece-to-piece and the lemma machinery works with the
// union of its target pieces as the codomain space).
class CoarseMap {
public:
    CoarseMap(std::shared_ptr<const SpaceSequence> domain,
              std::shared_ptr<const SpaceSequence> codomain, std::vector<MapEntry> entries)
        : domain_(std::move(domain)), codomain_(std::move(codomain)), entries_(std::move(entries)) {
        if (!domain_ || !codomain_) throw InvalidArgument("CoarseMap: null sequence");
        std::sort(entries_.begin(), entries_.end(), [](const MapEntry& a, const MapEntry& b) {
            return a.from != b.from ? a.from < b.from : a.to < b.to;
        });
        const int dm = domain_->pieceCount();
        const int cm = codomain_->pieceCount();
        imagePiece_.assign(static_cast<std::size_t>(dm), {});
        imageLocal_.assign(static_cast<std::size_t>(dm), {});
        targetsOf_.assign(static_cast<std::size_t>(dm), {});
        domainPieceOfTarget_.assign(static_cast<std::size_t>(cm), -1);
        for (int p = 0; p < dm; ++p) {
            const int sz = domain_->piece(p).size();
            imagePiece_[static_cast<std::size_t>(p)].assign(static_cast<std::size_t>(sz), -1);
            imageLocal_[static_cast<std::size_t>(p)].assign(static_cast<std::size_t>(sz), -1);
        }
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            const MapEntry& ent = entries_[e];
            domain_->checkPiece(ent.from);
            codomain_->checkPiece(ent.to);
            if (e > 0 && entries_[e - 1].from == ent.from && entries_[e - 1].to == ent.to) {
                throw InvalidMap("CoarseMap: duplicate (from,to) entry");
            }
            const int dsz = domain_->piece(ent.from).size();
            const int csz = codomain_->piece(ent.to).size();
            if (static_cast<int>(ent.map.size()) != dsz) {
                throw InvalidMap("CoarseMap: entry map length must equal domain piece size");
            }
            int& owner = domainPieceOfTarget_[static_cast<std::size_t>(ent.to)];
            if (owner != -1 && owner != ent.from) {
                throw InvalidMap("CoarseMap: codomain piece targeted by two domain pieces");
            }
            owner = ent.from;
            bool used = false;
            for (int i = 0; i < dsz; ++i) {
                const int img = ent.map[static_cast<std::size_t>(i)];
                if (img == -1) continue;
                used = true;
                if (img < 0 || img >= csz) throw InvalidMap("CoarseMap: image index out of range");
                if (imagePiece_[static_cast<std::size_t>(ent.from)][static_cast<std::size_t>(i)] != -1) {
                    throw InvalidMap("CoarseMap: point mapped twice");
                }
                imagePiece_[static_cast<std::size_t>(ent.from)][static_cast<std::size_t>(i)] = ent.to;
                imageLocal_[static_cast<std::size_t>(ent.from)][static_cast<std::size_t>(i)] = img;
            }
            if (!used) throw InvalidMap("CoarseMap: entry covers no point");
            targetsOf_[static_cast<std::size_t>(ent.from)].push_back(ent.to);
        }
        for (int p = 0; p < dm; ++p) {
            for (int i = 0; i < domain_->piece(p).size(); ++i) {
                if (imagePiece_[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)] == -1) {
                    throw InvalidMap("CoarseMap: map is not total on piece " + std::to_string(p));
                }
            }
            auto& t = targetsOf_[static_cast<std::size_t>(p)];
            std::sort(t.begin(), t.end());
        }
    }

    const SpaceSequence& domain() const { return *domain_; }
    const SpaceSequence& codomain() const { return *codomain_; }
    std::shared_ptr<const SpaceSequence> domainPtr() const { return domain_; }
    std::shared_ptr<const SpaceSequence> codomainPtr() const { return codomain_; }
    const std::vector<MapEntry>& entries() const { return entries_; }

    // Domain pieces with entries; every piece has at least one by totality.
    const std::vector<int>& targetPieces(int domainPiece) const {
        domain_->checkPiece(domainPiece);
        return targetsOf_[static_cast<std::size_t>(domainPiece)];
    }

    int domainPieceForTarget(int codomainPiece) const {
        codomain_->checkPiece(codomainPiece);
        return domainPieceOfTarget_[static_cast<std::size_t>(codomainPiece)];
    }

    // Image of a domain point, as (codomain piece, local index).
    std::pair<int, int> image(int domainPiece, int local) const {
        domain_->checkPiece(domainPiece);
        domain_->piece(domainPiece).checkPoint(local);
        return {imagePiece_[static_cast<std::size_t>(domainPiece)][static_cast<std::size_t>(local)],
                imageLocal_[static_cast<std::size_t>(domainPiece)][static_cast<std::size_t>(local)]};
    }

    int imageGlobal(int domainPiece, int local) const {
        const auto [cp, cl] = image(domainPiece, local);
        return codomain_->toGlobal(cp, cl);
    }

    // Points of the domain piece mapping into B (local indices within
    // codomain piece cPiece).
    std::vector<int> preimage(int domainPiece, int cPiece, const std::vector<int>& B) const {
        domain_->checkPiece(domainPiece);
        codomain_->checkPiece(cPiece);
        validate_set(codomain_->piece(cPiece), B);
        std::vector<int> out;
        const int sz = domain_->piece(domainPiece).size();
        for (int i = 0; i < sz; ++i) {
            const auto [cp, cl] = image(domainPiece, i);
            if (cp == cPiece && std::binary_search(B.begin(), B.end(), cl)) out.push_back(i);
        }
        return out;
    }

private:
    std::shared_ptr<const SpaceSequence> domain_, codomain_;
    std::vector<MapEntry> entries_;
    std::vector<std::vector<int>> targetsOf_;
    std::vector<int> domainPieceOfTarget_;
    std::vector<std::vector<int>> imagePiece_, imageLocal_;
};

// ---- Ambient helpers for lemma checks --------------------------------------
//
// The codomain space of the lemma battery for a domain piece is the union of
// that piece's target pieces, carrying the codomain union metric.

namespace detail {

inline std::vector<int> target_union_globals(const CoarseMap& m, int domainPiece) {
    std::vector<int> out;
    for (int t : m.targetPieces(domainPiece)) {
        const int off = m.codomain().offset(t);
        for (int i = 0; i < m.codomain().piece(t).size(); ++i) out.push_back(off + i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// |{x in ambient \ B : d(x, B) <= r}| with B given as global codomain indices.
inline std::vector<int> ambient_outer_boundary(const SpaceSequence& Y,
                                               const std::vector<int>& ambient,
                                               const std::vector<int>& Bglobal, double r) {
    std::vector<int> out;
    for (int g : ambient) {
        if (std::binary_search(Bglobal.begin(), Bglobal.end(), g)) continue;
        if (union_point_to_set(Y, g, Bglobal) <= r) out.push_back(g);
    }
    return out;
}

// Inner boundary of B within the ambient set.
inline std::vector<int> ambient_inner_boundary(const SpaceSequence& Y,
                                               const std::vector<int>& ambient,
                                               const std::vector<int>& Bglobal, double r) {
    std::vector<int> comp;
    for (int g : ambient) {
        if (!std::binary_search(Bglobal.begin(), Bglobal.end(), g)) comp.push_back(g);
    }
    std::vector<int> out;
    for (int g : Bglobal) {
        if (union_point_to_set(Y, g, comp) <= r) out.push_back(g);
    }
    return out;
}

}  // namespace detail

// Empirical moduli of a coarse map over the realized prefix: distortion
// envelopes rho_-/rho_+, density radius D, and max fiber size K.
inline CoarseModuli estimate_moduli(const CoarseMap& m) {
    const SpaceSequence& X = m.domain();
    const SpaceSequence& Y = m.codomain();
    std::map<double, std::pair<double, double>> byDist;  // td -> (maxTi, minTi)
    for (int p = 0; p < X.pieceCount(); ++p) {
        const FiniteMetricSpace& piece = X.piece(p);
        for (int i = 0; i < piece.size(); ++i) {
            const int gi = m.imageGlobal(p, i);
            for (int j = i; j < piece.size(); ++j) {
                const double td = piece.distance(i, j);
                const double ti = Y.distance(gi, m.imageGlobal(p, j));
                auto [it, fresh] = byDist.try_emplace(td, std::make_pair(ti, ti));
                if (!fresh) {
                    it->second.first = std::max(it->second.first, ti);
                    it->second.second = std::min(it->second.second, ti);
                }
            }
        }
    }
    CoarseModuli out;
    out.rhoPlus.kind = StepFunction::Kind::UpperEnvelope;
    out.rhoMinus.kind = StepFunction::Kind::LowerEnvelope;
    double runMax = 0.0;
    for (const auto& [td, mm] : byDist) {
        runMax = std::max(runMax, mm.first);
        out.rhoPlus.knots.emplace_back(td, runMax);
    }
    double runMin = kInf;
    for (auto it = byDist.rbegin(); it != byDist.rend(); ++it) {
        runMin = std::min(runMin, it->second.second);
        out.rhoMinus.knots.emplace_back(it->first, runMin);
    }
    std::reverse(out.rhoMinus.knots.begin(), out.rhoMinus.knots.end());

    std::map<int, int> fibers;
    for (int p = 0; p < X.pieceCount(); ++p) {
        std::vector<int> imageGlobals;
        for (int i = 0; i < X.piece(p).size(); ++i) {
            const int g = m.imageGlobal(p, i);
            imageGlobals.push_back(g);
            ++fibers[g];
        }
        std::sort(imageGlobals.begin(), imageGlobals.end());
        imageGlobals.erase(std::unique(imageGlobals.begin(), imageGlobals.end()), imageGlobals.end());
        for (int g : detail::target_union_globals(m, p)) {
            out.D = std::max(out.D, union_point_to_set(Y, g, imageGlobals));
        }
    }
    for (const auto& [g, c] : fibers) out.K = std::max(out.K, c);
    return out;
}

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // >= 0 iff ok (within tolerance)
    bool ok = false;
};

inline InequalityCheck make_check_ge(double lhs, double rhs, double tol = 1e-9) {
    InequalityCheck c;
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = lhs - rhs;
    c.ok = lhs >= rhs - tol;
    return c;
}

inline InequalityCheck make_check_le(double lhs, double rhs, double tol = 1e-9) {
    InequalityCheck c;
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = rhs - lhs;
    c.ok = lhs <= rhs + tol;
    return c;
}

// Pullback counting bound: |psi^-1(B)| >= |B| * (1/N_Y(D)) * (1 - |d^in_D(B)|/|B|).
// B is local to codomain piece cPiece; the matched domain piece supplies psi.
// Throws DensityViolated when the image is not D-dense in the target union.
inline InequalityCheck pullback_bound_check(const CoarseMap& m, int cPiece,
                                            const std::vector<int>& B, double D) {
    const int dPiece = m.domainPieceForTarget(cPiece);
    if (dPiece < 0) throw InvalidMap("pullback_bound_check: codomain piece has no matched domain piece");
    const SpaceSequence& Y = m.codomain();
    validate_set(Y.piece(cPiece), B);

    std::vector<int> imageGlobals;
    for (int i = 0; i < m.domain().piece(dPiece).size(); ++i) {
        imageGlobals.push_back(m.imageGlobal(dPiece, i));
    }
    std::sort(imageGlobals.begin(), imageGlobals.end());
    imageGlobals.erase(std::unique(imageGlobals.begin(), imageGlobals.end()), imageGlobals.end());
    const std::vector<int> ambient = detail::target_union_globals(m, dPiece);
    for (int g : ambient) {
        if (union_point_to_set(Y, g, imageGlobals) > D) {
            throw DensityViolated("pullback_bound_check: target point " + std::to_string(g) +
                                  " is farther than D from the image");
        }
    }

    const double lhs = static_cast<double>(m.preimage(dPiece, cPiece, B).size());
    double rhs = 0.0;
    if (!B.empty()) {
        std::vector<int> Bglobal;
        for (int b : B) Bglobal.push_back(Y.toGlobal(cPiece, b));
        const double inner =
            static_cast<double>(detail::ambient_inner_boundary(Y, ambient, Bglobal, D).size());
        const double nyd = static_cast<double>(Y.growth(D));
        rhs = static_cast<double>(B.size()) * (1.0 / nyd) *
              (1.0 - inner / static_cast<double>(B.size()));
    }
    return make_check_ge(lhs, rhs);
}

enum class HalfBranch { Preimage, Complement };

struct HalfSelection {
    bool ok = false;
    std::string failedGate;  // "BSizeGate" | "BoundaryGate" when !ok
    double gateLhs = 0.0, gateRhs = 0.0;
    HalfBranch branch = HalfBranch::Preimage;
    std::vector<int> A;  // local to the matched domain piece
    int domainPiece = -1;
    InequalityCheck halfBound;   // |A| <= |X_n|/2
    InequalityCheck lowerBound;  // |A| >= |B| / (2 N_Y(D))
};

// Gated half-space selection: under |B| <= |Y'|/2 and
// 1 - N_Y(D)|d_D(B)|/|B| >= 1/2, pick A = psi^-1(B) or its complement so that
// |A| <= |X_n|/2 while keeping |A| >= |B|/(2 N_Y(D)).
inline HalfSelection half_selection(const CoarseMap& m, int cPiece, const std::vector<int>& B,
                                    double D) {
    const int dPiece = m.domainPieceForTarget(cPiece);
    if (dPiece < 0) throw InvalidMap("half_selection: codomain piece has no matched domain piece");
    const SpaceSequence& Y = m.codomain();
    validate_set(Y.piece(cPiece), B);
    HalfSelection out;
    out.domainPiece = dPiece;

    const std::vector<int> ambient = detail::target_union_globals(m, dPiece);
    const double nyd = static_cast<double>(Y.growth(D));
    if (2.0 * static_cast<double>(B.size()) > static_cast<double>(ambient.size())) {
        out.failedGate = "BSizeGate";
        out.gateLhs = static_cast<double>(B.size());
        out.gateRhs = static_cast<double>(ambient.size()) / 2.0;
        return out;
    }
    double boundaryRatio = 0.0;
    if (!B.empty()) {
        std::vector<int> Bglobal;
        for (int b : B) Bglobal.push_back(Y.toGlobal(cPiece, b));
        const double outer =
            static_cast<double>(detail::ambient_outer_boundary(Y, ambient, Bglobal, D).size());
        boundaryRatio = nyd * outer / static_cast<double>(B.size());
    }
    if (1.0 - boundaryRatio < 0.5) {
        out.failedGate = "BoundaryGate";
        out.gateLhs = 1.0 - boundaryRatio;
        out.gateRhs = 0.5;
        return out;
    }

    const std::vector<int> pre = m.preimage(dPiece, cPiece, B);
    const int xn = m.domain().piece(dPiece).size();
    if (2 * static_cast<int>(pre.size()) <= xn) {
        out.branch = HalfBranch::Preimage;
        out.A = pre;
    } else {
        out.branch = HalfBranch::Complement;
        out.A = set_complement(xn, pre);
    }
    out.ok = true;
    out.halfBound = make_check_le(static_cast<double>(out.A.size()), static_cast<double>(xn) / 2.0);
    out.lowerBound =
        make_check_ge(static_cast<double>(out.A.size()), static_cast<double>(B.size()) / (2.0 * nyd));
    return out;
}

struct BoundaryTransfer {
    InequalityCheck preimageBranch;    // |d_S(psi^-1 B)|   <= K N_X(S) |d_rho+(S)(B)|
    InequalityCheck complementBranch;  // |d_S(X \ psi^-1 B)| <= same rhs
    double codomainBoundary = 0.0;     // |d_rho+(S)(B)| in the target union
};

// Both halves have S-boundary controlled by the rho_+(S)-boundary of B.
inline BoundaryTransfer boundary_transfer_check(const CoarseMap& m, int cPiece,
                                                const std::vector<int>& B, double S, int K,
                                                const StepFunction& rhoPlus) {
    const int dPiece = m.domainPieceForTarget(cPiece);
    if (dPiece < 0) throw InvalidMap("boundary_transfer_check: codomain piece has no matched domain piece");
    const SpaceSequence& Y = m.codomain();
    const FiniteMetricSpace& Xn = m.domain().piece(dPiece);
    validate_set(Y.piece(cPiece), B);

    std::vector<int> Bglobal;
    for (int b : B) Bglobal.push_back(Y.toGlobal(cPiece, b));
    const std::vector<int> ambient = detail::target_union_globals(m, dPiece);
    const double rp = rhoPlus.eval(S);
    const double cb =
        static_cast<double>(detail::ambient_outer_boundary(Y, ambient, Bglobal, rp).size());
    const double nxs = static_cast<double>(m.domain().growth(S));
    const double rhs = static_cast<double>(K) * nxs * cb;

    const std::vector<int> pre = m.preimage(dPiece, cPiece, B);
    const std::vector<int> comp = set_complement(Xn.size(), pre);
    BoundaryTransfer out;
    out.codomainBoundary = cb;
    out.preimageBranch =
        make_check_le(static_cast<double>(r_boundary(Xn, pre, S).size()), rhs);
    out.complementBranch =
        make_check_le(static_cast<double>(r_boundary(Xn, comp, S).size()), rhs);
    return out;
}

struct CodomainWitness {
    int piece = 0;          // codomain piece carrying the witness
    std::vector<int> B;     // local indices
    double R = 1.0;         // boundary radius the witness was measured at
};

struct TransferStep {
    std::string name;
    InequalityCheck check;
};

struct TransferRow {
    int codomainPiece = -1;
    int domainPiece = -1;
    bool transferred = false;
    std::string skipReason;
    HalfBranch branch = HalfBranch::Preimage;
    std::vector<int> A;  // local to domainPiece
    std::vector<TransferStep> steps;
};

// Pushes codomain expansion refutation witnesses through the map: for each
// witness, gates from the selection lemma, then the counting bounds and the
// boundary-ratio transfer, every inequality re-verified numerically.
inline std::vector<TransferRow> transfer_refutation(const CoarseMap& m,
                                                    const std::vector<CodomainWitness>& witnesses,
                                                    double S, const CoarseModuli* moduliIn = nullptr) {
    CoarseModuli local;
    if (!moduliIn) {
        local = estimate_moduli(m);
        moduliIn = &local;
    }
    const CoarseModuli& mod = *moduliIn;
    const SpaceSequence& X = m.domain();
    const SpaceSequence& Y = m.codomain();
    const double nxs = static_cast<double>(X.growth(S));
    const double nyd = static_cast<double>(Y.growth(mod.D));

    std::vector<TransferRow> rows;
    for (const CodomainWitness& w : witnesses) {
        TransferRow row;
        row.codomainPiece = w.piece;
        const int dPiece = m.domainPieceForTarget(w.piece);
        row.domainPiece = dPiece;
        if (dPiece < 0) {
            row.skipReason = "NoMatchedDomainPiece";
            rows.push_back(std::move(row));
            continue;
        }
        const double rp = mod.rhoPlus.eval(S);
        if (w.R < rp || w.R < mod.D) {
            row.skipReason = "ScaleGate: witness R below max(rhoPlus(S), D)";
            rows.push_back(std::move(row));
            continue;
        }
        HalfSelection sel = half_selection(m, w.piece, w.B, mod.D);
        if (!sel.ok) {
            row.skipReason = sel.failedGate;
            rows.push_back(std::move(row));
            continue;
        }
        row.branch = sel.branch;
        row.A = sel.A;
        row.transferred = true;

        row.steps.push_back({"pullback", pullback_bound_check(m, w.piece, w.B, mod.D)});
        row.steps.push_back({"half-size", sel.halfBound});
        row.steps.push_back({"selection-lower", sel.lowerBound});

        const std::vector<int> ambient = detail::target_union_globals(m, dPiece);
        const double alpha =
            ambient.empty() ? 0.0 : static_cast<double>(w.B.size()) / static_cast<double>(ambient.size());
        const double xn = static_cast<double>(X.piece(dPiece).size());
        row.steps.push_back(
            {"density-lower",
             make_check_ge(static_cast<double>(sel.A.size()),
                           alpha * xn / (2.0 * static_cast<double>(mod.K) * nyd))});

        std::vector<int> Bglobal;
        for (int b : w.B) Bglobal.push_back(Y.toGlobal(w.piece, b));
        const BoundaryTransfer bt = boundary_transfer_check(m, w.piece, w.B, S, mod.K, mod.rhoPlus);
        const InequalityCheck& branchCheck =
            sel.branch == HalfBranch::Preimage ? bt.preimageBranch : bt.complementBranch;
        row.steps.push_back({"boundary-transfer", branchCheck});

        const double bR =
            static_cast<double>(detail::ambient_outer_boundary(Y, ambient, Bglobal, w.R).size());
        row.steps.push_back({"boundary-chain", make_check_le(bt.codomainBoundary, bR)});

        const double aSize = static_cast<double>(sel.A.size());
        const double lhsRatio =
            static_cast<double>(r_boundary(X.piece(dPiece), sel.A, S).size()) / aSize;
        const double rhsRatio = static_cast<double>(mod.K) * nxs * bR /
                                (static_cast<double>(w.B.size()) / (2.0 * nyd));
        row.steps.push_back({"ratio", make_check_le(lhsRatio, rhsRatio)});
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace asymexp
