#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/errors.hpp"
#include "asymexp/metric_space.hpp"

namespace asymexp {

// Cross-piece gap rule for a coarse disjoint union. Canonical: pieces n and m
// (1-based, as in the defining expression) sit at distance
// n + m + diam(X_n) + diam(X_m). Explicit: one positive gap per unordered
// pair, listed lexicographically (1,2), (1,3), ..., (1,k), (2,3), ...
struct GapRule {
    bool canonical = true;
    std::vector<double> pairGaps;

    static GapRule canonicalRule() { return GapRule{}; }
    static GapRule explicitRule(std::vector<double> gaps) {
        GapRule r;
        r.canonical = false;
        r.pairGaps = std::move(gaps);
        return r;
    }
};

// A set of points, scoped either to one piece (scope >= 0, indices local to
// that piece) or to the union prefix (scope == kUnion, global indices).
struct PointSet {
    static constexpr int kUnion = -1;
    int scope = kUnion;
    std::vector<int> points;

    static PointSet inPiece(int piece, std::vector<int> pts) {
        return PointSet{piece, std::move(pts)};
    }
    static PointSet global(std::vector<int> pts) {
        return PointSet{kUnion, std::move(pts)};
    }
};

// Finite prefix of a coarse disjoint union: a list of pieces plus a gap rule.
// Global point indices run over pieces in order; within-piece distances come
// from the pieces, cross-piece distances depend only on the piece pair.
class SpaceSequence {
public:
    SpaceSequence(std::vector<FiniteMetricSpace> pieces, GapRule rule = GapRule::canonicalRule(),
                  double tol = 1e-9)
        : pieces_(std::move(pieces)), rule_(std::move(rule)) {
        const int m = static_cast<int>(pieces_.size());
        if (m < 1) throw InvalidArgument("SpaceSequence: need at least one piece");
        offsets_.resize(static_cast<std::size_t>(m) + 1, 0);
        for (int i = 0; i < m; ++i) {
            offsets_[static_cast<std::size_t>(i) + 1] = offsets_[static_cast<std::size_t>(i)] + pieces_[static_cast<std::size_t>(i)].size();
        }
        if (!rule_.canonical) {
            const std::size_t want = static_cast<std::size_t>(m) * (m - 1) / 2;
            if (rule_.pairGaps.size() != want) {
                throw InvalidArgument("SpaceSequence: explicit gap list has wrong length");
            }
            for (double g : rule_.pairGaps) {
                if (!(g > 0.0) || !std::isfinite(g)) {
                    throw InvalidMetric("SpaceSequence: gaps must be positive and finite");
                }
            }
            // The union must still be a metric space: gap triangle inequality
            // and every within-piece distance bounded by round trips.
            for (int i = 0; i < m; ++i) {
                for (int j = i + 1; j < m; ++j) {
                    const double gij = gap(i, j);
                    if (pieces_[static_cast<std::size_t>(i)].diameter() > 2.0 * gij + tol ||
                        pieces_[static_cast<std::size_t>(j)].diameter() > 2.0 * gij + tol) {
                        throw InvalidMetric("SpaceSequence: piece diameter exceeds twice a gap");
                    }
                    for (int k = 0; k < m; ++k) {
                        if (k == i || k == j) continue;
                        if (gij > gap(i, k) + gap(k, j) + tol) {
                            throw InvalidMetric("SpaceSequence: gap triangle inequality violated");
                        }
                    }
                }
            }
        }
    }

    int pieceCount() const { return static_cast<int>(pieces_.size()); }
    int totalPoints() const { return offsets_.back(); }
    const FiniteMetricSpace& piece(int i) const {
        checkPiece(i);
        return pieces_[static_cast<std::size_t>(i)];
    }
    int offset(int i) const {
        checkPiece(i);
        return offsets_[static_cast<std::size_t>(i)];
    }
    const GapRule& gapRule() const { return rule_; }

    // Cross-piece distance between pieces i != j (0-based arguments; the
    // canonical formula uses the 1-based indices i+1 and j+1).
    double gap(int i, int j) const {
        checkPiece(i);
        checkPiece(j);
        if (i == j) throw InvalidArgument("gap: pieces must differ");
        if (i > j) std::swap(i, j);
        if (rule_.canonical) {
            return static_cast<double>(i + 1) + static_cast<double>(j + 1) +
                   pieces_[static_cast<std::size_t>(i)].diameter() +
                   pieces_[static_cast<std::size_t>(j)].diameter();
        }
        return rule_.pairGaps[pairIndex(i, j)];
    }

    std::pair<int, int> locate(int global) const {
        if (global < 0 || global >= totalPoints()) throw OutOfRange("global index out of range");
        int lo = 0;
        int hi = pieceCount() - 1;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (offsets_[static_cast<std::size_t>(mid)] <= global) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        return {lo, global - offsets_[static_cast<std::size_t>(lo)]};
    }

    int toGlobal(int piece, int local) const {
        checkPiece(piece);
        pieces_[static_cast<std::size_t>(piece)].checkPoint(local);
        return offsets_[static_cast<std::size_t>(piece)] + local;
    }

    double distance(int g1, int g2) const {
        const auto [p1, l1] = locate(g1);
        const auto [p2, l2] = locate(g2);
        if (p1 == p2) return pieces_[static_cast<std::size_t>(p1)].distance(l1, l2);
        return gap(p1, p2);
    }

    // Union-level growth function N(R): largest closed-ball cardinality.
    int growth(double R) const {
        if (R < 0.0) throw InvalidArgument("growth: R must be >= 0");
        int best = 0;
        for (int p = 0; p < pieceCount(); ++p) {
            const FiniteMetricSpace& X = pieces_[static_cast<std::size_t>(p)];
            int crossCount = 0;
            for (int q = 0; q < pieceCount(); ++q) {
                if (q != p && gap(p, q) <= R) crossCount += pieces_[static_cast<std::size_t>(q)].size();
            }
            for (int x = 0; x < X.size(); ++x) {
                int count = crossCount;
                for (int y = 0; y < X.size(); ++y) {
                    if (X.distance(x, y) <= R) ++count;
                }
                best = std::max(best, count);
            }
        }
        return best;
    }

    // Largest distance realized in the union prefix.
    double unionDiameter() const {
        double best = 0.0;
        for (int p = 0; p < pieceCount(); ++p) {
            best = std::max(best, pieces_[static_cast<std::size_t>(p)].diameter());
            for (int q = p + 1; q < pieceCount(); ++q) best = std::max(best, gap(p, q));
        }
        return best;
    }

    std::vector<int> toGlobal(const PointSet& set) const {
        if (set.scope == PointSet::kUnion) {
            int prev = -1;
            for (int g : set.points) {
                if (g < 0 || g >= totalPoints()) throw OutOfRange("global point out of range");
                if (g <= prev) throw InvalidArgument("point set must be sorted and duplicate-free");
                prev = g;
            }
            return set.points;
        }
        checkPiece(set.scope);
        validate_set(pieces_[static_cast<std::size_t>(set.scope)], set.points);
        std::vector<int> out;
        out.reserve(set.points.size());
        for (int x : set.points) out.push_back(offsets_[static_cast<std::size_t>(set.scope)] + x);
        return out;
    }

    void checkPiece(int i) const {
        if (i < 0 || i >= pieceCount()) throw OutOfRange("piece index out of range");
    }

private:
    std::size_t pairIndex(int i, int j) const {
        // Lexicographic enumeration of pairs (i<j) over m pieces.
        const int m = pieceCount();
        std::size_t idx = 0;
        for (int a = 0; a < i; ++a) idx += static_cast<std::size_t>(m - 1 - a);
        return idx + static_cast<std::size_t>(j - i - 1);
    }

    std::vector<FiniteMetricSpace> pieces_;
    GapRule rule_;
    std::vector<int> offsets_;
};

// Distance from a global point to a global-index set within the union.
inline double union_point_to_set(const SpaceSequence& S, int g, const std::vector<int>& A) {
    double best = kInf;
    for (int a : A) best = std::min(best, S.distance(g, a));
    return best;
}

inline double union_set_distance(const SpaceSequence& S, const std::vector<int>& A,
                                 const std::vector<int>& B) {
    if (A.empty() || B.empty()) return kInf;
    double best = kInf;
    for (int a : A) best = std::min(best, union_point_to_set(S, a, B));
    return best;
}

}  // namespace asymexp
