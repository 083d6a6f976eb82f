#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/errors.hpp"
#include "asymexp/expansion.hpp"
#include "asymexp/metric_space.hpp"
#include "asymexp/space_sequence.hpp"
#include "asymexp/threading.hpp"

namespace asymexp {

// Blocks are pairwise disjoint, each of diameter at most S, pairwise more
// than R apart, and contained in F.
struct SparseDecomposition {
    PointSet F;
    std::vector<PointSet> blocks;
    double R = 0.0;
    double S = 0.0;
    double eps = 0.0;
    double mu = 0.0;  // normalized measure of the union of blocks in F
};

struct DecompositionResult {
    bool success = false;
    SparseDecomposition decomposition;  // partial blocks when stuck
    std::vector<int> stuckAt;           // residual set without a witness
};

struct BalancedSplit {
    std::vector<int> first;   // block indices, ascending
    std::vector<int> second;  // block indices, ascending
    long long sumFirst = 0;
    long long sumSecond = 0;
};

struct NonUlaRow {
    int piece = -1;
    double R = 0.0;
    double c = 0.0;
    double eps = 0.0;
    double S = -1.0;  // scale of the certified decomposition, -1 if none
    bool applicable = false;
    bool gateMu = false;
    bool gateSizeRatio = false;
    SparseDecomposition decomposition;
    PointSet A;
    PointSet B;
    std::uint64_t product = 0;
    double normalized = 0.0;
    bool certified = false;
    std::string reason;
};

struct NonUlaReport {
    std::vector<NonUlaRow> rows;
    bool allCertified = true;
};

inline double normalized_measure(std::vector<int> F, std::vector<int> E) {
    std::sort(F.begin(), F.end());
    F.erase(std::unique(F.begin(), F.end()), F.end());
    if (F.empty()) throw InvalidArgument("normalized measure needs a nonempty reference set");
    std::sort(E.begin(), E.end());
    E.erase(std::unique(E.begin(), E.end()), E.end());
    std::size_t hit = 0, i = 0, j = 0;
    while (i < F.size() && j < E.size()) {
        if (F[i] == E[j]) {
            ++hit;
            ++i;
            ++j;
        } else if (F[i] < E[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return static_cast<double>(hit) / static_cast<double>(F.size());
}

namespace detail {

inline void validate_ula_parameters(double R, double eps, double S) {
    if (!(R >= 0.0) || !std::isfinite(R)) throw InvalidArgument("radius must be finite and >= 0");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be finite and > 0");
    if (!(S >= 0.0) || !std::isfinite(S)) throw InvalidArgument("scale must be finite and >= 0");
}

// |boundary| < eps * |E| with the boundary taken inside F only: E is a subset
// of F, so the restriction to F never sees points already removed from play.
inline bool witness_inequality(std::int64_t boundary, double eps, std::int64_t size) {
    return compare_with_scaled(boundary, eps, size) < 0;
}

}  // namespace detail

// Searches E in F with diam(E) <= S and |dR(E) n F| < eps|E|. Candidates are
// the traces B(x,r) n F for x in F and r <= S, scanned by (center, radius);
// if none qualifies and |F| <= maxExact, the lexicographically least
// qualifying subset is found exhaustively.
inline std::optional<std::vector<int>> ula_witness(const FiniteMetricSpace& X,
                                                   const std::vector<int>& F, double R, double eps,
                                                   double S, int maxExact = 18) {
    validate_set(X, F);
    if (F.empty()) throw InvalidArgument("witness search needs a nonempty host set");
    detail::validate_ula_parameters(R, eps, S);
    if (maxExact < 1 || maxExact > 24) {
        throw InvalidArgument("exhaustive cap must lie in [1, 24]");
    }
    const int k = static_cast<int>(F.size());
    std::vector<double> dist(static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            dist[static_cast<std::size_t>(i) * k + j] = X.distance(F[i], F[j]);
        }
    }
    const auto mapOut = [&](const std::vector<int>& idx) {
        std::vector<int> pts;
        pts.reserve(idx.size());
        for (int i : idx) pts.push_back(F[i]);
        return pts;
    };

    for (int ci = 0; ci < k; ++ci) {
        std::vector<double> radii;
        for (int j = 0; j < k; ++j) {
            const double d = dist[static_cast<std::size_t>(ci) * k + j];
            if (d <= S) radii.push_back(d);
        }
        std::sort(radii.begin(), radii.end());
        radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
        for (double r : radii) {
            std::vector<int> idx;
            for (int j = 0; j < k; ++j) {
                if (dist[static_cast<std::size_t>(ci) * k + j] <= r) idx.push_back(j);
            }
            double diam = 0.0;
            for (std::size_t a = 0; a < idx.size(); ++a) {
                for (std::size_t b = a + 1; b < idx.size(); ++b) {
                    diam = std::max(diam,
                                    dist[static_cast<std::size_t>(idx[a]) * k + idx[b]]);
                }
            }
            if (diam > S) break;  // balls only grow with r
            std::vector<char> inE(static_cast<std::size_t>(k), 0);
            for (int j : idx) inE[static_cast<std::size_t>(j)] = 1;
            std::int64_t boundary = 0;
            for (int j = 0; j < k; ++j) {
                if (inE[static_cast<std::size_t>(j)]) continue;
                double best = kInf;
                for (int e : idx) {
                    best = std::min(best, dist[static_cast<std::size_t>(j) * k + e]);
                }
                if (best <= R) ++boundary;
            }
            if (detail::witness_inequality(boundary, eps, static_cast<std::int64_t>(idx.size()))) {
                return mapOut(idx);
            }
        }
    }

    if (k > maxExact) return std::nullopt;
    std::vector<std::uint32_t> reach(static_cast<std::size_t>(k), 0);
    std::vector<std::uint32_t> farS(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double d = dist[static_cast<std::size_t>(i) * k + j];
            if (j != i && d <= R) reach[static_cast<std::size_t>(i)] |= (1u << j);
            if (d > S) farS[static_cast<std::size_t>(i)] |= (1u << j);
        }
    }
    std::uint32_t best = 0;
    bool found = false;
    const std::uint32_t full = (k == 32) ? ~0u : ((1u << k) - 1u);
    for (std::uint32_t m = 1; m <= full; ++m) {
        bool diamOk = true;
        std::uint32_t cover = 0;
        for (std::uint32_t rest = m; rest != 0; rest &= rest - 1) {
            const int i = std::countr_zero(rest);
            if (m & farS[static_cast<std::size_t>(i)]) {
                diamOk = false;
                break;
            }
            cover |= reach[static_cast<std::size_t>(i)];
        }
        if (!diamOk) continue;
        const std::int64_t boundary = std::popcount(cover & ~m);
        if (!detail::witness_inequality(boundary, eps,
                                        static_cast<std::int64_t>(std::popcount(m)))) {
            continue;
        }
        if (!found || detail::lex_mask_less(m, best)) {
            best = m;
            found = true;
        }
    }
    if (!found) return std::nullopt;
    std::vector<int> idx;
    for (std::uint32_t rest = best; rest != 0; rest &= rest - 1) {
        idx.push_back(std::countr_zero(rest));
    }
    return mapOut(idx);
}

// Greedy peeling: take a witness, discard its closed R-neighborhood, repeat.
// Each removed batch is E_i plus its in-set R-boundary, and the witness
// inequality bounds the batch by (1+eps)|E_i|, so on success the union of
// blocks has normalized measure above 1/(1+eps).
inline DecompositionResult greedy_decomposition(const FiniteMetricSpace& X,
                                                const std::vector<int>& F, double R, double eps,
                                                double S, int maxExact = 18) {
    validate_set(X, F);
    if (F.empty()) throw InvalidArgument("decomposition needs a nonempty host set");
    detail::validate_ula_parameters(R, eps, S);
    DecompositionResult result;
    result.decomposition.F = PointSet::global(F);
    result.decomposition.R = R;
    result.decomposition.S = S;
    result.decomposition.eps = eps;
    std::vector<int> cur = F;
    std::size_t covered = 0;
    while (!cur.empty()) {
        const std::optional<std::vector<int>> witness = ula_witness(X, cur, R, eps, S, maxExact);
        if (!witness) {
            result.stuckAt = cur;
            break;
        }
        covered += witness->size();
        result.decomposition.blocks.push_back(PointSet::global(*witness));
        const std::vector<int> shielded = r_neighborhood(X, *witness, R);
        std::vector<int> next;
        std::set_difference(cur.begin(), cur.end(), shielded.begin(), shielded.end(),
                            std::back_inserter(next));
        cur = std::move(next);
    }
    result.success = cur.empty();
    result.decomposition.mu = static_cast<double>(covered) / static_cast<double>(F.size());
    return result;
}

inline bool decomposition_invariants_ok(const FiniteMetricSpace& X,
                                        const SparseDecomposition& dec) {
    std::vector<int> seen;
    for (const PointSet& block : dec.blocks) {
        if (block.points.empty()) return false;
        if (set_diameter(X, block.points) > dec.S) return false;
        std::vector<int> extra;
        std::set_difference(block.points.begin(), block.points.end(), dec.F.points.begin(),
                            dec.F.points.end(), std::back_inserter(extra));
        if (!extra.empty()) return false;
        std::vector<int> overlap;
        std::set_intersection(block.points.begin(), block.points.end(), seen.begin(), seen.end(),
                              std::back_inserter(overlap));
        if (!overlap.empty()) return false;
        std::vector<int> merged;
        std::set_union(seen.begin(), seen.end(), block.points.begin(), block.points.end(),
                       std::back_inserter(merged));
        seen = std::move(merged);
    }
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
        for (std::size_t j = i + 1; j < dec.blocks.size(); ++j) {
            if (!(set_distance(X, dec.blocks[i].points, dec.blocks[j].points) > dec.R)) {
                return false;
            }
        }
    }
    return true;
}

// Largest block first into the lighter side; the final discrepancy is at
// most the largest block, hence at most N.
inline BalancedSplit balanced_split(const std::vector<int>& sizes, int N) {
    if (N < 1) throw InvalidArgument("block size bound must be >= 1");
    std::vector<int> order(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1) throw InvalidArgument("block sizes must be >= 1");
        if (sizes[i] > N) throw InvalidArgument("a block exceeds the stated size bound");
        order[i] = static_cast<int>(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sizes[static_cast<std::size_t>(a)] >
                                                sizes[static_cast<std::size_t>(b)]; });
    BalancedSplit split;
    for (int i : order) {
        if (split.sumFirst <= split.sumSecond) {
            split.first.push_back(i);
            split.sumFirst += sizes[static_cast<std::size_t>(i)];
        } else {
            split.second.push_back(i);
            split.sumSecond += sizes[static_cast<std::size_t>(i)];
        }
    }
    std::sort(split.first.begin(), split.first.end());
    std::sort(split.second.begin(), split.second.end());
    return split;
}

inline BalancedSplit balanced_split(const std::vector<PointSet>& blocks, int N) {
    std::vector<int> sizes;
    sizes.reserve(blocks.size());
    for (const PointSet& block : blocks) sizes.push_back(static_cast<int>(block.points.size()));
    return balanced_split(sizes, N);
}

namespace detail {

inline std::vector<double> positive_scales(const FiniteMetricSpace& X) {
    std::vector<double> scales;
    const int n = X.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) scales.push_back(X.distance(i, j));
    }
    std::sort(scales.begin(), scales.end());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
    return scales;
}

}  // namespace detail

// Runs the decomposition at ascending scales; the first scale whose split
// passes direct verification (d(A,B) >= R and 32|A||B| >= |X|^2) certifies
// the piece. The mu and size-ratio gates are reported as flags: the size
// gate is a sufficient condition and can fail while the verified product
// still clears 1/32.
inline NonUlaReport non_ula_certificate(const SpaceSequence& seq, double R, double c = 0.5,
                                        int maxExact = 18, int threads = 0) {
    if (!(R >= 0.0) || !std::isfinite(R)) throw InvalidArgument("radius must be finite and >= 0");
    if (!(c > 0.0) || !(c < 1.0)) throw InvalidArgument("density target must lie in (0, 1)");
    const double eps = 1.0 / c - 1.0;
    NonUlaReport report;
    report.rows.resize(static_cast<std::size_t>(seq.pieceCount()));
    const int nThreads = effective_threads(threads);
    parallel_chunks(0, static_cast<std::uint64_t>(seq.pieceCount()), nThreads,
                    [&](int, std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t p = begin; p < end; ++p) {
            const FiniteMetricSpace& X = seq.piece(static_cast<int>(p));
            NonUlaRow& row = report.rows[p];
            row.piece = static_cast<int>(p);
            row.R = R;
            row.c = c;
            row.eps = eps;
            const int n = X.size();
            std::vector<int> all(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
            std::string lastFailure = "no scale admits a complete decomposition";
            for (double S : detail::positive_scales(X)) {
                DecompositionResult run = greedy_decomposition(X, all, R, eps, S, maxExact);
                if (!run.success) continue;
                std::int64_t covered = 0;
                for (const PointSet& block : run.decomposition.blocks) {
                    covered += static_cast<std::int64_t>(block.points.size());
                }
                const bool gateMu = detail::compare_with_scaled(covered, c, n) >= 0;
                const int ballBound = growth_function(X, S);
                const bool gateSize = 32ll * ballBound < static_cast<long long>(n);
                const BalancedSplit split = balanced_split(run.decomposition.blocks, ballBound);
                std::vector<int> A, B;
                for (int i : split.first) {
                    const std::vector<int>& pts =
                        run.decomposition.blocks[static_cast<std::size_t>(i)].points;
                    std::vector<int> merged;
                    std::set_union(A.begin(), A.end(), pts.begin(), pts.end(),
                                   std::back_inserter(merged));
                    A = std::move(merged);
                }
                for (int i : split.second) {
                    const std::vector<int>& pts =
                        run.decomposition.blocks[static_cast<std::size_t>(i)].points;
                    std::vector<int> merged;
                    std::set_union(B.begin(), B.end(), pts.begin(), pts.end(),
                                   std::back_inserter(merged));
                    B = std::move(merged);
                }
                const std::uint64_t product =
                    static_cast<std::uint64_t>(A.size()) * static_cast<std::uint64_t>(B.size());
                const bool separated =
                    !A.empty() && !B.empty() && set_distance(X, A, B) >= R;
                const bool bigEnough =
                    32u * product >= static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
                if (separated && bigEnough) {
                    row.S = S;
                    row.applicable = true;
                    row.certified = true;
                    row.gateMu = gateMu;
                    row.gateSizeRatio = gateSize;
                    row.decomposition = std::move(run.decomposition);
                    row.decomposition.F.scope = static_cast<int>(p);
                    for (PointSet& block : row.decomposition.blocks) {
                        block.scope = static_cast<int>(p);
                    }
                    row.A = PointSet::inPiece(static_cast<int>(p), A);
                    row.B = PointSet::inPiece(static_cast<int>(p), B);
                    row.product = product;
                    row.normalized = static_cast<double>(product) /
                                     (static_cast<double>(n) * static_cast<double>(n));
                    break;
                }
                lastFailure = "decomposition at the smallest complete scale splits into "
                              "sides whose separation or product fails verification";
            }
            if (!row.applicable) row.reason = lastFailure;
        }
    });
    for (const NonUlaRow& row : report.rows) {
        if (!row.certified) report.allCertified = false;
    }
    return report;
}

}  // namespace asymexp
