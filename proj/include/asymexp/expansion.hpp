#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/errors.hpp"
#include "asymexp/jacobi.hpp"
#include "asymexp/metric_space.hpp"
#include "asymexp/operators.hpp"
#include "asymexp/space_sequence.hpp"
#include "asymexp/threading.hpp"

namespace asymexp {

enum class SearchMode { Exact, Heuristic };

struct CheegerResult {
    double h = kInf;  // +inf when no admissible set exists (single point)
    std::vector<int> witness;
    SearchMode mode = SearchMode::Exact;
};

struct ExpansionRow {
    int piece = 0;
    double alpha = 0.0;
    double R = 0.0;
    double minRatio = kInf;  // +inf when the admissible family is empty
    PointSet witness;
    SearchMode mode = SearchMode::Exact;
};

struct ExpansionReport {
    std::vector<ExpansionRow> rows;  // piece-major, then alpha, then R in input order
};

struct AsymptoticCertificate {
    bool holds = true;  // certifies the checked prefix only
    int prefixLength = 0;
    double alpha = 0.0;
    double c = 0.0;
    double R = 0.0;
    int witnessPiece = -1;
    PointSet witnessA;
};

struct SeparationRow {
    int piece = 0;
    double R = 0.0;
    std::uint64_t maxProduct = 0;
    double normalized = 0.0;  // maxProduct / |X_piece|^2, always within [0, 1/4]
    PointSet witnessA;
    PointSet witnessB;
    SearchMode mode = SearchMode::Exact;
};

struct SeparationReport {
    std::vector<SeparationRow> rows;     // piece-major, R in input order
    std::vector<SeparationRow> supRows;  // per R: the piece attaining the sup of normalized
};

struct GrowthStep {
    int i = 0;
    std::int64_t size = 0;      // |N_{i R0}(A)|
    std::int64_t boundary = 0;  // |boundary_{R0} of that neighborhood|
    std::int64_t sizeNext = 0;  // |N_{(i+1) R0}(A)|
    bool capped = false;        // set passed |X|/2: chain stops, step vacuous
    bool expansionHolds = false;
    bool growthHolds = false;
};

struct GrowthTrace {
    bool ok = true;  // every non-capped step both expanded and grew
    std::vector<GrowthStep> steps;
};

struct QlAuditRow {
    int piece = 0;
    double R = 0.0;
    double separationSide = 0.0;  // sqrt(maxProduct)/|X|
    double propagationSide = 0.0;
    double delta = 0.0;
    bool ok = false;
    SearchMode mode = SearchMode::Exact;
};

struct QlAuditReport {
    std::vector<QlAuditRow> rows;
    bool allOk = true;
};

namespace detail {

// Sign of L - c*s decided exactly; c is read as the binary rational it is.
// Cardinalities are capped at 2^40 so the 128-bit intermediates cannot
// overflow.
inline int compare_with_scaled(std::int64_t L, double c, std::int64_t s) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw InvalidArgument("scale factor must be positive and finite");
    }
    if (L < 0 || s < 0 || L > (std::int64_t{1} << 40) || s > (std::int64_t{1} << 40)) {
        throw InvalidArgument("cardinality out of supported range");
    }
    if (s == 0) return L > 0 ? 1 : 0;
    if (L == 0) return -1;
    int e = 0;
    const double m = std::frexp(c, &e);
    const auto M = static_cast<__int128>(std::ldexp(m, 53));  // c = M * 2^(e-53)
    const __int128 Ms = M * static_cast<__int128>(s);         // below 2^94
    const int shift = e - 53;
    if (shift >= 0) {
        if (shift >= 12) return -1;  // rhs at least 2^52 * 2^12, beyond any L here
        const __int128 rhs = Ms << shift;
        if (static_cast<__int128>(L) > rhs) return 1;
        return static_cast<__int128>(L) == rhs ? 0 : -1;
    }
    const int k = -shift;
    if (k > 126) return 1;  // L * 2^k tops 2^126, beyond Ms
    const __int128 q = Ms >> k;
    const __int128 r = Ms - (q << k);
    if (static_cast<__int128>(L) > q) return 1;
    if (static_cast<__int128>(L) < q) return -1;
    return r > 0 ? -1 : 0;
}

// Sorted-point-list order on bitmask sets; total, so reductions do not
// depend on how the enumeration was partitioned.
inline bool lex_mask_less(std::uint32_t a, std::uint32_t b) {
    while (a != 0 && b != 0) {
        const int la = std::countr_zero(a);
        const int lb = std::countr_zero(b);
        if (la != lb) return la < lb;
        a &= a - 1;
        b &= b - 1;
    }
    return a == 0 && b != 0;
}

inline std::vector<int> mask_points(std::uint32_t m) {
    std::vector<int> out;
    while (m != 0) {
        out.push_back(std::countr_zero(m));
        m &= m - 1;
    }
    return out;
}

inline bool lex_set_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline void require_exact_size(const FiniteMetricSpace& X, int maxExact) {
    if (maxExact < 1 || maxExact > 24) throw InvalidArgument("maxExact must lie in [1, 24]");
    if (X.size() > maxExact) {
        throw ExactTooLarge("piece of " + std::to_string(X.size()) +
                            " points exceeds the exact enumeration cap; use heuristic mode");
    }
}

// Integer lower size bound for the window alpha|X| <= |A|; products within
// 1e-9 relative of an integer snap down to it.
inline int ceil_scaled(double alpha, int n) {
    const double t = alpha * static_cast<double>(n);
    const double snapped = std::ceil(t - 1e-9 * std::max(1.0, std::fabs(t)));
    if (snapped > static_cast<double>(n) + 1.0) return n + 1;
    return static_cast<int>(snapped);
}

inline std::vector<std::uint32_t> closed_ball_masks(const FiniteMetricSpace& X, double R) {
    const int n = X.size();
    std::vector<std::uint32_t> ball(static_cast<std::size_t>(n), 0);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            if (X.distance(y, x) <= R) ball[static_cast<std::size_t>(x)] |= (1u << y);
        }
    }
    return ball;
}

inline std::vector<std::uint32_t> open_ball_masks(const FiniteMetricSpace& X, double R) {
    const int n = X.size();
    std::vector<std::uint32_t> ball(static_cast<std::size_t>(n), 0);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            if (X.distance(y, x) < R) ball[static_cast<std::size_t>(x)] |= (1u << y);
        }
    }
    return ball;
}

struct RatioBest {
    std::int64_t boundary = 0;
    std::int64_t size = 0;
    std::uint32_t mask = 0;
    bool valid = false;
};

inline bool ratio_better(const RatioBest& a, const RatioBest& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    const std::int64_t lhs = a.boundary * b.size;
    const std::int64_t rhs = b.boundary * a.size;
    if (lhs != rhs) return lhs < rhs;
    return lex_mask_less(a.mask, b.mask);
}

// Per-size minima of |boundary_R(A)|/|A| over subsets, sizes 1..floor(n/2).
inline std::vector<RatioBest> exact_window_sweep(const FiniteMetricSpace& X, double R,
                                                 int threads) {
    const int n = X.size();
    const int hi = n / 2;
    std::vector<RatioBest> best(static_cast<std::size_t>(hi) + 1);
    if (hi < 1) return best;
    const std::vector<std::uint32_t> ball = closed_ball_masks(X, R);
    const int nThreads = effective_threads(threads);
    std::vector<std::vector<RatioBest>> chunkBest(
        static_cast<std::size_t>(std::max(nThreads, 1)),
        std::vector<RatioBest>(static_cast<std::size_t>(hi) + 1));
    parallel_chunks(1, std::uint64_t{1} << n, nThreads,
                    [&](int chunk, std::uint64_t lo, std::uint64_t up) {
                        auto& mine = chunkBest[static_cast<std::size_t>(chunk)];
                        for (std::uint64_t mm = lo; mm < up; ++mm) {
                            const auto m = static_cast<std::uint32_t>(mm);
                            const int pc = std::popcount(m);
                            if (pc > hi) continue;
                            std::uint32_t acc = 0;
                            std::uint32_t rest = m;
                            while (rest != 0) {
                                acc |= ball[static_cast<std::size_t>(std::countr_zero(rest))];
                                rest &= rest - 1;
                            }
                            const RatioBest cand{std::popcount(acc & ~m), pc, m, true};
                            if (ratio_better(cand, mine[static_cast<std::size_t>(pc)])) {
                                mine[static_cast<std::size_t>(pc)] = cand;
                            }
                        }
                    });
    for (const auto& mine : chunkBest) {
        for (int s = 1; s <= hi; ++s) {
            if (ratio_better(mine[static_cast<std::size_t>(s)], best[static_cast<std::size_t>(s)])) {
                best[static_cast<std::size_t>(s)] = mine[static_cast<std::size_t>(s)];
            }
        }
    }
    return best;
}

// Lex-least admissible A violating |boundary_R(A)| > c|A|, if one exists.
inline RatioBest certificate_scan(const FiniteMetricSpace& X, double R, double c, int lo, int hi,
                                  int threads) {
    RatioBest found;
    const int n = X.size();
    if (lo > hi || lo < 1) return found;
    const std::vector<std::uint32_t> ball = closed_ball_masks(X, R);
    const int nThreads = effective_threads(threads);
    std::vector<RatioBest> chunkHit(static_cast<std::size_t>(std::max(nThreads, 1)));
    parallel_chunks(1, std::uint64_t{1} << n, nThreads,
                    [&](int chunk, std::uint64_t lo64, std::uint64_t up64) {
                        RatioBest& mine = chunkHit[static_cast<std::size_t>(chunk)];
                        for (std::uint64_t mm = lo64; mm < up64; ++mm) {
                            const auto m = static_cast<std::uint32_t>(mm);
                            const int pc = std::popcount(m);
                            if (pc < lo || pc > hi) continue;
                            std::uint32_t acc = 0;
                            std::uint32_t rest = m;
                            while (rest != 0) {
                                acc |= ball[static_cast<std::size_t>(std::countr_zero(rest))];
                                rest &= rest - 1;
                            }
                            const std::int64_t b = std::popcount(acc & ~m);
                            if (compare_with_scaled(b, c, pc) <= 0 &&
                                (!mine.valid || lex_mask_less(m, mine.mask))) {
                                mine = RatioBest{b, pc, m, true};
                            }
                        }
                    });
    for (const auto& hit : chunkHit) {
        if (hit.valid && (!found.valid || lex_mask_less(hit.mask, found.mask))) found = hit;
    }
    return found;
}

struct PairBest {
    std::uint64_t product = 0;
    std::uint32_t maskA = 0;
    std::uint32_t maskB = 0;
    bool valid = false;
};

inline bool pair_better(const PairBest& a, const PairBest& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    if (a.product != b.product) return a.product > b.product;
    return lex_mask_less(a.maskA, b.maskA);
}

// Max |A||B| over disjoint pairs at distance >= R. For fixed A the maximal
// B = {x : d(x,A) >= R} is optimal, so only A is enumerated.
inline PairBest separation_exact(const FiniteMetricSpace& X, double R, int threads) {
    const int n = X.size();
    const std::vector<std::uint32_t> ball = open_ball_masks(X, R);
    const auto full = static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
    const int nThreads = effective_threads(threads);
    std::vector<PairBest> chunkBest(static_cast<std::size_t>(std::max(nThreads, 1)));
    parallel_chunks(1, std::uint64_t{1} << n, nThreads,
                    [&](int chunk, std::uint64_t lo, std::uint64_t up) {
                        PairBest& mine = chunkBest[static_cast<std::size_t>(chunk)];
                        for (std::uint64_t mm = lo; mm < up; ++mm) {
                            const auto m = static_cast<std::uint32_t>(mm);
                            std::uint32_t acc = 0;
                            std::uint32_t rest = m;
                            while (rest != 0) {
                                acc |= ball[static_cast<std::size_t>(std::countr_zero(rest))];
                                rest &= rest - 1;
                            }
                            const std::uint32_t bMask = full & ~acc & ~m;
                            if (bMask == 0) continue;
                            const auto product = static_cast<std::uint64_t>(std::popcount(m)) *
                                                 static_cast<std::uint64_t>(std::popcount(bMask));
                            const PairBest cand{product, m, bMask, true};
                            if (pair_better(cand, mine)) mine = cand;
                        }
                    });
    PairBest best;
    for (const auto& mine : chunkBest) {
        if (pair_better(mine, best)) best = mine;
    }
    return best;
}

// Min and second-min distance from each point to the current set, with the
// owner of the min; single-point moves are evaluated in O(n).
class SetDistanceField {
  public:
    explicit SetDistanceField(const FiniteMetricSpace& X)
        : X_(&X),
          in_(static_cast<std::size_t>(X.size()), 0),
          d1_(static_cast<std::size_t>(X.size()), kInf),
          d2_(static_cast<std::size_t>(X.size()), kInf),
          o1_(static_cast<std::size_t>(X.size()), -1) {}

    void assign(const std::vector<int>& A) {
        std::fill(in_.begin(), in_.end(), char{0});
        for (int a : A) in_[static_cast<std::size_t>(a)] = 1;
        size_ = static_cast<int>(A.size());
        rebuild();
    }

    void add(int v) {
        in_[static_cast<std::size_t>(v)] = 1;
        ++size_;
        const int n = X_->size();
        for (int x = 0; x < n; ++x) {
            const double d = X_->distance(x, v);
            if (d < d1_[static_cast<std::size_t>(x)]) {
                d2_[static_cast<std::size_t>(x)] = d1_[static_cast<std::size_t>(x)];
                d1_[static_cast<std::size_t>(x)] = d;
                o1_[static_cast<std::size_t>(x)] = v;
            } else if (d < d2_[static_cast<std::size_t>(x)]) {
                d2_[static_cast<std::size_t>(x)] = d;
            }
        }
    }

    void remove(int v) {
        in_[static_cast<std::size_t>(v)] = 0;
        --size_;
        rebuild();
    }

    int universe() const { return X_->size(); }
    int size() const { return size_; }
    bool contains(int x) const { return in_[static_cast<std::size_t>(x)] != 0; }

    std::int64_t boundaryCount(double R) const {
        std::int64_t c = 0;
        for (int x = 0; x < X_->size(); ++x) {
            if (!contains(x) && d1_[static_cast<std::size_t>(x)] <= R) ++c;
        }
        return c;
    }

    std::int64_t farCount(double R) const {
        std::int64_t c = 0;
        for (int x = 0; x < X_->size(); ++x) {
            if (!contains(x) && d1_[static_cast<std::size_t>(x)] >= R) ++c;
        }
        return c;
    }

    std::int64_t boundaryCountIfAdded(int v, double R) const {
        std::int64_t c = 0;
        for (int x = 0; x < X_->size(); ++x) {
            if (contains(x) || x == v) continue;
            if (std::min(d1_[static_cast<std::size_t>(x)], X_->distance(x, v)) <= R) ++c;
        }
        return c;
    }

    std::int64_t boundaryCountIfRemoved(int a, double R) const {
        std::int64_t c = 0;
        for (int x = 0; x < X_->size(); ++x) {
            if (contains(x) && x != a) continue;
            if (distanceWithout(x, a) <= R) ++c;
        }
        return c;
    }

    std::int64_t farCountIfAdded(int v, double R) const {
        std::int64_t c = 0;
        for (int x = 0; x < X_->size(); ++x) {
            if (contains(x) || x == v) continue;
            if (std::min(d1_[static_cast<std::size_t>(x)], X_->distance(x, v)) >= R) ++c;
        }
        return c;
    }

    std::int64_t farCountIfRemoved(int a, double R) const {
        std::int64_t c = 0;
        for (int x = 0; x < X_->size(); ++x) {
            if (contains(x) && x != a) continue;
            if (distanceWithout(x, a) >= R) ++c;
        }
        return c;
    }

    std::vector<int> points() const {
        std::vector<int> out;
        for (int x = 0; x < X_->size(); ++x) {
            if (contains(x)) out.push_back(x);
        }
        return out;
    }

    std::vector<int> farPoints(double R) const {
        std::vector<int> out;
        for (int x = 0; x < X_->size(); ++x) {
            if (!contains(x) && d1_[static_cast<std::size_t>(x)] >= R) out.push_back(x);
        }
        return out;
    }

  private:
    double distanceWithout(int x, int removed) const {
        return o1_[static_cast<std::size_t>(x)] == removed ? d2_[static_cast<std::size_t>(x)]
                                                           : d1_[static_cast<std::size_t>(x)];
    }

    void rebuild() {
        const int n = X_->size();
        for (int x = 0; x < n; ++x) {
            double best = kInf, second = kInf;
            int owner = -1;
            for (int a = 0; a < n; ++a) {
                if (in_[static_cast<std::size_t>(a)] == 0) continue;
                const double d = X_->distance(x, a);
                if (d < best) {
                    second = best;
                    best = d;
                    owner = a;
                } else if (d < second) {
                    second = d;
                }
            }
            d1_[static_cast<std::size_t>(x)] = best;
            d2_[static_cast<std::size_t>(x)] = second;
            o1_[static_cast<std::size_t>(x)] = owner;
        }
    }

    const FiniteMetricSpace* X_;
    std::vector<char> in_;
    int size_ = 0;
    std::vector<double> d1_, d2_;
    std::vector<int> o1_;
};

struct HeurCandidate {
    std::int64_t boundary = 0;
    std::int64_t size = 0;
    std::vector<int> points;
    bool valid = false;
};

inline bool heur_ratio_better(const HeurCandidate& a, const HeurCandidate& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    const std::int64_t lhs = a.boundary * b.size;
    const std::int64_t rhs = b.boundary * a.size;
    if (lhs != rhs) return lhs < rhs;
    return lex_set_less(a.points, b.points);
}

struct HeurPair {
    std::uint64_t product = 0;
    std::vector<int> A;
    std::vector<int> B;
    bool valid = false;
};

inline bool heur_pair_better(const HeurPair& a, const HeurPair& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    if (a.product != b.product) return a.product > b.product;
    return lex_set_less(a.A, b.A);
}

// Distance-ordered visit sequence from a base point, ties by index.
inline std::vector<int> bfs_order(const FiniteMetricSpace& X, int base) {
    const int n = X.size();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return X.distance(base, a) < X.distance(base, b); });
    return order;
}

// First-improvement single-point moves on the boundary ratio; size stays in
// [lo, hi]. maxIters caps accepted moves.
inline void ratio_local_search(SetDistanceField& field, double R, std::int64_t lo, std::int64_t hi,
                               int maxIters) {
    for (int iter = 0; iter < maxIters; ++iter) {
        const std::int64_t curB = field.boundaryCount(R);
        const std::int64_t curS = field.size();
        bool moved = false;
        for (int v = 0; v < field.universe() && !moved; ++v) {
            if (!field.contains(v)) {
                if (curS + 1 > hi) continue;
                if (field.boundaryCountIfAdded(v, R) * curS < curB * (curS + 1)) {
                    field.add(v);
                    moved = true;
                }
            } else {
                if (curS - 1 < lo || curS - 1 < 1) continue;
                if (field.boundaryCountIfRemoved(v, R) * curS < curB * (curS - 1)) {
                    field.remove(v);
                    moved = true;
                }
            }
        }
        if (!moved) break;
    }
}

inline void product_local_search(SetDistanceField& field, double R, int maxIters) {
    for (int iter = 0; iter < maxIters; ++iter) {
        const std::int64_t curF = field.farCount(R);
        const std::int64_t curS = field.size();
        bool moved = false;
        for (int v = 0; v < field.universe() && !moved; ++v) {
            if (!field.contains(v)) {
                if ((curS + 1) * field.farCountIfAdded(v, R) > curS * curF) {
                    field.add(v);
                    moved = true;
                }
            } else {
                if (curS - 1 < 1) continue;
                if ((curS - 1) * field.farCountIfRemoved(v, R) > curS * curF) {
                    field.remove(v);
                    moved = true;
                }
            }
        }
        if (!moved) break;
    }
}

// Per-size bests of the boundary ratio from distance-prefix sweeps out of
// every base point, plus the reversed (complement) sweeps.
inline std::vector<HeurCandidate> heuristic_sweep_ratio(const FiniteMetricSpace& X, double R) {
    const int n = X.size();
    const int hi = n / 2;
    std::vector<HeurCandidate> best(static_cast<std::size_t>(hi) + 1);
    if (hi < 1) return best;
    SetDistanceField field(X);
    for (int base = 0; base < n; ++base) {
        const std::vector<int> order = bfs_order(X, base);
        for (int dir = 0; dir < 2; ++dir) {
            field.assign({});
            for (int k = 0; k < n - 1; ++k) {
                field.add(dir == 0 ? order[static_cast<std::size_t>(k)]
                                   : order[static_cast<std::size_t>(n - 1 - k)]);
                const int s = k + 1;
                if (s > hi) break;
                HeurCandidate cand{field.boundaryCount(R), s, field.points(), true};
                if (heur_ratio_better(cand, best[static_cast<std::size_t>(s)])) {
                    best[static_cast<std::size_t>(s)] = std::move(cand);
                }
            }
        }
    }
    return best;
}

inline HeurPair heuristic_separation_best(const FiniteMetricSpace& X, double R,
                                          const std::vector<std::vector<int>>& carried) {
    const int n = X.size();
    HeurPair best;
    if (n < 2) return best;
    SetDistanceField field(X);
    const auto consider = [&](const SetDistanceField& f) {
        const std::int64_t far = f.farCount(R);
        if (far == 0 || f.size() == 0) return;
        HeurPair cand{static_cast<std::uint64_t>(f.size()) * static_cast<std::uint64_t>(far),
                      f.points(), f.farPoints(R), true};
        if (heur_pair_better(cand, best)) best = std::move(cand);
    };
    for (int base = 0; base < n; ++base) {
        const std::vector<int> order = bfs_order(X, base);
        for (int dir = 0; dir < 2; ++dir) {
            field.assign({});
            for (int k = 0; k < n - 1; ++k) {
                field.add(dir == 0 ? order[static_cast<std::size_t>(k)]
                                   : order[static_cast<std::size_t>(n - 1 - k)]);
                consider(field);
            }
        }
    }
    for (const auto& setA : carried) {
        if (setA.empty() || static_cast<int>(setA.size()) >= n) continue;
        field.assign(setA);
        consider(field);
    }
    if (best.valid) {
        field.assign(best.A);
        product_local_search(field, R, 200);
        consider(field);
    }
    return best;
}

// Vertex order by the eigenvector of the second-smallest laplacian
// eigenvalue; needs adjacency, so explicit pieces throw NoAdjacency.
inline std::vector<int> fiedler_order(const FiniteMetricSpace& X) {
    const int n = X.size();
    std::vector<double> lap(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int v = 0; v < n; ++v) {
        lap[static_cast<std::size_t>(v) * n + v] = static_cast<double>(X.degree(v));
    }
    for (const auto& [a, b] : X.edges()) {
        lap[static_cast<std::size_t>(a) * n + b] = -1.0;
        lap[static_cast<std::size_t>(b) * n + a] = -1.0;
    }
    const SymmetricEigen eig = symmetric_eigen(lap, n, true);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return eig.vectors[static_cast<std::size_t>(a) * n + 1] <
               eig.vectors[static_cast<std::size_t>(b) * n + 1];
    });
    return order;
}

}  // namespace detail

// Min |boundary_1(A)|/|A| over nonempty A with |A| <= |X|/2. Exact mode
// enumerates subsets; heuristic mode sweeps prefix cuts of the Fiedler
// order and refines locally, giving an upper bound on h.
inline CheegerResult cheeger_constant(const FiniteMetricSpace& X,
                                      SearchMode mode = SearchMode::Exact, int maxExact = 18,
                                      int threads = 0) {
    const int n = X.size();
    const int hi = n / 2;
    CheegerResult out;
    out.mode = mode;
    if (hi < 1) return out;  // no admissible set: h stays +inf
    if (mode == SearchMode::Exact) {
        detail::require_exact_size(X, maxExact);
        const std::vector<detail::RatioBest> per = detail::exact_window_sweep(X, 1.0, threads);
        detail::RatioBest best;
        for (int s = 1; s <= hi; ++s) {
            if (detail::ratio_better(per[static_cast<std::size_t>(s)], best)) {
                best = per[static_cast<std::size_t>(s)];
            }
        }
        out.h = static_cast<double>(best.boundary) / static_cast<double>(best.size);
        out.witness = detail::mask_points(best.mask);
        return out;
    }
    const std::vector<int> order = detail::fiedler_order(X);
    detail::SetDistanceField field(X);
    detail::HeurCandidate best;
    for (int dir = 0; dir < 2; ++dir) {
        field.assign({});
        for (int k = 0; k < n - 1; ++k) {
            field.add(dir == 0 ? order[static_cast<std::size_t>(k)]
                               : order[static_cast<std::size_t>(n - 1 - k)]);
            const int s = k + 1;
            if (s > hi) break;
            detail::HeurCandidate cand{field.boundaryCount(1.0), s, field.points(), true};
            if (detail::heur_ratio_better(cand, best)) best = std::move(cand);
        }
    }
    field.assign(best.points);
    detail::ratio_local_search(field, 1.0, 1, hi, 200);
    const detail::HeurCandidate refined{field.boundaryCount(1.0), field.size(), field.points(),
                                        true};
    if (detail::heur_ratio_better(refined, best)) best = refined;
    out.h = static_cast<double>(best.boundary) / static_cast<double>(best.size);
    out.witness = best.points;
    return out;
}

// Per piece and (alpha, R): the minimum boundary ratio over the admissible
// window ceil(alpha |X|) <= |A| <= floor(|X|/2). Heuristic rows are upper
// bounds; they stay monotone in alpha and R because every radius reuses the
// winners found at larger radii.
inline ExpansionReport expansion_profile(const SpaceSequence& S,
                                         const std::vector<double>& alphaList,
                                         const std::vector<double>& Rlist,
                                         SearchMode mode = SearchMode::Exact, int maxExact = 18,
                                         int threads = 0) {
    for (double a : alphaList) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw InvalidArgument("alpha must be positive and finite");
        }
    }
    for (double r : Rlist) {
        if (r < 0.0 || !std::isfinite(r)) throw InvalidArgument("R must be nonnegative and finite");
    }
    ExpansionReport rep;
    const std::size_t nR = Rlist.size();
    for (int p = 0; p < S.pieceCount(); ++p) {
        const FiniteMetricSpace& X = S.piece(p);
        const int n = X.size();
        const int hi = n / 2;
        const auto emit = [&](double alpha, std::size_t ri, double ratio, std::vector<int> pts,
                              bool valid) {
            ExpansionRow row;
            row.piece = p;
            row.alpha = alpha;
            row.R = Rlist[ri];
            row.mode = mode;
            row.minRatio = valid ? ratio : kInf;
            row.witness = PointSet::inPiece(p, valid ? std::move(pts) : std::vector<int>{});
            rep.rows.push_back(std::move(row));
        };
        if (mode == SearchMode::Exact) {
            detail::require_exact_size(X, maxExact);
            std::vector<std::vector<detail::RatioBest>> table(nR);
            for (std::size_t ri = 0; ri < nR; ++ri) {
                table[ri] = detail::exact_window_sweep(X, Rlist[ri], threads);
            }
            for (double alpha : alphaList) {
                const int lo = std::max(1, detail::ceil_scaled(alpha, n));
                for (std::size_t ri = 0; ri < nR; ++ri) {
                    detail::RatioBest best;
                    for (int s = lo; s <= hi; ++s) {
                        if (detail::ratio_better(table[ri][static_cast<std::size_t>(s)], best)) {
                            best = table[ri][static_cast<std::size_t>(s)];
                        }
                    }
                    emit(alpha, ri,
                         best.valid ? static_cast<double>(best.boundary) /
                                          static_cast<double>(best.size)
                                    : kInf,
                         detail::mask_points(best.mask), best.valid);
                }
            }
        } else {
            std::vector<std::size_t> byDesc(nR);
            for (std::size_t i = 0; i < nR; ++i) byDesc[i] = i;
            std::stable_sort(byDesc.begin(), byDesc.end(),
                             [&](std::size_t a, std::size_t b) { return Rlist[a] > Rlist[b]; });
            std::vector<std::vector<detail::HeurCandidate>> table(nR);
            std::vector<std::vector<detail::HeurCandidate>> pools(nR);
            std::vector<std::vector<int>> carried;
            detail::SetDistanceField field(X);
            for (std::size_t ri : byDesc) {
                const double R = Rlist[ri];
                table[ri] = detail::heuristic_sweep_ratio(X, R);
                std::vector<detail::HeurCandidate> pool;
                for (const auto& set : carried) {
                    field.assign(set);
                    pool.push_back(detail::HeurCandidate{
                        field.boundaryCount(R), static_cast<std::int64_t>(set.size()), set, true});
                }
                detail::HeurCandidate seed;
                for (int s = 1; s <= hi; ++s) {
                    if (detail::heur_ratio_better(table[ri][static_cast<std::size_t>(s)], seed)) {
                        seed = table[ri][static_cast<std::size_t>(s)];
                    }
                }
                for (const auto& c : pool) {
                    if (detail::heur_ratio_better(c, seed)) seed = c;
                }
                if (seed.valid) {
                    field.assign(seed.points);
                    detail::ratio_local_search(field, R, 1, hi, 200);
                    pool.push_back(detail::HeurCandidate{field.boundaryCount(R), field.size(),
                                                         field.points(), true});
                    carried.push_back(pool.back().points);
                }
                for (double alpha : alphaList) {
                    const int lo = std::max(1, detail::ceil_scaled(alpha, n));
                    detail::HeurCandidate best;
                    for (int s = lo; s <= hi; ++s) {
                        if (detail::heur_ratio_better(table[ri][static_cast<std::size_t>(s)],
                                                      best)) {
                            best = table[ri][static_cast<std::size_t>(s)];
                        }
                    }
                    for (const auto& c : pool) {
                        if (c.size >= lo && c.size <= hi && detail::heur_ratio_better(c, best)) {
                            best = c;
                        }
                    }
                    if (best.valid) carried.push_back(best.points);
                }
                pools[ri] = std::move(pool);
            }
            for (double alpha : alphaList) {
                const int lo = std::max(1, detail::ceil_scaled(alpha, n));
                for (std::size_t ri = 0; ri < nR; ++ri) {
                    detail::HeurCandidate best;
                    for (int s = lo; s <= hi; ++s) {
                        if (detail::heur_ratio_better(table[ri][static_cast<std::size_t>(s)],
                                                      best)) {
                            best = table[ri][static_cast<std::size_t>(s)];
                        }
                    }
                    for (const auto& c : pools[ri]) {
                        if (c.size >= lo && c.size <= hi && detail::heur_ratio_better(c, best)) {
                            best = c;
                        }
                    }
                    emit(alpha, ri,
                         best.valid ? static_cast<double>(best.boundary) /
                                          static_cast<double>(best.size)
                                    : kInf,
                         std::vector<int>(best.points), best.valid);
                }
            }
        }
    }
    return rep;
}

// Exhaustively checks |boundary_R(A)| > c|A| for every admissible A in every
// piece. Equality refutes: the defining inequality is strict. The verdict
// covers only the pieces at hand.
inline AsymptoticCertificate asymptotic_certificate(const SpaceSequence& S, double alpha, double c,
                                                    double R, int maxExact = 18, int threads = 0) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw InvalidArgument("alpha must be positive and finite");
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("c must be positive and finite");
    if (!(R >= 0.0) || !std::isfinite(R)) throw InvalidArgument("R must be nonnegative and finite");
    AsymptoticCertificate cert;
    cert.alpha = alpha;
    cert.c = c;
    cert.R = R;
    cert.prefixLength = S.pieceCount();
    for (int p = 0; p < S.pieceCount(); ++p) {
        const FiniteMetricSpace& X = S.piece(p);
        detail::require_exact_size(X, maxExact);
        const int lo = std::max(1, detail::ceil_scaled(alpha, X.size()));
        const detail::RatioBest hit =
            detail::certificate_scan(X, R, c, lo, X.size() / 2, threads);
        if (hit.valid) {
            cert.holds = false;
            cert.witnessPiece = p;
            cert.witnessA = PointSet::inPiece(p, detail::mask_points(hit.mask));
            return cert;
        }
    }
    return cert;
}

// Max |A||B| over disjoint pairs at piece distance >= R, per piece and R,
// with the per-R sup over pieces of the normalized product.
inline SeparationReport separated_product(const SpaceSequence& S, const std::vector<double>& Rlist,
                                          SearchMode mode = SearchMode::Exact, int maxExact = 18,
                                          int threads = 0) {
    for (double r : Rlist) {
        if (r < 0.0 || !std::isfinite(r)) throw InvalidArgument("R must be nonnegative and finite");
    }
    SeparationReport rep;
    const std::size_t nR = Rlist.size();
    std::vector<std::vector<SeparationRow>> byR(nR);
    for (int p = 0; p < S.pieceCount(); ++p) {
        const FiniteMetricSpace& X = S.piece(p);
        const int n = X.size();
        std::vector<SeparationRow> rows(nR);
        const auto fill = [&](std::size_t ri, std::uint64_t product, std::vector<int> A,
                              std::vector<int> B) {
            SeparationRow& row = rows[ri];
            row.piece = p;
            row.R = Rlist[ri];
            row.mode = mode;
            row.maxProduct = product;
            row.normalized =
                static_cast<double>(product) / (static_cast<double>(n) * static_cast<double>(n));
            row.witnessA = PointSet::inPiece(p, std::move(A));
            row.witnessB = PointSet::inPiece(p, std::move(B));
        };
        if (mode == SearchMode::Exact) {
            detail::require_exact_size(X, maxExact);
            for (std::size_t ri = 0; ri < nR; ++ri) {
                const detail::PairBest best = detail::separation_exact(X, Rlist[ri], threads);
                fill(ri, best.valid ? best.product : 0,
                     best.valid ? detail::mask_points(best.maskA) : std::vector<int>{},
                     best.valid ? detail::mask_points(best.maskB) : std::vector<int>{});
            }
        } else {
            std::vector<std::size_t> byDesc(nR);
            for (std::size_t i = 0; i < nR; ++i) byDesc[i] = i;
            std::stable_sort(byDesc.begin(), byDesc.end(),
                             [&](std::size_t a, std::size_t b) { return Rlist[a] > Rlist[b]; });
            std::vector<std::vector<int>> carried;
            for (std::size_t ri : byDesc) {
                const detail::HeurPair best =
                    detail::heuristic_separation_best(X, Rlist[ri], carried);
                if (best.valid) carried.push_back(best.A);
                fill(ri, best.valid ? best.product : 0,
                     best.valid ? best.A : std::vector<int>{},
                     best.valid ? best.B : std::vector<int>{});
            }
        }
        for (std::size_t ri = 0; ri < nR; ++ri) {
            byR[ri].push_back(rows[ri]);
            rep.rows.push_back(std::move(rows[ri]));
        }
    }
    for (std::size_t ri = 0; ri < nR; ++ri) {
        if (byR[ri].empty()) continue;
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < byR[ri].size(); ++i) {
            if (byR[ri][i].normalized > byR[ri][argmax].normalized) argmax = i;
        }
        rep.supRows.push_back(byR[ri][argmax]);
    }
    return rep;
}

// Verifies the iterated-neighborhood growth chain: whenever the current
// neighborhood is at most half the piece and its R0-boundary exceeds c times
// its size, the next neighborhood is at least (1+c) times bigger.
inline GrowthTrace growth_lemma_check(const SpaceSequence& S, const PointSet& A, double c,
                                      double R0, int k) {
    if (A.scope == PointSet::kUnion) throw InvalidArgument("growth check needs a piece-scoped set");
    if (A.scope < 0 || A.scope >= S.pieceCount()) {
        throw InvalidArgument("piece index out of range");
    }
    const FiniteMetricSpace& X = S.piece(A.scope);
    validate_set(X, A.points);
    if (A.points.empty()) throw InvalidArgument("growth check needs a nonempty seed set");
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("c must be positive and finite");
    if (!(R0 > 0.0) || !std::isfinite(R0)) throw InvalidArgument("R0 must be positive and finite");
    if (k < 1) throw InvalidArgument("step count must be at least 1");
    GrowthTrace trace;
    const std::int64_t cap = X.size() / 2;
    std::vector<int> current = r_neighborhood(X, A.points, 0.0);
    for (int i = 0; i < k; ++i) {
        GrowthStep step;
        step.i = i;
        step.size = static_cast<std::int64_t>(current.size());
        if (step.size > cap) {
            step.capped = true;
            trace.steps.push_back(step);
            break;
        }
        step.boundary = static_cast<std::int64_t>(r_boundary(X, current, R0).size());
        std::vector<int> next = r_neighborhood(X, A.points, (i + 1) * R0);
        step.sizeNext = static_cast<std::int64_t>(next.size());
        step.expansionHolds = detail::compare_with_scaled(step.boundary, c, step.size) > 0;
        step.growthHolds =
            detail::compare_with_scaled(step.sizeNext - step.size, c, step.size) >= 0;
        trace.ok = trace.ok && step.expansionHolds && step.growthHolds;
        trace.steps.push_back(step);
        current = std::move(next);
    }
    return trace;
}

// Cross-checks, per piece and radius, the separated-set product against the
// exact propagation of that piece's averaging block: the two must agree in
// exact mode, and the heuristic product can only fall below.
inline QlAuditReport ql_equivalence_audit(const SpaceSequence& S, std::vector<double> Rlist = {},
                                          SearchMode mode = SearchMode::Exact, int maxExact = 18,
                                          int threads = 0) {
    QlAuditReport rep;
    for (int p = 0; p < S.pieceCount(); ++p) {
        const FiniteMetricSpace& X = S.piece(p);
        std::vector<double> grid = Rlist;
        if (grid.empty()) {
            const int top = std::max(1, static_cast<int>(std::ceil(X.diameter())));
            for (int r = 1; r <= top; ++r) grid.push_back(static_cast<double>(r));
        }
        const auto single =
            std::make_shared<const SpaceSequence>(std::vector<FiniteMetricSpace>{X});
        const SeparationReport sep = separated_product(*single, grid, mode, maxExact, threads);
        const PropagationProfile prof = propagation_profile(
            averaging_projection(single), grid, PropagationMode::Exact, maxExact, threads);
        for (std::size_t ri = 0; ri < grid.size(); ++ri) {
            QlAuditRow row;
            row.piece = p;
            row.R = grid[ri];
            row.mode = mode;
            row.separationSide = std::sqrt(sep.rows[ri].normalized);
            row.propagationSide = prof.rows[ri].eps;
            row.delta = row.separationSide - row.propagationSide;
            row.ok = mode == SearchMode::Exact ? std::abs(row.delta) <= 1e-9
                                               : row.delta <= 1e-9;
            rep.allOk = rep.allOk && row.ok;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

}  // namespace asymexp
