#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/errors.hpp"
#include "asymexp/jacobi.hpp"
#include "asymexp/metric_space.hpp"
#include "asymexp/space_sequence.hpp"
#include "asymexp/threading.hpp"

namespace asymexp {

// Dense N x N matrix acting on l2 of a sequence prefix. Tags are recomputed
// from the entries on construction, so they can never disagree with them:
// selfAdjoint means symmetric within 1e-12, blockDiagonal means exactly zero
// across pieces. Storage is dense; the intended prefix budget is ~3000
// points.
class DenseOperator {
public:
    DenseOperator(std::shared_ptr<const SpaceSequence> space, std::vector<double> entries)
        : space_(std::move(space)), entries_(std::move(entries)) {
        if (!space_) throw InvalidArgument("DenseOperator: null space");
        n_ = space_->totalPoints();
        if (entries_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_)) {
            throw InvalidArgument("DenseOperator: entry count must be N*N");
        }
        selfAdjoint_ = true;
        for (int i = 0; i < n_ && selfAdjoint_; ++i) {
            for (int j = i + 1; j < n_; ++j) {
                if (std::abs(at(i, j) - at(j, i)) > 1e-12) {
                    selfAdjoint_ = false;
                    break;
                }
            }
        }
        blockDiagonal_ = true;
        for (int i = 0; i < n_ && blockDiagonal_; ++i) {
            const int pi = space_->locate(i).first;
            for (int j = 0; j < n_; ++j) {
                if (at(i, j) != 0.0 && space_->locate(j).first != pi) {
                    blockDiagonal_ = false;
                    break;
                }
            }
        }
    }

    int dim() const { return n_; }
    const SpaceSequence& space() const { return *space_; }
    std::shared_ptr<const SpaceSequence> spacePtr() const { return space_; }
    bool selfAdjoint() const { return selfAdjoint_; }
    bool blockDiagonal() const { return blockDiagonal_; }
    const std::vector<double>& entries() const { return entries_; }
    const double* data() const { return entries_.data(); }

    double entry(int i, int j) const {
        if (i < 0 || i >= n_ || j < 0 || j >= n_) throw OutOfRange("entry index out of range");
        return at(i, j);
    }

private:
    double at(int i, int j) const {
        return entries_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + j];
    }

    std::shared_ptr<const SpaceSequence> space_;
    std::vector<double> entries_;
    int n_ = 0;
    bool selfAdjoint_ = false;
    bool blockDiagonal_ = false;
};

// ---- Constructors -----------------------------------------------------------

inline DenseOperator zero_operator(std::shared_ptr<const SpaceSequence> S) {
    const int n = S->totalPoints();
    return DenseOperator(std::move(S),
                         std::vector<double>(static_cast<std::size_t>(n) * n, 0.0));
}

inline DenseOperator identity_operator(std::shared_ptr<const SpaceSequence> S) {
    const int n = S->totalPoints();
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i) * n + i] = 1.0;
    return DenseOperator(std::move(S), std::move(e));
}

// Block n is the constant matrix 1/|X_n|: the orthogonal projection onto
// functions constant on each piece.
inline DenseOperator averaging_projection(std::shared_ptr<const SpaceSequence> S) {
    const int n = S->totalPoints();
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int p = 0; p < S->pieceCount(); ++p) {
        const int off = S->offset(p);
        const int sz = S->piece(p).size();
        const double v = 1.0 / sz;
        for (int i = 0; i < sz; ++i) {
            for (int j = 0; j < sz; ++j) {
                e[static_cast<std::size_t>(off + i) * n + (off + j)] = v;
            }
        }
    }
    return DenseOperator(std::move(S), std::move(e));
}

// Averaging over a family of pairwise disjoint finite sets: entries 1/|F| on
// each F x F. With one set per piece covering it fully this is the plain
// averaging projection.
inline DenseOperator set_averaging_projection(std::shared_ptr<const SpaceSequence> S,
                                              const std::vector<PointSet>& sets) {
    const int n = S->totalPoints();
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (const PointSet& ps : sets) {
        const std::vector<int> F = S->toGlobal(ps);
        if (F.empty()) throw InvalidArgument("set_averaging_projection: empty set");
        const double v = 1.0 / static_cast<double>(F.size());
        for (int g : F) {
            if (used[static_cast<std::size_t>(g)]) {
                throw InvalidArgument("set_averaging_projection: sets must be disjoint");
            }
            used[static_cast<std::size_t>(g)] = 1;
        }
        for (int a : F) {
            for (int b : F) e[static_cast<std::size_t>(a) * n + b] = v;
        }
    }
    return DenseOperator(std::move(S), std::move(e));
}

// Vertex valency on the diagonal, -1 per edge. Pieces must be graph pieces.
inline DenseOperator discrete_laplacian(std::shared_ptr<const SpaceSequence> S) {
    const int n = S->totalPoints();
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int p = 0; p < S->pieceCount(); ++p) {
        const int off = S->offset(p);
        const FiniteMetricSpace& X = S->piece(p);
        for (int v = 0; v < X.size(); ++v) {
            e[static_cast<std::size_t>(off + v) * n + (off + v)] = X.degree(v);
        }
        for (const auto& [a, b] : X.edges()) {
            e[static_cast<std::size_t>(off + a) * n + (off + b)] = -1.0;
            e[static_cast<std::size_t>(off + b) * n + (off + a)] = -1.0;
        }
    }
    return DenseOperator(std::move(S), std::move(e));
}

inline DenseOperator multiplication_operator(std::shared_ptr<const SpaceSequence> S,
                                             const std::vector<double>& f) {
    const int n = S->totalPoints();
    if (static_cast<int>(f.size()) != n) {
        throw InvalidArgument("multiplication_operator: f must have one value per point");
    }
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i) * n + i] = f[static_cast<std::size_t>(i)];
    return DenseOperator(std::move(S), std::move(e));
}

// Partial translation of an injective partial map: entry 1 at (x, theta(x))
// for x in the domain. V V^t and V^t V are the diagonal projections onto
// domain and range.
inline DenseOperator partial_translation(std::shared_ptr<const SpaceSequence> S,
                                         const std::vector<std::pair<int, int>>& theta) {
    const int n = S->totalPoints();
    std::vector<char> dom(static_cast<std::size_t>(n), 0), ran(static_cast<std::size_t>(n), 0);
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (const auto& [x, y] : theta) {
        if (x < 0 || x >= n || y < 0 || y >= n) throw OutOfRange("partial_translation: point out of range");
        if (dom[static_cast<std::size_t>(x)]) throw InvalidArgument("partial_translation: domain point repeated");
        if (ran[static_cast<std::size_t>(y)]) throw InvalidArgument("partial_translation: map must be injective");
        dom[static_cast<std::size_t>(x)] = 1;
        ran[static_cast<std::size_t>(y)] = 1;
        e[static_cast<std::size_t>(x) * n + y] = 1.0;
    }
    return DenseOperator(std::move(S), std::move(e));
}

// ---- Algebra ----------------------------------------------------------------

namespace detail {
inline void require_same_space(const DenseOperator& A, const DenseOperator& B) {
    if (A.spacePtr() != B.spacePtr() && A.dim() != B.dim()) {
        throw InvalidArgument("operator algebra: dimension mismatch");
    }
    if (A.dim() != B.dim()) throw InvalidArgument("operator algebra: dimension mismatch");
}
}  // namespace detail

inline DenseOperator add(const DenseOperator& A, const DenseOperator& B) {
    detail::require_same_space(A, B);
    std::vector<double> e = A.entries();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += B.entries()[i];
    return DenseOperator(A.spacePtr(), std::move(e));
}

inline DenseOperator subtract(const DenseOperator& A, const DenseOperator& B) {
    detail::require_same_space(A, B);
    std::vector<double> e = A.entries();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= B.entries()[i];
    return DenseOperator(A.spacePtr(), std::move(e));
}

inline DenseOperator scale(const DenseOperator& A, double s) {
    std::vector<double> e = A.entries();
    for (double& v : e) v *= s;
    return DenseOperator(A.spacePtr(), std::move(e));
}

inline DenseOperator multiply(const DenseOperator& A, const DenseOperator& B) {
    detail::require_same_space(A, B);
    const int n = A.dim();
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    const double* a = A.data();
    const double* b = B.data();
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const double aik = a[static_cast<std::size_t>(i) * n + k];
            if (aik == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(k) * n;
            double* erow = e.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) erow[j] += aik * brow[j];
        }
    }
    return DenseOperator(A.spacePtr(), std::move(e));
}

inline DenseOperator transpose(const DenseOperator& A) {
    const int n = A.dim();
    std::vector<double> e(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            e[static_cast<std::size_t>(j) * n + i] = A.data()[static_cast<std::size_t>(i) * n + j];
        }
    }
    return DenseOperator(A.spacePtr(), std::move(e));
}

// ---- Norms ------------------------------------------------------------------

inline double frobenius_norm(const DenseOperator& T) {
    double s = 0.0;
    for (double v : T.entries()) s += v * v;
    return std::sqrt(s);
}

// Largest singular value. Block-diagonal operators decompose as the max over
// per-piece blocks.
inline double operator_norm(const DenseOperator& T) {
    const int n = T.dim();
    if (T.blockDiagonal() && T.space().pieceCount() > 1) {
        double best = 0.0;
        std::vector<double> block;
        for (int p = 0; p < T.space().pieceCount(); ++p) {
            const int off = T.space().offset(p);
            const int sz = T.space().piece(p).size();
            block.resize(static_cast<std::size_t>(sz) * sz);
            for (int i = 0; i < sz; ++i) {
                for (int j = 0; j < sz; ++j) {
                    block[static_cast<std::size_t>(i) * sz + j] =
                        T.data()[static_cast<std::size_t>(off + i) * n + (off + j)];
                }
            }
            best = std::max(best, largest_singular_value(block.data(), sz, sz));
        }
        return best;
    }
    return largest_singular_value(T.data(), n, n);
}

// ---- Compression ------------------------------------------------------------

// chi_A T chi_B: rows outside A and columns outside B zeroed.
inline DenseOperator compression(const DenseOperator& T, const PointSet& A, const PointSet& B) {
    const int n = T.dim();
    const std::vector<int> ga = T.space().toGlobal(A);
    const std::vector<int> gb = T.space().toGlobal(B);
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int a : ga) {
        for (int b : gb) {
            e[static_cast<std::size_t>(a) * n + b] = T.data()[static_cast<std::size_t>(a) * n + b];
        }
    }
    return DenseOperator(T.spacePtr(), std::move(e));
}

// Norm of chi_A T chi_B without materializing the big matrix.
inline double compression_norm(const DenseOperator& T, const std::vector<int>& gA,
                               const std::vector<int>& gB) {
    if (gA.empty() || gB.empty()) return 0.0;
    const int n = T.dim();
    std::vector<double> sub(gA.size() * gB.size());
    for (std::size_t i = 0; i < gA.size(); ++i) {
        for (std::size_t j = 0; j < gB.size(); ++j) {
            sub[i * gB.size() + j] =
                T.data()[static_cast<std::size_t>(gA[i]) * n + gB[j]];
        }
    }
    return largest_singular_value(sub.data(), static_cast<int>(gA.size()),
                                  static_cast<int>(gB.size()));
}

// ---- Spectra ----------------------------------------------------------------

struct Spectrum {
    std::vector<double> values;                  // ascending
    std::optional<std::vector<double>> vectors;  // row-major, column j = eigenvector j
};

namespace detail {

inline std::vector<double> extract_block(const DenseOperator& T, int p) {
    const int off = T.space().offset(p);
    const int sz = T.space().piece(p).size();
    std::vector<double> block(static_cast<std::size_t>(sz) * sz);
    for (int i = 0; i < sz; ++i) {
        for (int j = 0; j < sz; ++j) {
            block[static_cast<std::size_t>(i) * sz + j] =
                T.data()[static_cast<std::size_t>(off + i) * T.dim() + (off + j)];
        }
    }
    return block;
}

}  // namespace detail

// Block-diagonal operators are eigensolved per piece; the merged basis is
// supported piecewise, which is one valid orthonormal choice.
inline Spectrum spectrum(const DenseOperator& T, bool wantBasis = false) {
    if (!T.selfAdjoint()) throw InvalidArgument("spectrum: operator must be self-adjoint");
    Spectrum out;
    if (T.blockDiagonal() && T.space().pieceCount() > 1) {
        const int n = T.dim();
        std::vector<SymmetricEigen> eigs;
        struct Col {
            double value;
            int piece;
            int local;
        };
        std::vector<Col> cols;
        for (int p = 0; p < T.space().pieceCount(); ++p) {
            const int sz = T.space().piece(p).size();
            eigs.push_back(symmetric_eigen(detail::extract_block(T, p), sz, wantBasis));
            for (int j = 0; j < sz; ++j) {
                cols.push_back(Col{eigs.back().values[static_cast<std::size_t>(j)], p, j});
            }
        }
        std::stable_sort(cols.begin(), cols.end(),
                         [](const Col& a, const Col& b) { return a.value < b.value; });
        out.values.reserve(cols.size());
        for (const Col& c : cols) out.values.push_back(c.value);
        if (wantBasis) {
            std::vector<double> vecs(static_cast<std::size_t>(n) * n, 0.0);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const Col& c = cols[k];
                const int off = T.space().offset(c.piece);
                const int sz = T.space().piece(c.piece).size();
                for (int i = 0; i < sz; ++i) {
                    vecs[static_cast<std::size_t>(off + i) * n + k] =
                        eigs[static_cast<std::size_t>(c.piece)]
                            .vectors[static_cast<std::size_t>(i) * sz + c.local];
                }
            }
            out.vectors = std::move(vecs);
        }
        return out;
    }
    SymmetricEigen eig = symmetric_eigen(T.entries(), T.dim(), wantBasis);
    out.values = std::move(eig.values);
    if (wantBasis) out.vectors = std::move(eig.vectors);
    return out;
}

struct SpectralGap {
    double c = 0.0;
    int kernelDim = 0;
};

// Smallest eigenvalue above kernelTol plus the kernel dimension. Throws
// NoSpectralGap when the whole spectrum sits in [-kernelTol, kernelTol].
inline SpectralGap spectral_gap(const DenseOperator& T, double kernelTol = 1e-9) {
    const Spectrum sp = spectrum(T);
    SpectralGap out;
    double c = kInf;
    for (double v : sp.values) {
        if (std::abs(v) <= kernelTol) {
            ++out.kernelDim;
        } else if (v > kernelTol) {
            c = std::min(c, v);
        }
    }
    if (c == kInf) throw NoSpectralGap("spectral_gap: no eigenvalue above kernelTol");
    out.c = c;
    return out;
}

// Orthogonal projection onto the span of eigenvectors with |lambda| <= kernelTol.
// The kernel of a block-diagonal operator is the direct sum of the per-piece
// kernels, so the projection assembles per piece.
inline DenseOperator kernel_projection(const DenseOperator& T, double kernelTol = 1e-9) {
    if (!T.selfAdjoint()) throw InvalidArgument("kernel_projection: operator must be self-adjoint");
    const int n = T.dim();
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    auto accumulate = [&e, n](const SymmetricEigen& eig, int off, int sz, double tol) {
        for (int k = 0; k < sz; ++k) {
            if (std::abs(eig.values[static_cast<std::size_t>(k)]) > tol) continue;
            for (int i = 0; i < sz; ++i) {
                const double vi = eig.vectors[static_cast<std::size_t>(i) * sz + k];
                if (vi == 0.0) continue;
                for (int j = 0; j < sz; ++j) {
                    e[static_cast<std::size_t>(off + i) * n + (off + j)] +=
                        vi * eig.vectors[static_cast<std::size_t>(j) * sz + k];
                }
            }
        }
    };
    if (T.blockDiagonal() && T.space().pieceCount() > 1) {
        for (int p = 0; p < T.space().pieceCount(); ++p) {
            const int sz = T.space().piece(p).size();
            accumulate(symmetric_eigen(detail::extract_block(T, p), sz, true),
                       T.space().offset(p), sz, kernelTol);
        }
    } else {
        accumulate(symmetric_eigen(T.entries(), n, true), 0, n, kernelTol);
    }
    return DenseOperator(T.spacePtr(), std::move(e));
}

// Largest c per piece with sum over ordered unit-distance pairs of
// |f(x)-f(y)|^2 >= c sum |f(x)|^2 for all mean-zero f. Under the
// ordered-pair summation the Rayleigh identity gives c = 2 lambda_2.
inline std::vector<double> poincare_constant(const SpaceSequence& S) {
    std::vector<double> out;
    for (int p = 0; p < S.pieceCount(); ++p) {
        const FiniteMetricSpace& X = S.piece(p);
        const int sz = X.size();
        std::vector<double> lap(static_cast<std::size_t>(sz) * sz, 0.0);
        for (int v = 0; v < sz; ++v) lap[static_cast<std::size_t>(v) * sz + v] = X.degree(v);
        for (const auto& [a, b] : X.edges()) {
            lap[static_cast<std::size_t>(a) * sz + b] = -1.0;
            lap[static_cast<std::size_t>(b) * sz + a] = -1.0;
        }
        if (sz == 1) {
            out.push_back(kInf);  // no nonzero mean-zero functions on a point
            continue;
        }
        const SymmetricEigen eig = symmetric_eigen(std::move(lap), sz, false);
        out.push_back(2.0 * eig.values[1]);
    }
    return out;
}

// ---- Propagation profile ----------------------------------------------------

enum class PropagationMode { Exact, Heuristic };

struct PropagationRow {
    double R = 0.0;
    double eps = 0.0;
    PointSet witnessA;
    PointSet witnessB;
    PropagationMode mode = PropagationMode::Exact;
};

struct PropagationProfile {
    std::vector<PropagationRow> rows;
};

namespace detail {

inline std::string encode_set(const PointSet& ps) {
    std::string s = ps.scope == PointSet::kUnion ? "g:" : "p" + std::to_string(ps.scope) + ":";
    for (std::size_t i = 0; i < ps.points.size(); ++i) {
        if (i) s += '+';
        s += std::to_string(ps.points[static_cast<std::size_t>(i)]);
    }
    return s;
}

struct BestPair {
    double eps = -1.0;
    std::string key;  // encode_set(A) + "|" + encode_set(B)
    PointSet A, B;

    void consider(double e, const PointSet& a, const PointSet& b) {
        if (e < eps) return;
        std::string k = encode_set(a) + "|" + encode_set(b);
        if (e > eps || k < key) {
            eps = e;
            key = std::move(k);
            A = a;
            B = b;
        }
    }

    void merge(const BestPair& o) {
        if (o.eps < 0.0) return;
        if (o.eps > eps || (o.eps == eps && o.key < key)) *this = o;
    }
};

inline std::vector<int> mask_to_set(std::uint32_t m) {
    std::vector<int> out;
    while (m) {
        const int b = std::countr_zero(m);
        out.push_back(b);
        m &= m - 1;
    }
    return out;
}

// Exact sweep over one dense block: A ranges over all nonempty subsets, B is
// the maximal separated set {x : d(x,A) >= R}. Monotonicity of the
// compression norm in both arguments makes the maximal B sufficient.
inline BestPair exact_pairs_block(const double* entries, int stride, int rowOff, int colOff,
                                  const FiniteMetricSpace& X, double R,
                                  int scope, int threads) {
    const int s = X.size();
    std::vector<std::uint32_t> ballLT(static_cast<std::size_t>(s), 0);
    for (int x = 0; x < s; ++x) {
        for (int y = 0; y < s; ++y) {
            if (X.distance(y, x) < R) ballLT[static_cast<std::size_t>(x)] |= (1u << y);
        }
    }
    const std::uint32_t full = s == 32 ? ~0u : ((1u << s) - 1u);
    std::vector<BestPair> chunkBest(static_cast<std::size_t>(std::max(threads, 1)));
    parallel_chunks(1, (1ull << s), threads, [&](int chunk, std::uint64_t lo, std::uint64_t hi) {
        BestPair best;
        std::vector<double> sub;
        for (std::uint64_t am = lo; am < hi; ++am) {
            const std::uint32_t A = static_cast<std::uint32_t>(am);
            std::uint32_t near = 0;
            std::uint32_t rest = A;
            while (rest) {
                near |= ballLT[static_cast<std::size_t>(std::countr_zero(rest))];
                rest &= rest - 1;
            }
            const std::uint32_t B = full & ~near;
            if (!B) continue;
            const std::vector<int> ia = mask_to_set(A);
            const std::vector<int> ib = mask_to_set(B);
            sub.resize(ia.size() * ib.size());
            for (std::size_t i = 0; i < ia.size(); ++i) {
                for (std::size_t j = 0; j < ib.size(); ++j) {
                    sub[i * ib.size() + j] =
                        entries[static_cast<std::size_t>(rowOff + ia[i]) * stride + colOff + ib[j]];
                }
            }
            const double e = largest_singular_value(sub.data(), static_cast<int>(ia.size()),
                                                    static_cast<int>(ib.size()));
            best.consider(e, PointSet{scope, ia}, PointSet{scope, ib});
        }
        chunkBest[static_cast<std::size_t>(chunk)] = std::move(best);
    });
    BestPair out;
    for (const BestPair& b : chunkBest) out.merge(b);
    return out;
}

}  // namespace detail

// ---- Quasi-locality profile -------------------------------------------------

// eps(R) = max over pairs (A,B) with d(A,B) >= R of ||chi_A T chi_B||.
// Exact mode enumerates subsets against the maximal separated partner;
// the piece budget is maxExact (hard cap 24). For block-diagonal operators
// the norm decomposes over pieces, so the enumeration runs per piece;
// otherwise the whole prefix must fit the budget and A ranges over union
// subsets. Heuristic mode sweeps distance-ordered prefix sets from every
// base point, their complements, and a bounded local search; its rows are
// lower bounds.
inline PropagationProfile propagation_profile(const DenseOperator& T,
                                              const std::vector<double>& Rlist,
                                              PropagationMode mode = PropagationMode::Exact,
                                              int maxExact = 18, int threads = 0) {
    if (maxExact < 1 || maxExact > 24) throw InvalidArgument("propagation_profile: maxExact must be in [1,24]");
    const SpaceSequence& S = T.space();
    const int nThreads = effective_threads(threads);
    PropagationProfile out;

    if (mode == PropagationMode::Exact) {
        const bool perPiece = T.blockDiagonal();
        if (perPiece) {
            for (int p = 0; p < S.pieceCount(); ++p) {
                if (S.piece(p).size() > maxExact) {
                    throw ExactTooLarge("propagation_profile: piece " + std::to_string(p) +
                                        " exceeds maxExact=" + std::to_string(maxExact) +
                                        "; use heuristic mode");
                }
            }
        } else if (T.dim() > maxExact) {
            throw ExactTooLarge("propagation_profile: prefix exceeds maxExact=" +
                                std::to_string(maxExact) + "; use heuristic mode");
        }
        for (double R : Rlist) {
            if (R < 0.0) throw InvalidArgument("propagation_profile: R must be >= 0");
            detail::BestPair best;
            if (perPiece) {
                for (int p = 0; p < S.pieceCount(); ++p) {
                    best.merge(detail::exact_pairs_block(T.data(), T.dim(), S.offset(p),
                                                         S.offset(p), S.piece(p), R, p, nThreads));
                }
            } else {
                // Union-level enumeration over an explicit union metric.
                std::vector<std::vector<double>> d(
                    static_cast<std::size_t>(T.dim()),
                    std::vector<double>(static_cast<std::size_t>(T.dim()), 0.0));
                for (int i = 0; i < T.dim(); ++i) {
                    for (int j = 0; j < T.dim(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = S.distance(i, j);
                }
                const FiniteMetricSpace U = FiniteMetricSpace::fromDistances(d);
                best.merge(detail::exact_pairs_block(T.data(), T.dim(), 0, 0, U, R,
                                                     PointSet::kUnion, nThreads));
            }
            PropagationRow row;
            row.R = R;
            row.eps = std::max(best.eps, 0.0);
            row.witnessA = best.A;
            row.witnessB = best.B;
            row.mode = PropagationMode::Exact;
            out.rows.push_back(std::move(row));
        }
        return out;
    }

    // Heuristic: process radii descending and reuse each winner as a seed at
    // the next (smaller) radius, which keeps eps(R) non-increasing in R.
    std::vector<std::size_t> order(Rlist.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return Rlist[a] > Rlist[b]; });
    out.rows.resize(Rlist.size());

    const int N = T.dim();
    auto maximalB = [&](const std::vector<int>& A, double R) {
        std::vector<int> B;
        for (int x = 0; x < N; ++x) {
            double dmin = kInf;
            for (int a : A) dmin = std::min(dmin, S.distance(x, a));
            if (dmin >= R) B.push_back(x);
        }
        return B;
    };
    std::vector<int> carry;
    for (std::size_t oi : order) {
        const double R = Rlist[oi];
        if (R < 0.0) throw InvalidArgument("propagation_profile: R must be >= 0");
        detail::BestPair best;
        auto tryA = [&](const std::vector<int>& A) {
            if (A.empty()) return;
            const std::vector<int> B = maximalB(A, R);
            if (B.empty()) return;
            best.consider(compression_norm(T, A, B), PointSet::global(A), PointSet::global(B));
        };
        for (int base = 0; base < N; ++base) {
            std::vector<int> byDist(static_cast<std::size_t>(N));
            for (int i = 0; i < N; ++i) byDist[static_cast<std::size_t>(i)] = i;
            std::sort(byDist.begin(), byDist.end(), [&](int a, int b) {
                const double da = S.distance(base, a), db = S.distance(base, b);
                return da != db ? da < db : a < b;
            });
            std::vector<int> prefix;
            for (int i = 0; i < N - 1; ++i) {
                prefix.push_back(byDist[static_cast<std::size_t>(i)]);
                std::vector<int> A = prefix;
                std::sort(A.begin(), A.end());
                tryA(A);
                tryA(set_complement(N, A));
            }
        }
        if (!carry.empty()) tryA(carry);
        // Local search: single-point add/remove moves, first improvement.
        if (best.eps > 0.0) {
            std::vector<int> A = best.A.points;
            for (int iter = 0; iter < 200; ++iter) {
                bool improved = false;
                for (int x = 0; x < N && !improved; ++x) {
                    std::vector<int> cand = A;
                    const auto it = std::lower_bound(cand.begin(), cand.end(), x);
                    if (it != cand.end() && *it == x) {
                        if (cand.size() == 1) continue;
                        cand.erase(it);
                    } else {
                        cand.insert(it, x);
                    }
                    const std::vector<int> B = maximalB(cand, R);
                    if (B.empty()) continue;
                    const double e = compression_norm(T, cand, B);
                    if (e > best.eps) {
                        best.consider(e, PointSet::global(cand), PointSet::global(B));
                        A = std::move(cand);
                        improved = true;
                    }
                }
                if (!improved) break;
            }
        }
        carry = best.A.points;
        PropagationRow row;
        row.R = R;
        row.eps = std::max(best.eps, 0.0);
        row.witnessA = best.A;
        row.witnessB = best.B;
        row.mode = PropagationMode::Heuristic;
        out.rows[oi] = std::move(row);
    }
    return out;
}

// ---- Ghost profile ----------------------------------------------------------

struct GhostRow {
    int k = 0;             // 1-based index into the ball list
    double supOutside = 0.0;  // sup |T_{x,y}| over x,y both outside ball k
};

// Entrywise sup outside growing finite sets; balls are global-index sets.
inline std::vector<GhostRow> ghost_profile(const DenseOperator& T,
                                           const std::vector<std::vector<int>>& balls) {
    const int n = T.dim();
    std::vector<GhostRow> out;
    for (std::size_t k = 0; k < balls.size(); ++k) {
        std::vector<char> inside(static_cast<std::size_t>(n), 0);
        for (int g : balls[k]) {
            if (g < 0 || g >= n) throw OutOfRange("ghost_profile: ball point out of range");
            inside[static_cast<std::size_t>(g)] = 1;
        }
        double sup = 0.0;
        for (int i = 0; i < n; ++i) {
            if (inside[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < n; ++j) {
                if (inside[static_cast<std::size_t>(j)]) continue;
                sup = std::max(sup, std::abs(T.data()[static_cast<std::size_t>(i) * n + j]));
            }
        }
        out.push_back(GhostRow{static_cast<int>(k) + 1, sup});
    }
    return out;
}

// Default ball list: B_k = all points of the first k pieces.
inline std::vector<std::vector<int>> piece_prefix_balls(const SpaceSequence& S) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    for (int p = 0; p < S.pieceCount(); ++p) {
        for (int i = 0; i < S.piece(p).size(); ++i) cur.push_back(S.offset(p) + i);
        out.push_back(cur);
    }
    return out;
}

inline std::vector<GhostRow> ghost_profile(const DenseOperator& T) {
    return ghost_profile(T, piece_prefix_balls(T.space()));
}

// ---- Normalizer decay -------------------------------------------------------

struct NormalizerRow {
    double eps = 0.0;
    double K = 0.0;
    // The smallest admissible K equals the largest displacement realized in
    // the prefix while a point there still carries |f| >= eps; then the bound
    // holds vacuously and says nothing beyond this scale.
    bool saturated = false;
};

// For each eps, the smallest K such that every domain point x displaced
// farther than K (union metric, d(x, theta(x)) > K) has |f(x)| < eps.
inline std::vector<NormalizerRow> normalizer_decay_check(
    const SpaceSequence& S, const std::vector<double>& f,
    const std::vector<std::pair<int, int>>& theta, const std::vector<double>& epsList) {
    if (static_cast<int>(f.size()) != S.totalPoints()) {
        throw InvalidArgument("normalizer_decay_check: f must have one value per point");
    }
    std::vector<std::pair<double, double>> disp;  // (displacement, |f(x)|)
    double maxDisp = 0.0;
    std::vector<char> seen(static_cast<std::size_t>(S.totalPoints()), 0);
    for (const auto& [x, y] : theta) {
        if (x < 0 || x >= S.totalPoints() || y < 0 || y >= S.totalPoints()) {
            throw OutOfRange("normalizer_decay_check: point out of range");
        }
        if (seen[static_cast<std::size_t>(x)]) {
            throw InvalidArgument("normalizer_decay_check: domain point repeated");
        }
        seen[static_cast<std::size_t>(x)] = 1;
        const double d = S.distance(x, y);
        disp.emplace_back(d, std::abs(f[static_cast<std::size_t>(x)]));
        maxDisp = std::max(maxDisp, d);
    }
    std::vector<NormalizerRow> out;
    for (double eps : epsList) {
        if (!(eps > 0.0)) throw InvalidArgument("normalizer_decay_check: eps must be positive");
        NormalizerRow row;
        row.eps = eps;
        double K = 0.0;
        bool offender = false;
        for (const auto& [d, fx] : disp) {
            if (fx >= eps) {
                K = std::max(K, d);
                offender = true;
            }
        }
        row.K = K;
        row.saturated = offender && maxDisp > 0.0 && K == maxDisp;
        out.push_back(row);
    }
    return out;
}

}  // namespace asymexp
