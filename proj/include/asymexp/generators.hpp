#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/coarse_map.hpp"
#include "asymexp/errors.hpp"
#include "asymexp/metric_space.hpp"
#include "asymexp/space_sequence.hpp"

namespace asymexp {

// mt19937_64 output is bit-exact across implementations; the standard
// distributions and std::shuffle are not. Sampling and shuffling are done by
// hand so that a seed pins the generated graph everywhere.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw InvalidArgument("DetRng::below: bound must be positive");
        const std::uint64_t min = (0 - bound) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t v = eng_();
            if (v >= min) return v % bound;
        }
    }

private:
    std::mt19937_64 eng_;
};

template <class T>
void det_shuffle(std::vector<T>& v, DetRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
    }
}

// n=1 is a point and n=2 a single edge; from n=3 on the usual ring.
inline FiniteMetricSpace cycle(int n) {
    if (n < 1) throw InvalidArgument("cycle: n must be >= 1");
    std::vector<std::pair<int, int>> edges;
    if (n == 2) {
        edges.emplace_back(0, 1);
    } else if (n >= 3) {
        for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    }
    return FiniteMetricSpace::fromGraph(n, edges);
}

inline FiniteMetricSpace path(int n) {
    if (n < 1) throw InvalidArgument("path: n must be >= 1");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return FiniteMetricSpace::fromGraph(n, edges);
}

inline FiniteMetricSpace complete(int n) {
    if (n < 1) throw InvalidArgument("complete: n must be >= 1");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    }
    return FiniteMetricSpace::fromGraph(n, edges);
}

// d in [0, 11]; the dense distance matrix caps the usable size.
inline FiniteMetricSpace hypercube(int d) {
    if (d < 0 || d > 11) throw InvalidArgument("hypercube: d must be in [0, 11]");
    const int n = 1 << d;
    std::vector<std::pair<int, int>> edges;
    for (int x = 0; x < n; ++x) {
        for (int b = 0; b < d; ++b) {
            const int y = x ^ (1 << b);
            if (x < y) edges.emplace_back(x, y);
        }
    }
    return FiniteMetricSpace::fromGraph(n, edges);
}

namespace detail {

inline bool adjacency_connected(int n, const std::vector<std::vector<int>>& adj) {
    if (n == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == n;
}

}  // namespace detail

// Configuration-model pairing; a fixed seed pins the graph. Attempts with a
// loop, a repeated edge, or a disconnected result are rejected whole.
inline FiniteMetricSpace random_regular(int n, int k, std::uint64_t seed) {
    if (k < 3 || k >= n || (static_cast<long long>(n) * k) % 2 != 0) {
        throw InvalidArgument("random_regular: need n*k even and 3 <= k < n");
    }
    DetRng rng(seed);
    std::vector<int> stubs(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        for (int v = 0; v < n; ++v) {
            for (int s = 0; s < k; ++s) stubs[static_cast<std::size_t>(v) * k + s] = v;
        }
        det_shuffle(stubs, rng);
        std::vector<std::pair<int, int>> edges;
        edges.reserve(stubs.size() / 2);
        bool bad = false;
        for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int a = stubs[i], b = stubs[i + 1];
            if (a == b) {
                bad = true;
                break;
            }
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b);
        }
        if (bad) continue;
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) continue;
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
        for (const auto& [a, b] : edges) {
            adj[static_cast<std::size_t>(a)].push_back(b);
            adj[static_cast<std::size_t>(b)].push_back(a);
        }
        if (!detail::adjacency_connected(n, adj)) continue;
        return FiniteMetricSpace::fromGraph(n, edges);
    }
    throw GenerationFailed("random_regular: 1000 rejected pairings for n=" + std::to_string(n) +
                           " k=" + std::to_string(k));
}

// Disjoint union of two graph pieces plus one bridge edge; F is re-indexed
// after X. The path metric of the gluing is recomputed from scratch.
inline FiniteMetricSpace glue_example(const FiniteMetricSpace& X, const FiniteMetricSpace& F,
                                      int xAttach, int fAttach) {
    if (!X.isGraph() || !F.isGraph()) {
        throw InvalidArgument("glue_example: both inputs must be graph pieces");
    }
    X.checkPoint(xAttach);
    F.checkPoint(fAttach);
    const int nx = X.size();
    std::vector<std::pair<int, int>> edges = X.edges();
    for (const auto& [a, b] : F.edges()) edges.emplace_back(nx + a, nx + b);
    edges.emplace_back(xAttach, nx + fAttach);
    return FiniteMetricSpace::fromGraph(nx + F.size(), edges);
}

struct GluedSpec {
    std::string baseFamily = "random-regular";  // "random-regular" | "cycle"
    std::string smallFamily = "path";           // "path" | "cycle"
    int degree = 3;                             // random-regular bases only
    std::vector<int> baseSizes;                 // one entry per piece
    std::uint64_t seed = 0;                     // base piece i uses seed + i
};

struct GluedFamily {
    SpaceSequence seq;
    std::vector<int> baseSizes;
    std::vector<int> smallSizes;
};

// Default base size schedule (2n+2)^2: 16, 36, 64, 100, ...
inline std::vector<int> default_glued_sizes(int count) {
    if (count < 1) throw InvalidArgument("default_glued_sizes: count must be >= 1");
    std::vector<int> out;
    for (int i = 1; i <= count; ++i) out.push_back((2 * i + 2) * (2 * i + 2));
    return out;
}

inline int ceil_sqrt(int s) {
    int r = static_cast<int>(std::sqrt(static_cast<double>(s)));
    while (r * r < s) ++r;
    while (r > 1 && (r - 1) * (r - 1) >= s) --r;
    return r;
}

// Pieces glue(X_i, F_i) with |F_i| = ceil(sqrt(|X_i|)), both attached at
// index 0. The generated prefix must satisfy the family hypotheses: |F_i|
// nondecreasing and |F_i|/|X_i| strictly decreasing.
inline GluedFamily glued_sequence(const GluedSpec& spec) {
    if (spec.baseSizes.empty()) throw InvalidArgument("glued_sequence: baseSizes is empty");
    std::vector<FiniteMetricSpace> pieces;
    std::vector<int> smallSizes;
    for (std::size_t i = 0; i < spec.baseSizes.size(); ++i) {
        const int s = spec.baseSizes[i];
        if (s < 1) throw InvalidArgument("glued_sequence: base size must be >= 1");
        FiniteMetricSpace base = [&] {
            if (spec.baseFamily == "random-regular") {
                return random_regular(s, spec.degree, spec.seed + static_cast<std::uint64_t>(i));
            }
            if (spec.baseFamily == "cycle") return cycle(s);
            throw InvalidArgument("glued_sequence: unknown base family " + spec.baseFamily);
        }();
        const int f = ceil_sqrt(s);
        FiniteMetricSpace small = [&] {
            if (spec.smallFamily == "path") return path(f);
            if (spec.smallFamily == "cycle") return cycle(f);
            throw InvalidArgument("glued_sequence: unknown small family " + spec.smallFamily);
        }();
        smallSizes.push_back(f);
        pieces.push_back(glue_example(base, small, 0, 0));
    }
    for (std::size_t i = 1; i < smallSizes.size(); ++i) {
        if (smallSizes[i] < smallSizes[i - 1]) {
            throw InvalidArgument("glued_sequence: small sizes must be nondecreasing");
        }
        const double prev = static_cast<double>(smallSizes[i - 1]) / spec.baseSizes[i - 1];
        const double cur = static_cast<double>(smallSizes[i]) / spec.baseSizes[i];
        if (!(cur < prev)) {
            throw InvalidArgument("glued_sequence: ratio |F|/|X| must strictly decrease");
        }
    }
    return GluedFamily{SpaceSequence(std::move(pieces), GapRule::canonicalRule()),
                       spec.baseSizes, smallSizes};
}

struct InterleavedBundle {
    std::shared_ptr<const SpaceSequence> X;
    std::shared_ptr<const SpaceSequence> Y;
    CoarseMap map;
};

// Domain pieces are explicit-metric unions W_n with a cycle of length n at
// internal distance exactly 2n; the codomain splits the same parts into
// separate pieces, interleaved cycle-first. The map is the identity on
// points, so each domain piece targets two codomain pieces.
inline InterleavedBundle interleaved_counterexample(const SpaceSequence& expanders, int count) {
    if (count < 1 || count > expanders.pieceCount()) {
        throw InvalidArgument("interleaved_counterexample: count out of range");
    }
    std::vector<FiniteMetricSpace> xPieces;
    std::vector<FiniteMetricSpace> yPieces;
    std::vector<MapEntry> entries;
    for (int i = 0; i < count; ++i) {
        const int n = i + 1;
        const FiniteMetricSpace& W = expanders.piece(i);
        const int w = W.size();
        if (W.diameter() > 4.0 * n) {
            throw GenerationFailed("interleaved_counterexample: piece " + std::to_string(i) +
                                   " has diameter above 4n; the internal gap 2n would break the "
                                   "triangle inequality");
        }
        const FiniteMetricSpace Z = cycle(n);
        const int total = w + n;
        std::vector<std::vector<double>> d(static_cast<std::size_t>(total),
                                           std::vector<double>(static_cast<std::size_t>(total), 0.0));
        for (int a = 0; a < w; ++a) {
            for (int b = 0; b < w; ++b) d[a][b] = W.distance(a, b);
        }
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) d[w + a][w + b] = Z.distance(a, b);
        }
        for (int a = 0; a < w; ++a) {
            for (int b = 0; b < n; ++b) d[a][w + b] = d[w + b][a] = 2.0 * n;
        }
        xPieces.push_back(FiniteMetricSpace::fromDistances(d));
        yPieces.push_back(Z);  // codomain piece 2i
        yPieces.push_back(W);  // codomain piece 2i+1

        MapEntry zEntry;
        zEntry.from = i;
        zEntry.to = 2 * i;
        zEntry.map.assign(static_cast<std::size_t>(total), -1);
        for (int a = 0; a < n; ++a) zEntry.map[static_cast<std::size_t>(w + a)] = a;
        MapEntry wEntry;
        wEntry.from = i;
        wEntry.to = 2 * i + 1;
        wEntry.map.assign(static_cast<std::size_t>(total), -1);
        for (int a = 0; a < w; ++a) wEntry.map[static_cast<std::size_t>(a)] = a;
        entries.push_back(std::move(zEntry));
        entries.push_back(std::move(wEntry));
    }
    auto X = std::make_shared<const SpaceSequence>(std::move(xPieces), GapRule::canonicalRule());
    auto Y = std::make_shared<const SpaceSequence>(std::move(yPieces), GapRule::canonicalRule());
    CoarseMap map(X, Y, std::move(entries));
    return InterleavedBundle{std::move(X), std::move(Y), std::move(map)};
}

}  // namespace asymexp
