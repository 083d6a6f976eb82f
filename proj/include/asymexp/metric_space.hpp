#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "asymexp/errors.hpp"

namespace asymexp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A finite metric space on points {0..n-1}. Either built from a connected
// simple graph (edge-path metric, distances are integers) or from an
// explicit distance matrix. Graph-built spaces keep their adjacency for
// Laplacian construction.
class FiniteMetricSpace {
public:
    enum class Source { GraphEdgePath, Explicit };

    static FiniteMetricSpace fromGraph(int n, std::vector<std::pair<int, int>> edges) {
        if (n < 1) throw InvalidArgument("fromGraph: need at least one point");
        std::set<std::pair<int, int>> seen;
        for (auto& e : edges) {
            if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n) {
                throw InvalidEdge("fromGraph: endpoint out of range");
            }
            if (e.first == e.second) throw InvalidEdge("fromGraph: loop edge");
            if (e.first > e.second) std::swap(e.first, e.second);
            if (!seen.insert(e).second) throw InvalidEdge("fromGraph: duplicate edge");
        }
        std::sort(edges.begin(), edges.end());

        FiniteMetricSpace s;
        s.n_ = n;
        s.source_ = Source::GraphEdgePath;
        s.edges_ = std::move(edges);
        s.adj_.assign(static_cast<std::size_t>(n), {});
        for (const auto& e : s.edges_) {
            s.adj_[static_cast<std::size_t>(e.first)].push_back(e.second);
            s.adj_[static_cast<std::size_t>(e.second)].push_back(e.first);
        }
        s.dist_.assign(static_cast<std::size_t>(n) * n, kInf);
        std::vector<int> frontier;
        for (int src = 0; src < n; ++src) {
            double* row = s.dist_.data() + static_cast<std::size_t>(src) * n;
            row[src] = 0.0;
            frontier.assign(1, src);
            double level = 0.0;
            while (!frontier.empty()) {
                std::vector<int> next;
                for (int u : frontier) {
                    for (int v : s.adj_[static_cast<std::size_t>(u)]) {
                        if (row[v] == kInf) {
                            row[v] = level + 1.0;
                            next.push_back(v);
                        }
                    }
                }
                frontier = std::move(next);
                level += 1.0;
            }
            for (int v = 0; v < n; ++v) {
                if (row[v] == kInf) {
                    throw DisconnectedGraph("fromGraph: graph is not connected");
                }
            }
        }
        s.computeDiameter();
        return s;
    }

    static FiniteMetricSpace fromDistances(const std::vector<std::vector<double>>& d,
                                           double tol = 1e-9) {
        const int n = static_cast<int>(d.size());
        if (n < 1) throw InvalidArgument("fromDistances: need at least one point");
        FiniteMetricSpace s;
        s.n_ = n;
        s.source_ = Source::Explicit;
        s.dist_.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(d[static_cast<std::size_t>(i)].size()) != n) {
                throw InvalidMetric("fromDistances: matrix is not square");
            }
            for (int j = 0; j < n; ++j) {
                const double v = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (std::isnan(v)) throw InvalidMetric("fromDistances: NaN entry");
                if (v < 0.0) throw InvalidMetric("fromDistances: negative entry");
                if (!std::isfinite(v)) throw InvalidMetric("fromDistances: non-finite entry");
                s.dist_[static_cast<std::size_t>(i) * n + j] = v;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (s.dist_[static_cast<std::size_t>(i) * n + i] != 0.0) {
                throw InvalidMetric("fromDistances: nonzero diagonal");
            }
            for (int j = i + 1; j < n; ++j) {
                const double dij = s.dist_[static_cast<std::size_t>(i) * n + j];
                const double dji = s.dist_[static_cast<std::size_t>(j) * n + i];
                if (dij != dji) throw InvalidMetric("fromDistances: asymmetric matrix");
                if (dij <= 0.0) throw InvalidMetric("fromDistances: zero distance between distinct points");
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double dij = s.dist_[static_cast<std::size_t>(i) * n + j];
                for (int k = 0; k < n; ++k) {
                    const double viaK = s.dist_[static_cast<std::size_t>(i) * n + k] +
                                        s.dist_[static_cast<std::size_t>(k) * n + j];
                    if (dij > viaK + tol) {
                        throw InvalidMetric("fromDistances: triangle inequality violated");
                    }
                }
            }
        }
        s.computeDiameter();
        return s;
    }

    int size() const { return n_; }
    Source source() const { return source_; }
    bool isGraph() const { return source_ == Source::GraphEdgePath; }
    double diameter() const { return diam_; }

    double distance(int x, int y) const {
        checkPoint(x);
        checkPoint(y);
        return dist_[static_cast<std::size_t>(x) * n_ + y];
    }

    const std::vector<std::pair<int, int>>& edges() const {
        requireAdjacency();
        return edges_;
    }

    const std::vector<std::vector<int>>& adjacency() const {
        requireAdjacency();
        return adj_;
    }

    int degree(int x) const {
        requireAdjacency();
        checkPoint(x);
        return static_cast<int>(adj_[static_cast<std::size_t>(x)].size());
    }

    // Distinct distance values, ascending (0 included).
    std::vector<double> realizedDistances() const {
        std::set<double> vals(dist_.begin(), dist_.end());
        return std::vector<double>(vals.begin(), vals.end());
    }

    void checkPoint(int x) const {
        if (x < 0 || x >= n_) throw OutOfRange("point index out of range");
    }

private:
    void requireAdjacency() const {
        if (source_ != Source::GraphEdgePath) {
            throw NoAdjacency("operation needs a graph piece with stored adjacency");
        }
    }

    void computeDiameter() {
        diam_ = 0.0;
        for (double v : dist_) diam_ = std::max(diam_, v);
    }

    int n_ = 0;
    Source source_ = Source::Explicit;
    std::vector<double> dist_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adj_;
    double diam_ = 0.0;
};

// ---- Point-set helpers -----------------------------------------------------
//
// Sets are sorted, duplicate-free vectors of point indices. Conventions:
// d(x, {}) = +inf, so boundaries of the empty set are empty and
// d(A, B) = +inf when either side is empty.

inline void validate_set(const FiniteMetricSpace& X, const std::vector<int>& A) {
    int prev = -1;
    for (int x : A) {
        X.checkPoint(x);
        if (x <= prev) throw InvalidArgument("point set must be sorted and duplicate-free");
        prev = x;
    }
}

inline double point_to_set_distance(const FiniteMetricSpace& X, int x, const std::vector<int>& A) {
    double best = kInf;
    for (int a : A) best = std::min(best, X.distance(x, a));
    return best;
}

inline double set_distance(const FiniteMetricSpace& X, const std::vector<int>& A,
                           const std::vector<int>& B) {
    if (A.empty() || B.empty()) return kInf;
    double best = kInf;
    for (int a : A) best = std::min(best, point_to_set_distance(X, a, B));
    return best;
}

inline double set_diameter(const FiniteMetricSpace& X, const std::vector<int>& A) {
    double best = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t j = i + 1; j < A.size(); ++j) {
            best = std::max(best, X.distance(A[i], A[j]));
        }
    }
    return best;
}

// Outer R-boundary: points outside A within distance R of A.
inline std::vector<int> r_boundary(const FiniteMetricSpace& X, const std::vector<int>& A,
                                   double R) {
    validate_set(X, A);
    if (R < 0.0) throw InvalidArgument("r_boundary: R must be >= 0");
    std::vector<int> out;
    std::size_t cursor = 0;
    for (int x = 0; x < X.size(); ++x) {
        while (cursor < A.size() && A[cursor] < x) ++cursor;
        const bool inA = cursor < A.size() && A[cursor] == x;
        if (inA) continue;
        if (point_to_set_distance(X, x, A) <= R) out.push_back(x);
    }
    return out;
}

// Inner R-boundary: points of A within distance R of the complement.
inline std::vector<int> inner_boundary(const FiniteMetricSpace& X, const std::vector<int>& A,
                                       double R) {
    validate_set(X, A);
    if (R < 0.0) throw InvalidArgument("inner_boundary: R must be >= 0");
    std::vector<int> comp;
    std::size_t cursor = 0;
    for (int x = 0; x < X.size(); ++x) {
        while (cursor < A.size() && A[cursor] < x) ++cursor;
        if (cursor < A.size() && A[cursor] == x) continue;
        comp.push_back(x);
    }
    std::vector<int> out;
    for (int a : A) {
        if (point_to_set_distance(X, a, comp) <= R) out.push_back(a);
    }
    return out;
}

// Closed R-neighborhood: A together with its R-boundary.
inline std::vector<int> r_neighborhood(const FiniteMetricSpace& X, const std::vector<int>& A,
                                       double R) {
    validate_set(X, A);
    if (R < 0.0) throw InvalidArgument("r_neighborhood: R must be >= 0");
    std::vector<int> out;
    for (int x = 0; x < X.size(); ++x) {
        if (point_to_set_distance(X, x, A) <= R) out.push_back(x);
    }
    return out;
}

// Bounded-geometry profile: the largest closed-ball cardinality at radius R.
inline int growth_function(const FiniteMetricSpace& X, double R) {
    if (R < 0.0) throw InvalidArgument("growth_function: R must be >= 0");
    int best = 0;
    for (int x = 0; x < X.size(); ++x) {
        int count = 0;
        for (int y = 0; y < X.size(); ++y) {
            if (X.distance(x, y) <= R) ++count;
        }
        best = std::max(best, count);
    }
    return best;
}

// True when the threshold graph {d(x,y) <= D} is connected, i.e. any two
// points are joined by a chain with steps of length at most D.
inline bool d_connected(const FiniteMetricSpace& X, double D) {
    if (D < 0.0) throw InvalidArgument("d_connected: D must be >= 0");
    const int n = X.size();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v = 0; v < n; ++v) {
            if (!seen[static_cast<std::size_t>(v)] && X.distance(u, v) <= D) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                q.push(v);
            }
        }
    }
    return reached == n;
}

inline std::vector<int> set_complement(int n, const std::vector<int>& A) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n) - A.size());
    std::size_t cursor = 0;
    for (int x = 0; x < n; ++x) {
        while (cursor < A.size() && A[cursor] < x) ++cursor;
        if (cursor < A.size() && A[cursor] == x) continue;
        out.push_back(x);
    }
    return out;
}

}  // namespace asymexp
