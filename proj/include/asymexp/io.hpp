#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asymexp/coarse_map.hpp"
#include "asymexp/errors.hpp"
#include "asymexp/metric_space.hpp"
#include "asymexp/operators.hpp"
#include "asymexp/space_sequence.hpp"

namespace asymexp {

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void save_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path);
    out << content;
    if (!out) throw FormatError("write failed for " + path);
}

inline void save_json(const std::string& path, const nlohmann::json& j) {
    save_text(path, j.dump(2) + "\n");
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const char* where) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw FormatError(std::string(where) + ": missing field \"" + key + "\"");
    }
    return *it;
}

inline int require_int(const nlohmann::json& j, const char* where) {
    if (!j.is_number_integer()) throw FormatError(std::string(where) + ": expected an integer");
    return j.get<int>();
}

inline double require_finite(const nlohmann::json& j, const char* where) {
    if (!j.is_number()) throw FormatError(std::string(where) + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw FormatError(std::string(where) + ": non-finite number");
    return v;
}

}  // namespace detail

// amspace-v1: {"format":"amspace-v1","pieces":[{"kind":"graph","n":..,
// "edges":[[u,v],..]} | {"kind":"metric","n":..,"dist":[[..],..]}],
// "gaps":"canonical" | [g12, g13, ..]}.
inline nlohmann::json space_to_json(const SpaceSequence& S) {
    nlohmann::json pieces = nlohmann::json::array();
    for (int p = 0; p < S.pieceCount(); ++p) {
        const FiniteMetricSpace& X = S.piece(p);
        nlohmann::json jp;
        jp["n"] = X.size();
        if (X.isGraph()) {
            jp["kind"] = "graph";
            nlohmann::json edges = nlohmann::json::array();
            for (const auto& [u, v] : X.edges()) edges.push_back({u, v});
            jp["edges"] = std::move(edges);
        } else {
            jp["kind"] = "metric";
            nlohmann::json dist = nlohmann::json::array();
            for (int i = 0; i < X.size(); ++i) {
                nlohmann::json row = nlohmann::json::array();
                for (int j = 0; j < X.size(); ++j) row.push_back(X.distance(i, j));
                dist.push_back(std::move(row));
            }
            jp["dist"] = std::move(dist);
        }
        pieces.push_back(std::move(jp));
    }
    nlohmann::json out;
    out["format"] = "amspace-v1";
    out["pieces"] = std::move(pieces);
    if (S.gapRule().canonical) {
        out["gaps"] = "canonical";
    } else {
        out["gaps"] = S.gapRule().pairGaps;
    }
    return out;
}

inline SpaceSequence space_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("amspace: expected a JSON object");
    const nlohmann::json& fmt = detail::require_field(j, "format", "amspace");
    if (!fmt.is_string() || fmt.get<std::string>() != "amspace-v1") {
        throw FormatError("amspace: format must be \"amspace-v1\"");
    }
    const nlohmann::json& jp = detail::require_field(j, "pieces", "amspace");
    if (!jp.is_array() || jp.empty()) throw FormatError("amspace: pieces must be a nonempty array");
    std::vector<FiniteMetricSpace> pieces;
    for (const nlohmann::json& piece : jp) {
        const int n = detail::require_int(detail::require_field(piece, "n", "amspace piece"),
                                          "amspace piece n");
        const nlohmann::json& kind = detail::require_field(piece, "kind", "amspace piece");
        if (kind == "graph") {
            const nlohmann::json& je = detail::require_field(piece, "edges", "amspace piece");
            if (!je.is_array()) throw FormatError("amspace: edges must be an array");
            std::vector<std::pair<int, int>> edges;
            for (const nlohmann::json& e : je) {
                if (!e.is_array() || e.size() != 2) {
                    throw FormatError("amspace: each edge must be a pair [u,v]");
                }
                edges.emplace_back(detail::require_int(e[0], "amspace edge"),
                                   detail::require_int(e[1], "amspace edge"));
            }
            pieces.push_back(FiniteMetricSpace::fromGraph(n, std::move(edges)));
        } else if (kind == "metric") {
            const nlohmann::json& jd = detail::require_field(piece, "dist", "amspace piece");
            if (!jd.is_array() || static_cast<int>(jd.size()) != n) {
                throw FormatError("amspace: dist must be an n-by-n matrix");
            }
            std::vector<std::vector<double>> d;
            for (const nlohmann::json& row : jd) {
                if (!row.is_array() || static_cast<int>(row.size()) != n) {
                    throw FormatError("amspace: dist must be an n-by-n matrix");
                }
                std::vector<double> r;
                for (const nlohmann::json& v : row) {
                    const double x = detail::require_finite(v, "amspace dist");
                    if (x < 0.0) throw FormatError("amspace: negative distance");
                    r.push_back(x);
                }
                d.push_back(std::move(r));
            }
            pieces.push_back(FiniteMetricSpace::fromDistances(d));
        } else {
            throw FormatError("amspace: piece kind must be \"graph\" or \"metric\"");
        }
    }
    const nlohmann::json& jg = detail::require_field(j, "gaps", "amspace");
    if (jg.is_string()) {
        if (jg.get<std::string>() != "canonical") {
            throw FormatError("amspace: gaps must be \"canonical\" or a number list");
        }
        return SpaceSequence(std::move(pieces));
    }
    if (!jg.is_array()) throw FormatError("amspace: gaps must be \"canonical\" or a number list");
    std::vector<double> gaps;
    for (const nlohmann::json& g : jg) gaps.push_back(detail::require_finite(g, "amspace gap"));
    return SpaceSequence(std::move(pieces), GapRule::explicitRule(std::move(gaps)));
}

// amop-v1: {"format":"amop-v1","n":N,"entries":[[row],..]}.
inline nlohmann::json operator_to_json(const DenseOperator& T) {
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < T.dim(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < T.dim(); ++j) row.push_back(T.entry(i, j));
        entries.push_back(std::move(row));
    }
    nlohmann::json out;
    out["format"] = "amop-v1";
    out["n"] = T.dim();
    out["entries"] = std::move(entries);
    return out;
}

inline DenseOperator operator_from_json(const nlohmann::json& j,
                                        std::shared_ptr<const SpaceSequence> space) {
    if (!j.is_object()) throw FormatError("amop: expected a JSON object");
    const nlohmann::json& fmt = detail::require_field(j, "format", "amop");
    if (!fmt.is_string() || fmt.get<std::string>() != "amop-v1") {
        throw FormatError("amop: format must be \"amop-v1\"");
    }
    const int n = detail::require_int(detail::require_field(j, "n", "amop"), "amop n");
    if (!space) throw InvalidArgument("amop: null space");
    if (n != space->totalPoints()) {
        throw FormatError("amop: dimension does not match the space");
    }
    const nlohmann::json& je = detail::require_field(j, "entries", "amop");
    if (!je.is_array() || static_cast<int>(je.size()) != n) {
        throw FormatError("amop: entries must be an n-by-n matrix");
    }
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(n) * n);
    for (const nlohmann::json& row : je) {
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
            throw FormatError("amop: entries must be an n-by-n matrix");
        }
        for (const nlohmann::json& v : row) {
            entries.push_back(detail::require_finite(v, "amop entry"));
        }
    }
    return DenseOperator(std::move(space), std::move(entries));
}

// ammap-v1: {"pieces":[{"from":n,"to":k,"map":[..]}]} with -1 for points
// covered by another entry. The format field is optional on input.
inline nlohmann::json map_to_json(const CoarseMap& m) {
    nlohmann::json pieces = nlohmann::json::array();
    for (const MapEntry& e : m.entries()) {
        nlohmann::json jp;
        jp["from"] = e.from;
        jp["to"] = e.to;
        jp["map"] = e.map;
        pieces.push_back(std::move(jp));
    }
    nlohmann::json out;
    out["format"] = "ammap-v1";
    out["pieces"] = std::move(pieces);
    return out;
}

inline CoarseMap map_from_json(const nlohmann::json& j,
                               std::shared_ptr<const SpaceSequence> domain,
                               std::shared_ptr<const SpaceSequence> codomain) {
    if (!j.is_object()) throw FormatError("ammap: expected a JSON object");
    if (j.contains("format") &&
        (!j["format"].is_string() || j["format"].get<std::string>() != "ammap-v1")) {
        throw FormatError("ammap: format, when present, must be \"ammap-v1\"");
    }
    const nlohmann::json& jp = detail::require_field(j, "pieces", "ammap");
    if (!jp.is_array() || jp.empty()) throw FormatError("ammap: pieces must be a nonempty array");
    std::vector<MapEntry> entries;
    for (const nlohmann::json& e : jp) {
        MapEntry ent;
        ent.from = detail::require_int(detail::require_field(e, "from", "ammap piece"),
                                       "ammap from");
        ent.to = detail::require_int(detail::require_field(e, "to", "ammap piece"), "ammap to");
        const nlohmann::json& jm = detail::require_field(e, "map", "ammap piece");
        if (!jm.is_array()) throw FormatError("ammap: map must be an array");
        for (const nlohmann::json& v : jm) ent.map.push_back(detail::require_int(v, "ammap map"));
        entries.push_back(std::move(ent));
    }
    return CoarseMap(std::move(domain), std::move(codomain), std::move(entries));
}

}  // namespace asymexp
