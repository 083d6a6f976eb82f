#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymexp/coarse_map.hpp"
#include "asymexp/expansion.hpp"
#include "asymexp/operators.hpp"
#include "asymexp/space_sequence.hpp"
#include "asymexp/ula.hpp"
#include "asymexp/version.hpp"

namespace asymexp {

// 17 significant digits: doubles round-trip exactly through the reports.
inline std::string fmt17(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    if (v != v) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// "p<piece>:a+b+c" for piece-scoped sets, "g:a+b" for union-scoped ones.
inline std::string encode_point_set(const PointSet& s) {
    std::string out = s.scope == PointSet::kUnion ? "g:" : "p" + std::to_string(s.scope) + ":";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (i > 0) out += '+';
        out += std::to_string(s.points[i]);
    }
    return out;
}

inline const char* mode_name(PropagationMode m) {
    return m == PropagationMode::Exact ? "exact" : "heuristic";
}

inline const char* mode_name(SearchMode m) {
    return m == SearchMode::Exact ? "exact" : "heuristic";
}

inline std::string propagation_profile_csv(const PropagationProfile& profile) {
    std::string out = "R,eps,mode,witnessA,witnessB\n";
    for (const PropagationRow& row : profile.rows) {
        out += fmt17(row.R) + ',' + fmt17(row.eps) + ',' + mode_name(row.mode) + ',' +
               encode_point_set(row.witnessA) + ',' + encode_point_set(row.witnessB) + '\n';
    }
    return out;
}

inline std::string expansion_report_csv(const ExpansionReport& report) {
    std::string out = "piece,alpha,R,minRatio,witness,mode\n";
    for (const ExpansionRow& row : report.rows) {
        out += std::to_string(row.piece) + ',' + fmt17(row.alpha) + ',' + fmt17(row.R) + ',' +
               fmt17(row.minRatio) + ',' + encode_point_set(row.witness) + ',' +
               mode_name(row.mode) + '\n';
    }
    return out;
}

inline std::string ql_audit_csv(const QlAuditReport& report) {
    std::string out = "piece,R,separationSide,propagationSide,delta,ok,mode\n";
    for (const QlAuditRow& row : report.rows) {
        out += std::to_string(row.piece) + ',' + fmt17(row.R) + ',' +
               fmt17(row.separationSide) + ',' + fmt17(row.propagationSide) + ',' +
               fmt17(row.delta) + ',' + (row.ok ? "1" : "0") + ',' + mode_name(row.mode) + '\n';
    }
    return out;
}

inline nlohmann::json certificate_to_json(const AsymptoticCertificate& cert) {
    nlohmann::json out;
    out["verdict"] = cert.holds ? "HoldsOnPrefix" : "Refuted";
    out["prefixLength"] = cert.prefixLength;
    out["parameters"] = {{"alpha", cert.alpha}, {"c", cert.c}, {"R", cert.R}};
    if (!cert.holds) out["witness"] = encode_point_set(cert.witnessA);
    return out;
}

inline nlohmann::json check_to_json(const std::string& lemma, int piece,
                                    const InequalityCheck& check) {
    return nlohmann::json{{"lemma", lemma},   {"piece", piece}, {"lhs", check.lhs},
                          {"rhs", check.rhs}, {"slack", check.slack}, {"ok", check.ok}};
}

inline nlohmann::json moduli_to_json(const CoarseModuli& mod) {
    nlohmann::json rp = nlohmann::json::array();
    for (const auto& [t, v] : mod.rhoPlus.knots) rp.push_back({t, v});
    nlohmann::json rm = nlohmann::json::array();
    for (const auto& [t, v] : mod.rhoMinus.knots) rm.push_back({t, v});
    return nlohmann::json{
        {"rhoPlus", std::move(rp)}, {"rhoMinus", std::move(rm)}, {"D", mod.D}, {"K", mod.K}};
}

inline nlohmann::json ula_report_to_json(const NonUlaReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const NonUlaRow& row : report.rows) {
        nlohmann::json jr;
        jr["piece"] = row.piece;
        jr["R"] = row.R;
        jr["c"] = row.c;
        jr["eps"] = row.eps;
        jr["S"] = row.S;
        jr["applicable"] = row.applicable;
        jr["certified"] = row.certified;
        jr["gates"] = {{"mu", row.gateMu}, {"sizeRatio", row.gateSizeRatio}};
        if (row.applicable) {
            nlohmann::json blocks = nlohmann::json::array();
            for (const PointSet& b : row.decomposition.blocks) {
                blocks.push_back(encode_point_set(b));
            }
            jr["blocks"] = std::move(blocks);
            jr["mu"] = row.decomposition.mu;
            jr["A"] = encode_point_set(row.A);
            jr["B"] = encode_point_set(row.B);
            jr["product"] = row.product;
            jr["normalized"] = row.normalized;
        } else {
            jr["reason"] = row.reason;
        }
        rows.push_back(std::move(jr));
    }
    return nlohmann::json{{"rows", std::move(rows)}, {"allCertified", report.allCertified}};
}

inline nlohmann::json transfer_rows_to_json(const std::vector<TransferRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const TransferRow& row : rows) {
        nlohmann::json jr;
        jr["codomainPiece"] = row.codomainPiece;
        jr["domainPiece"] = row.domainPiece;
        jr["transferred"] = row.transferred;
        if (!row.transferred) {
            jr["skipReason"] = row.skipReason;
        } else {
            jr["branch"] = row.branch == HalfBranch::Preimage ? "preimage" : "complement";
            jr["A"] = encode_point_set(PointSet::inPiece(row.domainPiece, row.A));
            nlohmann::json steps = nlohmann::json::array();
            for (const TransferStep& st : row.steps) {
                steps.push_back(check_to_json(st.name, row.codomainPiece, st.check));
            }
            jr["steps"] = std::move(steps);
        }
        out.push_back(std::move(jr));
    }
    return out;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline std::string hash_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64_hex(bytes);
}

// Everything needed to reproduce a run byte for byte. Deliberately carries
// no timing: two runs with equal manifests must emit equal bytes.
struct RunManifest {
    std::vector<std::string> command;
    std::vector<std::uint64_t> seeds;
    std::vector<std::pair<std::string, std::string>> inputHashes;  // (path, fnv1a64 hex)
    std::string mode;
    int threads = 0;

    nlohmann::json to_json() const {
        nlohmann::json inputs = nlohmann::json::object();
        for (const auto& [path, hash] : inputHashes) inputs[path] = hash;
        return nlohmann::json{{"format", "ammanifest-v1"},
                              {"tool", kToolName},
                              {"version", kVersion},
                              {"command", command},
                              {"seeds", seeds},
                              {"inputs", std::move(inputs)},
                              {"mode", mode},
                              {"threads", threads}};
    }
};

}  // namespace asymexp
