#pragma once

// Estimation results on disk: memberships as a CSV table, corners and
// diagnostics as a JSON sidecar.

#include "dcmmdf/estimators.hpp"
#include "dcmmdf/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dcmmdf {

// Header row pi_1..pi_K, one row per node, 17 significant digits.
inline void write_memberships_csv(const Matrix& pi, std::ostream& out) {
    for (Index k = 0; k < pi.cols(); ++k) out << (k ? "," : "") << "pi_" << (k + 1);
    out << '\n';
    char buf[64];
    for (Index i = 0; i < pi.rows(); ++i) {
        for (Index k = 0; k < pi.cols(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", pi(i, k));
            out << (k ? "," : "") << buf;
        }
        out << '\n';
    }
}

inline Matrix read_memberships_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("membership table is empty");
    Index K = 1;
    for (char c : line) K += c == ',' ? 1 : 0;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        Index count = 0;
        while (std::getline(row, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("bad number '" + cell + "'", lineno);
            }
            ++count;
        }
        if (count != K) throw ParseError("expected " + std::to_string(K) + " columns, got " + std::to_string(count), lineno);
    }
    const auto n = static_cast<Index>(values.size()) / K;
    Matrix pi(n, K);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < K; ++k) pi(i, k) = values[static_cast<std::size_t>(i * K + k)];
    }
    return pi;
}

inline nlohmann::json corners_to_json(const CornerSet& c) {
    nlohmann::json j;
    j["indices"] = c.indices;
    j["candidates"] = c.candidates.size();
    j["band"] = c.band;
    j["trimmed"] = c.trimmed;
    return j;
}

inline nlohmann::json result_to_json(const EstimationResult& r) {
    nlohmann::json j;
    j["method"] = method_name(r.method);
    j["n"] = r.pi_hat.matrix().rows();
    j["K"] = r.pi_hat.matrix().cols();
    j["corners"] = corners_to_json(r.corners);
    j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
    j["degenerate_rows"] = r.degenerate_rows;
    j["zero_norm_rows"] = r.zero_norm_rows;
    j["clamped_diagonal"] = r.clamped_diagonal;
    j["corner_condition"] = r.corner_condition;
    j["rank_deficient"] = r.rank_deficient;
    return j;
}

inline nlohmann::json error_report_to_json(const ErrorReport& e) {
    Index mixed = 0;
    for (bool b : e.highly_mixed_mask) mixed += b ? 1 : 0;
    return {{"l1_rate", e.l1_rate},
            {"best_permutation", e.best_permutation},
            {"miscluster_count", e.miscluster_count},
            {"highly_mixed_count", mixed}};
}

} // namespace dcmmdf
