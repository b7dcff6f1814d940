#pragma once

// Experiment configurations and their JSON form.

#include "dcmmdf/common.hpp"
#include "dcmmdf/estimators.hpp"
#include "dcmmdf/model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dcmmdf {

struct ExperimentConfig {
    std::string name = "experiment";
    Index n = 400;
    Index K = 3;
    Index n0 = 40;
    std::vector<MixedProfile> profiles;
    Matrix P;
    ThetaRule theta_rule = ThetaRule::uniform_half;
    EdgeDistribution distribution = BernoulliEdges{};
    bool keep_self_loops = false;
    std::string sweep_variable = "rho";
    std::vector<double> grid;
    Index replicates = 50;
    std::vector<Method> methods{Method::scd, Method::dfsp};
    std::uint64_t master_seed = 20240101;

    // Throws InvariantError / DimensionError on the first violated rule.
    void validate() const {
        if (sweep_variable != "rho") throw InvariantError("only the 'rho' sweep variable is supported");
        if (grid.empty()) throw InvariantError("sweep grid is empty");
        for (double g : grid) {
            if (!(g > 0.0) || !std::isfinite(g)) throw InvariantError("sweep grid values must be positive and finite");
        }
        if (replicates < 1) throw InvariantError("replicates must be at least 1");
        if (methods.empty()) throw InvariantError("no methods requested");
        if (P.rows() != K || P.cols() != K) throw DimensionError("P must be K x K, got " + detail::shape(P));
        BlockMatrix::from(P);
        make_synthetic_membership(n, K, n0, profiles);
        check_support(Matrix::Zero(1, 1), distribution, false);
    }

    MembershipMatrix membership() const { return make_synthetic_membership(n, K, n0, profiles); }
    BlockMatrix block() const { return BlockMatrix::from(P); }
};

inline std::string theta_rule_name(ThetaRule r) {
    return r == ThetaRule::uniform_half ? "uniform_half" : "linear_ramp";
}

inline ThetaRule parse_theta_rule(const std::string& s) {
    if (s == "uniform_half") return ThetaRule::uniform_half;
    if (s == "linear_ramp") return ThetaRule::linear_ramp;
    throw ParseError("unknown theta rule '" + s + "' (expected uniform_half or linear_ramp)");
}

inline nlohmann::json distribution_to_json(const EdgeDistribution& d) {
    nlohmann::json j;
    j["family"] = distribution_name(d);
    if (const auto* normal = std::get_if<NormalEdges>(&d)) j["variance"] = normal->variance;
    return j;
}

inline EdgeDistribution distribution_from_json(const nlohmann::json& j) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "normal") return NormalEdges{j.value("variance", 1.0)};
    if (family == "bernoulli") return BernoulliEdges{};
    if (family == "poisson") return PoissonEdges{};
    if (family == "signed") return SignedEdges{};
    throw ParseError("unknown distribution family '" + family + "'");
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["n"] = c.n;
    j["K"] = c.K;
    j["n0"] = c.n0;
    j["profiles"] = nlohmann::json::array();
    for (const auto& p : c.profiles) {
        j["profiles"].push_back({{"weights", std::vector<double>(p.weights.data(), p.weights.data() + p.weights.size())},
                                 {"count", p.count}});
    }
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < c.P.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(c.P.cols()));
        for (Index s = 0; s < c.P.cols(); ++s) row[static_cast<std::size_t>(s)] = c.P(r, s);
        rows.push_back(row);
    }
    j["P"] = rows;
    j["theta_rule"] = theta_rule_name(c.theta_rule);
    j["distribution"] = distribution_to_json(c.distribution);
    j["keep_self_loops"] = c.keep_self_loops;
    j["sweep"] = {{"variable", c.sweep_variable}, {"grid", c.grid}};
    j["replicates"] = c.replicates;
    j["methods"] = nlohmann::json::array();
    for (Method m : c.methods) j["methods"].push_back(method_name(m));
    j["master_seed"] = c.master_seed;
    return j;
}

// "P" is either a full K x K array or {"off_diagonal": p}. "sweep.grid" is
// either an explicit list or {"from", "to", "step"}.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        c.name = j.value("name", c.name);
        c.n = j.at("n").get<Index>();
        c.K = j.at("K").get<Index>();
        c.n0 = j.at("n0").get<Index>();
        c.profiles.clear();
        for (const auto& p : j.value("profiles", nlohmann::json::array())) {
            const auto w = p.at("weights").get<std::vector<double>>();
            c.profiles.push_back({Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())), p.at("count").get<Index>()});
        }
        const auto& P = j.at("P");
        if (P.is_object()) {
            c.P = BlockMatrix::constant_offdiagonal(c.K, P.at("off_diagonal").get<double>()).matrix();
        } else {
            c.P.resize(static_cast<Index>(P.size()), P.empty() ? 0 : static_cast<Index>(P[0].size()));
            for (std::size_t r = 0; r < P.size(); ++r) {
                if (P[r].size() != P.size()) throw ParseError("P must be square");
                for (std::size_t s = 0; s < P[r].size(); ++s) c.P(static_cast<Index>(r), static_cast<Index>(s)) = P[r][s].get<double>();
            }
        }
        c.theta_rule = parse_theta_rule(j.value("theta_rule", std::string("uniform_half")));
        c.distribution = distribution_from_json(j.at("distribution"));
        c.keep_self_loops = j.value("keep_self_loops", false);
        const auto& sweep = j.at("sweep");
        c.sweep_variable = sweep.value("variable", std::string("rho"));
        const auto& grid = sweep.at("grid");
        c.grid.clear();
        if (grid.is_object()) {
            const double from = grid.at("from").get<double>(), to = grid.at("to").get<double>(), step = grid.at("step").get<double>();
            if (!(step > 0.0) || to < from) throw ParseError("grid range needs step > 0 and to >= from");
            const auto count = static_cast<long long>(std::floor((to - from) / step + 1e-9)) + 1;
            for (long long k = 0; k < count; ++k) c.grid.push_back(from + static_cast<double>(k) * step);
        } else {
            c.grid = grid.get<std::vector<double>>();
        }
        c.replicates = j.value("replicates", c.replicates);
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) {
                try {
                    c.methods.push_back(parse_method(m.get<std::string>()));
                } catch (const InvariantError& e) {
                    throw ParseError(std::string("config: ") + e.what());
                }
            }
        }
        c.master_seed = j.value("master_seed", c.master_seed);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    ExperimentConfig c = config_from_json(j);
    c.validate();
    return c;
}

// The n=400, K=3 design shared by the four simulation experiments: n0 pure
// nodes per community and four equal mixed groups.
inline std::vector<MixedProfile> standard_profiles(Index n, Index n0) {
    const Index mixed = n - 3 * n0;
    if (mixed < 0) throw DimensionError("n is too small for 3 * n0 pure nodes");
    const Index each = mixed / 4;
    std::vector<MixedProfile> out;
    const double third = 1.0 / 3.0;
    const double w[4][3] = {{0.1, 0.1, 0.8}, {0.1, 0.8, 0.1}, {0.8, 0.1, 0.1}, {third, third, third}};
    for (int p = 0; p < 4; ++p) {
        Vector v(3);
        v << w[p][0], w[p][1], w[p][2];
        out.push_back({v, p == 3 ? mixed - 3 * each : each});
    }
    return out;
}

inline std::vector<double> step_grid(double from, double to, double step) {
    std::vector<double> g;
    const auto count = static_cast<long long>(std::floor((to - from) / step + 1e-9)) + 1;
    for (long long k = 0; k < count; ++k) g.push_back(from + static_cast<double>(k) * step);
    return g;
}

// Experiments 1-4: normal, bernoulli, poisson, signed.
inline ExperimentConfig experiment_config(int id) {
    ExperimentConfig c;
    c.n = 400;
    c.K = 3;
    c.n0 = 40;
    c.profiles = standard_profiles(c.n, c.n0);
    c.theta_rule = ThetaRule::uniform_half;
    c.replicates = 50;
    switch (id) {
    case 1:
        c.name = "experiment1_normal";
        c.P = BlockMatrix::constant_offdiagonal(3, -0.2).matrix();
        c.distribution = NormalEdges{2.0};
        c.grid = step_grid(0.1, 2.0, 0.1);
        break;
    case 2:
        c.name = "experiment2_bernoulli";
        c.P = BlockMatrix::constant_offdiagonal(3, 0.2).matrix();
        c.distribution = BernoulliEdges{};
        c.grid = step_grid(0.1, 1.0, 0.1);
        break;
    case 3:
        c.name = "experiment3_poisson";
        c.P = BlockMatrix::constant_offdiagonal(3, 0.2).matrix();
        c.distribution = PoissonEdges{};
        c.grid = step_grid(0.2, 2.0, 0.2);
        break;
    case 4:
        c.name = "experiment4_signed";
        c.P = BlockMatrix::constant_offdiagonal(3, -0.2).matrix();
        c.distribution = SignedEdges{};
        c.grid = step_grid(0.1, 1.0, 0.1);
        break;
    default: throw InvariantError("experiment id must be 1..4");
    }
    c.master_seed = 1000 + static_cast<std::uint64_t>(id);
    return c;
}

} // namespace dcmmdf
