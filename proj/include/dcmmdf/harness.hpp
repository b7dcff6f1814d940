#pragma once

// Parameter sweeps with replicate averaging, the four small set-ups, and the
// rate-flatness check.

#include "dcmmdf/common.hpp"
#include "dcmmdf/config.hpp"
#include "dcmmdf/estimators.hpp"
#include "dcmmdf/metrics.hpp"
#include "dcmmdf/model.hpp"
#include "dcmmdf/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace dcmmdf {

struct MethodSummary {
    Method method = Method::scd;
    std::vector<double> errors;  // per replicate; NaN where the fit failed
    std::vector<double> seconds; // per replicate wall time, spectrum included
    std::vector<std::string> failures; // "replicate r: message"
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN();
};

struct GridPoint {
    double value = 0.0;
    bool valid = true;
    std::string reason; // why the point was skipped
    std::vector<MethodSummary> methods;

    const MethodSummary& method(Method m) const {
        for (const auto& s : methods) {
            if (s.method == m) return s;
        }
        throw InvariantError("method " + method_name(m) + " was not run");
    }
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<GridPoint> points;
};

struct SweepOptions {
    unsigned threads = 1;
    EstimatorOptions estimator{};
    // Called after each finished replicate with (done, total).
    std::function<void(std::size_t, std::size_t)> progress;
};

namespace detail {

// Order-independent mean and sample standard deviation of the finite values.
inline void summarize(MethodSummary& s) {
    std::vector<double> v;
    for (double e : s.errors) {
        if (std::isfinite(e)) v.push_back(e);
    }
    if (v.empty()) return;
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) {
        s.std = 0.0;
        return;
    }
    std::vector<double> sq;
    sq.reserve(v.size());
    for (double e : v) sq.push_back((e - s.mean) * (e - s.mean));
    std::sort(sq.begin(), sq.end());
    s.std = std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0) / (n - 1.0));
}

// Omega at theta = rho everywhere bounds every admissible draw of theta.
inline std::string support_violation(const ExperimentConfig& cfg, const MembershipMatrix& pi, double rho) {
    const Matrix worst = rho * rho * (pi.matrix() * cfg.P * pi.matrix().transpose());
    try {
        check_support(worst, cfg.distribution, cfg.keep_self_loops);
    } catch (const SupportError& e) {
        return std::string("rho = ") + std::to_string(rho) + ": " + e.what();
    }
    return {};
}

struct ReplicateOutcome {
    std::vector<double> errors;
    std::vector<double> seconds;
    std::vector<std::string> failures;
};

inline ReplicateOutcome run_replicate(const ExperimentConfig& cfg, const MembershipMatrix& pi, double rho,
                                      std::uint64_t seed, const EstimatorOptions& opt) {
    using clock = std::chrono::steady_clock;
    ReplicateOutcome out;
    out.errors.assign(cfg.methods.size(), std::numeric_limits<double>::quiet_NaN());
    out.seconds.assign(cfg.methods.size(), 0.0);
    out.failures.assign(cfg.methods.size(), {});

    const HeterogeneityVector theta = make_theta(cfg.n, rho, cfg.theta_rule, derive_seed(seed, 1));
    const ExpectationMatrix omega = build_omega(cfg.block(), pi, theta);
    const WeightedAdjacency A = sample_adjacency(omega, cfg.distribution, derive_seed(seed, 2), cfg.keep_self_loops);
    const std::uint64_t fit_seed = derive_seed(seed, 3);

    bool need_spectrum = false;
    for (Method m : cfg.methods) need_spectrum = need_spectrum || m != Method::ideal_scd;
    SpectralPair spec;
    double spectrum_seconds = 0.0;
    std::string spectrum_error;
    if (need_spectrum) {
        const auto t0 = clock::now();
        try {
            spec = top_k_eigs(A.matrix(), cfg.K, opt.spectral);
        } catch (const Error& e) {
            spectrum_error = e.what();
        }
        spectrum_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }

    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const Method method = cfg.methods[m];
        const auto t0 = clock::now();
        try {
            EstimationResult fit;
            if (method == Method::ideal_scd) {
                fit = ideal_scd(omega, cfg.K, fit_seed, opt);
            } else {
                if (!spectrum_error.empty()) throw SolverError(spectrum_error);
                fit = method == Method::scd ? scd_from_spectrum(A.matrix(), spec, fit_seed, opt)
                                            : dfsp_from_spectrum(spec, opt);
            }
            out.errors[m] = l1_error_rate(fit.pi_hat, pi).l1_rate;
        } catch (const Error& e) {
            out.failures[m] = e.what();
        }
        out.seconds[m] = std::chrono::duration<double>(clock::now() - t0).count() +
                         (method == Method::ideal_scd ? 0.0 : spectrum_seconds);
    }
    return out;
}

} // namespace detail

// Every (grid point, replicate) pair is an independent unit with seed
// derive_seed(master_seed, grid index, replicate index); results are stored
// by index, so thread count and completion order do not affect the output.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opt = {}) {
    cfg.validate();
    const MembershipMatrix pi = cfg.membership();
    SweepResult res;
    res.config = cfg;
    res.points.resize(cfg.grid.size());

    struct Unit {
        std::size_t g;
        std::size_t r;
    };
    std::vector<Unit> units;
    for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
        GridPoint& p = res.points[g];
        p.value = cfg.grid[g];
        p.reason = detail::support_violation(cfg, pi, p.value);
        p.valid = p.reason.empty();
        for (Method m : cfg.methods) {
            MethodSummary s;
            s.method = m;
            s.errors.assign(static_cast<std::size_t>(cfg.replicates), std::numeric_limits<double>::quiet_NaN());
            s.seconds.assign(static_cast<std::size_t>(cfg.replicates), 0.0);
            p.methods.push_back(std::move(s));
        }
        if (!p.valid) continue;
        for (Index r = 0; r < cfg.replicates; ++r) units.push_back({g, static_cast<std::size_t>(r)});
    }

    std::vector<detail::ReplicateOutcome> outcomes(units.size());
    std::atomic<std::size_t> next{0}, done{0};
    std::mutex progress_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t u = next.fetch_add(1);
            if (u >= units.size()) return;
            const auto [g, r] = units[u];
            outcomes[u] = detail::run_replicate(cfg, pi, cfg.grid[g], derive_seed(cfg.master_seed, g, r), opt.estimator);
            const std::size_t finished = ++done;
            if (opt.progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                opt.progress(finished, units.size());
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(units.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t u = 0; u < units.size(); ++u) {
        const auto [g, r] = units[u];
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            MethodSummary& s = res.points[g].methods[m];
            s.errors[r] = outcomes[u].errors[m];
            s.seconds[r] = outcomes[u].seconds[m];
            if (!outcomes[u].failures[m].empty()) {
                s.failures.push_back("replicate " + std::to_string(r) + ": " + outcomes[u].failures[m]);
            }
        }
    }
    for (auto& p : res.points) {
        for (auto& s : p.methods) detail::summarize(s);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Set-ups 1-4 (K = 2)
// ---------------------------------------------------------------------------

struct SetupSpec {
    int id = 1;
    Index n = 16;
    Index n0 = 6;
    double rho = 10.0;
    double off_diagonal = -0.2;
    EdgeDistribution distribution = NormalEdges{1.0};
    bool keep_self_loops = false;
};

inline SetupSpec setup_spec(int id) {
    switch (id) {
    case 1: return {1, 16, 6, 10.0, -0.2, NormalEdges{1.0}};
    case 2: return {2, 30, 10, 1.0, 0.2, BernoulliEdges{}};
    case 3: return {3, 24, 8, 10.0, 0.2, PoissonEdges{}};
    case 4: return {4, 30, 12, 1.0, -0.2, SignedEdges{}};
    default: throw InvariantError("set-up id must be 1..4, got " + std::to_string(id));
    }
}

// Pure rows per community, then (0.7, 0.3) for the rest; theta on the linear ramp.
inline ExpectationMatrix setup_omega(const SetupSpec& s, MembershipMatrix* pi_out = nullptr) {
    Vector mixed(2);
    mixed << 0.7, 0.3;
    const MembershipMatrix pi = make_synthetic_membership(s.n, 2, s.n0, {{mixed, s.n - 2 * s.n0}});
    const HeterogeneityVector theta = make_theta(s.n, s.rho, ThetaRule::linear_ramp);
    if (pi_out) *pi_out = pi;
    return build_omega(BlockMatrix::constant_offdiagonal(2, s.off_diagonal), pi, theta);
}

struct SetupResult {
    int id = 1;
    ErrorReport scd;
    ErrorReport dfsp;
};

inline SetupResult run_setup(const SetupSpec& s, std::uint64_t seed, const EstimatorOptions& opt = {}) {
    MembershipMatrix pi;
    const ExpectationMatrix omega = setup_omega(s, &pi);
    const WeightedAdjacency A = sample_adjacency(omega, s.distribution, seed, s.keep_self_loops);
    const SpectralPair spec = top_k_eigs(A.matrix(), 2, opt.spectral);
    SetupResult out;
    out.id = s.id;
    out.scd = l1_error_rate(scd_from_spectrum(A.matrix(), spec, derive_seed(seed, 3), opt).pi_hat, pi);
    out.dfsp = l1_error_rate(dfsp_from_spectrum(spec, opt).pi_hat, pi);
    return out;
}

inline SetupResult run_setup(int id, std::uint64_t seed, const EstimatorOptions& opt = {}) {
    return run_setup(setup_spec(id), seed, opt);
}

struct SetupSummary {
    int id = 1;
    MethodSummary scd;
    MethodSummary dfsp;
};

// Replicate r uses seed derive_seed(master_seed, id, r).
inline SetupSummary run_setup_replicates(const SetupSpec& s, Index reps, std::uint64_t master_seed,
                                         const EstimatorOptions& opt = {}) {
    if (reps < 1) throw InvariantError("reps must be at least 1");
    SetupSummary out;
    out.id = s.id;
    out.scd.method = Method::scd;
    out.dfsp.method = Method::dfsp;
    for (Index r = 0; r < reps; ++r) {
        const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(s.id), static_cast<std::uint64_t>(r));
        try {
            const SetupResult one = run_setup(s, seed, opt);
            out.scd.errors.push_back(one.scd.l1_rate);
            out.dfsp.errors.push_back(one.dfsp.l1_rate);
        } catch (const Error& e) {
            out.scd.errors.push_back(std::numeric_limits<double>::quiet_NaN());
            out.dfsp.errors.push_back(std::numeric_limits<double>::quiet_NaN());
            out.scd.failures.push_back("replicate " + std::to_string(r) + ": " + e.what());
        }
    }
    detail::summarize(out.scd);
    detail::summarize(out.dfsp);
    return out;
}

// ---------------------------------------------------------------------------
// Rate flatness
// ---------------------------------------------------------------------------

struct ScalingPoint {
    Index n = 0;
    double rho = 0.0;
    double mean_error = 0.0;
    double normalized = 0.0; // mean * sqrt(rho n) / sqrt(log n)
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    double spread = 0.0; // max / min of the normalized values
    bool flat = false;   // spread <= factor
    double factor = 3.0;
};

// Same layout at a different n: n0 and the mixed counts scale proportionally.
inline ExperimentConfig resize_config(const ExperimentConfig& cfg, Index n) {
    if (n == cfg.n) return cfg;
    ExperimentConfig c = cfg;
    c.n = n;
    const double scale = static_cast<double>(n) / static_cast<double>(cfg.n);
    c.n0 = std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(cfg.n0) * scale)));
    Index used = c.K * c.n0;
    for (std::size_t p = 0; p < c.profiles.size(); ++p) {
        const bool last = p + 1 == c.profiles.size();
        c.profiles[p].count = last ? n - used
                                   : static_cast<Index>(std::llround(static_cast<double>(cfg.profiles[p].count) * scale));
        used += c.profiles[p].count;
    }
    if (c.profiles.empty() && used != n) throw DimensionError("cannot resize a design without mixed profiles");
    return c;
}

// Runs ScD over the rho grid of `base` at every n in `n_values` (base.n when
// empty) and checks that mean * sqrt(rho n) / sqrt(log n) stays within
// `factor`. Only bernoulli and poisson, where rho sets the sparsity.
inline ScalingReport scaling_check(const ExperimentConfig& base, std::vector<Index> n_values = {}, double factor = 3.0,
                                   const SweepOptions& opt = {}) {
    if (!std::holds_alternative<BernoulliEdges>(base.distribution) && !std::holds_alternative<PoissonEdges>(base.distribution)) {
        throw InvariantError("scaling_check needs a bernoulli or poisson configuration");
    }
    if (n_values.empty()) n_values.push_back(base.n);
    ScalingReport rep;
    rep.factor = factor;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Index n : n_values) {
        ExperimentConfig cfg = resize_config(base, n);
        cfg.methods = {Method::scd};
        const SweepResult sweep = run_sweep(cfg, opt);
        for (const auto& p : sweep.points) {
            if (!p.valid) continue;
            ScalingPoint s;
            s.n = n;
            s.rho = p.value;
            s.mean_error = p.methods.front().mean;
            s.normalized = s.mean_error * std::sqrt(s.rho * static_cast<double>(n)) / std::sqrt(std::log(static_cast<double>(n)));
            lo = std::min(lo, s.normalized);
            hi = std::max(hi, s.normalized);
            rep.points.push_back(s);
        }
    }
    rep.spread = rep.points.empty() || lo <= 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
    rep.flat = rep.spread <= factor;
    return rep;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

// Columns: method, grid value, replicate, error, seconds.
inline void write_sweep_csv(const SweepResult& res, std::ostream& out) {
    out << "method,grid_value,replicate,error,seconds\n";
    out.precision(17);
    for (const auto& p : res.points) {
        if (!p.valid) continue;
        for (const auto& s : p.methods) {
            for (std::size_t r = 0; r < s.errors.size(); ++r) {
                out << method_name(s.method) << ',' << p.value << ',' << r << ',';
                if (std::isfinite(s.errors[r])) out << s.errors[r];
                else out << "nan";
                out << ',' << s.seconds[r] << '\n';
            }
        }
    }
}

inline nlohmann::json sweep_summary_json(const SweepResult& res) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["config"] = config_to_json(res.config);
    j["points"] = nlohmann::json::array();
    for (const auto& p : res.points) {
        nlohmann::json jp{{"grid_value", p.value}, {"valid", p.valid}};
        if (!p.valid) jp["reason"] = p.reason;
        for (const auto& s : p.methods) {
            double total = 0.0;
            for (double t : s.seconds) total += t;
            jp["methods"][method_name(s.method)] = {{"mean_error", num(s.mean)},
                                                    {"std_error", num(s.std)},
                                                    {"seconds", total},
                                                    {"failures", s.failures}};
        }
        j["points"].push_back(jp);
    }
    return j;
}

} // namespace dcmmdf
