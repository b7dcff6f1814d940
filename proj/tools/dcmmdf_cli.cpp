#include "dcmmdf.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace dcmmdf;

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw ParseError("cannot write '" + p.string() + "'");
    return out;
}

int simulate(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
             unsigned threads) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    SweepOptions opt;
    opt.threads = threads;
    const SweepResult res = run_sweep(cfg, opt);

    fs::create_directories(out_dir);
    auto csv = open_out(fs::path(out_dir) / (cfg.name + ".csv"));
    write_sweep_csv(res, csv);
    auto js = open_out(fs::path(out_dir) / (cfg.name + ".json"));
    js << sweep_summary_json(res).dump(2) << '\n';

    std::printf("%-10s", "rho");
    for (Method m : cfg.methods) std::printf("  %-12s", method_name(m).c_str());
    std::printf("\n");
    for (const auto& p : res.points) {
        std::printf("%-10g", p.value);
        if (!p.valid) {
            std::printf("  skipped: %s\n", p.reason.c_str());
            continue;
        }
        for (Method m : cfg.methods) std::printf("  %-12.6f", p.method(m).mean);
        std::printf("\n");
    }
    return 0;
}

int setup(int id, int reps, std::uint64_t seed) {
    const SetupSummary s = run_setup_replicates(setup_spec(id), reps, seed);
    nlohmann::json j;
    j["setup"] = id;
    j["reps"] = reps;
    for (const auto* m : {&s.scd, &s.dfsp}) {
        j[method_name(m->method)] = {{"mean_error", m->mean}, {"std_error", m->std}, {"failures", m->failures.size()}};
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

int fit(const std::string& file, int K, const std::string& method, std::uint64_t seed, const std::string& format,
        const std::string& labels, bool largest, const std::string& out_dir, int top) {
    LoadOptions load;
    load.labels_path = labels;
    load.largest_component = largest;
    const Network net = format.empty() ? load_edge_list(file, load) : load_edge_list(file, parse_network_format(format), load);
    const FitReport r = [&] {
        try {
            return fit_network(net, K, parse_method(method), seed);
        } catch (const Error& e) {
            throw SolverError(file + ": " + e.what());
        }
    }();
    std::optional<ScreeReport> scree;
    if (top >= 2 && top <= net.n()) scree = scree_report(net.A, top);
    const auto summary = fit_summary_json(net, r, scree);
    if (out_dir.empty()) {
        write_fit_csv(net, r, std::cout);
        std::cerr << summary.dump(2) << '\n';
    } else {
        fs::create_directories(out_dir);
        const std::string stem = fs::path(file).stem().string();
        auto csv = open_out(fs::path(out_dir) / (stem + "_k" + std::to_string(K) + ".csv"));
        write_fit_csv(net, r, csv);
        auto js = open_out(fs::path(out_dir) / (stem + "_k" + std::to_string(K) + ".json"));
        js << summary.dump(2) << '\n';
        std::cout << summary.dump(2) << '\n';
    }
    return 0;
}

int scree(const std::string& file, int top, const std::string& format) {
    const Network net = format.empty() ? load_edge_list(file) : load_edge_list(file, parse_network_format(format));
    const ScreeReport s = scree_report(net.A, top);
    nlohmann::json j;
    j["n"] = net.n();
    j["singular_values"] = std::vector<double>(s.singular_values.data(), s.singular_values.data() + s.singular_values.size());
    j["ratios"] = std::vector<double>(s.ratios.data(), s.ratios.data() + s.ratios.size());
    j["suggested_K"] = s.suggested_K;
    std::cout << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-membership estimation for weighted and signed networks"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a rho sweep from a config file");
    std::string config_path, out_dir = "results";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    sim->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out_dir, "output directory")->capture_default_str();
    sim->add_option("--seed", seed, "override the master seed");
    sim->add_option("--threads", threads, "worker threads")->capture_default_str();

    auto* set = app.add_subcommand("setup", "run one of the four small set-ups");
    int setup_id = 1, reps = 50;
    std::uint64_t setup_seed = 2024;
    set->add_option("--id", setup_id, "set-up id")->required()->check(CLI::Range(1, 4));
    set->add_option("--reps", reps, "replicates")->capture_default_str()->check(CLI::PositiveNumber);
    set->add_option("--seed", setup_seed, "master seed")->capture_default_str();

    auto* fitc = app.add_subcommand("fit", "estimate memberships of a network file");
    std::string file, method = "scd", format, labels, fit_out;
    int K = 2, fit_top = 15;
    std::uint64_t fit_seed = 1;
    bool largest = false;
    fitc->add_option("--file", file, "network file")->required()->check(CLI::ExistingFile);
    fitc->add_option("--k", K, "number of communities")->required()->check(CLI::PositiveNumber);
    fitc->add_option("--method", method, "scd or dfsp")->capture_default_str()->check(CLI::IsMember({"scd", "dfsp"}));
    fitc->add_option("--seed", fit_seed, "seed for corner finding")->capture_default_str();
    fitc->add_option("--format", format, "triplets, gml or pajek (default: by extension)");
    fitc->add_option("--labels", labels, "ground-truth file with 'id label' lines");
    fitc->add_flag("--largest-component", largest, "keep only the largest connected component");
    fitc->add_option("--out", fit_out, "write CSV and JSON here instead of stdout/stderr");
    fitc->add_option("--top", fit_top, "singular values in the summary")->capture_default_str();

    auto* scr = app.add_subcommand("scree", "leading singular values and the eigengap K");
    std::string scree_file, scree_format;
    int top = 15;
    scr->add_option("--file", scree_file, "network file")->required()->check(CLI::ExistingFile);
    scr->add_option("--top", top, "number of singular values")->capture_default_str();
    scr->add_option("--format", scree_format, "triplets, gml or pajek (default: by extension)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return simulate(config_path, out_dir, seed, threads);
        if (*set) return setup(setup_id, reps, setup_seed);
        if (*fitc) return fit(file, K, method, fit_seed, format, labels, largest, fit_out, fit_top);
        if (*scr) return scree(scree_file, top, scree_format);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
