#include "dcmmdf/netio.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dcmmdf;

namespace {

const std::string karate = std::string(DCMMDF_DATA_DIR) + "/karate.gml";
const std::string lesmis = std::string(DCMMDF_DATA_DIR) + "/lesmis.gml";

Network triplets(const std::string& text, const LoadOptions& opt = {}) {
    std::istringstream in(text);
    return read_network(in, NetworkFormat::whitespace_triplets, opt);
}

std::size_t parse_error_line(const std::string& text, NetworkFormat fmt = NetworkFormat::whitespace_triplets) {
    std::istringstream in(text);
    try {
        read_network(in, fmt);
    } catch (const ParseError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no ParseError for:\n" << text;
    return 0;
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream out(p);
    out << contents;
    return p;
}

Index count_mixed(const FitReport& r) {
    return static_cast<Index>(std::count(r.highly_mixed.begin(), r.highly_mixed.end(), true));
}

} // namespace

TEST(Load, Karate) {
    const Network net = load_edge_list(karate);
    EXPECT_EQ(net.n(), 34);
    EXPECT_TRUE(net.A.matrix().isApprox(net.A.matrix().transpose(), 0.0));
    EXPECT_TRUE(net.weighted_input);
    EXPECT_GT(net.A.matrix().maxCoeff(), 1.0);
    EXPECT_EQ(net.A.matrix().diagonal().cwiseAbs().sum(), 0.0);
    ASSERT_TRUE(net.truth.has_value());
    EXPECT_EQ(net.truth->K, 2);
}

TEST(Load, Lesmis) {
    const Network net = load_edge_list(lesmis);
    EXPECT_EQ(net.n(), 77);
    EXPECT_TRUE(net.A.matrix().isApprox(net.A.matrix().transpose(), 0.0));
    EXPECT_FALSE(net.truth.has_value());
}

TEST(Load, TwoNodeTriplet) {
    const Network net = triplets("a b 1\n");
    ASSERT_EQ(net.n(), 2);
    EXPECT_EQ(net.A(0, 1), 1.0);
    EXPECT_EQ(net.A(1, 0), 1.0);
    EXPECT_EQ(net.A(0, 0), 0.0);
    EXPECT_EQ(net.ids, (std::vector<std::string>{"a", "b"}));
}

TEST(Load, UnweightedEdgesGetWeightOne) {
    const Network net = triplets("a b\nb c\n");
    EXPECT_FALSE(net.weighted_input);
    EXPECT_EQ(net.A(0, 1), 1.0);
    EXPECT_EQ(net.A(1, 2), 1.0);
    EXPECT_EQ(net.A(0, 2), 0.0);
}

TEST(Load, CommentsAndIsolatedNodeLines) {
    const Network net = triplets("# header\na b 2 % trailing\nc\n\n");
    EXPECT_EQ(net.n(), 3);
    EXPECT_EQ(net.A(0, 1), 2.0);
    EXPECT_EQ(net.A.matrix().row(2).cwiseAbs().sum(), 0.0);
}

TEST(Load, SelfLoopsDroppedAndCounted) {
    const Network net = triplets("a a 3\na b 1\nb b 1\n");
    EXPECT_EQ(net.self_loops_dropped, 2);
    EXPECT_EQ(net.A(0, 0), 0.0);
    EXPECT_EQ(net.A(1, 1), 0.0);
}

TEST(Load, ReciprocalPairsMerge) {
    const Network net = triplets("a b 2\nb a 2\nb c -1\n");
    EXPECT_EQ(net.reciprocal_merged, 1);
    EXPECT_EQ(net.A(0, 1), 2.0);
    EXPECT_EQ(net.A(1, 2), -1.0);
}

TEST(Load, ErrorsCarryLineNumbers) {
    EXPECT_EQ(parse_error_line("a b 1\nb c 1\na b 1\n"), 3u);      // duplicate
    EXPECT_EQ(parse_error_line("a b 1\nb a 2\n"), 2u);             // conflicting weights
    EXPECT_EQ(parse_error_line("a b 1\nb c x\n"), 2u);             // bad weight
    EXPECT_EQ(parse_error_line("a b 1 2\n"), 1u);                  // too many fields
    EXPECT_THROW(triplets("a\n"), ParseError);                     // one node
}

TEST(Load, GmlFromString) {
    std::istringstream in(R"(graph [
  directed 1
  node [ id 10 label "x" ]
  node [ id 20 label "y" ]
  node [ id 30 ]
  edge [ source 10 target 20 ]
  edge [ source 20 target 10 ]
  edge [ source 20 target 30 ]
  edge [ source 20 target 30 ]
])");
    const Network net = read_network(in, NetworkFormat::gml_like);
    EXPECT_EQ(net.n(), 3);
    EXPECT_TRUE(net.directed_input);
    EXPECT_EQ(net.names, (std::vector<std::string>{"x", "y", "30"}));
    EXPECT_EQ(net.reciprocal_merged, 1);
    EXPECT_EQ(net.duplicates_merged, 1);
    EXPECT_EQ(net.A(0, 1), 1.0);
    EXPECT_EQ(net.A(1, 2), 1.0);
}

TEST(Load, GmlErrors) {
    EXPECT_EQ(parse_error_line("graph [\n node [ id 1 ]\n node [ id 2 ]\n edge [ source 1 target 3 ]\n]",
                               NetworkFormat::gml_like),
              4u);
    std::istringstream missing("node [ id 1 ]");
    EXPECT_THROW(read_network(missing, NetworkFormat::gml_like), ParseError);
    std::istringstream undirected_dup("graph [ node [ id 1 ] node [ id 2 ] edge [ source 1 target 2 ] edge [ source 1 target 2 ] ]");
    EXPECT_THROW(read_network(undirected_dup, NetworkFormat::gml_like), ParseError);
}

TEST(Load, PajekFromString) {
    std::istringstream in(R"(*Vertices 4
1 "alpha one"
2 "beta"
3 gamma
4
*Edges
1 2 2.5
2 3
*Arcs
3 1
*Arcslist
4 1 2
)");
    const Network net = read_network(in, NetworkFormat::pajek_like);
    ASSERT_EQ(net.n(), 4);
    EXPECT_EQ(net.names[0], "alpha one");
    EXPECT_EQ(net.names[2], "gamma");
    EXPECT_EQ(net.A(0, 1), 2.5);
    EXPECT_EQ(net.A(1, 2), 1.0);
    EXPECT_EQ(net.A(2, 0), 1.0);
    EXPECT_EQ(net.A(3, 0), 1.0);
    EXPECT_EQ(net.A(3, 1), 1.0);
    EXPECT_TRUE(net.directed_input);
}

TEST(Load, PajekUndeclaredVertex) {
    EXPECT_EQ(parse_error_line("*Vertices 2\n*Edges\n1 3\n", NetworkFormat::pajek_like), 3u);
}

TEST(Load, FormatGuessAndNames) {
    EXPECT_EQ(guess_network_format("x/karate.gml"), NetworkFormat::gml_like);
    EXPECT_EQ(guess_network_format("polblogs.net"), NetworkFormat::pajek_like);
    EXPECT_EQ(guess_network_format("edges.txt"), NetworkFormat::whitespace_triplets);
    EXPECT_EQ(parse_network_format("pajek"), NetworkFormat::pajek_like);
    EXPECT_THROW(parse_network_format("csv"), ParseError);
}

TEST(Load, LargestComponent) {
    LoadOptions opt;
    opt.largest_component = true;
    const Network net = triplets("a b 1\nb c 1\nd e 1\nf\n", opt);
    EXPECT_EQ(net.n(), 3);
    EXPECT_EQ(net.ids, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(net.outside_component, 3);
}

TEST(Load, LabelsFile) {
    const auto labels = temp_file("dcmmdf_labels.txt", "a x\nb y\nc y\nz x\n");
    LoadOptions opt;
    opt.labels_path = labels.string();
    const Network net = triplets("a b 1\nb c 1\n", opt);
    ASSERT_TRUE(net.truth.has_value());
    EXPECT_EQ(net.truth->labels, (std::vector<Index>{0, 1, 1}));
    EXPECT_EQ(net.truth_classes, (std::vector<std::string>{"x", "y"}));

    const auto partial = temp_file("dcmmdf_labels_partial.txt", "a x\n");
    opt.labels_path = partial.string();
    EXPECT_THROW(triplets("a b 1\n", opt), ParseError);
    std::filesystem::remove(labels);
    std::filesystem::remove(partial);
}

TEST(Load, MissingFileNamesThePath) {
    try {
        load_edge_list("/nonexistent/net.txt");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/net.txt"), std::string::npos);
    }
}

TEST(Load, RoundTripIsExact) {
    for (const auto& path : {karate, lesmis}) {
        const Network net = load_edge_list(path);
        std::stringstream buf;
        write_triplets(net, buf);
        const Network back = read_network(buf, NetworkFormat::whitespace_triplets);
        EXPECT_EQ(back.ids, net.ids);
        EXPECT_EQ(back.A.matrix(), net.A.matrix()) << path;
    }
    const Network signed_net = triplets("a b -0.1\nb c 0.30000000000000004\nc d 1e-300\n");
    std::stringstream buf;
    write_triplets(signed_net, buf);
    EXPECT_EQ(read_network(buf, NetworkFormat::whitespace_triplets).A.matrix(), signed_net.A.matrix());
}

TEST(Scree, SuggestsPaperK) {
    EXPECT_EQ(scree_report(load_edge_list(karate).A, 15).suggested_K, 2);
    EXPECT_EQ(scree_report(load_edge_list(lesmis).A, 15).suggested_K, 3);
}

TEST(Scree, DeterministicAndOrdered) {
    const Network net = load_edge_list(lesmis);
    const ScreeReport a = scree_report(net.A, 15), b = scree_report(net.A, 15);
    EXPECT_LE((a.singular_values - b.singular_values).cwiseAbs().maxCoeff(), 1e-12);
    for (Index k = 0; k + 1 < a.singular_values.size(); ++k) EXPECT_GE(a.singular_values(k), a.singular_values(k + 1));
    EXPECT_EQ(a.ratios.size(), 14);
    EXPECT_THROW(scree_report(net.A, 1), DimensionError);
    EXPECT_THROW(scree_report(net.A, 78), DimensionError);
}

TEST(Fit, KarateHasNoMisclusteredNodes) {
    const FitReport r = fit_network(karate, 2, Method::scd, 1);
    ASSERT_TRUE(r.miscluster_count.has_value());
    EXPECT_EQ(*r.miscluster_count, 0);
    ASSERT_TRUE(r.label_l1_error.has_value());
    EXPECT_EQ(r.home_base.size(), 34u);
}

TEST(Fit, LesmisFewerMixedNodesAtTwo) {
    const Network net = load_edge_list(lesmis);
    const FitReport two = fit_network(net, 2, Method::scd, 1), three = fit_network(net, 3, Method::scd, 1);
    EXPECT_LT(count_mixed(two), count_mixed(three));
    EXPECT_FALSE(two.miscluster_count.has_value());
}

TEST(Fit, RenamingIdsLeavesResultsUnchanged) {
    const Network net = load_edge_list(karate);
    std::ostringstream edges, labels;
    for (Index i = 0; i < net.n(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        edges << "node_" << net.ids[s] << '\n';
        labels << "node_" << net.ids[s] << ' ' << net.truth_classes[static_cast<std::size_t>(net.truth->labels[s])] << '\n';
    }
    for (Index i = 0; i < net.n(); ++i) {
        for (Index j = i + 1; j < net.n(); ++j) {
            if (net.A(i, j) != 0.0) edges << "node_" << net.ids[static_cast<std::size_t>(i)] << " node_" << net.ids[static_cast<std::size_t>(j)] << ' ' << net.A(i, j) << '\n';
        }
    }
    const auto label_path = temp_file("dcmmdf_renamed_labels.txt", labels.str());
    LoadOptions opt;
    opt.labels_path = label_path.string();
    std::istringstream in(edges.str());
    const Network renamed = read_network(in, NetworkFormat::whitespace_triplets, opt);
    std::filesystem::remove(label_path);

    const FitReport a = fit_network(net, 2, Method::scd, 5), b = fit_network(renamed, 2, Method::scd, 5);
    EXPECT_EQ(a.fit.pi_hat.matrix(), b.fit.pi_hat.matrix());
    EXPECT_EQ(a.miscluster_count, b.miscluster_count);
    EXPECT_EQ(a.label_l1_error, b.label_l1_error);
    EXPECT_EQ(renamed.ids[0], "node_" + net.ids[0]);
}

TEST(Fit, OutputsReferenceOriginalIds) {
    const Network net = load_edge_list(karate);
    const FitReport r = fit_network(net, 2, Method::dfsp, 1);
    std::ostringstream csv;
    write_fit_csv(net, r, csv);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "id,name,home_base,pi_1,pi_2,highly_mixed");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, line.find(',')), net.ids[0]);
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 34);

    const auto j = fit_summary_json(net, r, scree_report(net.A, 15));
    EXPECT_EQ(j["n"], 34);
    EXPECT_EQ(j["suggested_K"], 2);
    EXPECT_EQ(j["corners"].size(), 2u);
    EXPECT_TRUE(j.contains("miscluster_count"));
    EXPECT_EQ(j["scree"].size(), 15u);
}

TEST(Fit, ErrorsNameTheFile) {
    try {
        fit_network(karate, 40, Method::scd, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("karate.gml"), std::string::npos);
    }
}
