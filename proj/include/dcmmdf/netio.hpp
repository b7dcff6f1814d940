#pragma once

// Reading real-world networks (edge triplets, GML, Pajek), writing them back,
// scree reports for choosing K, and per-node fit reports.

#include "dcmmdf/common.hpp"
#include "dcmmdf/estimators.hpp"
#include "dcmmdf/metrics.hpp"
#include "dcmmdf/model.hpp"
#include "dcmmdf/spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace dcmmdf {

enum class NetworkFormat {
    whitespace_triplets, // "u v [w]" per line; "u" alone declares a node; '#' and '%' start comments
    gml_like,            // graph [ node [ id .. label .. value .. ] edge [ source .. target .. weight|value .. ] ]
    pajek_like,          // *Vertices / *Edges / *Arcs / *Edgeslist / *Arcslist
};

inline NetworkFormat parse_network_format(const std::string& s) {
    if (s == "triplets" || s == "whitespace_triplets" || s == "edgelist") return NetworkFormat::whitespace_triplets;
    if (s == "gml" || s == "gml_like") return NetworkFormat::gml_like;
    if (s == "pajek" || s == "net" || s == "pajek_like") return NetworkFormat::pajek_like;
    throw ParseError("unknown network format '" + s + "' (expected triplets, gml or pajek)");
}

// By file extension: .gml, .net/.paj, anything else is triplets.
inline NetworkFormat guess_network_format(const std::string& path) {
    auto ends_with = [&](const std::string& suffix) {
        if (path.size() < suffix.size()) return false;
        return std::equal(suffix.rbegin(), suffix.rend(), path.rbegin(),
                          [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; });
    };
    if (ends_with(".gml")) return NetworkFormat::gml_like;
    if (ends_with(".net") || ends_with(".paj")) return NetworkFormat::pajek_like;
    return NetworkFormat::whitespace_triplets;
}

struct Network {
    WeightedAdjacency A;
    std::vector<std::string> ids;   // original node ids, in matrix order
    std::vector<std::string> names; // display labels; equal to ids when the file has none
    std::optional<LabelVector> truth;
    std::vector<std::string> truth_classes; // class index -> value in the file
    Index self_loops_dropped = 0;
    Index reciprocal_merged = 0;   // (u,v) and (v,u) with equal weight
    Index duplicates_merged = 0;   // repeated arcs in directed unweighted input
    Index outside_component = 0;   // nodes removed by largest-component extraction
    bool directed_input = false;
    bool weighted_input = false;

    Index n() const { return A.n(); }
};

struct LoadOptions {
    bool largest_component = false;
    // Optional "id label" file supplying ground truth for formats without one.
    std::string labels_path;
};

namespace detail {

struct EdgeRecord {
    std::string u, v;
    double weight = 1.0;
    bool weighted = false;
    bool directed = false;
    std::size_t line = 0;
};

struct RawNetwork {
    std::vector<std::string> ids;
    std::vector<std::string> names;
    std::vector<std::string> labels; // empty or one per id
    std::unordered_map<std::string, Index> index;
    std::vector<EdgeRecord> edges;

    Index node(const std::string& id, const std::string& name = {}) {
        auto it = index.find(id);
        if (it != index.end()) {
            if (!name.empty()) names[static_cast<std::size_t>(it->second)] = name;
            return it->second;
        }
        const auto k = static_cast<Index>(ids.size());
        index.emplace(id, k);
        ids.push_back(id);
        names.push_back(name.empty() ? id : name);
        return k;
    }
};

inline double parse_weight(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double w = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(w)) throw std::invalid_argument(s);
        return w;
    } catch (const std::exception&) {
        throw ParseError("bad edge weight '" + s + "'", line);
    }
}

inline std::string strip_comment(const std::string& line) {
    const auto cut = line.find_first_of("#%");
    return cut == std::string::npos ? line : line.substr(0, cut);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline RawNetwork read_triplets(std::istream& in) {
    RawNetwork raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty()) continue;
        if (tok.size() > 3) throw ParseError("expected 'u v [weight]', got " + std::to_string(tok.size()) + " fields", lineno);
        raw.node(tok[0]);
        if (tok.size() == 1) continue;
        raw.node(tok[1]);
        EdgeRecord e{tok[0], tok[1], 1.0, false, false, lineno};
        if (tok.size() == 3) {
            e.weight = parse_weight(tok[2], lineno);
            e.weighted = true;
        }
        raw.edges.push_back(e);
    }
    return raw;
}

// ---- GML ------------------------------------------------------------------

struct GmlToken {
    enum Kind { word, string, open, close } kind;
    std::string text;
    std::size_t line;
};

inline std::vector<GmlToken> gml_tokens(std::istream& in) {
    std::vector<GmlToken> out;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size();) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (c == '[') {
            out.push_back({GmlToken::open, "[", line});
            ++i;
        } else if (c == ']') {
            out.push_back({GmlToken::close, "]", line});
            ++i;
        } else if (c == '"') {
            const std::size_t start_line = line;
            std::string s;
            ++i;
            while (i < text.size() && text[i] != '"') {
                if (text[i] == '\n') ++line;
                s += text[i++];
            }
            if (i >= text.size()) throw ParseError("unterminated string", start_line);
            ++i;
            out.push_back({GmlToken::string, s, start_line});
        } else {
            std::string s;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '[' &&
                   text[i] != ']' && text[i] != '"') {
                s += text[i++];
            }
            out.push_back({GmlToken::word, s, line});
        }
    }
    return out;
}

struct GmlEntry {
    std::string key;
    std::string value; // scalar value; empty for lists
    bool list = false;
    std::vector<GmlEntry> children;
    std::size_t line = 0;
};

inline std::vector<GmlEntry> gml_parse(const std::vector<GmlToken>& tok, std::size_t& pos, bool nested) {
    std::vector<GmlEntry> out;
    while (pos < tok.size()) {
        if (tok[pos].kind == GmlToken::close) {
            if (!nested) throw ParseError("unbalanced ']'", tok[pos].line);
            ++pos;
            return out;
        }
        if (tok[pos].kind != GmlToken::word) throw ParseError("expected a key, got '" + tok[pos].text + "'", tok[pos].line);
        GmlEntry e;
        e.key = tok[pos].text;
        e.line = tok[pos].line;
        ++pos;
        if (pos >= tok.size()) throw ParseError("key '" + e.key + "' has no value", e.line);
        if (tok[pos].kind == GmlToken::open) {
            ++pos;
            e.list = true;
            e.children = gml_parse(tok, pos, true);
        } else if (tok[pos].kind == GmlToken::close) {
            throw ParseError("key '" + e.key + "' has no value", e.line);
        } else {
            e.value = tok[pos].text;
            ++pos;
        }
        out.push_back(std::move(e));
    }
    if (nested) throw ParseError("missing ']' at end of file", tok.empty() ? 0 : tok.back().line);
    return out;
}

inline const GmlEntry* gml_find(const std::vector<GmlEntry>& entries, const std::string& key) {
    for (const auto& e : entries) {
        if (e.key == key && !e.list) return &e;
    }
    return nullptr;
}

inline RawNetwork read_gml(std::istream& in) {
    const auto tokens = gml_tokens(in);
    std::size_t pos = 0;
    const auto top = gml_parse(tokens, pos, false);
    const GmlEntry* graph = nullptr;
    for (const auto& e : top) {
        if (e.key == "graph" && e.list) graph = &e;
    }
    if (!graph) throw ParseError("no 'graph [ ... ]' block");
    bool directed = false;
    if (const auto* d = gml_find(graph->children, "directed")) directed = d->value == "1";

    RawNetwork raw;
    bool any_label = false;
    std::vector<std::pair<std::string, std::string>> labels;
    for (const auto& e : graph->children) {
        if (e.key != "node" || !e.list) continue;
        const auto* id = gml_find(e.children, "id");
        if (!id) throw ParseError("node without id", e.line);
        if (raw.index.count(id->value)) throw ParseError("duplicate node id " + id->value, e.line);
        const auto* name = gml_find(e.children, "label");
        raw.node(id->value, name ? name->value : std::string{});
        const auto* value = gml_find(e.children, "value");
        labels.emplace_back(id->value, value ? value->value : std::string{});
        any_label = any_label || value != nullptr;
    }
    if (any_label) {
        for (const auto& [id, v] : labels) {
            if (v.empty()) throw ParseError("node " + id + " has no 'value' while others do");
            raw.labels.push_back(v);
        }
    }
    for (const auto& e : graph->children) {
        if (e.key != "edge" || !e.list) continue;
        const auto* s = gml_find(e.children, "source");
        const auto* t = gml_find(e.children, "target");
        if (!s || !t) throw ParseError("edge without source or target", e.line);
        for (const auto* end : {s, t}) {
            if (!raw.index.count(end->value)) throw ParseError("edge references unknown node " + end->value, e.line);
        }
        EdgeRecord rec{s->value, t->value, 1.0, false, directed, e.line};
        const auto* w = gml_find(e.children, "weight");
        if (!w) w = gml_find(e.children, "value");
        if (w) {
            rec.weight = parse_weight(w->value, w->line);
            rec.weighted = true;
        }
        raw.edges.push_back(rec);
    }
    return raw;
}

// ---- Pajek ----------------------------------------------------------------

inline RawNetwork read_pajek(std::istream& in) {
    RawNetwork raw;
    enum class Section { none, vertices, edges, arcs, edgeslist, arcslist } section = Section::none;
    std::string line;
    std::size_t lineno = 0;
    Index declared = -1;
    auto ensure = [&](const std::string& id, std::size_t ln) {
        if (declared >= 0 && !raw.index.count(id)) throw ParseError("vertex " + id + " was not declared", ln);
        raw.node(id);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '%') continue;
        if (line[first] == '*') {
            std::string head = split_ws(line.substr(first))[0];
            std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
            if (head == "*vertices") {
                section = Section::vertices;
                const auto tok = split_ws(line.substr(first));
                if (tok.size() < 2) throw ParseError("*Vertices needs a count", lineno);
                declared = static_cast<Index>(parse_weight(tok[1], lineno));
                for (Index v = 1; v <= declared; ++v) raw.node(std::to_string(v));
            } else if (head == "*edges") {
                section = Section::edges;
            } else if (head == "*arcs") {
                section = Section::arcs;
            } else if (head == "*edgeslist") {
                section = Section::edgeslist;
            } else if (head == "*arcslist") {
                section = Section::arcslist;
            } else {
                section = Section::none; // *Network, *Partition and friends
            }
            continue;
        }
        if (section == Section::none) continue;
        if (section == Section::vertices) {
            std::istringstream vs(line);
            std::string id;
            vs >> id;
            std::string rest;
            std::getline(vs, rest);
            std::string name;
            const auto q1 = rest.find('"');
            if (q1 != std::string::npos) {
                const auto q2 = rest.find('"', q1 + 1);
                if (q2 == std::string::npos) throw ParseError("unterminated vertex label", lineno);
                name = rest.substr(q1 + 1, q2 - q1 - 1);
            } else {
                const auto tok = split_ws(rest);
                if (!tok.empty()) name = tok[0];
            }
            ensure(id, lineno);
            if (!name.empty()) raw.node(id, name);
            continue;
        }
        const auto tok = split_ws(line);
        const bool directed = section == Section::arcs || section == Section::arcslist;
        if (section == Section::edges || section == Section::arcs) {
            if (tok.size() < 2) throw ParseError("expected 'u v [weight]'", lineno);
            ensure(tok[0], lineno);
            ensure(tok[1], lineno);
            EdgeRecord e{tok[0], tok[1], 1.0, false, directed, lineno};
            if (tok.size() >= 3) {
                e.weight = parse_weight(tok[2], lineno);
                e.weighted = true;
            }
            raw.edges.push_back(e);
        } else {
            ensure(tok[0], lineno);
            for (std::size_t t = 1; t < tok.size(); ++t) {
                ensure(tok[t], lineno);
                raw.edges.push_back({tok[0], tok[t], 1.0, false, directed, lineno});
            }
        }
    }
    if (raw.ids.empty()) throw ParseError("no vertices found");
    return raw;
}

// Applies the self-loop, reciprocity and duplicate rules and fills the matrix.
inline Network assemble(const RawNetwork& raw) {
    const auto n = static_cast<Index>(raw.ids.size());
    if (n < 2) throw ParseError("a network needs at least 2 nodes, found " + std::to_string(n));
    Network net;
    net.ids = raw.ids;
    net.names = raw.names;
    Matrix a = Matrix::Zero(n, n);

    struct Seen {
        double weight;
        bool forward;  // recorded as (lo, hi)
        bool backward; // recorded as (hi, lo)
        bool directed;
        std::size_t line;
    };
    std::map<std::pair<Index, Index>, Seen> seen;
    for (const auto& e : raw.edges) {
        net.directed_input = net.directed_input || e.directed;
        net.weighted_input = net.weighted_input || e.weighted;
        const Index u = raw.index.at(e.u), v = raw.index.at(e.v);
        if (u == v) {
            ++net.self_loops_dropped;
            continue;
        }
        const auto key = std::minmax(u, v);
        const bool forward = u < v;
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, Seen{e.weight, forward, !forward, e.directed, e.line});
            a(u, v) = a(v, u) = e.weight;
            continue;
        }
        Seen& s = it->second;
        const bool same_direction = forward ? s.forward : s.backward;
        if (same_direction) {
            // Repeated arcs in an unweighted directed file are the same link.
            if (e.directed && !e.weighted && s.directed && s.weight == 1.0) {
                ++net.duplicates_merged;
                continue;
            }
            throw ParseError("duplicate edge " + e.u + " - " + e.v + " (first seen on line " + std::to_string(s.line) + ")",
                             e.line);
        }
        if (e.weight != s.weight) {
            throw ParseError("conflicting weights for " + e.u + " - " + e.v + ": " + std::to_string(s.weight) + " vs " +
                                 std::to_string(e.weight),
                             e.line);
        }
        (forward ? s.forward : s.backward) = true;
        ++net.reciprocal_merged;
    }
    net.A = WeightedAdjacency::from(std::move(a), 0.0);

    if (!raw.labels.empty()) {
        std::vector<std::string> classes = raw.labels;
        std::sort(classes.begin(), classes.end(), [](const std::string& x, const std::string& y) {
            double dx = 0.0, dy = 0.0;
            const bool nx = std::from_chars(x.data(), x.data() + x.size(), dx).ec == std::errc{};
            const bool ny = std::from_chars(y.data(), y.data() + y.size(), dy).ec == std::errc{};
            if (nx && ny && dx != dy) return dx < dy;
            return x < y;
        });
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        std::vector<Index> labels;
        for (const auto& l : raw.labels) {
            labels.push_back(static_cast<Index>(std::find(classes.begin(), classes.end(), l) - classes.begin()));
        }
        net.truth = LabelVector::from(std::move(labels), static_cast<Index>(classes.size()));
        net.truth_classes = std::move(classes);
    }
    return net;
}

inline void attach_labels(RawNetwork& raw, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open label file '" + path + "'");
    std::vector<std::string> labels(raw.ids.size());
    std::vector<bool> set(raw.ids.size(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = split_ws(strip_comment(line));
        if (tok.empty()) continue;
        if (tok.size() != 2) throw ParseError("expected 'id label'", lineno);
        auto it = raw.index.find(tok[0]);
        if (it == raw.index.end()) continue; // labels for nodes absent from the edge file
        labels[static_cast<std::size_t>(it->second)] = tok[1];
        set[static_cast<std::size_t>(it->second)] = true;
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (!set[i]) throw ParseError("label file '" + path + "' has no label for node " + raw.ids[i]);
    }
    raw.labels = std::move(labels);
}

} // namespace detail

// Keeps the largest connected component (ties: the one holding the smallest
// matrix index). Node order is preserved.
inline Network largest_component(const Network& net) {
    const Index n = net.n();
    std::vector<Index> comp(static_cast<std::size_t>(n), -1);
    std::vector<Index> sizes;
    for (Index s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        const auto c = static_cast<Index>(sizes.size());
        sizes.push_back(0);
        std::queue<Index> q;
        q.push(s);
        comp[static_cast<std::size_t>(s)] = c;
        while (!q.empty()) {
            const Index u = q.front();
            q.pop();
            ++sizes.back();
            for (Index v = 0; v < n; ++v) {
                if (net.A(u, v) != 0.0 && comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = c;
                    q.push(v);
                }
            }
        }
    }
    const auto best = static_cast<Index>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::vector<Index> keep;
    for (Index i = 0; i < n; ++i) {
        if (comp[static_cast<std::size_t>(i)] == best) keep.push_back(i);
    }
    Network out = net;
    const auto m = static_cast<Index>(keep.size());
    Matrix a(m, m);
    out.ids.clear();
    out.names.clear();
    std::vector<Index> labels;
    for (Index r = 0; r < m; ++r) {
        for (Index c = 0; c < m; ++c) a(r, c) = net.A(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
        out.ids.push_back(net.ids[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])]);
        out.names.push_back(net.names[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])]);
        if (net.truth) labels.push_back(net.truth->labels[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])]);
    }
    out.A = WeightedAdjacency::from(std::move(a), 0.0);
    if (net.truth) out.truth = LabelVector::from(std::move(labels), net.truth->K);
    out.outside_component = net.outside_component + (n - m);
    return out;
}

inline Network read_network(std::istream& in, NetworkFormat format, const LoadOptions& opt = {}) {
    detail::RawNetwork raw;
    switch (format) {
    case NetworkFormat::whitespace_triplets: raw = detail::read_triplets(in); break;
    case NetworkFormat::gml_like: raw = detail::read_gml(in); break;
    case NetworkFormat::pajek_like: raw = detail::read_pajek(in); break;
    }
    if (!opt.labels_path.empty()) detail::attach_labels(raw, opt.labels_path);
    Network net = detail::assemble(raw);
    if (opt.largest_component) net = largest_component(net);
    return net;
}

// Dense symmetric matrix with zero diagonal. Unweighted edges get weight 1.
// Directed input is symmetrized: an edge exists if either arc exists.
inline Network load_edge_list(const std::string& path, NetworkFormat format, const LoadOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file '" + path + "'");
    try {
        return read_network(in, format, opt);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline Network load_edge_list(const std::string& path, const LoadOptions& opt = {}) {
    return load_edge_list(path, guess_network_format(path), opt);
}

// Every node id on its own line, then "u v w" for each edge (u before v in
// matrix order) with 17 significant digits. Reading it back gives the same matrix.
inline void write_triplets(const Network& net, std::ostream& out) {
    out << "# " << net.n() << " nodes\n";
    for (const auto& id : net.ids) out << id << '\n';
    char buf[64];
    for (Index i = 0; i < net.n(); ++i) {
        for (Index j = i + 1; j < net.n(); ++j) {
            if (net.A(i, j) == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.17g", net.A(i, j));
            out << net.ids[static_cast<std::size_t>(i)] << ' ' << net.ids[static_cast<std::size_t>(j)] << ' ' << buf << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Scree
// ---------------------------------------------------------------------------

struct ScreeReport {
    Vector singular_values; // top m, nonincreasing
    Vector ratios;          // sigma_k / sigma_{k+1}, k = 1..m-1
    Index suggested_K = 1;
};

// Suggested K = argmax_k sigma_k / sigma_{k+1} (1-based; ties go to the smaller k).
inline ScreeReport scree_report(const WeightedAdjacency& A, Index m, const SpectralOptions& opt = {}) {
    if (m < 2 || m > A.n()) throw DimensionError("scree needs 2 <= m <= n, got m = " + std::to_string(m));
    ScreeReport r;
    r.singular_values = top_singular_values(A.matrix(), m, opt);
    r.ratios.resize(m - 1);
    double best = -1.0;
    for (Index k = 0; k + 1 < m; ++k) {
        const double next = r.singular_values(k + 1);
        r.ratios(k) = next > 0.0 ? r.singular_values(k) / next : std::numeric_limits<double>::infinity();
        if (r.ratios(k) > best) {
            best = r.ratios(k);
            r.suggested_K = k + 1;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Fits on real networks
// ---------------------------------------------------------------------------

struct FitReport {
    Method method = Method::scd;
    Index K = 0;
    EstimationResult fit;
    LabelVector home_base;
    std::vector<bool> highly_mixed;
    double mixed_threshold = 0.8;
    // Present when the network carries ground truth with K classes.
    std::optional<Index> miscluster_count;
    std::optional<double> label_l1_error; // error rate against the one-hot truth
};

inline FitReport fit_network(const Network& net, Index K, Method method, std::uint64_t seed,
                             const EstimatorOptions& opt = {}, double mixed_threshold = 0.8) {
    FitReport r;
    r.method = method;
    r.K = K;
    r.mixed_threshold = mixed_threshold;
    r.fit = estimate(method, net.A, K, seed, opt);
    r.home_base = home_base(r.fit.pi_hat);
    if (K > 1) r.highly_mixed = highly_mixed(r.fit.pi_hat, mixed_threshold);
    else r.highly_mixed.assign(static_cast<std::size_t>(net.n()), false);
    if (net.truth && net.truth->K == K) {
        r.miscluster_count = miscluster_count(r.home_base, *net.truth).count;
        Matrix onehot = Matrix::Zero(net.n(), K);
        for (Index i = 0; i < net.n(); ++i) onehot(i, net.truth->labels[static_cast<std::size_t>(i)]) = 1.0;
        r.label_l1_error = l1_error_rate(r.fit.pi_hat.matrix(), onehot).l1_rate;
    }
    return r;
}

// Estimator failures are rethrown with the file name prepended.
inline FitReport fit_network(const std::string& path, Index K, Method method, std::uint64_t seed,
                             const LoadOptions& load = {}, const EstimatorOptions& opt = {}) {
    const Network net = load_edge_list(path, load);
    try {
        return fit_network(net, K, method, seed, opt);
    } catch (const SolverError& e) {
        throw SolverError(path + ": " + e.what());
    } catch (const InvariantError& e) {
        throw InvariantError(path + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(path + ": " + e.what());
    }
}

// Columns: id, name, home_base, pi_1..pi_K, highly_mixed.
inline void write_fit_csv(const Network& net, const FitReport& r, std::ostream& out) {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    out << "id,name,home_base";
    for (Index k = 0; k < r.K; ++k) out << ",pi_" << (k + 1);
    out << ",highly_mixed\n";
    char buf[64];
    for (Index i = 0; i < net.n(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        out << quote(net.ids[s]) << ',' << quote(net.names[s]) << ',' << (r.home_base.labels[s] + 1);
        for (Index k = 0; k < r.K; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", r.fit.pi_hat(i, k));
            out << ',' << buf;
        }
        out << ',' << (r.highly_mixed[s] ? 1 : 0) << '\n';
    }
}

inline nlohmann::json fit_summary_json(const Network& net, const FitReport& r, const std::optional<ScreeReport>& scree = {}) {
    nlohmann::json j;
    j["n"] = net.n();
    j["K"] = r.K;
    j["method"] = method_name(r.method);
    j["self_loops_dropped"] = net.self_loops_dropped;
    j["outside_component"] = net.outside_component;
    Index mixed = 0;
    for (bool b : r.highly_mixed) mixed += b ? 1 : 0;
    j["highly_mixed_count"] = mixed;
    j["highly_mixed_threshold"] = r.mixed_threshold;
    std::vector<Index> sizes(static_cast<std::size_t>(r.K), 0);
    for (Index l : r.home_base.labels) ++sizes[static_cast<std::size_t>(l)];
    j["home_base_sizes"] = sizes;
    j["corners"] = nlohmann::json::array();
    for (Index c : r.fit.corners.indices) j["corners"].push_back(net.ids[static_cast<std::size_t>(c)]);
    j["degenerate_rows"] = r.fit.degenerate_rows.size();
    j["corner_condition"] = r.fit.corner_condition;
    if (r.miscluster_count) j["miscluster_count"] = *r.miscluster_count;
    if (r.label_l1_error) j["label_l1_error"] = *r.label_l1_error;
    if (scree) {
        j["suggested_K"] = scree->suggested_K;
        j["scree"] = std::vector<double>(scree->singular_values.data(),
                                         scree->singular_values.data() + scree->singular_values.size());
    }
    return j;
}

} // namespace dcmmdf
