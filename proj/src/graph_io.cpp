#include "gsurgery/graph_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace gsurgery {

namespace {

struct Line {
    int number;
    std::vector<std::string> tokens;
};

[[noreturn]] void fail(const Line& line, const std::string& msg) {
    throw GraphError("line " + std::to_string(line.number) + ": " + msg);
}

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::istringstream in{std::string(text)};
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream words(raw);
        Line line{number, {}};
        for (std::string w; words >> w;) line.tokens.push_back(w);
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace

GraphFile parse_graph(std::string_view text) {
    const auto lines = tokenize(text);
    bool has_latent = false;
    for (const auto& l : lines)
        if (l.tokens.size() == 2 && l.tokens[0] == "lat") has_latent = true;

    CausalDag dag;
    Admg admg;
    GraphFile out;
    std::vector<const Line*> edges;

    auto declare = [&](const Line& l, const std::string& name, VertexKind kind) {
        try {
            if (has_latent) {
                dag.add_vertex(name, kind);
            } else if (kind == VertexKind::Selection) {
                admg.add_selection(name);
            } else {
                admg.add_observed(name);
            }
        } catch (const GraphError& e) {
            fail(l, e.what());
        }
    };

    for (const auto& l : lines) {
        const auto& t = l.tokens;
        if (t.size() == 2 && t[0] == "obs") {
            declare(l, t[1], VertexKind::Observed);
        } else if (t.size() == 2 && t[0] == "lat") {
            declare(l, t[1], VertexKind::Unobserved);
        } else if (t.size() == 2 && t[0] == "target") {
            if (out.target) fail(l, "target declared twice");
            out.target = t[1];
        } else if (t.size() == 4 && t[1] == "sel" && t[2] == "->") {
            bool known = has_latent ? dag.has_vertex(t[0]) : admg.is_selection(t[0]);
            if (!known) declare(l, t[0], VertexKind::Selection);
            edges.push_back(&l);
        } else if (t.size() == 3 && (t[1] == "->" || t[1] == "<->")) {
            edges.push_back(&l);
        } else {
            fail(l, "unrecognized declaration");
        }
    }

    for (const Line* lp : edges) {
        const auto& l = *lp;
        const auto& t = l.tokens;
        try {
            if (t.size() == 4) {
                if (has_latent) dag.add_edge(t[0], t[3]);
                else admg.add_selection_edge(t[0], t[3]);
            } else if (t[1] == "->") {
                if (has_latent) dag.add_edge(t[0], t[2]);
                else admg.add_directed(t[0], t[2]);
            } else {
                if (has_latent) fail(l, "bidirected edges are not allowed in a file with latent vertices");
                admg.add_bidirected(t[0], t[2]);
            }
        } catch (const GraphError& e) {
            fail(l, e.what());
        }
    }

    if (has_latent) {
        out.graph = latent_project(dag);
        out.dag = std::move(dag);
    } else {
        out.graph = std::move(admg);
    }
    if (out.target && !out.graph.is_observed(*out.target))
        throw GraphError("target '" + *out.target + "' is not an observed vertex");
    return out;
}

GraphFile load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open graph file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_graph(buf.str());
}

std::string format_graph(const Admg& g, const std::optional<std::string>& target) {
    std::ostringstream out;
    for (const auto& v : g.declaration_order()) out << "obs " << v << "\n";
    for (const auto& [a, b] : g.directed_edges()) out << a << " -> " << b << "\n";
    for (const auto& [a, b] : g.bidirected_edges()) out << a << " <-> " << b << "\n";
    for (const auto& [s, c] : g.selection_edges()) out << s << " sel -> " << c << "\n";
    if (target) out << "target " << *target << "\n";
    return out.str();
}

}  // namespace gsurgery
