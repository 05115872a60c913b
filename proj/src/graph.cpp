#include "gsurgery/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>

namespace gsurgery {

VarSet set_union(const VarSet& a, const VarSet& b) {
    VarSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

VarSet set_difference(const VarSet& a, const VarSet& b) {
    VarSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

VarSet set_intersection(const VarSet& a, const VarSet& b) {
    VarSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

bool is_subset(const VarSet& a, const VarSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool intersects(const VarSet& a, const VarSet& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) return true;
        if (*i < *j) ++i; else ++j;
    }
    return false;
}

std::string join(const VarSet& s, const std::string& sep) {
    std::string out;
    for (const auto& v : s) {
        if (!out.empty()) out += sep;
        out += v;
    }
    return out;
}

namespace {

std::pair<std::string, std::string> unordered(const std::string& a, const std::string& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

// Kahn's algorithm with a lexicographic min-heap.
std::vector<std::string> kahn(const VarSet& nodes, const std::set<std::pair<std::string, std::string>>& edges) {
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& v : nodes) indegree[v] = 0;
    for (const auto& [a, b] : edges) {
        if (!nodes.count(a) || !nodes.count(b)) continue;
        ++indegree[b];
        out[a].push_back(b);
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [v, d] : indegree)
        if (d == 0) ready.push(v);
    std::vector<std::string> order;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (const auto& c : out[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() != nodes.size()) throw GraphError("graph contains a directed cycle");
    return order;
}

}  // namespace

// ---------------------------------------------------------------------------
// CausalDag

void CausalDag::add_vertex(const std::string& name, VertexKind kind) {
    if (name.empty()) throw GraphError("vertex name must be non-empty");
    if (kinds_.count(name)) throw GraphError("duplicate vertex '" + name + "'");
    kinds_[name] = kind;
    order_.push_back(name);
}

void CausalDag::add_edge(const std::string& from, const std::string& to) {
    if (!has_vertex(from)) throw GraphError("unknown vertex '" + from + "'");
    if (!has_vertex(to)) throw GraphError("unknown vertex '" + to + "'");
    if (from == to) throw GraphError("self-loop on '" + from + "'");
    if (kind(to) == VertexKind::Selection) throw GraphError("selection vertex '" + to + "' cannot have parents");
    edges_.emplace(from, to);
    VarSet all(order_.begin(), order_.end());
    kahn(all, edges_);  // cycle check
}

VertexKind CausalDag::kind(const std::string& name) const {
    auto it = kinds_.find(name);
    if (it == kinds_.end()) throw GraphError("unknown vertex '" + name + "'");
    return it->second;
}

VarSet CausalDag::vertices_of_kind(VertexKind k) const {
    VarSet out;
    for (const auto& [n, kk] : kinds_)
        if (kk == k) out.insert(n);
    return out;
}

VarSet CausalDag::children(const std::string& v) const {
    VarSet out;
    for (const auto& [a, b] : edges_)
        if (a == v) out.insert(b);
    return out;
}

VarSet CausalDag::parents(const std::string& v) const {
    VarSet out;
    for (const auto& [a, b] : edges_)
        if (b == v) out.insert(a);
    return out;
}

std::vector<std::string> CausalDag::topological_order() const {
    return kahn(VarSet(order_.begin(), order_.end()), edges_);
}

// ---------------------------------------------------------------------------
// Admg

void Admg::require_observed(const std::string& v) const {
    if (!is_observed(v)) throw GraphError("'" + v + "' is not an observed vertex");
}

void Admg::add_observed(const std::string& name) {
    if (name.empty()) throw GraphError("vertex name must be non-empty");
    if (has_vertex(name)) throw GraphError("duplicate vertex '" + name + "'");
    observed_.insert(name);
    order_.push_back(name);
}

void Admg::add_selection(const std::string& name) {
    if (name.empty()) throw GraphError("vertex name must be non-empty");
    if (has_vertex(name)) throw GraphError("duplicate vertex '" + name + "'");
    selection_.insert(name);
}

void Admg::add_directed(const std::string& from, const std::string& to) {
    require_observed(from);
    require_observed(to);
    if (from == to) throw GraphError("self-loop on '" + from + "'");
    auto edges = directed_;
    edges.emplace(from, to);
    kahn(observed_, edges);
    directed_ = std::move(edges);
}

void Admg::add_bidirected(const std::string& a, const std::string& b) {
    require_observed(a);
    require_observed(b);
    if (a == b) throw GraphError("bidirected edge must join distinct vertices");
    bidirected_.insert(unordered(a, b));
}

void Admg::add_selection_edge(const std::string& s, const std::string& child) {
    if (!is_selection(s)) throw GraphError("'" + s + "' is not a selection vertex");
    require_observed(child);
    selection_edges_.emplace(s, child);
}

bool Admg::has_directed(const std::string& a, const std::string& b) const {
    return directed_.count({a, b}) > 0 || selection_edges_.count({a, b}) > 0;
}

bool Admg::has_bidirected(const std::string& a, const std::string& b) const {
    return bidirected_.count(unordered(a, b)) > 0;
}

VarSet Admg::parents(const VarSet& s) const {
    VarSet out;
    for (const auto& [a, b] : directed_)
        if (s.count(b)) out.insert(a);
    for (const auto& [a, b] : selection_edges_)
        if (s.count(b)) out.insert(a);
    return out;
}

VarSet Admg::children(const VarSet& s) const {
    VarSet out;
    for (const auto& [a, b] : directed_)
        if (s.count(a)) out.insert(b);
    for (const auto& [a, b] : selection_edges_)
        if (s.count(a)) out.insert(b);
    return out;
}

VarSet Admg::ancestors(const VarSet& s) const {
    VarSet out = s;
    std::deque<std::string> frontier(s.begin(), s.end());
    while (!frontier.empty()) {
        auto v = frontier.front();
        frontier.pop_front();
        for (const auto& p : parents({v}))
            if (out.insert(p).second) frontier.push_back(p);
    }
    return out;
}

VarSet Admg::descendants(const VarSet& s) const {
    VarSet out = s;
    std::deque<std::string> frontier(s.begin(), s.end());
    while (!frontier.empty()) {
        auto v = frontier.front();
        frontier.pop_front();
        for (const auto& c : children({v}))
            if (out.insert(c).second) frontier.push_back(c);
    }
    return out;
}

VarSet Admg::selection_children(const std::string& s) const {
    VarSet out;
    for (const auto& [a, b] : selection_edges_)
        if (a == s) out.insert(b);
    return out;
}

Admg Admg::induced(const VarSet& keep) const {
    Admg g;
    for (const auto& v : order_)
        if (keep.count(v)) g.add_observed(v);
    for (const auto& s : selection_)
        if (keep.count(s)) g.add_selection(s);
    for (const auto& [a, b] : directed_)
        if (keep.count(a) && keep.count(b)) g.directed_.emplace(a, b);
    for (const auto& e : bidirected_)
        if (keep.count(e.first) && keep.count(e.second)) g.bidirected_.insert(e);
    for (const auto& [a, b] : selection_edges_)
        if (keep.count(a) && keep.count(b)) g.selection_edges_.emplace(a, b);
    return g;
}

std::vector<std::string> Admg::topological_order() const { return kahn(observed_, directed_); }

bool Admg::operator==(const Admg& o) const {
    return observed_ == o.observed_ && selection_ == o.selection_ && directed_ == o.directed_ &&
           bidirected_ == o.bidirected_ && selection_edges_ == o.selection_edges_;
}

// ---------------------------------------------------------------------------
// VarOrder

VarOrder::VarOrder(const std::vector<std::string>& names) {
    for (const auto& n : names) rank_.emplace(n, rank_.size());
}

std::size_t VarOrder::rank(const std::string& v) const {
    auto it = rank_.find(v);
    return it == rank_.end() ? rank_.size() : it->second;
}

bool VarOrder::operator()(const std::string& a, const std::string& b) const {
    auto ra = rank(a);
    auto rb = rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
}

std::vector<std::string> VarOrder::sorted(const VarSet& s) const {
    std::vector<std::string> out(s.begin(), s.end());
    std::stable_sort(out.begin(), out.end(), *this);
    return out;
}

// ---------------------------------------------------------------------------
// Latent projection

Admg latent_project(const CausalDag& dag) {
    return latent_project(dag, dag.vertices_of_kind(VertexKind::Observed));
}

Admg latent_project(const CausalDag& dag, const VarSet& observed) {
    const VarSet selection = dag.vertices_of_kind(VertexKind::Selection);
    for (const auto& o : observed) {
        if (!dag.has_vertex(o)) throw GraphError("unknown vertex '" + o + "'");
        if (selection.count(o)) throw GraphError("selection vertex '" + o + "' cannot be observed");
    }
    auto latent = [&](const std::string& v) { return !observed.count(v) && !selection.count(v); };

    // Observed vertices reachable from `start` by directed paths whose interior is latent.
    auto reach = [&](const std::string& start) {
        VarSet found;
        VarSet seen{start};
        std::deque<std::string> frontier{start};
        while (!frontier.empty()) {
            auto v = frontier.front();
            frontier.pop_front();
            for (const auto& c : dag.children(v)) {
                if (observed.count(c)) {
                    found.insert(c);
                } else if (latent(c) && seen.insert(c).second) {
                    frontier.push_back(c);
                }
            }
        }
        return found;
    };

    Admg g;
    for (const auto& v : dag.order())
        if (observed.count(v)) g.add_observed(v);
    for (const auto& s : selection) {
        g.add_selection(s);
        for (const auto& c : dag.children(s)) {
            if (!observed.count(c))
                throw GraphError("selection vertex '" + s + "' points at unobserved vertex '" + c +
                                 "'; projecting selection edges through latents is unsupported");
            g.add_selection_edge(s, c);
        }
    }
    for (const auto& o : observed)
        for (const auto& target : reach(o)) g.add_directed(o, target);
    for (const auto& v : dag.order()) {
        if (!latent(v)) continue;
        auto r = reach(v);
        for (auto i = r.begin(); i != r.end(); ++i)
            for (auto j = std::next(i); j != r.end(); ++j) g.add_bidirected(*i, *j);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Selection handling and mutilation

Admg normalize_selection(const Admg& g) {
    Admg out = g.induced(g.observed());
    VarSet taken = g.observed();
    taken.insert(g.selection().begin(), g.selection().end());
    for (const auto& s : g.selection()) {
        auto kids = g.selection_children(s);
        if (kids.empty()) continue;
        if (kids.size() == 1) {
            out.add_selection(s);
            out.add_selection_edge(s, *kids.begin());
            continue;
        }
        for (const auto& c : kids) {
            std::string name = s + "_" + c;
            while (taken.count(name)) name += "'";
            taken.insert(name);
            out.add_selection(name);
            out.add_selection_edge(name, c);
        }
    }
    return out;
}

VarSet mutable_set(const Admg& g) {
    VarSet out;
    for (const auto& [s, c] : g.selection_edges()) out.insert(c);
    return out;
}

Admg mutilate(const Admg& g, const MutilationSpec& spec) {
    for (const auto& v : set_union(spec.overline, spec.underline))
        if (!g.is_observed(v)) throw GraphError("mutilation target '" + v + "' is not observed");
    if (!spec.allow_overlap && intersects(spec.overline, spec.underline))
        throw GraphError("overline and underline sets overlap");

    Admg out;
    for (const auto& v : g.declaration_order()) out.add_observed(v);
    for (const auto& s : g.selection()) out.add_selection(s);
    for (const auto& [a, b] : g.directed_edges()) {
        if (spec.overline.count(b) || spec.underline.count(a)) continue;
        out.add_directed(a, b);
    }
    for (const auto& [a, b] : g.bidirected_edges()) {
        if (spec.overline.count(a) || spec.overline.count(b)) continue;
        out.add_bidirected(a, b);
    }
    for (const auto& [s, c] : g.selection_edges()) {
        if (spec.overline.count(c)) continue;
        out.add_selection_edge(s, c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Separation

bool m_separated(const Admg& g, const VarSet& x, const VarSet& y, const VarSet& z) {
    if (intersects(x, y) || intersects(x, z) || intersects(y, z))
        throw GraphError("separation query sets must be pairwise disjoint");
    if (x.empty() || y.empty()) return true;

    // Canonical DAG: vertices of g plus one latent parent per bidirected edge.
    std::map<std::string, int> index;
    for (const auto& v : g.observed()) index.emplace(v, static_cast<int>(index.size()));
    for (const auto& v : g.selection()) index.emplace(v, static_cast<int>(index.size()));
    for (const auto& s : {x, y, z})
        for (const auto& v : s)
            if (!index.count(v)) throw GraphError("unknown vertex '" + v + "' in separation query");

    const int n_named = static_cast<int>(index.size());
    const int n = n_named + static_cast<int>(g.bidirected_edges().size());
    std::vector<std::vector<int>> pa(n), ch(n);
    auto link = [&](int a, int b) {
        ch[a].push_back(b);
        pa[b].push_back(a);
    };
    for (const auto& [a, b] : g.directed_edges()) link(index.at(a), index.at(b));
    for (const auto& [a, b] : g.selection_edges()) link(index.at(a), index.at(b));
    int latent = n_named;
    for (const auto& [a, b] : g.bidirected_edges()) {
        link(latent, index.at(a));
        link(latent, index.at(b));
        ++latent;
    }

    std::vector<char> in_z(n, 0), anc_z(n, 0);
    std::deque<int> frontier;
    for (const auto& v : z) {
        in_z[index.at(v)] = 1;
        anc_z[index.at(v)] = 1;
        frontier.push_back(index.at(v));
    }
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop_front();
        for (int p : pa[v])
            if (!anc_z[p]) {
                anc_z[p] = 1;
                frontier.push_back(p);
            }
    }

    std::vector<char> in_y(n, 0);
    for (const auto& v : y) in_y[index.at(v)] = 1;

    // Reachability over (vertex, direction); up = entered from a child.
    enum { Up = 0, Down = 1 };
    std::vector<std::array<char, 2>> visited(n, {0, 0});
    std::deque<std::pair<int, int>> queue;
    for (const auto& v : x) queue.emplace_back(index.at(v), Up);
    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir]) continue;
        visited[v][dir] = 1;
        if (!in_z[v] && in_y[v]) return false;
        if (dir == Up && !in_z[v]) {
            for (int p : pa[v]) queue.emplace_back(p, Up);
            for (int c : ch[v]) queue.emplace_back(c, Down);
        } else if (dir == Down) {
            if (!in_z[v])
                for (int c : ch[v]) queue.emplace_back(c, Down);
            if (anc_z[v])
                for (int p : pa[v]) queue.emplace_back(p, Up);
        }
    }
    return true;
}

std::vector<VarSet> c_components(const Admg& g, const VarSet& restrict_to) {
    std::map<std::string, std::string> parent;
    for (const auto& v : restrict_to) {
        if (!g.is_observed(v)) throw GraphError("c-components are defined over observed vertices only");
        parent[v] = v;
    }
    std::function<std::string(const std::string&)> find = [&](const std::string& v) {
        auto& p = parent.at(v);
        if (p != v) p = find(p);
        return p;
    };
    for (const auto& [a, b] : g.bidirected_edges()) {
        if (!restrict_to.count(a) || !restrict_to.count(b)) continue;
        auto ra = find(a);
        auto rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::map<std::string, VarSet> groups;
    for (const auto& v : restrict_to) groups[find(v)].insert(v);
    std::vector<VarSet> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    std::sort(out.begin(), out.end(), [](const VarSet& a, const VarSet& b) { return *a.begin() < *b.begin(); });
    return out;
}

std::vector<VarSet> c_components(const Admg& g) { return c_components(g, g.observed()); }

}  // namespace gsurgery
