#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gsurgery {

using VarSet = std::set<std::string>;

VarSet set_union(const VarSet& a, const VarSet& b);
VarSet set_difference(const VarSet& a, const VarSet& b);
VarSet set_intersection(const VarSet& a, const VarSet& b);
bool is_subset(const VarSet& a, const VarSet& b);
bool intersects(const VarSet& a, const VarSet& b);
std::string join(const VarSet& s, const std::string& sep = ",");

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VertexKind { Observed, Unobserved, Selection };

struct Vertex {
    std::string name;
    VertexKind kind = VertexKind::Observed;
};

/// Hidden-variable DAG over observed, unobserved and selection vertices.
class CausalDag {
public:
    void add_vertex(const std::string& name, VertexKind kind);
    void add_edge(const std::string& from, const std::string& to);

    bool has_vertex(const std::string& name) const { return kinds_.count(name) > 0; }
    VertexKind kind(const std::string& name) const;
    const std::vector<std::string>& order() const { return order_; }
    const std::set<std::pair<std::string, std::string>>& edges() const { return edges_; }
    VarSet vertices_of_kind(VertexKind kind) const;
    VarSet children(const std::string& v) const;
    VarSet parents(const std::string& v) const;

    /// Topological order, ties broken lexicographically. Throws on a directed cycle.
    std::vector<std::string> topological_order() const;

private:
    std::vector<std::string> order_;
    std::map<std::string, VertexKind> kinds_;
    std::set<std::pair<std::string, std::string>> edges_;
};

struct MutilationSpec {
    VarSet overline;   // drop edges into these vertices
    VarSet underline;  // drop directed edges out of these vertices
    bool allow_overlap = false;
};

/// Acyclic directed mixed graph with root-only selection vertices.
///
/// Observed vertices remember their declaration order, which is used only
/// for display. Every algorithm iterates in lexicographic order.
class Admg {
public:
    void add_observed(const std::string& name);
    void add_selection(const std::string& name);
    void add_directed(const std::string& from, const std::string& to);
    void add_bidirected(const std::string& a, const std::string& b);
    void add_selection_edge(const std::string& selection, const std::string& child);

    bool is_observed(const std::string& v) const { return observed_.count(v) > 0; }
    bool is_selection(const std::string& v) const { return selection_.count(v) > 0; }
    bool has_vertex(const std::string& v) const { return is_observed(v) || is_selection(v); }

    const VarSet& observed() const { return observed_; }
    const VarSet& selection() const { return selection_; }
    const std::vector<std::string>& declaration_order() const { return order_; }
    const std::set<std::pair<std::string, std::string>>& directed_edges() const { return directed_; }
    const std::set<std::pair<std::string, std::string>>& bidirected_edges() const { return bidirected_; }
    const std::set<std::pair<std::string, std::string>>& selection_edges() const { return selection_edges_; }

    bool has_directed(const std::string& a, const std::string& b) const;
    bool has_bidirected(const std::string& a, const std::string& b) const;

    // Selection edges count as directed edges for the family relations below.
    VarSet parents(const VarSet& s) const;
    VarSet children(const VarSet& s) const;
    /// Reflexive: an(s) contains s.
    VarSet ancestors(const VarSet& s) const;
    /// Reflexive: de(s) contains s.
    VarSet descendants(const VarSet& s) const;
    VarSet selection_children(const std::string& s) const;

    /// Induced subgraph over `keep` (observed and selection vertices alike).
    Admg induced(const VarSet& keep) const;
    /// Induced subgraph over the observed vertices only.
    Admg observed_subgraph() const { return induced(observed_); }

    /// Observed vertices in topological order (directed edges), ties lexicographic.
    std::vector<std::string> topological_order() const;

    bool operator==(const Admg& other) const;

private:
    void require_observed(const std::string& v) const;

    std::vector<std::string> order_;
    VarSet observed_;
    VarSet selection_;
    std::set<std::pair<std::string, std::string>> directed_;
    std::set<std::pair<std::string, std::string>> bidirected_;  // stored with first < second
    std::set<std::pair<std::string, std::string>> selection_edges_;
};

/// Observed vertices ranked by declaration order; unknown names rank after, lexicographically.
class VarOrder {
public:
    VarOrder() = default;
    explicit VarOrder(const std::vector<std::string>& names);
    bool operator()(const std::string& a, const std::string& b) const;
    std::vector<std::string> sorted(const VarSet& s) const;
    std::size_t rank(const std::string& v) const;

private:
    std::map<std::string, std::size_t> rank_;
};

Admg latent_project(const CausalDag& dag);
/// Projects onto `observed`; every other non-selection vertex is treated as latent.
Admg latent_project(const CausalDag& dag, const VarSet& observed);

Admg normalize_selection(const Admg& g);
VarSet mutable_set(const Admg& g);
Admg mutilate(const Admg& g, const MutilationSpec& spec);

/// m-separation; each bidirected edge is read as a private latent common parent.
bool m_separated(const Admg& g, const VarSet& x, const VarSet& y, const VarSet& z);

/// c-components of the subgraph induced by `restrict_to`, ordered by smallest member.
std::vector<VarSet> c_components(const Admg& g, const VarSet& restrict_to);
std::vector<VarSet> c_components(const Admg& g);

}  // namespace gsurgery
