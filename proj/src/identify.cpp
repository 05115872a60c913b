#include "gsurgery/identify.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>

namespace gsurgery {

namespace {

void require_observed(const VarSet& s, const Admg& g, const char* what) {
    for (const auto& v : s)
        if (!g.is_observed(v)) throw std::invalid_argument(std::string(what) + " variable '" + v + "' is not observed");
}

// Kernels of the c-components of G_V derived from Q[V] by the topological
// chain Q[C] = Π_{V_i ∈ C} Q[V^(i)] / Q[V^(i-1)]. Each ratio is the
// conditional of V_i given all its predecessors, which equals the
// conditional given its Markov blanket in G[V^(i)]: the district of V_i
// there plus the parents of that district.
class ComponentKernels {
public:
    ComponentKernels(const Admg& gv, const ExprPtr& q) : gv_(gv), q_(q), order_(gv.topological_order()) {
        for (std::size_t i = 0; i < order_.size(); ++i) position_[order_[i]] = i;
    }

    ExprPtr kernel(const VarSet& component) {
        std::vector<ExprPtr> parts;
        for (const auto& v : component) {
            auto blanket = markov_blanket(position_.at(v));
            parts.push_back(make_quotient(marginal_over(set_union(blanket, {v})), marginal_over(blanket)));
        }
        return simplify(make_product(std::move(parts)));
    }

private:
    VarSet markov_blanket(std::size_t i) {
        VarSet prefix(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        const auto& v = order_[i];
        VarSet district;
        for (auto& c : c_components(gv_, prefix))
            if (c.count(v)) district = std::move(c);
        auto out = set_intersection(set_union(district, gv_.parents(district)), prefix);
        out.erase(v);
        return out;
    }

    // Q[V] with everything outside `keep` summed out.
    ExprPtr marginal_over(const VarSet& keep) {
        if (keep.empty()) return one();
        auto it = marginals_.find(keep);
        if (it != marginals_.end()) return it->second;
        VarSet drop(gv_.observed());
        for (const auto& k : keep) drop.erase(k);
        auto e = simplify(make_marginal(drop, q_));
        marginals_.emplace(keep, e);
        return e;
    }

    Admg gv_;
    ExprPtr q_;
    std::vector<std::string> order_;
    std::map<std::string, std::size_t> position_;
    std::map<VarSet, ExprPtr> marginals_;
};

}  // namespace

std::string IdFailure::describe() const {
    std::string edges;
    for (const auto& [a, b] : subgraph.bidirected_edges()) edges += (edges.empty() ? "" : ", ") + a + "<->" + b;
    return "not identifiable: Q[{" + join(offending_set) + "}] cannot be reduced from the subgraph over {" +
           join(subgraph.observed()) + "} (bidirected: " + (edges.empty() ? "none" : edges) + ")";
}

void validate_query(const Query& q, const Admg& g) {
    require_observed(q.intervene, g, "intervention");
    require_observed(q.outcome, g, "outcome");
    require_observed(q.condition, g, "conditioning");
    if (intersects(q.intervene, q.outcome) || intersects(q.intervene, q.condition) ||
        intersects(q.outcome, q.condition))
        throw std::invalid_argument("intervention, outcome and conditioning sets must be disjoint");
    if (q.outcome.empty()) throw std::invalid_argument("outcome set is empty");
}

UqResult uq(const VarSet& x, const VarSet& y, const VarSet& z, const Admg& g) {
    VarSet xs = x;
    VarSet zs = z;
    bool moved = true;
    while (moved) {
        moved = false;
        for (const auto& candidate : zs) {
            MutilationSpec spec{xs, {candidate}, false};
            auto rest = set_union(xs, set_difference(zs, {candidate}));
            if (m_separated(mutilate(g, spec), y, {candidate}, rest)) {
                xs.insert(candidate);
                zs.erase(candidate);
                moved = true;
                break;
            }
        }
    }
    return {xs, set_union(y, zs)};
}

IdResult identify(const VarSet& a, const VarSet& v, const ExprPtr& q, const Admg& g) {
    if (!is_subset(a, v)) throw std::invalid_argument("identify: target set is not contained in the kernel domain");
    VarSet current = v;
    ExprPtr kernel = q;
    while (current != a) {
        Admg gv = g.induced(current);
        // Q[An(A)] is the sum of Q[V] over the non-ancestors.
        VarSet ancestral = gv.ancestors(a);
        if (ancestral != current) {
            kernel = simplify(make_marginal(set_difference(current, ancestral), kernel));
            current = std::move(ancestral);
            continue;
        }
        auto comps = c_components(gv);
        auto component_of = [&](const std::string& b) {
            return *std::find_if(comps.begin(), comps.end(), [&](const VarSet& c) { return c.count(b) > 0; });
        };
        std::optional<std::string> removable;
        for (const auto& b : set_difference(current, a)) {
            if (!intersects(component_of(b), gv.children({b}))) {
                removable = b;
                break;
            }
        }
        if (!removable) return IdFailure{a, gv};

        // Q[V \ {B}] = Π_{C ≠ C(B)} Q[C] · Σ_B Q[C(B)]
        ComponentKernels kernels(gv, kernel);
        std::vector<ExprPtr> parts;
        for (const auto& c : comps) {
            if (c.count(*removable))
                parts.push_back(make_marginal({*removable}, kernels.kernel(c)));
            else
                parts.push_back(kernels.kernel(c));
        }
        kernel = simplify(make_product(std::move(parts)));
        current.erase(*removable);
    }
    return kernel;
}

IdResult id(const VarSet& x, const VarSet& y, const Admg& g) {
    validate_query({x, y, {}}, g);
    Admg obs = g.observed_subgraph();
    const VarSet& all = obs.observed();
    VarSet d = obs.induced(set_difference(all, x)).ancestors(y);
    auto joint = make_kernel(all, {});
    std::vector<ExprPtr> parts;
    for (const auto& comp : c_components(obs, d)) {
        auto r = identify(comp, all, joint, obs);
        if (!identified(r)) return r;
        parts.push_back(std::get<ExprPtr>(r));
    }
    auto e = simplify(make_marginal(set_difference(d, y), make_product(std::move(parts))));
    return canonicalize(e, VarOrder(g.declaration_order()));
}

IdResult identify_query(const Query& query, const Admg& g) {
    validate_query(query, g);
    auto reduced = uq(query.intervene, query.outcome, query.condition, g);
    auto r = id(reduced.intervene, reduced.outcome, g);
    if (!identified(r) || reduced.outcome == query.outcome) return r;
    auto joint = std::get<ExprPtr>(r);
    ExprPtr conditional;
    if (query.outcome.size() == 1)
        conditional = make_normalize(*query.outcome.begin(), joint);
    else
        conditional = make_quotient(joint, make_marginal(query.outcome, joint));
    return canonicalize(simplify(conditional), VarOrder(g.declaration_order()));
}

}  // namespace gsurgery
