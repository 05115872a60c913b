#pragma once

#include <string>
#include <variant>

#include "gsurgery/expr.hpp"
#include "gsurgery/graph.hpp"

namespace gsurgery {

/// P_intervene(outcome | condition).
struct Query {
    VarSet intervene;
    VarSet outcome;
    VarSet condition;
};

/// Witness of non-identifiability: no vertex of `subgraph` outside
/// `offending_set` can be removed by the kernel-division step.
struct IdFailure {
    VarSet offending_set;
    Admg subgraph;

    std::string describe() const;
};

using IdResult = std::variant<ExprPtr, IdFailure>;

inline bool identified(const IdResult& r) { return std::holds_alternative<ExprPtr>(r); }

struct UqResult {
    VarSet intervene;
    VarSet outcome;
};

/// Moves conditioning variables into the intervention set while the
/// action/observation exchange test allows it. The rest join the outcome.
UqResult uq(const VarSet& x, const VarSet& y, const VarSet& z, const Admg& g);

/// Expression for P_x(y) over the observational joint of g's observed
/// vertices, or the failure witness.
IdResult id(const VarSet& x, const VarSet& y, const Admg& g);

/// Reduces the kernel `q` = Q[v] to Q[a]. `g` supplies the edges; only its
/// subgraph induced by `v` is consulted.
IdResult identify(const VarSet& a, const VarSet& v, const ExprPtr& q, const Admg& g);

/// Full conditional query: uq, then id, then conditioning on the variables
/// that could not be moved into the intervention set.
IdResult identify_query(const Query& query, const Admg& g);

void validate_query(const Query& query, const Admg& g);

}  // namespace gsurgery
