#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsurgery/graph.hpp"

namespace gsurgery {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { Kernel, Product, Quotient, Marginal, Normalize };

class ExprError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Immutable node of a symbolic distribution expression.
///
/// A Kernel without a source is the observational conditional P(over | context).
/// A Kernel with a source is a named Q[over] factor whose value is the source.
/// The empty Product is the constant 1.
class Expr {
public:
    ExprKind kind() const { return kind_; }

    const VarSet& over() const { return vars_; }
    const VarSet& context() const { return context_; }
    const ExprPtr& source() const { return left_; }
    bool observational() const { return kind_ == ExprKind::Kernel && !left_; }

    const std::vector<ExprPtr>& factors() const { return factors_; }

    const ExprPtr& numerator() const { return left_; }
    const ExprPtr& denominator() const { return right_; }

    const VarSet& sum_out() const { return vars_; }
    const std::string& target() const { return target_; }
    const ExprPtr& body() const { return left_; }

    bool is_one() const { return kind_ == ExprKind::Product && factors_.empty(); }

    const VarSet& free_vars() const { return free_; }
    /// Canonical structural key; equal keys mean structurally identical up to product order.
    const std::string& key() const { return key_; }
    std::size_t node_count() const { return nodes_; }

    friend ExprPtr make_kernel(VarSet over, VarSet context);
    friend ExprPtr make_kernel_from(VarSet over, VarSet context, ExprPtr source);
    friend ExprPtr make_product(std::vector<ExprPtr> factors);
    friend ExprPtr make_quotient(ExprPtr num, ExprPtr den);
    friend ExprPtr make_marginal(VarSet sum_out, ExprPtr body);
    friend ExprPtr make_normalize(std::string target, ExprPtr body);

private:
    Expr() = default;
    void finish();

    ExprKind kind_ = ExprKind::Product;
    VarSet vars_;
    VarSet context_;
    std::string target_;
    ExprPtr left_;
    ExprPtr right_;
    std::vector<ExprPtr> factors_;
    VarSet free_;
    std::string key_;
    std::size_t nodes_ = 1;
};

ExprPtr make_kernel(VarSet over, VarSet context = {});
ExprPtr make_kernel_from(VarSet over, VarSet context, ExprPtr source);
ExprPtr make_product(std::vector<ExprPtr> factors);
ExprPtr make_quotient(ExprPtr num, ExprPtr den);
/// Requires sum_out to be free in body; an empty sum_out returns body.
ExprPtr make_marginal(VarSet sum_out, ExprPtr body);
ExprPtr make_normalize(std::string target, ExprPtr body);
ExprPtr one();

bool same(const ExprPtr& a, const ExprPtr& b);

/// Applies sound probability identities: cancellation of identical factors,
/// chain-rule merge and split of observational conditionals, summing a
/// variable out of the single conditional that mentions it, and pulling
/// constant factors out of sums and normalizations.
ExprPtr simplify(const ExprPtr& e);

/// Orders product factors by the display rank of their outcome variables.
ExprPtr canonicalize(const ExprPtr& e, const VarOrder& order);

/// True when every observational kernel is over observed variables and no
/// named kernel lacks a grounded source.
bool is_grounded(const ExprPtr& e, const VarSet& observed);

/// Conventional notation, e.g. `Σ_{m'} P(T|m',Z) P(m')`. Bound variables
/// print lowercase with one prime per nesting level.
std::string to_text(const ExprPtr& e, const VarOrder& order = {});
/// Inverse of to_text. `variables` resolves primed bound names.
ExprPtr parse_text(std::string_view text, const VarSet& variables);

nlohmann::json to_json(const ExprPtr& e);
ExprPtr from_json(const nlohmann::json& j);

}  // namespace gsurgery
