#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsurgery/expr.hpp"
#include "gsurgery/graph.hpp"

namespace gsurgery {

using Assignment = std::map<std::string, int>;
using Cardinalities = std::map<std::string, int>;

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense table over discrete variables.
///
/// Variables are kept in lexicographic order and values are laid out
/// row-major with the last variable varying fastest.
class Factor {
public:
    Factor() : values_{1.0} {}
    Factor(const VarSet& vars, const Cardinalities& cards);
    Factor(const VarSet& vars, const Cardinalities& cards, std::vector<double> values);

    static Factor scalar(double v);

    const std::vector<std::string>& vars() const { return vars_; }
    const std::vector<int>& cards() const { return cards_; }
    VarSet var_set() const { return VarSet(vars_.begin(), vars_.end()); }
    int card(const std::string& v) const;
    bool has_var(const std::string& v) const;

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    /// `a` must assign every variable of the factor; extra entries are ignored.
    std::size_t index(const Assignment& a) const;
    Assignment assignment(std::size_t index) const;
    double at(const Assignment& a) const { return values_[index(a)]; }
    double& at(const Assignment& a) { return values_[index(a)]; }

    Cardinalities cardinalities() const;

private:
    std::vector<std::string> vars_;
    std::vector<int> cards_;
    std::vector<double> values_;
};

std::string describe(const Assignment& a);

/// Pointwise product. An exact zero annihilates the other operand, including NaN.
Factor multiply(const Factor& a, const Factor& b);
/// Pointwise quotient. 0/0 yields NaN (resolved only if later multiplied by 0);
/// x/0 with x != 0 throws EvalError naming the cell.
Factor divide(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, const VarSet& vars);
Factor marginalize_to(const Factor& f, const VarSet& keep);
/// Divides each slice by its sum over `target`; zero-mass slices become NaN.
Factor normalize_over(const Factor& f, const std::string& target);
/// Fixes the variables named in `evidence` and drops them from the table.
Factor restrict(const Factor& f, const Assignment& evidence);

/// Supplies the table of P(over | context) over over ∪ context.
using KernelProvider = std::function<Factor(const VarSet& over, const VarSet& context)>;

/// Evaluates `e` to a table over its free variables. NaN cells that survive to
/// the output mean a conditioning context of probability zero.
Factor evaluate(const ExprPtr& e, const KernelProvider& kernels);

/// P(over | context) read off a joint table.
Factor conditional(const Factor& joint, const VarSet& over, const VarSet& context);

/// Exact evaluation against an observational joint. Throws EvalError on a
/// positivity violation, naming the offending context cell.
Factor evaluate_discrete(const ExprPtr& e, const Factor& joint);

}  // namespace gsurgery
