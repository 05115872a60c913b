#include "gsurgery/factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace gsurgery {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> strides_of(const std::vector<int>& cards) {
    std::vector<std::size_t> s(cards.size(), 1);
    for (std::size_t i = cards.size(); i-- > 1;) s[i - 1] = s[i] * static_cast<std::size_t>(cards[i]);
    return s;
}

// Stride of each variable of `result` inside `f` (0 when f lacks it).
std::vector<std::size_t> strides_in(const Factor& f, const std::vector<std::string>& result) {
    auto own = strides_of(f.cards());
    std::vector<std::size_t> out(result.size(), 0);
    for (std::size_t k = 0; k < result.size(); ++k) {
        auto it = std::lower_bound(f.vars().begin(), f.vars().end(), result[k]);
        if (it != f.vars().end() && *it == result[k]) out[k] = own[static_cast<std::size_t>(it - f.vars().begin())];
    }
    return out;
}

Cardinalities merged_cards(const Factor& a, const Factor& b) {
    auto cards = a.cardinalities();
    for (const auto& [v, c] : b.cardinalities()) {
        auto [it, inserted] = cards.emplace(v, c);
        if (!inserted && it->second != c) throw EvalError("cardinality mismatch for variable '" + v + "'");
    }
    return cards;
}

// Walks every cell of `r` while tracking the matching cells of a and b.
template <class Op>
Factor combine(const Factor& a, const Factor& b, Op op) {
    auto cards = merged_cards(a, b);
    VarSet all = set_union(a.var_set(), b.var_set());
    Factor r(all, cards);
    const auto sa = strides_in(a, r.vars());
    const auto sb = strides_in(b, r.vars());
    const auto& rc = r.cards();
    std::vector<int> digit(rc.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = op(a[ia], b[ib], r, i);
        for (std::size_t k = rc.size(); k-- > 0;) {
            ++digit[k];
            ia += sa[k];
            ib += sb[k];
            if (digit[k] < rc[k]) break;
            ia -= sa[k] * static_cast<std::size_t>(rc[k]);
            ib -= sb[k] * static_cast<std::size_t>(rc[k]);
            digit[k] = 0;
        }
    }
    return r;
}

}  // namespace

Factor::Factor(const VarSet& vars, const Cardinalities& cards) {
    std::size_t n = 1;
    for (const auto& v : vars) {
        auto it = cards.find(v);
        if (it == cards.end()) throw EvalError("no cardinality for variable '" + v + "'");
        if (it->second < 1) throw EvalError("variable '" + v + "' has no states");
        vars_.push_back(v);
        cards_.push_back(it->second);
        n *= static_cast<std::size_t>(it->second);
    }
    values_.assign(n, 0.0);
}

Factor::Factor(const VarSet& vars, const Cardinalities& cards, std::vector<double> values) : Factor(vars, cards) {
    if (values.size() != values_.size())
        throw EvalError("factor over {" + join(vars) + "} needs " + std::to_string(values_.size()) + " values, got " +
                        std::to_string(values.size()));
    values_ = std::move(values);
}

Factor Factor::scalar(double v) {
    Factor f;
    f.values_[0] = v;
    return f;
}

int Factor::card(const std::string& v) const {
    auto it = std::lower_bound(vars_.begin(), vars_.end(), v);
    if (it == vars_.end() || *it != v) throw EvalError("factor has no variable '" + v + "'");
    return cards_[static_cast<std::size_t>(it - vars_.begin())];
}

bool Factor::has_var(const std::string& v) const { return std::binary_search(vars_.begin(), vars_.end(), v); }

std::size_t Factor::index(const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars_.size(); ++k) {
        auto it = a.find(vars_[k]);
        if (it == a.end()) throw EvalError("assignment misses variable '" + vars_[k] + "'");
        if (it->second < 0 || it->second >= cards_[k])
            throw EvalError("state " + std::to_string(it->second) + " out of range for '" + vars_[k] + "'");
        idx = idx * static_cast<std::size_t>(cards_[k]) + static_cast<std::size_t>(it->second);
    }
    return idx;
}

Assignment Factor::assignment(std::size_t index) const {
    Assignment a;
    for (std::size_t k = vars_.size(); k-- > 0;) {
        auto c = static_cast<std::size_t>(cards_[k]);
        a[vars_[k]] = static_cast<int>(index % c);
        index /= c;
    }
    return a;
}

Cardinalities Factor::cardinalities() const {
    Cardinalities c;
    for (std::size_t k = 0; k < vars_.size(); ++k) c[vars_[k]] = cards_[k];
    return c;
}

std::string describe(const Assignment& a) {
    std::string s;
    for (const auto& [v, x] : a) s += (s.empty() ? "" : ", ") + v + "=" + std::to_string(x);
    return "{" + s + "}";
}

Factor multiply(const Factor& a, const Factor& b) {
    return combine(a, b, [](double x, double y, const Factor&, std::size_t) {
        if (x == 0.0 || y == 0.0) return 0.0;
        return x * y;
    });
}

Factor divide(const Factor& a, const Factor& b) {
    return combine(a, b, [](double x, double y, const Factor& r, std::size_t i) {
        if (y == 0.0) {
            if (x == 0.0 || std::isnan(x)) return kNaN;
            throw EvalError("division by zero at cell " + describe(r.assignment(i)) + ": positivity violated");
        }
        return x / y;
    });
}

Factor sum_out(const Factor& f, const VarSet& vars) {
    VarSet keep;
    for (const auto& v : f.vars())
        if (!vars.count(v)) keep.insert(v);
    return marginalize_to(f, keep);
}

Factor marginalize_to(const Factor& f, const VarSet& keep) {
    VarSet kept = set_intersection(keep, f.var_set());
    if (kept.size() == f.vars().size()) return f;
    Factor r(kept, f.cardinalities());
    const auto sr = strides_in(r, f.vars());
    const auto& fc = f.cards();
    std::vector<int> digit(fc.size(), 0);
    std::size_t ir = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        r[ir] += f[i];
        for (std::size_t k = fc.size(); k-- > 0;) {
            ++digit[k];
            ir += sr[k];
            if (digit[k] < fc[k]) break;
            ir -= sr[k] * static_cast<std::size_t>(fc[k]);
            digit[k] = 0;
        }
    }
    return r;
}

Factor normalize_over(const Factor& f, const std::string& target) {
    if (!f.has_var(target)) throw EvalError("cannot normalize over absent variable '" + target + "'");
    auto mass = sum_out(f, {target});
    return combine(f, mass, [](double x, double m, const Factor&, std::size_t) {
        if (m == 0.0 || std::isnan(m)) return kNaN;
        return x / m;
    });
}

Factor restrict(const Factor& f, const Assignment& evidence) {
    VarSet keep;
    for (const auto& v : f.vars())
        if (!evidence.count(v)) keep.insert(v);
    Factor r(keep, f.cardinalities());
    Assignment full = evidence;
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (const auto& [v, x] : r.assignment(i)) full[v] = x;
        r[i] = f.at(full);
    }
    return r;
}

Factor evaluate(const ExprPtr& root, const KernelProvider& kernels) {
    std::unordered_map<const Expr*, Factor> memo;
    std::function<Factor(const ExprPtr&)> eval = [&](const ExprPtr& e) -> Factor {
        auto hit = memo.find(e.get());
        if (hit != memo.end()) return hit->second;
        Factor out;
        switch (e->kind()) {
            case ExprKind::Kernel:
                if (e->observational()) {
                    out = kernels(e->over(), e->context());
                    if (out.var_set() != e->free_vars())
                        throw EvalError("kernel table for " + e->key() + " has the wrong variables");
                } else {
                    out = eval(e->source());
                }
                break;
            case ExprKind::Product:
                for (const auto& f : e->factors()) out = multiply(out, eval(f));
                break;
            case ExprKind::Quotient:
                out = divide(eval(e->numerator()), eval(e->denominator()));
                break;
            case ExprKind::Marginal:
                out = sum_out(eval(e->body()), e->sum_out());
                break;
            case ExprKind::Normalize:
                out = normalize_over(eval(e->body()), e->target());
                break;
        }
        memo.emplace(e.get(), out);
        return out;
    };
    return eval(root);
}

Factor conditional(const Factor& joint, const VarSet& over, const VarSet& context) {
    auto all = set_union(over, context);
    for (const auto& v : all)
        if (!joint.has_var(v)) throw EvalError("joint table has no variable '" + v + "'");
    return divide(marginalize_to(joint, all), marginalize_to(joint, context));
}

Factor evaluate_discrete(const ExprPtr& e, const Factor& joint) {
    auto out = evaluate(e, [&](const VarSet& over, const VarSet& ctx) { return conditional(joint, over, ctx); });
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::isnan(out[i]))
            throw EvalError("undefined value at cell " + describe(out.assignment(i)) +
                            ": conditioning context has probability zero");
    }
    return out;
}

}  // namespace gsurgery
