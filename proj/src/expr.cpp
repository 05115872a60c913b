#include "gsurgery/expr.hpp"

#include <algorithm>
#include <limits>

namespace gsurgery {

// ---------------------------------------------------------------------------
// Construction

void Expr::finish() {
    switch (kind_) {
        case ExprKind::Kernel:
            free_ = set_union(vars_, context_);
            key_ = (left_ ? "Q(" : "P(") + join(vars_) + "|" + join(context_) + ")";
            if (left_) {
                key_ += "{" + left_->key() + "}";
                nodes_ += left_->node_count();
            }
            break;
        case ExprKind::Product: {
            std::vector<std::string> keys;
            for (const auto& f : factors_) {
                free_.insert(f->free_vars().begin(), f->free_vars().end());
                keys.push_back(f->key());
                nodes_ += f->node_count();
            }
            std::sort(keys.begin(), keys.end());
            if (keys.empty()) {
                key_ = "1";
            } else {
                key_ = "*(";
                for (std::size_t i = 0; i < keys.size(); ++i) key_ += (i ? ";" : "") + keys[i];
                key_ += ")";
            }
            break;
        }
        case ExprKind::Quotient:
            free_ = set_union(left_->free_vars(), right_->free_vars());
            key_ = "/(" + left_->key() + ";" + right_->key() + ")";
            nodes_ += left_->node_count() + right_->node_count();
            break;
        case ExprKind::Marginal:
            free_ = set_difference(left_->free_vars(), vars_);
            key_ = "S[" + join(vars_) + "](" + left_->key() + ")";
            nodes_ += left_->node_count();
            break;
        case ExprKind::Normalize:
            free_ = left_->free_vars();
            key_ = "N[" + target_ + "](" + left_->key() + ")";
            nodes_ += left_->node_count();
            break;
    }
}

ExprPtr make_kernel(VarSet over, VarSet context) {
    if (intersects(over, context)) throw ExprError("kernel outcome and context overlap");
    if (over.empty()) return one();
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = ExprKind::Kernel;
    e->vars_ = std::move(over);
    e->context_ = std::move(context);
    e->finish();
    return e;
}

ExprPtr make_kernel_from(VarSet over, VarSet context, ExprPtr source) {
    if (!source) return make_kernel(std::move(over), std::move(context));
    if (intersects(over, context)) throw ExprError("kernel outcome and context overlap");
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = ExprKind::Kernel;
    e->vars_ = std::move(over);
    e->context_ = std::move(context);
    e->left_ = std::move(source);
    e->finish();
    return e;
}

ExprPtr make_product(std::vector<ExprPtr> factors) {
    if (factors.size() == 1) return factors.front();
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = ExprKind::Product;
    e->factors_ = std::move(factors);
    e->finish();
    return e;
}

ExprPtr make_quotient(ExprPtr num, ExprPtr den) {
    if (!num || !den) throw ExprError("quotient operands must be non-null");
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = ExprKind::Quotient;
    e->left_ = std::move(num);
    e->right_ = std::move(den);
    e->finish();
    return e;
}

ExprPtr make_marginal(VarSet sum_out, ExprPtr body) {
    if (sum_out.empty()) return body;
    if (!is_subset(sum_out, body->free_vars()))
        throw ExprError("summation over {" + join(sum_out) + "} but body is free in {" + join(body->free_vars()) + "}");
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = ExprKind::Marginal;
    e->vars_ = std::move(sum_out);
    e->left_ = std::move(body);
    e->finish();
    return e;
}

ExprPtr make_normalize(std::string target, ExprPtr body) {
    auto e = std::shared_ptr<Expr>(new Expr());
    e->kind_ = ExprKind::Normalize;
    e->target_ = std::move(target);
    e->left_ = std::move(body);
    e->finish();
    return e;
}

ExprPtr one() {
    static const ExprPtr unit = make_product({});
    return unit;
}

bool same(const ExprPtr& a, const ExprPtr& b) { return a->key() == b->key(); }

// ---------------------------------------------------------------------------
// Simplification

namespace {

struct Fraction {
    std::vector<ExprPtr> num;
    std::vector<ExprPtr> den;
};

Fraction as_fraction(const ExprPtr& e) {
    Fraction f;
    if (e->kind() == ExprKind::Product) {
        for (const auto& c : e->factors()) {
            auto sub = as_fraction(c);
            f.num.insert(f.num.end(), sub.num.begin(), sub.num.end());
            f.den.insert(f.den.end(), sub.den.begin(), sub.den.end());
        }
    } else if (e->kind() == ExprKind::Quotient) {
        auto n = as_fraction(e->numerator());
        auto d = as_fraction(e->denominator());
        f.num = std::move(n.num);
        f.num.insert(f.num.end(), d.den.begin(), d.den.end());
        f.den = std::move(n.den);
        f.den.insert(f.den.end(), d.num.begin(), d.num.end());
    } else {
        f.num.push_back(e);
    }
    return f;
}

ExprPtr build(std::vector<ExprPtr> v) {
    if (v.empty()) return one();
    return make_product(std::move(v));
}

ExprPtr build(const Fraction& f) {
    if (f.den.empty()) return build(f.num);
    return make_quotient(build(f.num), build(f.den));
}

bool cancel(Fraction& f) {
    for (std::size_t i = 0; i < f.den.size(); ++i) {
        for (std::size_t j = 0; j < f.num.size(); ++j) {
            if (f.den[i]->key() == f.num[j]->key()) {
                f.den.erase(f.den.begin() + static_cast<std::ptrdiff_t>(i));
                f.num.erase(f.num.begin() + static_cast<std::ptrdiff_t>(j));
                return true;
            }
        }
    }
    return false;
}

// P(X | C1) P(Y | C2) = P(X, Y | C2) when Y ⊆ C1 and C1 \ Y = C2.
bool chain_merge(std::vector<ExprPtr>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i]->observational()) continue;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (i == j || !v[j]->observational()) continue;
            const auto& a = *v[i];
            const auto& b = *v[j];
            if (!is_subset(b.over(), a.context())) continue;
            if (set_difference(a.context(), b.over()) != b.context()) continue;
            v[i] = make_kernel(set_union(a.over(), b.over()), b.context());
            v.erase(v.begin() + static_cast<std::ptrdiff_t>(j));
            return true;
        }
    }
    return false;
}

// P(X | C) / P(Y | C) = P(X \ Y | Y, C) when Y ⊂ X, and the reciprocal case.
bool chain_divide(Fraction& f) {
    for (std::size_t i = 0; i < f.num.size(); ++i) {
        if (!f.num[i]->observational()) continue;
        for (std::size_t j = 0; j < f.den.size(); ++j) {
            if (!f.den[j]->observational()) continue;
            const auto& a = *f.num[i];
            const auto& b = *f.den[j];
            if (a.context() != b.context()) continue;
            if (is_subset(b.over(), a.over()) && b.over() != a.over()) {
                f.num[i] = make_kernel(set_difference(a.over(), b.over()), set_union(a.context(), b.over()));
                f.den.erase(f.den.begin() + static_cast<std::ptrdiff_t>(j));
                return true;
            }
            if (is_subset(a.over(), b.over()) && b.over() != a.over()) {
                f.den[j] = make_kernel(set_difference(b.over(), a.over()), set_union(b.context(), a.over()));
                f.num.erase(f.num.begin() + static_cast<std::ptrdiff_t>(i));
                return true;
            }
        }
    }
    return false;
}

Fraction reduce(Fraction f);
ExprPtr simplify_marginal(VarSet sum_out, ExprPtr body);

bool contains_key(const std::vector<ExprPtr>& v, const std::string& key) {
    return std::any_of(v.begin(), v.end(), [&](const ExprPtr& e) { return e->key() == key; });
}

// (Σ_V g) / d = Σ_V (g / d) when d does not mention V; kept only if it cancels.
bool push_into_marginal(Fraction& f) {
    for (std::size_t di = 0; di < f.den.size(); ++di) {
        const auto d = f.den[di];
        for (std::size_t mi = 0; mi < f.num.size(); ++mi) {
            const auto m = f.num[mi];
            if (m->kind() != ExprKind::Marginal || intersects(d->free_vars(), m->sum_out())) continue;
            Fraction inner = as_fraction(m->body());
            inner.den.push_back(d);
            inner = reduce(std::move(inner));
            if (contains_key(inner.den, d->key())) continue;
            if (!is_subset(m->sum_out(), build(inner)->free_vars())) continue;
            auto replacement = as_fraction(simplify_marginal(m->sum_out(), build(inner)));
            if (contains_key(replacement.den, d->key())) continue;
            f.num.erase(f.num.begin() + static_cast<std::ptrdiff_t>(mi));
            f.den.erase(f.den.begin() + static_cast<std::ptrdiff_t>(di));
            f.num.insert(f.num.end(), replacement.num.begin(), replacement.num.end());
            f.den.insert(f.den.end(), replacement.den.begin(), replacement.den.end());
            return true;
        }
    }
    return false;
}

Fraction reduce(Fraction f) {
    while (cancel(f) || chain_merge(f.num) || chain_merge(f.den) || chain_divide(f) || push_into_marginal(f)) {
    }
    return f;
}

ExprPtr simplify_marginal(VarSet sum_out, ExprPtr body) {
    if (sum_out.empty()) return body;
    if (!is_subset(sum_out, body->free_vars()))
        throw ExprError("summation over a variable the body does not depend on");
    if (body->kind() == ExprKind::Marginal) {
        sum_out.insert(body->sum_out().begin(), body->sum_out().end());
        body = body->body();
    }

    Fraction all = as_fraction(body);
    Fraction outside, inside;
    auto split = [&](Fraction& from) {
        auto move_out = [&](std::vector<ExprPtr>& src, std::vector<ExprPtr>& dst) {
            for (auto it = src.begin(); it != src.end();) {
                if (!intersects((*it)->free_vars(), sum_out)) {
                    dst.push_back(*it);
                    it = src.erase(it);
                } else {
                    ++it;
                }
            }
        };
        move_out(from.num, outside.num);
        move_out(from.den, outside.den);
    };
    split(all);
    inside = std::move(all);

    bool changed = true;
    while (changed && !sum_out.empty()) {
        changed = false;
        for (const auto& v : VarSet(sum_out)) {
            auto mentions = [&](const ExprPtr& e) { return e->free_vars().count(v) > 0; };
            if (std::any_of(inside.den.begin(), inside.den.end(), mentions)) continue;
            if (std::count_if(inside.num.begin(), inside.num.end(), mentions) != 1) continue;
            auto it = std::find_if(inside.num.begin(), inside.num.end(), mentions);
            ExprPtr k = *it;
            if (k->observational() && k->over().count(v)) {
                auto rest = set_difference(k->over(), {v});
                inside.num.erase(it);
                if (!rest.empty()) inside.num.push_back(make_kernel(rest, k->context()));
            } else if (k->kind() == ExprKind::Marginal) {
                auto merged = simplify_marginal(set_union(k->sum_out(), {v}), k->body());
                inside.num.erase(it);
                auto parts = as_fraction(merged);
                inside.num.insert(inside.num.end(), parts.num.begin(), parts.num.end());
                inside.den.insert(inside.den.end(), parts.den.begin(), parts.den.end());
            } else {
                continue;
            }
            sum_out.erase(v);
            changed = true;
            break;
        }
        if (changed) {
            inside = reduce(std::move(inside));
            split(inside);
        }
    }

    ExprPtr inner = make_marginal(sum_out, build(inside));
    if (!inner->is_one()) outside.num.push_back(inner);
    return build(reduce(std::move(outside)));
}

ExprPtr simplify_normalize(const std::string& target, const ExprPtr& body) {
    if (body->kind() == ExprKind::Normalize && body->target() == target) return body;
    if (!body->free_vars().count(target)) return make_normalize(target, body);
    Fraction f = as_fraction(body);
    auto drop = [&](std::vector<ExprPtr>& v) {
        v.erase(std::remove_if(v.begin(), v.end(),
                               [&](const ExprPtr& e) { return !e->free_vars().count(target); }),
                v.end());
    };
    drop(f.num);
    drop(f.den);
    return make_normalize(target, build(reduce(std::move(f))));
}

ExprPtr simplify_node(const ExprPtr& e) {
    switch (e->kind()) {
        case ExprKind::Kernel:
            if (e->observational()) return e;
            return make_kernel_from(e->over(), e->context(), simplify_node(e->source()));
        case ExprKind::Product: {
            Fraction f;
            for (const auto& c : e->factors()) {
                auto part = as_fraction(simplify_node(c));
                f.num.insert(f.num.end(), part.num.begin(), part.num.end());
                f.den.insert(f.den.end(), part.den.begin(), part.den.end());
            }
            return build(reduce(std::move(f)));
        }
        case ExprKind::Quotient: {
            auto n = as_fraction(simplify_node(e->numerator()));
            auto d = as_fraction(simplify_node(e->denominator()));
            Fraction f{n.num, n.den};
            f.num.insert(f.num.end(), d.den.begin(), d.den.end());
            f.den.insert(f.den.end(), d.num.begin(), d.num.end());
            return build(reduce(std::move(f)));
        }
        case ExprKind::Marginal:
            return simplify_marginal(e->sum_out(), simplify_node(e->body()));
        case ExprKind::Normalize:
            return simplify_normalize(e->target(), simplify_node(e->body()));
    }
    return e;
}

std::size_t display_rank(const ExprPtr& e, const VarOrder& order) {
    const VarSet* vars = &e->free_vars();
    if (e->kind() == ExprKind::Kernel) vars = &e->over();
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& v : *vars) best = std::min(best, order.rank(v));
    return best;
}

}  // namespace

ExprPtr simplify(const ExprPtr& e) {
    ExprPtr current = e;
    for (;;) {
        ExprPtr next = simplify_node(current);
        if (next->key() == current->key()) return next;
        current = next;
    }
}

ExprPtr canonicalize(const ExprPtr& e, const VarOrder& order) {
    switch (e->kind()) {
        case ExprKind::Kernel:
            if (e->observational()) return e;
            return make_kernel_from(e->over(), e->context(), canonicalize(e->source(), order));
        case ExprKind::Product: {
            std::vector<ExprPtr> fs;
            for (const auto& f : e->factors()) fs.push_back(canonicalize(f, order));
            std::stable_sort(fs.begin(), fs.end(), [&](const ExprPtr& a, const ExprPtr& b) {
                auto ra = display_rank(a, order);
                auto rb = display_rank(b, order);
                if (ra != rb) return ra < rb;
                return a->key() < b->key();
            });
            return build(std::move(fs));
        }
        case ExprKind::Quotient:
            return make_quotient(canonicalize(e->numerator(), order), canonicalize(e->denominator(), order));
        case ExprKind::Marginal:
            return make_marginal(e->sum_out(), canonicalize(e->body(), order));
        case ExprKind::Normalize:
            return make_normalize(e->target(), canonicalize(e->body(), order));
    }
    return e;
}

bool is_grounded(const ExprPtr& e, const VarSet& observed) {
    switch (e->kind()) {
        case ExprKind::Kernel:
            if (e->observational()) return is_subset(e->free_vars(), observed);
            return is_grounded(e->source(), observed);
        case ExprKind::Product:
            return std::all_of(e->factors().begin(), e->factors().end(),
                               [&](const ExprPtr& f) { return is_grounded(f, observed); });
        case ExprKind::Quotient:
            return is_grounded(e->numerator(), observed) && is_grounded(e->denominator(), observed);
        case ExprKind::Marginal:
        case ExprKind::Normalize:
            return is_grounded(e->body(), observed);
    }
    return false;
}

}  // namespace gsurgery
