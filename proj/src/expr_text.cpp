#include <cctype>
#include <map>

#include "gsurgery/expr.hpp"

namespace gsurgery {

namespace {

const std::string kSigma = "\xCE\xA3";  // Σ

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

enum class Ctx { Top, Factor, Side };

class Printer {
public:
    explicit Printer(const VarOrder& order) : order_(order) {}

    std::string print(const ExprPtr& e, Ctx ctx) {
        switch (e->kind()) {
            case ExprKind::Kernel: {
                if (!e->observational()) {
                    std::string s = "Q[" + vars(e->over());
                    if (!e->context().empty()) s += "|" + vars(e->context());
                    return s + "]{" + print(e->source(), Ctx::Top) + "}";
                }
                std::string s = "P(" + vars(e->over());
                if (!e->context().empty()) s += "|" + vars(e->context());
                return s + ")";
            }
            case ExprKind::Product: {
                if (e->is_one()) return "1";
                std::string s;
                for (const auto& f : e->factors()) {
                    if (!s.empty()) s += " ";
                    s += print(f, Ctx::Factor);
                }
                return ctx == Ctx::Factor ? "[" + s + "]" : s;
            }
            case ExprKind::Quotient: {
                std::string s = print(e->numerator(), Ctx::Side) + " / " + print(e->denominator(), Ctx::Side);
                return ctx == Ctx::Top ? s : "[" + s + "]";
            }
            case ExprKind::Marginal: {
                std::vector<std::string> names;
                for (const auto& v : order_.sorted(e->sum_out())) {
                    int depth = ++depth_[v];
                    display_[v].push_back(lowercase(v) + std::string(static_cast<std::size_t>(depth), '\''));
                    names.push_back(display_[v].back());
                }
                std::string list;
                for (const auto& n : names) list += (list.empty() ? "" : ",") + n;
                std::string s = kSigma + "_{" + list + "} " + print(e->body(), Ctx::Top);
                for (const auto& v : e->sum_out()) {
                    --depth_[v];
                    display_[v].pop_back();
                }
                return ctx == Ctx::Top ? s : "[" + s + "]";
            }
            case ExprKind::Normalize:
                return "Normalize_{" + name(e->target()) + "}[" + print(e->body(), Ctx::Top) + "]";
        }
        return {};
    }

private:
    std::string name(const std::string& v) const {
        auto it = display_.find(v);
        if (it == display_.end() || it->second.empty()) return v;
        return it->second.back();
    }

    std::string vars(const VarSet& s) const {
        std::string out;
        for (const auto& v : order_.sorted(s)) out += (out.empty() ? "" : ",") + name(v);
        return out;
    }

    const VarOrder& order_;
    std::map<std::string, int> depth_;
    std::map<std::string, std::vector<std::string>> display_;
};

class Parser {
public:
    Parser(std::string_view text, const VarSet& variables) : text_(text), variables_(variables) {}

    ExprPtr parse() {
        auto e = expr();
        skip();
        if (pos_ != text_.size()) error("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void error(const std::string& msg) const {
        throw ExprError("expression parse error at offset " + std::to_string(pos_) + ": " + msg);
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(std::string_view tok) {
        skip();
        return text_.substr(pos_, tok.size()) == tok;
    }

    bool accept(std::string_view tok) {
        if (!peek(tok)) return false;
        pos_ += tok.size();
        return true;
    }

    void expect(std::string_view tok) {
        if (!accept(tok)) error("expected '" + std::string(tok) + "'");
    }

    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
    }

    std::string raw_identifier() {
        skip();
        std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
        if (start == pos_) error("expected identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string variable() {
        auto tok = raw_identifier();
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(tok);
            if (found != it->end()) return found->second;
        }
        if (tok.find('\'') != std::string::npos) error("unbound variable '" + tok + "'");
        if (!variables_.empty() && !variables_.count(tok)) error("unknown variable '" + tok + "'");
        return tok;
    }

    VarSet var_list(std::string_view terminators) {
        VarSet out;
        do {
            out.insert(variable());
        } while (accept(","));
        skip();
        if (pos_ >= text_.size() || terminators.find(text_[pos_]) == std::string_view::npos)
            error("unterminated variable list");
        return out;
    }

    // Resolves a primed binder like m'' to the variable whose lowercase form is m.
    std::pair<std::string, std::string> binder() {
        auto tok = raw_identifier();
        auto stem = tok.substr(0, tok.find('\''));
        if (stem.size() == tok.size()) error("bound variable '" + tok + "' must carry a prime");
        std::string match;
        for (const auto& v : variables_) {
            if (lowercase(v) != stem) continue;
            if (!match.empty()) error("ambiguous bound variable '" + tok + "'");
            match = v;
        }
        if (match.empty()) error("bound variable '" + tok + "' matches no known variable");
        return {tok, match};
    }

    ExprPtr expr() {
        auto num = term();
        if (accept("/")) return make_quotient(num, term());
        return num;
    }

    ExprPtr term() {
        std::vector<ExprPtr> fs;
        for (;;) {
            skip();
            if (pos_ >= text_.size() || peek("]") || peek("}") || peek("/")) break;
            fs.push_back(factor());
        }
        if (fs.empty()) error("expected a factor");
        return make_product(std::move(fs));
    }

    ExprPtr factor() {
        if (accept("P(")) {
            auto over = var_list("|)");
            VarSet ctx;
            if (accept("|")) ctx = var_list(")");
            expect(")");
            return make_kernel(std::move(over), std::move(ctx));
        }
        if (accept("Q[")) {
            auto over = var_list("|]");
            VarSet ctx;
            if (accept("|")) ctx = var_list("]");
            expect("]");
            expect("{");
            auto src = expr();
            expect("}");
            return make_kernel_from(std::move(over), std::move(ctx), src);
        }
        if (accept("Normalize_{")) {
            auto t = variable();
            expect("}");
            expect("[");
            auto body = expr();
            expect("]");
            return make_normalize(t, body);
        }
        if (accept(kSigma + "_{") || accept("sum_{")) {
            std::map<std::string, std::string> scope;
            VarSet bound;
            do {
                auto [tok, var] = binder();
                scope[tok] = var;
                bound.insert(var);
            } while (accept(","));
            expect("}");
            scopes_.push_back(std::move(scope));
            auto body = expr();
            scopes_.pop_back();
            return make_marginal(std::move(bound), body);
        }
        if (accept("[")) {
            auto e = expr();
            expect("]");
            return e;
        }
        if (accept("1")) return one();
        error("expected a factor");
    }

    std::string_view text_;
    const VarSet& variables_;
    std::size_t pos_ = 0;
    std::vector<std::map<std::string, std::string>> scopes_;
};

}  // namespace

std::string to_text(const ExprPtr& e, const VarOrder& order) {
    Printer p(order);
    return p.print(e, Ctx::Top);
}

ExprPtr parse_text(std::string_view text, const VarSet& variables) {
    Parser p(text, variables);
    return p.parse();
}

}  // namespace gsurgery
