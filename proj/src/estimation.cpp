#include "gsurgery/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

namespace gsurgery {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kVarianceFloor = 1e-12;
constexpr std::size_t kMaxComponents = 1000000;

void collect_kernels(const ExprPtr& e, std::map<std::string, ExprPtr>& out) {
    switch (e->kind()) {
        case ExprKind::Kernel:
            if (e->observational())
                out.emplace(e->key(), e);
            else
                collect_kernels(e->source(), out);
            break;
        case ExprKind::Product:
            for (const auto& f : e->factors()) collect_kernels(f, out);
            break;
        case ExprKind::Quotient:
            collect_kernels(e->numerator(), out);
            collect_kernels(e->denominator(), out);
            break;
        case ExprKind::Marginal:
        case ExprKind::Normalize:
            collect_kernels(e->body(), out);
            break;
    }
}

VarSet all_variables(const std::map<std::string, ExprPtr>& kernels) {
    VarSet vars;
    for (const auto& [k, e] : kernels) vars.insert(e->free_vars().begin(), e->free_vars().end());
    return vars;
}

std::string kernel_label(const ExprPtr& k) { return to_text(k); }

Factor fit_table(const ExprPtr& k, const Dataset& data, const FitOptions& opt) {
    auto vars = k->free_vars();
    Cardinalities cards;
    for (const auto& v : vars) {
        if (!data.is_categorical(v))
            throw DataError("discrete kernel " + kernel_label(k) + " uses non-categorical column '" + v + "'");
        cards[v] = data.cardinality(v);
    }
    Factor counts(vars, cards);
    std::vector<const std::vector<double>*> cols;
    for (const auto& v : counts.vars()) cols.push_back(&data.column(v));
    for (std::size_t r = 0; r < data.rows(); ++r) {
        std::size_t idx = 0;
        for (std::size_t c = 0; c < cols.size(); ++c)
            idx = idx * static_cast<std::size_t>(counts.cards()[c]) + static_cast<std::size_t>((*cols[c])[r]);
        counts[idx] += data.weight(r);
    }
    auto raw_totals = sum_out(counts, k->over());
    for (std::size_t i = 0; i < raw_totals.size(); ++i) {
        if (raw_totals[i] > 0) continue;
        if (!opt.allow_empty_contexts)
            throw DataError("no data for context " + describe(raw_totals.assignment(i)) + " of " + kernel_label(k));
    }
    for (auto& c : counts.values()) c += opt.smoothing;
    auto totals = sum_out(counts, k->over());
    Factor table = counts;
    Factor expanded = multiply(Factor(counts.var_set(), cards, std::vector<double>(counts.size(), 1.0)), totals);
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (expanded[i] > 0) {
            table[i] = counts[i] / expanded[i];
        } else {
            // Empty context without smoothing: uniform over the outcome states.
            std::size_t states = 1;
            for (const auto& v : k->over()) states *= static_cast<std::size_t>(cards.at(v));
            table[i] = 1.0 / static_cast<double>(states);
        }
    }
    return table;
}

std::vector<LinearGaussianFactor> fit_chain(const ExprPtr& k, const Dataset& data) {
    std::vector<LinearGaussianFactor> chain;
    VarSet given = k->context();
    for (const auto& v : k->over()) {
        std::vector<std::string> regressors(given.begin(), given.end());
        chain.push_back(fit_linear_gaussian(data, v, regressors, kernel_label(k)));
        given.insert(v);
    }
    return chain;
}

// exp(c0 + c1 t - c2 t^2 / 2), a Gaussian-shaped function of the target.
struct LogQuad {
    double c0 = 0;
    double c1 = 0;
    double c2 = 0;

    LogQuad operator+(const LogQuad& o) const { return {c0 + o.c0, c1 + o.c1, c2 + o.c2}; }
    LogQuad operator-(const LogQuad& o) const { return {c0 - o.c0, c1 - o.c1, c2 - o.c2}; }
    bool constant() const { return c1 == 0 && c2 == 0; }

    double log_mass() const { return c0 + c1 * c1 / (2 * c2) + 0.5 * (kLog2Pi - std::log(c2)); }
};

using Mixture = std::vector<LogQuad>;

double log_sum_exp(const std::vector<double>& xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Collapses a mixture of constants into one component.
Mixture compact(Mixture m) {
    if (m.size() <= 1) return m;
    for (const auto& c : m)
        if (!c.constant()) return m;
    std::vector<double> logs;
    for (const auto& c : m) logs.push_back(c.c0);
    return {LogQuad{log_sum_exp(logs), 0, 0}};
}

class ContinuousEvaluator {
public:
    ContinuousEvaluator(const std::map<std::string, FittedKernel>& kernels, const std::string& target,
                        std::size_t samples, std::mt19937_64& rng)
        : kernels_(kernels), target_(target), samples_(samples), rng_(rng) {}

    Mixture eval(const ExprPtr& e, const std::map<std::string, double>& env) {
        switch (e->kind()) {
            case ExprKind::Kernel:
                if (!e->observational()) return eval(e->source(), env);
                return {kernel_term(e, env)};
            case ExprKind::Product: {
                Mixture acc{LogQuad{}};
                for (const auto& f : e->factors()) acc = cross(acc, eval(f, env));
                return acc;
            }
            case ExprKind::Quotient: {
                auto num = eval(e->numerator(), env);
                auto den = compact(eval(e->denominator(), env));
                if (den.size() != 1)
                    throw EvalError("continuous evaluation needs a single-component denominator in " + to_text(e));
                for (auto& c : num) c = c - den.front();
                return num;
            }
            case ExprKind::Marginal:
                return integrate(e, env);
            case ExprKind::Normalize: {
                if (e->target() != target_)
                    throw EvalError("cannot normalize over '" + e->target() + "' when predicting '" + target_ + "'");
                return normalized(eval(e->body(), env));
            }
        }
        return {};
    }

    Mixture normalized(Mixture m) {
        std::vector<double> logs;
        for (const auto& c : m) {
            if (!(c.c2 > 0)) throw EvalError("predictive density over '" + target_ + "' is not normalizable");
            logs.push_back(c.log_mass());
        }
        double total = log_sum_exp(logs);
        for (auto& c : m) c.c0 -= total;
        return m;
    }

private:
    LogQuad kernel_term(const ExprPtr& k, const std::map<std::string, double>& env) const {
        const auto& fk = kernels_.at(k->key());
        LogQuad out;
        for (const auto& f : fk.chain) {
            // residual = response - mean = r0 + slope * t
            double r0 = 0;
            double slope = 0;
            auto add = [&](const std::string& v, double weight) {
                if (env.count(v))
                    r0 += weight * env.at(v);
                else if (v == target_)
                    slope += weight;
                else
                    throw EvalError("no value for variable '" + v + "'");
            };
            add(f.response, 1.0);
            r0 -= f.intercept;
            for (std::size_t i = 0; i < f.regressors.size(); ++i) add(f.regressors[i], -f.coefficients[i]);
            double s2 = f.noise_variance;
            out = out + LogQuad{-0.5 * (kLog2Pi + std::log(s2)) - r0 * r0 / (2 * s2), -r0 * slope / s2,
                                slope * slope / s2};
        }
        return out;
    }

    Mixture cross(const Mixture& a, const Mixture& b) const {
        if (a.size() * b.size() > kMaxComponents)
            throw EvalError("continuous evaluation exceeds the mixture size limit");
        Mixture out;
        out.reserve(a.size() * b.size());
        for (const auto& x : a)
            for (const auto& y : b) out.push_back(x + y);
        return compact(std::move(out));
    }

    static void flatten(const ExprPtr& e, std::vector<ExprPtr>& num, std::vector<ExprPtr>& den, bool invert) {
        if (e->kind() == ExprKind::Product) {
            for (const auto& f : e->factors()) flatten(f, num, den, invert);
        } else if (e->kind() == ExprKind::Quotient) {
            flatten(e->numerator(), num, den, invert);
            flatten(e->denominator(), num, den, !invert);
        } else {
            (invert ? den : num).push_back(e);
        }
    }

    // Monte Carlo over the bound variables: draw them from the kernels whose
    // outcomes they are, then average the rest of the integrand.
    Mixture integrate(const ExprPtr& e, const std::map<std::string, double>& env) {
        std::vector<ExprPtr> num, den;
        flatten(e->body(), num, den, false);
        VarSet remaining = e->sum_out();
        VarSet known;
        for (const auto& [v, x] : env) known.insert(v);
        known.erase(target_);
        std::vector<ExprPtr> plan;
        while (!remaining.empty()) {
            auto it = std::find_if(num.begin(), num.end(), [&](const ExprPtr& k) {
                return k->observational() && is_subset(k->over(), remaining) && is_subset(k->context(), known);
            });
            if (it == num.end())
                throw EvalError("cannot integrate out {" + join(remaining) + "}: no factor to sample them from");
            plan.push_back(*it);
            for (const auto& v : (*it)->over()) {
                remaining.erase(v);
                known.insert(v);
            }
            num.erase(it);
        }
        if (auto fast = integrate_flat(plan, num, den, env)) return *fast;

        ExprPtr rest = num.empty() ? one() : make_product(num);
        if (!den.empty()) rest = make_quotient(rest, make_product(den));

        std::vector<const LinearGaussianFactor*> draws = chain_of(plan);
        std::normal_distribution<double> normal(0.0, 1.0);
        Mixture out;
        out.reserve(samples_);
        const double log_n = std::log(static_cast<double>(samples_));
        // every draw overwrites the same sampled variables, so one copy suffices
        auto local = env;
        for (std::size_t s = 0; s < samples_; ++s) {
            for (const auto* f : draws) local[f->response] = f->mean(local) + std::sqrt(f->noise_variance) * normal(rng_);
            for (auto c : eval(rest, local)) {
                c.c0 -= log_n;
                out.push_back(c);
            }
            if (out.size() > kMaxComponents) throw EvalError("continuous evaluation exceeds the mixture size limit");
        }
        return compact(std::move(out));
    }

    std::vector<const LinearGaussianFactor*> chain_of(const std::vector<ExprPtr>& kernels) const {
        std::vector<const LinearGaussianFactor*> out;
        for (const auto& k : kernels)
            for (const auto& f : kernels_.at(k->key()).chain) out.push_back(&f);
        return out;
    }

    // A regression with its variables resolved to slots of a value array.
    struct SlotFactor {
        std::size_t response = 0;
        double intercept = 0;
        std::vector<std::pair<std::size_t, double>> terms;
        double noise_variance = 1;
        double sign = 1;
    };

    // The same integral when the integrand is a flat product and quotient of
    // observational kernels, with variables in an array instead of a map.
    // Draw order matches the general path.
    std::optional<Mixture> integrate_flat(const std::vector<ExprPtr>& plan, const std::vector<ExprPtr>& num,
                                          const std::vector<ExprPtr>& den, const std::map<std::string, double>& env) {
        auto plain = [](const ExprPtr& k) { return k->kind() == ExprKind::Kernel && k->observational(); };
        if (!std::all_of(num.begin(), num.end(), plain) || !std::all_of(den.begin(), den.end(), plain))
            return std::nullopt;

        std::map<std::string, std::size_t> slot_of;
        std::vector<double> values;
        const std::size_t target_slot = 0;
        slot_of[target_] = target_slot;
        values.push_back(0);
        for (const auto& [v, x] : env) {
            slot_of[v] = values.size();
            values.push_back(x);
        }
        auto draws = chain_of(plan);
        auto slot = [&](const std::string& v, bool define) {
            auto it = slot_of.find(v);
            if (it != slot_of.end()) return it->second;
            if (!define) throw EvalError("no value for variable '" + v + "'");
            slot_of[v] = values.size();
            values.push_back(0);
            return values.size() - 1;
        };
        auto resolve = [&](const LinearGaussianFactor& f, double sign, bool define) {
            SlotFactor out;
            for (std::size_t i = 0; i < f.regressors.size(); ++i)
                out.terms.emplace_back(slot(f.regressors[i], false), f.coefficients[i]);
            out.response = slot(f.response, define);
            out.intercept = f.intercept;
            out.noise_variance = f.noise_variance;
            out.sign = sign;
            return out;
        };
        std::vector<SlotFactor> sampled, scored;
        for (const auto* f : draws) sampled.push_back(resolve(*f, 1, true));
        for (const auto* f : chain_of(num)) scored.push_back(resolve(*f, 1, false));
        for (const auto* f : chain_of(den)) scored.push_back(resolve(*f, -1, false));

        // constant and target-slope parts of each scored residual
        LogQuad fixed;
        for (const auto& f : scored) fixed.c0 -= f.sign * 0.5 * (kLog2Pi + std::log(f.noise_variance));

        if (samples_ > kMaxComponents) throw EvalError("continuous evaluation exceeds the mixture size limit");
        std::normal_distribution<double> normal(0.0, 1.0);
        Mixture out;
        out.reserve(samples_);
        const double log_n = std::log(static_cast<double>(samples_));
        for (std::size_t s = 0; s < samples_; ++s) {
            for (const auto& f : sampled) {
                double mean = f.intercept;
                for (const auto& [i, c] : f.terms) mean += c * values[i];
                values[f.response] = mean + std::sqrt(f.noise_variance) * normal(rng_);
            }
            LogQuad c = fixed;
            for (const auto& f : scored) {
                // residual = response - mean = r0 + slope * t
                double r0 = -f.intercept;
                double slope = 0;
                auto add = [&](std::size_t i, double weight) {
                    if (i == target_slot)
                        slope += weight;
                    else
                        r0 += weight * values[i];
                };
                add(f.response, 1.0);
                for (const auto& [i, coef] : f.terms) add(i, -coef);
                c.c0 -= f.sign * r0 * r0 / (2 * f.noise_variance);
                c.c1 -= f.sign * r0 * slope / f.noise_variance;
                c.c2 += f.sign * slope * slope / f.noise_variance;
            }
            c.c0 -= log_n;
            out.push_back(c);
        }
        return compact(std::move(out));
    }

    const std::map<std::string, FittedKernel>& kernels_;
    std::string target_;
    std::size_t samples_;
    std::mt19937_64& rng_;
};

nlohmann::json regression_json(const LinearGaussianFactor& f) {
    return {{"response", f.response},         {"regressors", f.regressors},
            {"coefficients", f.coefficients}, {"intercept", f.intercept},
            {"noise_variance", f.noise_variance}, {"standard_errors", f.standard_errors}};
}

LinearGaussianFactor regression_from_json(const nlohmann::json& j) {
    LinearGaussianFactor f;
    f.response = j.at("response").get<std::string>();
    f.regressors = j.at("regressors").get<std::vector<std::string>>();
    f.coefficients = j.at("coefficients").get<std::vector<double>>();
    f.intercept = j.at("intercept").get<double>();
    f.noise_variance = j.at("noise_variance").get<double>();
    if (j.contains("standard_errors")) f.standard_errors = j.at("standard_errors").get<std::vector<double>>();
    if (f.coefficients.size() != f.regressors.size()) throw DataError("regression coefficient count mismatch");
    return f;
}

}  // namespace

double LinearGaussianFactor::mean(const std::map<std::string, double>& values) const {
    double m = intercept;
    for (std::size_t i = 0; i < regressors.size(); ++i) {
        auto it = values.find(regressors[i]);
        if (it == values.end()) throw EvalError("no value for regressor '" + regressors[i] + "'");
        m += coefficients[i] * it->second;
    }
    return m;
}

LinearGaussianFactor fit_linear_gaussian(const Dataset& data, const std::string& response,
                                         const std::vector<std::string>& regressors, const std::string& label) {
    const auto n = data.rows();
    const auto p = regressors.size() + 1;
    if (n <= p)
        throw DataError("not enough rows to fit " + label + ": " + std::to_string(n) + " rows for " +
                        std::to_string(p) + " parameters");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    const auto& ycol = data.column(response);
    std::vector<const std::vector<double>*> cols;
    for (const auto& r : regressors) cols.push_back(&data.column(r));
    double total_weight = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = data.weight(i);
        total_weight += w;
        double sw = std::sqrt(w);
        auto row = static_cast<Eigen::Index>(i);
        x(row, 0) = sw;
        for (std::size_t c = 0; c < cols.size(); ++c) x(row, static_cast<Eigen::Index>(c + 1)) = sw * (*cols[c])[i];
        y(row) = sw * ycol[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (static_cast<std::size_t>(qr.rank()) < p) {
        std::string names;
        for (const auto& r : regressors) names += (names.empty() ? "" : ",") + r;
        throw DataError("rank-deficient regressors {" + names + "} for '" + response + "' in " + label);
    }
    Eigen::VectorXd beta = qr.solve(y);
    double rss = (y - x * beta).squaredNorm();
    double dof = static_cast<double>(n - p);
    double sigma2 = std::max(rss / total_weight * static_cast<double>(n) / dof, kVarianceFloor);

    LinearGaussianFactor f;
    f.response = response;
    f.regressors = regressors;
    f.intercept = beta(0);
    for (std::size_t c = 0; c < regressors.size(); ++c) f.coefficients.push_back(beta(static_cast<Eigen::Index>(c + 1)));
    f.noise_variance = sigma2;
    Eigen::MatrixXd info = x.transpose() * x;
    Eigen::MatrixXd cov = info.inverse() * sigma2;
    for (std::size_t c = 0; c < p; ++c) {
        auto k = static_cast<Eigen::Index>(c);
        f.standard_errors.push_back(std::sqrt(cov(k, k)));
    }
    return f;
}

Predictor fit(const ExprPtr& expr, const std::string& target, const Dataset& data, const FitOptions& options) {
    if (!expr->free_vars().count(target))
        throw DataError("expression does not depend on the target '" + target + "'");
    std::map<std::string, ExprPtr> kernels;
    collect_kernels(expr, kernels);
    auto vars = all_variables(kernels);
    vars.insert(target);
    data.require_columns(vars);

    Predictor p;
    p.expr_ = expr;
    p.target_ = target;
    p.discrete_ = data.is_categorical(target);
    p.mc_samples_ = options.mc_samples;
    p.seed_ = options.seed;
    if (p.mc_samples_ == 0) throw DataError("Monte Carlo sample count must be positive");
    for (const auto& [key, k] : kernels) {
        FittedKernel fk;
        fk.over = k->over();
        fk.context = k->context();
        if (p.discrete_)
            fk.table = fit_table(k, data, options);
        else
            fk.chain = fit_chain(k, data);
        p.kernels_.emplace(key, std::move(fk));
    }
    if (p.discrete_) {
        for (const auto& v : vars) p.cards_[v] = data.cardinality(v);
    }
    p.prepare();
    return p;
}

void Predictor::prepare() {
    if (!discrete_) return;
    table_ = evaluate(expr_, [&](const VarSet& over, const VarSet& ctx) {
        auto key = make_kernel(over, ctx)->key();
        return kernels_.at(key).table;
    });
    if (!table_.has_var(target_)) throw EvalError("evaluated expression lost the target '" + target_ + "'");
}

void Predictor::set_monte_carlo(std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw DataError("Monte Carlo sample count must be positive");
    mc_samples_ = samples;
    seed_ = seed;
}

VarSet Predictor::features() const { return set_difference(expr_->free_vars(), {target_}); }

Prediction Predictor::predict(const std::map<std::string, double>& row, std::uint64_t row_index) const {
    Prediction out;
    if (discrete_) {
        Assignment evidence;
        for (const auto& v : features()) {
            auto it = row.find(v);
            if (it == row.end()) throw DataError("row has no value for '" + v + "'");
            evidence[v] = static_cast<int>(it->second);
        }
        auto slice = restrict(table_, evidence);
        double total = 0;
        for (double x : slice.values()) total += x;
        if (!(total > 0) || std::isnan(total))
            throw EvalError("prediction undefined at " + describe(evidence) + ": context has probability zero");
        for (std::size_t i = 0; i < slice.size(); ++i) {
            double pr = slice[i] / total;
            out.probabilities.push_back(pr);
            out.mean += pr * static_cast<double>(i);
        }
        for (std::size_t i = 0; i < slice.size(); ++i) {
            double d = static_cast<double>(i) - out.mean;
            out.variance += out.probabilities[i] * d * d;
        }
        return out;
    }

    std::map<std::string, double> env;
    for (const auto& v : features()) {
        auto it = row.find(v);
        if (it == row.end()) throw DataError("row has no value for '" + v + "'");
        env[v] = it->second;
    }
    std::mt19937_64 rng(seed_ ^ row_index);
    ContinuousEvaluator ev(kernels_, target_, mc_samples_, rng);
    auto mix = ev.normalized(ev.eval(expr_, env));
    double second = 0;
    for (const auto& c : mix) {
        double w = std::exp(c.log_mass());
        double m = c.c1 / c.c2;
        out.mean += w * m;
        second += w * (1.0 / c.c2 + m * m);
    }
    out.variance = std::max(second - out.mean * out.mean, 0.0);
    return out;
}

std::vector<Prediction> Predictor::predict(const Dataset& data) const {
    std::vector<Prediction> out;
    out.reserve(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) out.push_back(predict(data.row(i), i));
    return out;
}

nlohmann::json Predictor::to_json() const {
    nlohmann::json j;
    j["expression"] = gsurgery::to_json(expr_);
    j["target"] = target_;
    j["mode"] = discrete_ ? "discrete" : "continuous";
    j["mc_samples"] = mc_samples_;
    j["seed"] = seed_;
    j["cardinalities"] = cards_;
    j["factors"] = nlohmann::json::array();
    for (const auto& [key, fk] : kernels_) {
        nlohmann::json f;
        f["over"] = std::vector<std::string>(fk.over.begin(), fk.over.end());
        f["context"] = std::vector<std::string>(fk.context.begin(), fk.context.end());
        if (discrete_) {
            f["kind"] = "table";
            f["variables"] = fk.table.vars();
            f["values"] = fk.table.values();
        } else {
            f["kind"] = "linear_gaussian";
            f["chain"] = nlohmann::json::array();
            for (const auto& r : fk.chain) f["chain"].push_back(regression_json(r));
        }
        j["factors"].push_back(f);
    }
    return j;
}

Predictor Predictor::from_json(const nlohmann::json& j) {
    try {
        Predictor p;
        p.expr_ = gsurgery::from_json(j.at("expression"));
        p.target_ = j.at("target").get<std::string>();
        auto mode = j.at("mode").get<std::string>();
        if (mode != "discrete" && mode != "continuous") throw DataError("unknown predictor mode '" + mode + "'");
        p.discrete_ = mode == "discrete";
        p.mc_samples_ = j.at("mc_samples").get<std::size_t>();
        p.seed_ = j.at("seed").get<std::uint64_t>();
        p.cards_ = j.at("cardinalities").get<std::map<std::string, int>>();
        for (const auto& f : j.at("factors")) {
            FittedKernel fk;
            for (const auto& v : f.at("over")) fk.over.insert(v.get<std::string>());
            for (const auto& v : f.at("context")) fk.context.insert(v.get<std::string>());
            if (p.discrete_) {
                fk.table = Factor(set_union(fk.over, fk.context), p.cards_, f.at("values").get<std::vector<double>>());
            } else {
                for (const auto& r : f.at("chain")) fk.chain.push_back(regression_from_json(r));
            }
            p.kernels_.emplace(make_kernel(fk.over, fk.context)->key(), std::move(fk));
        }
        std::map<std::string, ExprPtr> needed;
        collect_kernels(p.expr_, needed);
        for (const auto& [key, k] : needed)
            if (!p.kernels_.count(key)) throw DataError("predictor JSON lacks parameters for " + to_text(k));
        p.prepare();
        return p;
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed predictor JSON: ") + ex.what());
    }
}

double validation_loss(const Predictor& p, const Dataset& data) {
    if (data.rows() == 0) throw DataError("validation data is empty");
    const auto& truth = data.column(p.target());
    double total = 0;
    double weight = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        auto pred = p.predict(data.row(i), i);
        double w = data.weight(i);
        if (p.discrete()) {
            auto state = static_cast<std::size_t>(truth[i]);
            double pr = state < pred.probabilities.size() ? pred.probabilities[state] : 0.0;
            total += w * -std::log(std::max(pr, std::numeric_limits<double>::min()));
        } else {
            double d = pred.mean - truth[i];
            total += w * d * d;
        }
        weight += w;
    }
    return total / weight;
}

OlsModel fit_ols(const Dataset& data, const std::string& target, const std::vector<std::string>& features) {
    return {target, fit_linear_gaussian(data, target, features, "OLS for '" + target + "'")};
}

std::vector<double> predict_ols(const OlsModel& model, const Dataset& data) {
    std::vector<double> out;
    out.reserve(data.rows());
    std::vector<const std::vector<double>*> cols;
    for (const auto& r : model.regression.regressors) cols.push_back(&data.column(r));
    for (std::size_t i = 0; i < data.rows(); ++i) {
        double m = model.regression.intercept;
        for (std::size_t c = 0; c < cols.size(); ++c) m += model.regression.coefficients[c] * (*cols[c])[i];
        out.push_back(m);
    }
    return out;
}

double mse(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("mse: length mismatch");
    if (pred.empty()) throw std::invalid_argument("mse: empty input");
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - truth[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

}  // namespace gsurgery
