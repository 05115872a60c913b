#include "gsurgery/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gsurgery/estimation.hpp"
#include "gsurgery/surgery.hpp"

namespace gsurgery {

namespace {

constexpr std::size_t kMaxJointStates = std::size_t{1} << 20;

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

DiagnosisWeights draw_weights(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    DiagnosisWeights w;
    w.w1 = normal(rng);
    w.w2 = normal(rng);
    w.w3 = normal(rng);
    w.w4 = normal(rng);
    return w;
}

}  // namespace

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Linear-Gaussian models

void LinearGaussianSem::add(const std::string& variable, double intercept, std::map<std::string, double> coefficients,
                            double noise_variance) {
    if (variable.empty()) throw SimulationError("variable name is empty");
    for (const auto& e : equations_)
        if (e.variable == variable) throw SimulationError("variable '" + variable + "' defined twice");
    for (const auto& [p, c] : coefficients) {
        bool known = std::any_of(equations_.begin(), equations_.end(), [&](const auto& e) { return e.variable == p; });
        if (!known) throw SimulationError("parent '" + p + "' of '" + variable + "' is not defined yet");
    }
    if (!(noise_variance >= 0)) throw SimulationError("noise variance of '" + variable + "' must be non-negative");
    equations_.push_back({variable, intercept, std::move(coefficients), noise_variance});
}

const LinearEquation& LinearGaussianSem::equation(const std::string& v) const {
    for (const auto& e : equations_)
        if (e.variable == v) return e;
    throw SimulationError("no equation for '" + v + "'");
}

LinearEquation& LinearGaussianSem::equation(const std::string& v) {
    return const_cast<LinearEquation&>(static_cast<const LinearGaussianSem&>(*this).equation(v));
}

std::vector<std::string> LinearGaussianSem::variables() const {
    std::vector<std::string> out;
    for (const auto& e : equations_) out.push_back(e.variable);
    return out;
}

Dataset LinearGaussianSem::sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw SimulationError("sample size must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> cols(equations_.size(), std::vector<double>(n));
    std::vector<std::vector<std::pair<std::size_t, double>>> parents(equations_.size());
    for (std::size_t i = 0; i < equations_.size(); ++i) {
        for (const auto& [p, c] : equations_[i].coefficients) {
            for (std::size_t j = 0; j < i; ++j)
                if (equations_[j].variable == p) parents[i].emplace_back(j, c);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < equations_.size(); ++i) {
            double v = equations_[i].intercept;
            for (const auto& [j, c] : parents[i]) v += c * cols[j][r];
            v += std::sqrt(equations_[i].noise_variance) * normal(rng);
            cols[i][r] = v;
        }
    }
    Dataset d;
    for (std::size_t i = 0; i < equations_.size(); ++i) d.add_column(equations_[i].variable, std::move(cols[i]));
    return d;
}

double CoefficientHandle::get(const LinearGaussianSem& sem) const {
    const auto& e = sem.equation(variable);
    if (!parent) return e.intercept;
    auto it = e.coefficients.find(*parent);
    if (it == e.coefficients.end()) throw SimulationError("'" + variable + "' has no coefficient on '" + *parent + "'");
    return it->second;
}

void CoefficientHandle::set(LinearGaussianSem& sem, double value) const {
    auto& e = sem.equation(variable);
    if (!parent) {
        e.intercept = value;
        return;
    }
    auto it = e.coefficients.find(*parent);
    if (it == e.coefficients.end()) throw SimulationError("'" + variable + "' has no coefficient on '" + *parent + "'");
    it->second = value;
}

LinearGaussianSem diagnosis_sem(const DiagnosisWeights& w, double sigma, AMechanism mechanism) {
    const double s2 = sigma * sigma;
    LinearGaussianSem sem;
    sem.add("K", 0, {}, s2);
    sem.add("T", 0, {{"K", w.w1}}, s2);
    if (mechanism == AMechanism::KCoefficient)
        sem.add("A", 0, {{"K", w.w2}}, s2);
    else
        sem.add("A", w.w2, {}, s2);
    sem.add("C", 0, {{"T", w.w3}, {"A", w.w4}}, s2);
    return sem;
}

CoefficientHandle diagnosis_a_handle(AMechanism mechanism) {
    if (mechanism == AMechanism::KCoefficient) return {"A", std::string("K")};
    return {"A", std::nullopt};
}

CoefficientHandle diagnosis_t_handle() { return {"T", std::string("K")}; }

LinearGaussianSem LinearEnvironmentFamily::member(double value) const {
    auto sem = base;
    handle.set(sem, value);
    return sem;
}

// ---------------------------------------------------------------------------
// Discrete models

DiscreteSem::DiscreteSem(CausalDag dag, Cardinalities cards) : dag_(std::move(dag)), cards_(std::move(cards)) {
    for (const auto& v : dag_.topological_order()) {
        if (dag_.kind(v) == VertexKind::Selection) continue;
        vars_.push_back(v);
        auto [it, inserted] = cards_.emplace(v, 2);
        if (!inserted && it->second < 1) throw SimulationError("variable '" + v + "' has no states");
    }
    for (const auto& v : vars_) {
        auto scope = parents(v);
        scope.insert(v);
        Factor f(scope, cards_);
        std::fill(f.values().begin(), f.values().end(), 1.0 / cards_.at(v));
        cpts_.emplace(v, std::move(f));
    }
}

VarSet DiscreteSem::observed() const { return dag_.vertices_of_kind(VertexKind::Observed); }

VarSet DiscreteSem::parents(const std::string& v) const {
    VarSet out;
    for (const auto& p : dag_.parents(v))
        if (dag_.kind(p) != VertexKind::Selection) out.insert(p);
    return out;
}

void DiscreteSem::set_cpt(const std::string& v, Factor cpt) {
    auto it = cpts_.find(v);
    if (it == cpts_.end()) throw SimulationError("no variable '" + v + "'");
    if (cpt.var_set() != it->second.var_set() || cpt.cards() != it->second.cards())
        throw SimulationError("CPT of '" + v + "' must be a table over the vertex and its parents");
    auto totals = sum_out(cpt, {v});
    for (double t : totals.values())
        if (std::abs(t - 1.0) > 1e-9) throw SimulationError("CPT of '" + v + "' is not normalized");
    it->second = std::move(cpt);
}

const Factor& DiscreteSem::cpt(const std::string& v) const {
    auto it = cpts_.find(v);
    if (it == cpts_.end()) throw SimulationError("no variable '" + v + "'");
    return it->second;
}

void DiscreteSem::randomize(std::mt19937_64& rng, double lo) {
    for (const auto& v : vars_) randomize_vertex(v, rng, lo);
}

void DiscreteSem::randomize_vertex(const std::string& v, std::mt19937_64& rng, double lo) {
    std::uniform_real_distribution<double> u(lo, 1.0);
    Factor f = cpt(v);
    for (auto& x : f.values()) x = u(rng);
    cpts_.at(v) = normalize_over(f, v);
}

void DiscreteSem::check_size(const VarSet& vars) const {
    std::size_t states = 1;
    for (const auto& v : vars) {
        states *= static_cast<std::size_t>(cards_.at(v));
        if (states > kMaxJointStates)
            throw SimulationError("joint state space exceeds " + std::to_string(kMaxJointStates) + " states");
    }
}

Factor DiscreteSem::joint() const {
    check_size(VarSet(vars_.begin(), vars_.end()));
    Factor out;
    for (const auto& v : vars_) out = multiply(out, cpts_.at(v));
    return out;
}

Factor DiscreteSem::observational_joint() const { return marginalize_to(joint(), observed()); }

Dataset DiscreteSem::sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw SimulationError("sample size must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::map<std::string, std::vector<double>> cols;
    Assignment a;
    for (std::size_t r = 0; r < n; ++r) {
        for (const auto& v : vars_) {
            const auto& f = cpts_.at(v);
            double draw = u(rng);
            int state = cards_.at(v) - 1;
            double acc = 0;
            for (int s = 0; s < cards_.at(v); ++s) {
                a[v] = s;
                acc += f.at(a);
                if (draw < acc) {
                    state = s;
                    break;
                }
            }
            a[v] = state;
            cols[v].push_back(state);
        }
    }
    Dataset d;
    for (const auto& v : dag_.order()) {
        if (dag_.kind(v) != VertexKind::Observed) continue;
        d.add_column(v, std::move(cols[v]));
        d.set_categorical(v, cards_.at(v));
    }
    return d;
}

Factor oracle_interventional(const DiscreteSem& sem, const Assignment& x, const VarSet& outcome) {
    const auto& vars = sem.variables();
    VarSet all(vars.begin(), vars.end());
    for (const auto& [v, s] : x) {
        if (!all.count(v)) throw SimulationError("cannot intervene on unknown variable '" + v + "'");
        if (s < 0 || s >= sem.cardinalities().at(v)) throw SimulationError("state out of range for '" + v + "'");
        if (outcome.count(v)) throw SimulationError("outcome and intervention overlap on '" + v + "'");
    }
    for (const auto& v : outcome)
        if (!all.count(v)) throw SimulationError("unknown outcome variable '" + v + "'");
    Factor out;
    for (const auto& v : vars) {
        if (x.count(v)) continue;
        out = multiply(out, restrict(sem.cpt(v), x));
    }
    return marginalize_to(out, outcome);
}

Factor oracle_interventional_table(const DiscreteSem& sem, const VarSet& x, const VarSet& outcome) {
    Factor table(set_union(x, outcome), sem.cardinalities());
    Factor settings(x, sem.cardinalities());
    for (std::size_t i = 0; i < settings.size(); ++i) {
        auto xa = settings.assignment(i);
        auto slice = oracle_interventional(sem, xa, outcome);
        for (std::size_t j = 0; j < slice.size(); ++j) {
            auto full = slice.assignment(j);
            full.insert(xa.begin(), xa.end());
            table.at(full) = slice[j];
        }
    }
    return table;
}

DiscreteSem DiscreteEnvironmentFamily::member(std::uint64_t seed) const {
    DiscreteSem sem = base;
    auto rng = derived_rng(seed, 0);
    for (const auto& v : mutable_vertices) sem.randomize_vertex(v, rng);
    return sem;
}

RandomModel random_model(std::mt19937_64& rng, const RandomGraphOptions& options) {
    if (options.min_observed < 1 || options.max_observed < options.min_observed || options.max_observed > 26)
        throw SimulationError("invalid observed-vertex range");
    std::uniform_int_distribution<std::size_t> count(options.min_observed, options.max_observed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const std::size_t n = count(rng);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.emplace_back(1, static_cast<char>('A' + i));
    std::vector<std::string> order = names;
    std::shuffle(order.begin(), order.end(), rng);

    RandomModel m;
    for (const auto& v : names) m.dag.add_vertex(v, VertexKind::Observed);
    std::set<std::pair<std::string, std::string>> directed;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng) < options.edge_probability) directed.emplace(order[i], order[j]);
    std::vector<std::pair<std::string, std::string>> bidirected;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = names[i];
            const auto& b = names[j];
            if (directed.count({a, b}) || directed.count({b, a})) continue;
            if (coin(rng) < options.bidirected_probability && bidirected.size() < options.max_bidirected)
                bidirected.emplace_back(a, b);
        }
    }
    for (std::size_t k = 0; k < bidirected.size(); ++k) {
        auto u = "U" + std::to_string(k + 1);
        m.dag.add_vertex(u, VertexKind::Unobserved);
        m.dag.add_edge(u, bidirected[k].first);
        m.dag.add_edge(u, bidirected[k].second);
    }
    for (const auto& [a, b] : directed) m.dag.add_edge(a, b);
    std::uniform_int_distribution<std::size_t> nsel(0, std::min(options.max_selection, n));
    auto targets = names;
    std::shuffle(targets.begin(), targets.end(), rng);
    const auto k = nsel(rng);
    for (std::size_t i = 0; i < k; ++i) {
        auto s = "S" + std::to_string(i + 1);
        m.dag.add_vertex(s, VertexKind::Selection);
        m.dag.add_edge(s, targets[i]);
    }
    m.graph = latent_project(m.dag);
    return m;
}

// ---------------------------------------------------------------------------
// Experiments

std::string to_string(Scenario s) { return s == Scenario::MutableA ? "mutable-A" : "target-shift"; }

Scenario parse_scenario(const std::string& s) {
    if (s == "mutable-A") return Scenario::MutableA;
    if (s == "target-shift") return Scenario::TargetShift;
    throw SimulationError("unknown scenario '" + s + "' (expected mutable-A or target-shift)");
}

void apply_experiment_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto as_size = [&]() {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw SimulationError("setting '" + key + "' needs a non-negative integer, got '" + value + "'");
        return v;
    };
    auto as_real = [&]() {
        double v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw SimulationError("setting '" + key + "' needs a number, got '" + value + "'");
        return v;
    };
    if (key == "scenario")
        cfg.scenario = parse_scenario(value);
    else if (key == "n_per_env")
        cfg.n_per_env = as_size();
    else if (key == "n_source_envs")
        cfg.n_source_envs = as_size();
    else if (key == "grid_points")
        cfg.grid_points = as_size();
    else if (key == "grid_min")
        cfg.grid_min = as_real();
    else if (key == "grid_max")
        cfg.grid_max = as_real();
    else if (key == "n_reps")
        cfg.n_reps = as_size();
    else if (key == "seed")
        cfg.seed = as_size();
    else if (key == "sigma")
        cfg.sigma = as_real();
    else if (key == "train_fraction")
        cfg.train_fraction = as_real();
    else if (key == "a_mechanism") {
        if (value == "k-coefficient")
            cfg.a_mechanism = AMechanism::KCoefficient;
        else if (value == "intercept")
            cfg.a_mechanism = AMechanism::Intercept;
        else
            throw SimulationError("a_mechanism must be k-coefficient or intercept");
    } else
        throw SimulationError("unknown experiment setting '" + key + "'");
}

Admg scenario_graph(Scenario s) {
    Admg g;
    g.add_observed("T");
    g.add_observed("A");
    g.add_observed("C");
    g.add_bidirected("T", "A");
    g.add_directed("T", "C");
    g.add_directed("A", "C");
    g.add_selection("S");
    g.add_selection_edge("S", s == Scenario::MutableA ? "A" : "T");
    return g;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.n_per_env < 10) throw SimulationError("n_per_env must be at least 10");
    if (cfg.n_source_envs < 1) throw SimulationError("n_source_envs must be at least 1");
    if (cfg.grid_points < 1) throw SimulationError("grid_points must be at least 1");
    if (!(cfg.sigma > 0)) throw SimulationError("sigma must be positive");
    if (!(cfg.train_fraction > 0 && cfg.train_fraction < 1)) throw SimulationError("train_fraction must be in (0, 1)");
    const bool mutable_a = cfg.scenario == Scenario::MutableA;
    const double lo = cfg.grid_min.value_or(mutable_a ? -100.0 : -10.0);
    const double hi = cfg.grid_max.value_or(mutable_a ? 100.0 : 10.0);
    std::vector<double> grid;
    for (std::size_t i = 0; i < cfg.grid_points; ++i)
        grid.push_back(cfg.grid_points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (cfg.grid_points - 1));

    const Admg g = scenario_graph(cfg.scenario);
    const VarSet mutable_vars = mutable_set(g);
    const std::vector<std::string> observed{"T", "A", "C"};
    const CoefficientHandle handle = mutable_a ? diagnosis_a_handle(cfg.a_mechanism) : diagnosis_t_handle();

    std::vector<ExperimentRow> rows;
    for (std::size_t rep = 0; rep < cfg.n_reps; ++rep) {
        auto rng = derived_rng(cfg.seed, rep);
        std::normal_distribution<double> normal(0.0, 1.0);
        LinearEnvironmentFamily family{diagnosis_sem(draw_weights(rng), cfg.sigma, cfg.a_mechanism), handle};

        // Surgery sees only the first source environment; OLS pools all of them.
        Dataset source = family.base.sample(cfg.n_per_env, rng()).select_columns(observed);
        Dataset pooled = source;
        for (std::size_t e = 1; e < cfg.n_source_envs; ++e) {
            double value = normal(rng);
            pooled.append(family.member(value).sample(cfg.n_per_env, rng()).select_columns(observed));
        }

        auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(source.rows())));
        n_train = std::clamp<std::size_t>(n_train, 1, source.rows() - 1);
        std::vector<std::size_t> train_idx(n_train), valid_idx(source.rows() - n_train);
        for (std::size_t i = 0; i < n_train; ++i) train_idx[i] = i;
        for (std::size_t i = n_train; i < source.rows(); ++i) valid_idx[i - n_train] = i;

        SurgeryOptions opts;
        opts.fit.seed = rng();
        auto surgery = surgery_search(g, mutable_vars, "T", source.select_rows(train_idx), source.select_rows(valid_idx), opts);
        if (!surgery.success()) throw SimulationError("surgery search failed: " + surgery.failure);
        const auto& predictor = surgery.best().predictor;
        auto ols = fit_ols(pooled, "T", {"A", "C"});

        for (double value : grid) {
            Dataset test = family.member(value).sample(cfg.n_per_env, rng()).select_columns(observed);
            const auto& truth = test.column("T");
            std::vector<double> surgery_pred;
            for (const auto& p : predictor.predict(test)) surgery_pred.push_back(p.mean);
            rows.push_back({rep, value, "surgery", mse(surgery_pred, truth)});
            rows.push_back({rep, value, "ols", mse(predict_ols(ols, test), truth)});
        }
    }
    return rows;
}

Dataset scenario_sample(const ExperimentConfig& cfg, std::size_t n, std::optional<double> env_value,
                        std::uint64_t stream) {
    if (n == 0) throw SimulationError("sample size must be positive");
    if (!(cfg.sigma > 0)) throw SimulationError("sigma must be positive");
    auto rng = derived_rng(cfg.seed, 0);
    LinearEnvironmentFamily family{diagnosis_sem(draw_weights(rng), cfg.sigma, cfg.a_mechanism),
                                   cfg.scenario == Scenario::MutableA ? diagnosis_a_handle(cfg.a_mechanism)
                                                                      : diagnosis_t_handle()};
    auto sem = env_value ? family.member(*env_value) : family.base;
    return sem.sample(n, derived_rng(cfg.seed, stream + 1)()).select_columns({"T", "A", "C"});
}

std::string format_results_csv(const std::vector<ExperimentRow>& rows) {
    std::string out = "rep,env_value,method,mse\n";
    for (const auto& r : rows)
        out += std::to_string(r.rep) + "," + format_number(r.env_value) + "," + r.method + "," + format_number(r.mse) + "\n";
    return out;
}

std::vector<std::pair<double, double>> mean_curve(const std::vector<ExperimentRow>& rows, const std::string& method) {
    std::vector<std::pair<double, double>> sums;
    std::vector<std::size_t> counts;
    for (const auto& r : rows) {
        if (r.method != method) continue;
        auto it = std::find_if(sums.begin(), sums.end(), [&](const auto& p) { return p.first == r.env_value; });
        if (it == sums.end()) {
            sums.emplace_back(r.env_value, r.mse);
            counts.push_back(1);
        } else {
            it->second += r.mse;
            ++counts[static_cast<std::size_t>(it - sums.begin())];
        }
    }
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i].second /= static_cast<double>(counts[i]);
    return sums;
}

}  // namespace gsurgery
