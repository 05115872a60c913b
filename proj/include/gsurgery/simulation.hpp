#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gsurgery/dataset.hpp"
#include "gsurgery/factor.hpp"
#include "gsurgery/graph.hpp"

namespace gsurgery {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seeds a generator from a base seed and a stream index.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Linear-Gaussian models

struct LinearEquation {
    std::string variable;
    double intercept = 0;
    std::map<std::string, double> coefficients;
    double noise_variance = 1;
};

/// v := intercept + Σ coef·parent + N(0, noise_variance), in insertion order.
class LinearGaussianSem {
public:
    /// Parents must already be defined.
    void add(const std::string& variable, double intercept, std::map<std::string, double> coefficients,
             double noise_variance);

    const std::vector<LinearEquation>& equations() const { return equations_; }
    const LinearEquation& equation(const std::string& v) const;
    LinearEquation& equation(const std::string& v);
    std::vector<std::string> variables() const;

    /// Ancestral sampling; every variable becomes a column.
    Dataset sample(std::size_t n, std::uint64_t seed) const;

private:
    std::vector<LinearEquation> equations_;
};

/// A mutable parameter: the intercept of `variable`, or its coefficient on `parent`.
struct CoefficientHandle {
    std::string variable;
    std::optional<std::string> parent;

    double get(const LinearGaussianSem& sem) const;
    void set(LinearGaussianSem& sem, double value) const;
};

struct DiagnosisWeights {
    double w1 = 0;  // K -> T
    double w2 = 0;  // mechanism of A
    double w3 = 0;  // T -> C
    double w4 = 0;  // A -> C
};

/// How w2 enters A: as the coefficient on K (A := w2 K + noise, which makes
/// A a proxy of the latent K) or as a plain intercept (A := w2 + noise).
enum class AMechanism { KCoefficient, Intercept };

/// K ~ N(0,σ²), T ~ N(w1 K,σ²), A per `mechanism`, C ~ N(w3 T + w4 A,σ²); K is latent.
LinearGaussianSem diagnosis_sem(const DiagnosisWeights& w, double sigma, AMechanism mechanism);
CoefficientHandle diagnosis_a_handle(AMechanism mechanism);
CoefficientHandle diagnosis_t_handle();

/// Members differ from `base` only in the handle value.
struct LinearEnvironmentFamily {
    LinearGaussianSem base;
    CoefficientHandle handle;

    LinearGaussianSem member(double value) const;
};

// ---------------------------------------------------------------------------
// Discrete models

/// Discrete SEM over a hidden-variable DAG. Selection vertices are not
/// variables; each CPT is a table over the vertex and its non-selection
/// parents, normalized over the vertex.
class DiscreteSem {
public:
    DiscreteSem(CausalDag dag, Cardinalities cards);

    const CausalDag& dag() const { return dag_; }
    const Cardinalities& cardinalities() const { return cards_; }
    /// Non-selection vertices in topological order.
    const std::vector<std::string>& variables() const { return vars_; }
    VarSet observed() const;
    VarSet parents(const std::string& v) const;

    void set_cpt(const std::string& v, Factor cpt);
    const Factor& cpt(const std::string& v) const;

    /// Fills every CPT with rows drawn uniformly from [lo, 1] then normalized
    /// (lo > 0 keeps the model strictly positive).
    void randomize(std::mt19937_64& rng, double lo = 0.05);
    void randomize_vertex(const std::string& v, std::mt19937_64& rng, double lo = 0.05);

    /// Joint over every non-selection variable.
    Factor joint() const;
    /// Joint over the observed variables.
    Factor observational_joint() const;

    Dataset sample(std::size_t n, std::uint64_t seed) const;

private:
    void check_size(const VarSet& vars) const;

    CausalDag dag_;
    Cardinalities cards_;
    std::vector<std::string> vars_;
    std::map<std::string, Factor> cpts_;
};

/// Truncated factorization: clamp `x`, drop the CPTs of the intervened
/// vertices, sum out everything outside `outcome`.
Factor oracle_interventional(const DiscreteSem& sem, const Assignment& x, const VarSet& outcome);
/// P_x(outcome) for every assignment of x, as one table over x ∪ outcome.
Factor oracle_interventional_table(const DiscreteSem& sem, const VarSet& x, const VarSet& outcome);

/// Members share every CPT except those of the mutable vertices.
struct DiscreteEnvironmentFamily {
    DiscreteSem base;
    VarSet mutable_vertices;

    DiscreteSem member(std::uint64_t seed) const;
};

struct RandomGraphOptions {
    std::size_t min_observed = 3;
    std::size_t max_observed = 6;
    double edge_probability = 0.4;
    double bidirected_probability = 0.2;
    std::size_t max_bidirected = 3;
    std::size_t max_selection = 2;
};

/// A random selection diagram and the hidden-variable DAG that realizes it
/// with one latent parent per bidirected edge.
struct RandomModel {
    CausalDag dag;
    Admg graph;
};

RandomModel random_model(std::mt19937_64& rng, const RandomGraphOptions& options = {});

// ---------------------------------------------------------------------------
// Experiments

enum class Scenario { MutableA, TargetShift };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct ExperimentConfig {
    Scenario scenario = Scenario::MutableA;
    std::size_t n_per_env = 500;
    std::size_t n_source_envs = 5;
    std::size_t grid_points = 21;
    /// Defaults: [-100, 100] for mutable-A, [-10, 10] for target shift.
    std::optional<double> grid_min;
    std::optional<double> grid_max;
    std::size_t n_reps = 10;
    std::uint64_t seed = 0;
    double sigma = 0.1;
    AMechanism a_mechanism = AMechanism::KCoefficient;
    /// Share of the surgery source environment used for fitting; the rest scores candidates.
    double train_fraction = 0.8;
};

/// Applies `key=value` overrides (n_per_env, n_source_envs, grid_points,
/// grid_min, grid_max, n_reps, seed, sigma, a_mechanism, train_fraction, scenario).
void apply_experiment_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ExperimentRow {
    std::size_t rep = 0;
    double env_value = 0;
    std::string method;
    double mse = 0;
};

/// The selection diagram matching a scenario.
Admg scenario_graph(Scenario s);

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);

/// One environment of a scenario with the coefficients of repetition 0.
/// `env_value` overrides the mutable handle; `stream` selects an independent sample.
Dataset scenario_sample(const ExperimentConfig& cfg, std::size_t n, std::optional<double> env_value,
                        std::uint64_t stream);
std::string format_results_csv(const std::vector<ExperimentRow>& rows);

/// Mean MSE per grid value for one method, in grid order.
std::vector<std::pair<double, double>> mean_curve(const std::vector<ExperimentRow>& rows, const std::string& method);

}  // namespace gsurgery
