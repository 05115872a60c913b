#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsurgery/dataset.hpp"
#include "gsurgery/expr.hpp"
#include "gsurgery/factor.hpp"

namespace gsurgery {

/// Gaussian regression response ~ N(intercept + Σ coef·regressor, noise_variance).
struct LinearGaussianFactor {
    std::string response;
    std::vector<std::string> regressors;
    std::vector<double> coefficients;
    double intercept = 0;
    double noise_variance = 1;
    /// Standard errors of the intercept followed by the coefficients.
    std::vector<double> standard_errors;

    double mean(const std::map<std::string, double>& values) const;
};

/// A kernel P(over | context) fitted to data. Discrete kernels are one
/// table over over ∪ context; continuous kernels are a chain of regressions,
/// one per outcome variable, each conditioning on the earlier ones.
struct FittedKernel {
    VarSet over;
    VarSet context;
    Factor table;
    std::vector<LinearGaussianFactor> chain;
};

struct FitOptions {
    /// Pseudo-count added to every discrete table cell.
    double smoothing = 1e-9;
    /// Discrete contexts with no data become uniform instead of an error.
    bool allow_empty_contexts = false;
    std::size_t mc_samples = 10000;
    std::uint64_t seed = 0;
};

struct Prediction {
    /// Discrete target: probability of each state.
    std::vector<double> probabilities;
    /// Continuous target: mean and variance; for a discrete target, the
    /// moments of the state index.
    double mean = 0;
    double variance = 0;
};

class Predictor {
public:
    const ExprPtr& expression() const { return expr_; }
    const std::string& target() const { return target_; }
    bool discrete() const { return discrete_; }
    const std::map<std::string, FittedKernel>& kernels() const { return kernels_; }
    std::size_t mc_samples() const { return mc_samples_; }
    std::uint64_t seed() const { return seed_; }

    void set_monte_carlo(std::size_t samples, std::uint64_t seed);

    /// Variables a row must supply.
    VarSet features() const;

    /// `row_index` seeds the Monte Carlo stream as seed XOR row_index.
    Prediction predict(const std::map<std::string, double>& row, std::uint64_t row_index = 0) const;
    std::vector<Prediction> predict(const Dataset& data) const;

    nlohmann::json to_json() const;
    static Predictor from_json(const nlohmann::json& j);

private:
    friend Predictor fit(const ExprPtr&, const std::string&, const Dataset&, const FitOptions&);

    void prepare();

    ExprPtr expr_;
    std::string target_;
    bool discrete_ = true;
    std::map<std::string, FittedKernel> kernels_;  // keyed by kernel key
    std::map<std::string, int> cards_;
    std::size_t mc_samples_ = 10000;
    std::uint64_t seed_ = 0;
    Factor table_;  // discrete: the expression evaluated over its free variables
};

/// Fits every observational kernel of `expr` independently. The predictor
/// is discrete when `target` is a categorical column.
Predictor fit(const ExprPtr& expr, const std::string& target, const Dataset& data, const FitOptions& options = {});

/// Least-squares fit of one regression with an intercept. Throws DataError
/// naming `label` when the design is rank deficient.
LinearGaussianFactor fit_linear_gaussian(const Dataset& data, const std::string& response,
                                         const std::vector<std::string>& regressors, const std::string& label);

/// Mean negative log-likelihood of the target (discrete) or mean squared
/// error of the predictive mean (continuous).
double validation_loss(const Predictor& p, const Dataset& data);

struct OlsModel {
    std::string target;
    LinearGaussianFactor regression;
};

OlsModel fit_ols(const Dataset& data, const std::string& target, const std::vector<std::string>& features);
std::vector<double> predict_ols(const OlsModel& model, const Dataset& data);

double mse(const std::vector<double>& pred, const std::vector<double>& truth);

}  // namespace gsurgery
