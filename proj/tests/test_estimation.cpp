#include <doctest.h>

#include <cmath>
#include <random>

#include "gsurgery/estimation.hpp"
#include "gsurgery/simulation.hpp"

using namespace gsurgery;

namespace {

Dataset categorical_counts(int zeros, int ones) {
    Dataset d(std::vector<std::string>{"T"});
    for (int i = 0; i < zeros; ++i) d.add_row({0});
    for (int i = 0; i < ones; ++i) d.add_row({1});
    d.set_categorical("T", 2);
    return d;
}

const LinearGaussianFactor& regression_for(const Predictor& p, const std::string& response) {
    for (const auto& [key, k] : p.kernels())
        for (const auto& r : k.chain)
            if (r.response == response && k.over == VarSet{response}) return r;
    throw std::runtime_error("no regression for " + response);
}

// Linear-Gaussian data over the bike variables; R has a large intercept so
// relative tolerances are meaningful.
Dataset bike_like(std::size_t n, std::uint64_t seed) {
    LinearGaussianSem sem;
    sem.add("H", 0, {}, 1.0);
    sem.add("W", 0.5, {{"H", -0.4}}, 1.0);
    sem.add("T", 1.0, {{"H", 0.7}, {"W", 0.3}}, 0.8);
    sem.add("F", 0, {{"T", 0.9}, {"H", 0.2}, {"W", -0.3}}, 0.5);
    sem.add("R", 50.0, {{"F", 2.0}, {"H", -1.0}, {"W", 1.5}, {"T", 3.0}}, 1.0);
    return sem.sample(n, seed);
}

double normal_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2 * M_PI * var);
}

}  // namespace

TEST_CASE("discrete marginal from counts") {
    auto p = fit(make_normalize("T", make_kernel({"T"})), "T", categorical_counts(600, 400));
    CHECK(p.discrete());
    auto pred = p.predict({}, 0);
    REQUIRE(pred.probabilities.size() == 2);
    CHECK(pred.probabilities[0] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(pred.probabilities[1] == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(pred.mean == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("discrete negative log-likelihood") {
    auto data = categorical_counts(600, 400);
    auto p = fit(make_kernel({"T"}), "T", data);
    double expected = -(0.6 * std::log(0.6) + 0.4 * std::log(0.4));
    CHECK(validation_loss(p, data) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("empty discrete contexts") {
    Dataset d(std::vector<std::string>{"A", "B"});
    d.add_row({0, 0});
    d.add_row({0, 1});
    d.set_categorical("A", 2);
    d.set_categorical("B", 2);
    FitOptions strict;
    strict.smoothing = 0;
    CHECK_THROWS_AS(fit(make_kernel({"B"}, {"A"}), "B", d, strict), DataError);
    FitOptions lenient = strict;
    lenient.allow_empty_contexts = true;
    auto p = fit(make_kernel({"B"}, {"A"}), "B", d, lenient);
    auto pred = p.predict({{"A", 1}}, 0);
    CHECK(pred.probabilities[0] == doctest::Approx(0.5));
}

TEST_CASE("least squares recovers an exact line") {
    Dataset d(std::vector<std::string>{"x", "y"});
    for (int i = 0; i < 20; ++i) d.add_row({double(i), 1.0 + 2.0 * i});
    auto m = fit_ols(d, "y", {"x"});
    CHECK(m.regression.coefficients.at(0) == doctest::Approx(2.0));
    CHECK(m.regression.intercept == doctest::Approx(1.0));
    auto pred = predict_ols(m, d);
    CHECK(mse(pred, d.column("y")) < 1e-18);
}

TEST_CASE("least squares standard errors match the textbook formula") {
    // y = 1 + 2x + e with a known residual pattern; SE(slope) = s / sqrt(Sxx)
    Dataset d(std::vector<std::string>{"x", "y"});
    std::vector<double> e{0.3, -0.2, 0.1, -0.4, 0.2, 0.0, 0.1, -0.1};
    for (std::size_t i = 0; i < e.size(); ++i) d.add_row({double(i), 1.0 + 2.0 * i + e[i]});
    auto r = fit_linear_gaussian(d, "y", {"x"}, "test");
    double n = e.size(), xbar = (n - 1) / 2, sxx = 0, sxy = 0, ybar = 0;
    for (std::size_t i = 0; i < e.size(); ++i) ybar += d.column("y")[i] / n;
    for (std::size_t i = 0; i < e.size(); ++i) {
        sxx += (i - xbar) * (i - xbar);
        sxy += (i - xbar) * (d.column("y")[i] - ybar);
    }
    double slope = sxy / sxx, icpt = ybar - slope * xbar, rss = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double res = d.column("y")[i] - icpt - slope * i;
        rss += res * res;
    }
    double s2 = rss / (n - 2);
    CHECK(r.coefficients[0] == doctest::Approx(slope));
    CHECK(r.intercept == doctest::Approx(icpt));
    CHECK(r.noise_variance == doctest::Approx(s2));
    CHECK(r.standard_errors[1] == doctest::Approx(std::sqrt(s2 / sxx)));
    CHECK(r.standard_errors[0] == doctest::Approx(std::sqrt(s2 * (1 / n + xbar * xbar / sxx))));
}

TEST_CASE("rank deficient designs are rejected") {
    Dataset d(std::vector<std::string>{"x", "z", "y"});
    for (int i = 0; i < 10; ++i) d.add_row({double(i), 2.0 * i, double(i % 3)});
    CHECK_THROWS_AS(fit_linear_gaussian(d, "y", {"x", "z"}, "collinear"), DataError);
}

TEST_CASE("mean squared error") {
    CHECK(mse({1, 2}, {1, 4}) == doctest::Approx(2.0));
    CHECK(mse({0.5}, {0.5}) == 0.0);
    CHECK_THROWS(mse({1}, {1, 2}));
    CHECK_THROWS(mse({}, {}));
}

TEST_CASE("continuous surgery estimator matches the exact population posterior") {
    DiagnosisWeights w{0.8, -1.2, 1.5, 0.7};
    const double sigma = 1.0;
    auto data = diagnosis_sem(w, sigma, AMechanism::KCoefficient).sample(40000, 17).select_columns({"T", "A", "C"});
    auto expr = make_normalize("T", make_product({make_kernel({"T"}), make_kernel({"C"}, {"T", "A"})}));
    auto p = fit(expr, "T", data);
    CHECK_FALSE(p.discrete());
    // T ~ N(0, vT); C | T, A ~ N(w3 T + w4 A, σ²)
    double vt = w.w1 * w.w1 * sigma * sigma + sigma * sigma;
    double precision = 1 / vt + w.w3 * w.w3 / (sigma * sigma);
    for (auto [a, c] : {std::pair{0.0, 0.0}, {1.0, 2.0}, {-1.5, 0.5}, {2.0, -3.0}}) {
        auto pred = p.predict({{"A", a}, {"C", c}}, 0);
        double mean = w.w3 * (c - w.w4 * a) / (sigma * sigma) / precision;
        CHECK(std::abs(pred.mean - mean) < 0.02);
        CHECK(std::abs(pred.variance - 1 / precision) < 0.02);
    }
}

TEST_CASE("marginal prediction matches quadrature") {
    auto data = bike_like(20000, 5);
    auto expr = make_marginal({"T"}, make_product({make_kernel({"R"}, {"T", "H", "W", "F"}), make_kernel({"T"}, {"H", "W"})}));
    auto p = fit(expr, "R", data);
    p.set_monte_carlo(20000, 3);
    const auto& r = regression_for(p, "R");
    const auto& t = regression_for(p, "T");
    for (auto row : {std::map<std::string, double>{{"H", 0.0}, {"W", 0.0}, {"F", 0.0}},
                     {{"H", 1.0}, {"W", -0.5}, {"F", 2.0}},
                     {{"H", -1.2}, {"W", 1.1}, {"F", -1.0}}}) {
        double mu_t = t.mean(row), var_t = t.noise_variance;
        // trapezoid rule over ±10 sd for the first two moments of R
        double lo = mu_t - 10 * std::sqrt(var_t), hi = mu_t + 10 * std::sqrt(var_t);
        const int steps = 4000;
        double m1 = 0, m2 = 0, h = (hi - lo) / steps;
        for (int i = 0; i <= steps; ++i) {
            double tv = lo + i * h, wgt = (i == 0 || i == steps) ? 0.5 : 1.0;
            auto full = row;
            full["T"] = tv;
            double mr = r.mean(full);
            double dens = normal_pdf(tv, mu_t, var_t) * h * wgt;
            m1 += dens * mr;
            m2 += dens * (mr * mr + r.noise_variance);
        }
        auto pred = p.predict(row, 0);
        CHECK(std::abs(pred.mean - m1) < 0.005 * std::abs(m1));
        CHECK(std::abs(pred.variance - (m2 - m1 * m1)) < 0.05 * (m2 - m1 * m1));
    }
}

TEST_CASE("Monte Carlo predictions are reproducible") {
    auto data = bike_like(2000, 6);
    auto expr = make_marginal({"T"}, make_product({make_kernel({"R"}, {"T", "H", "W", "F"}), make_kernel({"T"}, {"H", "W"})}));
    FitOptions opts;
    opts.mc_samples = 500;
    opts.seed = 9;
    auto p = fit(expr, "R", data, opts);
    auto a = p.predict(data.select_rows({0, 1, 2}));
    auto b = p.predict(data.select_rows({0, 1, 2}));
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean == b[i].mean);
        CHECK(a[i].variance == b[i].variance);
    }
    auto q = p;
    q.set_monte_carlo(500, 10);
    CHECK(q.predict(data.row(0), 0).mean != p.predict(data.row(0), 0).mean);
}

TEST_CASE("predictor JSON round trip") {
    auto data = bike_like(1000, 7);
    auto expr = make_marginal({"T"}, make_product({make_kernel({"R"}, {"T", "H", "W", "F"}), make_kernel({"T"}, {"H", "W"})}));
    FitOptions opts;
    opts.mc_samples = 300;
    auto p = fit(expr, "R", data, opts);
    auto back = Predictor::from_json(nlohmann::json::parse(p.to_json().dump()));
    CHECK(back.to_json() == p.to_json());
    for (std::size_t i = 0; i < 5; ++i) CHECK(back.predict(data.row(i), i).mean == p.predict(data.row(i), i).mean);

    auto d = categorical_counts(30, 70);
    auto dp = fit(make_kernel({"T"}), "T", d);
    auto dback = Predictor::from_json(dp.to_json());
    CHECK(dback.predict({}, 0).probabilities == dp.predict({}, 0).probabilities);

    auto broken = p.to_json();
    broken["factors"] = nlohmann::json::array();
    CHECK_THROWS_AS(Predictor::from_json(broken), DataError);
}

TEST_CASE("fitting rejects missing columns") {
    auto data = categorical_counts(5, 5);
    CHECK_THROWS(fit(make_kernel({"T"}, {"Q"}), "T", data));
}
