#include <doctest.h>

#include <cmath>
#include <random>

#include "gsurgery/factor.hpp"
#include "gsurgery/graph_io.hpp"
#include "gsurgery/identify.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace gsurgery;

namespace {

struct Loaded {
    Admg g;
    VarOrder order;
};

Loaded load(const std::string& name) {
    auto g = normalize_selection(load_graph(graph_path(name)).graph);
    VarOrder order(g.declaration_order());
    return {g, order};
}

std::string text_of(const IdResult& r, const VarOrder& order) {
    REQUIRE(identified(r));
    return to_text(std::get<ExprPtr>(r), order);
}

// Largest absolute gap between an identified expression and the oracle,
// broadcasting the expression over variables it does not mention.
double max_gap(const ExprPtr& e, const Factor& joint, const Factor& truth) {
    auto value = evaluate_discrete(e, joint);
    double gap = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) gap = std::max(gap, std::abs(value.at(truth.assignment(i)) - truth[i]));
    return gap;
}

}  // namespace

TEST_CASE("uq examples") {
    auto d = load("diagnosis.txt");
    auto unchanged = uq({"A"}, {"T"}, {}, d.g);
    CHECK(unchanged.intervene == VarSet{"A"});
    CHECK(unchanged.outcome == VarSet{"T"});

    auto r = uq({"A"}, {"T"}, {"C"}, d.g);
    CHECK(r.intervene == VarSet{"A"});
    CHECK(r.outcome == VarSet{"C", "T"});
    // the exchange test that failed, checked by path enumeration
    CHECK_FALSE(oracle::m_separated(mutilate(d.g, {{"A"}, {"C"}, false}), {"T"}, {"C"}, {"A"}));

    auto fd = load("front_door.txt");
    auto f = uq({"M"}, {"T"}, {"Z"}, fd.g);
    CHECK(oracle::m_separated(mutilate(fd.g, {{"M"}, {"Z"}, false}), {"T"}, {"Z"}, {"M"}));
    CHECK(f.intervene == VarSet{"M", "Z"});
    CHECK(f.outcome == VarSet{"T"});
}

TEST_CASE("identification goldens") {
    auto d = load("diagnosis.txt");
    CHECK(text_of(identify_query({{"A"}, {"T", "C"}, {}}, d.g), d.order) == "P(T) P(C|T,A)");
    CHECK(text_of(identify_query({{"A"}, {"T"}, {"C"}}, d.g), d.order) == "Normalize_{T}[P(T) P(C|T,A)]");
    CHECK(text_of(identify_query({{}, {"T"}, {}}, d.g), d.order) == "P(T)");

    auto fd = load("front_door.txt");
    CHECK(text_of(identify_query({{"M"}, {"T"}, {"Z"}}, fd.g), fd.order) == "Σ_{m'} P(T|m',Z) P(m')");

    auto ct = load("confounded_treatment.txt");
    CHECK_FALSE(identified(id({"X"}, {"T"}, ct.g)));
    CHECK(text_of(id({"X", "T"}, {"Y"}, ct.g), ct.order) == "P(Y|T)");

    auto ts = load("target_shift.txt");
    CHECK(text_of(id({"T", "A"}, {"C"}, ts.g), ts.order) == "P(C|T,A)");

    auto bike = load("bike.txt");
    CHECK(text_of(id({"T", "H", "W", "F"}, {"R"}, bike.g), bike.order) == "Σ_{t'} P(R|t',H,W,F) P(t'|H,W)");
}

TEST_CASE("bow graph is not identifiable") {
    auto bow = load("bow.txt");
    auto r = id({"X"}, {"Y"}, bow.g);
    REQUIRE_FALSE(identified(r));
    const auto& f = std::get<IdFailure>(r);
    CHECK(f.offending_set == VarSet{"Y"});
    CHECK(f.subgraph.has_bidirected("X", "Y"));
    CHECK(f.describe().find("not identifiable") != std::string::npos);
}

TEST_CASE("query validation") {
    auto d = load("diagnosis.txt");
    CHECK_THROWS_AS(identify_query({{"A"}, {"A"}, {}}, d.g), std::invalid_argument);
    CHECK_THROWS_AS(identify_query({{"A"}, {}, {}}, d.g), std::invalid_argument);
    CHECK_THROWS_AS(identify_query({{"Q"}, {"T"}, {}}, d.g), std::invalid_argument);
    CHECK_THROWS_AS(identify_query({{"S"}, {"T"}, {}}, d.g), std::invalid_argument);
}

TEST_CASE("identifiability agrees with the hedge recursion") {
    std::mt19937_64 rng(21);
    int yes = 0, no = 0;
    for (int trial = 0; trial < 400; ++trial) {
        std::uniform_int_distribution<std::size_t> size(2, 6);
        auto g = oracle::random_admg(rng, size(rng), 0.4, 0.3, 0);
        std::vector<std::string> obs(g.observed().begin(), g.observed().end());
        std::shuffle(obs.begin(), obs.end(), rng);
        VarSet y{obs[0]};
        VarSet x = oracle::random_subset(rng, VarSet(obs.begin() + 1, obs.end()), 0.5);
        bool expected = oracle::identifiable(y, x, g);
        CHECK(identified(id(x, y, g)) == expected);
        (expected ? yes : no)++;
    }
    CHECK(yes > 50);
    CHECK(no > 20);
}

TEST_CASE("identified expressions match the truncated factorization") {
    std::mt19937_64 rng(33);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto model = random_model(rng);
        DiscreteSem sem(model.dag, {});
        sem.randomize(rng);
        auto joint = sem.observational_joint();
        std::vector<std::string> obs(model.graph.observed().begin(), model.graph.observed().end());
        for (int q = 0; q < 3; ++q) {
            std::shuffle(obs.begin(), obs.end(), rng);
            VarSet y = oracle::random_subset(rng, VarSet(obs.begin() + 1, obs.end()), 0.3);
            y.insert(obs[0]);
            VarSet x = oracle::random_subset(rng, set_difference(model.graph.observed(), y), 0.5);
            auto r = id(x, y, model.graph);
            if (!identified(r)) continue;
            auto truth = oracle::truncated_factorization(sem, x, y);
            CHECK(max_gap(std::get<ExprPtr>(r), joint, truth) < 1e-9);
            CHECK(is_grounded(std::get<ExprPtr>(r), model.graph.observed()));
            CHECK(is_subset(std::get<ExprPtr>(r)->free_vars(), set_union(x, y)));
            ++checked;
        }
    }
    CHECK(checked > 60);
}

TEST_CASE("library oracle agrees with the brute-force truncated factorization") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        auto model = random_model(rng);
        DiscreteSem sem(model.dag, {});
        sem.randomize(rng);
        auto obs = model.graph.observed();
        VarSet x = oracle::random_subset(rng, obs, 0.4);
        VarSet y = set_difference(obs, x);
        if (y.empty()) continue;
        auto lib = oracle_interventional_table(sem, x, y);
        auto ref = oracle::truncated_factorization(sem, x, y);
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(lib.at(ref.assignment(i)) == doctest::Approx(ref[i]).epsilon(1e-12));
        // empty intervention is the observational marginal
        auto plain = oracle_interventional_table(sem, {}, y);
        auto marg = marginalize_to(sem.observational_joint(), y);
        for (std::size_t i = 0; i < marg.size(); ++i) CHECK(plain.at(marg.assignment(i)) == doctest::Approx(marg[i]).epsilon(1e-12));
    }
}

TEST_CASE("conditional queries equal the ratio of interventional tables") {
    std::mt19937_64 rng(55);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto model = random_model(rng);
        DiscreteSem sem(model.dag, {});
        sem.randomize(rng);
        auto joint = sem.observational_joint();
        std::vector<std::string> obs(model.graph.observed().begin(), model.graph.observed().end());
        if (obs.size() < 3) continue;
        std::shuffle(obs.begin(), obs.end(), rng);
        VarSet y{obs[0]}, z{obs[1]};
        VarSet x = oracle::random_subset(rng, VarSet(obs.begin() + 2, obs.end()), 0.5);
        auto r = identify_query({x, y, z}, model.graph);
        if (!identified(r)) continue;
        auto pyz = oracle::truncated_factorization(sem, x, set_union(y, z));
        auto pz = marginalize_to(pyz, set_union(x, z));
        auto value = evaluate_discrete(std::get<ExprPtr>(r), joint);
        for (std::size_t i = 0; i < pyz.size(); ++i) {
            auto a = pyz.assignment(i);
            CHECK(std::abs(value.at(a) - pyz[i] / pz.at(a)) < 1e-9);
        }
        ++checked;
    }
    CHECK(checked > 20);
}
