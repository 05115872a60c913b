#include "gsurgery/surgery.hpp"

#include <algorithm>
#include <stdexcept>

namespace gsurgery {

namespace {

constexpr std::size_t kMaxPool = 20;

std::vector<VarSet> power_set(const VarSet& pool, std::optional<std::size_t> max_size) {
    if (pool.size() > kMaxPool)
        throw std::invalid_argument("conditioning pool has " + std::to_string(pool.size()) +
                                    " variables; the exhaustive search supports at most " + std::to_string(kMaxPool));
    std::vector<std::string> items(pool.begin(), pool.end());
    std::vector<VarSet> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << items.size()); ++mask) {
        VarSet z;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (mask & (std::size_t{1} << i)) z.insert(items[i]);
        if (max_size && z.size() > *max_size) continue;
        out.push_back(std::move(z));
    }
    return out;
}

void finish_identification(CandidateReport& c, const Admg& g, const std::string& t, const VarOrder& order) {
    auto r = id(c.intervene, c.outcome, g);
    if (!identified(r)) {
        c.status = CandidateStatus::NotIdentified;
        c.detail = std::get<IdFailure>(r).describe();
        return;
    }
    c.status = CandidateStatus::Identified;
    c.expr = canonicalize(simplify(make_normalize(t, std::get<ExprPtr>(r))), order);
}

nlohmann::json candidate_json(const CandidateReport& c, const VarOrder& order) {
    nlohmann::json j;
    j["conditioning"] = order.sorted(c.conditioning);
    j["branch"] = to_string(c.branch);
    j["intervene"] = order.sorted(c.intervene);
    j["outcome"] = order.sorted(c.outcome);
    j["status"] = to_string(c.status);
    j["loss"] = c.loss ? nlohmann::json(*c.loss) : nlohmann::json(nullptr);
    if (c.expr) j["expression"] = to_text(c.expr, order);
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

}  // namespace

std::string to_string(Branch b) { return b == Branch::Plain ? "plain" : "target-mutilated"; }

std::string to_string(CandidateStatus s) {
    switch (s) {
        case CandidateStatus::Identified:
            return "identified";
        case CandidateStatus::NotIdentified:
            return "not-identified";
        case CandidateStatus::Skipped:
            return "skipped";
        case CandidateStatus::FitFailed:
            return "fit-failed";
    }
    return "unknown";
}

bool is_stable(const Admg& g, const VarSet& x, const VarSet& y) {
    if (g.selection().empty()) return true;
    return m_separated(mutilate(g, {x, {}, false}), g.selection(), y, {});
}

std::vector<VarSet> pruning_search(const Admg& g, const std::string& t) {
    if (!g.is_observed(t)) throw std::invalid_argument("target '" + t + "' is not an observed vertex");
    std::vector<VarSet> out;
    for (auto& z : power_set(set_difference(g.observed(), {t}), std::nullopt)) {
        if (g.selection().empty() || m_separated(g, {t}, g.selection(), z)) out.push_back(std::move(z));
    }
    std::sort(out.begin(), out.end(), [](const VarSet& a, const VarSet& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return std::vector<std::string>(a.begin(), a.end()) < std::vector<std::string>(b.begin(), b.end());
    });
    return out;
}

std::vector<CandidateReport> enumerate_candidates(const Admg& g, const VarSet& mutable_vars, const std::string& t,
                                                  const SearchOptions& options) {
    if (!g.is_observed(t)) throw std::invalid_argument("target '" + t + "' is not an observed vertex");
    for (const auto& m : mutable_vars)
        if (!g.is_observed(m)) throw std::invalid_argument("mutable variable '" + m + "' is not observed");
    const VarOrder order(g.declaration_order());
    const VarSet t_set{t};
    const VarSet t_family = set_union(t_set, g.children(t_set));
    const Admg cut = mutilate(g, {t_set, {}, false});
    const VarSet pool = set_difference(g.observed(), set_union(mutable_vars, t_set));

    std::vector<CandidateReport> out;
    for (const auto& z : power_set(pool, options.max_conditioning_size)) {
        if (!mutable_vars.count(t)) {
            CandidateReport c;
            c.conditioning = z;
            c.branch = Branch::Plain;
            auto q = uq(mutable_vars, t_set, z, g);
            c.intervene = q.intervene;
            c.outcome = q.outcome;
            finish_identification(c, g, t, order);
            out.push_back(std::move(c));
        }
        CandidateReport c;
        c.conditioning = z;
        c.branch = Branch::TargetMutilated;
        auto q = uq(set_difference(mutable_vars, t_set), t_set, z, cut);
        c.intervene = set_union(q.intervene, t_set);
        c.outcome = set_difference(q.outcome, t_set);
        if (!intersects(c.outcome, t_family)) {
            c.status = CandidateStatus::Skipped;
            c.detail = "outcome set shares nothing with the target and its children";
        } else {
            finish_identification(c, g, t, order);
        }
        out.push_back(std::move(c));
    }
    return out;
}

SurgeryResult surgery_search(const Admg& g, const VarSet& mutable_vars, const std::string& t, const Dataset& train,
                             const Dataset& valid, const SurgeryOptions& options) {
    SurgeryResult result;
    result.target = t;
    result.mutable_vars = mutable_vars;
    if (!g.is_observed(t)) throw std::invalid_argument("target '" + t + "' is not an observed vertex");
    if (mutable_vars.count(t) && g.children({t}).empty()) {
        result.failure = "no stable surgery estimator: the target is mutable and has no children";
        return result;
    }
    result.report = enumerate_candidates(g, mutable_vars, t, options.search);
    bool any_identified = false;
    for (auto& c : result.report) {
        if (c.status != CandidateStatus::Identified) continue;
        any_identified = true;
        try {
            auto p = fit(c.expr, t, train, options.fit);
            c.loss = validation_loss(p, valid);
            result.candidates.push_back({c, std::move(p)});
        } catch (const std::exception& ex) {
            c.status = CandidateStatus::FitFailed;
            c.detail = ex.what();
        }
    }
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        if (!result.chosen) {
            result.chosen = i;
            continue;
        }
        const auto& a = result.candidates[i].report;
        const auto& b = result.candidates[*result.chosen].report;
        bool better = *a.loss < *b.loss;
        if (*a.loss == *b.loss) {
            if (a.conditioning.size() != b.conditioning.size())
                better = a.conditioning.size() > b.conditioning.size();
            else
                better = a.expr->key() < b.expr->key();
        }
        if (better) result.chosen = i;
    }
    if (!result.chosen) {
        result.failure = any_identified ? "no stable surgery estimator could be fitted to the training data"
                                        : "no stable surgery estimator: no candidate query is identifiable";
    }
    return result;
}

nlohmann::json report_json(const SurgeryResult& r, const VarOrder& order) {
    nlohmann::json j;
    j["target"] = r.target;
    j["mutable"] = order.sorted(r.mutable_vars);
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : r.report) j["candidates"].push_back(candidate_json(c, order));
    if (r.success()) {
        const auto& best = r.best();
        auto chosen = candidate_json(best.report, order);
        chosen["expression_tree"] = to_json(best.report.expr);
        j["chosen"] = chosen;
    } else {
        j["chosen"] = nullptr;
        j["failure"] = r.failure;
    }
    return j;
}

}  // namespace gsurgery
