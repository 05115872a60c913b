#include "gsurgery/expr.hpp"

namespace gsurgery {

namespace {

nlohmann::json var_array(const VarSet& s) { return nlohmann::json(std::vector<std::string>(s.begin(), s.end())); }

VarSet read_vars(const nlohmann::json& j, const char* field) {
    if (!j.contains(field)) return {};
    VarSet out;
    for (const auto& v : j.at(field)) out.insert(v.get<std::string>());
    return out;
}

}  // namespace

nlohmann::json to_json(const ExprPtr& e) {
    nlohmann::json j;
    switch (e->kind()) {
        case ExprKind::Kernel:
            j["kind"] = "kernel";
            j["over"] = var_array(e->over());
            j["context"] = var_array(e->context());
            if (!e->observational()) j["source"] = to_json(e->source());
            break;
        case ExprKind::Product:
            j["kind"] = "product";
            j["factors"] = nlohmann::json::array();
            for (const auto& f : e->factors()) j["factors"].push_back(to_json(f));
            break;
        case ExprKind::Quotient:
            j["kind"] = "quotient";
            j["numerator"] = to_json(e->numerator());
            j["denominator"] = to_json(e->denominator());
            break;
        case ExprKind::Marginal:
            j["kind"] = "marginal";
            j["sum_out"] = var_array(e->sum_out());
            j["body"] = to_json(e->body());
            break;
        case ExprKind::Normalize:
            j["kind"] = "normalize";
            j["target"] = e->target();
            j["body"] = to_json(e->body());
            break;
    }
    return j;
}

ExprPtr from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "kernel") {
            ExprPtr src = j.contains("source") ? from_json(j.at("source")) : nullptr;
            return make_kernel_from(read_vars(j, "over"), read_vars(j, "context"), src);
        }
        if (kind == "product") {
            std::vector<ExprPtr> fs;
            for (const auto& f : j.at("factors")) fs.push_back(from_json(f));
            if (fs.size() == 1) return fs.front();
            return make_product(std::move(fs));
        }
        if (kind == "quotient") return make_quotient(from_json(j.at("numerator")), from_json(j.at("denominator")));
        if (kind == "marginal") return make_marginal(read_vars(j, "sum_out"), from_json(j.at("body")));
        if (kind == "normalize") return make_normalize(j.at("target").get<std::string>(), from_json(j.at("body")));
        throw ExprError("unknown expression kind '" + kind + "'");
    } catch (const nlohmann::json::exception& ex) {
        throw ExprError(std::string("malformed expression JSON: ") + ex.what());
    }
}

}  // namespace gsurgery
