#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gsurgery/dataset.hpp"
#include "gsurgery/estimation.hpp"
#include "gsurgery/graph_io.hpp"
#include "gsurgery/identify.hpp"
#include "gsurgery/simulation.hpp"
#include "gsurgery/surgery.hpp"

using namespace gsurgery;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotIdentified = 2;
constexpr int kExitNoEstimator = 3;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// "A,B" -> {A,B}; "" and "{}" mean the empty set.
VarSet parse_var_list(const std::string& text) {
    VarSet out;
    std::string t = trim(text);
    if (t == "{}" || t == "∅") return out;
    for (const auto& part : split(t, ',')) {
        auto name = trim(part);
        if (!name.empty()) out.insert(name);
    }
    return out;
}

std::vector<std::string> sorted_list(const VarSet& s, const VarOrder& order) { return order.sorted(s); }

std::string braces(const VarSet& s, const VarOrder& order) {
    std::string out = "{";
    bool first = true;
    for (const auto& v : sorted_list(s, order)) {
        out += (first ? "" : ",") + v;
        first = false;
    }
    return out + "}";
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::pair<std::string, std::string> split_setting(const std::string& s) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("setting '" + s + "' is not key=value");
    return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw UsageError(key + " expects a non-negative integer, got '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw UsageError(key + " expects a number, got '" + value + "'");
    }
}

// Settings shared by fit and surgery: smoothing, allow_empty_contexts,
// mc_samples, max_conditioning_size.
void apply_fit_setting(SurgeryOptions& opts, const std::string& key, const std::string& value) {
    if (key == "smoothing") {
        opts.fit.smoothing = parse_double(key, value);
        if (!(opts.fit.smoothing >= 0)) throw UsageError("smoothing must be non-negative");
    } else if (key == "allow_empty_contexts") {
        if (value != "true" && value != "false") throw UsageError("allow_empty_contexts expects true or false");
        opts.fit.allow_empty_contexts = value == "true";
    } else if (key == "mc_samples") {
        opts.fit.mc_samples = parse_u64(key, value);
        if (opts.fit.mc_samples == 0) throw UsageError("mc_samples must be positive");
    } else if (key == "max_conditioning_size") {
        opts.search.max_conditioning_size = parse_u64(key, value);
    } else {
        throw UsageError("unknown setting '" + key + "'");
    }
}

SurgeryOptions load_fit_settings(const std::string& config_path, const std::vector<std::string>& sets) {
    SurgeryOptions opts;
    if (!config_path.empty())
        for (const auto& [k, v] : load_key_values(config_path)) apply_fit_setting(opts, k, v);
    for (const auto& s : sets) {
        auto [k, v] = split_setting(s);
        apply_fit_setting(opts, k, v);
    }
    return opts;
}

Admg load_diagram(const std::string& path, std::optional<std::string>* target = nullptr) {
    auto file = load_graph(path);
    if (target) *target = file.target;
    return normalize_selection(file.graph);
}

// ---------------------------------------------------------------------------

struct IdentifyArgs {
    std::string graph;
    std::string intervene;
    std::string outcome;
    std::string condition;
    std::string format = "text";
    std::string out;
};

int run_identify(const IdentifyArgs& a) {
    Admg g = load_diagram(a.graph);
    VarOrder order(g.declaration_order());
    Query q{parse_var_list(a.intervene), parse_var_list(a.outcome), parse_var_list(a.condition)};
    auto result = identify_query(q, g);
    std::string text;
    if (a.format == "json") {
        nlohmann::json j;
        j["intervene"] = sorted_list(q.intervene, order);
        j["outcome"] = sorted_list(q.outcome, order);
        j["condition"] = sorted_list(q.condition, order);
        j["identified"] = identified(result);
        if (identified(result)) {
            const auto& e = std::get<ExprPtr>(result);
            j["expression"] = to_text(e, order);
            j["expression_tree"] = to_json(e);
        } else {
            const auto& f = std::get<IdFailure>(result);
            j["witness"] = {{"offending_set", sorted_list(f.offending_set, order)},
                            {"subgraph", format_graph(f.subgraph)},
                            {"message", f.describe()}};
        }
        text = j.dump(2) + "\n";
    } else if (identified(result)) {
        text = to_text(std::get<ExprPtr>(result), order) + "\n";
    } else {
        const auto& f = std::get<IdFailure>(result);
        text = f.describe() + "\nwitness subgraph:\n" + format_graph(f.subgraph);
    }
    write_output(text, a.out);
    return identified(result) ? kExitOk : kExitNotIdentified;
}

// ---------------------------------------------------------------------------

struct SurgeryArgs {
    std::string graph;
    std::string target;
    std::string train;
    std::string valid;
    std::string config;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    std::string format = "text";
    std::string out;
    std::string model_out;
};

std::string surgery_text(const SurgeryResult& r, const VarOrder& order) {
    std::ostringstream os;
    os << "target: " << r.target << "\n";
    os << "mutable: " << braces(r.mutable_vars, order) << "\n";
    os << "candidates:\n";
    for (const auto& c : r.report) {
        os << "  Z=" << braces(c.conditioning, order) << " " << to_string(c.branch) << " do"
           << braces(c.intervene, order) << " on " << braces(c.outcome, order) << ": " << to_string(c.status);
        if (c.loss) os << " loss=" << format_number(*c.loss);
        if (c.expr) os << "  " << to_text(c.expr, order);
        if (!c.detail.empty()) os << "  (" << c.detail << ")";
        os << "\n";
    }
    if (r.success()) {
        const auto& best = r.best().report;
        os << "chosen: " << to_text(best.expr, order) << "\n";
        os << "loss: " << format_number(*best.loss) << "\n";
    } else {
        os << "chosen: none\n";
    }
    return os.str();
}

int run_surgery(const SurgeryArgs& a) {
    std::optional<std::string> file_target;
    Admg g = load_diagram(a.graph, &file_target);
    std::string target = a.target.empty() ? file_target.value_or("") : a.target;
    if (target.empty()) throw UsageError("no target: pass --target or add a 'target' line to the graph file");
    auto opts = load_fit_settings(a.config, a.sets);
    opts.fit.seed = a.seed;
    Dataset train = load_csv(a.train);
    Dataset valid = load_csv(a.valid);

    auto result = surgery_search(g, mutable_set(g), target, train, valid, opts);
    VarOrder order(g.declaration_order());
    write_output(a.format == "json" ? report_json(result, order).dump(2) + "\n" : surgery_text(result, order), a.out);
    if (!result.success()) {
        std::cerr << result.failure << "\n";
        return kExitNoEstimator;
    }
    if (!a.model_out.empty()) write_output(result.best().predictor.to_json().dump(2) + "\n", a.model_out);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string expr;
    std::string target;
    std::string train;
    std::string config;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    std::string out;
};

int run_fit(const FitArgs& a) {
    Dataset train = load_csv(a.train);
    VarSet columns(train.columns().begin(), train.columns().end());
    auto opts = load_fit_settings(a.config, a.sets);
    opts.fit.seed = a.seed;
    auto predictor = fit(parse_text(a.expr, columns), a.target, train, opts.fit);
    write_output(predictor.to_json().dump(2) + "\n", a.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string data;
    std::uint64_t seed = 0;
    std::optional<std::size_t> mc_samples;
    std::string format = "text";
    std::string out;
};

Predictor load_predictor(const PredictArgs& a) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(a.model));
    } catch (const nlohmann::json::parse_error& ex) {
        throw DataError("'" + a.model + "' is not valid JSON: " + ex.what());
    }
    auto p = Predictor::from_json(j);
    p.set_monte_carlo(a.mc_samples.value_or(p.mc_samples()), a.seed);
    return p;
}

int run_predict(const PredictArgs& a) {
    auto p = load_predictor(a);
    Dataset data = load_csv(a.data);
    auto preds = p.predict(data);
    std::ostringstream os;
    os << "row,mean,variance";
    std::size_t states = p.discrete() && !preds.empty() ? preds.front().probabilities.size() : 0;
    for (std::size_t k = 0; k < states; ++k) os << ",p" << k;
    os << "\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
        os << i << "," << format_number(preds[i].mean) << "," << format_number(preds[i].variance);
        for (double pr : preds[i].probabilities) os << "," << format_number(pr);
        os << "\n";
    }
    write_output(os.str(), a.out);
    return kExitOk;
}

int run_evaluate(const PredictArgs& a) {
    auto p = load_predictor(a);
    Dataset data = load_csv(a.data);
    double loss = validation_loss(p, data);
    std::string metric = p.discrete() ? "nll" : "mse";
    std::string text;
    if (a.format == "json") {
        nlohmann::json j{{"metric", metric}, {"loss", loss}, {"rows", data.rows()}};
        text = j.dump(2) + "\n";
    } else {
        text = metric + ": " + format_number(loss) + "\nrows: " + std::to_string(data.rows()) + "\n";
    }
    write_output(text, a.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::string config;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    std::optional<std::size_t> sample;
    std::optional<double> env_value;
    std::uint64_t stream = 0;
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    ExperimentConfig cfg;
    if (!a.config.empty())
        for (const auto& [k, v] : load_key_values(a.config)) apply_experiment_setting(cfg, k, v);
    for (const auto& s : a.sets) {
        auto [k, v] = split_setting(s);
        apply_experiment_setting(cfg, k, v);
    }
    if (!a.scenario.empty()) cfg.scenario = parse_scenario(a.scenario);
    cfg.seed = a.seed;
    if (a.sample) {
        write_output(format_csv(scenario_sample(cfg, *a.sample, a.env_value, a.stream)), a.out);
        return kExitOk;
    }
    if (a.env_value) throw UsageError("--env-value needs --sample");
    write_output(format_results_csv(run_experiment(cfg)), a.out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identification and stable prediction under dataset shift"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    IdentifyArgs ia;
    auto* identify_cmd = app.add_subcommand("identify", "Express an interventional query over the observational joint");
    identify_cmd->add_option("--graph", ia.graph, "Graph file")->required()->check(CLI::ExistingFile);
    identify_cmd->add_option("--do", ia.intervene, "Intervened variables, comma separated");
    identify_cmd->add_option("--on", ia.outcome, "Outcome variables, comma separated")->required();
    identify_cmd->add_option("--given", ia.condition, "Conditioning variables, comma separated");
    identify_cmd->add_option("--format", ia.format)->check(CLI::IsMember({"text", "json"}));
    identify_cmd->add_option("--out", ia.out, "Output file (default stdout)");

    SurgeryArgs sa;
    auto* surgery_cmd = app.add_subcommand("surgery", "Search for the best stable estimator of a target");
    surgery_cmd->add_option("--graph", sa.graph, "Selection diagram file")->required()->check(CLI::ExistingFile);
    surgery_cmd->add_option("--target", sa.target, "Target variable (default: the graph file's target)");
    surgery_cmd->add_option("--train", sa.train, "Training CSV")->required()->check(CLI::ExistingFile);
    surgery_cmd->add_option("--valid", sa.valid, "Validation CSV")->required()->check(CLI::ExistingFile);
    surgery_cmd->add_option("--config", sa.config, "key=value settings file")->check(CLI::ExistingFile);
    surgery_cmd->add_option("--set", sa.sets, "Setting override key=value");
    surgery_cmd->add_option("--seed", sa.seed, "Random seed")->required();
    surgery_cmd->add_option("--format", sa.format)->check(CLI::IsMember({"text", "json"}));
    surgery_cmd->add_option("--out", sa.out, "Report file (default stdout)");
    surgery_cmd->add_option("--model-out", sa.model_out, "Write the chosen predictor as JSON");

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the kernels of an expression");
    fit_cmd->add_option("--expr", fa.expr, "Expression text")->required();
    fit_cmd->add_option("--target", fa.target, "Target variable")->required();
    fit_cmd->add_option("--train", fa.train, "Training CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--config", fa.config, "key=value settings file")->check(CLI::ExistingFile);
    fit_cmd->add_option("--set", fa.sets, "Setting override key=value");
    fit_cmd->add_option("--seed", fa.seed, "Random seed")->required();
    fit_cmd->add_option("--out", fa.out, "Predictor JSON file (default stdout)");

    PredictArgs pa;
    auto* predict_cmd = app.add_subcommand("predict", "Predict the target for every row");
    PredictArgs ea;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a predictor on labelled data");
    for (auto [cmd, args] : {std::pair{predict_cmd, &pa}, std::pair{evaluate_cmd, &ea}}) {
        cmd->add_option("--model", args->model, "Predictor JSON")->required()->check(CLI::ExistingFile);
        cmd->add_option("--data", args->data, "Data CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", args->seed, "Monte Carlo seed")->required();
        cmd->add_option("--mc-samples", args->mc_samples, "Monte Carlo draws per row");
        cmd->add_option("--out", args->out, "Output file (default stdout)");
    }
    evaluate_cmd->add_option("--format", ea.format)->check(CLI::IsMember({"text", "json"}));

    SimulateArgs ma;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a shift experiment or sample one environment");
    simulate_cmd->add_option("--scenario", ma.scenario, "mutable-A or target-shift");
    simulate_cmd->add_option("--config", ma.config, "key=value experiment file")->check(CLI::ExistingFile);
    simulate_cmd->add_option("--set", ma.sets, "Setting override key=value");
    simulate_cmd->add_option("--seed", ma.seed, "Random seed")->required();
    simulate_cmd->add_option("--sample", ma.sample, "Emit N rows of one environment instead of running");
    simulate_cmd->add_option("--env-value", ma.env_value, "Value of the shifted parameter for --sample");
    simulate_cmd->add_option("--stream", ma.stream, "Independent sample index for --sample");
    simulate_cmd->add_option("--out", ma.out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*identify_cmd) return run_identify(ia);
        if (*surgery_cmd) return run_surgery(sa);
        if (*fit_cmd) return run_fit(fa);
        if (*predict_cmd) return run_predict(pa);
        if (*evaluate_cmd) return run_evaluate(ea);
        if (*simulate_cmd) return run_simulate(ma);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
