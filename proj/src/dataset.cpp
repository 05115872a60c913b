#include "gsurgery/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gsurgery {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Dataset::Dataset(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (const auto& c : columns_) {
        if (!data_.emplace(c, std::vector<double>{}).second) throw DataError("duplicate column '" + c + "'");
    }
}

void Dataset::add_column(const std::string& name, std::vector<double> values) {
    if (has_column(name)) throw DataError("duplicate column '" + name + "'");
    if (!columns_.empty() && values.size() != rows_)
        throw DataError("column '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                        std::to_string(rows_));
    rows_ = values.size();
    columns_.push_back(name);
    data_[name] = std::move(values);
}

void Dataset::add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size()) throw DataError("row width does not match the column count");
    for (std::size_t i = 0; i < row.size(); ++i) data_[columns_[i]].push_back(row[i]);
    ++rows_;
}

const std::vector<double>& Dataset::column(const std::string& name) const {
    auto it = data_.find(name);
    if (it == data_.end()) throw DataError("dataset has no column '" + name + "'");
    return it->second;
}

void Dataset::set_categorical(const std::string& name, int cardinality, std::vector<std::string> levels) {
    if (!has_column(name)) throw DataError("dataset has no column '" + name + "'");
    if (cardinality < 1) throw DataError("categorical column '" + name + "' needs at least one state");
    if (!levels.empty() && static_cast<int>(levels.size()) != cardinality)
        throw DataError("level count of '" + name + "' does not match its cardinality");
    for (double v : data_[name]) {
        if (v != std::floor(v) || v < 0 || v >= cardinality)
            throw DataError("column '" + name + "' holds a value outside 0.." + std::to_string(cardinality - 1));
    }
    cards_[name] = cardinality;
    if (!levels.empty()) levels_[name] = std::move(levels);
}

int Dataset::cardinality(const std::string& name) const {
    auto it = cards_.find(name);
    if (it == cards_.end()) throw DataError("column '" + name + "' is not categorical");
    return it->second;
}

const std::vector<std::string>& Dataset::levels(const std::string& name) const {
    static const std::vector<std::string> none;
    auto it = levels_.find(name);
    return it == levels_.end() ? none : it->second;
}

void Dataset::set_weights(std::vector<double> w) {
    if (!w.empty() && w.size() != rows_) throw DataError("weight count does not match the row count");
    for (double x : w)
        if (!(x >= 0)) throw DataError("row weights must be non-negative");
    weights_ = std::move(w);
}

std::map<std::string, double> Dataset::row(std::size_t i) const {
    std::map<std::string, double> r;
    for (const auto& c : columns_) r[c] = data_.at(c)[i];
    return r;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
    Dataset out(columns_);
    for (const auto& c : columns_) {
        auto& dst = out.data_[c];
        const auto& src = data_.at(c);
        dst.reserve(idx.size());
        for (auto i : idx) dst.push_back(src.at(i));
    }
    out.rows_ = idx.size();
    out.cards_ = cards_;
    out.levels_ = levels_;
    out.environment_ = environment_;
    if (!weights_.empty()) {
        for (auto i : idx) out.weights_.push_back(weights_.at(i));
    }
    return out;
}

Dataset Dataset::select_columns(const std::vector<std::string>& names) const {
    Dataset out;
    for (const auto& c : names) out.add_column(c, column(c));
    if (out.columns_.empty()) out.rows_ = rows_;
    for (const auto& c : names) {
        if (cards_.count(c)) out.cards_[c] = cards_.at(c);
        if (levels_.count(c)) out.levels_[c] = levels_.at(c);
    }
    out.weights_ = weights_;
    if (environment_ && std::find(names.begin(), names.end(), *environment_) != names.end())
        out.environment_ = environment_;
    return out;
}

void Dataset::append(const Dataset& other) {
    if (other.columns_ != columns_) throw DataError("cannot append a dataset with different columns");
    if (weights_.empty() != other.weights_.empty()) throw DataError("cannot mix weighted and unweighted rows");
    for (const auto& c : columns_) {
        auto& dst = data_[c];
        const auto& src = other.data_.at(c);
        dst.insert(dst.end(), src.begin(), src.end());
    }
    weights_.insert(weights_.end(), other.weights_.begin(), other.weights_.end());
    for (const auto& [c, k] : other.cards_) cards_[c] = std::max(cards_[c], k);
    rows_ += other.rows_;
}

void Dataset::require_columns(const VarSet& vars) const {
    for (const auto& v : vars)
        if (!has_column(v)) throw DataError("dataset has no column '" + v + "'");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("line " + std::to_string(lineno) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw DataError("line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

namespace {

std::vector<std::string> list_value(const std::string& v) {
    std::vector<std::string> out;
    for (const auto& part : split(v, ',')) {
        auto t = trim(part);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
    double v = 0;
    auto t = trim(s);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw DataError("line " + std::to_string(line) + ": column '" + column + "' has non-numeric value '" + t + "'");
    return v;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

DatasetConfig parse_dataset_config(const std::string& text) {
    DatasetConfig cfg;
    for (const auto& [k, v] : parse_key_values(text)) {
        if (k == "categorical") {
            for (const auto& c : list_value(v)) cfg.categorical.insert(c);
        } else if (k.rfind("levels.", 0) == 0) {
            auto col = k.substr(7);
            cfg.levels[col] = list_value(v);
            cfg.categorical.insert(col);
        } else if (k == "environment") {
            cfg.environment = v;
        } else {
            throw DataError("unknown dataset setting '" + k + "'");
        }
    }
    return cfg;
}

Dataset parse_csv(const std::string& text, const DatasetConfig& config) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV input");
    std::vector<std::string> header;
    for (const auto& h : split(trim(line), ',')) header.push_back(trim(h));
    Dataset d(header);
    std::vector<std::map<std::string, int>> level_index(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto it = config.levels.find(header[c]);
        if (it == config.levels.end()) continue;
        for (std::size_t i = 0; i < it->second.size(); ++i) level_index[c][it->second[i]] = static_cast<int>(i);
    }
    std::size_t lineno = 1;
    std::vector<double> row(header.size());
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
        for (std::size_t c = 0; c < header.size(); ++c) {
            auto cell = trim(cells[c]);
            if (!level_index[c].empty()) {
                auto it = level_index[c].find(cell);
                if (it != level_index[c].end()) {
                    row[c] = it->second;
                    continue;
                }
            }
            row[c] = parse_number(cell, lineno, header[c]);
        }
        d.add_row(row);
    }
    for (const auto& col : config.categorical) {
        if (!d.has_column(col)) throw DataError("categorical column '" + col + "' is not in the CSV header");
        auto lv = config.levels.count(col) ? config.levels.at(col) : std::vector<std::string>{};
        int card = static_cast<int>(lv.size());
        if (lv.empty()) {
            for (double v : d.column(col)) card = std::max(card, static_cast<int>(v) + 1);
            card = std::max(card, 1);
        }
        d.set_categorical(col, card, lv);
    }
    if (config.environment) {
        if (!d.has_column(*config.environment))
            throw DataError("environment column '" + *config.environment + "' is not in the CSV header");
        d.set_environment_column(config.environment);
    }
    return d;
}

Dataset load_csv(const std::string& path, const std::optional<DatasetConfig>& config) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    DatasetConfig cfg;
    if (config) {
        cfg = *config;
    } else if (std::ifstream side(path + ".cfg"); side) {
        std::stringstream s2;
        s2 << side.rdbuf();
        cfg = parse_dataset_config(s2.str());
    }
    return parse_csv(ss.str(), cfg);
}

std::string format_csv(const Dataset& d) {
    std::string out;
    for (std::size_t c = 0; c < d.columns().size(); ++c) out += (c ? "," : "") + d.columns()[c];
    out += "\n";
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t c = 0; c < d.columns().size(); ++c) {
            const auto& name = d.columns()[c];
            double v = d.column(name)[r];
            const auto& lv = d.levels(name);
            if (c) out += ",";
            out += lv.empty() ? format_number(v) : lv.at(static_cast<std::size_t>(v));
        }
        out += "\n";
    }
    return out;
}

void save_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << format_csv(d);
}

}  // namespace gsurgery
