#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsurgery/graph.hpp"

namespace gsurgery {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Column-major table of reals. Categorical columns hold state indices
/// 0..k-1; their level names, when known, are kept for I/O.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<std::string> columns);

    void add_column(const std::string& name, std::vector<double> values);
    void add_row(const std::vector<double>& row);

    const std::vector<std::string>& columns() const { return columns_; }
    bool has_column(const std::string& name) const { return data_.count(name) > 0; }
    const std::vector<double>& column(const std::string& name) const;
    std::size_t rows() const { return rows_; }

    void set_categorical(const std::string& name, int cardinality, std::vector<std::string> levels = {});
    bool is_categorical(const std::string& name) const { return cards_.count(name) > 0; }
    int cardinality(const std::string& name) const;
    const std::vector<std::string>& levels(const std::string& name) const;

    /// Row weights for population-level fitting; empty means every row counts once.
    void set_weights(std::vector<double> w);
    const std::vector<double>& weights() const { return weights_; }
    double weight(std::size_t row) const { return weights_.empty() ? 1.0 : weights_[row]; }

    void set_environment_column(std::optional<std::string> name) { environment_ = std::move(name); }
    const std::optional<std::string>& environment_column() const { return environment_; }

    std::map<std::string, double> row(std::size_t i) const;
    Dataset select_rows(const std::vector<std::size_t>& idx) const;
    Dataset select_columns(const std::vector<std::string>& names) const;
    /// Appends the rows of `other`, which must have the same columns.
    void append(const Dataset& other);

    void require_columns(const VarSet& vars) const;

private:
    std::vector<std::string> columns_;
    std::map<std::string, std::vector<double>> data_;
    std::map<std::string, int> cards_;
    std::map<std::string, std::vector<std::string>> levels_;
    std::vector<double> weights_;
    std::optional<std::string> environment_;
    std::size_t rows_ = 0;
};

/// Sidecar settings read from `key=value` lines:
///   categorical=A,B        columns holding discrete states
///   levels.A=lo,hi         ordered level names of a categorical column
///   environment=E          environment label column
struct DatasetConfig {
    VarSet categorical;
    std::map<std::string, std::vector<std::string>> levels;
    std::optional<std::string> environment;
};

/// Parses `key=value` lines ('#' comments, blank lines ignored).
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_values(const std::string& path);

DatasetConfig parse_dataset_config(const std::string& text);

Dataset parse_csv(const std::string& text, const DatasetConfig& config = {});
/// Reads `path`, plus `path + ".cfg"` when that sidecar exists and no config is given.
Dataset load_csv(const std::string& path, const std::optional<DatasetConfig>& config = std::nullopt);
std::string format_csv(const Dataset& d);
void save_csv(const Dataset& d, const std::string& path);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

}  // namespace gsurgery
