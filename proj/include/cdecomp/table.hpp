#ifndef CDECOMP_TABLE_HPP
#define CDECOMP_TABLE_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cdecomp/csv.hpp"
#include "cdecomp/error.hpp"

namespace cdecomp {

enum class ColumnType { Numeric, Categorical };

struct NumericColumn {
    std::vector<double> values;
};

struct CategoricalColumn {
    std::vector<std::int32_t> codes;   // index into levels
    std::vector<std::string> levels;   // label per level, order fixed at ingest
};

class ObservationTable {
public:
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return cols_.size(); }

    bool has_column(const std::string& name) const {
        return index_.count(name) > 0;
    }

    std::size_t column_index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("table: no column named '" + name + "'");
        return it->second;
    }

    const std::string& name(std::size_t idx) const { return names_.at(idx); }

    ColumnType type(std::size_t idx) const {
        return std::holds_alternative<NumericColumn>(cols_.at(idx)) ? ColumnType::Numeric
                                                                    : ColumnType::Categorical;
    }
    ColumnType type(const std::string& name) const { return type(column_index(name)); }

    const std::vector<double>& numeric(std::size_t idx) const {
        auto* c = std::get_if<NumericColumn>(&cols_.at(idx));
        if (!c) throw ConfigError("table: column '" + names_[idx] + "' is not numeric");
        return c->values;
    }
    const std::vector<double>& numeric(const std::string& name) const {
        return numeric(column_index(name));
    }

    const CategoricalColumn& categorical(std::size_t idx) const {
        auto* c = std::get_if<CategoricalColumn>(&cols_.at(idx));
        if (!c) throw ConfigError("table: column '" + names_[idx] + "' is not categorical");
        return *c;
    }
    const CategoricalColumn& categorical(const std::string& name) const {
        return categorical(column_index(name));
    }

    void add_numeric(const std::string& name, std::vector<double> values) {
        check_new_column(name, values.size());
        index_[name] = cols_.size();
        names_.push_back(name);
        cols_.emplace_back(NumericColumn{std::move(values)});
    }

    void add_categorical(const std::string& name, std::vector<std::int32_t> codes,
                         std::vector<std::string> levels) {
        check_new_column(name, codes.size());
        for (auto c : codes) {
            if (c < 0 || static_cast<std::size_t>(c) >= levels.size())
                throw ConfigError("table: code out of range for column '" + name + "'");
        }
        index_[name] = cols_.size();
        names_.push_back(name);
        cols_.emplace_back(CategoricalColumn{std::move(codes), std::move(levels)});
    }

    // New table holding the given rows (with repetition); level sets are kept
    // verbatim so resamples stay schema-compatible with the original.
    ObservationTable select_rows(const std::vector<std::size_t>& rows) const {
        ObservationTable out;
        for (std::size_t j = 0; j < cols_.size(); ++j) {
            if (const auto* num = std::get_if<NumericColumn>(&cols_[j])) {
                std::vector<double> v;
                v.reserve(rows.size());
                for (auto r : rows) v.push_back(num->values[r]);
                out.add_numeric(names_[j], std::move(v));
            } else {
                const auto& cat = std::get<CategoricalColumn>(cols_[j]);
                std::vector<std::int32_t> v;
                v.reserve(rows.size());
                for (auto r : rows) v.push_back(cat.codes[r]);
                out.add_categorical(names_[j], std::move(v), cat.levels);
            }
        }
        return out;
    }

private:
    void check_new_column(const std::string& name, std::size_t len) {
        if (index_.count(name)) throw ConfigError("table: duplicate column '" + name + "'");
        if (!cols_.empty() && len != n_rows_)
            throw ConfigError("table: column '" + name + "' has mismatched length");
        n_rows_ = len;
    }

    std::vector<std::string> names_;
    std::vector<std::variant<NumericColumn, CategoricalColumn>> cols_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t n_rows_ = 0;
};

struct ColumnSpec {
    std::string name;
    ColumnType type = ColumnType::Numeric;
    std::vector<std::string> levels; // categorical only; empty = levels taken from data
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0; // complete-case drops over the declared columns
};

struct LoadResult {
    ObservationTable table;
    LoadReport report;
};

namespace detail {

inline bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

enum class NumericParse { Value, Missing, Bad };

inline NumericParse parse_numeric(const std::string& s, double& out) {
    if (is_missing_token(s)) return NumericParse::Missing;
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return NumericParse::Bad;
    while (*end == ' ' || *end == '\t') ++end;
    if (*end != '\0') return NumericParse::Bad;
    if (std::isnan(v)) return NumericParse::Missing; // literal NaN counts as missing
    out = v;
    return NumericParse::Value;
}

} // namespace detail

// Ingest the declared columns from an RFC-4180 file. Rows with a missing
// value in any declared column are dropped (complete-case) and counted.
inline LoadResult load_table(const std::vector<std::vector<std::string>>& raw,
                             const std::vector<ColumnSpec>& schema) {
    if (raw.empty()) throw IngestError("load_table: input has no header row");
    const auto& header = raw.front();
    std::vector<std::size_t> src(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto it = std::find(header.begin(), header.end(), schema[j].name);
        if (it == header.end())
            throw IngestError("load_table: column '" + schema[j].name + "' not found in header");
        src[j] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::vector<double>> num_vals(schema.size());
    std::vector<std::vector<std::int32_t>> cat_codes(schema.size());
    std::vector<std::vector<std::string>> cat_levels(schema.size());
    std::vector<std::unordered_map<std::string, std::int32_t>> cat_lookup(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (schema[j].type == ColumnType::Categorical) {
            for (const auto& lv : schema[j].levels) {
                if (cat_lookup[j].count(lv))
                    throw ConfigError("load_table: duplicate level '" + lv + "' declared for '" +
                                      schema[j].name + "'");
                cat_lookup[j][lv] = static_cast<std::int32_t>(cat_levels[j].size());
                cat_levels[j].push_back(lv);
            }
        }
    }

    LoadReport report;
    std::vector<double> num_row(schema.size());
    std::vector<std::int32_t> code_row(schema.size());
    for (std::size_t i = 1; i < raw.size(); ++i) {
        const auto& row = raw[i];
        if (row.size() != header.size())
            throw IngestError("load_table: row " + std::to_string(i + 1) + " has " +
                              std::to_string(row.size()) + " fields, header has " +
                              std::to_string(header.size()));
        ++report.rows_read;
        bool missing = false;
        for (std::size_t j = 0; j < schema.size() && !missing; ++j) {
            const std::string& cell = row[src[j]];
            if (schema[j].type == ColumnType::Numeric) {
                double v = 0.0;
                switch (detail::parse_numeric(cell, v)) {
                case detail::NumericParse::Missing: missing = true; break;
                case detail::NumericParse::Bad:
                    throw IngestError("load_table: row " + std::to_string(i + 1) +
                                      ": cannot parse '" + cell + "' as numeric for column '" +
                                      schema[j].name + "'");
                case detail::NumericParse::Value: num_row[j] = v; break;
                }
            } else {
                if (detail::is_missing_token(cell)) {
                    missing = true;
                } else {
                    auto it = cat_lookup[j].find(cell);
                    if (it == cat_lookup[j].end()) {
                        if (!schema[j].levels.empty())
                            throw IngestError("load_table: row " + std::to_string(i + 1) +
                                              ": value '" + cell + "' outside declared levels of '" +
                                              schema[j].name + "'");
                        std::int32_t code = static_cast<std::int32_t>(cat_levels[j].size());
                        cat_lookup[j].emplace(cell, code);
                        cat_levels[j].push_back(cell);
                        code_row[j] = code;
                    } else {
                        code_row[j] = it->second;
                    }
                }
            }
        }
        if (missing) {
            ++report.rows_dropped;
            continue;
        }
        for (std::size_t j = 0; j < schema.size(); ++j) {
            if (schema[j].type == ColumnType::Numeric)
                num_vals[j].push_back(num_row[j]);
            else
                cat_codes[j].push_back(code_row[j]);
        }
    }

    ObservationTable table;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (schema[j].type == ColumnType::Numeric)
            table.add_numeric(schema[j].name, std::move(num_vals[j]));
        else
            table.add_categorical(schema[j].name, std::move(cat_codes[j]), std::move(cat_levels[j]));
    }
    return LoadResult{std::move(table), report};
}

inline LoadResult load_table_file(const std::string& path, const std::vector<ColumnSpec>& schema) {
    return load_table(read_csv_file(path), schema);
}

} // namespace cdecomp

#endif
