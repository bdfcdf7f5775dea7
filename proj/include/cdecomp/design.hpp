#ifndef CDECOMP_DESIGN_HPP
#define CDECOMP_DESIGN_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdecomp/error.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

struct Term {
    enum class Kind { Intercept, Main, Interaction, LevelTimesColumn };
    Kind kind = Kind::Intercept;
    std::string a;
    std::string b;
    std::string level; // LevelTimesColumn only: the level of column a that gates the term
};

// Declarative model formula. Categorical columns expand to reference-coded
// indicators; the reference is the first level unless overridden.
struct DesignSpec {
    std::vector<Term> terms;
    std::map<std::string, std::string> reference_levels;

    DesignSpec& intercept() {
        terms.push_back({Term::Kind::Intercept, "", "", ""});
        return *this;
    }
    DesignSpec& main(const std::string& col) {
        terms.push_back({Term::Kind::Main, col, "", ""});
        return *this;
    }
    DesignSpec& interaction(const std::string& a, const std::string& b) {
        terms.push_back({Term::Kind::Interaction, a, b, ""});
        return *this;
    }
    DesignSpec& level_times(const std::string& cat, const std::string& level,
                            const std::string& other) {
        terms.push_back({Term::Kind::LevelTimesColumn, cat, other, level});
        return *this;
    }
};

// Row accessor with value overrides, used to evaluate fitted models at
// counterfactual settings (forced group level, enumerated confounder values).
class RowView {
public:
    RowView(const ObservationTable& t, std::size_t row) : table_(&t), row_(row) {}

    void set_row(std::size_t row) { row_ = row; }
    std::size_t row() const { return row_; }
    const ObservationTable& table() const { return *table_; }

    void override_code(std::size_t col, std::int32_t code) {
        for (auto& o : code_overrides_)
            if (o.first == col) {
                o.second = code;
                return;
            }
        code_overrides_.emplace_back(col, code);
    }
    void override_numeric(std::size_t col, double v) {
        for (auto& o : num_overrides_)
            if (o.first == col) {
                o.second = v;
                return;
            }
        num_overrides_.emplace_back(col, v);
    }
    void clear_overrides() {
        code_overrides_.clear();
        num_overrides_.clear();
    }

    double numeric(std::size_t col) const {
        for (const auto& o : num_overrides_)
            if (o.first == col) return o.second;
        return table_->numeric(col)[row_];
    }
    std::int32_t code(std::size_t col) const {
        for (const auto& o : code_overrides_)
            if (o.first == col) return o.second;
        return table_->categorical(col).codes[row_];
    }

private:
    const ObservationTable* table_;
    std::size_t row_;
    std::vector<std::pair<std::size_t, std::int32_t>> code_overrides_;
    std::vector<std::pair<std::size_t, double>> num_overrides_;
};

namespace detail {

struct Atom {
    std::size_t col = 0;
    bool indicator = false;
    std::int32_t level = 0;       // indicator atoms
    std::int32_t n_levels = 0;    // level count at bind time, for unseen-level checks
};

struct DesignColumn {
    std::vector<Atom> atoms; // empty = intercept
    std::string name;
};

} // namespace detail

// A DesignSpec resolved against a concrete table: fixed column indices, fixed
// categorical level sets, fixed design-column order.
class BoundDesign {
public:
    static BoundDesign bind(const DesignSpec& spec, const ObservationTable& table) {
        BoundDesign d;
        d.spec_ = spec;
        for (const auto& term : spec.terms) {
            switch (term.kind) {
            case Term::Kind::Intercept:
                d.cols_.push_back({{}, "(intercept)"});
                break;
            case Term::Kind::Main:
                for (const auto& piece : expand(term.a, spec, table))
                    d.cols_.push_back({{piece.atom}, piece.name});
                break;
            case Term::Kind::Interaction:
                for (const auto& pa : expand(term.a, spec, table))
                    for (const auto& pb : expand(term.b, spec, table))
                        d.cols_.push_back({{pa.atom, pb.atom}, pa.name + ":" + pb.name});
                break;
            case Term::Kind::LevelTimesColumn: {
                std::size_t ci = table.column_index(term.a);
                const auto& cat = table.categorical(ci);
                std::int32_t lv = find_level(cat, term.level, term.a);
                detail::Atom gate{ci, true, lv, static_cast<std::int32_t>(cat.levels.size())};
                std::string gate_name = term.a + "=" + term.level;
                for (const auto& pb : expand(term.b, spec, table))
                    d.cols_.push_back({{gate, pb.atom}, gate_name + ":" + pb.name});
                break;
            }
            }
        }
        return d;
    }

    std::size_t n_cols() const { return cols_.size(); }

    std::vector<std::string> column_names() const {
        std::vector<std::string> out;
        out.reserve(cols_.size());
        for (const auto& c : cols_) out.push_back(c.name);
        return out;
    }
    const std::string& column_name(std::size_t j) const { return cols_[j].name; }

    void fill_row(const RowView& row, double* out) const {
        for (std::size_t j = 0; j < cols_.size(); ++j) {
            double v = 1.0;
            for (const auto& a : cols_[j].atoms) {
                if (a.indicator) {
                    std::int32_t code = row.code(a.col);
                    if (code < 0 || code >= a.n_levels)
                        throw PredictionError("design: level code " + std::to_string(code) +
                                              " of column '" + row.table().name(a.col) +
                                              "' was not present when the model was fitted");
                    v *= (code == a.level) ? 1.0 : 0.0;
                } else {
                    v *= row.numeric(a.col);
                }
                if (v == 0.0) break;
            }
            out[j] = v;
        }
    }

    Eigen::MatrixXd matrix(const ObservationTable& table) const {
        Eigen::MatrixXd X(table.n_rows(), cols_.size());
        std::vector<double> buf(cols_.size());
        RowView row(table, 0);
        for (std::size_t i = 0; i < table.n_rows(); ++i) {
            row.set_row(i);
            fill_row(row, buf.data());
            for (std::size_t j = 0; j < cols_.size(); ++j) X(i, j) = buf[j];
        }
        return X;
    }

    bool has_intercept() const {
        for (const auto& c : cols_)
            if (c.atoms.empty()) return true;
        return false;
    }

private:
    struct Piece {
        detail::Atom atom;
        std::string name;
    };

    static std::int32_t find_level(const CategoricalColumn& cat, const std::string& label,
                                   const std::string& col_name) {
        for (std::size_t l = 0; l < cat.levels.size(); ++l)
            if (cat.levels[l] == label) return static_cast<std::int32_t>(l);
        throw ConfigError("design: '" + label + "' is not a level of column '" + col_name + "'");
    }

    static std::vector<Piece> expand(const std::string& col, const DesignSpec& spec,
                                     const ObservationTable& table) {
        std::size_t ci = table.column_index(col);
        std::vector<Piece> out;
        if (table.type(ci) == ColumnType::Numeric) {
            out.push_back({detail::Atom{ci, false, 0, 0}, col});
            return out;
        }
        const auto& cat = table.categorical(ci);
        std::int32_t ref = 0;
        auto it = spec.reference_levels.find(col);
        if (it != spec.reference_levels.end()) ref = find_level(cat, it->second, col);
        for (std::size_t l = 0; l < cat.levels.size(); ++l) {
            if (static_cast<std::int32_t>(l) == ref) continue;
            out.push_back({detail::Atom{ci, true, static_cast<std::int32_t>(l),
                                        static_cast<std::int32_t>(cat.levels.size())},
                           col + "=" + cat.levels[l]});
        }
        return out;
    }

    DesignSpec spec_;
    std::vector<detail::DesignColumn> cols_;
};

} // namespace cdecomp

#endif
