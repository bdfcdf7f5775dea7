#ifndef CDECOMP_CONFIG_HPP
#define CDECOMP_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdecomp/error.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

enum class Scenario { JointMediators, InterposedConfounder };

inline std::string to_string(Scenario s) {
    return s == Scenario::JointMediators ? "joint_mediators" : "interposed_confounder";
}

struct DifferentialEffect {
    std::string group_level;
    std::string mediator;
};

struct AnalysisConfig {
    std::string group;
    std::string reference_level;
    std::string outcome;
    std::vector<std::string> mediators;
    std::vector<std::string> confounders_pre;  // X1: realized before the mediators
    std::vector<std::string> confounders_post; // X2: between the mediators (interposed scenario)
    std::vector<std::string> covariates;       // C: baseline covariates
    Scenario scenario = Scenario::JointMediators;

    // group-by-mediator interaction terms in the outcome model
    std::vector<DifferentialEffect> differential_effects;
    // extra declared interactions for the outcome model, as column pairs
    std::vector<std::pair<std::string, std::string>> outcome_interactions;

    std::optional<double> weight_trim_pct; // e.g. 0.99 caps weights at their 99th percentile
    int min_cell = 10;
    int q_draws = 200;                  // draws per row for continuous confounder integration
    bool regression_vector_x = false;   // opt-in composite rule for multi-column X

    std::vector<std::string> confounders() const {
        std::vector<std::string> all = confounders_pre;
        all.insert(all.end(), confounders_post.begin(), confounders_post.end());
        return all;
    }
};

struct PositivityCell {
    std::string group_level;
    std::string cell; // "covar=level,covar=level" joint label; empty for group-size findings
    std::size_t count = 0;
};

struct ValidationReport {
    std::vector<std::string> problems;        // structural issues (also thrown as ConfigError)
    std::vector<PositivityCell> small_groups; // group levels under min_cell
    std::vector<PositivityCell> empty_cells;  // empty (group x covariate-cell) combinations
    bool positivity_ok() const { return small_groups.empty() && empty_cells.empty(); }
};

namespace detail {

inline void require_disjoint_roles(const AnalysisConfig& cfg) {
    std::map<std::string, std::string> seen;
    auto claim = [&](const std::string& col, const std::string& role) {
        if (col.empty()) throw ConfigError("config: empty column name in role " + role);
        auto [it, inserted] = seen.emplace(col, role);
        if (!inserted)
            throw ConfigError("config: column '" + col + "' assigned to both " + it->second +
                              " and " + role);
    };
    claim(cfg.group, "group");
    claim(cfg.outcome, "outcome");
    for (const auto& m : cfg.mediators) claim(m, "mediators");
    for (const auto& x : cfg.confounders_pre) claim(x, "confounders_pre");
    for (const auto& x : cfg.confounders_post) claim(x, "confounders_post");
    for (const auto& c : cfg.covariates) claim(c, "covariates");
}

} // namespace detail

// Structural problems throw ConfigError. Positivity findings come back in the
// report; the caller decides whether they are fatal (strict mode) or warnings.
inline ValidationReport validate_config(const AnalysisConfig& cfg, const ObservationTable& table) {
    detail::require_disjoint_roles(cfg);
    if (cfg.mediators.empty()) throw ConfigError("config: at least one mediator is required");
    if (cfg.min_cell < 1) throw ConfigError("config: min_cell must be >= 1");
    if (cfg.q_draws < 1) throw ConfigError("config: q_draws must be >= 1");
    if (cfg.weight_trim_pct && (*cfg.weight_trim_pct <= 0.0 || *cfg.weight_trim_pct > 1.0))
        throw ConfigError("config: weight_trim_pct must lie in (0, 1]");
    if (cfg.scenario == Scenario::InterposedConfounder && cfg.confounders_post.empty() &&
        !cfg.confounders_pre.empty())
        throw ConfigError("config: interposed_confounder scenario requires confounders_post "
                          "when any confounders are declared");

    auto require_column = [&](const std::string& col, ColumnType want, const char* role) {
        std::size_t idx = table.column_index(col); // throws if absent
        if (want == ColumnType::Numeric && table.type(idx) != ColumnType::Numeric)
            throw ConfigError(std::string("config: ") + role + " column '" + col +
                              "' must be numeric");
        if (want == ColumnType::Categorical && table.type(idx) != ColumnType::Categorical)
            throw ConfigError(std::string("config: ") + role + " column '" + col +
                              "' must be categorical");
    };
    require_column(cfg.group, ColumnType::Categorical, "group");
    require_column(cfg.outcome, ColumnType::Numeric, "outcome");
    for (const auto& m : cfg.mediators) table.column_index(m);
    for (const auto& x : cfg.confounders()) table.column_index(x);
    for (const auto& c : cfg.covariates) table.column_index(c);

    const auto& grp = table.categorical(cfg.group);
    if (grp.levels.size() < 2) throw ConfigError("config: group column needs at least 2 levels");
    std::int32_t ref = -1;
    for (std::size_t l = 0; l < grp.levels.size(); ++l)
        if (grp.levels[l] == cfg.reference_level) ref = static_cast<std::int32_t>(l);
    if (ref < 0)
        throw ConfigError("config: reference level '" + cfg.reference_level +
                          "' is not a level of '" + cfg.group + "'");
    for (const auto& de : cfg.differential_effects) {
        bool found = false;
        for (const auto& lv : grp.levels) found = found || lv == de.group_level;
        if (!found)
            throw ConfigError("config: differential effect names unknown group level '" +
                              de.group_level + "'");
        bool med = false;
        for (const auto& m : cfg.mediators) med = med || m == de.mediator;
        if (!med)
            throw ConfigError("config: differential effect names non-mediator column '" +
                              de.mediator + "'");
    }

    ValidationReport report;

    // Group-size screen.
    std::vector<std::size_t> group_count(grp.levels.size(), 0);
    for (auto code : grp.codes) ++group_count[static_cast<std::size_t>(code)];
    for (std::size_t l = 0; l < grp.levels.size(); ++l) {
        if (group_count[l] < static_cast<std::size_t>(cfg.min_cell))
            report.small_groups.push_back({grp.levels[l], "", group_count[l]});
        if (group_count[l] == 0)
            throw ConfigError("config: group level '" + grp.levels[l] + "' has no observations");
    }

    // Empirical positivity screen over joint cells of the categorical covariates.
    std::vector<std::size_t> cat_cov;
    for (const auto& c : cfg.covariates) {
        std::size_t idx = table.column_index(c);
        if (table.type(idx) == ColumnType::Categorical) cat_cov.push_back(idx);
    }
    if (!cat_cov.empty()) {
        std::size_t n_cells = 1;
        for (auto idx : cat_cov) {
            n_cells *= table.categorical(idx).levels.size();
            if (n_cells > 100000)
                throw ConfigError("config: categorical covariate support too large for the "
                                  "positivity screen");
        }
        std::vector<std::vector<std::size_t>> counts(
            grp.levels.size(), std::vector<std::size_t>(n_cells, 0));
        for (std::size_t i = 0; i < table.n_rows(); ++i) {
            std::size_t cell = 0;
            for (auto idx : cat_cov) {
                const auto& col = table.categorical(idx);
                cell = cell * col.levels.size() + static_cast<std::size_t>(col.codes[i]);
            }
            ++counts[static_cast<std::size_t>(grp.codes[i])][cell];
        }
        for (std::size_t l = 0; l < grp.levels.size(); ++l) {
            for (std::size_t cell = 0; cell < n_cells; ++cell) {
                if (counts[l][cell] > 0) continue;
                // decode the joint cell into a readable label
                std::string label;
                std::size_t rem = cell;
                std::size_t divisor = n_cells;
                for (auto idx : cat_cov) {
                    const auto& col = table.categorical(idx);
                    divisor /= col.levels.size();
                    std::size_t lv = rem / divisor;
                    rem %= divisor;
                    if (!label.empty()) label += ",";
                    label += table.name(idx) + "=" + col.levels[lv];
                }
                report.empty_cells.push_back({grp.levels[l], label, 0});
            }
        }
    }
    return report;
}

inline std::int32_t group_reference_code(const AnalysisConfig& cfg, const ObservationTable& table) {
    const auto& grp = table.categorical(cfg.group);
    for (std::size_t l = 0; l < grp.levels.size(); ++l)
        if (grp.levels[l] == cfg.reference_level) return static_cast<std::int32_t>(l);
    throw ConfigError("config: reference level '" + cfg.reference_level + "' not found");
}

inline std::vector<std::int32_t> comparison_codes(const AnalysisConfig& cfg,
                                                  const ObservationTable& table) {
    const auto& grp = table.categorical(cfg.group);
    std::int32_t ref = group_reference_code(cfg, table);
    std::vector<std::int32_t> out;
    for (std::size_t l = 0; l < grp.levels.size(); ++l)
        if (static_cast<std::int32_t>(l) != ref) out.push_back(static_cast<std::int32_t>(l));
    return out;
}

} // namespace cdecomp

#endif
