#ifndef CDECOMP_CONFOUNDER_HPP
#define CDECOMP_CONFOUNDER_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cdecomp/config.hpp"
#include "cdecomp/glm.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

// Sequential model of the confounder block given (group, covariates, ...):
// each column is modelled conditionally on the group, the covariates, any
// extra conditioning columns, and the confounder columns before it. All
// factors categorical -> exact enumeration over the joint support; any
// continuous factor -> seeded sequential sampling.
class ConfounderModel {
public:
    struct Factor {
        std::string column;
        std::size_t col_idx = 0;
        bool categorical = false;
        MultinomialModel cat;
        LinearModel lin;
        double sd = 0.0; // residual spread for continuous factors
    };

    static ConfounderModel fit_chain(const ObservationTable& table, const AnalysisConfig& cfg,
                                     const std::vector<std::string>& columns,
                                     const std::vector<std::string>& extra_conditioning) {
        ConfounderModel model;
        std::vector<std::string> before; // previously-modelled confounder columns
        for (const auto& col : columns) {
            DesignSpec spec;
            spec.intercept().main(cfg.group);
            spec.reference_levels[cfg.group] = cfg.reference_level;
            for (const auto& c : cfg.covariates) spec.main(c);
            for (const auto& e : extra_conditioning) spec.main(e);
            for (const auto& b : before) spec.main(b);

            Factor f;
            f.column = col;
            f.col_idx = table.column_index(col);
            f.categorical = table.type(f.col_idx) == ColumnType::Categorical;
            if (f.categorical) {
                f.cat = fit_multinomial_logit(table, col, spec);
            } else {
                f.lin = fit_linear_model(table, col, spec);
                f.sd = std::sqrt(f.lin.sigma2);
            }
            model.factors_.push_back(std::move(f));
            before.push_back(col);
        }
        return model;
    }

    bool empty() const { return factors_.empty(); }

    bool exact() const {
        for (const auto& f : factors_)
            if (!f.categorical) return false;
        return true;
    }

    const std::vector<Factor>& factors() const { return factors_; }

    // Enumerate the joint categorical support. For every combination the
    // confounder columns are overridden on `row` and fn(probability) is
    // invoked; probabilities sum to 1 over the support for any base row.
    template <class Fn>
    void for_each_combo(RowView& row, Fn&& fn) const {
        scratch_.resize(factors_.size());
        combo_recurse(0, row, 1.0, fn);
    }

    // One sequential draw; overrides every factor column on `row`.
    void sample_into(RowView& row, std::mt19937_64& rng) const {
        for (const auto& f : factors_) {
            if (f.categorical) {
                thread_local std::vector<double> probs;
                probs.resize(f.cat.levels.size());
                f.cat.probabilities(row, probs.data());
                std::uniform_real_distribution<double> unif(0.0, 1.0);
                double u = unif(rng);
                double cum = 0.0;
                std::int32_t pick = static_cast<std::int32_t>(probs.size()) - 1;
                for (std::size_t l = 0; l < probs.size(); ++l) {
                    cum += probs[l];
                    if (u <= cum) {
                        pick = static_cast<std::int32_t>(l);
                        break;
                    }
                }
                row.override_code(f.col_idx, pick);
            } else {
                double mu = f.lin.predict(row);
                std::normal_distribution<double> gauss(mu, f.sd);
                row.override_numeric(f.col_idx, gauss(rng));
            }
        }
    }

private:
    template <class Fn>
    void combo_recurse(std::size_t j, RowView& row, double prob, Fn& fn) const {
        if (j == factors_.size()) {
            fn(prob);
            return;
        }
        const auto& f = factors_[j];
        if (!f.categorical)
            throw EstimationError("confounder: exact enumeration hit continuous column '" +
                                  f.column + "'");
        auto& probs = scratch_[j];
        probs.resize(f.cat.levels.size());
        f.cat.probabilities(row, probs.data());
        for (std::size_t l = 0; l < probs.size(); ++l) {
            row.override_code(f.col_idx, static_cast<std::int32_t>(l));
            combo_recurse(j + 1, row, prob * probs[l], fn);
        }
    }

    std::vector<Factor> factors_;
    mutable std::vector<std::vector<double>> scratch_;
};

} // namespace cdecomp

#endif
