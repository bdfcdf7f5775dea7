#ifndef CDECOMP_WEIGHTS_HPP
#define CDECOMP_WEIGHTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cdecomp/config.hpp"
#include "cdecomp/glm.hpp"
#include "cdecomp/stats.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

// Balancing weights for one group level: P(group=g) / P(group=g | c), carried
// per member row of that group.
struct WeightVector {
    std::int32_t group_code = 0;
    std::string group_level;
    std::vector<std::size_t> rows;
    std::vector<double> w;
    std::size_t trimmed = 0;

    double mean_weight() const {
        double s = 0.0;
        for (double x : w) s += x;
        return w.empty() ? 0.0 : s / static_cast<double>(w.size());
    }
};

inline WeightVector compute_balancing_weights(const MultinomialModel& membership,
                                              const ObservationTable& table,
                                              const AnalysisConfig& cfg, std::int32_t group_code) {
    const auto& grp = table.categorical(cfg.group);
    WeightVector out;
    out.group_code = group_code;
    out.group_level = grp.levels.at(static_cast<std::size_t>(group_code));

    std::size_t n_group = 0;
    for (auto c : grp.codes)
        if (c == group_code) ++n_group;
    if (n_group == 0)
        throw EstimationError("weights: group level '" + out.group_level + "' has no rows");
    const double marginal =
        static_cast<double>(n_group) / static_cast<double>(table.n_rows());

    RowView row(table, 0);
    std::vector<double> probs(membership.levels.size());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (grp.codes[i] != group_code) continue;
        row.set_row(i);
        membership.probabilities(row, probs.data());
        double p = probs[static_cast<std::size_t>(group_code)];
        if (p < 1e-12)
            throw PositivityError("weights: fitted P(" + cfg.group + "=" + out.group_level +
                                  " | c) below 1e-12 at row " + std::to_string(i));
        out.rows.push_back(i);
        out.w.push_back(marginal / p);
    }

    if (cfg.weight_trim_pct && !out.w.empty()) {
        double cap = quantile_of(out.w, *cfg.weight_trim_pct);
        for (auto& x : out.w) {
            if (x > cap) {
                x = cap;
                ++out.trimmed;
            }
        }
    }
    return out;
}

inline double weighted_outcome_mean(const WeightVector& wv, const ObservationTable& table,
                                    const std::string& outcome) {
    const auto& y = table.numeric(outcome);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < wv.rows.size(); ++k) {
        num += wv.w[k] * y[wv.rows[k]];
        den += wv.w[k];
    }
    if (den <= 0.0) throw EstimationError("weights: nonpositive weight total");
    return num / den;
}

// Covariate-balanced mean difference between one group and the reference.
inline double estimate_observed_disparity(const WeightVector& group_w,
                                          const WeightVector& reference_w,
                                          const ObservationTable& table,
                                          const std::string& outcome) {
    return weighted_outcome_mean(group_w, table, outcome) -
           weighted_outcome_mean(reference_w, table, outcome);
}

} // namespace cdecomp

#endif
