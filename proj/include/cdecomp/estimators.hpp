#ifndef CDECOMP_ESTIMATORS_HPP
#define CDECOMP_ESTIMATORS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cdecomp/config.hpp"
#include "cdecomp/confounder.hpp"
#include "cdecomp/glm.hpp"
#include "cdecomp/rng.hpp"
#include "cdecomp/weights.hpp"

namespace cdecomp {

enum class EstimatorKind { Weighting, WeightingDifferential, Regression, WeightingInterposed };

inline std::string to_string(EstimatorKind k) {
    switch (k) {
    case EstimatorKind::Weighting: return "weighting";
    case EstimatorKind::WeightingDifferential: return "weighting_differential";
    case EstimatorKind::Regression: return "regression";
    case EstimatorKind::WeightingInterposed: return "weighting_interposed";
    }
    return "?";
}

struct DecompositionEstimate {
    std::string group_level;
    double tau = 0.0;
    double delta = 0.0; // disparity reduction: what equalizing the mediators would remove
    double zeta = 0.0;  // disparity remaining after the equalization
    double pct_reduction = std::numeric_limits<double>::quiet_NaN();
    double counterfactual_mean = std::numeric_limits<double>::quiet_NaN();
    EstimatorKind kind = EstimatorKind::Weighting;
};

struct DecompositionResult {
    EstimatorKind kind = EstimatorKind::Weighting;
    std::vector<DecompositionEstimate> estimates; // one per comparison group, level order
    std::map<std::string, std::size_t> trim_counts;
};

namespace detail {

inline DesignSpec membership_design(const AnalysisConfig& cfg) {
    DesignSpec spec;
    spec.intercept();
    for (const auto& c : cfg.covariates) spec.main(c);
    return spec;
}

inline DesignSpec outcome_design(const AnalysisConfig& cfg) {
    DesignSpec spec;
    spec.intercept().main(cfg.group);
    spec.reference_levels[cfg.group] = cfg.reference_level;
    for (const auto& x : cfg.confounders_pre) spec.main(x);
    for (const auto& x : cfg.confounders_post) spec.main(x);
    for (const auto& m : cfg.mediators) spec.main(m);
    for (const auto& c : cfg.covariates) spec.main(c);
    for (const auto& [a, b] : cfg.outcome_interactions) spec.interaction(a, b);
    for (const auto& de : cfg.differential_effects)
        spec.level_times(cfg.group, de.group_level, de.mediator);
    return spec;
}

struct ConfounderIntegrator {
    const ConfounderModel* first = nullptr;
    const ConfounderModel* second = nullptr;

    bool empty() const {
        return (!first || first->empty()) && (!second || second->empty());
    }
    bool exact() const {
        if (first && !first->empty() && !first->exact()) return false;
        if (second && !second->empty() && !second->exact()) return false;
        return true;
    }

    double integrate(const LinearModel& om, RowView& row, int q_draws,
                     std::mt19937_64& rng) const {
        if (empty()) return om.predict(row);
        if (exact()) {
            double acc = 0.0;
            if (second && !second->empty() && first && !first->empty()) {
                first->for_each_combo(row, [&](double p1) {
                    second->for_each_combo(
                        row, [&](double p2) { acc += p1 * p2 * om.predict(row); });
                });
            } else {
                const ConfounderModel* only = (first && !first->empty()) ? first : second;
                only->for_each_combo(row, [&](double p) { acc += p * om.predict(row); });
            }
            return acc;
        }
        double acc = 0.0;
        for (int q = 0; q < q_draws; ++q) {
            if (first && !first->empty()) first->sample_into(row, rng);
            if (second && !second->empty()) second->sample_into(row, rng);
            acc += om.predict(row);
        }
        return acc / static_cast<double>(q_draws);
    }
};

// Reference-group weighted mean of the integrated outcome prediction with the
// group column forced to `group_code`.
inline double counterfactual_mean(const ObservationTable& table, const AnalysisConfig& cfg,
                                  const LinearModel& om, const ConfounderIntegrator& ci,
                                  const WeightVector& ref_weights, std::int32_t group_code,
                                  std::uint64_t seed) {
    const std::size_t group_col = table.column_index(cfg.group);
    RowView row(table, 0);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ref_weights.rows.size(); ++k) {
        const std::size_t i = ref_weights.rows[k];
        row.set_row(i);
        row.clear_overrides();
        row.override_code(group_col, group_code);
        std::mt19937_64 rng =
            make_stream(seed, (static_cast<std::uint64_t>(group_code) << 32) | 0x5eedu, i);
        double v = ci.integrate(om, row, cfg.q_draws, rng);
        num += ref_weights.w[k] * v;
        den += ref_weights.w[k];
    }
    if (den <= 0.0) throw EstimationError("counterfactual: nonpositive weight total");
    return num / den;
}

inline double pct_reduction(double delta, double tau) {
    if (tau == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * delta / tau;
}

} // namespace detail

// Weighting decomposition under the joint-mediators scenario: the entire
// confounder block sits before the mediators and is integrated out of the
// counterfactual prediction at the forced group level.
inline DecompositionResult decompose(const AnalysisConfig& cfg, const ObservationTable& table,
                                     std::uint64_t seed) {
    if (cfg.scenario != Scenario::JointMediators)
        throw ConfigError("decompose: config scenario must be joint_mediators");
    detail::require_disjoint_roles(cfg);

    DecompositionResult out;
    out.kind = cfg.differential_effects.empty() ? EstimatorKind::Weighting
                                                : EstimatorKind::WeightingDifferential;

    const std::int32_t ref = group_reference_code(cfg, table);
    auto membership = fit_multinomial_logit(table, cfg.group, detail::membership_design(cfg));
    WeightVector w0 = compute_balancing_weights(membership, table, cfg, ref);
    if (w0.trimmed) out.trim_counts[w0.group_level] = w0.trimmed;
    const double wmean0 = weighted_outcome_mean(w0, table, cfg.outcome);

    auto om = fit_linear_model(table, cfg.outcome, detail::outcome_design(cfg));

    ConfounderModel chain;
    auto xcols = cfg.confounders();
    if (!xcols.empty()) chain = ConfounderModel::fit_chain(table, cfg, xcols, {});
    detail::ConfounderIntegrator ci{&chain, nullptr};

    for (std::int32_t r : comparison_codes(cfg, table)) {
        WeightVector wr = compute_balancing_weights(membership, table, cfg, r);
        if (wr.trimmed) out.trim_counts[wr.group_level] = wr.trimmed;
        const double wmean_r = weighted_outcome_mean(wr, table, cfg.outcome);
        const double cf = detail::counterfactual_mean(table, cfg, om, ci, w0, r, seed);

        DecompositionEstimate e;
        e.group_level = wr.group_level;
        e.kind = out.kind;
        e.delta = wmean_r - cf;
        e.zeta = cf - wmean0;
        e.tau = e.delta + e.zeta;
        e.pct_reduction = detail::pct_reduction(e.delta, e.tau);
        e.counterfactual_mean = cf;
        out.estimates.push_back(e);
    }
    return out;
}

// Weighting decomposition when one confounder block is interposed between the
// first mediator and the rest: X1 | (r, c) and X2 | (r, x1, d, c).
inline DecompositionResult decompose_interposed(const AnalysisConfig& cfg,
                                                const ObservationTable& table,
                                                std::uint64_t seed) {
    if (cfg.scenario != Scenario::InterposedConfounder)
        throw ConfigError("decompose_interposed: config scenario must be interposed_confounder");
    detail::require_disjoint_roles(cfg);
    if (cfg.confounders_post.empty() && !cfg.confounders_pre.empty())
        throw ConfigError("decompose_interposed: confounders_post is empty but confounders_pre "
                          "is not; the interposed scenario places X2 after the first mediator");
    if (cfg.mediators.empty()) throw ConfigError("decompose_interposed: no mediators declared");

    DecompositionResult out;
    out.kind = EstimatorKind::WeightingInterposed;

    const std::int32_t ref = group_reference_code(cfg, table);
    auto membership = fit_multinomial_logit(table, cfg.group, detail::membership_design(cfg));
    WeightVector w0 = compute_balancing_weights(membership, table, cfg, ref);
    if (w0.trimmed) out.trim_counts[w0.group_level] = w0.trimmed;
    const double wmean0 = weighted_outcome_mean(w0, table, cfg.outcome);

    auto om = fit_linear_model(table, cfg.outcome, detail::outcome_design(cfg));

    ConfounderModel chain_pre, chain_post;
    if (!cfg.confounders_pre.empty())
        chain_pre = ConfounderModel::fit_chain(table, cfg, cfg.confounders_pre, {});
    if (!cfg.confounders_post.empty()) {
        std::vector<std::string> extra = cfg.confounders_pre;
        extra.push_back(cfg.mediators.front()); // X2 law conditions on the first mediator
        chain_post = ConfounderModel::fit_chain(table, cfg, cfg.confounders_post, extra);
    }
    detail::ConfounderIntegrator ci{&chain_pre, &chain_post};

    for (std::int32_t r : comparison_codes(cfg, table)) {
        WeightVector wr = compute_balancing_weights(membership, table, cfg, r);
        if (wr.trimmed) out.trim_counts[wr.group_level] = wr.trimmed;
        const double wmean_r = weighted_outcome_mean(wr, table, cfg.outcome);
        const double cf = detail::counterfactual_mean(table, cfg, om, ci, w0, r, seed);

        DecompositionEstimate e;
        e.group_level = wr.group_level;
        e.kind = out.kind;
        e.delta = wmean_r - cf;
        e.zeta = cf - wmean0;
        e.tau = e.delta + e.zeta;
        e.pct_reduction = detail::pct_reduction(e.delta, e.tau);
        e.counterfactual_mean = cf;
        out.estimates.push_back(e);
    }
    return out;
}

// Regression decomposition from three nested linear fits:
//   phi:   y ~ group + C
//   gamma: y ~ group + X + C
//   alpha: y ~ group + X + D + M + C
// delta(r) = gamma_r - alpha_r + (1 - alpha_x/gamma_x)(phi_r - gamma_r)
// zeta(0)  = alpha_r + (alpha_x/gamma_x)(phi_r - gamma_r)
inline DecompositionResult decompose_regression(const AnalysisConfig& cfg,
                                                const ObservationTable& table) {
    detail::require_disjoint_roles(cfg);
    if (!cfg.differential_effects.empty())
        throw ConfigError("decompose_regression: differential effects are not supported by the "
                          "regression estimator");

    DecompositionResult out;
    out.kind = EstimatorKind::Regression;

    DesignSpec phi_spec;
    phi_spec.intercept().main(cfg.group);
    phi_spec.reference_levels[cfg.group] = cfg.reference_level;
    for (const auto& c : cfg.covariates) phi_spec.main(c);

    auto xcols = cfg.confounders();
    DesignSpec gamma_spec = phi_spec;
    for (const auto& x : xcols) gamma_spec.main(x);
    DesignSpec alpha_spec = gamma_spec;
    for (const auto& m : cfg.mediators) alpha_spec.main(m);

    auto phi = fit_linear_model(table, cfg.outcome, phi_spec);
    LinearModel gamma = xcols.empty() ? phi : fit_linear_model(table, cfg.outcome, gamma_spec);
    auto alpha = fit_linear_model(table, cfg.outcome, alpha_spec);

    // X enters through its expanded design columns. One expanded column is the
    // scalar path; several require the opt-in composite rule, which projects
    // both models' X coefficients onto the between-group mean contrast.
    std::vector<std::string> xnames;
    Eigen::MatrixXd xmat;
    if (!xcols.empty()) {
        DesignSpec x_only;
        for (const auto& x : xcols) x_only.main(x);
        auto bound = BoundDesign::bind(x_only, table);
        xnames = bound.column_names();
        if (xnames.size() > 1) {
            if (!cfg.regression_vector_x)
                throw ConfigError("decompose_regression: multiple X design columns (" +
                                  std::to_string(xnames.size()) +
                                  ") need regression_vector_x enabled or a single scalar X");
            xmat = bound.matrix(table);
        }
    }

    const auto& grp = table.categorical(cfg.group);
    const std::int32_t ref = group_reference_code(cfg, table);

    for (std::int32_t r : comparison_codes(cfg, table)) {
        const std::string level = grp.levels[static_cast<std::size_t>(r)];
        const std::string coef_name = cfg.group + "=" + level;
        auto coef_of = [&](const LinearModel& m) {
            auto idx = m.column_index(coef_name);
            if (idx < 0) throw EstimationError("decompose_regression: missing coefficient " +
                                               coef_name);
            return m.beta[idx];
        };
        const double phi_r = coef_of(phi);
        const double gamma_r = xcols.empty() ? phi_r : coef_of(gamma);
        const double alpha_r = coef_of(alpha);

        double ratio = 0.0;
        if (!xcols.empty()) {
            if (xnames.size() == 1) {
                const double gx = gamma.beta[gamma.column_index(xnames[0])];
                const double ax = alpha.beta[alpha.column_index(xnames[0])];
                if (gx == 0.0)
                    throw EstimationError("decompose_regression: X coefficient in the "
                                          "intermediate model is exactly zero");
                ratio = ax / gx;
            } else {
                Eigen::VectorXd contrast = Eigen::VectorXd::Zero(xnames.size());
                std::size_t n_r = 0, n_0 = 0;
                Eigen::VectorXd mean_r = Eigen::VectorXd::Zero(xnames.size());
                Eigen::VectorXd mean_0 = Eigen::VectorXd::Zero(xnames.size());
                for (std::size_t i = 0; i < table.n_rows(); ++i) {
                    if (grp.codes[i] == r) {
                        mean_r += xmat.row(i).transpose();
                        ++n_r;
                    } else if (grp.codes[i] == ref) {
                        mean_0 += xmat.row(i).transpose();
                        ++n_0;
                    }
                }
                contrast = mean_r / static_cast<double>(n_r) - mean_0 / static_cast<double>(n_0);
                double gx = 0.0, ax = 0.0;
                for (std::size_t j = 0; j < xnames.size(); ++j) {
                    gx += gamma.beta[gamma.column_index(xnames[j])] * contrast[j];
                    ax += alpha.beta[alpha.column_index(xnames[j])] * contrast[j];
                }
                if (std::abs(gx) < 1e-12)
                    throw EstimationError("decompose_regression: X composite has (near) zero "
                                          "coefficient in the intermediate model");
                ratio = ax / gx;
            }
        }

        DecompositionEstimate e;
        e.group_level = level;
        e.kind = EstimatorKind::Regression;
        e.delta = gamma_r - alpha_r + (1.0 - ratio) * (phi_r - gamma_r);
        e.zeta = alpha_r + ratio * (phi_r - gamma_r);
        e.tau = e.delta + e.zeta;
        e.pct_reduction = detail::pct_reduction(e.delta, e.tau);
        out.estimates.push_back(e);
    }
    return out;
}

// Single-group convenience wrapper. Comparing the reference with itself is a
// degenerate decomposition: all three quantities are zero by definition.
inline DecompositionEstimate decompose_for_group(const AnalysisConfig& cfg,
                                                 const ObservationTable& table,
                                                 std::uint64_t seed, const std::string& level) {
    if (level == cfg.reference_level) {
        DecompositionEstimate e;
        e.group_level = level;
        e.tau = e.delta = e.zeta = 0.0;
        e.kind = cfg.differential_effects.empty() ? EstimatorKind::Weighting
                                                  : EstimatorKind::WeightingDifferential;
        return e;
    }
    auto result = cfg.scenario == Scenario::JointMediators
                      ? decompose(cfg, table, seed)
                      : decompose_interposed(cfg, table, seed);
    for (const auto& e : result.estimates)
        if (e.group_level == level) return e;
    throw ConfigError("decompose_for_group: unknown group level '" + level + "'");
}

} // namespace cdecomp

#endif
