#ifndef CDECOMP_SENSITIVITY_HPP
#define CDECOMP_SENSITIVITY_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cdecomp/config.hpp"
#include "cdecomp/design.hpp"
#include "cdecomp/error.hpp"
#include "cdecomp/estimators.hpp"
#include "cdecomp/glm.hpp"
#include "cdecomp/stats.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

// Inputs for the bias bound of one comparison group. se_gamma_dm and df come
// from the outcome regression on the composite mediator score; mediator_gap
// is the group difference in that (unit-variance) score.
struct SensitivityInputs {
    std::string group_level;
    double se_gamma_dm = 0.0;
    double df = 0.0;
    double mediator_gap = 0.0;
    double delta_hat = 0.0;
    double zeta_hat = 0.0;
    double se_delta = std::numeric_limits<double>::quiet_NaN();
    double se_zeta = std::numeric_limits<double>::quiet_NaN();
};

// Magnitude of the omitted-confounder bias at sensitivity parameters
// (r2_yu, r2_udm): the share of residual outcome variance explained by the
// confounder and the share of composite-mediator variance it explains.
inline double compute_bias(double r2_yu, double r2_udm, const SensitivityInputs& in) {
    if (r2_yu < 0.0 || r2_yu >= 1.0)
        throw ConfigError("sensitivity: r2_yu must lie in [0, 1)");
    if (r2_udm < 0.0 || r2_udm >= 1.0)
        throw ConfigError("sensitivity: r2_udm must lie in [0, 1)");
    return in.se_gamma_dm * std::sqrt(r2_yu * r2_udm / (1.0 - r2_udm) * in.df) *
           std::abs(in.mediator_gap);
}

struct AdjustedPair {
    double delta_adj = 0.0;
    double zeta_adj = 0.0;
};

// The bound is directionless, so the adjustment moves the reduction toward
// zero; the remainder absorbs the same amount, keeping their sum fixed.
inline AdjustedPair adjusted_estimates(const SensitivityInputs& in, double bias) {
    double sign = in.delta_hat < 0.0 ? -1.0 : 1.0;
    AdjustedPair out;
    out.delta_adj = in.delta_hat - sign * bias;
    out.zeta_adj = in.zeta_hat + sign * bias;
    return out;
}

struct GridPoint {
    double r2_yu = 0.0;
    double r2_udm = 0.0;
    double bias = 0.0;
    double delta_adj = 0.0;
    double zeta_adj = 0.0;
    bool zero_cross = false; // bias large enough to wipe out the point estimate
    bool ci_cross = false;   // adjusted interval for delta covers zero
};

struct GridOptions {
    double r2_max = 0.9;
    std::size_t grid_n = 20;
    double level = 0.95;
};

struct DiagonalCrossings {
    double delta_zero = std::numeric_limits<double>::quiet_NaN();
    double delta_ci = std::numeric_limits<double>::quiet_NaN();
    double zeta_zero = std::numeric_limits<double>::quiet_NaN();
    double zeta_ci = std::numeric_limits<double>::quiet_NaN();
};

struct SensitivityGrid {
    std::string group_level;
    std::vector<double> axis; // shared values for both parameters
    std::vector<GridPoint> points; // row-major: r2_yu outer, r2_udm inner
    DiagonalCrossings diagonal;
};

namespace detail {

// Smallest t in [0, r2_max] with bias(t, t) >= target, by bisection; NaN when
// even the corner cannot reach the target. bias(t, t) increases in t.
inline double diagonal_crossing(const SensitivityInputs& in, double target, double r2_max) {
    if (!(target > 0.0)) return 0.0;
    if (std::isnan(target)) return std::numeric_limits<double>::quiet_NaN();
    if (compute_bias(r2_max, r2_max, in) < target)
        return std::numeric_limits<double>::quiet_NaN();
    double lo = 0.0, hi = r2_max;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        (compute_bias(mid, mid, in) >= target ? hi : lo) = mid;
    }
    return hi;
}

} // namespace detail

inline SensitivityGrid compute_sensitivity_grid(const SensitivityInputs& in,
                                                const GridOptions& opt = {}) {
    if (!(opt.r2_max > 0.0) || opt.r2_max >= 1.0)
        throw ConfigError("sensitivity: r2 upper bound must lie in (0, 1)");
    if (opt.grid_n < 2) throw ConfigError("sensitivity: grid needs at least 2 points per axis");
    if (!(opt.level > 0.0) || opt.level >= 1.0)
        throw ConfigError("sensitivity: confidence level must lie in (0, 1)");

    const double z = normal_quantile(0.5 * (1.0 + opt.level));
    SensitivityGrid grid;
    grid.group_level = in.group_level;
    for (std::size_t i = 0; i < opt.grid_n; ++i)
        grid.axis.push_back(opt.r2_max * static_cast<double>(i) /
                            static_cast<double>(opt.grid_n - 1));

    for (double yu : grid.axis) {
        for (double udm : grid.axis) {
            GridPoint p;
            p.r2_yu = yu;
            p.r2_udm = udm;
            p.bias = compute_bias(yu, udm, in);
            auto adj = adjusted_estimates(in, p.bias);
            p.delta_adj = adj.delta_adj;
            p.zeta_adj = adj.zeta_adj;
            p.zero_cross = p.bias >= std::abs(in.delta_hat);
            if (!std::isnan(in.se_delta))
                p.ci_cross = std::abs(p.delta_adj) <= z * in.se_delta;
            grid.points.push_back(p);
        }
    }

    grid.diagonal.delta_zero = detail::diagonal_crossing(in, std::abs(in.delta_hat), opt.r2_max);
    grid.diagonal.zeta_zero = detail::diagonal_crossing(in, std::abs(in.zeta_hat), opt.r2_max);
    if (!std::isnan(in.se_delta))
        grid.diagonal.delta_ci =
            detail::diagonal_crossing(in, std::abs(in.delta_hat) - z * in.se_delta, opt.r2_max);
    if (!std::isnan(in.se_zeta))
        grid.diagonal.zeta_ci =
            detail::diagonal_crossing(in, std::abs(in.zeta_hat) - z * in.se_zeta, opt.r2_max);
    return grid;
}

// --- composite mediator score and regression-based sensitivity inputs ------

struct SensitivityBasis {
    double se_gamma_dm = 0.0;            // SE of the composite coefficient
    double gamma_dm = 0.0;               // the coefficient itself
    double df = 0.0;                     // residual df of that outcome model
    std::map<std::string, double> gap_by_level; // group gap in the composite
    std::vector<double> composite;       // per-row unit-variance score
};

namespace detail {

// Composite mediator score: outcome-model coefficients of the mediator
// columns applied to those columns, rescaled to unit sample variance.
inline std::vector<double> composite_score(const AnalysisConfig& cfg, const ObservationTable& table,
                                           const LinearModel& outcome_model) {
    const auto& bd = outcome_model.design;
    std::vector<std::size_t> med_cols;
    for (const auto& m : cfg.mediators) {
        const auto mt = table.type(table.column_index(m));
        if (mt == ColumnType::Numeric) {
            auto j = outcome_model.column_index(m);
            if (j >= 0) med_cols.push_back(static_cast<std::size_t>(j));
        } else {
            const auto& col = table.categorical(m);
            for (const auto& lev : col.levels) {
                auto j = outcome_model.column_index(m + "=" + lev);
                if (j >= 0) med_cols.push_back(static_cast<std::size_t>(j));
            }
        }
    }
    if (med_cols.empty()) throw EstimationError("sensitivity: no mediator columns in outcome model");

    const std::size_t n = table.n_rows();
    std::vector<double> score(n, 0.0);
    std::vector<double> rowbuf(bd.n_cols());
    RowView row(table, 0);
    for (std::size_t i = 0; i < n; ++i) {
        row.set_row(i);
        bd.fill_row(row, rowbuf.data());
        double s = 0.0;
        for (auto j : med_cols) s += outcome_model.beta[static_cast<Eigen::Index>(j)] * rowbuf[j];
        score[i] = s;
    }
    double sd = sample_sd(score);
    if (!(sd > 0.0))
        throw EstimationError("sensitivity: composite mediator score has zero variance");
    for (auto& s : score) s /= sd;
    return score;
}

} // namespace detail

// Fit the regressions behind the sensitivity parameters: the outcome on
// group, confounders, covariates and the composite score (for se_gamma_dm and
// df), and the composite score on group and covariates (for the gaps).
inline SensitivityBasis sensitivity_basis(const AnalysisConfig& cfg, const ObservationTable& table) {
    LinearModel outcome_model = fit_linear_model(table, cfg.outcome, detail::outcome_design(cfg));
    SensitivityBasis basis;
    basis.composite = detail::composite_score(cfg, table, outcome_model);

    ObservationTable aug = table;
    aug.add_numeric("__composite", std::vector<double>(basis.composite));

    DesignSpec yspec;
    yspec.intercept().main(cfg.group);
    for (const auto& c : cfg.confounders_pre) yspec.main(c);
    for (const auto& c : cfg.confounders_post) yspec.main(c);
    for (const auto& c : cfg.covariates) yspec.main(c);
    yspec.main("__composite");
    yspec.reference_levels[cfg.group] = cfg.reference_level;
    LinearModel ymod = fit_linear_model(aug, cfg.outcome, yspec);
    auto jc = ymod.column_index("__composite");
    if (jc < 0) throw EstimationError("sensitivity: composite column dropped from outcome model");
    basis.gamma_dm = ymod.beta[jc];
    basis.se_gamma_dm = ymod.std_errors[jc];
    basis.df = ymod.df;

    DesignSpec sspec;
    sspec.intercept().main(cfg.group);
    for (const auto& c : cfg.covariates) sspec.main(c);
    sspec.reference_levels[cfg.group] = cfg.reference_level;
    LinearModel smod = fit_linear_model(aug, "__composite", sspec);
    const auto& gcol = table.categorical(cfg.group);
    for (const auto& lev : gcol.levels) {
        if (lev == cfg.reference_level) continue;
        auto j = smod.column_index(cfg.group + "=" + lev);
        if (j < 0) throw EstimationError("sensitivity: group level column missing");
        basis.gap_by_level[lev] = smod.beta[j];
    }
    return basis;
}

inline SensitivityInputs make_sensitivity_inputs(const SensitivityBasis& basis,
                                                 const DecompositionEstimate& est,
                                                 double se_delta = std::numeric_limits<double>::quiet_NaN(),
                                                 double se_zeta = std::numeric_limits<double>::quiet_NaN()) {
    SensitivityInputs in;
    in.group_level = est.group_level;
    in.se_gamma_dm = basis.se_gamma_dm;
    in.df = basis.df;
    auto it = basis.gap_by_level.find(est.group_level);
    if (it == basis.gap_by_level.end())
        throw EstimationError("sensitivity: no mediator gap for group level '" + est.group_level +
                              "'");
    in.mediator_gap = std::abs(it->second);
    in.delta_hat = est.delta;
    in.zeta_hat = est.zeta;
    in.se_delta = se_delta;
    in.se_zeta = se_zeta;
    return in;
}

// --- observed-covariate benchmarks ------------------------------------------

struct BenchmarkPoint {
    std::string covariate; // design column name
    double r2_y = 0.0;     // partial R2 with the outcome
    double r2_dm = 0.0;    // partial R2 with the composite mediator
    int multiplier = 1;    // 1x or 2x the mediator-side strength
};

// Calibrate the sensitivity parameters against observed covariates: each
// covariate's partial R2 in the full outcome model and in the composite-score
// model, reported at 1x and (when still below 1) 2x strength.
inline std::vector<BenchmarkPoint> benchmark_covariates(const AnalysisConfig& cfg,
                                                        const ObservationTable& table,
                                                        const SensitivityBasis& basis) {
    ObservationTable aug = table;
    aug.add_numeric("__composite", std::vector<double>(basis.composite));

    LinearModel ymod = fit_linear_model(table, cfg.outcome, detail::outcome_design(cfg));

    DesignSpec sspec;
    sspec.intercept().main(cfg.group);
    for (const auto& c : cfg.confounders_pre) sspec.main(c);
    for (const auto& c : cfg.confounders_post) sspec.main(c);
    for (const auto& c : cfg.covariates) sspec.main(c);
    sspec.reference_levels[cfg.group] = cfg.reference_level;
    LinearModel smod = fit_linear_model(aug, "__composite", sspec);

    auto partial_r2 = [](const LinearModel& m, const std::string& col, double& out) {
        auto j = m.column_index(col);
        if (j < 0) return false;
        double t = m.t_stat(j);
        out = t * t / (t * t + m.df);
        return true;
    };

    std::vector<BenchmarkPoint> out;
    for (const auto& cov : cfg.covariates) {
        std::vector<std::string> cols;
        if (table.type(table.column_index(cov)) == ColumnType::Numeric) {
            cols.push_back(cov);
        } else {
            for (const auto& lev : table.categorical(cov).levels) cols.push_back(cov + "=" + lev);
        }
        for (const auto& col : cols) {
            double r2y = 0.0, r2dm = 0.0;
            if (!partial_r2(ymod, col, r2y) || !partial_r2(smod, col, r2dm)) continue;
            out.push_back({col, r2y, r2dm, 1});
            if (2.0 * r2dm < 1.0) out.push_back({col, r2y, 2.0 * r2dm, 2});
        }
    }
    return out;
}

// --- stratified bias for a discrete effect modifier -------------------------

// When the confounder's outcome effect varies with an observed discrete
// modifier z, the bias averages the z-specific effects over the reference
// group's modifier distribution within each covariate cell:
//   sum_c P(c) * (sum_z gamma_u(c,z) P(z|ref,c)) * beta_dm * gap(c)
struct StratifiedBiasInputs {
    std::vector<double> cell_probs;           // P(c) per covariate cell
    std::vector<std::vector<double>> z_probs; // P(z | reference, c)
    std::vector<std::vector<double>> gamma_u; // confounder effect per (c, z)
    std::vector<double> cell_gaps;            // signed mediator gap per cell
    double beta_dm = 0.0;                     // joint-mediator effect on the confounder
                                              // (slope of U regressed on the mediator score)
};

inline double compute_modified_bias(const StratifiedBiasInputs& in) {
    const std::size_t nc = in.cell_probs.size();
    if (in.z_probs.size() != nc || in.gamma_u.size() != nc || in.cell_gaps.size() != nc)
        throw ConfigError("stratified bias: per-cell inputs have inconsistent lengths");
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        if (in.z_probs[c].size() != in.gamma_u[c].size())
            throw ConfigError("stratified bias: modifier probabilities and effects differ in "
                              "length within a cell");
        double pz_sum = 0.0, gamma_bar = 0.0;
        for (std::size_t z = 0; z < in.z_probs[c].size(); ++z) {
            if (in.z_probs[c][z] < 0.0)
                throw ConfigError("stratified bias: negative modifier probability");
            pz_sum += in.z_probs[c][z];
            gamma_bar += in.gamma_u[c][z] * in.z_probs[c][z];
        }
        if (std::abs(pz_sum - 1.0) > 1e-8)
            throw ConfigError("stratified bias: modifier probabilities do not sum to 1 within a "
                              "cell");
        total += in.cell_probs[c] * gamma_bar * in.beta_dm * in.cell_gaps[c];
    }
    return total;
}

} // namespace cdecomp

#endif
