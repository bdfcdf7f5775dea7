#ifndef CDECOMP_ORACLE_HPP
#define CDECOMP_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdecomp/config.hpp"
#include "cdecomp/error.hpp"
#include "cdecomp/estimators.hpp"
#include "cdecomp/rng.hpp"
#include "cdecomp/structural.hpp"

namespace cdecomp {

struct OracleGroupResult {
    std::string group_level;
    double tau = 0.0, delta = 0.0, zeta = 0.0;
    double tau_se = 0.0, delta_se = 0.0, zeta_se = 0.0;
};

struct OracleResult {
    enum class Method { McInterventional, ExactSum };
    Method method = Method::McInterventional;
    std::vector<OracleGroupResult> groups;
};

inline std::string to_string(OracleResult::Method m) {
    return m == OracleResult::Method::McInterventional ? "mc_interventional" : "exact_sum";
}

namespace detail {

// Variables an observed/counterfactual leg must re-generate, in topological
// order: everything downstream of the group variable except the outcome.
inline std::vector<std::size_t> leg_vars(const CompiledModel& cm) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cm.spec.size(); ++k) {
        auto r = cm.spec[k].role;
        if (r == VariableSpec::Role::Covariate || r == VariableSpec::Role::Group ||
            r == VariableSpec::Role::Outcome)
            continue;
        out.push_back(k);
    }
    return out;
}

} // namespace detail

// Monte-Carlo truth for the decomposition. Each simulated unit draws shared
// covariates, then one leg per group level (group forced, downstream
// variables re-generated) plus one counterfactual leg per comparison group in
// which the mediator vector is taken from that unit's reference-group leg.
// Outcomes enter as conditional means, so only the generated variance of the
// upstream variables contributes to the Monte-Carlo error.
inline OracleResult oracle_truth_mc(const StructuralModel& model, std::size_t n_mc,
                                    std::uint64_t seed) {
    auto cm = detail::compile(model);
    const auto& gspec = cm.spec[cm.group];
    if (!gspec.probs.empty() && gspec.probs.front() == 0.0)
        throw PositivityError("group variable assigns zero probability to the reference level '" +
                              detail::format_level(gspec.values.front()) + "'");
    const std::size_t K = gspec.values.size();
    if (n_mc == 0) throw ConfigError("oracle: draw count must be positive");

    const std::size_t nv = cm.spec.size();
    const auto legs = detail::leg_vars(cm);
    const bool interposed = cm.scenario == Scenario::InterposedConfounder;

    // accumulate per comparison group: sum / sum of squares for tau, delta, zeta
    const std::size_t nc = K - 1;
    std::vector<double> s_tau(nc, 0.0), s2_tau(nc, 0.0);
    std::vector<double> s_del(nc, 0.0), s2_del(nc, 0.0);
    std::vector<double> s_zet(nc, 0.0), s2_zet(nc, 0.0);

    constexpr std::size_t kBatch = 8192;
    const std::size_t n_batches = (n_mc + kBatch - 1) / kBatch;

    std::vector<double> value(nv), v0(nv), vr(nv);
    std::vector<std::int32_t> level(nv), l0(nv), lr(nv);

    for (std::size_t b = 0; b < n_batches; ++b) {
        std::mt19937_64 rng = make_stream(seed, 0x0bac1e50ULL + b);
        const std::size_t lo = b * kBatch;
        const std::size_t hi = std::min(n_mc, lo + kBatch);
        for (std::size_t i = lo; i < hi; ++i) {
            for (auto k : cm.covariates) detail::draw_variable(cm, k, value, level, rng);

            // reference leg
            value[cm.group] = gspec.values[0];
            level[cm.group] = 0;
            for (auto k : legs) detail::draw_variable(cm, k, value, level, rng);
            double y0 = cm.mean_of(cm.outcome, value);
            v0 = value;
            l0 = level;

            for (std::size_t g = 1; g < K; ++g) {
                value = v0; // restore shared covariates
                level = l0;
                value[cm.group] = gspec.values[g];
                level[cm.group] = static_cast<std::int32_t>(g);
                for (auto k : legs) detail::draw_variable(cm, k, value, level, rng);
                double yr = cm.mean_of(cm.outcome, value);
                vr = value;
                lr = level;

                // counterfactual leg: keep this unit's confounders under g,
                // substitute the reference leg's mediator vector
                if (interposed) {
                    value = vr;
                    level = lr;
                    value[cm.mediators.front()] = v0[cm.mediators.front()];
                    level[cm.mediators.front()] = l0[cm.mediators.front()];
                    for (auto k : cm.post) detail::draw_variable(cm, k, value, level, rng);
                    for (auto k : cm.mediators) {
                        value[k] = v0[k];
                        level[k] = l0[k];
                    }
                } else {
                    value = vr;
                    for (auto k : cm.mediators) value[k] = v0[k];
                }
                double ycf = cm.mean_of(cm.outcome, value);

                const std::size_t j = g - 1;
                double t = yr - y0, d = yr - ycf, z = ycf - y0;
                s_tau[j] += t;
                s2_tau[j] += t * t;
                s_del[j] += d;
                s2_del[j] += d * d;
                s_zet[j] += z;
                s2_zet[j] += z * z;
            }
        }
    }

    OracleResult out;
    out.method = OracleResult::Method::McInterventional;
    const double n = static_cast<double>(n_mc);
    for (std::size_t j = 0; j < nc; ++j) {
        OracleGroupResult g;
        g.group_level = detail::format_level(gspec.values[j + 1]);
        auto finish = [&](double s, double s2, double& est, double& se) {
            est = s / n;
            double var = (s2 - s * s / n) / (n - 1.0);
            se = std::sqrt(std::max(0.0, var) / n);
        };
        finish(s_tau[j], s2_tau[j], g.tau, g.tau_se);
        finish(s_del[j], s2_del[j], g.delta, g.delta_se);
        finish(s_zet[j], s2_zet[j], g.zeta, g.zeta_se);
        out.groups.push_back(std::move(g));
    }
    return out;
}

namespace detail {

// Recursively enumerate the given variables (topologically ordered among
// themselves, parents outside the list already assigned), calling fn with the
// joint conditional probability at each full assignment.
template <typename Fn>
inline void enumerate_block(const CompiledModel& cm, const std::vector<std::size_t>& vars,
                            std::size_t idx, std::vector<double>& value,
                            std::vector<std::int32_t>& level, double p, Fn&& fn) {
    if (idx == vars.size()) {
        fn(p);
        return;
    }
    const std::size_t k = vars[idx];
    const auto& vs = cm.spec[k];
    std::vector<double> probs(vs.values.size());
    cm.law_probs(k, value, probs.data());
    for (std::size_t l = 0; l < vs.values.size(); ++l) {
        if (probs[l] == 0.0) continue;
        value[k] = vs.values[l];
        level[k] = static_cast<std::int32_t>(l);
        enumerate_block(cm, vars, idx + 1, value, level, p * probs[l], fn);
    }
}

} // namespace detail

// Exact truth by summing the identification formula over all configurations.
// Requires every non-outcome variable to be categorical. Unobserved
// variables, if present, are integrated out.
inline OracleResult oracle_truth_exact(const StructuralModel& model) {
    auto cm = detail::compile(model);
    const std::size_t nv = cm.spec.size();
    for (std::size_t k = 0; k < nv; ++k)
        if (k != cm.outcome && cm.spec[k].kind != VariableSpec::Kind::Categorical)
            throw ConfigError("exact oracle requires categorical variables ('" + cm.spec[k].name +
                              "' is not)");
    const auto& gspec = cm.spec[cm.group];
    const std::size_t K = gspec.values.size();
    const bool interposed = cm.scenario == Scenario::InterposedConfounder;

    const auto legs = detail::leg_vars(cm); // topo order, excludes covariates/group/outcome
    const auto is_mediator = [&](std::size_t k) {
        return cm.spec[k].role == VariableSpec::Role::Mediator;
    };
    std::vector<std::size_t> nonmed;           // unobserved + pre + post in topo order
    std::vector<std::size_t> pre_u;            // unobserved + pre only
    for (auto k : legs) {
        if (is_mediator(k)) continue;
        nonmed.push_back(k);
        if (cm.spec[k].role != VariableSpec::Role::ConfounderPost) pre_u.push_back(k);
    }

    std::vector<double> ey(K, 0.0);
    std::vector<double> cf(K, 0.0); // index by group level; [0] unused

    std::vector<double> value(nv, 0.0);
    std::vector<std::int32_t> level(nv, 0);

    detail::enumerate_block(cm, cm.covariates, 0, value, level, 1.0, [&](double pc) {
        // joint mediator distribution under the reference group at this c
        std::map<std::vector<std::int32_t>, double> med_dist;
        value[cm.group] = gspec.values[0];
        level[cm.group] = 0;
        detail::enumerate_block(cm, legs, 0, value, level, 1.0, [&](double p) {
            std::vector<std::int32_t> combo;
            for (auto k : cm.mediators) combo.push_back(level[k]);
            med_dist[combo] += p;
        });

        for (std::size_t g = 0; g < K; ++g) {
            value[cm.group] = gspec.values[g];
            level[cm.group] = static_cast<std::int32_t>(g);
            detail::enumerate_block(cm, legs, 0, value, level, 1.0, [&](double p) {
                ey[g] += pc * p * cm.mean_of(cm.outcome, value);
            });
        }

        for (std::size_t g = 1; g < K; ++g) {
            value[cm.group] = gspec.values[g];
            level[cm.group] = static_cast<std::int32_t>(g);
            if (!interposed) {
                detail::enumerate_block(cm, nonmed, 0, value, level, 1.0, [&](double px) {
                    for (const auto& [combo, pm] : med_dist) {
                        for (std::size_t mi = 0; mi < cm.mediators.size(); ++mi) {
                            std::size_t k = cm.mediators[mi];
                            level[k] = combo[mi];
                            value[k] = cm.spec[k].values[static_cast<std::size_t>(combo[mi])];
                        }
                        cf[g] += pc * px * pm * cm.mean_of(cm.outcome, value);
                    }
                });
            } else {
                detail::enumerate_block(cm, pre_u, 0, value, level, 1.0, [&](double px) {
                    for (const auto& [combo, pm] : med_dist) {
                        for (std::size_t mi = 0; mi < cm.mediators.size(); ++mi) {
                            std::size_t k = cm.mediators[mi];
                            level[k] = combo[mi];
                            value[k] = cm.spec[k].values[static_cast<std::size_t>(combo[mi])];
                        }
                        detail::enumerate_block(cm, cm.post, 0, value, level, 1.0, [&](double pz) {
                            cf[g] += pc * px * pm * pz * cm.mean_of(cm.outcome, value);
                        });
                    }
                });
            }
        }
    });

    OracleResult out;
    out.method = OracleResult::Method::ExactSum;
    for (std::size_t g = 1; g < K; ++g) {
        OracleGroupResult r;
        r.group_level = detail::format_level(gspec.values[g]);
        r.delta = ey[g] - cf[g];
        r.zeta = cf[g] - ey[0];
        r.tau = r.delta + r.zeta;
        out.groups.push_back(std::move(r));
    }
    return out;
}

struct BiasEstimate {
    std::string group_level;
    double delta_omitted = 0.0;  // estimate with the unobserved columns withheld
    double delta_adjusted = 0.0; // estimate with them included as confounders
    double delta_bias = 0.0;     // omitted minus adjusted
    double zeta_bias = 0.0;
};

// Measure how much omitting the model's unobserved variables biases the
// weighting estimator: simulate once with those columns exposed, run the
// estimator with and without them listed as pre-mediator confounders on the
// same data, and report the difference.
inline std::vector<BiasEstimate> empirical_bias(const StructuralModel& model,
                                                const AnalysisConfig& cfg, std::size_t n,
                                                std::uint64_t seed) {
    auto cm = detail::compile(model);
    if (cm.unobserved.empty())
        throw ConfigError("bias measurement requires a model with an unobserved variable");
    std::vector<std::string> u_names;
    for (auto k : cm.unobserved) u_names.push_back(cm.spec[k].name);

    auto mentions = [&](const std::vector<std::string>& cols) {
        for (const auto& c : cols)
            for (const auto& u : u_names)
                if (c == u) return true;
        return false;
    };
    if (mentions(cfg.mediators) || mentions(cfg.confounders_pre) ||
        mentions(cfg.confounders_post) || mentions(cfg.covariates) ||
        mentions({cfg.group, cfg.outcome}))
        throw ConfigError("analysis roles must not reference the model's unobserved variables");
    if (cfg.scenario != cm.scenario)
        throw ConfigError("analysis scenario does not match the model scenario");

    ObservationTable table = generate(model, n, seed, /*expose_unobserved=*/true);

    AnalysisConfig incl = cfg;
    incl.confounders_pre.insert(incl.confounders_pre.begin(), u_names.begin(), u_names.end());

    const std::uint64_t est_seed = derive_seed(seed, 0xb1a5ULL);
    DecompositionResult omit, with_u;
    if (cfg.scenario == Scenario::InterposedConfounder) {
        omit = decompose_interposed(cfg, table, est_seed);
        with_u = decompose_interposed(incl, table, est_seed);
    } else {
        omit = decompose(cfg, table, est_seed);
        with_u = decompose(incl, table, est_seed);
    }

    std::vector<BiasEstimate> out;
    for (std::size_t i = 0; i < omit.estimates.size(); ++i) {
        const auto& a = omit.estimates[i];
        const auto& b = with_u.estimates[i];
        if (a.group_level != b.group_level)
            throw EstimationError("bias measurement: group ordering mismatch");
        BiasEstimate be;
        be.group_level = a.group_level;
        be.delta_omitted = a.delta;
        be.delta_adjusted = b.delta;
        be.delta_bias = a.delta - b.delta;
        be.zeta_bias = a.zeta - b.zeta;
        out.push_back(std::move(be));
    }
    return out;
}

} // namespace cdecomp

#endif
