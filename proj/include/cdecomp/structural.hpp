#ifndef CDECOMP_STRUCTURAL_HPP
#define CDECOMP_STRUCTURAL_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cdecomp/config.hpp"
#include "cdecomp/error.hpp"
#include "cdecomp/rng.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

// Linear expressions over earlier variables: sum of coef * product(factors),
// where a factor is either a variable's numeric value or an indicator that a
// variable equals a given value. Saturated conditional tables are expressible
// through indicator products.
struct ExprFactor {
    std::string var;
    bool indicator = false;
    double eq = 0.0;
};
struct ExprTerm {
    double coef = 0.0;
    std::vector<ExprFactor> factors;
};
using LinearExpr = std::vector<ExprTerm>;

inline ExprFactor val(const std::string& var) { return {var, false, 0.0}; }
inline ExprFactor ind(const std::string& var, double eq) { return {var, true, eq}; }
inline ExprTerm term(double coef) { return {coef, {}}; }
inline ExprTerm term(double coef, ExprFactor f) { return {coef, {std::move(f)}}; }
inline ExprTerm term(double coef, ExprFactor f1, ExprFactor f2) {
    return {coef, {std::move(f1), std::move(f2)}};
}
inline ExprTerm term(double coef, ExprFactor f1, ExprFactor f2, ExprFactor f3) {
    return {coef, {std::move(f1), std::move(f2), std::move(f3)}};
}

struct VariableSpec {
    enum class Role { Covariate, Group, ConfounderPre, ConfounderPost, Unobserved, Mediator, Outcome };
    enum class Kind { Categorical, Normal };

    std::string name;
    Role role = Role::Covariate;
    Kind kind = Kind::Categorical;

    // categorical: either softmax logits (one expression per level beyond the
    // first) or fixed probabilities (no parent dependence)
    std::vector<double> values;
    std::vector<LinearExpr> logits;
    std::vector<double> probs;

    // normal
    LinearExpr mean;
    double sd = 1.0;

    bool emit_numeric = false; // categorical variable written as a numeric column
};

struct StructuralModel {
    Scenario scenario = Scenario::JointMediators;
    std::vector<VariableSpec> variables;
};

namespace detail {

struct CFactor {
    std::size_t var = 0;
    bool indicator = false;
    double eq = 0.0;
};
struct CTerm {
    double coef = 0.0;
    std::vector<CFactor> factors;
};
using CExpr = std::vector<CTerm>;

struct CompiledModel {
    Scenario scenario = Scenario::JointMediators;
    std::vector<VariableSpec> spec;       // topological order
    std::vector<std::vector<CExpr>> logits;
    std::vector<CExpr> means;
    std::vector<std::size_t> covariates, pre, post, unobserved, mediators;
    std::size_t group = 0;
    std::size_t outcome = 0;

    double eval(const CExpr& e, const std::vector<double>& value) const {
        double s = 0.0;
        for (const auto& t : e) {
            double v = t.coef;
            for (const auto& f : t.factors) {
                if (f.indicator)
                    v *= (value[f.var] == f.eq) ? 1.0 : 0.0;
                else
                    v *= value[f.var];
                if (v == 0.0) break;
            }
            s += v;
        }
        return s;
    }

    // probabilities over the levels of categorical variable v
    void law_probs(std::size_t v, const std::vector<double>& value, double* out) const {
        const auto& vs = spec[v];
        const std::size_t K = vs.values.size();
        if (!vs.probs.empty()) {
            for (std::size_t k = 0; k < K; ++k) out[k] = vs.probs[k];
            return;
        }
        double mx = 0.0;
        thread_local std::vector<double> eta;
        eta.resize(K - 1);
        for (std::size_t k = 0; k + 1 < K; ++k) {
            eta[k] = eval(logits[v][k], value);
            mx = std::max(mx, eta[k]);
        }
        double denom = std::exp(-mx);
        for (std::size_t k = 0; k + 1 < K; ++k) denom += std::exp(eta[k] - mx);
        out[0] = std::exp(-mx) / denom;
        for (std::size_t k = 0; k + 1 < K; ++k) out[k + 1] = std::exp(eta[k] - mx) / denom;
    }

    double mean_of(std::size_t v, const std::vector<double>& value) const {
        return eval(means[v], value);
    }
};

inline std::string format_level(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline CompiledModel compile(const StructuralModel& model) {
    const std::size_t n = model.variables.size();
    std::map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = model.variables[i];
        if (v.name.empty()) throw ConfigError("model: variable with empty name");
        if (!by_name.emplace(v.name, i).second)
            throw ConfigError("model: duplicate variable '" + v.name + "'");
    }

    // collect parents
    std::vector<std::set<std::size_t>> parents(n);
    auto scan = [&](std::size_t i, const LinearExpr& e) {
        for (const auto& t : e)
            for (const auto& f : t.factors) {
                auto it = by_name.find(f.var);
                if (it == by_name.end())
                    throw ConfigError("model: '" + model.variables[i].name +
                                      "' references unknown variable '" + f.var + "'");
                if (it->second == i)
                    throw ConfigError("model: '" + f.var + "' references itself");
                parents[i].insert(it->second);
            }
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = model.variables[i];
        if (v.kind == VariableSpec::Kind::Categorical) {
            if (v.values.size() < 2)
                throw ConfigError("model: categorical '" + v.name + "' needs >= 2 values");
            for (std::size_t a = 0; a < v.values.size(); ++a)
                for (std::size_t b = a + 1; b < v.values.size(); ++b)
                    if (v.values[a] == v.values[b])
                        throw ConfigError("model: duplicate value in '" + v.name + "'");
            if (!v.probs.empty()) {
                if (!v.logits.empty())
                    throw ConfigError("model: '" + v.name + "' declares both probs and logits");
                if (v.probs.size() != v.values.size())
                    throw ConfigError("model: probs/values length mismatch in '" + v.name + "'");
                double s = 0.0;
                for (double p : v.probs) {
                    if (p < 0.0) throw ConfigError("model: negative probability in '" + v.name + "'");
                    s += p;
                }
                if (std::abs(s - 1.0) > 1e-12)
                    throw ConfigError("model: probabilities of '" + v.name + "' sum to " +
                                      std::to_string(s));
            } else {
                if (v.logits.size() != v.values.size() - 1)
                    throw ConfigError("model: '" + v.name + "' needs one logit expression per "
                                      "non-baseline value");
                for (const auto& e : v.logits) scan(i, e);
            }
        } else {
            if (v.sd < 0.0) throw ConfigError("model: negative sd in '" + v.name + "'");
            scan(i, v.mean);
        }
    }

    // stable topological order (Kahn, ties broken by declaration index)
    std::vector<std::size_t> order;
    {
        std::vector<std::size_t> indeg(n, 0);
        std::vector<std::vector<std::size_t>> children(n);
        for (std::size_t i = 0; i < n; ++i) {
            indeg[i] = parents[i].size();
            for (auto p : parents[i]) children[p].push_back(i);
        }
        std::set<std::size_t> ready;
        for (std::size_t i = 0; i < n; ++i)
            if (indeg[i] == 0) ready.insert(i);
        while (!ready.empty()) {
            std::size_t i = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(i);
            for (auto ch : children[i])
                if (--indeg[ch] == 0) ready.insert(ch);
        }
        if (order.size() != n) throw ConfigError("model: dependency cycle among variables");
    }

    CompiledModel cm;
    cm.scenario = model.scenario;
    std::vector<std::size_t> pos(n);
    for (std::size_t k = 0; k < n; ++k) pos[order[k]] = k;
    cm.spec.resize(n);
    cm.logits.resize(n);
    cm.means.resize(n);
    bool has_group = false, has_outcome = false;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& v = model.variables[order[k]];
        cm.spec[k] = v;
        auto resolve = [&](const LinearExpr& e) {
            CExpr out;
            for (const auto& t : e) {
                CTerm ct;
                ct.coef = t.coef;
                for (const auto& f : t.factors)
                    ct.factors.push_back({pos[by_name.at(f.var)], f.indicator, f.eq});
                out.push_back(std::move(ct));
            }
            return out;
        };
        if (v.kind == VariableSpec::Kind::Categorical)
            for (const auto& e : v.logits) cm.logits[k].push_back(resolve(e));
        else
            cm.means[k] = resolve(v.mean);

        switch (v.role) {
        case VariableSpec::Role::Covariate: cm.covariates.push_back(k); break;
        case VariableSpec::Role::Group:
            if (has_group) throw ConfigError("model: more than one group variable");
            has_group = true;
            cm.group = k;
            if (v.kind != VariableSpec::Kind::Categorical)
                throw ConfigError("model: group variable must be categorical");
            break;
        case VariableSpec::Role::ConfounderPre: cm.pre.push_back(k); break;
        case VariableSpec::Role::ConfounderPost: cm.post.push_back(k); break;
        case VariableSpec::Role::Unobserved: cm.unobserved.push_back(k); break;
        case VariableSpec::Role::Mediator: cm.mediators.push_back(k); break;
        case VariableSpec::Role::Outcome:
            if (has_outcome) throw ConfigError("model: more than one outcome variable");
            has_outcome = true;
            cm.outcome = k;
            if (v.kind != VariableSpec::Kind::Normal)
                throw ConfigError("model: outcome variable must be normal");
            break;
        }
    }
    if (!has_group) throw ConfigError("model: no group variable");
    if (!has_outcome) throw ConfigError("model: no outcome variable");
    if (cm.mediators.empty()) throw ConfigError("model: no mediator variable");

    // role/dependency consistency
    auto role_of = [&](std::size_t k) { return cm.spec[k].role; };
    auto parents_of = [&](std::size_t k) {
        std::set<std::size_t> out;
        for (auto p : parents[order[k]]) out.insert(pos[p]);
        return out;
    };
    for (std::size_t k = 0; k < n; ++k) {
        auto ps = parents_of(k);
        switch (role_of(k)) {
        case VariableSpec::Role::Covariate:
            for (auto p : ps)
                if (role_of(p) != VariableSpec::Role::Covariate)
                    throw ConfigError("model: covariate '" + cm.spec[k].name +
                                      "' depends on non-covariate '" + cm.spec[p].name + "'");
            break;
        case VariableSpec::Role::Group:
            for (auto p : ps)
                if (role_of(p) != VariableSpec::Role::Covariate)
                    throw ConfigError("model: group '" + cm.spec[k].name +
                                      "' may depend only on covariates");
            break;
        case VariableSpec::Role::Unobserved:
            for (auto p : ps)
                if (role_of(p) != VariableSpec::Role::Covariate &&
                    role_of(p) != VariableSpec::Role::Unobserved)
                    throw ConfigError("model: unobserved '" + cm.spec[k].name +
                                      "' may depend only on covariates/unobserved");
            break;
        case VariableSpec::Role::ConfounderPre:
            for (auto p : ps)
                if (role_of(p) == VariableSpec::Role::Mediator ||
                    role_of(p) == VariableSpec::Role::ConfounderPost ||
                    role_of(p) == VariableSpec::Role::Outcome)
                    throw ConfigError("model: pre-mediator confounder '" + cm.spec[k].name +
                                      "' depends on downstream variable '" + cm.spec[p].name + "'");
            break;
        case VariableSpec::Role::ConfounderPost:
            for (auto p : ps) {
                bool med = role_of(p) == VariableSpec::Role::Mediator;
                if (role_of(p) == VariableSpec::Role::Outcome)
                    throw ConfigError("model: confounder depends on the outcome");
                if (med) {
                    if (model.scenario == Scenario::JointMediators)
                        throw ConfigError("model: joint_mediators scenario but confounder '" +
                                          cm.spec[k].name + "' depends on mediator '" +
                                          cm.spec[p].name + "'");
                    if (p != cm.mediators.front())
                        throw ConfigError("model: interposed confounder '" + cm.spec[k].name +
                                          "' may depend only on the first mediator");
                }
            }
            break;
        case VariableSpec::Role::Mediator:
            for (auto p : ps) {
                if (role_of(p) == VariableSpec::Role::Outcome)
                    throw ConfigError("model: mediator depends on the outcome");
                if (model.scenario == Scenario::InterposedConfounder &&
                    k == cm.mediators.front() && role_of(p) == VariableSpec::Role::ConfounderPost)
                    throw ConfigError("model: first mediator '" + cm.spec[k].name +
                                      "' depends on interposed confounder '" + cm.spec[p].name +
                                      "'");
            }
            break;
        case VariableSpec::Role::Outcome:
            break;
        }
    }
    return cm;
}

// One forward pass through the structural equations. Values for variables at
// positions >= stop are untouched. Categorical draws use inverse-CDF on a
// single uniform; normal draws add sd * N(0,1) unless noise-free.
inline void draw_variable(const CompiledModel& cm, std::size_t k, std::vector<double>& value,
                          std::vector<std::int32_t>& level, std::mt19937_64& rng) {
    const auto& vs = cm.spec[k];
    if (vs.kind == VariableSpec::Kind::Categorical) {
        thread_local std::vector<double> probs;
        probs.resize(vs.values.size());
        cm.law_probs(k, value, probs.data());
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double u = unif(rng);
        double cum = 0.0;
        std::int32_t pick = static_cast<std::int32_t>(vs.values.size()) - 1;
        for (std::size_t l = 0; l < vs.values.size(); ++l) {
            cum += probs[l];
            if (u <= cum) {
                pick = static_cast<std::int32_t>(l);
                break;
            }
        }
        level[k] = pick;
        value[k] = vs.values[static_cast<std::size_t>(pick)];
    } else {
        double mu = cm.mean_of(k, value);
        if (vs.sd > 0.0) {
            std::normal_distribution<double> gauss(0.0, 1.0);
            mu += vs.sd * gauss(rng);
        }
        level[k] = -1;
        value[k] = mu;
    }
}

} // namespace detail

// Simulate n observations. Unobserved variables are withheld from the output
// unless expose_unobserved is set (their columns are needed to measure how
// much omitting them biases the estimators).
inline ObservationTable generate(const StructuralModel& model, std::size_t n, std::uint64_t seed,
                                 bool expose_unobserved = false) {
    auto cm = detail::compile(model);
    const std::size_t nv = cm.spec.size();
    std::vector<std::vector<double>> num_out(nv);
    std::vector<std::vector<std::int32_t>> code_out(nv);
    std::mt19937_64 rng = make_stream(seed, 0x9e11e7a7ULL);

    std::vector<double> value(nv);
    std::vector<std::int32_t> level(nv);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < nv; ++k) {
            detail::draw_variable(cm, k, value, level, rng);
            const auto& vs = cm.spec[k];
            if (vs.role == VariableSpec::Role::Unobserved && !expose_unobserved) continue;
            if (vs.kind == VariableSpec::Kind::Categorical && !vs.emit_numeric)
                code_out[k].push_back(level[k]);
            else
                num_out[k].push_back(value[k]);
        }
    }

    ObservationTable table;
    for (std::size_t k = 0; k < nv; ++k) {
        const auto& vs = cm.spec[k];
        if (vs.role == VariableSpec::Role::Unobserved && !expose_unobserved) continue;
        if (vs.kind == VariableSpec::Kind::Categorical && !vs.emit_numeric) {
            std::vector<std::string> labels;
            for (double v : vs.values) labels.push_back(detail::format_level(v));
            table.add_categorical(vs.name, std::move(code_out[k]), std::move(labels));
        } else {
            table.add_numeric(vs.name, std::move(num_out[k]));
        }
    }
    return table;
}

// Analysis roles implied by the model, with the reference level taken to be
// the group variable's first declared value. Unobserved variables are not
// part of the derived roles.
inline AnalysisConfig derive_config(const StructuralModel& model) {
    auto cm = detail::compile(model);
    AnalysisConfig cfg;
    cfg.scenario = cm.scenario;
    cfg.group = cm.spec[cm.group].name;
    cfg.reference_level = detail::format_level(cm.spec[cm.group].values.front());
    cfg.outcome = cm.spec[cm.outcome].name;
    for (auto k : cm.mediators) cfg.mediators.push_back(cm.spec[k].name);
    for (auto k : cm.pre) cfg.confounders_pre.push_back(cm.spec[k].name);
    for (auto k : cm.post) cfg.confounders_post.push_back(cm.spec[k].name);
    for (auto k : cm.covariates) cfg.covariates.push_back(cm.spec[k].name);
    return cfg;
}

// Column schema of the table produced by generate() with the same flag.
inline std::vector<ColumnSpec> derive_schema(const StructuralModel& model,
                                             bool expose_unobserved = false) {
    auto cm = detail::compile(model);
    std::vector<ColumnSpec> out;
    for (const auto& vs : cm.spec) {
        if (vs.role == VariableSpec::Role::Unobserved && !expose_unobserved) continue;
        ColumnSpec spec;
        spec.name = vs.name;
        if (vs.kind == VariableSpec::Kind::Categorical && !vs.emit_numeric) {
            spec.type = ColumnType::Categorical;
            for (double v : vs.values) spec.levels.push_back(detail::format_level(v));
        } else {
            spec.type = ColumnType::Numeric;
        }
        out.push_back(std::move(spec));
    }
    return out;
}

} // namespace cdecomp

#endif
