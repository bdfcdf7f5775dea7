// Acceptance harness: one self-contained check per release criterion,
// printing exactly one PASS/FAIL line each. Exit status is the number of
// failed criteria. Tolerances are pinned next to each check.
//
// Usage: cdecomp_acceptance --cli <path-to-cdecomp-binary> [--only N]

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cdecomp/cdecomp.hpp"

namespace fs = std::filesystem;
using namespace cdecomp;

namespace {

// ---------------------------------------------------------------- utilities

struct Outcome {
    bool pass = true;
    std::string detail;
    double seconds = 0.0;
};

struct Check {
    bool ok = true;
    std::ostringstream msg;

    void fail(const std::string& why) {
        if (!ok) msg << "; ";
        ok = false;
        msg << why;
    }
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(std::fabs(b), 1e-300);
}

// ------------------------------------------------------------ model builders

VariableSpec cat(const std::string& name, VariableSpec::Role role, std::vector<double> values) {
    VariableSpec v;
    v.name = name;
    v.role = role;
    v.kind = VariableSpec::Kind::Categorical;
    v.values = std::move(values);
    return v;
}

VariableSpec gauss(const std::string& name, VariableSpec::Role role, LinearExpr mean, double sd) {
    VariableSpec v;
    v.name = name;
    v.role = role;
    v.kind = VariableSpec::Kind::Normal;
    v.mean = std::move(mean);
    v.sd = sd;
    return v;
}

// Four groups, binary covariate, two binary upstream confounders, three-level
// mediators, linear outcome with main effects only.
StructuralModel recovery_joint_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.5, 0.5};
    m.variables.push_back(c);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1, 2, 3});
    g.logits = {{term(0.1), term(0.4, val("c"))},
                {term(-0.2), term(0.6, val("c"))},
                {term(-0.4), term(0.8, val("c"))}};
    m.variables.push_back(g);

    auto x1 = cat("x1", VariableSpec::Role::ConfounderPre, {0, 1});
    x1.logits = {{term(-0.3), term(0.4, ind("g", 1)), term(0.6, ind("g", 2)),
                  term(0.5, ind("g", 3)), term(0.3, val("c"))}};
    m.variables.push_back(x1);

    auto x2 = cat("x2", VariableSpec::Role::ConfounderPre, {0, 1});
    x2.logits = {{term(-0.5), term(0.3, ind("g", 1)), term(0.2, ind("g", 2)),
                  term(0.4, ind("g", 3)), term(0.5, val("x1")), term(0.2, val("c"))}};
    m.variables.push_back(x2);

    auto d = cat("d", VariableSpec::Role::Mediator, {0, 1, 2});
    d.logits = {{term(-0.2), term(0.5, ind("g", 1)), term(0.7, ind("g", 2)),
                 term(0.9, ind("g", 3)), term(0.4, val("x1")), term(0.3, val("x2")),
                 term(0.2, val("c"))},
                {term(-0.5), term(0.3, ind("g", 1)), term(0.5, ind("g", 2)),
                 term(0.8, ind("g", 3)), term(0.3, val("x1")), term(0.2, val("x2")),
                 term(0.3, val("c"))}};
    m.variables.push_back(d);

    auto md = cat("m", VariableSpec::Role::Mediator, {0, 1, 2});
    md.logits = {{term(-0.1), term(0.4, ind("g", 1)), term(0.5, ind("g", 2)),
                  term(0.6, ind("g", 3)), term(0.5, ind("d", 1)), term(0.7, ind("d", 2)),
                  term(0.2, val("x1")), term(0.2, val("x2")), term(0.2, val("c"))},
                 {term(-0.4), term(0.2, ind("g", 1)), term(0.4, ind("g", 2)),
                  term(0.5, ind("g", 3)), term(0.3, ind("d", 1)), term(0.5, ind("d", 2)),
                  term(0.3, val("x1")), term(0.1, val("x2")), term(0.1, val("c"))}};
    m.variables.push_back(md);

    m.variables.push_back(gauss(
        "y", VariableSpec::Role::Outcome,
        {term(0.5), term(0.6, ind("g", 1)), term(1.0, ind("g", 2)), term(1.4, ind("g", 3)),
         term(0.5, ind("d", 1)), term(0.8, ind("d", 2)), term(0.4, ind("m", 1)),
         term(0.7, ind("m", 2)), term(0.5, val("x1")), term(0.4, val("x2")),
         term(0.3, val("c"))},
        0.6));
    return m;
}

// Same shape, but the second confounder responds to the first mediator.
StructuralModel recovery_interposed_model() {
    StructuralModel m;
    m.scenario = Scenario::InterposedConfounder;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.5, 0.5};
    m.variables.push_back(c);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1, 2, 3});
    g.logits = {{term(0.1), term(0.4, val("c"))},
                {term(-0.2), term(0.6, val("c"))},
                {term(-0.4), term(0.8, val("c"))}};
    m.variables.push_back(g);

    auto x1 = cat("x1", VariableSpec::Role::ConfounderPre, {0, 1});
    x1.logits = {{term(-0.3), term(0.4, ind("g", 1)), term(0.6, ind("g", 2)),
                  term(0.5, ind("g", 3)), term(0.3, val("c"))}};
    m.variables.push_back(x1);

    auto d = cat("d", VariableSpec::Role::Mediator, {0, 1, 2});
    d.logits = {{term(-0.2), term(0.5, ind("g", 1)), term(0.7, ind("g", 2)),
                 term(0.9, ind("g", 3)), term(0.4, val("x1")), term(0.2, val("c"))},
                {term(-0.5), term(0.3, ind("g", 1)), term(0.5, ind("g", 2)),
                 term(0.8, ind("g", 3)), term(0.3, val("x1")), term(0.3, val("c"))}};
    m.variables.push_back(d);

    auto x2 = cat("x2", VariableSpec::Role::ConfounderPost, {0, 1});
    x2.logits = {{term(-0.5), term(0.3, ind("g", 1)), term(0.2, ind("g", 2)),
                  term(0.4, ind("g", 3)), term(0.4, val("x1")), term(0.6, ind("d", 1)),
                  term(0.8, ind("d", 2)), term(0.2, val("c"))}};
    m.variables.push_back(x2);

    auto md = cat("m", VariableSpec::Role::Mediator, {0, 1, 2});
    md.logits = {{term(-0.1), term(0.4, ind("g", 1)), term(0.5, ind("g", 2)),
                  term(0.6, ind("g", 3)), term(0.5, ind("d", 1)), term(0.7, ind("d", 2)),
                  term(0.2, val("x1")), term(0.3, val("x2")), term(0.2, val("c"))},
                 {term(-0.4), term(0.2, ind("g", 1)), term(0.4, ind("g", 2)),
                  term(0.5, ind("g", 3)), term(0.3, ind("d", 1)), term(0.5, ind("d", 2)),
                  term(0.3, val("x1")), term(0.1, val("x2")), term(0.1, val("c"))}};
    m.variables.push_back(md);

    m.variables.push_back(gauss(
        "y", VariableSpec::Role::Outcome,
        {term(0.5), term(0.6, ind("g", 1)), term(1.0, ind("g", 2)), term(1.4, ind("g", 3)),
         term(0.5, ind("d", 1)), term(0.8, ind("d", 2)), term(0.4, ind("m", 1)),
         term(0.7, ind("m", 2)), term(0.5, val("x1")), term(0.4, val("x2")),
         term(0.3, val("c"))},
        0.6));
    return m;
}

// No confounders at all: both weighting paths must coincide.
StructuralModel no_confounder_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.55, 0.45};
    m.variables.push_back(c);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1, 2});
    g.logits = {{term(-0.3), term(0.5, val("c"))}, {term(-0.8), term(0.9, val("c"))}};
    m.variables.push_back(g);

    auto d = cat("d", VariableSpec::Role::Mediator, {0, 1, 2});
    d.logits = {{term(-0.2), term(0.6, ind("g", 1)), term(0.8, ind("g", 2)), term(0.3, val("c"))},
                {term(-0.6), term(0.9, ind("g", 1)), term(1.1, ind("g", 2)), term(0.4, val("c"))}};
    m.variables.push_back(d);

    auto md = cat("m", VariableSpec::Role::Mediator, {0, 1});
    md.logits = {{term(-0.4), term(0.5, ind("g", 1)), term(0.6, ind("g", 2)),
                  term(0.5, ind("d", 1)), term(0.8, ind("d", 2)), term(0.3, val("c"))}};
    m.variables.push_back(md);

    m.variables.push_back(gauss("y", VariableSpec::Role::Outcome,
                                {term(0.5), term(0.6, ind("g", 1)), term(1.1, ind("g", 2)),
                                 term(0.5, ind("d", 1)), term(0.9, ind("d", 2)),
                                 term(0.7, val("m")), term(0.4, val("c"))},
                                0.8));
    return m;
}

// Homogeneous linear data with a single continuous upstream confounder, so
// the weighting and regression estimators target the same quantity.
StructuralModel linear_scalar_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.55, 0.45};
    m.variables.push_back(c);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1});
    g.logits = {{term(-0.1), term(0.5, val("c"))}};
    m.variables.push_back(g);

    m.variables.push_back(gauss("x", VariableSpec::Role::ConfounderPre,
                                {term(0.2), term(0.5, ind("g", 1)), term(0.3, val("c"))}, 0.8));

    auto d = cat("d", VariableSpec::Role::Mediator, {0, 1, 2});
    d.logits = {{term(-0.2), term(0.6, ind("g", 1)), term(0.5, val("x")), term(0.2, val("c"))},
                {term(-0.6), term(0.9, ind("g", 1)), term(0.3, val("x")), term(0.3, val("c"))}};
    m.variables.push_back(d);

    auto md = cat("m", VariableSpec::Role::Mediator, {0, 1});
    md.logits = {{term(-0.3), term(0.5, ind("g", 1)), term(0.4, ind("d", 1)),
                  term(0.6, ind("d", 2)), term(0.3, val("x")), term(0.2, val("c"))}};
    m.variables.push_back(md);

    m.variables.push_back(gauss("y", VariableSpec::Role::Outcome,
                                {term(0.4), term(0.7, ind("g", 1)), term(0.5, ind("d", 1)),
                                 term(0.9, ind("d", 2)), term(0.6, val("m")), term(0.5, val("x")),
                                 term(0.3, val("c"))},
                                0.8));
    return m;
}

// Binary hidden confounder with a constant outcome effect; the mediator is
// continuous so its composite score is the mediator itself.
StructuralModel hidden_constant_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.6, 0.4};
    m.variables.push_back(c);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1});
    g.logits = {{term(-0.1), term(0.5, val("c"))}};
    m.variables.push_back(g);

    auto u = cat("u", VariableSpec::Role::Unobserved, {0, 1});
    u.probs = {0.6, 0.4};
    m.variables.push_back(u);

    m.variables.push_back(gauss(
        "d", VariableSpec::Role::Mediator,
        {term(0.3), term(0.9, ind("g", 1)), term(0.8, val("u")), term(0.4, val("c"))}, 0.9));

    m.variables.push_back(gauss("y", VariableSpec::Role::Outcome,
                                {term(0.3), term(0.6, ind("g", 1)), term(0.8, val("d")),
                                 term(0.7, val("u")), term(0.4, val("c"))},
                                0.8));
    return m;
}

// Hidden confounder whose outcome effect differs across a binary observed
// modifier z (gamma_u = 0.5 + 0.8 z); z depends only on the covariate cell.
StructuralModel hidden_modified_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.6, 0.4};
    m.variables.push_back(c);

    auto z = cat("z", VariableSpec::Role::Covariate, {0, 1});
    z.logits = {{term(-0.2), term(0.8, val("c"))}};
    m.variables.push_back(z);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1});
    g.logits = {{term(-0.1), term(0.5, val("c")), term(0.3, val("z"))}};
    m.variables.push_back(g);

    auto u = cat("u", VariableSpec::Role::Unobserved, {0, 1});
    u.probs = {0.6, 0.4};
    m.variables.push_back(u);

    m.variables.push_back(gauss("d", VariableSpec::Role::Mediator,
                                {term(0.3), term(0.7, ind("g", 1)), term(0.6, val("u")),
                                 term(0.4, val("c")), term(0.2, val("z"))},
                                0.9));

    m.variables.push_back(gauss("y", VariableSpec::Role::Outcome,
                                {term(0.3), term(0.6, ind("g", 1)), term(0.8, val("d")),
                                 term(0.5, val("u")), term(0.8, val("z"), val("u")),
                                 term(0.3, val("z")), term(0.4, val("c"))},
                                0.8));
    return m;
}

// Small all-categorical system used for repeated-simulation coverage runs.
StructuralModel coverage_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.55, 0.45};
    m.variables.push_back(c);

    auto g = cat("g", VariableSpec::Role::Group, {0, 1});
    g.logits = {{term(-0.2), term(0.6, val("c"))}};
    m.variables.push_back(g);

    auto d = cat("d", VariableSpec::Role::Mediator, {0, 1, 2});
    d.logits = {{term(-0.3), term(0.7, ind("g", 1)), term(0.3, val("c"))},
                {term(-0.6), term(1.0, ind("g", 1)), term(0.4, val("c"))}};
    m.variables.push_back(d);

    auto md = cat("m", VariableSpec::Role::Mediator, {0, 1});
    md.logits = {{term(-0.4), term(0.5, ind("g", 1)), term(0.5, ind("d", 1)),
                  term(0.8, ind("d", 2)), term(0.3, val("c"))}};
    m.variables.push_back(md);

    m.variables.push_back(gauss("y", VariableSpec::Role::Outcome,
                                {term(0.5), term(0.6, ind("g", 1)), term(0.5, ind("d", 1)),
                                 term(0.9, ind("d", 2)), term(0.7, val("m")), term(0.4, val("c"))},
                                0.8));
    return m;
}

// Joint model with one categorical and one continuous covariate, used to
// exercise the benchmark table against a direct residualization.
StructuralModel benchmark_model() {
    StructuralModel m;
    auto c = cat("c", VariableSpec::Role::Covariate, {0, 1});
    c.probs = {0.5, 0.5};
    m.variables.push_back(c);

    m.variables.push_back(
        gauss("w", VariableSpec::Role::Covariate, {term(0.1), term(0.4, val("c"))}, 1.0));

    auto g = cat("g", VariableSpec::Role::Group, {0, 1});
    g.logits = {{term(-0.2), term(0.5, val("c")), term(0.3, val("w"))}};
    m.variables.push_back(g);

    auto d = cat("d", VariableSpec::Role::Mediator, {0, 1, 2});
    d.logits = {{term(-0.2), term(0.6, ind("g", 1)), term(0.3, val("c")), term(0.2, val("w"))},
                {term(-0.5), term(0.9, ind("g", 1)), term(0.2, val("c")), term(0.3, val("w"))}};
    m.variables.push_back(d);

    auto md = cat("m", VariableSpec::Role::Mediator, {0, 1});
    md.logits = {{term(-0.3), term(0.5, ind("g", 1)), term(0.4, ind("d", 1)),
                  term(0.6, ind("d", 2)), term(0.2, val("c")), term(0.2, val("w"))}};
    m.variables.push_back(md);

    m.variables.push_back(gauss("y", VariableSpec::Role::Outcome,
                                {term(0.4), term(0.7, ind("g", 1)), term(0.5, ind("d", 1)),
                                 term(0.9, ind("d", 2)), term(0.6, val("m")), term(0.4, val("c")),
                                 term(0.3, val("w"))},
                                0.8));
    return m;
}

// ----------------------------------------------------- shared statistic glue

// delta/zeta per comparison level, flattened in comparison order
std::vector<double> delta_zeta_stat(const AnalysisConfig& cfg, const ObservationTable& t,
                                    std::uint64_t s, bool interposed) {
    auto r = interposed ? decompose_interposed(cfg, t, s) : decompose(cfg, t, s);
    std::vector<double> v;
    for (const auto& e : r.estimates) {
        v.push_back(e.delta);
        v.push_back(e.zeta);
    }
    return v;
}

struct RecoveryCheck {
    Check chk;
    std::string summary;
};

// Shared body of the two oracle-recovery criteria: estimate, bootstrap,
// compare each comparison level against the enumerated truth.
RecoveryCheck run_recovery(const StructuralModel& model, std::size_t n, std::uint64_t gen_seed,
                           std::uint64_t est_seed, std::uint64_t boot_seed, int replicates,
                           bool interposed) {
    RecoveryCheck out;
    auto cfg = derive_config(model);
    auto table = generate(model, n, gen_seed);
    auto truth = oracle_truth_exact(model);

    DecompositionResult est = interposed ? decompose_interposed(cfg, table, est_seed)
                                         : decompose(cfg, table, est_seed);

    std::vector<std::string> names;
    for (const auto& e : est.estimates) {
        names.push_back(e.group_level + ".delta");
        names.push_back(e.group_level + ".zeta");
    }
    BootstrapOptions bopt;
    bopt.replicates = replicates;
    bopt.level = 0.95;
    bopt.stratified = true;
    bopt.seed = boot_seed;
    bopt.threads = 1;
    auto boot = bootstrap_estimate(
        table, cfg.group, names,
        [&cfg, interposed](const ObservationTable& t, std::uint64_t s) {
            return delta_zeta_stat(cfg, t, s, interposed);
        },
        bopt);

    double worst_d = 0.0, worst_z = 0.0;
    for (std::size_t k = 0; k < est.estimates.size(); ++k) {
        const auto& e = est.estimates[k];
        const OracleGroupResult* tr = nullptr;
        for (const auto& gr : truth.groups)
            if (gr.group_level == e.group_level) tr = &gr;
        if (!tr) {
            out.chk.fail("no oracle entry for level " + e.group_level);
            continue;
        }
        double se_d = boot.series[2 * k].se;
        double se_z = boot.series[2 * k + 1].se;
        double dd = std::fabs(e.delta - tr->delta);
        double dz = std::fabs(e.zeta - tr->zeta);
        worst_d = std::max(worst_d, dd);
        worst_z = std::max(worst_z, dz);
        if (dd >= 3.0 * se_d)
            out.chk.fail("level " + e.group_level + ": |delta err| " + fmt(dd) + " >= 3*SE " +
                         fmt(3.0 * se_d));
        if (dd >= 0.02)
            out.chk.fail("level " + e.group_level + ": |delta err| " + fmt(dd) + " >= 0.02");
        if (dz >= 3.0 * se_z)
            out.chk.fail("level " + e.group_level + ": |zeta err| " + fmt(dz) + " >= 3*SE " +
                         fmt(3.0 * se_z));
        if (dz >= 0.02)
            out.chk.fail("level " + e.group_level + ": |zeta err| " + fmt(dz) + " >= 0.02");
        if (std::fabs(e.tau - (e.delta + e.zeta)) > 1e-12)
            out.chk.fail("level " + e.group_level + ": additivity breach");
    }
    out.summary = "max|delta err|=" + fmt(worst_d) + ", max|zeta err|=" + fmt(worst_z) +
                  ", B=" + std::to_string(replicates) + ", boot failures=" +
                  std::to_string(boot.failures);
    return out;
}

// --------------------------------------------------------------- criterion 1

Outcome criterion1() {
    Outcome out;
    Check chk;
    const double tol = 1e-12;
    double worst = 0.0;
    int checked = 0;

    auto scan = [&](const DecompositionResult& r) {
        for (const auto& e : r.estimates) {
            double gap = std::fabs(e.tau - (e.delta + e.zeta));
            worst = std::max(worst, gap);
            ++checked;
            if (gap > tol)
                chk.fail(std::string(to_string(r.kind)) + " level " + e.group_level +
                         ": |tau-(delta+zeta)| = " + fmt(gap));
        }
    };

    {
        auto model = recovery_joint_model();
        auto cfg = derive_config(model);
        auto table = generate(model, 8000, 101);
        scan(decompose(cfg, table, 11));
        auto cfg_vec = cfg;
        cfg_vec.regression_vector_x = true; // two upstream confounders
        scan(decompose_regression(cfg_vec, table));
        auto cfg_diff = cfg;
        cfg_diff.differential_effects = {{"1", "d"}, {"2", "m"}};
        scan(decompose(cfg_diff, table, 11));
    }
    {
        auto model = recovery_interposed_model();
        auto cfg = derive_config(model);
        auto table = generate(model, 8000, 102);
        scan(decompose_interposed(cfg, table, 11));
    }
    {
        auto model = linear_scalar_model();
        auto cfg = derive_config(model);
        auto table = generate(model, 8000, 103);
        scan(decompose(cfg, table, 11));
        scan(decompose_regression(cfg, table));
    }

    out.pass = chk.ok;
    out.detail = chk.ok ? "tau == delta + zeta within 1e-12 on " + std::to_string(checked) +
                              " estimates across all estimators (worst " + fmt(worst, 3) + ")"
                        : chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 2

Outcome criterion2() {
    Outcome out;
    auto t0 = std::chrono::steady_clock::now();
    auto rc = run_recovery(recovery_joint_model(), 50000, 4021, 7, 4023, 200, false);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.seconds >= 60.0)
        rc.chk.fail("runtime " + fmt(out.seconds, 3) + "s exceeds 60s budget");
    out.pass = rc.chk.ok;
    out.detail = rc.chk.ok ? "4-group joint recovery vs enumerated truth: " + rc.summary
                           : rc.chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 3

Outcome criterion3() {
    Outcome out;
    auto t0 = std::chrono::steady_clock::now();
    auto rc = run_recovery(recovery_interposed_model(), 50000, 5031, 9, 5033, 200, true);

    // With no confounders declared, both weighting paths must agree exactly.
    auto model = no_confounder_model();
    auto cfg = derive_config(model);
    auto table = generate(model, 6000, 77);
    auto joint = decompose(cfg, table, 21);
    auto cfg_i = cfg;
    cfg_i.scenario = Scenario::InterposedConfounder;
    auto inter = decompose_interposed(cfg_i, table, 21);
    double agree = 0.0;
    for (std::size_t k = 0; k < joint.estimates.size(); ++k) {
        agree = std::max(agree, std::fabs(joint.estimates[k].delta - inter.estimates[k].delta));
        agree = std::max(agree, std::fabs(joint.estimates[k].zeta - inter.estimates[k].zeta));
        agree = std::max(agree, std::fabs(joint.estimates[k].tau - inter.estimates[k].tau));
    }
    if (agree > 1e-12)
        rc.chk.fail("confounder-free agreement gap " + fmt(agree) + " > 1e-12");

    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.seconds >= 60.0)
        rc.chk.fail("runtime " + fmt(out.seconds, 3) + "s exceeds 60s budget");
    out.pass = rc.chk.ok;
    out.detail = rc.chk.ok ? "interposed recovery: " + rc.summary +
                                 "; confounder-free agreement gap " + fmt(agree, 3)
                           : rc.chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 4

Outcome criterion4() {
    Outcome out;
    Check chk;
    const double tol = 0.02;
    auto model = linear_scalar_model();
    auto cfg = derive_config(model);
    auto table = generate(model, 50000, 6041);
    auto w = decompose(cfg, table, 5);
    auto r = decompose_regression(cfg, table);
    double worst = 0.0;
    for (std::size_t k = 0; k < w.estimates.size(); ++k) {
        const auto& a = w.estimates[k];
        const auto& b = r.estimates[k];
        double dt = std::fabs(a.tau - b.tau);
        double dd = std::fabs(a.delta - b.delta);
        double dz = std::fabs(a.zeta - b.zeta);
        worst = std::max({worst, dt, dd, dz});
        if (dt >= tol || dd >= tol || dz >= tol)
            chk.fail("level " + a.group_level + ": weighting vs regression gaps tau=" + fmt(dt) +
                     " delta=" + fmt(dd) + " zeta=" + fmt(dz) + " (tol 0.02)");
    }
    out.pass = chk.ok;
    out.detail = chk.ok
                     ? "weighting vs regression agree at n=50000: max gap " + fmt(worst, 3) +
                           " < 0.02"
                     : chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 5

// Partial R2 of one column in a fitted linear model, via its t statistic.
double partial_r2_of(const LinearModel& m, const std::string& col, Check& chk) {
    auto j = m.column_index(col);
    if (j < 0) {
        chk.fail("column '" + col + "' missing from design");
        return 0.0;
    }
    double t = m.t_stat(static_cast<std::size_t>(j));
    return t * t / (t * t + m.df);
}

Outcome criterion5() {
    Outcome out;
    Check chk;
    auto t0 = std::chrono::steady_clock::now();

    const std::size_t n = 100000;
    const std::uint64_t seed = 7051;
    auto model = hidden_constant_model();
    auto cfg = derive_config(model); // hidden variable not referenced

    // Simulated gap between the confounder-blind and confounder-adjusted runs.
    auto emp = empirical_bias(model, cfg, n, seed);
    if (emp.size() != 1) {
        chk.fail("expected one comparison level");
        out.pass = false;
        out.detail = chk.msg.str();
        return out;
    }
    const auto& eb = emp[0];
    if (std::fabs(eb.delta_bias + eb.zeta_bias) > 1e-10)
        chk.fail("simulated biases of the two components do not cancel: " +
                 fmt(eb.delta_bias + eb.zeta_bias));

    // Formula side, on the same realized table with the hidden column exposed.
    auto exposed = generate(model, n, seed, /*expose_unobserved=*/true);
    auto basis = sensitivity_basis(cfg, exposed);
    auto est = decompose(cfg, exposed, derive_seed(seed, 0xb1a5ULL));
    auto in = make_sensitivity_inputs(basis, est.estimates[0]);

    DesignSpec yspec;
    yspec.intercept().main(cfg.group).main("d").main("c").main("u");
    yspec.reference_levels[cfg.group] = cfg.reference_level;
    auto ymod = fit_linear_model(exposed, "y", yspec);
    double r2_yu = partial_r2_of(ymod, "u=1", chk);

    DesignSpec dspec;
    dspec.intercept().main(cfg.group).main("c").main("u");
    dspec.reference_levels[cfg.group] = cfg.reference_level;
    auto dmod = fit_linear_model(exposed, "d", dspec);
    double r2_udm = partial_r2_of(dmod, "u=1", chk);

    double formula = compute_bias(r2_yu, r2_udm, in);
    double re = rel_err(std::fabs(formula), std::fabs(eb.delta_bias));
    if (re >= 0.10)
        chk.fail("formula " + fmt(formula) + " vs simulated " + fmt(eb.delta_bias) +
                 ": relative gap " + fmt(re, 3) + " >= 10%");

    // Exact boundary behaviour: either share at zero kills the bound.
    if (compute_bias(0.0, r2_udm, in) != 0.0) chk.fail("bias not exactly 0 at r2_yu = 0");
    if (compute_bias(r2_yu, 0.0, in) != 0.0) chk.fail("bias not exactly 0 at r2_udm = 0");

    // The adjustment moves both components by the same amount, exactly.
    for (double b : {0.01, 0.05, formula}) {
        auto adj = adjusted_estimates(in, b);
        double sign = in.delta_hat < 0.0 ? -1.0 : 1.0;
        if (adj.delta_adj != in.delta_hat - sign * b || adj.zeta_adj != in.zeta_hat + sign * b) {
            chk.fail("adjusted estimates do not apply identical magnitudes at bias " + fmt(b));
            break;
        }
    }

    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.seconds >= 120.0)
        chk.fail("runtime " + fmt(out.seconds, 3) + "s exceeds 120s budget");
    out.pass = chk.ok;
    out.detail = chk.ok ? "bias formula " + fmt(formula) + " vs simulated " +
                              fmt(std::fabs(eb.delta_bias)) + " (rel gap " + fmt(re, 3) +
                              "); zero-share and equal-magnitude checks exact"
                        : chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 6

Outcome criterion6() {
    Outcome out;
    Check chk;
    auto t0 = std::chrono::steady_clock::now();

    const std::size_t n = 100000;
    const std::uint64_t seed = 8061;
    auto model = hidden_modified_model();
    auto cfg = derive_config(model);
    auto emp = empirical_bias(model, cfg, n, seed);
    if (emp.size() != 1) {
        chk.fail("expected one comparison level");
        out.pass = false;
        out.detail = chk.msg.str();
        return out;
    }

    // Closed-form inputs from the generating process. The modifier z ignores
    // the group, so its reference-group law equals its covariate-cell law.
    auto logistic = [](double eta) { return 1.0 / (1.0 + std::exp(-eta)); };
    const double var_u = 0.4 * 0.6;
    StratifiedBiasInputs in;
    in.cell_probs = {0.6 * (1.0 - logistic(-0.2)), 0.6 * logistic(-0.2),
                     0.4 * (1.0 - logistic(0.6)), 0.4 * logistic(0.6)};
    in.z_probs = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};
    in.gamma_u = {{0.5, 1.3}, {0.5, 1.3}, {0.5, 1.3}, {0.5, 1.3}};
    in.cell_gaps = {0.7, 0.7, 0.7, 0.7};
    // Hidden-variable slope on the mediator residual: u ~ d | (g, c, z).
    in.beta_dm = 0.6 * var_u / (0.36 * var_u + 0.81);

    // Equivalent two-cell form: average the modifier strata inside each
    // covariate cell with the reference-group modifier law.
    StratifiedBiasInputs in2;
    in2.cell_probs = {0.6, 0.4};
    in2.z_probs = {{1.0 - logistic(-0.2), logistic(-0.2)}, {1.0 - logistic(0.6), logistic(0.6)}};
    in2.gamma_u = {{0.5, 1.3}, {0.5, 1.3}};
    in2.cell_gaps = {0.7, 0.7};
    in2.beta_dm = in.beta_dm;

    double formula = compute_modified_bias(in2);
    double formula_flat = compute_modified_bias(in);
    if (std::fabs(formula - formula_flat) > 1e-12)
        chk.fail("cell refinements disagree: " + fmt(formula) + " vs " + fmt(formula_flat));

    double re = rel_err(formula, std::fabs(emp[0].delta_bias));
    if (re >= 0.10)
        chk.fail("stratified formula " + fmt(formula) + " vs simulated " +
                 fmt(emp[0].delta_bias) + ": relative gap " + fmt(re, 3) + " >= 10%");

    // Constant effect across strata collapses to the unstratified product.
    StratifiedBiasInputs flat = in2;
    flat.gamma_u = {{0.9, 0.9}, {0.9, 0.9}};
    double collapsed = compute_modified_bias(flat);
    double plain = 0.9 * flat.beta_dm * (0.6 * 0.7 + 0.4 * 0.7);
    if (std::fabs(collapsed - plain) > 1e-12)
        chk.fail("constant-effect collapse: " + fmt(collapsed) + " vs " + fmt(plain));

    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.pass = chk.ok;
    out.detail = chk.ok ? "stratified bias " + fmt(formula) + " vs simulated " +
                              fmt(std::fabs(emp[0].delta_bias)) + " (rel gap " + fmt(re, 3) +
                              "); constant-effect case collapses exactly"
                        : chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 7

Outcome criterion7() {
    Outcome out;
    Check chk;
    auto t0 = std::chrono::steady_clock::now();

    auto model = coverage_model();
    auto cfg = derive_config(model);
    auto truth = oracle_truth_exact(model);
    double delta_true = truth.groups[0].delta;

    const int sims = 200;
    const int B = 500;
    int covered = 0, errored = 0;
    for (int s = 0; s < sims; ++s) {
        auto table = generate(model, 2000, derive_seed(0xC0FFEE, static_cast<std::uint64_t>(s)));
        BootstrapOptions bopt;
        bopt.replicates = B;
        bopt.level = 0.95;
        bopt.stratified = true;
        bopt.seed = derive_seed(0xB00757, static_cast<std::uint64_t>(s));
        bopt.threads = 1;
        try {
            auto boot = bootstrap_estimate(
                table, cfg.group, {"delta"},
                [&cfg](const ObservationTable& t, std::uint64_t rs) {
                    auto r = decompose(cfg, t, rs);
                    return std::vector<double>{r.estimates[0].delta};
                },
                bopt);
            if (boot.series[0].lo <= delta_true && delta_true <= boot.series[0].hi) ++covered;
        } catch (const EstimationError&) {
            ++errored;
        }
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (covered < 178 || covered > 198)
        chk.fail("covered " + std::to_string(covered) + "/200, outside [178, 198]" +
                 (errored ? " (" + std::to_string(errored) + " runs errored)" : ""));
    if (out.seconds >= 600.0)
        chk.fail("runtime " + fmt(out.seconds, 3) + "s exceeds 600s budget");
    out.pass = chk.ok;
    out.detail = chk.ok ? "95% intervals covered the true reduction in " +
                              std::to_string(covered) + "/200 simulations (B=500)"
                        : chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 8

// Partial R2 of design column j by direct residualization: regress both the
// response and the column on every other column, then square the
// correlation of the two residual vectors.
double fw_partial_r2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::ptrdiff_t j) {
    const auto n = X.rows();
    const auto p = X.cols();
    Eigen::MatrixXd rest(n, p - 1);
    std::ptrdiff_t c = 0;
    for (std::ptrdiff_t k = 0; k < p; ++k)
        if (k != j) rest.col(c++) = X.col(k);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rest);
    Eigen::VectorXd ey = y - rest * qr.solve(y);
    Eigen::VectorXd ej = X.col(j) - rest * qr.solve(X.col(j));
    double num = ey.dot(ej);
    return num * num / (ey.squaredNorm() * ej.squaredNorm());
}

Outcome criterion8() {
    Outcome out;
    Check chk;

    // Published reduction percentages reproduce to one decimal.
    auto pct = [](double delta, double tau) { return 100.0 * delta / tau; };
    auto round1 = [](double v) { return std::round(v * 10.0) / 10.0; };
    if (std::fabs(round1(pct(-0.599, -0.976)) - 61.4) > 1e-9)
        chk.fail("pct(-0.599, -0.976) rounds to " + fmt(round1(pct(-0.599, -0.976)), 4) +
                 ", expected 61.4");
    if (std::fabs(round1(pct(-0.531, -0.927)) - 57.3) > 1e-9)
        chk.fail("pct(-0.531, -0.927) rounds to " + fmt(round1(pct(-0.531, -0.927)), 4) +
                 ", expected 57.3");

    // Benchmark table vs direct residualization.
    auto model = benchmark_model();
    auto cfg = derive_config(model);
    auto table = generate(model, 4000, 9071);
    auto basis = sensitivity_basis(cfg, table);
    auto bench = benchmark_covariates(cfg, table, basis);
    if (bench.empty()) chk.fail("benchmark table is empty");

    auto ymod = fit_linear_model(table, cfg.outcome, detail::outcome_design(cfg));
    Eigen::MatrixXd Xy = ymod.design.matrix(table);
    const auto& yv = table.numeric(cfg.outcome);
    Eigen::Map<const Eigen::VectorXd> yvec(yv.data(), static_cast<std::ptrdiff_t>(yv.size()));

    ObservationTable aug = table;
    aug.add_numeric("__score", std::vector<double>(basis.composite));
    DesignSpec sspec;
    sspec.intercept().main(cfg.group);
    for (const auto& cpre : cfg.confounders_pre) sspec.main(cpre);
    for (const auto& cpost : cfg.confounders_post) sspec.main(cpost);
    for (const auto& cov : cfg.covariates) sspec.main(cov);
    sspec.reference_levels[cfg.group] = cfg.reference_level;
    auto smod = fit_linear_model(aug, "__score", sspec);
    Eigen::MatrixXd Xs = smod.design.matrix(aug);
    const auto& sv = aug.numeric("__score");
    Eigen::Map<const Eigen::VectorXd> svec(sv.data(), static_cast<std::ptrdiff_t>(sv.size()));

    double worst = 0.0;
    int compared = 0;
    for (const auto& bp : bench) {
        if (bp.multiplier != 1) continue;
        auto jy = ymod.column_index(bp.covariate);
        auto js = smod.column_index(bp.covariate);
        if (jy < 0 || js < 0) {
            chk.fail("benchmark column '" + bp.covariate + "' missing from a design");
            continue;
        }
        double ry = fw_partial_r2(Xy, yvec, jy);
        double rs = fw_partial_r2(Xs, svec, js);
        worst = std::max({worst, std::fabs(ry - bp.r2_y), std::fabs(rs - bp.r2_dm)});
        ++compared;
        if (std::fabs(ry - bp.r2_y) > 1e-8)
            chk.fail("outcome-side R2 for " + bp.covariate + ": " + fmt(bp.r2_y) +
                     " vs residualized " + fmt(ry));
        if (std::fabs(rs - bp.r2_dm) > 1e-8)
            chk.fail("mediator-side R2 for " + bp.covariate + ": " + fmt(bp.r2_dm) +
                     " vs residualized " + fmt(rs));
    }
    if (compared == 0) chk.fail("no unit-strength benchmark rows to compare");

    out.pass = chk.ok;
    out.detail = chk.ok ? "61.4% and 57.3% reproduce exactly; " + std::to_string(compared) +
                              " benchmark R2 values match residualization (worst gap " +
                              fmt(worst, 3) + ")"
                        : chk.msg.str();
    return out;
}

// --------------------------------------------------------------- criterion 9

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& dir,
            const std::string& tag) {
    std::string cmd = cli + " " + args + " > " + (dir / (tag + ".out")).string() + " 2> " +
                      (dir / (tag + ".err")).string();
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

const char* kCliModel = R"JSON({
  "scenario": "joint_mediators",
  "variables": [
    {"name": "c", "role": "covariate", "kind": "categorical", "values": [0, 1],
     "probs": [0.55, 0.45]},
    {"name": "g", "role": "group", "kind": "categorical", "values": [0, 1, 2],
     "logits": [[{"coef": -0.3}, {"coef": 0.5, "factors": ["c"]}],
                [{"coef": -0.8}, {"coef": 0.9, "factors": ["c"]}]]},
    {"name": "x", "role": "confounder_pre", "kind": "categorical", "values": [0, 1],
     "logits": [[{"coef": -0.2}, {"coef": 0.4, "factors": [{"var": "g", "eq": 1}]},
                 {"coef": 0.6, "factors": [{"var": "g", "eq": 2}]},
                 {"coef": 0.3, "factors": ["c"]}]]},
    {"name": "d", "role": "mediator", "kind": "categorical", "values": [0, 1, 2],
     "logits": [[{"coef": -0.2}, {"coef": 0.6, "factors": [{"var": "g", "eq": 1}]},
                 {"coef": 0.8, "factors": [{"var": "g", "eq": 2}]},
                 {"coef": 0.4, "factors": ["x"]}, {"coef": 0.3, "factors": ["c"]}],
                [{"coef": -0.6}, {"coef": 0.9, "factors": [{"var": "g", "eq": 1}]},
                 {"coef": 1.1, "factors": [{"var": "g", "eq": 2}]},
                 {"coef": 0.3, "factors": ["x"]}, {"coef": 0.4, "factors": ["c"]}]]},
    {"name": "m", "role": "mediator", "kind": "categorical", "values": [0, 1],
     "logits": [[{"coef": -0.4}, {"coef": 0.5, "factors": [{"var": "g", "eq": 1}]},
                 {"coef": 0.6, "factors": [{"var": "g", "eq": 2}]},
                 {"coef": 0.5, "factors": [{"var": "d", "eq": 1}]},
                 {"coef": 0.8, "factors": [{"var": "d", "eq": 2}]},
                 {"coef": 0.2, "factors": ["x"]}, {"coef": 0.3, "factors": ["c"]}]]},
    {"name": "y", "role": "outcome", "kind": "normal", "sd": 0.8,
     "mean": [{"coef": 0.5}, {"coef": 0.6, "factors": [{"var": "g", "eq": 1}]},
              {"coef": 1.1, "factors": [{"var": "g", "eq": 2}]},
              {"coef": 0.5, "factors": [{"var": "d", "eq": 1}]},
              {"coef": 0.9, "factors": [{"var": "d", "eq": 2}]},
              {"coef": 0.7, "factors": ["m"]}, {"coef": 0.5, "factors": ["x"]},
              {"coef": 0.4, "factors": ["c"]}]}
  ]
})JSON";

Outcome criterion9(const std::string& cli) {
    Outcome out;
    Check chk;
    if (cli.empty()) {
        out.pass = false;
        out.detail = "no --cli path supplied; cannot exercise the executable";
        return out;
    }

    fs::path root = fs::temp_directory_path() /
                    ("cdecomp_accept_" + std::to_string(static_cast<long>(::getpid())));
    fs::create_directories(root);
    fs::path model_path = root / "model.json";
    {
        std::ofstream f(model_path);
        f << kCliModel;
    }

    auto expect_zero = [&](int rc, const std::string& what, const std::string& tag) {
        if (rc != 0)
            chk.fail(what + " exited with " + std::to_string(rc) + " (" +
                     slurp(root / (tag + ".err")) + ")");
    };

    auto compare = [&](const fs::path& a, const fs::path& b, const std::string& what) {
        if (!fs::exists(a) || !fs::exists(b)) {
            chk.fail(what + ": output file missing");
            return;
        }
        if (slurp(a) != slurp(b)) chk.fail(what + " differs between runs");
    };

    // Two identical simulate runs.
    for (int k = 0; k < 2; ++k) {
        fs::path d = root / ("sim" + std::to_string(k));
        expect_zero(run_cli(cli,
                            "simulate --model " + model_path.string() + " --n 3000 --seed 42 " +
                                "--out-dir " + d.string(),
                            root, "sim" + std::to_string(k)),
                    "simulate run " + std::to_string(k), "sim" + std::to_string(k));
    }
    for (const char* f : {"data.csv", "config.json", "manifest.json"})
        compare(root / "sim0" / f, root / "sim1" / f, std::string("simulate ") + f);

    fs::path data = root / "sim0" / "data.csv";
    fs::path config = root / "sim0" / "config.json";

    // Decompose with bootstrap, single-threaded vs multi-threaded.
    for (int k = 0; k < 2; ++k) {
        fs::path d = root / ("dec" + std::to_string(k));
        std::string threads = k == 0 ? "1" : "4";
        expect_zero(run_cli(cli,
                            "decompose --config " + config.string() + " --data " + data.string() +
                                " --out-dir " + d.string() +
                                " --seed 7 --bootstrap 60 --threads " + threads,
                            root, "dec" + std::to_string(k)),
                    "decompose with " + threads + " threads", "dec" + std::to_string(k));
    }
    for (const char* f : {"decomposition.csv", "summary.json", "manifest.json"})
        compare(root / "dec0" / f, root / "dec1" / f, std::string("decompose ") + f);

    // Sensitivity, single-threaded vs multi-threaded.
    for (int k = 0; k < 2; ++k) {
        fs::path d = root / ("sen" + std::to_string(k));
        std::string threads = k == 0 ? "1" : "4";
        expect_zero(run_cli(cli,
                            "sensitivity --config " + config.string() + " --data " +
                                data.string() + " --out-dir " + d.string() +
                                " --seed 11 --bootstrap 40 --grid-n 5 --threads " + threads,
                            root, "sen" + std::to_string(k)),
                    "sensitivity with " + threads + " threads", "sen" + std::to_string(k));
    }
    for (const char* f : {"summary.json", "benchmarks.csv", "grid_1.csv", "grid_2.csv",
                          "manifest.json"})
        compare(root / "sen0" / f, root / "sen1" / f, std::string("sensitivity ") + f);

    // Sampling-based oracle twice with one seed.
    for (int k = 0; k < 2; ++k) {
        fs::path d = root / ("ora" + std::to_string(k));
        expect_zero(run_cli(cli,
                            "oracle --model " + model_path.string() + " --method mc --mc 20000 " +
                                "--seed 9 --out-dir " + d.string(),
                            root, "ora" + std::to_string(k)),
                    "oracle run " + std::to_string(k), "ora" + std::to_string(k));
    }
    for (const char* f : {"oracle.json", "manifest.json"})
        compare(root / "ora0" / f, root / "ora1" / f, std::string("oracle ") + f);

    // Validate prints to stdout; compare the captures.
    for (int k = 0; k < 2; ++k)
        expect_zero(run_cli(cli,
                            "validate --config " + config.string() + " --data " + data.string(),
                            root, "val" + std::to_string(k)),
                    "validate run " + std::to_string(k), "val" + std::to_string(k));
    compare(root / "val0.out", root / "val1.out", "validate stdout");

    fs::remove_all(root);
    out.pass = chk.ok;
    out.detail = chk.ok ? "simulate, decompose, sensitivity, oracle, and validate are "
                          "byte-identical across reruns and thread counts"
                        : chk.msg.str();
    return out;
}

// -------------------------------------------------------------- criterion 10

Outcome criterion10() {
    Outcome out;
    Check chk;

    // (a) Fitted multinomial scores vanish, checked by central differences of
    // the log-likelihood itself.
    {
        auto model = recovery_joint_model();
        auto table = generate(model, 3000, 10081);
        DesignSpec spec;
        spec.intercept().main("g").main("x1").main("x2").main("c");
        spec.reference_levels["g"] = "0";
        auto fit = fit_multinomial_logit(table, "d", spec);
        Eigen::MatrixXd X = fit.design.matrix(table);
        const auto& codes = table.categorical("d").codes;
        const std::size_t K = fit.levels.size();
        const double h = 3e-5;
        double worst = 0.0;
        for (Eigen::Index r = 0; r < fit.coef.rows(); ++r) {
            for (Eigen::Index c = 0; c < fit.coef.cols(); ++c) {
                Eigen::MatrixXd up = fit.coef, dn = fit.coef;
                up(r, c) += h;
                dn(r, c) -= h;
                double g = (multinomial_log_likelihood(X, codes, K, up) -
                            multinomial_log_likelihood(X, codes, K, dn)) /
                           (2.0 * h);
                worst = std::max(worst, std::fabs(g));
            }
        }
        if (worst >= 1e-5)
            chk.fail("finite-difference score " + fmt(worst) + " >= 1e-5 at the optimum");
        else
            chk.msg << "fd score " << fmt(worst, 3);
    }

    // (b) A saturated fit reproduces the empirical cell proportions.
    {
        ObservationTable t;
        std::mt19937_64 rng = make_stream(10082, 1);
        const std::size_t n = 900;
        std::vector<std::int32_t> gc(n), dc(n);
        const double pg[3] = {0.3, 0.4, 0.3};
        const double pd[3][3] = {{0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}};
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto pick = [&](const double* p) {
            double u = unif(rng), cum = 0.0;
            for (int l = 0; l < 3; ++l) {
                cum += p[l];
                if (u <= cum) return l;
            }
            return 2;
        };
        for (std::size_t i = 0; i < n; ++i) {
            gc[i] = pick(pg);
            dc[i] = pick(pd[gc[i]]);
        }
        t.add_categorical("g", gc, {"0", "1", "2"});
        t.add_categorical("d", dc, {"0", "1", "2"});

        DesignSpec spec;
        spec.intercept().main("g");
        auto fit = fit_multinomial_logit(t, "d", spec);

        double counts[3][3] = {};
        double totals[3] = {};
        for (std::size_t i = 0; i < n; ++i) {
            counts[gc[i]][dc[i]] += 1.0;
            totals[gc[i]] += 1.0;
        }
        RowView row(t, 0);
        double worst = 0.0;
        for (std::int32_t gl = 0; gl < 3; ++gl) {
            row.override_code(t.column_index("g"), gl);
            auto probs = fit.probabilities(row);
            for (std::size_t l = 0; l < 3; ++l)
                worst = std::max(worst, std::fabs(probs[l] - counts[gl][l] / totals[gl]));
        }
        if (worst > 1e-8)
            chk.fail("saturated fit misses cell proportions by " + fmt(worst));
        else
            chk.msg << (chk.ok ? "; " : "") << "saturated gap " << fmt(worst, 3);
    }

    // (c) Least squares agrees with the normal equations.
    {
        ObservationTable t;
        std::mt19937_64 rng = make_stream(10083, 2);
        const std::size_t n = 400;
        std::normal_distribution<double> gau(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> xv(n), wv(n), yv(n);
        std::vector<std::int32_t> qc(n);
        for (std::size_t i = 0; i < n; ++i) {
            xv[i] = gau(rng);
            wv[i] = 0.3 * xv[i] + gau(rng);
            double u = unif(rng);
            qc[i] = u < 0.4 ? 0 : (u < 0.75 ? 1 : 2);
            yv[i] = 0.5 + 0.8 * xv[i] - 0.6 * wv[i] + 0.3 * (qc[i] == 1) + 0.9 * (qc[i] == 2) +
                    gau(rng);
        }
        t.add_numeric("x", xv);
        t.add_numeric("w", wv);
        t.add_categorical("q", qc, {"a", "b", "c"});
        t.add_numeric("y", yv);

        DesignSpec spec;
        spec.intercept().main("x").main("w").main("q");
        auto fit = fit_linear_model(t, "y", spec);
        Eigen::MatrixXd X = fit.design.matrix(t);
        Eigen::Map<const Eigen::VectorXd> y(yv.data(), static_cast<std::ptrdiff_t>(n));
        Eigen::MatrixXd xtx = X.transpose() * X;
        Eigen::VectorXd beta_ne = xtx.ldlt().solve(X.transpose() * y);
        Eigen::VectorXd resid = y - X * beta_ne;
        double sigma2 = resid.squaredNorm() / (static_cast<double>(n) - X.cols());
        Eigen::MatrixXd cov = sigma2 * xtx.inverse();

        double worst = (fit.beta - beta_ne).cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            worst = std::max(worst, std::fabs(fit.std_errors[j] - std::sqrt(cov(j, j))));
        if (worst > 1e-8)
            chk.fail("least-squares fit differs from normal equations by " + fmt(worst));
        else
            chk.msg << (chk.ok ? "; " : "") << "ols gap " << fmt(worst, 3);
    }

    out.pass = chk.ok;
    out.detail = chk.ok ? "model fits verified (" + chk.msg.str() + ")" : chk.msg.str();
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::string cli;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc)
            cli = argv[++i];
        else if (a == "--only" && i + 1 < argc)
            only = std::atoi(argv[++i]);
        else {
            std::cerr << "usage: cdecomp_acceptance --cli <path> [--only N]\n";
            return 64;
        }
    }

    using Fn = std::function<Outcome()>;
    std::vector<Fn> criteria = {
        criterion1,  criterion2, criterion3, criterion4, criterion5,
        criterion6,  criterion7, criterion8, [&cli] { return criterion9(cli); },
        criterion10,
    };

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        int num = static_cast<int>(k) + 1;
        if (only != 0 && num != only) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("unhandled exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char tbuf[32];
        std::snprintf(tbuf, sizeof(tbuf), "%.1fs", secs);
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << num << ": " << o.detail
                  << " [" << tbuf << "]" << std::endl;
        if (!o.pass) ++failures;
    }
    return failures;
}
