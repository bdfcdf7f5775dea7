// Command line front end: decompose, sensitivity, simulate, oracle, validate.
//
// Exit codes: 0 success; 2 configuration or input problems; 3 estimation,
// inference, or output failures; 4 positivity violations under --strict.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdecomp/cdecomp.hpp"

namespace fs = std::filesystem;
using namespace cdecomp;

namespace {

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError(std::string(what) + " file '" + path + "' cannot be opened");
    std::ostringstream ss;
    ss << is.rdbuf();
    if (!is.good() && !is.eof())
        throw ConfigError(std::string(what) + " file '" + path + "' cannot be read");
    return ss.str();
}

std::string sanitize_for_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_')
                   ? c
                   : '_';
    return out.empty() ? std::string("_") : out;
}

std::string table_to_csv(const ObservationTable& t) {
    std::ostringstream os;
    std::vector<std::string> fields;
    for (std::size_t j = 0; j < t.n_cols(); ++j) fields.push_back(t.name(j));
    write_csv_row(os, fields);
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        fields.clear();
        for (std::size_t j = 0; j < t.n_cols(); ++j) {
            if (t.type(j) == ColumnType::Numeric) {
                fields.push_back(format_g17(t.numeric(j)[i]));
            } else {
                const auto& c = t.categorical(j);
                fields.push_back(c.levels[static_cast<std::size_t>(c.codes[i])]);
            }
        }
        write_csv_row(os, fields);
    }
    return os.str();
}

// The manifest records everything needed to re-derive the byte-identical
// outputs: command, input files, and the statistically meaningful arguments.
// Volatile facts (wall time, worker threads) deliberately stay out so a rerun
// with the same inputs and seed reproduces every output file exactly.
struct ManifestArg {
    std::string key;
    enum class Kind { Str, Num, Flag } kind;
    std::string str;
    double num = 0.0;
    bool flag = false;
};

inline ManifestArg arg_str(std::string k, std::string v) {
    return {std::move(k), ManifestArg::Kind::Str, std::move(v), 0.0, false};
}
inline ManifestArg arg_num(std::string k, double v) {
    return {std::move(k), ManifestArg::Kind::Num, {}, v, false};
}
inline ManifestArg arg_flag(std::string k, bool v) {
    return {std::move(k), ManifestArg::Kind::Flag, {}, 0.0, v};
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<ManifestArg>& args,
                    const std::vector<std::string>& outputs) {
    JsonWriter w;
    w.begin_object();
    w.key("tool").value("cdecomp");
    w.key("command").value(command);
    w.key("inputs").begin_object();
    for (const auto& [k, v] : inputs) w.key(k).value(v);
    w.end_object();
    w.key("args").begin_object();
    for (const auto& a : args) {
        w.key(a.key);
        switch (a.kind) {
        case ManifestArg::Kind::Str: w.value(a.str); break;
        case ManifestArg::Kind::Num: w.value(a.num); break;
        case ManifestArg::Kind::Flag: w.value(a.flag); break;
        }
    }
    w.end_object();
    w.key("outputs").begin_array();
    for (const auto& o : outputs) w.value(o);
    w.end_array();
    w.end_object();
    atomic_write_file((out_dir / "manifest.json").string(), w.str() + "\n");
}

void json_positivity(JsonWriter& w, const ValidationReport& report) {
    w.key("positivity").begin_object();
    w.key("ok").value(report.positivity_ok());
    w.key("small_groups").begin_array();
    for (const auto& c : report.small_groups) {
        w.begin_object();
        w.key("group_level").value(c.group_level);
        w.key("count").value(static_cast<std::uint64_t>(c.count));
        w.end_object();
    }
    w.end_array();
    w.key("empty_cells").begin_array();
    for (const auto& c : report.empty_cells) {
        w.begin_object();
        w.key("group_level").value(c.group_level);
        w.key("cell").value(c.cell);
        w.key("count").value(static_cast<std::uint64_t>(c.count));
        w.end_object();
    }
    w.end_array();
    w.end_object();
}

void enforce_strict_positivity(const ValidationReport& report) {
    if (report.positivity_ok()) return;
    std::string msg = "positivity check failed:";
    for (const auto& c : report.small_groups)
        msg += " group '" + c.group_level + "' has only " + std::to_string(c.count) + " rows;";
    for (const auto& c : report.empty_cells)
        msg += " group '" + c.group_level + "' is empty in cell [" + c.cell + "];";
    throw PositivityError(msg);
}

// ---------------------------------------------------------------------------

struct CommonOpts {
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool strict = false;
    bool differential = false;
    double trim_pct = -1.0; // <0: keep the config's setting
};

struct LoadedAnalysis {
    AnalysisConfig cfg;
    ObservationTable table;
    LoadReport load;
    ValidationReport validation;
};

LoadedAnalysis load_analysis(const CommonOpts& c) {
    auto parsed = parse_analysis_config(read_text_file(c.config_path, "config"));
    LoadedAnalysis out;
    out.cfg = parsed.analysis;
    if (c.trim_pct >= 0.0) out.cfg.weight_trim_pct = c.trim_pct;
    if (!c.differential) {
        out.cfg.differential_effects.clear();
    } else if (out.cfg.differential_effects.empty()) {
        throw ConfigError("--differential given but the config declares no differential_effects");
    }
    auto loaded = load_table_file(c.data_path, parsed.schema);
    out.table = std::move(loaded.table);
    out.load = loaded.report;
    out.validation = validate_config(out.cfg, out.table);
    if (c.strict) enforce_strict_positivity(out.validation);
    return out;
}

std::vector<std::string> comparison_levels(const AnalysisConfig& cfg, const ObservationTable& t) {
    std::vector<std::string> out;
    const auto& col = t.categorical(cfg.group);
    for (auto code : comparison_codes(cfg, t)) out.push_back(col.levels[static_cast<std::size_t>(code)]);
    return out;
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeOpts : CommonOpts {
    std::string estimator = "all";
    int bootstrap = 0;
    double level = 0.95;
    int threads = 0;
    bool unstratified = false;
};

std::vector<EstimatorKind> select_estimators(const AnalysisConfig& cfg, const std::string& which) {
    const bool interposed = cfg.scenario == Scenario::InterposedConfounder;
    const bool differential = !cfg.differential_effects.empty();
    if (which == "all") {
        if (interposed) return {EstimatorKind::WeightingInterposed};
        if (differential) return {EstimatorKind::WeightingDifferential};
        return {EstimatorKind::Weighting, EstimatorKind::Regression};
    }
    if (which == "weighting") {
        if (interposed)
            throw ConfigError("estimator 'weighting' applies to the joint-mediators scenario; "
                              "this config declares the interposed scenario");
        return {differential ? EstimatorKind::WeightingDifferential : EstimatorKind::Weighting};
    }
    if (which == "regression") {
        if (interposed)
            throw ConfigError("estimator 'regression' applies to the joint-mediators scenario");
        return {EstimatorKind::Regression};
    }
    if (which == "interposed") {
        if (!interposed)
            throw ConfigError("estimator 'interposed' requires the interposed-confounder "
                              "scenario in the config");
        return {EstimatorKind::WeightingInterposed};
    }
    throw ConfigError("unknown estimator '" + which +
                      "' (expected weighting, regression, interposed, or all)");
}

DecompositionResult run_one_estimator(EstimatorKind kind, const AnalysisConfig& cfg,
                                      const ObservationTable& table, std::uint64_t seed) {
    switch (kind) {
    case EstimatorKind::Weighting:
    case EstimatorKind::WeightingDifferential: return decompose(cfg, table, seed);
    case EstimatorKind::WeightingInterposed: return decompose_interposed(cfg, table, seed);
    case EstimatorKind::Regression: return decompose_regression(cfg, table);
    }
    throw EstimationError("unreachable estimator kind");
}

int run_decompose(const DecomposeOpts& opt) {
    auto an = load_analysis(opt);
    auto kinds = select_estimators(an.cfg, opt.estimator);
    auto levels = comparison_levels(an.cfg, an.table);

    std::vector<DecompositionResult> results;
    for (auto k : kinds) results.push_back(run_one_estimator(k, an.cfg, an.table, opt.seed));

    std::vector<ReportRow> rows;
    for (const auto& res : results) {
        for (const auto& e : res.estimates) {
            ReportRow r;
            r.estimator = to_string(e.kind);
            r.group = e.group_level;
            r.tau = e.tau;
            r.zeta = e.zeta;
            r.delta = e.delta;
            r.pct_reduction = e.pct_reduction;
            rows.push_back(r);
        }
    }

    BootstrapResult boot;
    if (opt.bootstrap > 0) {
        std::vector<std::string> names;
        for (auto k : kinds)
            for (const auto& lev : levels)
                for (const char* stat : {"tau", "delta", "zeta"})
                    names.push_back(to_string(k) + "." + lev + "." + stat);

        auto cfg = an.cfg;
        auto statistic = [&cfg, &kinds, &levels](const ObservationTable& tab,
                                                 std::uint64_t s) -> std::vector<double> {
            std::vector<double> v;
            for (auto k : kinds) {
                auto res = run_one_estimator(k, cfg, tab, s);
                if (res.estimates.size() != levels.size())
                    throw EstimationError("resample lost a group level");
                for (std::size_t i = 0; i < levels.size(); ++i) {
                    const auto& e = res.estimates[i];
                    if (e.group_level != levels[i])
                        throw EstimationError("resample changed the group level order");
                    v.push_back(e.tau);
                    v.push_back(e.delta);
                    v.push_back(e.zeta);
                }
            }
            return v;
        };
        BootstrapOptions bo;
        bo.replicates = opt.bootstrap;
        bo.level = opt.level;
        bo.stratified = !opt.unstratified;
        bo.seed = opt.seed;
        bo.threads = opt.threads;
        boot = bootstrap_estimate(an.table, an.cfg.group, names, statistic, bo);

        std::size_t q = 0;
        for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
            for (std::size_t li = 0; li < levels.size(); ++li) {
                ReportRow& r = rows[ki * levels.size() + li];
                r.tau_lo = boot.series[q].lo;
                r.tau_hi = boot.series[q].hi;
                ++q;
                r.delta_lo = boot.series[q].lo;
                r.delta_hi = boot.series[q].hi;
                ++q;
                r.zeta_lo = boot.series[q].lo;
                r.zeta_hi = boot.series[q].hi;
                ++q;
            }
        }
    }

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    atomic_write_file((out / "decomposition.csv").string(), decomposition_csv(rows));

    JsonWriter w;
    w.begin_object();
    w.key("command").value("decompose");
    w.key("seed").value(opt.seed);
    w.key("scenario").value(to_string(an.cfg.scenario));
    w.key("estimators").begin_array();
    for (auto k : kinds) w.value(to_string(k));
    w.end_array();
    w.key("group").value(an.cfg.group);
    w.key("reference_level").value(an.cfg.reference_level);
    w.key("ingest").begin_object();
    w.key("rows_read").value(static_cast<std::uint64_t>(an.load.rows_read));
    w.key("rows_dropped").value(static_cast<std::uint64_t>(an.load.rows_dropped));
    w.end_object();
    json_positivity(w, an.validation);
    w.key("bootstrap");
    if (opt.bootstrap > 0) {
        w.begin_object();
        w.key("replicates").value(boot.requested);
        w.key("failures").value(boot.failures);
        w.key("level").value(boot.level);
        w.key("stratified").value(!opt.unstratified);
        w.end_object();
    } else {
        w.null();
    }
    w.key("trim_counts").begin_object();
    for (const auto& res : results)
        for (const auto& [lev, cnt] : res.trim_counts)
            w.key(to_string(res.kind) + "." + lev).value(static_cast<std::uint64_t>(cnt));
    w.end_object();
    w.key("results").begin_array();
    for (const auto& r : rows) {
        w.begin_object();
        w.key("estimator").value(r.estimator);
        w.key("group").value(r.group);
        w.key("tau").value(r.tau);
        w.key("tau_ci_lo").value(r.tau_lo);
        w.key("tau_ci_hi").value(r.tau_hi);
        w.key("delta").value(r.delta);
        w.key("delta_ci_lo").value(r.delta_lo);
        w.key("delta_ci_hi").value(r.delta_hi);
        w.key("zeta").value(r.zeta);
        w.key("zeta_ci_lo").value(r.zeta_lo);
        w.key("zeta_ci_hi").value(r.zeta_hi);
        w.key("pct_reduction").value(r.pct_reduction);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    atomic_write_file((out / "summary.json").string(), w.str() + "\n");

    std::vector<ManifestArg> args{
        arg_str("estimator", opt.estimator),
        arg_num("seed", static_cast<double>(opt.seed)),
        arg_num("bootstrap", opt.bootstrap),
        arg_num("level", opt.level),
        arg_flag("differential", opt.differential),
        arg_flag("strict", opt.strict),
        arg_flag("unstratified", opt.unstratified),
    };
    if (opt.trim_pct >= 0.0) args.push_back(arg_num("trim_pct", opt.trim_pct));
    write_manifest(out, "decompose",
                   {{"config", opt.config_path}, {"data", opt.data_path}}, args,
                   {"decomposition.csv", "summary.json"});
    return 0;
}

// ---------------------------------------------------------------------------
// sensitivity

struct SensitivityOpts : CommonOpts {
    double r2_max = 0.9;
    std::size_t grid_n = 20;
    double level = 0.95;
    int bootstrap = 0;
    int threads = 0;
    bool unstratified = false;
    std::string group; // restrict to one comparison level
};

int run_sensitivity(const SensitivityOpts& opt) {
    auto an = load_analysis(opt);
    const bool interposed = an.cfg.scenario == Scenario::InterposedConfounder;
    auto levels = comparison_levels(an.cfg, an.table);

    DecompositionResult dec = interposed ? decompose_interposed(an.cfg, an.table, opt.seed)
                                         : decompose(an.cfg, an.table, opt.seed);

    std::map<std::string, std::pair<double, double>> ses; // level -> (se_delta, se_zeta)
    BootstrapResult boot;
    if (opt.bootstrap > 0) {
        std::vector<std::string> names;
        for (const auto& lev : levels) {
            names.push_back(lev + ".delta");
            names.push_back(lev + ".zeta");
        }
        auto cfg = an.cfg;
        auto statistic = [&cfg, &levels, interposed](const ObservationTable& tab,
                                                     std::uint64_t s) -> std::vector<double> {
            auto res = interposed ? decompose_interposed(cfg, tab, s) : decompose(cfg, tab, s);
            if (res.estimates.size() != levels.size())
                throw EstimationError("resample lost a group level");
            std::vector<double> v;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (res.estimates[i].group_level != levels[i])
                    throw EstimationError("resample changed the group level order");
                v.push_back(res.estimates[i].delta);
                v.push_back(res.estimates[i].zeta);
            }
            return v;
        };
        BootstrapOptions bo;
        bo.replicates = opt.bootstrap;
        bo.level = opt.level;
        bo.stratified = !opt.unstratified;
        bo.seed = opt.seed;
        bo.threads = opt.threads;
        boot = bootstrap_estimate(an.table, an.cfg.group, names, statistic, bo);
        for (std::size_t i = 0; i < levels.size(); ++i)
            ses[levels[i]] = {boot.series[2 * i].se, boot.series[2 * i + 1].se};
    }

    if (!opt.group.empty()) {
        bool known = false;
        for (const auto& lev : levels) known = known || lev == opt.group;
        if (!known)
            throw ConfigError("--group '" + opt.group + "' is not a comparison level");
    }

    auto basis = sensitivity_basis(an.cfg, an.table);
    auto marks = benchmark_covariates(an.cfg, an.table, basis);

    GridOptions gopt;
    gopt.r2_max = opt.r2_max;
    gopt.grid_n = opt.grid_n;
    gopt.level = opt.level;

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    std::vector<std::string> outputs;
    JsonWriter w;
    w.begin_object();
    w.key("command").value("sensitivity");
    w.key("seed").value(opt.seed);
    w.key("scenario").value(to_string(an.cfg.scenario));
    w.key("r2_max").value(opt.r2_max);
    w.key("grid_n").value(static_cast<std::uint64_t>(opt.grid_n));
    w.key("level").value(opt.level);
    w.key("ingest").begin_object();
    w.key("rows_read").value(static_cast<std::uint64_t>(an.load.rows_read));
    w.key("rows_dropped").value(static_cast<std::uint64_t>(an.load.rows_dropped));
    w.end_object();
    json_positivity(w, an.validation);
    w.key("bootstrap");
    if (opt.bootstrap > 0) {
        w.begin_object();
        w.key("replicates").value(boot.requested);
        w.key("failures").value(boot.failures);
        w.key("stratified").value(!opt.unstratified);
        w.end_object();
    } else {
        w.null();
    }
    w.key("basis").begin_object();
    w.key("gamma_dm").value(basis.gamma_dm);
    w.key("se_gamma_dm").value(basis.se_gamma_dm);
    w.key("df").value(basis.df);
    w.key("gaps").begin_object();
    for (const auto& [lev, gap] : basis.gap_by_level) w.key(lev).value(gap);
    w.end_object();
    w.end_object();
    w.key("groups").begin_array();

    for (const auto& est : dec.estimates) {
        if (!opt.group.empty() && est.group_level != opt.group) continue;
        double se_d = std::numeric_limits<double>::quiet_NaN();
        double se_z = std::numeric_limits<double>::quiet_NaN();
        if (auto it = ses.find(est.group_level); it != ses.end()) {
            se_d = it->second.first;
            se_z = it->second.second;
        }
        auto inputs = make_sensitivity_inputs(basis, est, se_d, se_z);
        auto grid = compute_sensitivity_grid(inputs, gopt);
        const std::string fname = "grid_" + sanitize_for_filename(est.group_level) + ".csv";
        atomic_write_file((out / fname).string(), grid_csv(grid));
        outputs.push_back(fname);

        w.begin_object();
        w.key("group").value(est.group_level);
        w.key("delta_hat").value(est.delta);
        w.key("zeta_hat").value(est.zeta);
        w.key("se_delta").value(se_d);
        w.key("se_zeta").value(se_z);
        w.key("mediator_gap").value(inputs.mediator_gap);
        w.key("grid_file").value(fname);
        w.key("diagonal").begin_object();
        w.key("delta_zero").value(grid.diagonal.delta_zero);
        w.key("delta_ci").value(grid.diagonal.delta_ci);
        w.key("zeta_zero").value(grid.diagonal.zeta_zero);
        w.key("zeta_ci").value(grid.diagonal.zeta_ci);
        w.end_object();
        w.end_object();
    }
    w.end_array();
    w.end_object();

    atomic_write_file((out / "benchmarks.csv").string(), benchmarks_csv(marks));
    outputs.push_back("benchmarks.csv");
    atomic_write_file((out / "summary.json").string(), w.str() + "\n");
    outputs.push_back("summary.json");
    std::vector<ManifestArg> args{
        arg_num("seed", static_cast<double>(opt.seed)),
        arg_num("r2_max", opt.r2_max),
        arg_num("grid_n", static_cast<double>(opt.grid_n)),
        arg_num("level", opt.level),
        arg_num("bootstrap", opt.bootstrap),
        arg_flag("differential", opt.differential),
        arg_flag("strict", opt.strict),
        arg_flag("unstratified", opt.unstratified),
    };
    if (!opt.group.empty()) args.push_back(arg_str("group", opt.group));
    if (opt.trim_pct >= 0.0) args.push_back(arg_num("trim_pct", opt.trim_pct));
    write_manifest(out, "sensitivity",
                   {{"config", opt.config_path}, {"data", opt.data_path}}, args, outputs);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate / oracle

struct SimulateOpts {
    std::string model_path;
    std::string out_dir;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    bool expose_u = false;
};

int run_simulate(const SimulateOpts& opt) {
    auto model = parse_structural_model(read_text_file(opt.model_path, "model"));
    if (opt.n == 0) throw ConfigError("simulate: --n must be positive");
    auto table = generate(model, opt.n, opt.seed, opt.expose_u);
    auto cfg = derive_config(model);
    auto schema = derive_schema(model, opt.expose_u);

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    atomic_write_file((out / "data.csv").string(), table_to_csv(table));
    atomic_write_file((out / "config.json").string(), config_to_json(cfg, schema));
    write_manifest(out, "simulate", {{"model", opt.model_path}},
                   {arg_num("n", static_cast<double>(opt.n)),
                    arg_num("seed", static_cast<double>(opt.seed)),
                    arg_flag("expose_u", opt.expose_u)},
                   {"data.csv", "config.json"});
    return 0;
}

struct OracleOpts {
    std::string model_path;
    std::string out_dir;
    std::string method = "mc";
    std::uint64_t mc = 500000;
    std::uint64_t seed = 0;
    std::string group;
};

int run_oracle(const OracleOpts& opt) {
    auto model = parse_structural_model(read_text_file(opt.model_path, "model"));
    OracleResult res;
    if (opt.method == "exact") {
        res = oracle_truth_exact(model);
    } else if (opt.method == "mc") {
        res = oracle_truth_mc(model, opt.mc, opt.seed);
    } else {
        throw ConfigError("oracle: --method must be 'mc' or 'exact'");
    }

    if (!opt.group.empty()) {
        std::vector<OracleGroupResult> kept;
        for (const auto& g : res.groups)
            if (g.group_level == opt.group) kept.push_back(g);
        if (kept.empty())
            throw ConfigError("oracle: --group '" + opt.group + "' is not a comparison level");
        res.groups = std::move(kept);
    }

    JsonWriter w;
    w.begin_object();
    w.key("command").value("oracle");
    w.key("method").value(to_string(res.method));
    if (opt.method == "mc") {
        w.key("draws").value(opt.mc);
        w.key("seed").value(opt.seed);
    }
    w.key("groups").begin_array();
    for (const auto& g : res.groups) {
        w.begin_object();
        w.key("group").value(g.group_level);
        w.key("tau").value(g.tau);
        w.key("delta").value(g.delta);
        w.key("zeta").value(g.zeta);
        w.key("tau_se").value(g.tau_se);
        w.key("delta_se").value(g.delta_se);
        w.key("zeta_se").value(g.zeta_se);
        w.end_object();
    }
    w.end_array();
    w.end_object();

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    atomic_write_file((out / "oracle.json").string(), w.str() + "\n");
    std::vector<ManifestArg> args{arg_str("method", opt.method)};
    if (opt.method == "mc") {
        args.push_back(arg_num("mc", static_cast<double>(opt.mc)));
        args.push_back(arg_num("seed", static_cast<double>(opt.seed)));
    }
    if (!opt.group.empty()) args.push_back(arg_str("group", opt.group));
    write_manifest(out, "oracle", {{"model", opt.model_path}}, args, {"oracle.json"});
    return 0;
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const CommonOpts& opt) {
    auto parsed = parse_analysis_config(read_text_file(opt.config_path, "config"));
    auto cfg = parsed.analysis;
    auto loaded = load_table_file(opt.data_path, parsed.schema);
    auto report = validate_config(cfg, loaded.table);

    JsonWriter w;
    w.begin_object();
    w.key("command").value("validate");
    w.key("config_ok").value(true);
    w.key("rows_read").value(static_cast<std::uint64_t>(loaded.report.rows_read));
    w.key("rows_dropped").value(static_cast<std::uint64_t>(loaded.report.rows_dropped));
    json_positivity(w, report);
    w.end_object();
    std::cout << w.str() << "\n";

    if (opt.strict) enforce_strict_positivity(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal decomposition analysis"};
    app.require_subcommand(1);

    DecomposeOpts dec;
    auto* cmd_dec = app.add_subcommand("decompose",
                                       "estimate the disparity decomposition from a data file");
    cmd_dec->add_option("--config", dec.config_path, "analysis config (JSON)")->required();
    cmd_dec->add_option("--data", dec.data_path, "observations (CSV)")->required();
    cmd_dec->add_option("--out-dir", dec.out_dir, "output directory")->required();
    cmd_dec->add_option("--estimator", dec.estimator,
                        "weighting, regression, interposed, or all (default all)");
    cmd_dec->add_option("--seed", dec.seed, "master RNG seed");
    cmd_dec->add_option("--bootstrap", dec.bootstrap, "bootstrap replicates (0 = none)");
    cmd_dec->add_option("--level", dec.level, "confidence level for intervals");
    cmd_dec->add_option("--threads", dec.threads, "bootstrap worker threads (0 = all cores)");
    cmd_dec->add_option("--trim-pct", dec.trim_pct, "cap balancing weights at this quantile");
    cmd_dec->add_flag("--differential", dec.differential,
                      "enable the config's differential_effects terms");
    cmd_dec->add_flag("--strict", dec.strict, "fail on positivity findings");
    cmd_dec->add_flag("--unstratified", dec.unstratified, "resample without group strata");

    SensitivityOpts sen;
    auto* cmd_sen = app.add_subcommand("sensitivity",
                                       "bias-bound grid for unobserved mediator-outcome "
                                       "confounding");
    cmd_sen->add_option("--config", sen.config_path, "analysis config (JSON)")->required();
    cmd_sen->add_option("--data", sen.data_path, "observations (CSV)")->required();
    cmd_sen->add_option("--out-dir", sen.out_dir, "output directory")->required();
    cmd_sen->add_option("--seed", sen.seed, "master RNG seed");
    cmd_sen->add_option("--r2-max", sen.r2_max, "grid upper bound for both R2 axes");
    cmd_sen->add_option("--grid-n", sen.grid_n, "grid points per axis");
    cmd_sen->add_option("--level", sen.level, "confidence level");
    cmd_sen->add_option("--bootstrap", sen.bootstrap,
                        "bootstrap replicates for interval crossings (0 = none)");
    cmd_sen->add_option("--threads", sen.threads, "bootstrap worker threads");
    cmd_sen->add_option("--group", sen.group, "restrict to one comparison level");
    cmd_sen->add_option("--trim-pct", sen.trim_pct, "cap balancing weights at this quantile");
    cmd_sen->add_flag("--differential", sen.differential,
                      "enable the config's differential_effects terms");
    cmd_sen->add_flag("--strict", sen.strict, "fail on positivity findings");
    cmd_sen->add_flag("--unstratified", sen.unstratified, "resample without group strata");

    SimulateOpts sim;
    auto* cmd_sim = app.add_subcommand("simulate", "draw a sample from a structural model");
    cmd_sim->add_option("--model", sim.model_path, "structural model (JSON)")->required();
    cmd_sim->add_option("--out-dir", sim.out_dir, "output directory")->required();
    cmd_sim->add_option("--n", sim.n, "number of rows")->required();
    cmd_sim->add_option("--seed", sim.seed, "master RNG seed");
    cmd_sim->add_flag("--expose-u", sim.expose_u, "include unobserved columns in the output");

    OracleOpts ora;
    auto* cmd_ora = app.add_subcommand("oracle",
                                       "ground-truth decomposition of a structural model");
    cmd_ora->add_option("--model", ora.model_path, "structural model (JSON)")->required();
    cmd_ora->add_option("--out-dir", ora.out_dir, "output directory")->required();
    cmd_ora->add_option("--method", ora.method, "mc or exact (default mc)");
    cmd_ora->add_option("--mc", ora.mc, "monte carlo draws");
    cmd_ora->add_option("--seed", ora.seed, "RNG seed for the mc method");
    cmd_ora->add_option("--group", ora.group, "restrict to one comparison level");

    CommonOpts val;
    auto* cmd_val = app.add_subcommand("validate", "check a config against a data file");
    cmd_val->add_option("--config", val.config_path, "analysis config (JSON)")->required();
    cmd_val->add_option("--data", val.data_path, "observations (CSV)")->required();
    cmd_val->add_flag("--strict", val.strict, "fail on positivity findings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_dec->parsed()) return run_decompose(dec);
        if (cmd_sen->parsed()) return run_sensitivity(sen);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_ora->parsed()) return run_oracle(ora);
        if (cmd_val->parsed()) return run_validate(val);
        throw ConfigError("no subcommand selected");
    } catch (const PositivityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
