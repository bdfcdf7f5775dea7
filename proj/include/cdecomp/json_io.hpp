#ifndef CDECOMP_JSON_IO_HPP
#define CDECOMP_JSON_IO_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cdecomp/config.hpp"
#include "cdecomp/csv.hpp"
#include "cdecomp/error.hpp"
#include "cdecomp/structural.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

// Minimal insertion-ordered JSON writer. Numbers carry 17 significant digits
// so round-tripping them reproduces the exact double; non-finite values
// become null.
class JsonWriter {
public:
    JsonWriter& key(std::string_view k) {
        elem();
        quoted(k);
        out_ += ':';
        pending_ = true;
        return *this;
    }
    JsonWriter& begin_object() {
        elem();
        out_ += '{';
        comma_.push_back(false);
        return *this;
    }
    JsonWriter& end_object() {
        out_ += '}';
        comma_.pop_back();
        return *this;
    }
    JsonWriter& begin_array() {
        elem();
        out_ += '[';
        comma_.push_back(false);
        return *this;
    }
    JsonWriter& end_array() {
        out_ += ']';
        comma_.pop_back();
        return *this;
    }
    JsonWriter& value(double v) {
        elem();
        if (std::isfinite(v))
            out_ += format_g17(v);
        else
            out_ += "null";
        return *this;
    }
    JsonWriter& value(std::int64_t v) {
        elem();
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(std::uint64_t v) {
        elem();
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(bool v) {
        elem();
        out_ += v ? "true" : "false";
        return *this;
    }
    JsonWriter& value(std::string_view v) {
        elem();
        quoted(v);
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string_view(v)); }
    JsonWriter& null() {
        elem();
        out_ += "null";
        return *this;
    }
    const std::string& str() const { return out_; }

private:
    void elem() {
        if (pending_) {
            pending_ = false;
            return;
        }
        if (!comma_.empty()) {
            if (comma_.back()) out_ += ',';
            comma_.back() = true;
        }
    }
    void quoted(std::string_view s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
            case '"': out_ += "\\\""; break;
            case '\\': out_ += "\\\\"; break;
            case '\n': out_ += "\\n"; break;
            case '\r': out_ += "\\r"; break;
            case '\t': out_ += "\\t"; break;
            case '\b': out_ += "\\b"; break;
            case '\f': out_ += "\\f"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out_ += buf;
                } else {
                    out_ += c;
                }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> comma_;
    bool pending_ = false;
};

// --- analysis config files ---------------------------------------------------

struct ConfigFile {
    AnalysisConfig analysis;
    std::vector<ColumnSpec> schema;
};

namespace detail {

using njson = nlohmann::json;

inline njson parse_json_text(const std::string& text, const std::string& what) {
    try {
        return njson::parse(text);
    } catch (const njson::parse_error& e) {
        throw ConfigError(what + ": invalid JSON: " + e.what());
    }
}

inline std::vector<std::string> string_list(const njson& j, const std::string& ctx) {
    if (!j.is_array()) throw ConfigError(ctx + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) throw ConfigError(ctx + " must contain only strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

} // namespace detail

inline ConfigFile parse_analysis_config(const std::string& text) {
    auto j = detail::parse_json_text(text, "config");
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    ConfigFile out;
    if (!j.contains("columns") || !j["columns"].is_array())
        throw ConfigError("config: missing 'columns' array");
    for (const auto& c : j["columns"]) {
        if (!c.is_object() || !c.contains("name") || !c.contains("type"))
            throw ConfigError("config: each column needs 'name' and 'type'");
        ColumnSpec spec;
        spec.name = c["name"].get<std::string>();
        std::string t = c["type"].get<std::string>();
        if (t == "numeric")
            spec.type = ColumnType::Numeric;
        else if (t == "categorical")
            spec.type = ColumnType::Categorical;
        else
            throw ConfigError("config: column '" + spec.name + "' has unknown type '" + t + "'");
        if (c.contains("levels")) spec.levels = detail::string_list(c["levels"], "config: levels");
        out.schema.push_back(std::move(spec));
    }

    if (!j.contains("roles") || !j["roles"].is_object())
        throw ConfigError("config: missing 'roles' object");
    const auto& roles = j["roles"];
    auto need = [&](const char* k) -> std::string {
        if (!roles.contains(k) || !roles[k].is_string())
            throw ConfigError(std::string("config: roles.") + k + " must be a string");
        return roles[k].get<std::string>();
    };
    auto& cfg = out.analysis;
    cfg.group = need("group");
    cfg.reference_level = need("reference");
    cfg.outcome = need("outcome");
    if (!roles.contains("mediators"))
        throw ConfigError("config: roles.mediators is required");
    cfg.mediators = detail::string_list(roles["mediators"], "config: roles.mediators");
    if (roles.contains("confounders_pre"))
        cfg.confounders_pre =
            detail::string_list(roles["confounders_pre"], "config: roles.confounders_pre");
    if (roles.contains("confounders_post"))
        cfg.confounders_post =
            detail::string_list(roles["confounders_post"], "config: roles.confounders_post");
    if (roles.contains("covariates"))
        cfg.covariates = detail::string_list(roles["covariates"], "config: roles.covariates");

    if (j.contains("scenario")) {
        std::string s = j["scenario"].get<std::string>();
        if (s == "joint_mediators")
            cfg.scenario = Scenario::JointMediators;
        else if (s == "interposed_confounder")
            cfg.scenario = Scenario::InterposedConfounder;
        else
            throw ConfigError("config: unknown scenario '" + s + "'");
    }
    if (j.contains("differential_effects")) {
        if (!j["differential_effects"].is_array())
            throw ConfigError("config: differential_effects must be an array");
        for (const auto& d : j["differential_effects"]) {
            if (!d.is_object() || !d.contains("group") || !d.contains("mediator"))
                throw ConfigError("config: each differential effect needs 'group' and 'mediator'");
            cfg.differential_effects.push_back(
                {d["group"].get<std::string>(), d["mediator"].get<std::string>()});
        }
    }
    if (j.contains("outcome_interactions")) {
        if (!j["outcome_interactions"].is_array())
            throw ConfigError("config: outcome_interactions must be an array of pairs");
        for (const auto& p : j["outcome_interactions"]) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
                throw ConfigError("config: each outcome interaction must be a pair of column "
                                  "names");
            cfg.outcome_interactions.emplace_back(p[0].get<std::string>(),
                                                  p[1].get<std::string>());
        }
    }
    if (j.contains("weight_trim_pct")) cfg.weight_trim_pct = j["weight_trim_pct"].get<double>();
    if (j.contains("min_cell")) cfg.min_cell = j["min_cell"].get<std::size_t>();
    if (j.contains("q_draws")) cfg.q_draws = j["q_draws"].get<std::size_t>();
    if (j.contains("regression_vector_x"))
        cfg.regression_vector_x = j["regression_vector_x"].get<bool>();
    return out;
}

inline std::string config_to_json(const AnalysisConfig& cfg, const std::vector<ColumnSpec>& schema) {
    JsonWriter w;
    w.begin_object();
    w.key("columns").begin_array();
    for (const auto& c : schema) {
        w.begin_object();
        w.key("name").value(c.name);
        w.key("type").value(c.type == ColumnType::Numeric ? "numeric" : "categorical");
        if (!c.levels.empty()) {
            w.key("levels").begin_array();
            for (const auto& l : c.levels) w.value(l);
            w.end_array();
        }
        w.end_object();
    }
    w.end_array();
    w.key("roles").begin_object();
    w.key("group").value(cfg.group);
    w.key("reference").value(cfg.reference_level);
    w.key("outcome").value(cfg.outcome);
    auto list = [&](const char* k, const std::vector<std::string>& v) {
        w.key(k).begin_array();
        for (const auto& s : v) w.value(s);
        w.end_array();
    };
    list("mediators", cfg.mediators);
    list("confounders_pre", cfg.confounders_pre);
    list("confounders_post", cfg.confounders_post);
    list("covariates", cfg.covariates);
    w.end_object();
    w.key("scenario").value(to_string(cfg.scenario));
    if (!cfg.differential_effects.empty()) {
        w.key("differential_effects").begin_array();
        for (const auto& d : cfg.differential_effects) {
            w.begin_object();
            w.key("group").value(d.group_level);
            w.key("mediator").value(d.mediator);
            w.end_object();
        }
        w.end_array();
    }
    if (!cfg.outcome_interactions.empty()) {
        w.key("outcome_interactions").begin_array();
        for (const auto& p : cfg.outcome_interactions) {
            w.begin_array();
            w.value(p.first);
            w.value(p.second);
            w.end_array();
        }
        w.end_array();
    }
    if (cfg.weight_trim_pct) w.key("weight_trim_pct").value(*cfg.weight_trim_pct);
    w.key("min_cell").value(static_cast<std::uint64_t>(cfg.min_cell));
    w.key("q_draws").value(static_cast<std::uint64_t>(cfg.q_draws));
    if (cfg.regression_vector_x) w.key("regression_vector_x").value(true);
    w.end_object();
    return w.str();
}

// --- structural model files --------------------------------------------------

namespace detail {

inline LinearExpr parse_expr(const njson& j, const std::string& ctx) {
    if (!j.is_array()) throw ConfigError(ctx + ": expression must be an array of terms");
    LinearExpr expr;
    for (const auto& t : j) {
        if (!t.is_object() || !t.contains("coef"))
            throw ConfigError(ctx + ": each term needs a 'coef'");
        ExprTerm term;
        term.coef = t["coef"].get<double>();
        if (t.contains("factors")) {
            if (!t["factors"].is_array())
                throw ConfigError(ctx + ": 'factors' must be an array");
            for (const auto& f : t["factors"]) {
                if (f.is_string()) {
                    term.factors.push_back(val(f.get<std::string>()));
                } else if (f.is_object() && f.contains("var") && f.contains("eq")) {
                    term.factors.push_back(
                        ind(f["var"].get<std::string>(), f["eq"].get<double>()));
                } else {
                    throw ConfigError(ctx + ": factor must be a variable name or {var, eq}");
                }
            }
        }
        expr.push_back(std::move(term));
    }
    return expr;
}

} // namespace detail

inline StructuralModel parse_structural_model(const std::string& text) {
    auto j = detail::parse_json_text(text, "model");
    if (!j.is_object()) throw ConfigError("model: top level must be an object");

    StructuralModel model;
    if (j.contains("scenario")) {
        std::string s = j["scenario"].get<std::string>();
        if (s == "joint_mediators")
            model.scenario = Scenario::JointMediators;
        else if (s == "interposed_confounder")
            model.scenario = Scenario::InterposedConfounder;
        else
            throw ConfigError("model: unknown scenario '" + s + "'");
    }
    if (!j.contains("variables") || !j["variables"].is_array())
        throw ConfigError("model: missing 'variables' array");
    for (const auto& v : j["variables"]) {
        if (!v.is_object() || !v.contains("name") || !v.contains("role") || !v.contains("kind"))
            throw ConfigError("model: each variable needs 'name', 'role' and 'kind'");
        VariableSpec spec;
        spec.name = v["name"].get<std::string>();
        const std::string ctx = "model: variable '" + spec.name + "'";

        std::string role = v["role"].get<std::string>();
        if (role == "covariate")
            spec.role = VariableSpec::Role::Covariate;
        else if (role == "group")
            spec.role = VariableSpec::Role::Group;
        else if (role == "confounder_pre")
            spec.role = VariableSpec::Role::ConfounderPre;
        else if (role == "confounder_post")
            spec.role = VariableSpec::Role::ConfounderPost;
        else if (role == "unobserved")
            spec.role = VariableSpec::Role::Unobserved;
        else if (role == "mediator")
            spec.role = VariableSpec::Role::Mediator;
        else if (role == "outcome")
            spec.role = VariableSpec::Role::Outcome;
        else
            throw ConfigError(ctx + ": unknown role '" + role + "'");

        std::string kind = v["kind"].get<std::string>();
        if (kind == "categorical") {
            spec.kind = VariableSpec::Kind::Categorical;
            if (!v.contains("values") || !v["values"].is_array())
                throw ConfigError(ctx + ": categorical variables need a 'values' array");
            for (const auto& x : v["values"]) spec.values.push_back(x.get<double>());
            if (v.contains("probs"))
                for (const auto& x : v["probs"]) spec.probs.push_back(x.get<double>());
            if (v.contains("logits")) {
                if (!v["logits"].is_array())
                    throw ConfigError(ctx + ": 'logits' must be an array of expressions");
                for (const auto& e : v["logits"])
                    spec.logits.push_back(detail::parse_expr(e, ctx));
            }
            if (v.contains("emit_numeric")) spec.emit_numeric = v["emit_numeric"].get<bool>();
        } else if (kind == "normal") {
            spec.kind = VariableSpec::Kind::Normal;
            if (v.contains("mean")) spec.mean = detail::parse_expr(v["mean"], ctx);
            if (v.contains("sd")) spec.sd = v["sd"].get<double>();
        } else {
            throw ConfigError(ctx + ": unknown kind '" + kind + "'");
        }
        model.variables.push_back(std::move(spec));
    }
    return model;
}

} // namespace cdecomp

#endif
