#include "qbic/config.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace qbic {

using nlohmann::json;

namespace {

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

template <class T>
T as(const json& v, const std::string& field) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(field, std::string("wrong type (") + v.type_name() + ")");
    }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& path) {
    const json* v = find(obj, key);
    return v ? as<T>(*v, path + key) : fallback;
}

Vector vector_of(const json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = as<double>(v[i], field);
    return out;
}

template <class F>
auto wrap(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

CoefficientSpec parse_coefficient(const json& j, const std::string& path, bool drift) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    const std::string form = get_or<std::string>(j, "form", drift ? "LINEAR" : "EXP_LINEAR", path + ".");
    const json* basis = find(j, "basis");
    if (!basis || !basis->is_array() || basis->empty()) throw ConfigError(path + ".basis", "expected a nonempty array");
    std::vector<BasisFunction> fns;
    for (std::size_t i = 0; i < basis->size(); ++i) {
        const std::string name = as<std::string>((*basis)[i], path + ".basis");
        fns.push_back(wrap(path + ".basis[" + std::to_string(i) + "]", [&] { return BasisFunction::parse(name); }));
    }
    const int d = static_cast<int>(fns.size());
    const RateExponent rate = wrap(path + ".rate", [&] {
        return parse_rate_exponent(get_or<std::string>(j, "rate", drift ? "SQRT_NH" : "SQRT_N", path + "."));
    });
    ParamBlock box = ParamBlock::default_box(drift ? "drift" : "diffusion", d, rate);
    if (const json* lo = find(j, "lower")) box.lower = vector_of(*lo, path + ".lower");
    if (const json* hi = find(j, "upper")) box.upper = vector_of(*hi, path + ".upper");
    if (box.lower.size() != d || box.upper.size() != d) {
        throw ConfigError(path, "bounds must have one entry per basis function");
    }
    wrap(path, [&] {
        box.validate();
        return 0;
    });
    if (form == "EXP_LINEAR") return CoefficientSpec::exp_linear(std::move(fns), std::move(box));
    if (form == "LINEAR") return CoefficientSpec::linear(std::move(fns), std::move(box));
    throw ConfigError(path + ".form", "expected EXP_LINEAR or LINEAR, got '" + form + "'");
}

CandidateModel model_from(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    const std::string id = get_or<std::string>(j, "id", "", path + ".");
    if (id.empty()) throw ConfigError(path + ".id", "missing model id");
    const FamilyKind kind = wrap(path + ".family_kind", [&] {
        return parse_family_kind(get_or<std::string>(j, "family_kind", "VOLATILITY_REGRESSION", path + "."));
    });
    const json* diff = find(j, "diffusion");
    if (!diff) throw ConfigError(path + ".diffusion", "missing");
    CoefficientSpec d = parse_coefficient(*diff, path + ".diffusion", false);
    const json* drift = find(j, "drift");
    return wrap(path, [&] {
        if (kind == FamilyKind::ErgodicDiffusion) {
            if (!drift) throw ConfigError(path + ".drift", "ergodic diffusion models need a drift");
            return CandidateModel::ergodic(id, std::move(d), parse_coefficient(*drift, path + ".drift", true));
        }
        if (drift) throw ConfigError(path + ".drift", "volatility-regression models take no drift");
        return CandidateModel::volatility(id, std::move(d));
    });
}

std::vector<CandidateModel> family_from(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(path, "expected a nonempty array of models");
    std::vector<CandidateModel> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(model_from(arr[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

DecomposedFamily decomposed_from(const json& obj) {
    DecomposedFamily fam;
    fam.kind = FamilyKind::ErgodicDiffusion;
    const json* ds = find(obj, "diffusions");
    const json* as_ = find(obj, "drifts");
    if (!ds || !ds->is_array() || ds->empty()) throw ConfigError("diffusions", "expected a nonempty array");
    if (!as_ || !as_->is_array() || as_->empty()) throw ConfigError("drifts", "expected a nonempty array");
    for (std::size_t i = 0; i < ds->size(); ++i) {
        const std::string p = "diffusions[" + std::to_string(i) + "]";
        fam.diffusion_ids.push_back(get_or<std::string>((*ds)[i], "id", "Diff" + std::to_string(i + 1), p + "."));
        fam.diffusions.push_back(parse_coefficient((*ds)[i], p, false));
    }
    for (std::size_t i = 0; i < as_->size(); ++i) {
        const std::string p = "drifts[" + std::to_string(i) + "]";
        fam.drift_ids.push_back(get_or<std::string>((*as_)[i], "id", "Drif" + std::to_string(i + 1), p + "."));
        fam.drifts.push_back(parse_coefficient((*as_)[i], p, true));
    }
    return fam;
}

std::size_t positive_size(const json& v, const std::string& field) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(field, "expected an integer");
    const auto x = v.get<long long>();
    if (x < 1) throw ConfigError(field, "must be >= 1, got " + std::to_string(x));
    return static_cast<std::size_t>(x);
}

OptimizerConfig optimizer_from(const json* j) {
    OptimizerConfig o;
    if (!j) return o;
    if (!j->is_object()) throw ConfigError("optimizer", "expected an object");
    o.restarts = get_or<int>(*j, "restarts", o.restarts, "optimizer.");
    o.grad_tol = get_or<double>(*j, "grad_tol", o.grad_tol, "optimizer.");
    o.max_iters = get_or<int>(*j, "max_iters", o.max_iters, "optimizer.");
    if (const json* hw = find(*j, "init_halfwidth"); hw && !hw->is_null()) {
        o.init_halfwidth = as<double>(*hw, "optimizer.init_halfwidth");
    }
    wrap("optimizer", [&] {
        o.validate();
        return 0;
    });
    return o;
}

/// Truth-driven generator for a CUSTOM scenario.
ScenarioSpec custom_from(const json& j, int default_substeps) {
    (void)default_substeps;
    if (!j.is_object()) throw ConfigError("custom", "expected an object");
    ScenarioSpec spec;
    spec.scenario = Scenario::Custom;
    spec.name = get_or<std::string>(j, "name", "CUSTOM", "custom.");
    spec.kind = wrap("custom.family_kind", [&] {
        return parse_family_kind(get_or<std::string>(j, "family_kind", "VOLATILITY_REGRESSION", "custom."));
    });
    if (spec.kind == FamilyKind::ErgodicDiffusion) {
        spec.decomposed = decomposed_from(j);
        spec.family = spec.decomposed->expand();
    } else {
        const json* fam = find(j, "family");
        if (!fam) throw ConfigError("custom.family", "missing");
        spec.family = family_from(*fam, "custom.family");
    }
    spec.true_model_id = get_or<std::string>(j, "true_model_id", "", "custom.");
    const json* tt = find(j, "theta_true");
    if (!tt) throw ConfigError("custom.theta_true", "missing");
    spec.theta_true = vector_of(*tt, "custom.theta_true");
    const CandidateModel truth = wrap("custom.true_model_id", [&] { return spec.family.at(spec.index_of(spec.true_model_id)); });
    if (spec.theta_true.size() != truth.dim()) throw ConfigError("custom.theta_true", "dimension does not match the true model");
    spec.supermodel_ids = supermodels_of(spec.family, spec.true_model_id);

    const std::string rule = get_or<std::string>(j, "step_rule", spec.kind == FamilyKind::ErgodicDiffusion ? "ERGODIC" : "FIXED_HORIZON", "custom.");
    if (rule != "ERGODIC" && rule != "FIXED_HORIZON") throw ConfigError("custom.step_rule", "expected ERGODIC or FIXED_HORIZON");
    const StepRule step_rule = rule == "ERGODIC" ? StepRule::Ergodic : StepRule::FixedHorizon;
    const double horizon = get_or<double>(j, "horizon", 1.0, "custom.");
    const double x0 = get_or<double>(j, "x0", 0.0, "custom.");
    const Vector theta = spec.theta_true;

    if (const json* cov = find(j, "covariates")) {
        if (spec.kind != FamilyKind::VolatilityRegression) throw ConfigError("custom.covariates", "only for volatility regression");
        const std::string ck = get_or<std::string>(*cov, "kind", "TRIG_DETERMINISTIC", "custom.covariates.");
        CovariateKind kind;
        if (ck == "TRIG_DETERMINISTIC") kind = CovariateKind::TrigDeterministic;
        else if (ck == "WIENER_CIRCLE") kind = CovariateKind::WienerCircle;
        else if (ck == "RATIONAL_WIENER") kind = CovariateKind::RationalWiener;
        else throw ConfigError("custom.covariates.kind", "unknown covariate kind '" + ck + "'");
        const double level = get_or<double>(*cov, "level", 1.0, "custom.covariates.");
        const json* t0 = find(*cov, "theta0");
        if (!t0) throw ConfigError("custom.covariates.theta0", "missing");
        const Vector theta0 = vector_of(*t0, "custom.covariates.theta0");
        if (theta0.size() != 3) throw ConfigError("custom.covariates.theta0", "expected 3 entries");
        spec.has_response = true;
        spec.simulate = [kind, theta0, level, step_rule, horizon](std::size_t n, std::uint64_t seed, int substeps) {
            SimScheme sch{n, step_rule, horizon, substeps, seed};
            const auto s = simulate_volatility_regression(kind, theta0, sch, level);
            RowMatrix v(s.covariates.values().rows(), 4);
            v.leftCols(3) = s.covariates.values();
            v.rightCols(1) = s.response.values();
            return PathGrid(s.covariates.h(), std::move(v));
        };
        return spec;
    }
    spec.simulate = [truth, theta, step_rule, horizon, x0](std::size_t n, std::uint64_t seed, int substeps) {
        const Vector t1 = truth.theta1(theta);
        const Vector t2 = truth.drift ? truth.theta2(theta) : Vector();
        SdeSpec sde{1, 1,
                    [&](double, State x, Eigen::Ref<Vector> a) { a[0] = truth.drift ? eval_drift(truth, x, t2) : 0.0; },
                    [&](double, State x, Eigen::Ref<Matrix> b) { b(0, 0) = std::sqrt(eval_diffusion(truth, x, t1)); }};
        SimScheme sch{n, step_rule, horizon, substeps, seed};
        return euler_maruyama(sde, Vector::Constant(1, x0), sch);
    };
    return spec;
}

std::vector<Criterion> criteria_from(const json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a nonempty array");
    std::vector<Criterion> out;
    for (const auto& c : v) out.push_back(wrap(field, [&] { return parse_criterion(as<std::string>(c, field)); }));
    return out;
}

FitStrategy strategy_from(const std::string& s, const std::string& field) {
    if (s == "JOINT") return FitStrategy::Joint;
    if (s == "TWO_STEP") return FitStrategy::TwoStep;
    throw ConfigError(field, "expected JOINT or TWO_STEP, got '" + s + "'");
}

std::string location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col > 1 ? col - 1 : col);
}

}  // namespace

std::string to_string(CommandKind k) {
    switch (k) {
        case CommandKind::Simulate: return "simulate";
        case CommandKind::Fit: return "fit";
        case CommandKind::Select: return "select";
        case CommandKind::Experiment: return "experiment";
    }
    return "?";
}

FamilyKind RunConfig::family_kind() const {
    if (model) return model->kind;
    if (!family.empty()) return family.front().kind;
    if (scenario) return scenario->kind;
    return FamilyKind::ErgodicDiffusion;
}

bool RunConfig::regression_data(const PathGrid& data) const {
    return family_kind() == FamilyKind::VolatilityRegression && data.dim() >= 2;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "JSON syntax error at " + location(text, e.byte) + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");

    RunConfig cfg;
    cfg.raw = text;
    const std::string kind = get_or<std::string>(j, "kind", "", "");
    if (kind == "simulate") cfg.kind = CommandKind::Simulate;
    else if (kind == "fit") cfg.kind = CommandKind::Fit;
    else if (kind == "select") cfg.kind = CommandKind::Select;
    else if (kind == "experiment") cfg.kind = CommandKind::Experiment;
    else throw ConfigError("kind", "expected simulate, fit, select or experiment, got '" + kind + "'");

    cfg.substeps = get_or<int>(j, "substeps", 10, "");
    if (cfg.substeps < 1) throw ConfigError("substeps", "must be >= 1");
    cfg.optimizer = optimizer_from(find(j, "optimizer"));
    const double level = get_or<double>(j, "a", 1.0, "");
    const double halfwidth = get_or<double>(j, "box_halfwidth", 10.0, "");

    std::optional<Scenario> scen;
    if (const json* s = find(j, "scenario")) {
        scen = wrap("scenario", [&] { return parse_scenario(as<std::string>(*s, "scenario")); });
        if (*scen == Scenario::Custom) {
            const json* c = find(j, "custom");
            if (!c) throw ConfigError("custom", "CUSTOM scenario needs a 'custom' definition");
            cfg.scenario = custom_from(*c, cfg.substeps);
        } else {
            cfg.scenario = wrap("scenario", [&] { return make_scenario(*scen, level, halfwidth); });
        }
    }
    if (const json* n = find(j, "n")) cfg.n = positive_size(*n, "n");
    if (const json* s = find(j, "strategy")) cfg.strategy = strategy_from(as<std::string>(*s, "strategy"), "strategy");
    if (const json* c = find(j, "criterion")) {
        cfg.criterion = wrap("criterion", [&] { return parse_criterion(as<std::string>(*c, "criterion")); });
    }

    switch (cfg.kind) {
        case CommandKind::Simulate:
            if (!cfg.scenario) throw ConfigError("scenario", "simulate needs a scenario");
            if (!find(j, "n")) throw ConfigError("n", "missing sample size");
            break;
        case CommandKind::Fit:
            if (const json* m = find(j, "model")) {
                cfg.model = model_from(*m, "model");
            } else if (cfg.scenario) {
                const std::string id = get_or<std::string>(j, "model_id", cfg.scenario->true_model_id, "");
                cfg.model = wrap("model_id", [&] { return cfg.scenario->family.at(cfg.scenario->index_of(id)); });
            } else {
                throw ConfigError("model", "fit needs a model declaration or a scenario");
            }
            break;
        case CommandKind::Select:
            if (const json* f = find(j, "family")) {
                cfg.family = family_from(*f, "family");
            } else if (find(j, "diffusions")) {
                cfg.decomposed = decomposed_from(j);
                cfg.family = cfg.decomposed->expand();
            } else if (cfg.scenario) {
                cfg.family = cfg.scenario->family;
                cfg.decomposed = cfg.scenario->decomposed;
            } else {
                throw ConfigError("family", "select needs a family, diffusions/drifts, or a scenario");
            }
            if (cfg.strategy == FitStrategy::TwoStep && !cfg.decomposed) {
                throw ConfigError("strategy", "TWO_STEP needs a decomposed family (diffusions and drifts)");
            }
            break;
        case CommandKind::Experiment: {
            if (!scen) throw ConfigError("scenario", "experiment needs a scenario");
            ExperimentConfig e;
            e.scenario = *scen;
            e.level = level;
            e.box_halfwidth = halfwidth;
            if (*scen == Scenario::Custom) e.custom = cfg.scenario;
            const json* nv = find(j, "n_values");
            if (!nv || !nv->is_array() || nv->empty()) throw ConfigError("n_values", "expected a nonempty array");
            for (std::size_t i = 0; i < nv->size(); ++i) {
                e.n_values.push_back(positive_size((*nv)[i], "n_values[" + std::to_string(i) + "]"));
            }
            e.replications = get_or<int>(j, "replications", 1, "");
            if (const json* c = find(j, "criteria")) e.criteria = criteria_from(*c, "criteria");
            if (const json* s = find(j, "strategies")) {
                if (!s->is_array() || s->empty()) throw ConfigError("strategies", "expected a nonempty array");
                e.strategies.clear();
                for (const auto& x : *s) e.strategies.push_back(strategy_from(as<std::string>(x, "strategies"), "strategies"));
            }
            e.substeps = cfg.substeps;
            e.max_blowup_retries = get_or<int>(j, "max_blowup_retries", 100, "");
            e.optimizer = cfg.optimizer;
            if (!find(j, "optimizer") || !find(*find(j, "optimizer"), "init_halfwidth")) e.optimizer.init_halfwidth = 0.5;
            cfg.experiment = e;
            e.validate();
            break;
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("", "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

CandidateModel parse_model(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "JSON syntax error at " + location(json_text, e.byte) + ": " + e.what());
    }
    return model_from(j, "model");
}

}  // namespace qbic
