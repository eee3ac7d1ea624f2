#include "support.hpp"

#include "qbic/config.hpp"
#include "qbic/io.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

namespace qbic {
namespace {

std::string field_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

TEST(ParseConfig, SimulateScenario) {
    const RunConfig c = parse_config(R"({"kind": "simulate", "scenario": "ERGODIC_61", "n": 100})");
    EXPECT_EQ(c.kind, CommandKind::Simulate);
    ASSERT_TRUE(c.scenario.has_value());
    EXPECT_EQ(c.scenario->true_model_id, "Diff3/Drif2");
    EXPECT_EQ(c.n, 100u);
    EXPECT_EQ(c.substeps, 10);
}

TEST(ParseConfig, FieldDiagnostics) {
    EXPECT_EQ(field_of(R"({"kind": "simulate", "scenario": "ERGODIC_61", "n": 0})"), "n");
    EXPECT_EQ(field_of(R"({"kind": "simulate", "scenario": "ERGODIC_61"})"), "n");
    EXPECT_EQ(field_of(R"({"kind": "bake"})"), "kind");
    EXPECT_EQ(field_of(R"({"kind": "simulate", "scenario": "NOPE", "n": 5})"), "scenario");
    EXPECT_EQ(field_of(R"({"kind": "fit", "scenario": "VOLA_TRIG_621", "optimizer": {"restarts": 0}})"), "optimizer");
    EXPECT_EQ(field_of(R"({"kind": "fit", "scenario": "VOLA_TRIG_621", "n": "ten"})"), "n");
    EXPECT_EQ(field_of(R"({"kind": "select", "scenario": "VOLA_TRIG_621", "strategy": "TWO_STEP"})"), "strategy");
    EXPECT_EQ(field_of(R"({"kind": "experiment", "scenario": "VOLA_TRIG_621", "n_values": [], "replications": 2})"),
              "n_values");
    EXPECT_EQ(field_of(R"({"kind": "fit", "model": {"id": "m", "diffusion": {"basis": ["tanh"]}}})"),
              "model.diffusion.basis[0]");
}

TEST(ParseConfig, SyntaxErrorReportsLineAndColumn) {
    try {
        (void)parse_config("{\n  \"kind\": \"fit\",\n  \"n\": }\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(ParseConfig, InlineModelAndFamily) {
    const RunConfig fit = parse_config(R"({"kind": "fit", "model": {"id": "m", "family_kind": "ERGODIC_DIFFUSION",
        "diffusion": {"basis": ["cos", "1"], "lower": [-5, -5], "upper": [5, 5]},
        "drift": {"basis": ["x"]}}})");
    ASSERT_TRUE(fit.model.has_value());
    EXPECT_EQ(fit.model->p1(), 2);
    EXPECT_EQ(fit.model->p2(), 1);
    EXPECT_EQ(fit.model->drift->block.rate, RateExponent::SqrtNH);
    EXPECT_DOUBLE_EQ(fit.model->diffusion.block.upper[0], 5.0);

    const RunConfig sel = parse_config(R"({"kind": "select", "strategy": "TWO_STEP", "criterion": "BIC",
        "diffusions": [{"id": "D1", "basis": ["1"]}, {"id": "D2", "basis": ["cos", "1"]}],
        "drifts": [{"id": "A1", "basis": ["x"]}]})");
    ASSERT_TRUE(sel.decomposed.has_value());
    EXPECT_EQ(sel.family.size(), 2u);
    EXPECT_EQ(sel.family[1].id, "D2/A1");
    EXPECT_EQ(sel.criterion, Criterion::Bic);
}

TEST(ParseConfig, ExperimentDefaults) {
    const RunConfig c = parse_config(R"({"kind": "experiment", "scenario": "VOLA_CIRCLE_622", "a": 10,
        "n_values": [200, 1000], "replications": 5})");
    ASSERT_TRUE(c.experiment.has_value());
    EXPECT_EQ(c.experiment->level, 10.0);
    EXPECT_EQ(c.experiment->n_values, (std::vector<std::size_t>{200, 1000}));
    ASSERT_TRUE(c.experiment->optimizer.init_halfwidth.has_value());
    EXPECT_EQ(*c.experiment->optimizer.init_halfwidth, 0.5);
    EXPECT_EQ(c.experiment->scenario_spec().name, "VOLA_CIRCLE_622_a10");
}

TEST(ParseConfig, CustomScenarioGeneratesFromTruth) {
    const RunConfig c = parse_config(R"({"kind": "experiment", "scenario": "CUSTOM", "n_values": [100], "replications": 2,
        "custom": {"name": "OU", "family_kind": "ERGODIC_DIFFUSION",
                   "diffusions": [{"id": "D1", "basis": ["1"]}],
                   "drifts": [{"id": "A1", "basis": ["x"]}, {"id": "A2", "basis": ["x", "1"]}],
                   "true_model_id": "D1/A1", "theta_true": [0.0, -1.0], "x0": 0.5}})");
    const ScenarioSpec s = c.experiment->scenario_spec();
    EXPECT_EQ(s.supermodel_ids, (std::vector<std::string>{"D1/A2"}));
    const Observations obs = s.generate(100, 1, 10);
    EXPECT_EQ(obs.n(), 100u);
    EXPECT_DOUBLE_EQ(obs.state(0, 0), 0.5);
    const auto r = run_experiment(*c.experiment);
    EXPECT_EQ(r.scenario_name, "OU");
}

TEST(ParseModel, RejectsDriftOnVolatility) {
    EXPECT_THROW((void)parse_model(R"({"id": "v", "diffusion": {"basis": ["x"]}, "drift": {"basis": ["x"]}})"),
                 ConfigError);
    EXPECT_EQ(parse_model(R"({"id": "v", "diffusion": {"basis": ["x[0]", "x[1]"]}})").p1(), 2);
}

TEST(FitJson, CarriesEstimateAndCriteria) {
    const auto s = make_scenario(Scenario::VolaTrig621);
    const FitResult f = qmle_joint(s.generate(200, 2, 10), s.family[s.index_of("M4")], OptimizerConfig{});
    const auto j = nlohmann::json::parse(fit_json(f));
    EXPECT_EQ(j["model_id"], "M4");
    EXPECT_EQ(j["theta_hat"].size(), 2u);
    EXPECT_DOUBLE_EQ(j["theta_hat"][0].get<double>(), f.theta_hat[0]);
    EXPECT_DOUBLE_EQ(j["criteria"]["QBIC"].get<double>(), qbic(f));
    EXPECT_EQ(j["neg_hessian"].size(), 2u);
    EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(SelectionJson, NonFiniteBecomesNull) {
    CandidateScores bad = failed_score("x", 1, 0);
    SelectionOutcome o;
    o.chosen = "y";
    auto good = failed_score("y", 1, 0);
    good.converged = true;
    good.qbic = good.qbic_sharp = good.bic = good.faic = good.block_qbic = 1.0;
    o.report = make_report({bad, good}, FitStrategy::Joint);
    const auto j = nlohmann::json::parse(selection_json(o));
    EXPECT_TRUE(j["report"]["rows"][0]["QBIC"].is_null());
    EXPECT_EQ(j["chosen"], "y");
    EXPECT_FALSE(j.contains("stage1_chosen"));
}

TEST(Manifest, EchoesConfigAndOutputs) {
    RunManifest m;
    m.command = "simulate";
    m.config_echo = R"({"kind": "simulate"})";
    m.master_seed = 7;
    m.outputs = {"a.csv"};
    const auto j = nlohmann::json::parse(m.to_json());
    EXPECT_EQ(j["config"]["kind"], "simulate");
    EXPECT_EQ(j["master_seed"], 7);
    EXPECT_EQ(j["outputs"][0], "a.csv");
    EXPECT_EQ(j["version"], kLibraryVersion);
}

}  // namespace
}  // namespace qbic
