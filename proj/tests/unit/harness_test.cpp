#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace qbic {
namespace {

ExperimentConfig trig(std::vector<std::size_t> ns, int reps) {
    ExperimentConfig c;
    c.scenario = Scenario::VolaTrig621;
    c.n_values = std::move(ns);
    c.replications = reps;
    c.master_seed = 123;
    return c;
}

TEST(RunExperiment, SingleCandidateIsAlwaysChosen) {
    ScenarioSpec spec = make_scenario(Scenario::VolaTrig621);
    spec.family = {spec.family[spec.index_of("M4")]};
    spec.supermodel_ids.clear();
    spec.scenario = Scenario::Custom;
    ExperimentConfig c;
    c.scenario = Scenario::Custom;
    c.custom = spec;
    c.n_values = {50};
    c.replications = 1;
    const auto r = run_experiment(c);
    for (const auto& sel : r.freq.selectors) EXPECT_DOUBLE_EQ(r.freq.frequency(sel, 50, "M4"), 1.0);
}

TEST(RunExperiment, WorkerCountInvariance) {
    auto c = trig({50, 100}, 24);
    c.workers = 1;
    const auto a = run_experiment(c);
    c.workers = 4;
    const auto b = run_experiment(c);
    EXPECT_TRUE(a.freq == b.freq);
    EXPECT_TRUE(a.est == b.est);
    EXPECT_EQ(frequency_csv(a.freq), frequency_csv(b.freq));
    EXPECT_EQ(estimator_csv(a.est), estimator_csv(b.est));
}

TEST(RunExperiment, SeedChangesResultsDeterministically) {
    auto c = trig({50}, 10);
    const auto a = run_experiment(c);
    const auto a2 = run_experiment(c);
    c.master_seed = 124;
    const auto b = run_experiment(c);
    EXPECT_EQ(estimator_csv(a.est), estimator_csv(a2.est));
    EXPECT_NE(estimator_csv(a.est), estimator_csv(b.est));
}

TEST(RunExperiment, CountsPlusExclusionsSumToReplications) {
    const auto r = run_experiment(trig({50, 100}, 20));
    const auto& t = r.freq;
    for (std::size_t s = 0; s < t.selectors.size(); ++s) {
        for (std::size_t i = 0; i < t.n_values.size(); ++i) {
            long sum = t.excluded[s][i];
            for (long c : t.counts[s][i]) sum += c;
            EXPECT_EQ(sum, t.replications);
        }
    }
}

TEST(RunExperiment, EstimatorSdNonNegative) {
    const auto r = run_experiment(trig({50}, 15));
    for (const auto& cell : r.est.cells) {
        EXPECT_GE(cell.sd, 0.0);
        EXPECT_LE(cell.count, 15);
    }
    EXPECT_EQ(r.est.at("M4", 50, 0).count, 15);
}

TEST(RunExperiment, TwoStepSelectorsOnErgodicScenario) {
    ExperimentConfig c;
    c.scenario = Scenario::Ergodic61;
    c.n_values = {200};
    c.replications = 3;
    c.criteria = {Criterion::Qbic};
    c.strategies = {FitStrategy::Joint, FitStrategy::TwoStep};
    const auto r = run_experiment(c);
    ASSERT_EQ(r.freq.selectors, (std::vector<std::string>{"QBIC", "TWO_STEP_QBIC"}));
    EXPECT_EQ(r.freq.candidates.size(), 21u);
}

TEST(ExperimentConfig, ValidationErrors) {
    auto c = trig({50}, 0);
    EXPECT_THROW(c.validate(), ConfigError);
    c = trig({}, 1);
    EXPECT_THROW(c.validate(), ConfigError);
    c = trig({50}, 1);
    c.strategies = {FitStrategy::TwoStep};
    EXPECT_THROW(c.validate(), ConfigError);
    c = trig({50}, 1);
    c.scenario = Scenario::Custom;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Selector, NamesRoundTrip) {
    for (FitStrategy st : {FitStrategy::Joint, FitStrategy::TwoStep}) {
        for (Criterion c : kAllCriteria) {
            const Selector s{st, c};
            const Selector p = Selector::parse(s.name());
            EXPECT_EQ(p.strategy, st);
            EXPECT_EQ(p.criterion, c);
        }
    }
    EXPECT_EQ((Selector{FitStrategy::TwoStep, Criterion::Qbic}).name(), "TWO_STEP_QBIC");
}

TEST(Summarize, CsvRoundTrip) {
    const auto r = run_experiment(trig({50, 100}, 8));
    EXPECT_TRUE(parse_frequency_csv(frequency_csv(r.freq)) == r.freq);
    EXPECT_TRUE(parse_estimator_csv(estimator_csv(r.est)) == r.est);
}

TEST(Summarize, EmptyCountersRenderAsZero) {
    FrequencyTable t;
    t.selectors = {"QBIC"};
    t.n_values = {50};
    t.candidates = {"M1", "M2"};
    t.replications = 3;
    t.resize();
    t.counts[0][0] = {1, 2};
    const std::string csv = frequency_csv(t);
    EXPECT_NE(csv.find("QBIC,50,3,0,0,0,1,2"), std::string::npos) << csv;
    EXPECT_TRUE(parse_frequency_csv(csv) == t);
    const Summary s = summarize(t, EstimatorSummary{});
    EXPECT_NE(s.text.find("QBIC"), std::string::npos);
}

TEST(Summarize, TableLayoutHasCriteriaByCandidatesPerN) {
    const auto r = run_experiment(trig({50, 100, 200}, 4));
    EXPECT_EQ(r.freq.selectors.size(), 3u);
    EXPECT_EQ(r.freq.candidates.size(), 7u);
    EXPECT_EQ(r.freq.n_values.size(), 3u);
    const std::string text = frequency_text(r.freq);
    for (const char* n : {"n=50", "n=100", "n=200"}) EXPECT_NE(text.find(n), std::string::npos);
}

TEST(WriteTables, FileNames) {
    const auto r = run_experiment(trig({50}, 2));
    const auto dir = std::filesystem::temp_directory_path() / "qbic_harness_tables";
    std::filesystem::remove_all(dir);
    const auto paths = write_experiment_tables(dir, r);
    EXPECT_TRUE(std::filesystem::exists(dir / "freq_VOLA_TRIG_621_QBIC.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "freq_VOLA_TRIG_621_FAIC.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "est_VOLA_TRIG_621.csv"));
    EXPECT_EQ(paths.size(), 4u);
    std::filesystem::remove_all(dir);
}

TEST(StreamSeed, DistinctKeysGiveDistinctStreams) {
    EXPECT_NE(stream_seed(1, {50, 0, 0}), stream_seed(1, {50, 1, 0}));
    EXPECT_NE(stream_seed(1, {50, 0, 0}), stream_seed(2, {50, 0, 0}));
    EXPECT_NE(stream_seed(1, {50, 0}), stream_seed(1, {0, 50}));
    EXPECT_EQ(stream_seed(1, {50, 0, 0}), stream_seed(1, {50, 0, 0}));
}

}  // namespace
}  // namespace qbic
