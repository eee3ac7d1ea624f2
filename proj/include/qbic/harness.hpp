#pragma once

#include "qbic/scenarios.hpp"

#include <filesystem>
#include <functional>

namespace qbic {

/// One (strategy, criterion) pair tallied by an experiment.
struct Selector {
    FitStrategy strategy = FitStrategy::Joint;
    Criterion criterion = Criterion::Qbic;

    /// "QBIC" for joint selection, "TWO_STEP_QBIC" for two-step.
    [[nodiscard]] std::string name() const;
    static Selector parse(std::string_view name);
};

struct ExperimentConfig {
    Scenario scenario = Scenario::VolaTrig621;
    double level = 1.0;                 ///< constant covariate of VOLA_CIRCLE_622
    std::optional<ScenarioSpec> custom;  ///< required when scenario == Custom
    std::vector<std::size_t> n_values;
    int replications = 1;
    std::vector<Criterion> criteria = {Criterion::Qbic, Criterion::Bic, Criterion::Faic};
    std::vector<FitStrategy> strategies = {FitStrategy::Joint};
    std::uint64_t master_seed = 0;
    int workers = 1;
    int substeps = 10;
    double box_halfwidth = 10.0;
    OptimizerConfig optimizer = [] {
        OptimizerConfig o;
        o.init_halfwidth = 0.5;
        return o;
    }();
    int max_blowup_retries = 100;

    void validate() const;
    [[nodiscard]] ScenarioSpec scenario_spec() const;
    [[nodiscard]] std::vector<Selector> selectors() const;
};

/// counts[selector][n][candidate]. `excluded` counts replications in which no candidate of a
/// selection converged; blowups and non-converged candidate fits are tallied per n.
struct FrequencyTable {
    std::vector<std::string> selectors;
    std::vector<std::size_t> n_values;
    std::vector<std::string> candidates;
    int replications = 0;
    std::vector<std::vector<std::vector<long>>> counts;
    std::vector<std::vector<long>> excluded;
    std::vector<long> blowups;
    std::vector<long> non_convergences;

    void resize();
    [[nodiscard]] long count(const std::string& selector, std::size_t n, const std::string& candidate) const;
    /// count / replications
    [[nodiscard]] double frequency(const std::string& selector, std::size_t n, const std::string& candidate) const;
    /// Summed frequency of a set of candidates.
    [[nodiscard]] double frequency(const std::string& selector, std::size_t n,
                                   const std::vector<std::string>& candidates) const;

    friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;
};

struct EstimatorCell {
    std::string candidate;
    std::size_t n = 0;
    int coordinate = 0;
    long count = 0;
    double mean = 0.0;
    double sd = 0.0;

    friend bool operator==(const EstimatorCell&, const EstimatorCell&) = default;
};

/// Mean and sample standard deviation of converged joint estimates, per (candidate, n, coordinate).
struct EstimatorSummary {
    std::vector<EstimatorCell> cells;

    [[nodiscard]] const EstimatorCell& at(const std::string& candidate, std::size_t n, int coordinate) const;

    friend bool operator==(const EstimatorSummary&, const EstimatorSummary&) = default;
};

struct ExperimentResult {
    std::string scenario_name;
    std::string true_model_id;
    std::vector<std::string> supermodel_ids;
    FrequencyTable freq;
    EstimatorSummary est;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every (n, replication): draws data from the stream (master_seed, n, rep, attempt),
/// resampling on blowup, runs every selector and accumulates estimator statistics.
/// The result is identical for every worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Columns: selector,n,replications,excluded,blowups,non_convergences,<candidates...>
/// Restricting to one selector gives the per-criterion file.
std::string frequency_csv(const FrequencyTable& t, const std::optional<std::string>& selector = std::nullopt);
FrequencyTable parse_frequency_csv(const std::string& text);

/// Columns: candidate,n,coordinate,count,mean,sd
std::string estimator_csv(const EstimatorSummary& s);
EstimatorSummary parse_estimator_csv(const std::string& text);

/// Aligned tables: one block per n, one row per selector, one column per candidate.
std::string frequency_text(const FrequencyTable& t);
std::string estimator_text(const EstimatorSummary& s);

struct Summary {
    std::string frequency_csv;
    std::string estimator_csv;
    std::string text;
};

Summary summarize(const FrequencyTable& freq, const EstimatorSummary& est);

/// Writes freq_<scenario>_<selector>.csv and est_<scenario>.csv into `dir`; returns the paths.
std::vector<std::filesystem::path> write_experiment_tables(const std::filesystem::path& dir,
                                                           const ExperimentResult& result);

}  // namespace qbic
