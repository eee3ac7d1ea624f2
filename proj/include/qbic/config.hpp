#pragma once

#include "qbic/harness.hpp"

#include <optional>
#include <string>

namespace qbic {

enum class CommandKind { Simulate, Fit, Select, Experiment };

std::string to_string(CommandKind k);

/// Parsed run configuration shared by every subcommand.
///
/// Data sources are either a built-in scenario ("scenario") or inline model declarations
/// ("model" for fit, "family" / "diffusions" + "drifts" for select).
struct RunConfig {
    CommandKind kind = CommandKind::Fit;
    std::string raw;  ///< the configuration text, echoed into manifests

    std::optional<ScenarioSpec> scenario;
    std::size_t n = 0;
    int substeps = 10;

    std::optional<CandidateModel> model;
    std::vector<CandidateModel> family;
    std::optional<DecomposedFamily> decomposed;
    FitStrategy strategy = FitStrategy::Joint;
    Criterion criterion = Criterion::Qbic;
    OptimizerConfig optimizer;

    std::optional<ExperimentConfig> experiment;

    /// Whether data files for this config carry a response column (regression data).
    [[nodiscard]] bool regression_data(const PathGrid& data) const;
    [[nodiscard]] FamilyKind family_kind() const;
};

/// Parses the JSON configuration. Throws ConfigError naming the offending field, or the
/// line and column of a syntax error.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Model declaration:
///   {"id": "M1", "family_kind": "VOLATILITY_REGRESSION",
///    "diffusion": {"form": "EXP_LINEAR", "basis": ["x[0]", "x[1]"], "lower": [..], "upper": [..], "rate": "SQRT_N"},
///    "drift": {"form": "LINEAR", "basis": ["x", "1"]}}
/// Bounds default to [-20, 20]; rates default to SQRT_N (diffusion) and SQRT_NH (drift).
CandidateModel parse_model(const std::string& json_text);

}  // namespace qbic
