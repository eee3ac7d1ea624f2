#pragma once

#include "qbic/criteria.hpp"

#include <optional>
#include <span>

namespace qbic {

/// Candidate family given as M1 diffusion specs times M2 drift specs.
struct DecomposedFamily {
    FamilyKind kind = FamilyKind::ErgodicDiffusion;
    std::vector<std::string> diffusion_ids;
    std::vector<CoefficientSpec> diffusions;
    std::vector<std::string> drift_ids;
    std::vector<CoefficientSpec> drifts;

    [[nodiscard]] std::size_t m1() const { return diffusions.size(); }
    [[nodiscard]] std::size_t m2() const { return drifts.size(); }
    [[nodiscard]] CandidateModel model(std::size_t i, std::size_t j) const;
    /// All M1 * M2 pairs, diffusion-major.
    [[nodiscard]] std::vector<CandidateModel> expand() const;
    void validate() const;

    static std::string pair_id(const std::string& diffusion, const std::string& drift);
};

struct SelectionOutcome {
    FitStrategy strategy = FitStrategy::Joint;
    Criterion criterion = Criterion::Qbic;
    std::string chosen;
    /// (diffusion index, drift index) for decomposed families.
    std::optional<std::pair<std::size_t, std::size_t>> chosen_pair;
    CriterionReport report;
    std::optional<std::string> stage1_chosen;
    std::optional<CriterionReport> stage1_report;
    /// Fits behind `report`, in the same order (best effort for non-converged candidates).
    std::vector<FitResult> fits;
    std::size_t fit_count = 0;
};

/// Fits every candidate jointly, scores it, and picks the minimizer of `criterion`.
/// Candidate fits run on up to `workers` threads; the result does not depend on `workers`.
SelectionOutcome joint_select(const Observations& obs, std::span<const CandidateModel> family, Criterion criterion,
                              const OptimizerConfig& cfg, int workers = 1);
SelectionOutcome joint_select(const PathGrid& path, std::span<const CandidateModel> family, Criterion criterion,
                              const OptimizerConfig& cfg, int workers = 1);
SelectionOutcome joint_select(const Observations& obs, const DecomposedFamily& family, Criterion criterion,
                              const OptimizerConfig& cfg, int workers = 1);

/// Stage 1 ranks the diffusion specs on the diffusion-only likelihood; stage 2 fixes the
/// winner and its estimate and ranks the drift specs on the conditional likelihood.
SelectionOutcome two_step_select(const Observations& obs, const DecomposedFamily& family, Criterion criterion,
                                 const OptimizerConfig& cfg, int workers = 1);
SelectionOutcome two_step_select(const PathGrid& path, const DecomposedFamily& family, Criterion criterion,
                                 const OptimizerConfig& cfg, int workers = 1);

}  // namespace qbic
