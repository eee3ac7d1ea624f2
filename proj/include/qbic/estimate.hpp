#pragma once

#include "qbic/errors.hpp"
#include "qbic/gql.hpp"
#include "qbic/optimize.hpp"

#include <cstdint>
#include <optional>

namespace qbic {

struct OptimizerConfig {
    int restarts = 5;
    /// Base tolerance; the effective tolerance is grad_tol * (1 + |H| / n).
    double grad_tol = 1e-6;
    int max_iters = 500;
    std::uint64_t seed = 0;
    /// If set, starts are drawn uniformly from box-midpoint +- init_halfwidth (clipped to the box)
    /// rather than over the whole box.
    std::optional<double> init_halfwidth;

    void validate() const;
};

enum class FitStrategy { Joint, TwoStep };

std::string to_string(FitStrategy s);

/// Which part of the parameter a fit covers.
enum class FitStage { Full, DiffusionOnly, DriftGivenDiffusion };

struct FitResult {
    std::string model_id;
    FamilyKind kind = FamilyKind::ErgodicDiffusion;
    FitStrategy strategy = FitStrategy::Joint;
    FitStage stage = FitStage::Full;
    Vector theta_hat;
    std::vector<ParamBlock> blocks;  ///< laid out consecutively in theta_hat
    double value = 0.0;              ///< H_n(theta_hat)
    Matrix neg_hessian;              ///< -d^2 H_n(theta_hat)
    double grad_norm = 0.0;
    double tolerance = 0.0;
    bool converged = false;
    int evals = 0;
    std::vector<double> restart_values;
    std::size_t n = 0;
    double h = 0.0;

    [[nodiscard]] int dim() const { return static_cast<int>(theta_hat.size()); }
    [[nodiscard]] int block_offset(std::size_t k) const;
    [[nodiscard]] Vector block_value(std::size_t k) const;
    [[nodiscard]] Matrix block_neg_hessian(std::size_t k) const;
    [[nodiscard]] double log_box_volume() const;
};

/// Raised when no restart reaches an interior stationary point; carries the best attempt.
class NonConvergence : public Error {
  public:
    NonConvergence(const std::string& what, FitResult best) : Error(what), best_(std::move(best)) {}
    [[nodiscard]] const FitResult& best_effort() const noexcept { return best_; }

  private:
    FitResult best_;
};

/// Multi-start maximization of an arbitrary objective on a box; the returned fit has a single
/// block spanning [lower, upper]. `n` scales the gradient tolerance.
FitResult qmle(const Objective& f, const ParamBlock& box, const OptimizerConfig& cfg, std::size_t n, double h = 1.0);

/// Joint maximization over every block of the model.
FitResult qmle_joint(const Observations& obs, const CandidateModel& model, const OptimizerConfig& cfg);
FitResult qmle_joint(const PathGrid& path, const CandidateModel& model, const OptimizerConfig& cfg);

/// Diffusion block first (drift set to zero), then the drift block given the diffusion estimate.
/// The result carries the full joint Hessian at (theta_1_hat, theta_2_hat).
FitResult qmle_two_step(const Observations& obs, const CandidateModel& model, const OptimizerConfig& cfg);
FitResult qmle_two_step(const PathGrid& path, const CandidateModel& model, const OptimizerConfig& cfg);

/// Maximizer of the diffusion-only field; a single-block fit.
FitResult fit_diffusion_stage(const Observations& obs, const CandidateModel& model, const OptimizerConfig& cfg);

/// Maximizer of theta_2 -> H_n(theta1, theta_2); a single-block fit. LINEAR drifts are solved by
/// weighted least squares, with iterative maximization as fallback when the normal equations are singular.
FitResult fit_drift_stage(const Observations& obs, const CandidateModel& model, const Vector& theta1,
                          const OptimizerConfig& cfg);

}  // namespace qbic
