#pragma once

#include "qbic/model_spec.hpp"
#include "qbic/path.hpp"

#include <optional>

namespace qbic {

enum class DerivativeMethod { Analytic, FiniteDifference };

/// H_n(theta) with its gradient and (symmetrized) Hessian.
struct Evaluation {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
    DerivativeMethod method = DerivativeMethod::Analytic;
};

/// Gaussian quasi-log likelihood
///
///   H_n(theta) = -1/2 sum_j { log B(X_{j-1}, theta_1) + (Delta_j - h a(X_{j-1}, theta_2))^2 / (h B(X_{j-1}, theta_1)) }
///
/// restricted to one of three parameterizations: the joint (theta_1, theta_2), the diffusion-only
/// field (drift set to zero, which is also the volatility-regression likelihood), and the drift
/// field with theta_1 held fixed. Basis values are precomputed once per data set, so repeated
/// evaluation inside an optimizer costs O(n p^2).
///
/// Derivatives are analytic when the diffusion is EXP_LINEAR and the drift (if any) is LINEAR;
/// otherwise central finite differences of the value are used.
class QuasiLikelihood {
  public:
    enum class Mode { Joint, DiffusionOnly, DriftGivenDiffusion };

    static QuasiLikelihood joint(const Observations& obs, const CandidateModel& model);
    static QuasiLikelihood diffusion_only(const Observations& obs, const CandidateModel& model);
    static QuasiLikelihood drift_given(const Observations& obs, const CandidateModel& model, const Vector& theta1);

    [[nodiscard]] Mode mode() const { return mode_; }
    [[nodiscard]] int dim() const;
    [[nodiscard]] bool analytic() const { return analytic_; }
    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(increments_.size()); }
    [[nodiscard]] double h() const { return h_; }

    [[nodiscard]] double value(const Vector& theta) const;
    /// Analytic derivatives when available, finite differences otherwise.
    [[nodiscard]] Evaluation evaluate(const Vector& theta) const;
    /// Always finite differences (gradient step 1e-6 (1+|t|), Hessian step 1e-4 (1+|t|)).
    [[nodiscard]] Evaluation evaluate_numeric(const Vector& theta) const;

  private:
    QuasiLikelihood(Mode mode, const Observations& obs, const CandidateModel& model);

    void split(const Vector& theta, Vector& t1, Vector& t2) const;
    [[nodiscard]] Evaluation evaluate_analytic(const Vector& theta) const;

    Mode mode_;
    CandidateModel model_;
    Observations obs_;
    Vector increments_;
    double h_;
    bool analytic_ = false;
    bool use_drift_ = false;
    Matrix diff_design_;   // n x p1, basis values of the diffusion at X_{j-1}
    Matrix drift_design_;  // n x p2
    Vector fixed_theta1_;
};

/// Joint ergodic-diffusion quasi-likelihood at theta = (theta_1, theta_2).
Evaluation ergodic_gql(const PathGrid& path, const CandidateModel& model, const Vector& theta);
/// Diffusion-only field H^1(theta_1), i.e. the joint field with the drift set to zero.
Evaluation diffusion_stage_gql(const PathGrid& path, const CandidateModel& model, const Vector& theta1);
/// theta_2 -> H_n(theta1_fixed, theta_2).
Evaluation drift_stage_gql(const PathGrid& path, const CandidateModel& model, const Vector& theta1_fixed,
                           const Vector& theta2);
/// Exponential volatility regression with the covariates used as the design directly:
/// H_n(theta) = -1/2 sum_j { X_{j-1}' theta + (Delta_j Y)^2 / h exp(-X_{j-1}' theta) }.
Evaluation volatility_gql(const PathGrid& covariates, const PathGrid& response, const Vector& theta);
/// Volatility-regression model over basis functions of the state in `obs`.
Evaluation volatility_gql(const Observations& obs, const CandidateModel& model, const Vector& theta);

/// Neumaier-compensated sum.
double compensated_sum(const Vector& v);

}  // namespace qbic
