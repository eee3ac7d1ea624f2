#pragma once

#include "qbic/model_spec.hpp"
#include "qbic/path.hpp"

#include <cstdint>
#include <functional>

namespace qbic {

/// How the observation step h follows from n.
enum class StepRule {
    Ergodic,       ///< h = n^{-2/3}, so T_n = n^{1/3}
    FixedHorizon,  ///< h = T / n
};

struct SimScheme {
    std::size_t n = 0;
    StepRule h_rule = StepRule::FixedHorizon;
    double horizon = 1.0;  ///< T, used by FixedHorizon only
    int substeps = 10;     ///< fine Euler steps per observation step
    std::uint64_t seed = 0;

    [[nodiscard]] double step() const;
    void validate() const;
};

/// drift(t, x, out): writes a(t, x) into out (length d).
using DriftFn = std::function<void(double, State, Eigen::Ref<Vector>)>;
/// diffusion(t, x, out): writes the d x m coefficient into out.
using DiffusionFn = std::function<void(double, State, Eigen::Ref<Matrix>)>;

struct SdeSpec {
    int dim = 1;
    int noise_dim = 1;
    DriftFn drift;
    DiffusionFn diffusion;
};

/// Paths with any |X| above this bound are treated as blown up.
inline constexpr double kBlowupBound = 1e6;

/// Euler-Maruyama on the fine grid h / substeps, recording every substeps-th point.
/// Deterministic given scheme.seed. Throws SimulationBlowup on non-finite or |X| > 1e6.
PathGrid euler_maruyama(const SdeSpec& sde, const Vector& x0, const SimScheme& scheme);

enum class CovariateKind { TrigDeterministic, WienerCircle, RationalWiener };

std::string to_string(CovariateKind k);

/// 3-dimensional covariate process on [0, T]:
///   TrigDeterministic: (1, cos(2 pi j / n), sin(2 pi j / n))
///   WienerCircle:      (a, X2, X3) with (X2, X3) = (cos B, sin B) generated by its Ito SDE
///   RationalWiener:    (1, 1/(1+B^2), B/(1+B^2))
PathGrid covariate_path(CovariateKind kind, const SimScheme& scheme, double level = 1.0);

struct RegressionSample {
    PathGrid covariates;
    PathGrid response;
};

/// Covariates of the given kind co-simulated with dY = exp(X' theta0 / 2) dw, Y_0 = 0.
/// B and w are independent streams.
RegressionSample simulate_volatility_regression(CovariateKind kind, const Vector& theta0, const SimScheme& scheme,
                                                double level = 1.0);

/// Riemann sum h * sum_{j=1}^{n} X_{t_{j-1}} X_{t_{j-1}}' followed by its determinant.
double gram_determinant(const PathGrid& path);

}  // namespace qbic
