#pragma once

#include "qbic/harness.hpp"
#include "qbic/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qbic::test {

inline std::vector<BasisFunction> basis(std::initializer_list<const char*> names) {
    std::vector<BasisFunction> out;
    for (const char* n : names) out.push_back(BasisFunction::parse(n));
    return out;
}

inline CoefficientSpec exp_spec(std::initializer_list<const char*> names, double halfwidth = 20.0) {
    auto b = basis(names);
    const int d = static_cast<int>(b.size());
    return CoefficientSpec::exp_linear(std::move(b), ParamBlock::around("diffusion", Vector::Zero(d), halfwidth,
                                                                        RateExponent::SqrtN));
}

inline CoefficientSpec lin_spec(std::initializer_list<const char*> names, double halfwidth = 20.0) {
    auto b = basis(names);
    const int d = static_cast<int>(b.size());
    return CoefficientSpec::linear(std::move(b), ParamBlock::around("drift", Vector::Zero(d), halfwidth,
                                                                    RateExponent::SqrtNH));
}

inline CandidateModel ergodic_model(std::string id, std::initializer_list<const char*> diff,
                                    std::initializer_list<const char*> drift) {
    return CandidateModel::ergodic(std::move(id), exp_spec(diff), lin_spec(drift));
}

inline ScenarioSpec ergodic_scenario() { return make_scenario(Scenario::Ergodic61); }

/// Scalar path of an Ornstein-Uhlenbeck type diffusion, enough variation for every basis.
inline PathGrid ou_path(std::size_t n, double h, std::uint64_t seed, double sigma = 0.8) {
    SdeSpec sde{1, 1, [](double, State x, Eigen::Ref<Vector> a) { a[0] = -x[0]; },
                [sigma](double, State x, Eigen::Ref<Matrix> b) { b(0, 0) = sigma * std::exp(0.2 * std::cos(x[0])); }};
    SimScheme sch;
    sch.n = n;
    sch.h_rule = StepRule::FixedHorizon;
    sch.horizon = h * static_cast<double>(n);
    sch.substeps = 2;
    sch.seed = seed;
    return euler_maruyama(sde, Vector::Constant(1, 0.3), sch);
}

inline Vector uniform_in(const Vector& lo, const Vector& hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector v(lo.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
    return v;
}

inline double max_rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Fit with the given value and negative Hessian; single block unless `blocks` is given.
inline FitResult stub_fit(double value, const Matrix& neg_hessian, std::size_t n, double h = 1.0,
                          std::vector<ParamBlock> blocks = {}) {
    FitResult f;
    f.model_id = "stub";
    f.kind = FamilyKind::VolatilityRegression;
    f.theta_hat = Vector::Zero(neg_hessian.rows());
    if (blocks.empty()) {
        blocks.push_back(ParamBlock::around("theta", f.theta_hat, 1.0, RateExponent::SqrtN));
    }
    f.blocks = std::move(blocks);
    f.value = value;
    f.neg_hessian = neg_hessian;
    f.converged = true;
    f.n = n;
    f.h = h;
    return f;
}

}  // namespace qbic::test
