#include "qbic/gql.hpp"

#include "qbic/errors.hpp"

#include <cmath>

namespace qbic {

double compensated_sum(const Vector& v) {
    double sum = 0.0;
    double comp = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v[i];
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

namespace {

Matrix design(const PathGrid& state, std::size_t n, const std::vector<BasisFunction>& basis) {
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < n; ++j) {
        const State x = state.at(j);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = basis[k](x);
        }
    }
    return out;
}

void require_dim(const Vector& theta, int dim, const char* what) {
    if (theta.size() != dim) {
        throw SpecificationError(std::string(what) + ": parameter has dimension " + std::to_string(theta.size()) +
                                 ", expected " + std::to_string(dim));
    }
}

}  // namespace

QuasiLikelihood::QuasiLikelihood(Mode mode, const Observations& obs, const CandidateModel& model)
    : mode_(mode), model_(model), obs_(obs), increments_(obs.increments), h_(obs.h()) {
    model_.validate();
    if (static_cast<std::size_t>(increments_.size()) != obs_.n()) {
        throw SpecificationError("observations: increment count does not match the grid");
    }
    use_drift_ = mode != Mode::DiffusionOnly && model_.drift.has_value();
    const std::size_t n = obs_.n();
    if (model_.diffusion.has_basis()) diff_design_ = design(obs_.state, n, model_.diffusion.basis);
    if (use_drift_ && model_.drift->has_basis()) drift_design_ = design(obs_.state, n, model_.drift->basis);
    const bool drift_ok = !use_drift_ || model_.drift->form == CoefficientForm::Linear;
    analytic_ = model_.diffusion.form == CoefficientForm::ExpLinear && drift_ok;
}

QuasiLikelihood QuasiLikelihood::joint(const Observations& obs, const CandidateModel& model) {
    return QuasiLikelihood(Mode::Joint, obs, model);
}

QuasiLikelihood QuasiLikelihood::diffusion_only(const Observations& obs, const CandidateModel& model) {
    return QuasiLikelihood(Mode::DiffusionOnly, obs, model);
}

QuasiLikelihood QuasiLikelihood::drift_given(const Observations& obs, const CandidateModel& model,
                                             const Vector& theta1) {
    if (!model.drift) throw UnsupportedOperation("model '" + model.id + "' has no drift block");
    require_dim(theta1, model.p1(), "fixed diffusion parameter");
    QuasiLikelihood q(Mode::DriftGivenDiffusion, obs, model);
    q.fixed_theta1_ = theta1;
    return q;
}

int QuasiLikelihood::dim() const {
    switch (mode_) {
        case Mode::Joint: return use_drift_ ? model_.dim() : model_.p1();
        case Mode::DiffusionOnly: return model_.p1();
        case Mode::DriftGivenDiffusion: return model_.p2();
    }
    return 0;
}

void QuasiLikelihood::split(const Vector& theta, Vector& t1, Vector& t2) const {
    require_dim(theta, dim(), "quasi-likelihood");
    switch (mode_) {
        case Mode::Joint:
            t1 = theta.head(model_.p1());
            if (use_drift_) t2 = theta.tail(model_.p2());
            break;
        case Mode::DiffusionOnly: t1 = theta; break;
        case Mode::DriftGivenDiffusion:
            t1 = fixed_theta1_;
            t2 = theta;
            break;
    }
}

double QuasiLikelihood::value(const Vector& theta) const {
    Vector t1, t2;
    split(theta, t1, t2);
    const std::size_t n = this->n();
    const auto ni = static_cast<Eigen::Index>(n);

    Vector logb(ni), mean = Vector::Zero(ni);
    Vector inv_b(ni);
    if (model_.diffusion.form == CoefficientForm::ExpLinear) {
        logb = diff_design_ * t1;
        inv_b = (-logb).array().exp();
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            const double b = eval_diffusion(model_, obs_.state.at(j), t1);
            logb[static_cast<Eigen::Index>(j)] = std::log(b);
            inv_b[static_cast<Eigen::Index>(j)] = 1.0 / b;
        }
    }
    if (use_drift_) {
        if (model_.drift->has_basis() && model_.drift->form == CoefficientForm::Linear) {
            mean = drift_design_ * t2;
        } else {
            for (std::size_t j = 0; j < n; ++j) mean[static_cast<Eigen::Index>(j)] = eval_drift(model_, obs_.state.at(j), t2);
        }
    }
    const Vector r = increments_ - h_ * mean;
    const Vector terms = logb.array() + r.array().square() * inv_b.array() / h_;
    const double v = -0.5 * compensated_sum(terms);
    if (!std::isfinite(v)) throw EvaluationError("quasi-likelihood is not finite at the given parameter");
    return v;
}

Evaluation QuasiLikelihood::evaluate(const Vector& theta) const {
    if (analytic_) return evaluate_analytic(theta);
    return evaluate_numeric(theta);
}

Evaluation QuasiLikelihood::evaluate_analytic(const Vector& theta) const {
    Vector t1, t2;
    split(theta, t1, t2);
    const auto ni = static_cast<Eigen::Index>(n());
    const int p1 = model_.p1();
    const int p2 = use_drift_ ? model_.p2() : 0;

    const Vector s = diff_design_ * t1;
    const Vector w = (-s).array().exp();
    Vector r = increments_;
    if (use_drift_) r -= h_ * (drift_design_ * t2);
    const Vector rw = r.cwiseProduct(w);
    const Vector q = r.cwiseProduct(rw) / h_;  // r^2 w / h

    Evaluation e;
    e.method = DerivativeMethod::Analytic;
    e.value = -0.5 * compensated_sum(s + q);
    if (!std::isfinite(e.value)) throw EvaluationError("quasi-likelihood is not finite at the given parameter");

    const Vector one_minus_q = Vector::Ones(ni) - q;
    Vector g1 = -0.5 * (diff_design_.transpose() * one_minus_q);
    Matrix h11 = -0.5 * (diff_design_.transpose() * q.asDiagonal() * diff_design_);

    switch (mode_) {
        case Mode::DiffusionOnly:
            e.gradient = std::move(g1);
            e.hessian = std::move(h11);
            break;
        case Mode::Joint: {
            e.gradient.resize(p1 + p2);
            e.hessian.resize(p1 + p2, p1 + p2);
            e.gradient.head(p1) = g1;
            e.hessian.topLeftCorner(p1, p1) = h11;
            if (p2 > 0) {
                e.gradient.tail(p2) = drift_design_.transpose() * rw;
                e.hessian.bottomRightCorner(p2, p2) = -h_ * (drift_design_.transpose() * w.asDiagonal() * drift_design_);
                const Matrix h21 = -(drift_design_.transpose() * rw.asDiagonal() * diff_design_);
                e.hessian.bottomLeftCorner(p2, p1) = h21;
                e.hessian.topRightCorner(p1, p2) = h21.transpose();
            }
            break;
        }
        case Mode::DriftGivenDiffusion:
            e.gradient = drift_design_.transpose() * rw;
            e.hessian = -h_ * (drift_design_.transpose() * w.asDiagonal() * drift_design_);
            break;
    }
    e.hessian = 0.5 * (e.hessian + e.hessian.transpose()).eval();
    return e;
}

Evaluation QuasiLikelihood::evaluate_numeric(const Vector& theta) const {
    const int d = dim();
    require_dim(theta, d, "quasi-likelihood");
    Evaluation e;
    e.method = DerivativeMethod::FiniteDifference;
    e.value = value(theta);
    e.gradient.resize(d);
    e.hessian.resize(d, d);

    Vector t = theta;
    for (int i = 0; i < d; ++i) {
        const double step = 1e-6 * (1.0 + std::abs(theta[i]));
        t[i] = theta[i] + step;
        const double fp = value(t);
        t[i] = theta[i] - step;
        const double fm = value(t);
        t[i] = theta[i];
        e.gradient[i] = (fp - fm) / (2.0 * step);
    }

    Vector steps(d);
    for (int i = 0; i < d; ++i) steps[i] = 1e-4 * (1.0 + std::abs(theta[i]));
    for (int i = 0; i < d; ++i) {
        const double si = steps[i];
        t[i] = theta[i] + si;
        const double fp = value(t);
        t[i] = theta[i] - si;
        const double fm = value(t);
        t[i] = theta[i];
        e.hessian(i, i) = (fp - 2.0 * e.value + fm) / (si * si);
        for (int k = 0; k < i; ++k) {
            const double sk = steps[k];
            auto at = [&](double a, double b) {
                t[i] = theta[i] + a;
                t[k] = theta[k] + b;
                const double v = value(t);
                t[i] = theta[i];
                t[k] = theta[k];
                return v;
            };
            const double v = (at(si, sk) - at(si, -sk) - at(-si, sk) + at(-si, -sk)) / (4.0 * si * sk);
            e.hessian(i, k) = v;
            e.hessian(k, i) = v;
        }
    }
    return e;
}

Evaluation ergodic_gql(const PathGrid& path, const CandidateModel& model, const Vector& theta) {
    return QuasiLikelihood::joint(Observations::diffusion(path), model).evaluate(theta);
}

Evaluation diffusion_stage_gql(const PathGrid& path, const CandidateModel& model, const Vector& theta1) {
    return QuasiLikelihood::diffusion_only(Observations::diffusion(path), model).evaluate(theta1);
}

Evaluation drift_stage_gql(const PathGrid& path, const CandidateModel& model, const Vector& theta1_fixed,
                           const Vector& theta2) {
    return QuasiLikelihood::drift_given(Observations::diffusion(path), model, theta1_fixed).evaluate(theta2);
}

Evaluation volatility_gql(const PathGrid& covariates, const PathGrid& response, const Vector& theta) {
    std::vector<BasisFunction> basis;
    for (int k = 0; k < covariates.dim(); ++k) basis.push_back(BasisFunction{BasisKind::Identity, k});
    auto model = CandidateModel::volatility(
        "covariates", CoefficientSpec::exp_linear(std::move(basis),
                                                  ParamBlock::default_box("theta", covariates.dim(), RateExponent::SqrtN)));
    return volatility_gql(Observations::regression(covariates, response), model, theta);
}

Evaluation volatility_gql(const Observations& obs, const CandidateModel& model, const Vector& theta) {
    return QuasiLikelihood::diffusion_only(obs, model).evaluate(theta);
}

}  // namespace qbic
