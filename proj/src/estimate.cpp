#include "qbic/estimate.hpp"

#include "qbic/rng.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace qbic {

void OptimizerConfig::validate() const {
    if (restarts < 1) throw SpecificationError("optimizer restarts must be >= 1");
    if (!(grad_tol > 0.0)) throw SpecificationError("optimizer grad_tol must be > 0");
    if (max_iters < 1) throw SpecificationError("optimizer max_iters must be >= 1");
    if (init_halfwidth && !(*init_halfwidth > 0.0)) throw SpecificationError("init_halfwidth must be > 0");
}

std::string to_string(FitStrategy s) { return s == FitStrategy::Joint ? "JOINT" : "TWO_STEP"; }

int FitResult::block_offset(std::size_t k) const {
    if (k >= blocks.size()) throw SpecificationError("block index out of range");
    int off = 0;
    for (std::size_t i = 0; i < k; ++i) off += blocks[i].dim();
    return off;
}

Vector FitResult::block_value(std::size_t k) const { return theta_hat.segment(block_offset(k), blocks[k].dim()); }

Matrix FitResult::block_neg_hessian(std::size_t k) const {
    const int off = block_offset(k);
    const int d = blocks[k].dim();
    return neg_hessian.block(off, off, d, d);
}

double FitResult::log_box_volume() const {
    double v = 0.0;
    for (const auto& b : blocks) v += b.log_volume();
    return v;
}

namespace {

Vector concat_lower(const std::vector<ParamBlock>& blocks) {
    int d = 0;
    for (const auto& b : blocks) d += b.dim();
    Vector out(d);
    int off = 0;
    for (const auto& b : blocks) {
        out.segment(off, b.dim()) = b.lower;
        off += b.dim();
    }
    return out;
}

Vector concat_upper(const std::vector<ParamBlock>& blocks) {
    int d = 0;
    for (const auto& b : blocks) d += b.dim();
    Vector out(d);
    int off = 0;
    for (const auto& b : blocks) {
        out.segment(off, b.dim()) = b.upper;
        off += b.dim();
    }
    return out;
}

FitResult multistart(const Objective& f, const std::vector<ParamBlock>& blocks, const OptimizerConfig& cfg,
                     std::size_t n, double h) {
    cfg.validate();
    const Vector lo = concat_lower(blocks);
    const Vector hi = concat_upper(blocks);
    const Eigen::Index d = lo.size();
    if (d != f.dim) throw SpecificationError("objective dimension does not match the parameter box");

    Vector start_lo = lo, start_hi = hi;
    if (cfg.init_halfwidth) {
        const Vector mid = 0.5 * (lo + hi);
        start_lo = (mid.array() - *cfg.init_halfwidth).matrix().cwiseMax(lo);
        start_hi = (mid.array() + *cfg.init_halfwidth).matrix().cwiseMin(hi);
    }

    LocalOptions opt;
    opt.grad_tol = cfg.grad_tol;
    opt.value_scale = static_cast<double>(std::max<std::size_t>(n, 1));
    opt.max_iters = cfg.max_iters;

    Engine eng = make_engine(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    FitResult out;
    out.blocks = blocks;
    out.n = n;
    out.h = h;
    std::optional<LocalResult> best;
    const double ninf = -std::numeric_limits<double>::infinity();

    for (int r = 0; r < cfg.restarts; ++r) {
        Vector start(d);
        for (Eigen::Index i = 0; i < d; ++i) start[i] = start_lo[i] + unif(eng) * (start_hi[i] - start_lo[i]);
        LocalResult lr;
        try {
            lr = maximize_in_box(f, lo, hi, start, opt);
        } catch (const EvaluationError&) {
            out.restart_values.push_back(ninf);
            ++out.evals;
            continue;
        }
        out.evals += lr.evals;
        out.restart_values.push_back(lr.eval.value);
        if (!best) {
            best = std::move(lr);
            continue;
        }
        // Prefer a converged optimum over a marginally higher non-converged one.
        const double slack = 1e-9 * (1.0 + std::abs(best->eval.value));
        const bool higher = lr.eval.value > best->eval.value + slack;
        const bool tie = std::abs(lr.eval.value - best->eval.value) <= slack;
        if (higher || (tie && lr.converged && !best->converged) ||
            (tie && lr.converged == best->converged && lr.eval.value > best->eval.value)) {
            best = std::move(lr);
        }
    }

    if (!best) {
        out.theta_hat = 0.5 * (lo + hi);
        out.value = ninf;
        out.neg_hessian = Matrix::Zero(d, d);
        out.grad_norm = std::numeric_limits<double>::infinity();
        throw NonConvergence("quasi-likelihood could not be evaluated from any start", out);
    }
    out.theta_hat = best->theta;
    out.value = best->eval.value;
    out.neg_hessian = -best->eval.hessian;
    out.grad_norm = best->grad_norm;
    out.tolerance = best->tolerance;
    out.converged = best->converged;
    if (!out.converged) {
        throw NonConvergence(best->interior ? "no restart reached the gradient tolerance"
                                            : "best optimum lies on the parameter-box boundary",
                             out);
    }
    return out;
}

Objective objective_of(std::shared_ptr<const QuasiLikelihood> q) {
    Objective f;
    f.dim = q->dim();
    f.value = [q](const Vector& t) { return q->value(t); };
    f.evaluate = [q](const Vector& t) { return q->evaluate(t); };
    return f;
}

}  // namespace

FitResult qmle(const Objective& f, const ParamBlock& box, const OptimizerConfig& cfg, std::size_t n, double h) {
    box.validate();
    return multistart(f, {box}, cfg, n, h);
}

FitResult qmle_joint(const Observations& obs, const CandidateModel& model, const OptimizerConfig& cfg) {
    auto q = std::make_shared<const QuasiLikelihood>(QuasiLikelihood::joint(obs, model));
    FitResult fit = [&] {
        try {
            return multistart(objective_of(q), model.blocks(), cfg, obs.n(), obs.h());
        } catch (NonConvergence& e) {
            FitResult best = e.best_effort();
            best.model_id = model.id;
            best.kind = model.kind;
            throw NonConvergence("model '" + model.id + "': " + e.what(), std::move(best));
        }
    }();
    fit.model_id = model.id;
    fit.kind = model.kind;
    fit.strategy = FitStrategy::Joint;
    fit.stage = FitStage::Full;
    return fit;
}

FitResult qmle_joint(const PathGrid& path, const CandidateModel& model, const OptimizerConfig& cfg) {
    return qmle_joint(Observations::diffusion(path), model, cfg);
}

FitResult fit_diffusion_stage(const Observations& obs, const CandidateModel& model, const OptimizerConfig& cfg) {
    auto q = std::make_shared<const QuasiLikelihood>(QuasiLikelihood::diffusion_only(obs, model));
    auto tag = [&](FitResult& f) {
        f.model_id = model.id;
        f.kind = model.kind;
        f.strategy = FitStrategy::TwoStep;
        f.stage = FitStage::DiffusionOnly;
    };
    try {
        FitResult fit = multistart(objective_of(q), {model.diffusion.block}, cfg, obs.n(), obs.h());
        tag(fit);
        return fit;
    } catch (NonConvergence& e) {
        FitResult best = e.best_effort();
        tag(best);
        throw NonConvergence("model '" + model.id + "' diffusion stage: " + e.what(), std::move(best));
    }
}

namespace {

/// Weighted least squares for a LINEAR drift; empty when the normal equations are singular.
std::optional<Vector> drift_normal_equations(const Observations& obs, const CandidateModel& model,
                                             const Vector& theta1) {
    const auto& basis = model.drift->basis;
    const auto p = static_cast<Eigen::Index>(basis.size());
    Matrix m = Matrix::Zero(p, p);
    Vector v = Vector::Zero(p);
    Vector a(p);
    for (std::size_t j = 0; j < obs.n(); ++j) {
        const State x = obs.state.at(j);
        const double w = 1.0 / eval_diffusion(model, x, theta1);
        for (Eigen::Index k = 0; k < p; ++k) a[k] = basis[static_cast<std::size_t>(k)](x);
        m.noalias() += (obs.h() * w) * (a * a.transpose());
        v += (w * obs.increments[static_cast<Eigen::Index>(j)]) * a;
    }
    Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Vector piv = ldlt.vectorD().cwiseAbs();
    if (!(piv.minCoeff() > 1e-12 * std::max(1.0, piv.maxCoeff()))) return std::nullopt;
    Vector sol = ldlt.solve(v);
    if (!sol.allFinite()) return std::nullopt;
    return sol;
}

}  // namespace

FitResult fit_drift_stage(const Observations& obs, const CandidateModel& model, const Vector& theta1,
                          const OptimizerConfig& cfg) {
    if (!model.drift) throw UnsupportedOperation("model '" + model.id + "' has no drift block");
    auto q = std::make_shared<const QuasiLikelihood>(QuasiLikelihood::drift_given(obs, model, theta1));
    auto tag = [&](FitResult& f) {
        f.model_id = model.id;
        f.kind = model.kind;
        f.strategy = FitStrategy::TwoStep;
        f.stage = FitStage::DriftGivenDiffusion;
    };
    const ParamBlock& box = model.drift->block;

    if (model.drift->form == CoefficientForm::Linear) {
        if (auto sol = drift_normal_equations(obs, model, theta1)) {
            const bool interior = ((*sol - box.lower).array() > 1e-8).all() && ((box.upper - *sol).array() > 1e-8).all();
            if (interior) {
                const Evaluation e = q->evaluate(*sol);
                FitResult fit;
                tag(fit);
                fit.blocks = {box};
                fit.theta_hat = *sol;
                fit.value = e.value;
                fit.neg_hessian = -e.hessian;
                fit.grad_norm = e.gradient.cwiseAbs().maxCoeff();
                fit.tolerance = cfg.grad_tol * (1.0 + std::abs(e.value) / static_cast<double>(std::max<std::size_t>(obs.n(), 1)));
                fit.converged = true;
                fit.evals = 1;
                fit.restart_values = {e.value};
                fit.n = obs.n();
                fit.h = obs.h();
                return fit;
            }
        }
    }
    try {
        FitResult fit = multistart(objective_of(q), {box}, cfg, obs.n(), obs.h());
        tag(fit);
        return fit;
    } catch (NonConvergence& e) {
        FitResult best = e.best_effort();
        tag(best);
        throw NonConvergence("model '" + model.id + "' drift stage: " + e.what(), std::move(best));
    }
}

FitResult qmle_two_step(const Observations& obs, const CandidateModel& model, const OptimizerConfig& cfg) {
    if (!model.drift) throw SpecificationError("two-step estimation requires both a diffusion and a drift block");
    const FitResult s1 = fit_diffusion_stage(obs, model, cfg);
    const FitResult s2 = fit_drift_stage(obs, model, s1.theta_hat, cfg);

    FitResult fit;
    fit.model_id = model.id;
    fit.kind = model.kind;
    fit.strategy = FitStrategy::TwoStep;
    fit.stage = FitStage::Full;
    fit.blocks = model.blocks();
    fit.theta_hat.resize(model.dim());
    fit.theta_hat << s1.theta_hat, s2.theta_hat;
    const Evaluation e = QuasiLikelihood::joint(obs, model).evaluate(fit.theta_hat);
    fit.value = e.value;
    fit.neg_hessian = -e.hessian;
    fit.grad_norm = std::max(s1.grad_norm, s2.grad_norm);
    fit.tolerance = std::max(s1.tolerance, s2.tolerance);
    fit.converged = s1.converged && s2.converged;
    fit.evals = s1.evals + s2.evals + 1;
    fit.restart_values = {e.value};
    fit.n = obs.n();
    fit.h = obs.h();
    return fit;
}

FitResult qmle_two_step(const PathGrid& path, const CandidateModel& model, const OptimizerConfig& cfg) {
    return qmle_two_step(Observations::diffusion(path), model, cfg);
}

}  // namespace qbic
