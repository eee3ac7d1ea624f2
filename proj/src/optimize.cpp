#include "qbic/optimize.hpp"

#include "qbic/errors.hpp"

#include <cmath>
#include <limits>

namespace qbic {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

Vector project(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

double safe_value(const Objective& f, const Vector& x, int& evals) {
    ++evals;
    try {
        const double v = f.value(x);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const EvaluationError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

LocalResult maximize_in_box(const Objective& f, const Vector& lower, const Vector& upper, const Vector& start,
                            const LocalOptions& opt) {
    const int d = f.dim;
    if (lower.size() != d || upper.size() != d || start.size() != d) {
        throw SpecificationError("optimizer: bounds and start must match the objective dimension");
    }
    LocalResult res;
    res.theta = project(start, lower, upper);
    ++res.evals;
    res.eval = f.evaluate(res.theta);

    auto tolerance = [&](double fv) {
        return opt.value_scale > 0.0 ? opt.grad_tol * (1.0 + std::abs(fv) / opt.value_scale) : opt.grad_tol;
    };
    const double edge = 1e-12;
    std::vector<int> free;
    for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
        const Vector& g = res.eval.gradient;
        free.clear();
        double pg = 0.0;
        for (int i = 0; i < d; ++i) {
            const bool at_lo = res.theta[i] <= lower[i] + edge * (1.0 + std::abs(lower[i])) && g[i] < 0.0;
            const bool at_hi = res.theta[i] >= upper[i] - edge * (1.0 + std::abs(upper[i])) && g[i] > 0.0;
            if (at_lo || at_hi) continue;
            free.push_back(i);
            pg = std::max(pg, std::abs(g[i]));
        }
        res.grad_norm = pg;
        if (pg <= tolerance(res.eval.value) || free.empty()) break;

        const auto k = static_cast<Eigen::Index>(free.size());
        Matrix a(k, k);
        Vector gf(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            gf[r] = g[free[r]];
            for (Eigen::Index c = 0; c < k; ++c) a(r, c) = -res.eval.hessian(free[r], free[c]);
        }
        // Levenberg-Marquardt shift until -H_ff + lambda I is positive definite.
        const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
        double lambda = 0.0;
        Vector step;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Matrix shifted = a;
            shifted.diagonal().array() += lambda;
            Eigen::LLT<Matrix> llt(shifted);
            if (llt.info() == Eigen::Success) {
                step = llt.solve(gf);
                if (step.allFinite() && gf.dot(step) > 0.0) break;
            }
            step.resize(0);
            lambda = lambda == 0.0 ? 1e-8 * scale : 10.0 * lambda;
        }
        if (step.size() == 0) step = gf / scale;

        Vector dir = Vector::Zero(d);
        for (Eigen::Index r = 0; r < k; ++r) dir[free[r]] = step[r];

        const double f0 = res.eval.value;
        const double slack = 1e-13 * (1.0 + std::abs(f0));
        double alpha = 1.0;
        bool accepted = false;
        Vector trial;
        for (int ls = 0; ls < kMaxHalvings; ++ls, alpha *= 0.5) {
            trial = project(res.theta + alpha * dir, lower, upper);
            const double gain = g.dot(trial - res.theta);
            const double ft = safe_value(f, trial, res.evals);
            if (ft >= f0 + kArmijo * gain - slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if ((trial - res.theta).cwiseAbs().maxCoeff() == 0.0) break;
        res.theta = trial;
        ++res.evals;
        res.eval = f.evaluate(res.theta);
    }

    res.interior = ((res.theta - lower).array() > opt.interior_margin).all() &&
                   ((upper - res.theta).array() > opt.interior_margin).all();
    const double full = res.eval.gradient.size() ? res.eval.gradient.cwiseAbs().maxCoeff() : 0.0;
    if (res.interior) res.grad_norm = full;
    res.tolerance = tolerance(res.eval.value);
    res.converged = res.interior && res.grad_norm <= res.tolerance && std::isfinite(res.eval.value);
    return res;
}

}  // namespace qbic
