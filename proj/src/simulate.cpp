#include "qbic/simulate.hpp"

#include "qbic/errors.hpp"
#include "qbic/rng.hpp"

#include <cmath>
#include <numbers>

namespace qbic {

double SimScheme::step() const {
    if (h_rule == StepRule::Ergodic) return std::pow(static_cast<double>(n), -2.0 / 3.0);
    return horizon / static_cast<double>(n);
}

void SimScheme::validate() const {
    if (n < 1) throw SpecificationError("simulation requires n >= 1");
    if (substeps < 1) throw SpecificationError("simulation requires substeps >= 1");
    if (h_rule == StepRule::FixedHorizon && !(horizon > 0.0)) {
        throw SpecificationError("fixed-horizon simulation requires T > 0");
    }
}

PathGrid euler_maruyama(const SdeSpec& sde, const Vector& x0, const SimScheme& scheme) {
    scheme.validate();
    if (x0.size() != sde.dim) throw SpecificationError("initial state has wrong dimension");
    const double h = scheme.step();
    const double dt = h / scheme.substeps;
    const double sqdt = std::sqrt(dt);

    Engine eng = make_engine(scheme.seed);
    std::normal_distribution<double> normal;

    RowMatrix out(static_cast<Eigen::Index>(scheme.n) + 1, sde.dim);
    Vector x = x0;
    Vector a(sde.dim);
    Matrix b(sde.dim, sde.noise_dim);
    Vector dw(sde.noise_dim);
    out.row(0) = x.transpose();

    std::size_t fine = 0;
    for (std::size_t j = 1; j <= scheme.n; ++j) {
        for (int s = 0; s < scheme.substeps; ++s, ++fine) {
            const double t = static_cast<double>(fine) * dt;
            const State xs{x.data(), static_cast<std::size_t>(x.size())};
            sde.drift(t, xs, a);
            sde.diffusion(t, xs, b);
            for (int k = 0; k < sde.noise_dim; ++k) dw[k] = sqdt * normal(eng);
            x += a * dt + b * dw;
            if (!x.allFinite()) throw SimulationBlowup(fine + 1, "non-finite state");
            if (x.cwiseAbs().maxCoeff() > kBlowupBound) throw SimulationBlowup(fine + 1, "state exceeded blowup bound");
        }
        out.row(static_cast<Eigen::Index>(j)) = x.transpose();
    }
    return PathGrid(h, std::move(out));
}

std::string to_string(CovariateKind k) {
    switch (k) {
        case CovariateKind::TrigDeterministic: return "TRIG_DETERMINISTIC";
        case CovariateKind::WienerCircle: return "WIENER_CIRCLE";
        case CovariateKind::RationalWiener: return "RATIONAL_WIENER";
    }
    return "?";
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Covariate vector at fine time t given the simulated driver state.
Eigen::Vector3d trig_covariate(double t, double horizon) {
    return {1.0, std::cos(kTwoPi * t / horizon), std::sin(kTwoPi * t / horizon)};
}

Eigen::Vector3d rational_covariate(double b) {
    const double q = 1.0 + b * b;
    return {1.0, 1.0 / q, b / q};
}

double vol(const Eigen::Vector3d& x, const Vector& theta0) { return std::exp(0.5 * x.dot(theta0)); }

void require_theta(const Vector& theta0) {
    if (theta0.size() != 3) throw SpecificationError("volatility regression uses a 3-dimensional parameter");
}

}  // namespace

PathGrid covariate_path(CovariateKind kind, const SimScheme& scheme, double level) {
    scheme.validate();
    const double h = scheme.step();
    RowMatrix out(static_cast<Eigen::Index>(scheme.n) + 1, 3);

    switch (kind) {
        case CovariateKind::TrigDeterministic: {
            for (std::size_t j = 0; j <= scheme.n; ++j) {
                const double ang = kTwoPi * static_cast<double>(j) / static_cast<double>(scheme.n);
                out.row(static_cast<Eigen::Index>(j)) << 1.0, std::cos(ang), std::sin(ang);
            }
            return PathGrid(h, std::move(out));
        }
        case CovariateKind::WienerCircle: {
            SdeSpec sde{2, 1,
                        [](double, State x, Eigen::Ref<Vector> a) {
                            a[0] = -0.5 * x[0];
                            a[1] = -0.5 * x[1];
                        },
                        [](double, State x, Eigen::Ref<Matrix> b) {
                            b(0, 0) = -x[1];
                            b(1, 0) = x[0];
                        }};
            PathGrid xs = euler_maruyama(sde, Eigen::Vector2d(1.0, 0.0), scheme);
            out.col(0).setConstant(level);
            out.rightCols(2) = xs.values();
            return PathGrid(h, std::move(out));
        }
        case CovariateKind::RationalWiener: {
            SdeSpec sde{1, 1, [](double, State, Eigen::Ref<Vector> a) { a[0] = 0.0; },
                        [](double, State, Eigen::Ref<Matrix> b) { b(0, 0) = 1.0; }};
            PathGrid bs = euler_maruyama(sde, Vector::Zero(1), scheme);
            for (std::size_t j = 0; j <= scheme.n; ++j) {
                out.row(static_cast<Eigen::Index>(j)) = rational_covariate(bs(j, 0)).transpose();
            }
            return PathGrid(h, std::move(out));
        }
    }
    throw SpecificationError("unknown covariate kind");
}

RegressionSample simulate_volatility_regression(CovariateKind kind, const Vector& theta0, const SimScheme& scheme,
                                                double level) {
    require_theta(theta0);
    scheme.validate();
    const double h = scheme.step();
    const double horizon = h * static_cast<double>(scheme.n);
    const auto rows = static_cast<Eigen::Index>(scheme.n) + 1;
    RowMatrix cov(rows, 3);
    RowMatrix resp(rows, 1);

    switch (kind) {
        case CovariateKind::TrigDeterministic: {
            SdeSpec sde{1, 1, [](double, State, Eigen::Ref<Vector> a) { a[0] = 0.0; },
                        [&](double t, State, Eigen::Ref<Matrix> b) { b(0, 0) = vol(trig_covariate(t, horizon), theta0); }};
            PathGrid y = euler_maruyama(sde, Vector::Zero(1), scheme);
            cov = covariate_path(kind, scheme).values();
            resp = y.values();
            break;
        }
        case CovariateKind::WienerCircle: {
            // state (X2, X3, Y), noise (B, w)
            SdeSpec sde{3, 2,
                        [](double, State x, Eigen::Ref<Vector> a) {
                            a[0] = -0.5 * x[0];
                            a[1] = -0.5 * x[1];
                            a[2] = 0.0;
                        },
                        [&](double, State x, Eigen::Ref<Matrix> b) {
                            b.setZero();
                            b(0, 0) = -x[1];
                            b(1, 0) = x[0];
                            b(2, 1) = vol(Eigen::Vector3d(level, x[0], x[1]), theta0);
                        }};
            PathGrid z = euler_maruyama(sde, Eigen::Vector3d(1.0, 0.0, 0.0), scheme);
            cov.col(0).setConstant(level);
            cov.rightCols(2) = z.values().leftCols(2);
            resp = z.values().rightCols(1);
            break;
        }
        case CovariateKind::RationalWiener: {
            // state (B, Y), noise (B, w)
            SdeSpec sde{2, 2,
                        [](double, State, Eigen::Ref<Vector> a) { a.setZero(); },
                        [&](double, State x, Eigen::Ref<Matrix> b) {
                            b.setZero();
                            b(0, 0) = 1.0;
                            b(1, 1) = vol(rational_covariate(x[0]), theta0);
                        }};
            PathGrid z = euler_maruyama(sde, Vector::Zero(2), scheme);
            for (Eigen::Index j = 0; j < rows; ++j) cov.row(j) = rational_covariate(z.values()(j, 0)).transpose();
            resp = z.values().rightCols(1);
            break;
        }
    }
    return RegressionSample{PathGrid(h, std::move(cov)), PathGrid(h, std::move(resp))};
}

double gram_determinant(const PathGrid& path) {
    const auto& v = path.values();
    const Eigen::Index n = v.rows() - 1;
    Matrix left = v.topRows(n);
    Matrix gram = path.h() * (left.transpose() * left);
    return gram.determinant();
}

}  // namespace qbic
