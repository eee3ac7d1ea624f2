#include "qbic/scenarios.hpp"

#include "qbic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace qbic {

namespace {

constexpr const char* kScenarioNames[] = {"ERGODIC_61", "VOLA_TRIG_621", "VOLA_CIRCLE_622", "VOLA_RATIONAL",
                                          "NONERGODIC_63", "CUSTOM"};

// Index subsets in the order used by every three-function family.
const std::vector<std::vector<int>> kSubsets3 = {{0, 1, 2}, {0, 1}, {0, 2}, {1, 2}, {0}, {1}, {2}};
const std::vector<std::vector<int>> kSubsets2 = {{0, 1}, {0}, {1}};

CoefficientSpec subset_spec(CoefficientForm form, const std::vector<BasisFunction>& basis, const Vector& center,
                            const std::vector<int>& idx, double halfwidth, const std::string& block,
                            RateExponent rate) {
    std::vector<BasisFunction> b;
    Vector c(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        b.push_back(basis[static_cast<std::size_t>(idx[k])]);
        c[static_cast<Eigen::Index>(k)] = center[idx[k]];
    }
    auto box = ParamBlock::around(block, c, halfwidth, rate);
    return form == CoefficientForm::ExpLinear ? CoefficientSpec::exp_linear(std::move(b), std::move(box))
                                              : CoefficientSpec::linear(std::move(b), std::move(box));
}

PathGrid regression_data(CovariateKind kind, const Vector& theta0, double level, std::size_t n, std::uint64_t seed,
                         int substeps) {
    SimScheme sch;
    sch.n = n;
    sch.h_rule = StepRule::FixedHorizon;
    sch.horizon = 1.0;
    sch.substeps = substeps;
    sch.seed = seed;
    const auto s = simulate_volatility_regression(kind, theta0, sch, level);
    RowMatrix v(s.covariates.values().rows(), s.covariates.dim() + 1);
    v.leftCols(s.covariates.dim()) = s.covariates.values();
    v.rightCols(1) = s.response.values();
    return PathGrid(s.covariates.h(), std::move(v));
}

ScenarioSpec volatility_scenario(Scenario sc, std::string name, CovariateKind kind, double level, double halfwidth) {
    const Vector theta0 = Eigen::Vector3d(0.0, -2.0, 3.0);
    ScenarioSpec spec;
    spec.scenario = sc;
    spec.name = std::move(name);
    spec.kind = FamilyKind::VolatilityRegression;
    spec.family = subset_family({BasisFunction{BasisKind::Identity, 0}, BasisFunction{BasisKind::Identity, 1},
                                 BasisFunction{BasisKind::Identity, 2}},
                                theta0, halfwidth);
    spec.true_model_id = "M4";
    spec.theta_true = Eigen::Vector2d(-2.0, 3.0);
    spec.supermodel_ids = supermodels_of(spec.family, spec.true_model_id);
    spec.has_response = true;
    spec.simulate = [kind, theta0, level](std::size_t n, std::uint64_t seed, int substeps) {
        return regression_data(kind, theta0, level, n, seed, substeps);
    };
    return spec;
}

ScenarioSpec ergodic_scenario(double halfwidth) {
    const std::vector<BasisFunction> dbasis = {BasisFunction{BasisKind::Cos, 0}, BasisFunction{BasisKind::Sin, 0},
                                               BasisFunction{BasisKind::One, 0}};
    const std::vector<BasisFunction> abasis = {BasisFunction{BasisKind::Identity, 0}, BasisFunction{BasisKind::One, 0}};
    const Vector dcenter = Eigen::Vector3d(-2.0, 0.0, 1.0);
    const Vector acenter = Eigen::Vector2d(-1.0, 0.0);

    DecomposedFamily fam;
    fam.kind = FamilyKind::ErgodicDiffusion;
    for (std::size_t i = 0; i < kSubsets3.size(); ++i) {
        fam.diffusion_ids.push_back("Diff" + std::to_string(i + 1));
        fam.diffusions.push_back(subset_spec(CoefficientForm::ExpLinear, dbasis, dcenter, kSubsets3[i], halfwidth,
                                             "diffusion", RateExponent::SqrtN));
    }
    for (std::size_t j = 0; j < kSubsets2.size(); ++j) {
        fam.drift_ids.push_back("Drif" + std::to_string(j + 1));
        fam.drifts.push_back(subset_spec(CoefficientForm::Linear, abasis, acenter, kSubsets2[j], halfwidth, "drift",
                                         RateExponent::SqrtNH));
    }

    ScenarioSpec spec;
    spec.scenario = Scenario::Ergodic61;
    spec.name = "ERGODIC_61";
    spec.kind = FamilyKind::ErgodicDiffusion;
    spec.family = fam.expand();
    spec.decomposed = fam;
    spec.true_model_id = DecomposedFamily::pair_id("Diff3", "Drif2");
    spec.theta_true = Eigen::Vector3d(-2.0, 1.0, -1.0);
    spec.supermodel_ids = supermodels_of(spec.family, spec.true_model_id);
    spec.simulate = [](std::size_t n, std::uint64_t seed, int substeps) {
        SdeSpec sde{1, 1, [](double, State x, Eigen::Ref<Vector> a) { a[0] = -x[0]; },
                    [](double, State x, Eigen::Ref<Matrix> b) {
                        b(0, 0) = std::exp(0.5 * (-2.0 * std::cos(x[0]) + 1.0));
                    }};
        SimScheme sch;
        sch.n = n;
        sch.h_rule = StepRule::Ergodic;
        sch.substeps = substeps;
        sch.seed = seed;
        return euler_maruyama(sde, Vector::Ones(1), sch);
    };
    return spec;
}

ScenarioSpec nonergodic_scenario(double halfwidth) {
    const Vector theta0 = Eigen::Vector3d(5.0, 2.0, 0.0);
    ScenarioSpec spec;
    spec.scenario = Scenario::Nonergodic63;
    spec.name = "NONERGODIC_63";
    spec.kind = FamilyKind::VolatilityRegression;
    spec.family = subset_family({BasisFunction{BasisKind::InvOnePlusSq, 0}, BasisFunction{BasisKind::XOverOnePlusSq, 0},
                                 BasisFunction{BasisKind::SqOverOnePlusSq, 0}},
                                theta0, halfwidth);
    spec.true_model_id = "M2";
    spec.theta_true = Eigen::Vector2d(5.0, 2.0);
    spec.supermodel_ids = supermodels_of(spec.family, spec.true_model_id);
    spec.simulate = [](std::size_t n, std::uint64_t seed, int substeps) {
        SdeSpec sde{1, 1, [](double, State, Eigen::Ref<Vector> a) { a[0] = 0.0; },
                    [](double, State x, Eigen::Ref<Matrix> b) {
                        const double v = x[0];
                        b(0, 0) = std::exp((5.0 + 2.0 * v) / (2.0 * (1.0 + v * v)));
                    }};
        SimScheme sch;
        sch.n = n;
        sch.h_rule = StepRule::FixedHorizon;
        sch.horizon = 1.0;
        sch.substeps = substeps;
        sch.seed = seed;
        return euler_maruyama(sde, Vector::Zero(1), sch);
    };
    return spec;
}

bool basis_subset(const CoefficientSpec& a, const CoefficientSpec& b) {
    if (!a.has_basis() || !b.has_basis() || a.form != b.form) return false;
    return std::all_of(a.basis.begin(), a.basis.end(), [&](const BasisFunction& f) {
        return std::find(b.basis.begin(), b.basis.end(), f) != b.basis.end();
    });
}

}  // namespace

Observations observations_from(const PathGrid& data, bool has_response) {
    if (!has_response) return Observations::diffusion(data);
    if (data.dim() < 2) throw SpecificationError("regression data needs covariate columns and a response column");
    const int d = data.dim() - 1;
    return Observations::regression(PathGrid(data.h(), data.values().leftCols(d)),
                                    PathGrid(data.h(), data.values().rightCols(1)));
}

std::string to_string(Scenario s) { return kScenarioNames[static_cast<int>(s)]; }

Scenario parse_scenario(std::string_view s) {
    for (int i = 0; i < 6; ++i) {
        if (s == kScenarioNames[i]) return static_cast<Scenario>(i);
    }
    throw SpecificationError("unknown scenario '" + std::string(s) + "'");
}

std::size_t ScenarioSpec::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (family[i].id == id) return i;
    }
    throw SpecificationError("scenario '" + name + "' has no candidate '" + id + "'");
}

std::vector<CandidateModel> subset_family(const std::vector<BasisFunction>& basis, const Vector& center,
                                          double halfwidth) {
    if (basis.size() != 3 || center.size() != 3) throw SpecificationError("subset family needs three basis functions");
    std::vector<CandidateModel> out;
    for (std::size_t m = 0; m < kSubsets3.size(); ++m) {
        out.push_back(CandidateModel::volatility(
            "M" + std::to_string(m + 1),
            subset_spec(CoefficientForm::ExpLinear, basis, center, kSubsets3[m], halfwidth, "theta", RateExponent::SqrtN)));
    }
    return out;
}

std::vector<std::string> supermodels_of(const std::vector<CandidateModel>& family, const std::string& truth) {
    const CandidateModel* t = nullptr;
    for (const auto& m : family) {
        if (m.id == truth) t = &m;
    }
    if (!t) throw SpecificationError("no candidate '" + truth + "' in family");
    std::vector<std::string> out;
    for (const auto& m : family) {
        if (m.id == truth || m.dim() <= t->dim() || m.kind != t->kind) continue;
        if (!basis_subset(t->diffusion, m.diffusion)) continue;
        if (t->drift.has_value() != m.drift.has_value()) continue;
        if (t->drift && !basis_subset(*t->drift, *m.drift)) continue;
        out.push_back(m.id);
    }
    return out;
}

ScenarioSpec make_scenario(Scenario s, double level, double box_halfwidth) {
    if (!(box_halfwidth > 0.0)) throw SpecificationError("box half-width must be > 0");
    switch (s) {
        case Scenario::Ergodic61: return ergodic_scenario(box_halfwidth);
        case Scenario::VolaTrig621:
            return volatility_scenario(s, "VOLA_TRIG_621", CovariateKind::TrigDeterministic, 1.0, box_halfwidth);
        case Scenario::VolaCircle622: {
            char tag[32];
            std::snprintf(tag, sizeof tag, "VOLA_CIRCLE_622_a%g", level);
            return volatility_scenario(s, tag, CovariateKind::WienerCircle, level, box_halfwidth);
        }
        case Scenario::VolaRational:
            return volatility_scenario(s, "VOLA_RATIONAL", CovariateKind::RationalWiener, 1.0, box_halfwidth);
        case Scenario::Nonergodic63: return nonergodic_scenario(box_halfwidth);
        case Scenario::Custom: break;
    }
    throw SpecificationError("CUSTOM scenarios are built from a configuration, not by name");
}

}  // namespace qbic
