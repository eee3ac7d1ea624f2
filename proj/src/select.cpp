#include "qbic/select.hpp"

#include "qbic/parallel.hpp"

namespace qbic {

std::string DecomposedFamily::pair_id(const std::string& diffusion, const std::string& drift) {
    return diffusion + "/" + drift;
}

void DecomposedFamily::validate() const {
    if (kind != FamilyKind::ErgodicDiffusion) throw SpecificationError("decomposed families are ergodic diffusions");
    if (diffusions.empty() || drifts.empty()) throw SpecificationError("decomposed family needs M1 >= 1 and M2 >= 1");
    if (diffusion_ids.size() != diffusions.size() || drift_ids.size() != drifts.size()) {
        throw SpecificationError("decomposed family: id and spec counts differ");
    }
}

CandidateModel DecomposedFamily::model(std::size_t i, std::size_t j) const {
    if (i >= diffusions.size() || j >= drifts.size()) throw SpecificationError("decomposed family index out of range");
    return CandidateModel::ergodic(pair_id(diffusion_ids[i], drift_ids[j]), diffusions[i], drifts[j]);
}

std::vector<CandidateModel> DecomposedFamily::expand() const {
    validate();
    std::vector<CandidateModel> out;
    for (std::size_t i = 0; i < m1(); ++i) {
        for (std::size_t j = 0; j < m2(); ++j) out.push_back(model(i, j));
    }
    return out;
}

namespace {

template <class FitFn>
std::vector<FitResult> fit_all(std::size_t count, int workers, FitFn&& fit) {
    std::vector<FitResult> fits(count);
    parallel_for(count, workers, [&](std::size_t i) {
        try {
            fits[i] = fit(i);
        } catch (const NonConvergence& e) {
            fits[i] = e.best_effort();
            fits[i].converged = false;
        }
    });
    return fits;
}

CriterionReport report_of(const std::vector<FitResult>& fits, FitStrategy strategy) {
    std::vector<CandidateScores> rows;
    for (const auto& f : fits) rows.push_back(score(f));
    return make_report(std::move(rows), strategy);
}

std::string pick(const CriterionReport& rep, Criterion c, const char* what) {
    try {
        return rep.chosen(c);
    } catch (const SelectionError&) {
        throw SelectionError(std::string("every candidate failed to converge in ") + what);
    }
}

}  // namespace

SelectionOutcome joint_select(const Observations& obs, std::span<const CandidateModel> family, Criterion criterion,
                              const OptimizerConfig& cfg, int workers) {
    if (family.empty()) throw SelectionError("candidate family is empty");
    SelectionOutcome out;
    out.strategy = FitStrategy::Joint;
    out.criterion = criterion;
    out.fits = fit_all(family.size(), workers, [&](std::size_t i) {
        FitResult f = qmle_joint(obs, family[i], cfg);
        return f;
    });
    for (std::size_t i = 0; i < family.size(); ++i) {
        out.fits[i].model_id = family[i].id;
        if (out.fits[i].blocks.empty()) out.fits[i].blocks = family[i].blocks();
    }
    out.fit_count = family.size();
    out.report = report_of(out.fits, FitStrategy::Joint);
    out.chosen = pick(out.report, criterion, "joint selection");
    return out;
}

SelectionOutcome joint_select(const PathGrid& path, std::span<const CandidateModel> family, Criterion criterion,
                              const OptimizerConfig& cfg, int workers) {
    return joint_select(Observations::diffusion(path), family, criterion, cfg, workers);
}

SelectionOutcome joint_select(const Observations& obs, const DecomposedFamily& family, Criterion criterion,
                              const OptimizerConfig& cfg, int workers) {
    const auto models = family.expand();
    SelectionOutcome out = joint_select(obs, models, criterion, cfg, workers);
    for (std::size_t k = 0; k < models.size(); ++k) {
        if (models[k].id == out.chosen) out.chosen_pair = std::make_pair(k / family.m2(), k % family.m2());
    }
    return out;
}

SelectionOutcome two_step_select(const Observations& obs, const DecomposedFamily& family, Criterion criterion,
                                 const OptimizerConfig& cfg, int workers) {
    family.validate();
    SelectionOutcome out;
    out.strategy = FitStrategy::TwoStep;
    out.criterion = criterion;

    std::vector<FitResult> stage1 = fit_all(family.m1(), workers, [&](std::size_t i) {
        return fit_diffusion_stage(obs, family.model(i, 0), cfg);
    });
    for (std::size_t i = 0; i < family.m1(); ++i) {
        stage1[i].model_id = family.diffusion_ids[i];
        stage1[i].stage = FitStage::DiffusionOnly;
        if (stage1[i].blocks.empty()) stage1[i].blocks = {family.diffusions[i].block};
    }
    out.stage1_report = report_of(stage1, FitStrategy::TwoStep);
    const std::string d_id = pick(*out.stage1_report, criterion, "diffusion stage");
    out.stage1_chosen = d_id;
    std::size_t i_star = 0;
    while (family.diffusion_ids[i_star] != d_id) ++i_star;
    const Vector theta1 = stage1[i_star].theta_hat;

    out.fits = fit_all(family.m2(), workers, [&](std::size_t j) {
        return fit_drift_stage(obs, family.model(i_star, j), theta1, cfg);
    });
    for (std::size_t j = 0; j < family.m2(); ++j) {
        out.fits[j].model_id = DecomposedFamily::pair_id(d_id, family.drift_ids[j]);
        out.fits[j].stage = FitStage::DriftGivenDiffusion;
        if (out.fits[j].blocks.empty()) out.fits[j].blocks = {family.drifts[j].block};
    }
    out.fit_count = family.m1() + family.m2();
    out.report = report_of(out.fits, FitStrategy::TwoStep);
    out.chosen = pick(out.report, criterion, "drift stage");
    for (std::size_t j = 0; j < family.m2(); ++j) {
        if (out.fits[j].model_id == out.chosen) out.chosen_pair = std::make_pair(i_star, j);
    }
    return out;
}

SelectionOutcome two_step_select(const PathGrid& path, const DecomposedFamily& family, Criterion criterion,
                                 const OptimizerConfig& cfg, int workers) {
    return two_step_select(Observations::diffusion(path), family, criterion, cfg, workers);
}

}  // namespace qbic
