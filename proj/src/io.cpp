#include "qbic/io.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

namespace qbic {

using nlohmann::ordered_json;

namespace {

ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json vec(const Vector& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
    return a;
}

ordered_json mat(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
    return rows;
}

std::string stage_name(FitStage s) {
    switch (s) {
        case FitStage::Full: return "FULL";
        case FitStage::DiffusionOnly: return "DIFFUSION_ONLY";
        case FitStage::DriftGivenDiffusion: return "DRIFT_GIVEN_DIFFUSION";
    }
    return "?";
}

ordered_json scores(const CandidateScores& s) {
    ordered_json j;
    j["id"] = s.id;
    j["p1"] = s.p1;
    j["p2"] = s.p2;
    j["converged"] = s.converged;
    j["H"] = number(s.value);
    j["hessian_logdet"] = number(s.hessian_logdet);
    j["degenerate"] = s.degenerate;
    for (Criterion c : kAllCriteria) j[to_string(c)] = number(s.get(c));
    return j;
}

ordered_json fit_tree(const FitResult& fit) {
    ordered_json j;
    j["model_id"] = fit.model_id;
    j["family_kind"] = to_string(fit.kind);
    j["strategy"] = to_string(fit.strategy);
    j["stage"] = stage_name(fit.stage);
    j["n"] = fit.n;
    j["h"] = number(fit.h);
    j["theta_hat"] = vec(fit.theta_hat);
    ordered_json blocks = ordered_json::array();
    for (std::size_t k = 0; k < fit.blocks.size(); ++k) {
        const auto& b = fit.blocks[k];
        blocks.push_back({{"name", b.name},
                          {"rate", to_string(b.rate)},
                          {"offset", fit.block_offset(k)},
                          {"lower", vec(b.lower)},
                          {"upper", vec(b.upper)}});
    }
    j["blocks"] = blocks;
    j["H"] = number(fit.value);
    j["neg_hessian"] = mat(fit.neg_hessian);
    j["grad_norm"] = number(fit.grad_norm);
    j["tolerance"] = number(fit.tolerance);
    j["converged"] = fit.converged;
    j["evals"] = fit.evals;
    ordered_json rv = ordered_json::array();
    for (double v : fit.restart_values) rv.push_back(number(v));
    j["restart_values"] = rv;
    if (fit.dim() > 0 && fit.neg_hessian.rows() == fit.dim()) j["criteria"] = scores(score(fit));
    return j;
}

ordered_json report_tree(const CriterionReport& r) {
    ordered_json j;
    j["strategy"] = to_string(r.strategy);
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        ordered_json row = scores(r.rows[i]);
        if (static_cast<Eigen::Index>(i) < r.posterior_weights.size()) row["posterior"] = number(r.posterior_weights[static_cast<Eigen::Index>(i)]);
        rows.push_back(row);
    }
    j["rows"] = rows;
    ordered_json sel;
    for (const auto& [c, id] : r.selected) sel[to_string(c)] = id;
    j["selected"] = sel;
    return j;
}

}  // namespace

std::string fit_json(const FitResult& fit) { return fit_tree(fit).dump(2) + "\n"; }

std::string report_json(const CriterionReport& report) { return report_tree(report).dump(2) + "\n"; }

std::string selection_json(const SelectionOutcome& o) {
    ordered_json j;
    j["strategy"] = to_string(o.strategy);
    j["criterion"] = to_string(o.criterion);
    j["chosen"] = o.chosen;
    if (o.chosen_pair) j["chosen_pair"] = {o.chosen_pair->first, o.chosen_pair->second};
    if (o.stage1_chosen) j["stage1_chosen"] = *o.stage1_chosen;
    if (o.stage1_report) j["stage1_report"] = report_tree(*o.stage1_report);
    j["report"] = report_tree(o.report);
    j["fit_count"] = o.fit_count;
    ordered_json fits = ordered_json::array();
    for (const auto& f : o.fits) fits.push_back(fit_tree(f));
    j["fits"] = fits;
    return j.dump(2) + "\n";
}

std::string RunManifest::to_json() const {
    ordered_json j;
    j["command"] = command;
    j["status"] = status;
    j["partial"] = partial;
    j["master_seed"] = master_seed;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["wall_seconds"] = number(wall_seconds);
    j["blowups"] = blowups;
    j["non_convergences"] = non_convergences;
    j["excluded"] = excluded;
    j["outputs"] = outputs;
    // Echo the config as a tree when it parses, as text otherwise.
    ordered_json cfg = ordered_json::parse(config_echo, nullptr, false);
    j["config"] = cfg.is_discarded() ? ordered_json(config_echo) : cfg;
    return j.dump(2) + "\n";
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace qbic
