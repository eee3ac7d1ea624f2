#include "qbic/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace qbic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double rate_value(RateExponent r, std::size_t n, double h) {
    const double nn = static_cast<double>(n);
    return r == RateExponent::SqrtN ? 1.0 / std::sqrt(nn) : 1.0 / std::sqrt(nn * h);
}

}  // namespace

RateSpec RateSpec::of(const FitResult& fit) {
    RateSpec r;
    r.n = fit.n;
    r.h = fit.h;
    for (const auto& b : fit.blocks) {
        const RateExponent e = fit.kind == FamilyKind::VolatilityRegression ? RateExponent::SqrtN : b.rate;
        r.dims.push_back(b.dim());
        r.a.push_back(rate_value(e, fit.n, fit.h));
    }
    return r;
}

double RateSpec::log_penalty() const {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += dims[k] * -2.0 * std::log(a[k]);
    return s;
}

PriorSpec PriorSpec::uniform(const FitResult& fit, double model_weight) {
    std::vector<ParamBlock> blocks = fit.blocks;
    const double log_v = fit.log_box_volume();
    PriorSpec p;
    p.model_weight = model_weight;
    p.log_density = [blocks, log_v](const Vector& theta) {
        int off = 0;
        for (const auto& b : blocks) {
            const Vector t = theta.segment(off, b.dim());
            if ((t.array() < b.lower.array()).any() || (t.array() > b.upper.array()).any()) return -kInf;
            off += b.dim();
        }
        return -log_v;
    };
    return p;
}

LogDet log_det_spd(const Matrix& m) {
    LogDet out;
    if (m.rows() == 0) return out;
    const double scale = m.diagonal().cwiseAbs().mean();
    if (!(scale > 0.0) || !m.allFinite()) {
        out.degenerate = true;
        out.value = -kInf;
        return out;
    }
    Eigen::LDLT<Matrix> ldlt(m);
    const Vector d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > 1e-10 * scale)) {
            out.degenerate = true;
            out.value = -kInf;
            return out;
        }
        out.value += std::log(d[i]);
    }
    return out;
}

QbicTerms qbic_terms(const FitResult& fit) {
    QbicTerms t;
    if (!fit.converged) {
        t.value = kInf;
        return t;
    }
    const LogDet ld = log_det_spd(fit.neg_hessian);
    if (ld.degenerate) {
        t.used_fallback = true;
        t.log_det = RateSpec::of(fit).log_penalty();
    } else {
        t.log_det = ld.value;
    }
    t.value = -2.0 * fit.value + t.log_det;
    return t;
}

double qbic(const FitResult& fit) { return qbic_terms(fit).value; }

double qbic_sharp(const FitResult& fit, const PriorSpec& prior) {
    if (!fit.converged) return kInf;
    const double lp = prior.log_density(fit.theta_hat);
    if (!std::isfinite(lp)) throw CriterionError("prior density vanishes at the estimate of '" + fit.model_id + "'");
    return qbic(fit) - 2.0 * lp - fit.dim() * kLog2Pi;
}

double qbic_sharp(const FitResult& fit) { return qbic_sharp(fit, PriorSpec::uniform(fit)); }

double bic(const FitResult& fit, const RateSpec& rates) {
    if (!fit.converged) return kInf;
    return -2.0 * fit.value + rates.log_penalty();
}

double bic(const FitResult& fit) { return bic(fit, RateSpec::of(fit)); }

double faic(const FitResult& fit) {
    if (!fit.converged) return kInf;
    return -2.0 * fit.value + 2.0 * fit.dim();
}

double block_qbic(const FitResult& fit) {
    if (!fit.converged) return kInf;
    const RateSpec rates = RateSpec::of(fit);
    double s = -2.0 * fit.value;
    for (std::size_t k = 0; k < fit.blocks.size(); ++k) {
        const LogDet ld = log_det_spd(fit.block_neg_hessian(k));
        s += ld.degenerate ? rates.dims[k] * -2.0 * std::log(rates.a[k]) : ld.value;
    }
    return s;
}

Vector posterior_model_probs(const std::vector<double>& values, const std::vector<double>& weights) {
    if (values.size() != weights.size()) throw CriterionError("criterion values and model weights differ in length");
    const auto m = static_cast<Eigen::Index>(values.size());
    Vector logit(m);
    double top = -kInf;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        logit[i] = (std::isfinite(values[k]) && weights[k] > 0.0) ? -0.5 * values[k] + std::log(weights[k]) : -kInf;
        top = std::max(top, logit[i]);
    }
    if (!std::isfinite(top)) throw CriterionError("no candidate has a finite criterion value");
    // std::exp rather than Eigen's packet exp, which clamps -inf to a denormal instead of 0.
    const Vector p = (logit.array() - top).unaryExpr([](double x) { return std::exp(x); });
    return p / p.sum();
}

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::Qbic: return "QBIC";
        case Criterion::QbicSharp: return "QBIC_SHARP";
        case Criterion::Bic: return "BIC";
        case Criterion::Faic: return "FAIC";
        case Criterion::BlockQbic: return "BLOCK_QBIC";
    }
    return "?";
}

Criterion parse_criterion(std::string_view s) {
    for (Criterion c : kAllCriteria) {
        if (to_string(c) == s) return c;
    }
    throw SpecificationError("unknown criterion '" + std::string(s) + "'");
}

double CandidateScores::get(Criterion c) const {
    switch (c) {
        case Criterion::Qbic: return qbic;
        case Criterion::QbicSharp: return qbic_sharp;
        case Criterion::Bic: return bic;
        case Criterion::Faic: return faic;
        case Criterion::BlockQbic: return block_qbic;
    }
    return kInf;
}

const CandidateScores& CriterionReport::row(const std::string& id) const {
    for (const auto& r : rows) {
        if (r.id == id) return r;
    }
    throw CriterionError("no candidate '" + id + "' in report");
}

std::string CriterionReport::chosen(Criterion c) const {
    for (const auto& [crit, id] : selected) {
        if (crit == c) return id;
    }
    throw SelectionError("no candidate selected by " + to_string(c));
}

CandidateScores score(const FitResult& fit) {
    CandidateScores s;
    s.id = fit.model_id;
    switch (fit.stage) {
        case FitStage::Full:
            s.p1 = fit.blocks.empty() ? 0 : fit.blocks.front().dim();
            s.p2 = fit.dim() - s.p1;
            break;
        case FitStage::DiffusionOnly: s.p1 = fit.dim(); break;
        case FitStage::DriftGivenDiffusion: s.p2 = fit.dim(); break;
    }
    s.converged = fit.converged;
    s.value = fit.value;
    if (!fit.converged) {
        s = failed_score(s.id, s.p1, s.p2);
        s.value = fit.value;
        return s;
    }
    const LogDet ld = log_det_spd(fit.neg_hessian);
    s.hessian_logdet = ld.value;
    s.degenerate = ld.degenerate;
    s.qbic = qbic(fit);
    s.qbic_sharp = qbic_sharp(fit);
    s.bic = bic(fit);
    s.faic = faic(fit);
    s.block_qbic = block_qbic(fit);
    return s;
}

CandidateScores failed_score(std::string id, int p1, int p2) {
    CandidateScores s;
    s.id = std::move(id);
    s.p1 = p1;
    s.p2 = p2;
    s.converged = false;
    s.value = -kInf;
    s.hessian_logdet = -kInf;
    s.degenerate = true;
    s.qbic = s.qbic_sharp = s.bic = s.faic = s.block_qbic = kInf;
    return s;
}

std::size_t argmin_with_ties(const std::vector<double>& values, const std::vector<int>& dims,
                             const std::vector<std::string>& ids) {
    std::size_t best = values.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) continue;
        if (best == values.size()) {
            best = i;
            continue;
        }
        const double tol = 1e-12 * std::max(1.0, std::max(std::abs(values[i]), std::abs(values[best])));
        if (values[i] < values[best] - tol) {
            best = i;
        } else if (std::abs(values[i] - values[best]) <= tol) {
            if (dims[i] < dims[best] || (dims[i] == dims[best] && ids[i] < ids[best])) best = i;
        }
    }
    return best;
}

CriterionReport make_report(std::vector<CandidateScores> rows, FitStrategy strategy,
                            const std::vector<double>& model_weights) {
    CriterionReport rep;
    rep.strategy = strategy;
    rep.rows = std::move(rows);
    std::vector<int> dims;
    std::vector<std::string> ids;
    for (const auto& r : rep.rows) {
        dims.push_back(r.dim());
        ids.push_back(r.id);
    }
    bool any = false;
    for (Criterion c : kAllCriteria) {
        std::vector<double> v;
        for (const auto& r : rep.rows) v.push_back(r.get(c));
        const std::size_t k = argmin_with_ties(v, dims, ids);
        if (k < v.size()) {
            rep.selected.emplace_back(c, ids[k]);
            any = true;
        }
    }
    if (any) {
        std::vector<double> w = model_weights;
        if (w.empty()) w.assign(rep.rows.size(), 1.0 / static_cast<double>(rep.rows.size()));
        std::vector<double> v;
        for (const auto& r : rep.rows) v.push_back(r.qbic);
        rep.posterior_weights = posterior_model_probs(v, w);
    } else {
        rep.posterior_weights = Vector::Zero(static_cast<Eigen::Index>(rep.rows.size()));
    }
    return rep;
}

double bayes_factor_estimate(const CriterionReport& report, const std::string& i, const std::string& j) {
    const double si = report.row(i).qbic_sharp;
    const double sj = report.row(j).qbic_sharp;
    if (i == j) return 0.0;
    return (sj - si) / 2.0;
}

namespace {

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string report_csv(const CriterionReport& report) {
    std::ostringstream os;
    os << "id,p1,p2,converged,H,logdet,degenerate,qbic,qbic_sharp,bic,faic,block_qbic,posterior\n";
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& r = report.rows[k];
        const double post =
            k < static_cast<std::size_t>(report.posterior_weights.size()) ? report.posterior_weights[static_cast<Eigen::Index>(k)] : 0.0;
        os << r.id << ',' << r.p1 << ',' << r.p2 << ',' << (r.converged ? 1 : 0) << ',' << num(r.value) << ','
           << num(r.hessian_logdet) << ',' << (r.degenerate ? 1 : 0) << ',' << num(r.qbic) << ',' << num(r.qbic_sharp)
           << ',' << num(r.bic) << ',' << num(r.faic) << ',' << num(r.block_qbic) << ',' << num(post) << '\n';
    }
    return os.str();
}

}  // namespace qbic
