#pragma once

#include "qbic/estimate.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qbic {

/// Numeric per-block rates a_{k,n}.
struct RateSpec {
    std::size_t n = 0;
    double h = 0.0;
    std::vector<int> dims;
    std::vector<double> a;

    /// Rates of the fit's blocks; volatility-regression fits always use n^{-1/2}.
    static RateSpec of(const FitResult& fit);
    /// sum_k p_k log a_k^{-2}
    [[nodiscard]] double log_penalty() const;
};

struct PriorSpec {
    std::function<double(const Vector&)> log_density;
    double model_weight = 1.0;

    /// Uniform density on the fit's parameter box.
    static PriorSpec uniform(const FitResult& fit, double model_weight = 1.0);
};

/// log det of a symmetric matrix assumed positive definite. `degenerate` is set when some
/// LDLT pivot falls below 1e-10 times the mean absolute diagonal (or is negative).
struct LogDet {
    double value = 0.0;
    bool degenerate = false;
};

LogDet log_det_spd(const Matrix& m);

struct QbicTerms {
    double value = 0.0;
    double log_det = 0.0;        ///< log det(-d^2 H), or the rate fallback when degenerate
    bool used_fallback = false;
};

/// -2 H + log det(-d^2 H); when the determinant is degenerate the log-det is replaced by
/// sum_k p_k log a_k^{-2}. Non-converged fits score +inf.
QbicTerms qbic_terms(const FitResult& fit);
double qbic(const FitResult& fit);
/// qbic - 2 log prior(theta_hat) - p log(2 pi). Throws CriterionError if the prior vanishes at theta_hat.
double qbic_sharp(const FitResult& fit, const PriorSpec& prior);
double qbic_sharp(const FitResult& fit);
/// -2 H + sum_k p_k log a_k^{-2}.
double bic(const FitResult& fit, const RateSpec& rates);
double bic(const FitResult& fit);
/// -2 H + 2 p.
double faic(const FitResult& fit);
/// -2 H + sum_k log det(-d^2_{theta_k} H), cross blocks ignored; per-block rate fallback.
double block_qbic(const FitResult& fit);

/// pi_m proportional to weights_m exp(-values_m / 2), computed with a max shift.
/// Infinite values get probability 0.
Vector posterior_model_probs(const std::vector<double>& values, const std::vector<double>& weights);

enum class Criterion { Qbic, QbicSharp, Bic, Faic, BlockQbic };

inline constexpr Criterion kAllCriteria[] = {Criterion::Qbic, Criterion::QbicSharp, Criterion::Bic, Criterion::Faic,
                                             Criterion::BlockQbic};

std::string to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

struct CandidateScores {
    std::string id;
    int p1 = 0;
    int p2 = 0;
    bool converged = false;
    double value = 0.0;  ///< H at the estimate
    double hessian_logdet = 0.0;
    bool degenerate = false;
    double qbic = 0.0;
    double qbic_sharp = 0.0;
    double bic = 0.0;
    double faic = 0.0;
    double block_qbic = 0.0;

    [[nodiscard]] double get(Criterion c) const;
    [[nodiscard]] int dim() const { return p1 + p2; }
};

struct CriterionReport {
    FitStrategy strategy = FitStrategy::Joint;
    std::vector<CandidateScores> rows;
    std::vector<std::pair<Criterion, std::string>> selected;
    Vector posterior_weights;  ///< from qbic, uniform model weights unless given

    [[nodiscard]] const CandidateScores& row(const std::string& id) const;
    [[nodiscard]] std::string chosen(Criterion c) const;
};

/// Scores for one candidate. `p1`/`p2` default to the fit's block dimensions.
CandidateScores score(const FitResult& fit);
/// Scores of a failed fit: every criterion +inf.
CandidateScores failed_score(std::string id, int p1, int p2);

/// Index minimizing `values`, ties (within 1e-12 relative) broken by smaller dim, then id.
/// Returns values.size() when every value is infinite.
std::size_t argmin_with_ties(const std::vector<double>& values, const std::vector<int>& dims,
                             const std::vector<std::string>& ids);

/// Builds a report from per-candidate scores, choosing a candidate for every criterion.
CriterionReport make_report(std::vector<CandidateScores> rows, FitStrategy strategy,
                            const std::vector<double>& model_weights = {});

/// (qbic_sharp_j - qbic_sharp_i) / 2; positive favors candidate i.
double bayes_factor_estimate(const CriterionReport& report, const std::string& i, const std::string& j);

/// One CSV row per candidate: id,p1,p2,converged,H,logdet,degenerate,qbic,qbic_sharp,bic,faic,block_qbic,posterior
std::string report_csv(const CriterionReport& report);

}  // namespace qbic
