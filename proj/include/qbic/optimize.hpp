#pragma once

#include "qbic/gql.hpp"

#include <functional>

namespace qbic {

/// Smooth objective to be maximized over a box.
struct Objective {
    int dim = 0;
    std::function<double(const Vector&)> value;
    std::function<Evaluation(const Vector&)> evaluate;
};

struct LocalOptions {
    double grad_tol = 1e-6;
    /// When positive the tolerance becomes grad_tol * (1 + |f| / value_scale).
    double value_scale = 0.0;
    int max_iters = 500;
    double interior_margin = 1e-8;
};

struct LocalResult {
    Vector theta;
    Evaluation eval;
    double grad_norm = 0.0;  ///< projected-gradient sup norm
    double tolerance = 0.0;  ///< gradient tolerance in effect at the returned point
    bool converged = false;
    bool interior = false;
    int iterations = 0;
    int evals = 0;
};

/// Damped Newton ascent with box projection and Armijo backtracking. Coordinates pinned at a
/// bound with the gradient pointing outward are frozen for the step. Converged means the
/// projected gradient is below grad_tol and the point is at least interior_margin from every bound.
LocalResult maximize_in_box(const Objective& f, const Vector& lower, const Vector& upper, const Vector& start,
                            const LocalOptions& opt);

}  // namespace qbic
