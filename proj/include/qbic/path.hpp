#pragma once

#include "qbic/model_spec.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

namespace qbic {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Equispaced observations X_{t_j}, t_j = j h, j = 0..n, of a d-dimensional process.
class PathGrid {
  public:
    PathGrid(double h, RowMatrix values);

    [[nodiscard]] double h() const { return h_; }
    /// Number of increments n (the grid has n + 1 points).
    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(values_.rows()) - 1; }
    [[nodiscard]] int dim() const { return static_cast<int>(values_.cols()); }
    [[nodiscard]] double horizon() const { return h_ * static_cast<double>(n()); }
    [[nodiscard]] State at(std::size_t j) const {
        return {values_.data() + j * static_cast<std::size_t>(values_.cols()), static_cast<std::size_t>(values_.cols())};
    }
    [[nodiscard]] double operator()(std::size_t j, int k) const { return values_(static_cast<Eigen::Index>(j), k); }
    [[nodiscard]] const RowMatrix& values() const { return values_; }
    /// Path restricted to one coordinate.
    [[nodiscard]] PathGrid column(int k) const;

  private:
    double h_;
    RowMatrix values_;
};

/// CSV with header "t,x1,...,xd" and 17-significant-digit decimals.
void write_path_csv(std::ostream& os, const PathGrid& path);
std::string path_to_csv(const PathGrid& path);
/// Reads the format above; the step size is recovered from the t column.
PathGrid read_path_csv(std::istream& is);

/// Data fed to a quasi-likelihood: the state whose basis values enter the coefficients,
/// and the increments of the scalar observed coordinate.
///
/// For an ergodic diffusion both come from the same path; for a volatility regression the
/// state is the covariate process and the increments are those of the response.
struct Observations {
    PathGrid state;
    Vector increments;

    [[nodiscard]] std::size_t n() const { return state.n(); }
    [[nodiscard]] double h() const { return state.h(); }

    /// Scalar path observed directly (ergodic diffusion, or a volatility model whose covariate
    /// is the process itself).
    static Observations diffusion(const PathGrid& path);
    /// Covariates and a scalar response on the same grid; throws SpecificationError on mismatch.
    static Observations regression(const PathGrid& covariates, const PathGrid& response);
};

}  // namespace qbic
