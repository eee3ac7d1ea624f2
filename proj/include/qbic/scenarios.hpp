#pragma once

#include "qbic/select.hpp"
#include "qbic/simulate.hpp"

#include <functional>

namespace qbic {

enum class Scenario { Ergodic61, VolaTrig621, VolaCircle622, VolaRational, Nonergodic63, Custom };

std::string to_string(Scenario s);
Scenario parse_scenario(std::string_view s);

/// Draws one path of size n from the true model; the stream is fixed by `seed`.
using PathGenerator = std::function<PathGrid(std::size_t n, std::uint64_t seed, int substeps)>;

/// Splits a data path into likelihood inputs. With a response, the last column is the response
/// and the others are the covariates; otherwise the path is a scalar diffusion.
Observations observations_from(const PathGrid& data, bool has_response);

/// Everything an experiment needs: the candidate family, the truth, and a data generator.
struct ScenarioSpec {
    Scenario scenario = Scenario::Custom;
    std::string name;  ///< file-name tag, e.g. "VOLA_CIRCLE_622_a10"
    FamilyKind kind = FamilyKind::VolatilityRegression;
    std::vector<CandidateModel> family;
    std::optional<DecomposedFamily> decomposed;  ///< set for ergodic families
    std::string true_model_id;
    Vector theta_true;  ///< parameter of the true model in its own candidate
    /// Candidates that strictly contain the true model (over-fitting targets).
    std::vector<std::string> supermodel_ids;
    PathGenerator simulate;
    bool has_response = false;

    [[nodiscard]] std::size_t index_of(const std::string& id) const;
    [[nodiscard]] Observations generate(std::size_t n, std::uint64_t seed, int substeps) const {
        return observations_from(simulate(n, seed, substeps), has_response);
    }
};

/// Built-in scenario. Each candidate's box is centred on the true coefficient of each of its
/// basis functions (0 for functions absent from the truth) with the given half-width.
/// `level` is the constant covariate for VolaCircle622 and ignored otherwise.
ScenarioSpec make_scenario(Scenario s, double level = 1.0, double box_halfwidth = 10.0);

/// Supermodels of `truth` among basis-expansion candidates (strict basis inclusion in every block).
std::vector<std::string> supermodels_of(const std::vector<CandidateModel>& family, const std::string& truth);

/// Volatility family M1..M7 over every nonempty subset of three basis functions, ordered
/// {0,1,2}, {0,1}, {0,2}, {1,2}, {0}, {1}, {2}.
std::vector<CandidateModel> subset_family(const std::vector<BasisFunction>& basis, const Vector& center,
                                          double halfwidth);

}  // namespace qbic
