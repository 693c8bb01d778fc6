#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "modred/errors.hpp"
#include "modred/freqresp.hpp"
#include "modred/lti.hpp"

namespace modred {

struct ScalingSolution;

/// Solves A P + P A^T + Q = 0 for stable A (Bartels-Stewart on the real Schur form).
/// Throws DomainError if A is not stable or the shapes disagree.
[[nodiscard]] Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

struct Gramians {
    Matrix p;  ///< controllability: A P + P A^T + B B^T = 0
    Matrix q;  ///< observability:   A^T Q + Q A + C^T C = 0
};

[[nodiscard]] Gramians gramians(const StateSpaceModel& model);

/// sqrt(eig(P Q)), nonincreasing.
[[nodiscard]] Vector hankel_singular_values(const StateSpaceModel& model);

/// G = stable + marginal, where every pole of `stable` has real part below
/// -tol * max(1, spectral radius) and `marginal` holds the remaining poles
/// (zero feedthrough). Obtained by an ordered real Schur form and a Sylvester
/// decoupling step.
struct StableSplit {
    StateSpaceModel stable;
    StateSpaceModel marginal;
};

[[nodiscard]] StableSplit split_stable(const StateSpaceModel& model, double tol = 1e-9);

/// Sum of two models with equal input and output counts.
[[nodiscard]] StateSpaceModel parallel_sum(const StateSpaceModel& a, const StateSpaceModel& b);

/// SISO weight fitted to magnitude samples: a gain times biproper first- and
/// second-order sections with poles and zeros in the open left half-plane.
struct FittedWeight {
    StateSpaceModel model;
    double fit_error = 0.0;  ///< max | |H(iw_i)| / s_i - 1 | over the grid

    [[nodiscard]] Eigen::Index order() const noexcept { return model.states(); }
    [[nodiscard]] CVector poles() const;
    [[nodiscard]] CVector zeros() const;
};

/// Residuals where the fit falls below a sample are multiplied by this.
inline constexpr double kUnderfitPenalty = 2.0;

/// Fits |H(iw)| to the positive `samples` in the log-magnitude least-squares
/// sense with a model of the given order (number of poles). Falling short of
/// a sample costs kUnderfitPenalty times more than overshooting it, so tight
/// budgets are not averaged away. The objective is nonincreasing in the order.
[[nodiscard]] FittedWeight fit_weight(const FrequencyGrid& grid, std::span<const double> samples,
                                      int order);

/// Diagonal MIMO weight assembled from per-channel fits.
[[nodiscard]] StateSpaceModel diagonal_weight(std::span<const FittedWeight> channels);

struct ReductionResult {
    StateSpaceModel reduced;
    Eigen::Index original_order = 0;
    Eigen::Index reduced_order = 0;
    Vector hankel_values;         ///< (weighted) Hankel singular values of the stable part
    std::vector<double> margins;  ///< 1 - sigma_max of the normalized error per grid point
    std::vector<FittedWeight> input_weights;
    std::vector<FittedWeight> output_weights;

    [[nodiscard]] bool all_pass(double slack = 0.0) const;
};

/// Square-root balanced truncation to order r (0 <= r <= n). Requires a stable model.
[[nodiscard]] ReductionResult balanced_truncation(const StateSpaceModel& model, Eigen::Index r);

/// Enns frequency-weighted balanced truncation: controllability Gramian of
/// G * V_in and observability Gramian of W_out * G, restricted to the plant
/// states. One SISO weight per input (input side) and per output (output side).
[[nodiscard]] ReductionResult fw_balanced_truncation(const StateSpaceModel& model,
                                                     std::span<const FittedWeight> output_weights,
                                                     std::span<const FittedWeight> input_weights,
                                                     Eigen::Index r);

enum class ReductionMethod { fwbt, bt, none };
enum class OrderSearch { bisect, ascending, descending };
/// How discarded balanced states are removed: dropped outright, or replaced
/// by their steady state (singular perturbation, exact at DC).
enum class Truncation { direct, residualize };

[[nodiscard]] std::string_view to_string(ReductionMethod m) noexcept;
[[nodiscard]] ReductionMethod parse_reduction_method(std::string_view s);
[[nodiscard]] std::string_view to_string(Truncation t) noexcept;
[[nodiscard]] Truncation parse_truncation(std::string_view s);

struct ReductionOptions {
    ReductionMethod method = ReductionMethod::fwbt;
    int fit_order = 4;
    OrderSearch search = OrderSearch::bisect;
    Truncation truncation = Truncation::residualize;
    /// Accept sigma_max <= 1 + slack in the per-frequency check.
    double slack = 0.0;
    /// Use exactly this many states instead of searching.
    std::optional<Eigen::Index> order_override;
};

/// No candidate order meets the subsystem requirement.
class ReductionUnattainable : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Smallest-order reduction whose error E = G_hat - G satisfies
/// sigma_max(diag(w)^-1 E diag(v)^-1) <= 1 at every grid point. Weights for
/// FWBT are fitted to 1/v (input side) and 1/w (output side) per channel.
/// Poles on or near the imaginary axis are kept unreduced.
[[nodiscard]] ReductionResult reduce_to_requirement(const StateSpaceModel& model,
                                                    const FrequencyGrid& grid,
                                                    std::span<const Vector> v,
                                                    std::span<const Vector> w,
                                                    const ReductionOptions& options = {});

/// Same, with the budgets of subsystem j taken from a synthesis result.
[[nodiscard]] ReductionResult reduce_to_requirement(const StateSpaceModel& model,
                                                    const ScalingSolution& sol, std::size_t j,
                                                    const ReductionOptions& options = {});

}  // namespace modred
