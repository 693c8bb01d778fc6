#pragma once

// Shared by balanced truncation and the order search: the balancing
// transformation is computed once and truncated at many candidate orders.

#include "modred/lti.hpp"

namespace modred::detail {

class Balancer {
public:
    /// Square-root balancing of the Gramian pair; eigenvalues of P and Q are
    /// floored at 1e-14 * ||.|| before factoring.
    Balancer(const Matrix& p, const Matrix& q);

    [[nodiscard]] const Vector& hankel_values() const noexcept { return hsv_; }
    /// Largest order the transformation supports (positive Hankel values).
    [[nodiscard]] Eigen::Index max_order() const noexcept { return rank_; }
    [[nodiscard]] StateSpaceModel truncate(const StateSpaceModel& model, Eigen::Index r) const;
    /// Singular perturbation of the discarded balanced states: their
    /// derivatives are set to zero, which keeps the DC gain of the balanced
    /// part. Throws NumericalError if the discarded block of A is singular.
    [[nodiscard]] StateSpaceModel residualize(const StateSpaceModel& model, Eigen::Index r) const;

private:
    Matrix tl_;  // rows: Sigma^-1/2 U^T Lq^T
    Matrix tr_;  // cols: Lp V Sigma^-1/2
    Vector hsv_;
    Eigen::Index rank_ = 0;
};

/// Gramians of the plant states inside the weighted cascades G * V_in
/// (controllability) and W_out * G (observability). Empty weights mean identity.
struct WeightedGramians {
    Matrix p;
    Matrix q;
};

[[nodiscard]] WeightedGramians weighted_gramians(const StateSpaceModel& model,
                                                 const StateSpaceModel* output_weight,
                                                 const StateSpaceModel* input_weight);

}  // namespace modred::detail
