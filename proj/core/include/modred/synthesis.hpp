#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modred/errors.hpp"
#include "modred/freqresp.hpp"
#include "modred/lmi.hpp"
#include "modred/lti.hpp"

namespace modred {

/// Input/output widths of each subsystem, i.e. the block pattern of Delta.
struct BlockStructure {
    std::vector<Eigen::Index> inputs;   ///< m_j
    std::vector<Eigen::Index> outputs;  ///< p_j

    static BlockStructure of(const InterconnectedSystem& sys);

    [[nodiscard]] std::size_t count() const noexcept { return inputs.size(); }
    [[nodiscard]] Eigen::Index mb() const;
    [[nodiscard]] Eigen::Index pb() const;
};

/// Allowed interconnected error: sigma_max(diag(v_c) E_c(iw) diag(w_c)) < 1 at each grid point.
struct RequirementSpec {
    FrequencyGrid grid;
    std::vector<Vector> v_c;  ///< length p_c per frequency
    std::vector<Vector> w_c;  ///< length m_c per frequency

    RequirementSpec(FrequencyGrid grid, std::vector<Vector> v_c, std::vector<Vector> w_c);
};

/// v_c(w) = 1 / max(beta1 |G_c(iw)|, beta2), w_c = 1. For several outputs the
/// rule is applied per output channel to the largest magnitude in that row.
[[nodiscard]] RequirementSpec build_interconnected_requirement(const StateSpaceModel& gc,
                                                               const FrequencyGrid& grid,
                                                               double beta1, double beta2,
                                                               unsigned workers = 1);

/// Diagonal error scalings at one frequency. Subsystem j may deviate by
/// E_j = diag(w_j) Delta diag(v_j) with sigma_max(Delta) <= 1.
struct Scalings {
    std::vector<Vector> v;  ///< per subsystem, length m_j
    std::vector<Vector> w;  ///< per subsystem, length p_j
    Vector v_c;             ///< length p_c
    Vector w_c;             ///< length m_c
};

struct DScalings {
    Vector d;  ///< d_1..d_k
    double d_c = 1.0;

    static DScalings ones(std::size_t k) { return {Vector::Ones(static_cast<Eigen::Index>(k)), 1.0}; }
};

struct CheckResult {
    bool pass = false;
    double margin = 0.0;
};

/// Thrown when no admissible subsystem scalings exist at a frequency.
class RequirementInfeasible : public NumericalError {
public:
    RequirementInfeasible(double omega, const std::string& what);
    [[nodiscard]] double omega() const noexcept { return omega_; }

private:
    double omega_;
};

struct SynthesisOptions {
    double conv_tol = 1e-3;
    int max_outer = 20;
    double pd_margin = 1e-9;
    /// Floor on the diagonals of V^-2 and W^-2, i.e. v, w <= floor^-1/2.
    double budget_floor = 1e-12;
    /// Box on d_1..d_k (d_c is pinned to 1).
    double d_min = 1e-6;
    double d_max = 1e6;
    lmi::LmiOptions lmi{};
    unsigned workers = 1;
};

/// Positivity test of [[W^-2 D_r^-1, N^H], [N, V^-2 D_l]] with D_l = diag(d_j I_mj, d_c I_pc)
/// and D_r = diag(d_j I_pj, d_c I_mc). The matrix is normalized by its diagonal
/// first, so `margin` is 1 - sigma_max(D_l^-1/2 V N W D_r^1/2) and pass means margin > pd_margin.
[[nodiscard]] CheckResult theorem1_check(const NominalMatrix& n, const BlockStructure& blocks,
                                         const Scalings& s, const DScalings& d,
                                         double pd_margin = 1e-9);

/// Minimizes sum_j alpha_j (tr V_j^-2 + tr W_j^-2) over the subsystem scalings
/// with d fixed. `reference` must satisfy the check under d when given; the
/// result never costs more than it. Throws RequirementInfeasible.
[[nodiscard]] Scalings solve_vw_step(const NominalMatrix& n, const BlockStructure& blocks,
                                     const DScalings& d, const Vector& v_c, const Vector& w_c,
                                     std::span<const double> alpha,
                                     const SynthesisOptions& options = {},
                                     const std::optional<Scalings>& reference = std::nullopt);

struct DStepResult {
    DScalings d;
    double gamma = 0.0;
    lmi::LmiStatus status = lmi::LmiStatus::max_iter;
};

/// Maximizes gamma subject to D_l - M D_r M^H >= gamma I with M = V N W, d_c = 1
/// and d_j in [d_min, d_max]. `start` seeds the solver.
[[nodiscard]] DStepResult solve_d_step(const NominalMatrix& n, const BlockStructure& blocks,
                                       const Scalings& s,
                                       const std::optional<DScalings>& start = std::nullopt,
                                       const SynthesisOptions& options = {});

[[nodiscard]] double scaling_cost(const Scalings& s, std::span<const double> alpha);

enum class PointStatus { feasible, infeasible };

struct PointResult {
    double omega = 0.0;
    PointStatus status = PointStatus::infeasible;
    Scalings scalings;
    DScalings d;
    double cost = 0.0;
    std::vector<double> cost_trace;
    std::string message;  ///< reason when infeasible
};

/// The alternating V,W / D iteration at a single frequency.
[[nodiscard]] PointResult synthesize_point(const NominalMatrix& n, const BlockStructure& blocks,
                                           const Vector& v_c, const Vector& w_c,
                                           std::span<const double> alpha,
                                           const SynthesisOptions& options = {});

struct ScalingSolution {
    FrequencyGrid grid;
    BlockStructure blocks;
    std::vector<PointResult> points;  ///< one per grid frequency

    [[nodiscard]] bool all_feasible() const;
    [[nodiscard]] std::vector<double> infeasible_omegas() const;
};

/// Thrown by synthesize_requirements when some frequencies are infeasible;
/// the results of every frequency stay available through partial().
class SynthesisError : public NumericalError {
public:
    explicit SynthesisError(ScalingSolution partial);
    [[nodiscard]] const ScalingSolution& partial() const noexcept { return partial_; }

private:
    ScalingSolution partial_;
};

/// Runs synthesize_point on every grid frequency (in parallel when options.workers > 1).
/// alpha empty means all ones.
[[nodiscard]] ScalingSolution synthesize_requirements(const InterconnectedSystem& sys,
                                                      const RequirementSpec& req,
                                                      std::span<const double> alpha = {},
                                                      const SynthesisOptions& options = {});

/// sigma_max(diag(w)^-1 E diag(v)^-1) <= 1 + slack; margin = 1 - sigma_max.
[[nodiscard]] CheckResult check_subsystem_requirement(const CMatrix& e, const Vector& v,
                                                      const Vector& w, double slack = 0.0);

/// sigma_max(diag(v_c) E diag(w_c)) < 1 + slack; margin = 1 - sigma_max.
[[nodiscard]] CheckResult check_interconnected_requirement(const CMatrix& e, const Vector& v_c,
                                                           const Vector& w_c, double slack = 0.0);

/// `omega,v_1..v_mj,w_1..w_pj` for subsystem j (feasible frequencies only).
void write_scalings_csv(std::ostream& out, const ScalingSolution& sol, std::size_t j);
/// `omega,d_1..d_k,cost,status`.
void write_d_csv(std::ostream& out, const ScalingSolution& sol);
/// `omega,iteration,cost`.
void write_cost_trace_csv(std::ostream& out, const ScalingSolution& sol);

}  // namespace modred
