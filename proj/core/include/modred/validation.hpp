#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "modred/freqresp.hpp"
#include "modred/lti.hpp"
#include "modred/synthesis.hpp"

namespace modred {

/// Both requirement checks at one grid frequency. Margins are 1 - sigma_max of
/// the normalized error, so a negative margin is a violation.
struct ReportPoint {
    double omega = 0.0;
    std::vector<double> sub;       ///< per subsystem
    std::vector<bool> sub_pass;
    double interconnected = 0.0;
    bool interconnected_pass = false;
    bool theorem1 = false;         ///< the synthesized scalings pass the LMI test here
};

struct RequirementReport {
    std::vector<ReportPoint> points;
    std::vector<Eigen::Index> full_orders;
    std::vector<Eigen::Index> reduced_orders;

    [[nodiscard]] Eigen::Index full_total() const;
    [[nodiscard]] Eigen::Index reduced_total() const;
    /// 100 (1 - sum r_j / sum n_j).
    [[nodiscard]] double reduction_percent() const;
    [[nodiscard]] bool subsystems_pass() const;
    [[nodiscard]] bool interconnected_pass() const;
    [[nodiscard]] bool all_pass() const { return subsystems_pass() && interconnected_pass(); }
    /// Frequencies where every subsystem check and the LMI test pass but the
    /// interconnected check fails. Nonzero would contradict the guarantee.
    [[nodiscard]] std::size_t implication_violations() const;
    [[nodiscard]] std::vector<double> failing_omegas() const;
};

/// Evaluates E_j = G_hat_j - G_j and E_c = G_hat_c - G_c on the synthesis grid
/// and runs both checks with the synthesized budgets. Throws DomainError when
/// a frequency has no feasible scalings or the reduced models do not match
/// the subsystem dimensions.
[[nodiscard]] RequirementReport validate_pipeline(const InterconnectedSystem& sys,
                                                  std::span<const StateSpaceModel> reduced,
                                                  const ScalingSolution& scalings,
                                                  unsigned workers = 1);

/// `omega,mag_Gc,mag_Gc_hat,bound_lo,bound_hi` with bounds |G_c| -+ 1/(v_c w_c).
/// Needs a single-input single-output interconnected model.
void emit_bode_data(std::ostream& out, const StateSpaceModel& gc, const StateSpaceModel& gc_hat,
                    const RequirementSpec& req, unsigned workers = 1);

/// {"per_omega":[{"omega","sub":[..],"interconnected","pass"}], "totals":{..}}.
void write_report_json(std::ostream& out, const RequirementReport& report);

/// `omega,sub_1..sub_k,interconnected,theorem1`.
void write_report_csv(std::ostream& out, const RequirementReport& report);

}  // namespace modred
