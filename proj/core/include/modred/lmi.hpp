#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "modred/lti.hpp"

namespace modred::lmi {

enum class LmiStatus { optimal, infeasible, max_iter };

[[nodiscard]] std::string_view to_string(LmiStatus status) noexcept;

/// How Hermitian blocks are handed to the interior-point iteration.
enum class Embedding {
    real,     ///< [[Re, -Im], [Im, Re]] real-symmetric embedding (default)
    complex,  ///< native complex Hermitian arithmetic
};

/// minimize c^T x  subject to  F0_b + sum_i x_i F_ib >= margin * I  for every block b,
/// and optional per-variable bounds lb_i <= x_i <= ub_i.
class LmiProblem {
public:
    explicit LmiProblem(std::size_t num_vars);

    /// Adds a constraint block with the given Hermitian constant term; returns its index.
    std::size_t add_block(CMatrix constant);
    void set_coefficient(std::size_t block, std::size_t var, CMatrix coefficient);
    void set_objective(Vector c);
    void set_lower_bound(std::size_t var, double lb);
    void set_upper_bound(std::size_t var, double ub);
    void set_margin(double margin) { margin_ = margin; }

    [[nodiscard]] std::size_t num_vars() const noexcept { return num_vars_; }
    [[nodiscard]] std::size_t num_blocks() const noexcept { return constants_.size(); }
    [[nodiscard]] const CMatrix& constant(std::size_t block) const { return constants_.at(block); }
    /// Empty optional when the variable does not enter the block.
    [[nodiscard]] const std::optional<CMatrix>& coefficient(std::size_t block,
                                                            std::size_t var) const;
    [[nodiscard]] const Vector& objective() const noexcept { return objective_; }
    [[nodiscard]] const std::vector<std::optional<double>>& lower_bounds() const noexcept {
        return lower_;
    }
    [[nodiscard]] const std::vector<std::optional<double>>& upper_bounds() const noexcept {
        return upper_;
    }
    [[nodiscard]] double margin() const noexcept { return margin_; }

    /// F0_b + sum_i x_i F_ib.
    [[nodiscard]] CMatrix block_value(std::size_t block, const Vector& x) const;

    /// Throws DomainError on non-Hermitian blocks or inconsistent dimensions.
    void validate() const;

private:
    std::size_t num_vars_;
    std::vector<CMatrix> constants_;
    std::vector<std::vector<std::optional<CMatrix>>> coefficients_;
    Vector objective_;
    std::vector<std::optional<double>> lower_;
    std::vector<std::optional<double>> upper_;
    double margin_ = 0.0;
};

struct LmiOptions {
    double feas_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iter = 200;  ///< total Newton steps over both phases
    Embedding embedding = Embedding::real;
    /// A strictly feasible starting point lets the solver skip phase I.
    std::optional<Vector> initial_point;
};

struct LmiSolution {
    LmiStatus status = LmiStatus::max_iter;
    Vector x;
    double objective_value = 0.0;
    /// min over blocks and bounds of lambda_min(F_b(x)) - margin.
    double min_eig_margin = 0.0;
    int iterations = 0;
};

/// Barrier interior-point method with a phase-I feasibility search.
[[nodiscard]] LmiSolution solve_sdp(const LmiProblem& problem, const LmiOptions& options = {});

/// Smallest eigenvalue of a Hermitian matrix (throws on non-Hermitian input).
[[nodiscard]] double min_eigenvalue(const CMatrix& m);

/// True iff lambda_min(M) > margin. M must be Hermitian within 1e-12 (relative).
[[nodiscard]] bool check_pd(const CMatrix& m, double margin = 0.0);

/// [[Re M, -Im M], [Im M, Re M]]; eigenvalues are those of M, each doubled.
[[nodiscard]] Matrix real_embedding(const CMatrix& m);

}  // namespace modred::lmi
