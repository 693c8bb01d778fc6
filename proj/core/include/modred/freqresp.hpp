#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modred/lti.hpp"

namespace modred {

/// Strictly increasing, finite, positive evaluation frequencies in rad/s.
class FrequencyGrid {
public:
    explicit FrequencyGrid(std::vector<double> omegas);

    [[nodiscard]] std::span<const double> omegas() const noexcept { return omegas_; }
    [[nodiscard]] std::size_t size() const noexcept { return omegas_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return omegas_[i]; }
    [[nodiscard]] double front() const { return omegas_.front(); }
    [[nodiscard]] double back() const { return omegas_.back(); }

private:
    std::vector<double> omegas_;
};

/// n log10-equispaced points on [lo, hi], endpoints included exactly.
[[nodiscard]] FrequencyGrid make_log_grid(double lo, double hi, std::size_t n);

/// Blocks of the nominal matrix N(iw) seen by the subsystem errors:
/// N11 = K11 (I - G_b K11)^{-1}, N12 = (I - K11 G_b)^{-1} K12,
/// N21 = K21 (I - G_b K11)^{-1}, N22 = 0.
struct NominalMatrix {
    CMatrix n11;
    CMatrix n12;
    CMatrix n21;
    CMatrix n22;
    double omega = 0.0;

    /// [N11 N12; N21 N22], size (m_b + p_c) x (p_b + m_c).
    [[nodiscard]] CMatrix full() const;
};

[[nodiscard]] NominalMatrix compute_N(const InterconnectedSystem& sys, double omega);

/// Same as above from an already evaluated block-diagonal response G_b(iw).
[[nodiscard]] NominalMatrix compute_N(const InterconnectedSystem& sys, const CMatrix& gb,
                                      double omega);

[[nodiscard]] double sigma_max(const CMatrix& m);

/// Lower-bound estimate of ||G||_inf: max of sigma_max over the grid, DC and
/// infinite frequency, refined by golden-section search around the largest
/// grid peaks until the relative change drops below refine_tol.
/// Throws DomainError for unstable models.
[[nodiscard]] double hinf_norm_estimate(const StateSpaceModel& model, const FrequencyGrid& grid,
                                        double refine_tol = 1e-9);

/// Many-frequency evaluator: A is reduced to Hessenberg form once, after which
/// each frequency costs O(n^2) per input column instead of O(n^3).
class ResponseSweep {
public:
    explicit ResponseSweep(const StateSpaceModel& model);

    [[nodiscard]] CMatrix operator()(double omega) const;
    [[nodiscard]] Eigen::Index inputs() const noexcept { return d_.cols(); }
    [[nodiscard]] Eigen::Index outputs() const noexcept { return d_.rows(); }

private:
    Matrix h_;  // Q^T A Q, upper Hessenberg
    Matrix b_;  // Q^T B
    Matrix c_;  // C Q
    Matrix d_;
};

/// Responses of one model over a whole grid, evaluated in parallel.
[[nodiscard]] std::vector<CMatrix> sweep_response(const StateSpaceModel& model,
                                                  const FrequencyGrid& grid, unsigned workers = 1);

/// Writes `omega,<columns...>` rows with shortest round-trip doubles, '.'
/// decimal separator and LF endings.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// `omega,value` convenience form.
void write_csv(std::ostream& out, const FrequencyGrid& grid, std::span<const double> values,
               const std::string& value_name = "value");

/// Shortest round-trip decimal text of a double.
[[nodiscard]] std::string format_double(double value);

}  // namespace modred
