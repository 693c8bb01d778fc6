#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace modred {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Continuous-time LTI model x' = Ax + Bu, y = Cx + Du.
///
/// Immutable after construction; the constructor enforces dimension
/// consistency and finiteness of every entry.
class StateSpaceModel {
public:
    StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix d);

    /// Feedthrough-only model y = Du.
    static StateSpaceModel static_gain(Matrix d);

    [[nodiscard]] const Matrix& a() const noexcept { return a_; }
    [[nodiscard]] const Matrix& b() const noexcept { return b_; }
    [[nodiscard]] const Matrix& c() const noexcept { return c_; }
    [[nodiscard]] const Matrix& d() const noexcept { return d_; }

    [[nodiscard]] Eigen::Index states() const noexcept { return a_.rows(); }
    [[nodiscard]] Eigen::Index inputs() const noexcept { return d_.cols(); }
    [[nodiscard]] Eigen::Index outputs() const noexcept { return d_.rows(); }

private:
    Matrix a_, b_, c_, d_;
};

/// Result of an eigenvalue-based stability test.
struct StabilityInfo {
    bool stable = true;
    double spectral_abscissa = 0.0;  ///< max Re(eig(A)); -inf for a static model
};

/// k subsystem models connected through the static matrix
/// [u_b; y_c] = [K11 K12; K21 K22] [y_b; u_c].
class InterconnectedSystem {
public:
    InterconnectedSystem(std::vector<StateSpaceModel> subsystems, Matrix k11, Matrix k12,
                         Matrix k21, Matrix k22);

    [[nodiscard]] const std::vector<StateSpaceModel>& subsystems() const noexcept {
        return subsystems_;
    }
    [[nodiscard]] const Matrix& k11() const noexcept { return k11_; }
    [[nodiscard]] const Matrix& k12() const noexcept { return k12_; }
    [[nodiscard]] const Matrix& k21() const noexcept { return k21_; }
    [[nodiscard]] const Matrix& k22() const noexcept { return k22_; }

    [[nodiscard]] std::size_t count() const noexcept { return subsystems_.size(); }
    [[nodiscard]] Eigen::Index mb() const noexcept { return k11_.rows(); }
    [[nodiscard]] Eigen::Index pb() const noexcept { return k11_.cols(); }
    [[nodiscard]] Eigen::Index mc() const noexcept { return k12_.cols(); }
    [[nodiscard]] Eigen::Index pc() const noexcept { return k21_.rows(); }

    /// Offsets of subsystem j inside u_b (inputs) and y_b (outputs).
    [[nodiscard]] Eigen::Index input_offset(std::size_t j) const;
    [[nodiscard]] Eigen::Index output_offset(std::size_t j) const;

    /// Same interconnection with the subsystem models swapped, e.g. for the
    /// reduced-order models. Dimensions must match the originals.
    [[nodiscard]] InterconnectedSystem with_subsystems(std::vector<StateSpaceModel> replaced) const;

private:
    std::vector<StateSpaceModel> subsystems_;
    Matrix k11_, k12_, k21_, k22_;
};

/// C (iwI - A)^{-1} B + D via a dense LU solve. Throws NumericalError when iw is a pole.
[[nodiscard]] CMatrix freq_response(const StateSpaceModel& model, double omega);

[[nodiscard]] StateSpaceModel block_diag(std::span<const StateSpaceModel> models);

/// State-space realization of the upper LFT K21 G_b (I - K11 G_b)^{-1} K12 + K22.
/// The closed-loop state dimension is the sum of the subsystem orders.
[[nodiscard]] StateSpaceModel lft_close(const InterconnectedSystem& sys);

/// The same LFT evaluated pointwise from a given block-diagonal response G_b(iw).
[[nodiscard]] CMatrix lft_response(const InterconnectedSystem& sys, const CMatrix& gb);

/// Parallel connection whose output is y_reduced - y_full.
[[nodiscard]] StateSpaceModel error_system(const StateSpaceModel& full,
                                           const StateSpaceModel& reduced);

[[nodiscard]] StabilityInfo stability_check(const StateSpaceModel& model);

/// Block-diagonal assembly of complex matrices (used for G_b(iw)).
[[nodiscard]] CMatrix block_diag(std::span<const CMatrix> blocks);

}  // namespace modred
