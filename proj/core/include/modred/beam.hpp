#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "modred/freqresp.hpp"
#include "modred/lti.hpp"
#include "modred/synthesis.hpp"

namespace modred {

enum class Boundary { clamped_free, free_free };

/// Uniform Euler-Bernoulli beam meshed with equal-length two-node elements.
/// Clamped-free beams are fixed at node 0.
struct BeamSpec {
    double area = 1e-6;        ///< cross-section, m^2
    double inertia = 1e-9;     ///< second moment of area, m^4
    double youngs = 2e11;      ///< Pa
    double density = 8e3;      ///< kg/m^3
    double damping = 0.01;     ///< modal damping ratio
    double length = 1.0;       ///< m
    int elements = 1;
    Boundary boundary = Boundary::clamped_free;

    /// Throws DomainError for nonpositive quantities or damping outside (0, 1).
    void validate() const;
    [[nodiscard]] int nodes() const noexcept { return elements + 1; }
    [[nodiscard]] Eigen::Index dofs() const noexcept;
};

enum class DofKind { translation, rotation };
enum class ChannelRole { coupling, external };

struct Channel {
    int node = 0;
    DofKind kind = DofKind::translation;
    ChannelRole role = ChannelRole::coupling;
};

/// Forces/moments applied at `inputs`, translations/rotations measured at `outputs`.
struct IoMap {
    std::vector<Channel> inputs;
    std::vector<Channel> outputs;
};

struct ElementMatrices {
    Matrix k;  ///< 4x4 stiffness, dof order (w1, theta1, w2, theta2)
    Matrix m;  ///< 4x4 consistent mass
};

[[nodiscard]] ElementMatrices beam_element_matrices(double youngs, double inertia, double density,
                                                    double area, double element_length);

struct BeamMatrices {
    Matrix m;
    Matrix k;
};

/// Global mass and stiffness with the boundary dofs removed.
[[nodiscard]] BeamMatrices assemble_beam(const BeamSpec& spec);

/// Row of the assembled matrices holding the given node dof. Throws
/// DomainError for nodes outside the mesh or clamped dofs.
[[nodiscard]] Eigen::Index dof_index(const BeamSpec& spec, int node, DofKind kind);

/// Undamped natural frequencies sqrt(eig(K, M)) in ascending order (rad/s).
[[nodiscard]] Vector natural_frequencies(const Matrix& m, const Matrix& k);

/// Modally damped model of M q'' + C q' + K q = F u, y = S q, with damping
/// 2 zeta w_i on each mode and none on rigid-body modes. States are modal,
/// two per mode in the order (w_i eta_i, eta_i') so that each block of A is
/// [[0, w_i], [-w_i, -2 zeta w_i]]; rigid-body modes use (eta_i, eta_i').
/// `force_map` is dofs x m, `output_map` is p x dofs.
[[nodiscard]] StateSpaceModel modal_damped_statespace(const Matrix& m, const Matrix& k, double zeta,
                                                      const Matrix& force_map,
                                                      const Matrix& output_map);

[[nodiscard]] StateSpaceModel beam_model(const BeamSpec& spec, const IoMap& io);

/// Material, length and mesh of the three beams of the example; `elements`
/// overrides the default mesh (50, 20, 30).
[[nodiscard]] std::array<BeamSpec, 3> three_beam_specs(std::array<int, 3> elements = {50, 20, 30});

/// Channel layout of the three beams (2, 2, 5, 4, 2, 3 inputs/outputs).
[[nodiscard]] std::array<IoMap, 3> three_beam_io(std::span<const BeamSpec, 3> specs);

/// Two cantilevers joined at their tips to the ends of a free-free beam by
/// translational (k_t) and rotational (k_r) springs. u_c is a force at the
/// middle of beam 2 and y_c the translation at the middle of beam 3.
/// Beam 3 is clamped at its far end, so its local rotation is opposite to
/// the global one.
[[nodiscard]] InterconnectedSystem build_three_beam_system(std::span<const BeamSpec, 3> specs,
                                                           double k_t = 1e5, double k_r = 1e3);

struct BeamRequirement {
    double beta1 = 0.1;
    double beta2 = 5e-7;
    double omega_lo = std::pow(10.0, 2.5);
    double omega_hi = 1e5;
    std::size_t points = 1000;
};

/// Log grid and interconnected requirement built from the closed-loop G_c.
[[nodiscard]] RequirementSpec beam_requirement(const InterconnectedSystem& sys,
                                               const BeamRequirement& params = {},
                                               unsigned workers = 1);

}  // namespace modred
