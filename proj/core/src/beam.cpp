#include "modred/beam.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "modred/errors.hpp"

namespace modred {

namespace {

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError(std::string(what) + " must be positive and finite");
}

// Mode shapes with eigenvalues below this fraction of the largest are rigid-body modes.
constexpr double kRigidFraction = 1e-12;

}  // namespace

void BeamSpec::validate() const {
    require_positive(area, "cross-section area");
    require_positive(inertia, "second moment of area");
    require_positive(youngs, "Young's modulus");
    require_positive(density, "mass density");
    require_positive(length, "beam length");
    if (!(damping > 0.0 && damping < 1.0)) throw DomainError("modal damping ratio must lie in (0, 1)");
    if (elements < 1) throw DomainError("a beam needs at least one element");
}

Eigen::Index BeamSpec::dofs() const noexcept {
    return boundary == Boundary::clamped_free ? 2 * elements : 2 * (elements + 1);
}

ElementMatrices beam_element_matrices(double youngs, double inertia, double density, double area,
                                      double element_length) {
    require_positive(youngs, "Young's modulus");
    require_positive(inertia, "second moment of area");
    require_positive(density, "mass density");
    require_positive(area, "cross-section area");
    require_positive(element_length, "element length");
    const double l = element_length, l2 = l * l;
    ElementMatrices e{Matrix(4, 4), Matrix(4, 4)};
    e.k << 12, 6 * l, -12, 6 * l,
           6 * l, 4 * l2, -6 * l, 2 * l2,
           -12, -6 * l, 12, -6 * l,
           6 * l, 2 * l2, -6 * l, 4 * l2;
    e.k *= youngs * inertia / (l2 * l);
    e.m << 156, 22 * l, 54, -13 * l,
           22 * l, 4 * l2, 13 * l, -3 * l2,
           54, 13 * l, 156, -22 * l,
           -13 * l, -3 * l2, -22 * l, 4 * l2;
    e.m *= density * area * l / 420.0;
    return e;
}

BeamMatrices assemble_beam(const BeamSpec& spec) {
    spec.validate();
    const double le = spec.length / spec.elements;
    const auto el = beam_element_matrices(spec.youngs, spec.inertia, spec.density, spec.area, le);
    const Eigen::Index all = 2 * spec.nodes();
    Matrix m = Matrix::Zero(all, all), k = Matrix::Zero(all, all);
    for (int e = 0; e < spec.elements; ++e) {
        m.block(2 * e, 2 * e, 4, 4) += el.m;
        k.block(2 * e, 2 * e, 4, 4) += el.k;
    }
    if (spec.boundary == Boundary::clamped_free) {
        return {m.bottomRightCorner(all - 2, all - 2), k.bottomRightCorner(all - 2, all - 2)};
    }
    return {m, k};
}

Eigen::Index dof_index(const BeamSpec& spec, int node, DofKind kind) {
    if (node < 0 || node > spec.elements) {
        throw DomainError("node " + std::to_string(node) + " is outside the beam mesh");
    }
    Eigen::Index idx = 2 * node + (kind == DofKind::rotation ? 1 : 0);
    if (spec.boundary == Boundary::clamped_free) {
        if (node == 0) throw DomainError("the clamped node has no free dofs");
        idx -= 2;
    }
    return idx;
}

Vector natural_frequencies(const Matrix& m, const Matrix& k) {
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(k, m, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw DomainError("mass matrix must be positive definite");
    const Vector lam = es.eigenvalues();
    const double top = lam.size() > 0 ? lam.maxCoeff() : 0.0;
    return lam.unaryExpr([top](double x) { return x <= kRigidFraction * top ? 0.0 : std::sqrt(x); });
}

StateSpaceModel modal_damped_statespace(const Matrix& m, const Matrix& k, double zeta,
                                        const Matrix& force_map, const Matrix& output_map) {
    const auto n = m.rows();
    if (m.cols() != n || k.rows() != n || k.cols() != n || force_map.rows() != n ||
        output_map.cols() != n) {
        throw DomainError("mass, stiffness and channel maps must agree in size");
    }
    if (!(zeta > 0.0 && zeta < 1.0)) throw DomainError("modal damping ratio must lie in (0, 1)");
    if (Eigen::LLT<Matrix>(m).info() != Eigen::Success) {
        throw DomainError("mass matrix must be positive definite");
    }
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(k, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw NumericalError("generalized eigenproblem failed");
    const Vector& lam = es.eigenvalues();
    const Matrix& phi = es.eigenvectors();  // mass-normalized
    const double top = n > 0 ? lam.maxCoeff() : 0.0;

    const Matrix modal_in = phi.transpose() * force_map;
    const Matrix modal_out = output_map * phi;
    Matrix a = Matrix::Zero(2 * n, 2 * n);
    Matrix b = Matrix::Zero(2 * n, force_map.cols());
    Matrix c = Matrix::Zero(output_map.rows(), 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index s = 2 * i;
        b.row(s + 1) = modal_in.row(i);
        if (lam(i) <= kRigidFraction * top) {
            a(s, s + 1) = 1.0;
            c.col(s) = modal_out.col(i);
        } else {
            const double w = std::sqrt(lam(i));
            a(s, s + 1) = w;
            a(s + 1, s) = -w;
            a(s + 1, s + 1) = -2.0 * zeta * w;
            c.col(s) = modal_out.col(i) / w;
        }
    }
    return {a, b, c, Matrix::Zero(output_map.rows(), force_map.cols())};
}

StateSpaceModel beam_model(const BeamSpec& spec, const IoMap& io) {
    const auto mats = assemble_beam(spec);
    const auto n = mats.m.rows();
    Matrix f = Matrix::Zero(n, static_cast<Eigen::Index>(io.inputs.size()));
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(io.outputs.size()), n);
    for (std::size_t i = 0; i < io.inputs.size(); ++i) {
        f(dof_index(spec, io.inputs[i].node, io.inputs[i].kind), static_cast<Eigen::Index>(i)) = 1.0;
    }
    for (std::size_t i = 0; i < io.outputs.size(); ++i) {
        s(static_cast<Eigen::Index>(i), dof_index(spec, io.outputs[i].node, io.outputs[i].kind)) = 1.0;
    }
    return modal_damped_statespace(mats.m, mats.k, spec.damping, f, s);
}

std::array<BeamSpec, 3> three_beam_specs(std::array<int, 3> elements) {
    std::array<BeamSpec, 3> s;
    s[0].length = 1.0;
    s[1].length = 0.4;
    s[2].length = 0.6;
    s[1].boundary = Boundary::free_free;
    for (std::size_t j = 0; j < 3; ++j) s[j].elements = elements[j];
    return s;
}

std::array<IoMap, 3> three_beam_io(std::span<const BeamSpec, 3> specs) {
    for (const auto& s : specs) s.validate();
    if (specs[0].boundary != Boundary::clamped_free || specs[1].boundary != Boundary::free_free ||
        specs[2].boundary != Boundary::clamped_free) {
        throw DomainError("beams 1 and 3 must be clamped-free and beam 2 free-free");
    }
    if (specs[1].elements % 2 != 0 || specs[2].elements % 2 != 0) {
        throw DomainError("beams 2 and 3 need an even number of elements to have a middle node");
    }
    using enum DofKind;
    constexpr auto coupling = ChannelRole::coupling;
    constexpr auto external = ChannelRole::external;
    const int tip1 = specs[0].elements, right2 = specs[1].elements, mid2 = specs[1].elements / 2;
    const int tip3 = specs[2].elements, mid3 = specs[2].elements / 2;
    std::array<IoMap, 3> io;
    io[0].inputs = {{tip1, translation, coupling}, {tip1, rotation, coupling}};
    io[0].outputs = io[0].inputs;
    io[1].inputs = {{0, translation, coupling},
                    {0, rotation, coupling},
                    {right2, translation, coupling},
                    {right2, rotation, coupling},
                    {mid2, translation, external}};
    io[1].outputs = {io[1].inputs.begin(), io[1].inputs.begin() + 4};
    io[2].inputs = {{tip3, translation, coupling}, {tip3, rotation, coupling}};
    io[2].outputs = {{tip3, translation, coupling}, {tip3, rotation, coupling}, {mid3, translation, external}};
    return io;
}

InterconnectedSystem build_three_beam_system(std::span<const BeamSpec, 3> specs, double k_t, double k_r) {
    if (!(k_t >= 0.0) || !(k_r >= 0.0) || !std::isfinite(k_t) || !std::isfinite(k_r)) {
        throw DomainError("spring stiffnesses must be nonnegative and finite");
    }
    const auto io = three_beam_io(specs);
    std::vector<StateSpaceModel> subs;
    for (std::size_t j = 0; j < 3; ++j) subs.push_back(beam_model(specs[j], io[j]));

    // u_b = (F1, M1 | F2l, M2l, F2r, M2r, F2mid | F3, M3)
    // y_b = (w1, t1 | w2l, t2l, w2r, t2r | w3, t3, w3mid)
    Matrix k11 = Matrix::Zero(9, 9);
    auto spring = [&k11](Eigen::Index in_a, Eigen::Index out_a, double sa, Eigen::Index in_b,
                         Eigen::Index out_b, double sb, double stiff) {
        // Relative displacement sb*y_b - sa*y_a in global sign, force +stiff on a, -stiff on b.
        k11(in_a, out_a) -= stiff * sa * sa;
        k11(in_a, out_b) += stiff * sa * sb;
        k11(in_b, out_b) -= stiff * sb * sb;
        k11(in_b, out_a) += stiff * sb * sa;
    };
    spring(0, 0, 1.0, 2, 2, 1.0, k_t);
    spring(1, 1, 1.0, 3, 3, 1.0, k_r);
    spring(4, 4, 1.0, 7, 6, 1.0, k_t);
    spring(5, 5, 1.0, 8, 7, -1.0, k_r);
    Matrix k12 = Matrix::Zero(9, 1);
    k12(6, 0) = 1.0;
    Matrix k21 = Matrix::Zero(1, 9);
    k21(0, 8) = 1.0;
    return {std::move(subs), k11, k12, k21, Matrix::Zero(1, 1)};
}

RequirementSpec beam_requirement(const InterconnectedSystem& sys, const BeamRequirement& params,
                                 unsigned workers) {
    const auto grid = make_log_grid(params.omega_lo, params.omega_hi, params.points);
    return build_interconnected_requirement(lft_close(sys), grid, params.beta1, params.beta2, workers);
}

}  // namespace modred
