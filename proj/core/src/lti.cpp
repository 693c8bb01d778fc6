#include "modred/lti.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "modred/errors.hpp"

namespace modred {

namespace {

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) {
        throw DomainError(std::string("state-space matrix ") + name + " has non-finite entries");
    }
}

std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Reciprocal condition below this is treated as singular.
constexpr double kSingularRcond = 1e-14;

}  // namespace

StateSpaceModel::StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    const auto n = a_.rows();
    // A 0-state model may carry B as 0x0 / C as 0x0; normalize to 0xm, px0.
    if (n == 0) {
        b_.resize(0, d_.cols());
        c_.resize(d_.rows(), 0);
    }
    if (a_.cols() != n || b_.rows() != n || c_.cols() != n || b_.cols() != d_.cols() ||
        c_.rows() != d_.rows()) {
        throw DomainError("inconsistent state-space dimensions: A " + dims(a_) + ", B " + dims(b_) +
                          ", C " + dims(c_) + ", D " + dims(d_));
    }
    require_finite(a_, "A");
    require_finite(b_, "B");
    require_finite(c_, "C");
    require_finite(d_, "D");
}

StateSpaceModel StateSpaceModel::static_gain(Matrix d) {
    const auto p = d.rows();
    const auto m = d.cols();
    return {Matrix(0, 0), Matrix(0, m), Matrix(p, 0), std::move(d)};
}

InterconnectedSystem::InterconnectedSystem(std::vector<StateSpaceModel> subsystems, Matrix k11,
                                           Matrix k12, Matrix k21, Matrix k22)
    : subsystems_(std::move(subsystems)),
      k11_(std::move(k11)),
      k12_(std::move(k12)),
      k21_(std::move(k21)),
      k22_(std::move(k22)) {
    if (subsystems_.empty()) {
        throw DomainError("an interconnected system needs at least one subsystem");
    }
    Eigen::Index mb = 0;
    Eigen::Index pb = 0;
    for (const auto& g : subsystems_) {
        mb += g.inputs();
        pb += g.outputs();
    }
    if (k11_.rows() != mb || k11_.cols() != pb) {
        throw DomainError("K11 must be " + std::to_string(mb) + "x" + std::to_string(pb) +
                          " (sum of subsystem inputs x outputs), got " + dims(k11_));
    }
    if (k12_.rows() != mb || k21_.cols() != pb || k22_.rows() != k21_.rows() ||
        k22_.cols() != k12_.cols()) {
        throw DomainError("inconsistent interconnection blocks: K12 " + dims(k12_) + ", K21 " +
                          dims(k21_) + ", K22 " + dims(k22_));
    }
    for (const Matrix* k : {&k11_, &k12_, &k21_, &k22_}) {
        if (!k->allFinite()) {
            throw DomainError("interconnection matrix has non-finite entries");
        }
    }
    // Well-posedness: I - K11 D_b invertible.
    const Matrix db = block_diag(subsystems_).d();
    const Matrix loop = Matrix::Identity(mb, mb) - k11_ * db;
    if (mb > 0) {
        Eigen::PartialPivLU<Matrix> lu(loop);
        if (!(lu.rcond() > kSingularRcond)) {
            throw NumericalError("ill-posed interconnection: I - K11*D_b is singular");
        }
    }
}

Eigen::Index InterconnectedSystem::input_offset(std::size_t j) const {
    if (j >= subsystems_.size()) {
        throw DomainError("subsystem index out of range");
    }
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < j; ++i) off += subsystems_[i].inputs();
    return off;
}

Eigen::Index InterconnectedSystem::output_offset(std::size_t j) const {
    if (j >= subsystems_.size()) {
        throw DomainError("subsystem index out of range");
    }
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < j; ++i) off += subsystems_[i].outputs();
    return off;
}

InterconnectedSystem InterconnectedSystem::with_subsystems(
    std::vector<StateSpaceModel> replaced) const {
    if (replaced.size() != subsystems_.size()) {
        throw DomainError("replacement must provide one model per subsystem");
    }
    for (std::size_t j = 0; j < replaced.size(); ++j) {
        if (replaced[j].inputs() != subsystems_[j].inputs() ||
            replaced[j].outputs() != subsystems_[j].outputs()) {
            throw DomainError("replacement model " + std::to_string(j + 1) +
                              " changes the subsystem input/output dimensions");
        }
    }
    return {std::move(replaced), k11_, k12_, k21_, k22_};
}

CMatrix freq_response(const StateSpaceModel& model, double omega) {
    if (!std::isfinite(omega)) {
        throw DomainError("frequency must be finite");
    }
    const auto n = model.states();
    CMatrix d = model.d().cast<Complex>();
    if (n == 0) {
        return d;
    }
    CMatrix shifted = -model.a().cast<Complex>();
    shifted.diagonal().array() += Complex(0.0, omega);
    Eigen::PartialPivLU<CMatrix> lu(shifted);
    if (!(lu.rcond() > kSingularRcond)) {
        throw NumericalError("frequency coincides with pole at omega = " + std::to_string(omega));
    }
    const CMatrix x = lu.solve(model.b().cast<Complex>());
    return model.c().cast<Complex>() * x + d;
}

StateSpaceModel block_diag(std::span<const StateSpaceModel> models) {
    if (models.empty()) {
        throw DomainError("block_diag needs at least one model");
    }
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Eigen::Index p = 0;
    for (const auto& g : models) {
        n += g.states();
        m += g.inputs();
        p += g.outputs();
    }
    Matrix a = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(n, m);
    Matrix c = Matrix::Zero(p, n);
    Matrix d = Matrix::Zero(p, m);
    Eigen::Index on = 0;
    Eigen::Index om = 0;
    Eigen::Index op = 0;
    for (const auto& g : models) {
        const auto gn = g.states();
        const auto gm = g.inputs();
        const auto gp = g.outputs();
        a.block(on, on, gn, gn) = g.a();
        b.block(on, om, gn, gm) = g.b();
        c.block(op, on, gp, gn) = g.c();
        d.block(op, om, gp, gm) = g.d();
        on += gn;
        om += gm;
        op += gp;
    }
    return {std::move(a), std::move(b), std::move(c), std::move(d)};
}

CMatrix block_diag(std::span<const CMatrix> blocks) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    CMatrix out = CMatrix::Zero(rows, cols);
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

StateSpaceModel lft_close(const InterconnectedSystem& sys) {
    const StateSpaceModel gb = block_diag(sys.subsystems());
    const auto pb = sys.pb();
    // y_b = Z (C x + D K12 u_c) with Z = (I - D K11)^{-1}.
    const Matrix loop = Matrix::Identity(pb, pb) - gb.d() * sys.k11();
    Eigen::PartialPivLU<Matrix> lu(loop);
    if (pb > 0 && !(lu.rcond() > kSingularRcond)) {
        throw NumericalError("ill-posed interconnection: I - K11*D_b is singular");
    }
    const Matrix zc = pb > 0 ? Matrix(lu.solve(gb.c())) : Matrix(0, gb.states());
    const Matrix zdk12 = pb > 0 ? Matrix(lu.solve(gb.d() * sys.k12())) : Matrix(0, sys.mc());

    Matrix a = gb.a() + gb.b() * sys.k11() * zc;
    Matrix b = gb.b() * (sys.k11() * zdk12 + sys.k12());
    Matrix c = sys.k21() * zc;
    Matrix d = sys.k21() * zdk12 + sys.k22();
    return {std::move(a), std::move(b), std::move(c), std::move(d)};
}

CMatrix lft_response(const InterconnectedSystem& sys, const CMatrix& gb) {
    if (gb.rows() != sys.pb() || gb.cols() != sys.mb()) {
        throw DomainError("G_b response has the wrong shape for this interconnection");
    }
    const CMatrix k11 = sys.k11().cast<Complex>();
    const CMatrix loop = CMatrix::Identity(sys.mb(), sys.mb()) - k11 * gb;
    Eigen::PartialPivLU<CMatrix> lu(loop);
    if (sys.mb() > 0 && !(lu.rcond() > kSingularRcond)) {
        throw NumericalError("ill-posed interconnection at this frequency");
    }
    const CMatrix inner =
        sys.mb() > 0 ? CMatrix(lu.solve(sys.k12().cast<Complex>())) : CMatrix(0, sys.mc());
    return sys.k21().cast<Complex>() * gb * inner + sys.k22().cast<Complex>();
}

StateSpaceModel error_system(const StateSpaceModel& full, const StateSpaceModel& reduced) {
    if (full.inputs() != reduced.inputs() || full.outputs() != reduced.outputs()) {
        throw DomainError("error_system needs models with identical input/output dimensions");
    }
    const auto n = full.states();
    const auto r = reduced.states();
    Matrix a = Matrix::Zero(n + r, n + r);
    a.topLeftCorner(n, n) = full.a();
    a.bottomRightCorner(r, r) = reduced.a();
    Matrix b(n + r, full.inputs());
    b << full.b(), reduced.b();
    Matrix c(full.outputs(), n + r);
    c << -full.c(), reduced.c();
    Matrix d = reduced.d() - full.d();
    return {std::move(a), std::move(b), std::move(c), std::move(d)};
}

StabilityInfo stability_check(const StateSpaceModel& model) {
    if (model.states() == 0) {
        return {true, -std::numeric_limits<double>::infinity()};
    }
    Eigen::EigenSolver<Matrix> es(model.a(), false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigenvalue computation failed in stability_check");
    }
    const double abscissa = es.eigenvalues().real().maxCoeff();
    return {abscissa < 0.0, abscissa};
}

}  // namespace modred
