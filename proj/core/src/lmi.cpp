#include "modred/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "modred/errors.hpp"

namespace modred::lmi {

std::string_view to_string(LmiStatus status) noexcept {
    switch (status) {
        case LmiStatus::optimal: return "optimal";
        case LmiStatus::infeasible: return "infeasible";
        case LmiStatus::max_iter: return "max_iter";
    }
    return "unknown";
}

namespace {

double hermitian_defect(const CMatrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    if (m.size() == 0) return 0.0;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

void require_hermitian(const CMatrix& m, const char* what) {
    if (hermitian_defect(m) > 1e-12) {
        throw DomainError(std::string(what) + " must be a square Hermitian matrix");
    }
}

}  // namespace

LmiProblem::LmiProblem(std::size_t num_vars)
    : num_vars_(num_vars),
      objective_(Vector::Zero(static_cast<Eigen::Index>(num_vars))),
      lower_(num_vars),
      upper_(num_vars) {}

std::size_t LmiProblem::add_block(CMatrix constant) {
    require_hermitian(constant, "LMI constant block");
    constants_.push_back(std::move(constant));
    coefficients_.emplace_back(num_vars_);
    return constants_.size() - 1;
}

void LmiProblem::set_coefficient(std::size_t block, std::size_t var, CMatrix coefficient) {
    if (block >= constants_.size() || var >= num_vars_) {
        throw DomainError("LMI coefficient index out of range");
    }
    if (coefficient.rows() != constants_[block].rows() ||
        coefficient.cols() != constants_[block].cols()) {
        throw DomainError("LMI coefficient block dimension does not match its constant term");
    }
    require_hermitian(coefficient, "LMI coefficient block");
    coefficients_[block][var] = std::move(coefficient);
}

void LmiProblem::set_objective(Vector c) {
    if (c.size() != static_cast<Eigen::Index>(num_vars_) || !c.allFinite()) {
        throw DomainError("LMI objective must be a finite vector of length num_vars");
    }
    objective_ = std::move(c);
}

void LmiProblem::set_lower_bound(std::size_t var, double lb) {
    if (var >= num_vars_ || !std::isfinite(lb)) throw DomainError("bad LMI lower bound");
    lower_[var] = lb;
}

void LmiProblem::set_upper_bound(std::size_t var, double ub) {
    if (var >= num_vars_ || !std::isfinite(ub)) throw DomainError("bad LMI upper bound");
    upper_[var] = ub;
}

const std::optional<CMatrix>& LmiProblem::coefficient(std::size_t block, std::size_t var) const {
    return coefficients_.at(block).at(var);
}

CMatrix LmiProblem::block_value(std::size_t block, const Vector& x) const {
    if (x.size() != static_cast<Eigen::Index>(num_vars_)) {
        throw DomainError("block_value: x has the wrong length");
    }
    CMatrix f = constants_.at(block);
    for (std::size_t i = 0; i < num_vars_; ++i) {
        if (const auto& c = coefficients_[block][i]) f += x(static_cast<Eigen::Index>(i)) * *c;
    }
    return f;
}

void LmiProblem::validate() const {
    for (std::size_t b = 0; b < constants_.size(); ++b) {
        require_hermitian(constants_[b], "LMI constant block");
        for (const auto& c : coefficients_[b]) {
            if (!c) continue;
            if (c->rows() != constants_[b].rows()) {
                throw DomainError("inconsistent LMI block dimensions");
            }
            require_hermitian(*c, "LMI coefficient block");
        }
    }
    for (std::size_t i = 0; i < num_vars_; ++i) {
        if (lower_[i] && upper_[i] && !(*lower_[i] < *upper_[i])) {
            throw DomainError("LMI variable bounds leave an empty interval");
        }
    }
}

Matrix real_embedding(const CMatrix& m) {
    const auto r = m.rows();
    const auto c = m.cols();
    Matrix e(2 * r, 2 * c);
    e.topLeftCorner(r, c) = m.real();
    e.topRightCorner(r, c) = -m.imag();
    e.bottomLeftCorner(r, c) = m.imag();
    e.bottomRightCorner(r, c) = m.real();
    return e;
}

double min_eigenvalue(const CMatrix& m) {
    require_hermitian(m, "matrix");
    if (m.size() == 0) return std::numeric_limits<double>::infinity();
    const CMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw NumericalError("Hermitian eigenvalue computation failed");
    }
    return es.eigenvalues()(0);
}

bool check_pd(const CMatrix& m, double margin) { return min_eigenvalue(m) > margin; }

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline double re(double v) { return v; }
inline double re(const Complex& v) { return v.real(); }

template <typename Scalar>
struct Triplet {
    Eigen::Index row;
    Eigen::Index col;
    Scalar value;
};

template <typename Scalar>
struct Coefficient {
    Eigen::Index var = 0;
    bool dense = false;
    Mat<Scalar> matrix;                   // used when dense
    std::vector<Triplet<Scalar>> entries;  // used when sparse
};

template <typename Scalar>
struct Block {
    Mat<Scalar> constant;  // margin already subtracted
    std::vector<Coefficient<Scalar>> coefficients;
};

template <typename Scalar>
Coefficient<Scalar> make_coefficient(Eigen::Index var, Mat<Scalar> m) {
    Coefficient<Scalar> c;
    c.var = var;
    std::vector<Triplet<Scalar>> entries;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != Scalar(0)) entries.push_back({i, j, m(i, j)});
        }
    }
    if (static_cast<Eigen::Index>(entries.size()) > m.rows()) {
        c.dense = true;
        c.matrix = std::move(m);
    } else {
        c.entries = std::move(entries);
    }
    return c;
}

template <typename Scalar>
Mat<Scalar> convert(const CMatrix& m) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return real_embedding(m);
    } else {
        return m;
    }
}

/// Internal problem: every constraint (LMI blocks and bounds) is a block
/// G_b(x) = constant + sum x_i C_i that must stay positive definite.
template <typename Scalar>
struct Compiled {
    Eigen::Index num_vars = 0;
    std::vector<Block<Scalar>> blocks;
    Vector objective;
    double nu = 0.0;  // barrier parameter: total block dimension
};

template <typename Scalar>
Compiled<Scalar> compile(const LmiProblem& p) {
    Compiled<Scalar> out;
    out.num_vars = static_cast<Eigen::Index>(p.num_vars());
    out.objective = p.objective();
    for (std::size_t b = 0; b < p.num_blocks(); ++b) {
        Block<Scalar> blk;
        blk.constant = convert<Scalar>(p.constant(b));
        blk.constant.diagonal().array() -= Scalar(p.margin());
        for (std::size_t i = 0; i < p.num_vars(); ++i) {
            if (const auto& c = p.coefficient(b, i)) {
                auto coef = make_coefficient<Scalar>(static_cast<Eigen::Index>(i), convert<Scalar>(*c));
                if (coef.dense || !coef.entries.empty()) blk.coefficients.push_back(std::move(coef));
            }
        }
        out.nu += static_cast<double>(blk.constant.rows());
        out.blocks.push_back(std::move(blk));
    }
    for (std::size_t i = 0; i < p.num_vars(); ++i) {
        const auto var = static_cast<Eigen::Index>(i);
        if (const auto lb = p.lower_bounds()[i]) {
            Block<Scalar> blk;
            blk.constant = Mat<Scalar>::Constant(1, 1, Scalar(-*lb));
            blk.coefficients.push_back(make_coefficient<Scalar>(var, Mat<Scalar>::Constant(1, 1, Scalar(1))));
            out.nu += 1.0;
            out.blocks.push_back(std::move(blk));
        }
        if (const auto ub = p.upper_bounds()[i]) {
            Block<Scalar> blk;
            blk.constant = Mat<Scalar>::Constant(1, 1, Scalar(*ub));
            blk.coefficients.push_back(make_coefficient<Scalar>(var, Mat<Scalar>::Constant(1, 1, Scalar(-1))));
            out.nu += 1.0;
            out.blocks.push_back(std::move(blk));
        }
    }
    return out;
}

template <typename Scalar>
Mat<Scalar> block_at(const Block<Scalar>& blk, const Vector& x) {
    Mat<Scalar> g = blk.constant;
    for (const auto& c : blk.coefficients) {
        const double xi = x(c.var);
        if (xi == 0.0) continue;
        if (c.dense) {
            g += Scalar(xi) * c.matrix;
        } else {
            for (const auto& t : c.entries) g(t.row, t.col) += Scalar(xi) * t.value;
        }
    }
    return g;
}

/// -sum log det G_b(x); nullopt when x is not strictly feasible.
template <typename Scalar>
std::optional<double> barrier_value(const Compiled<Scalar>& p, const Vector& x) {
    double phi = 0.0;
    for (const auto& blk : p.blocks) {
        const Mat<Scalar> g = block_at(blk, x);
        if (g.rows() == 1) {
            const double v = re(g(0, 0));
            if (!(v > 0.0)) return std::nullopt;
            phi -= std::log(v);
            continue;
        }
        Eigen::LLT<Mat<Scalar>> llt(g);
        if (llt.info() != Eigen::Success) return std::nullopt;
        const auto diag = llt.matrixLLT().diagonal();
        for (Eigen::Index i = 0; i < diag.size(); ++i) {
            const double d = re(diag(i));
            if (!(d > 0.0)) return std::nullopt;
            phi -= 2.0 * std::log(d);
        }
    }
    if (!std::isfinite(phi)) return std::nullopt;
    return phi;
}

template <typename Scalar>
void barrier_derivatives(const Compiled<Scalar>& p, const Vector& x, Vector& grad, Matrix& hess) {
    const auto nv = p.num_vars;
    grad.setZero(nv);
    hess.setZero(nv, nv);
    for (const auto& blk : p.blocks) {
        if (blk.coefficients.empty()) continue;
        const Mat<Scalar> g = block_at(blk, x);
        const auto n = g.rows();
        if (n == 1) {
            const double inv = 1.0 / re(g(0, 0));
            for (const auto& ci : blk.coefficients) {
                const double ai = re(ci.dense ? ci.matrix(0, 0) : ci.entries.front().value);
                grad(ci.var) -= ai * inv;
                for (const auto& cj : blk.coefficients) {
                    const double aj = re(cj.dense ? cj.matrix(0, 0) : cj.entries.front().value);
                    hess(ci.var, cj.var) += ai * aj * inv * inv;
                }
            }
            continue;
        }
        Eigen::LLT<Mat<Scalar>> llt(g);
        const Mat<Scalar> s = llt.solve(Mat<Scalar>::Identity(n, n));
        const auto nc = blk.coefficients.size();
        std::vector<Mat<Scalar>> p_mat(nc);   // S^{-1} F_k for dense coefficients
        std::vector<Mat<Scalar>> g_mat(nc);   // S^{-1} F_k S^{-1}
        for (std::size_t k = 0; k < nc; ++k) {
            const auto& c = blk.coefficients[k];
            Scalar tr(0);
            if (c.dense) {
                p_mat[k] = s * c.matrix;
                g_mat[k] = p_mat[k] * s;
                tr = p_mat[k].trace();
            } else {
                for (const auto& t : c.entries) tr += t.value * s(t.col, t.row);
            }
            grad(c.var) -= re(tr);
        }
        for (std::size_t k = 0; k < nc; ++k) {
            const auto& ck = blk.coefficients[k];
            for (std::size_t l = k; l < nc; ++l) {
                const auto& cl = blk.coefficients[l];
                Scalar h(0);
                if (!ck.dense && !cl.dense) {
                    for (const auto& a : ck.entries) {
                        for (const auto& b : cl.entries) {
                            h += a.value * b.value * s(a.col, b.row) * s(b.col, a.row);
                        }
                    }
                } else if (ck.dense && !cl.dense) {
                    for (const auto& b : cl.entries) h += b.value * g_mat[k](b.col, b.row);
                } else if (!ck.dense && cl.dense) {
                    for (const auto& a : ck.entries) h += a.value * g_mat[l](a.col, a.row);
                } else {
                    h = (p_mat[k].transpose().cwiseProduct(p_mat[l])).sum();
                }
                const double v = re(h);
                hess(ck.var, cl.var) += v;
                if (l != k) hess(cl.var, ck.var) += v;
            }
        }
    }
}

template <typename Scalar>
double min_margin(const Compiled<Scalar>& p, const Vector& x) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& blk : p.blocks) {
        const Mat<Scalar> g = block_at(blk, x);
        if (g.rows() == 1) {
            m = std::min(m, re(g(0, 0)));
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(g, Eigen::EigenvaluesOnly);
        m = std::min(m, es.eigenvalues()(0));
    }
    return m;
}

/// Solves H dx = rhs with Jacobi scaling and a small ridge if needed.
Vector newton_solve(const Matrix& hess, const Vector& rhs) {
    const auto n = hess.rows();
    Vector d = hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Matrix scaled = d.asDiagonal() * hess * d.asDiagonal();
    Eigen::LDLT<Matrix> ldlt(scaled);
    if (ldlt.info() != Eigen::Success || !(ldlt.isPositive())) {
        scaled.diagonal().array() += 1e-12;
        ldlt.compute(scaled);
    }
    Vector y = ldlt.solve(d.cwiseProduct(rhs));
    if (!y.allFinite()) {
        scaled.diagonal().array() += 1e-8;
        ldlt.compute(scaled);
        y = ldlt.solve(d.cwiseProduct(rhs));
    }
    (void)n;
    return d.cwiseProduct(y);
}

enum class CenterResult { converged, stalled, budget, unbounded };

/// Damped Newton minimization of t c^T x + phi(x) from a strictly feasible x.
template <typename Scalar>
CenterResult center(const Compiled<Scalar>& p, double t, Vector& x, int& iterations, int max_iter,
                    const std::function<bool(const Vector&)>& early_stop) {
    Vector grad;
    Matrix hess;
    std::optional<double> phi = barrier_value(p, x);
    if (!phi) return CenterResult::stalled;
    for (int inner = 0; inner < 100; ++inner) {
        if (iterations >= max_iter) return CenterResult::budget;
        barrier_derivatives(p, x, grad, hess);
        const Vector g = t * p.objective + grad;
        const Vector dx = newton_solve(hess, -g);
        const double lambda2 = -g.dot(dx);
        ++iterations;
        if (!(lambda2 >= 0.0) || !dx.allFinite()) return CenterResult::stalled;
        if (lambda2 < 1e-10) return CenterResult::converged;

        const double slope = g.dot(dx);
        double alpha = 1.0;
        std::optional<double> trial;
        for (int ls = 0; ls < 80; ++ls) {
            const Vector xn = x + alpha * dx;
            trial = barrier_value(p, xn);
            if (trial) {
                const double df = t * alpha * p.objective.dot(dx) + (*trial - *phi);
                if (df <= 0.25 * alpha * slope) break;
            }
            trial.reset();
            alpha *= 0.5;
        }
        if (!trial) {
            // Rounding swamps the Armijo test once the decrement is tiny.
            return lambda2 < 1e-6 ? CenterResult::converged : CenterResult::stalled;
        }
        x += alpha * dx;
        phi = trial;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e30) return CenterResult::unbounded;
        if (early_stop && early_stop(x)) return CenterResult::converged;
    }
    return CenterResult::converged;
}

template <typename Scalar>
Vector default_start(const LmiProblem& problem) {
    const auto n = static_cast<Eigen::Index>(problem.num_vars());
    Vector x = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& lb = problem.lower_bounds()[static_cast<std::size_t>(i)];
        const auto& ub = problem.upper_bounds()[static_cast<std::size_t>(i)];
        if (lb && ub) {
            x(i) = 0.5 * (*lb + *ub);
        } else if (lb) {
            x(i) = std::max(0.0, *lb + 1.0);
        } else if (ub) {
            x(i) = std::min(0.0, *ub - 1.0);
        }
    }
    return x;
}

/// Phase I: minimize s subject to G_b(x) + s I > 0 and s >= -1.
template <typename Scalar>
std::optional<Vector> phase_one(const Compiled<Scalar>& p, const Vector& start, int& iterations,
                                int max_iter, double gap_tol, bool& certified_infeasible) {
    certified_infeasible = false;
    Compiled<Scalar> aug;
    aug.num_vars = p.num_vars + 1;
    const Eigen::Index s_var = p.num_vars;
    aug.objective = Vector::Zero(aug.num_vars);
    aug.objective(s_var) = 1.0;
    aug.nu = p.nu + 1.0;
    for (const auto& blk : p.blocks) {
        Block<Scalar> b = blk;
        b.coefficients.push_back(
            make_coefficient<Scalar>(s_var, Mat<Scalar>::Identity(blk.constant.rows(), blk.constant.rows())));
        aug.blocks.push_back(std::move(b));
    }
    {
        Block<Scalar> floor;
        floor.constant = Mat<Scalar>::Constant(1, 1, Scalar(1));
        floor.coefficients.push_back(make_coefficient<Scalar>(s_var, Mat<Scalar>::Constant(1, 1, Scalar(1))));
        aug.blocks.push_back(std::move(floor));
    }
    const double worst = min_margin(p, start);
    Vector z(aug.num_vars);
    z.head(p.num_vars) = start;
    z(s_var) = std::max(0.0, -worst) + 1.0;

    const double target = -1e-6;
    auto feasible_enough = [&](const Vector& v) { return v(s_var) < target; };
    if (feasible_enough(z)) return z.head(p.num_vars);

    double t = 1.0;
    for (int outer = 0; outer < 60; ++outer) {
        const auto res = center(aug, t, z, iterations, max_iter, feasible_enough);
        if (feasible_enough(z)) return z.head(p.num_vars);
        if (res == CenterResult::budget || res == CenterResult::unbounded) return std::nullopt;
        // At a central point the optimum of s is at least s - nu/t.
        if (res == CenterResult::converged && z(s_var) - aug.nu / t > 0.0) {
            certified_infeasible = true;
            return std::nullopt;
        }
        if (aug.nu / t < gap_tol * 1e-2) {
            certified_infeasible = z(s_var) >= 0.0;
            return std::nullopt;
        }
        t *= 10.0;
    }
    certified_infeasible = z(s_var) >= 0.0;
    return std::nullopt;
}

template <typename Scalar>
LmiSolution solve_impl(const LmiProblem& problem, const LmiOptions& options) {
    const Compiled<Scalar> p = compile<Scalar>(problem);
    LmiSolution sol;
    int iterations = 0;

    Vector x;
    bool need_phase_one = true;
    if (options.initial_point) {
        if (options.initial_point->size() != p.num_vars) {
            throw DomainError("initial_point has the wrong length");
        }
        x = *options.initial_point;
        need_phase_one = !barrier_value(p, x).has_value();
    } else {
        x = default_start<Scalar>(problem);
        need_phase_one = !barrier_value(p, x).has_value();
    }
    if (need_phase_one) {
        bool infeasible = false;
        auto found = phase_one(p, x, iterations, options.max_iter, options.gap_tol, infeasible);
        if (!found) {
            sol.status = infeasible ? LmiStatus::infeasible : LmiStatus::max_iter;
            sol.x = x;
            sol.objective_value = p.objective.dot(x);
            sol.min_eig_margin = min_margin(p, x);
            sol.iterations = iterations;
            return sol;
        }
        x = *found;
    }

    auto finish = [&](LmiStatus status) {
        sol.status = status;
        sol.x = x;
        sol.objective_value = p.objective.dot(x);
        sol.min_eig_margin = min_margin(p, x);
        sol.iterations = iterations;
        return sol;
    };

    const std::function<bool(const Vector&)> no_stop;
    if (p.objective.cwiseAbs().maxCoeff() == 0.0 || p.num_vars == 0) {
        // Pure feasibility: one centering step gives a well-interior point.
        if (p.num_vars > 0) center(p, 0.0, x, iterations, options.max_iter, no_stop);
        return finish(LmiStatus::optimal);
    }

    // Initial t from the least-squares fit of t c + grad phi = 0.
    Vector grad;
    Matrix hess;
    barrier_derivatives(p, x, grad, hess);
    const Vector hc = newton_solve(hess, p.objective);
    const Vector hg = newton_solve(hess, grad);
    double t = -p.objective.dot(hg) / p.objective.dot(hc);
    const double fallback = p.nu / std::max(1.0, std::abs(p.objective.dot(x)));
    if (!std::isfinite(t) || t <= 0.0) t = fallback;
    t = std::clamp(t, 1e-3 * fallback, 1e6 * fallback);

    constexpr double kGrowth = 20.0;
    for (int outer = 0; outer < 200; ++outer) {
        const auto res = center(p, t, x, iterations, options.max_iter, no_stop);
        if (res == CenterResult::budget) return finish(LmiStatus::max_iter);
        if (res == CenterResult::unbounded) return finish(LmiStatus::max_iter);
        const double obj = p.objective.dot(x);
        if (p.nu / t <= options.gap_tol * std::max(1.0, std::abs(obj))) {
            return finish(LmiStatus::optimal);
        }
        if (res == CenterResult::stalled) return finish(LmiStatus::max_iter);
        t *= kGrowth;
    }
    return finish(LmiStatus::max_iter);
}

}  // namespace

LmiSolution solve_sdp(const LmiProblem& problem, const LmiOptions& options) {
    problem.validate();
    if (!(options.feas_tol > 0.0) || !(options.gap_tol > 0.0) || options.max_iter <= 0) {
        throw DomainError("LMI solver tolerances must be positive");
    }
    LmiSolution sol = options.embedding == Embedding::real ? solve_impl<double>(problem, options)
                                                           : solve_impl<Complex>(problem, options);
    if (sol.status == LmiStatus::optimal && sol.min_eig_margin < -options.feas_tol) {
        sol.status = LmiStatus::max_iter;
    }
    return sol;
}

}  // namespace modred::lmi
