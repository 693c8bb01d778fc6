#include "modred/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "modred/parallel.hpp"

namespace modred {

Eigen::Index BlockStructure::mb() const {
    return std::accumulate(inputs.begin(), inputs.end(), Eigen::Index{0});
}

Eigen::Index BlockStructure::pb() const {
    return std::accumulate(outputs.begin(), outputs.end(), Eigen::Index{0});
}

BlockStructure BlockStructure::of(const InterconnectedSystem& sys) {
    BlockStructure b;
    for (const auto& g : sys.subsystems()) {
        b.inputs.push_back(g.inputs());
        b.outputs.push_back(g.outputs());
    }
    return b;
}

RequirementSpec::RequirementSpec(FrequencyGrid g, std::vector<Vector> v, std::vector<Vector> w)
    : grid(std::move(g)), v_c(std::move(v)), w_c(std::move(w)) {
    if (v_c.size() != grid.size() || w_c.size() != grid.size()) {
        throw DomainError("requirement must be defined on every grid frequency");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool ok = v_c[i].size() > 0 && w_c[i].size() > 0 && v_c[i].allFinite() &&
                        w_c[i].allFinite() && v_c[i].minCoeff() > 0.0 && w_c[i].minCoeff() > 0.0 &&
                        v_c[i].size() == v_c.front().size() && w_c[i].size() == w_c.front().size();
        if (!ok) throw DomainError("requirement scalings must be positive and finite");
    }
}

RequirementSpec build_interconnected_requirement(const StateSpaceModel& gc,
                                                 const FrequencyGrid& grid, double beta1,
                                                 double beta2, unsigned workers) {
    if (!(beta1 > 0.0) || !(beta2 > 0.0) || !std::isfinite(beta1) || !std::isfinite(beta2)) {
        throw DomainError("beta1 and beta2 must be positive and finite");
    }
    const auto responses = sweep_response(gc, grid, workers);
    std::vector<Vector> v(grid.size()), w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vector mag = responses[i].cwiseAbs().rowwise().maxCoeff();
        v[i] = (beta1 * mag).cwiseMax(beta2).cwiseInverse();
        w[i] = Vector::Ones(gc.inputs());
    }
    return {grid, std::move(v), std::move(w)};
}

RequirementInfeasible::RequirementInfeasible(double omega, const std::string& what)
    : NumericalError(what), omega_(omega) {}

namespace {

void require_positive(const Vector& v, const char* what) {
    if (v.size() > 0 && !(v.allFinite() && v.minCoeff() > 0.0)) {
        throw DomainError(std::string(what) + " must have positive finite entries");
    }
}

// Diagonals of V (m_b + p_c) and W (p_b + m_c) in the row/column order of N.
struct Stacked {
    Vector v;
    Vector w;
};

Stacked stack(const BlockStructure& blocks, const Scalings& s) {
    const auto k = blocks.count();
    if (s.v.size() != k || s.w.size() != k) {
        throw DomainError("scalings do not match the number of subsystems");
    }
    Stacked out;
    out.v.resize(blocks.mb() + s.v_c.size());
    out.w.resize(blocks.pb() + s.w_c.size());
    Eigen::Index rv = 0, rw = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (s.v[j].size() != blocks.inputs[j] || s.w[j].size() != blocks.outputs[j]) {
            throw DomainError("scaling length does not match the subsystem dimensions");
        }
        require_positive(s.v[j], "v_j");
        require_positive(s.w[j], "w_j");
        out.v.segment(rv, s.v[j].size()) = s.v[j];
        out.w.segment(rw, s.w[j].size()) = s.w[j];
        rv += s.v[j].size();
        rw += s.w[j].size();
    }
    require_positive(s.v_c, "v_c");
    require_positive(s.w_c, "w_c");
    out.v.tail(s.v_c.size()) = s.v_c;
    out.w.tail(s.w_c.size()) = s.w_c;
    return out;
}

// D_l (rows of N) and D_r (columns of N) diagonals.
Stacked stack_d(const BlockStructure& blocks, const DScalings& d, Eigen::Index pc,
                Eigen::Index mc) {
    const auto k = blocks.count();
    if (static_cast<std::size_t>(d.d.size()) != k) {
        throw DomainError("D-scalings do not match the number of subsystems");
    }
    require_positive(d.d, "d");
    if (!(d.d_c > 0.0) || !std::isfinite(d.d_c)) throw DomainError("d_c must be positive");
    Stacked out;
    out.v.resize(blocks.mb() + pc);
    out.w.resize(blocks.pb() + mc);
    Eigen::Index rv = 0, rw = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const auto dj = d.d(static_cast<Eigen::Index>(j));
        out.v.segment(rv, blocks.inputs[j]).setConstant(dj);
        out.w.segment(rw, blocks.outputs[j]).setConstant(dj);
        rv += blocks.inputs[j];
        rw += blocks.outputs[j];
    }
    out.v.tail(pc).setConstant(d.d_c);
    out.w.tail(mc).setConstant(d.d_c);
    return out;
}

void check_n_shape(const CMatrix& n, const BlockStructure& blocks, Eigen::Index pc,
                   Eigen::Index mc) {
    if (n.rows() != blocks.mb() + pc || n.cols() != blocks.pb() + mc) {
        throw DomainError("N does not match the subsystem and external dimensions");
    }
}

double sigma_or_inf(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    if (!m.allFinite()) return std::numeric_limits<double>::infinity();
    return sigma_max(m);
}

// D_l^-1/2 N D_r^1/2: the D-scaled nominal matrix.
CMatrix d_scaled(const CMatrix& n, const Stacked& dd) {
    return dd.v.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * n *
           dd.w.cwiseSqrt().cast<Complex>().asDiagonal();
}

CMatrix vw_scaled(const CMatrix& nd, const Vector& v, const Vector& w) {
    return v.cast<Complex>().asDiagonal() * nd * w.cast<Complex>().asDiagonal();
}

Scalings unstack(const BlockStructure& blocks, const Vector& vb, const Vector& wb,
                 const Vector& v_c, const Vector& w_c) {
    Scalings s;
    Eigen::Index rv = 0, rw = 0;
    for (std::size_t j = 0; j < blocks.count(); ++j) {
        s.v.push_back(vb.segment(rv, blocks.inputs[j]));
        s.w.push_back(wb.segment(rw, blocks.outputs[j]));
        rv += blocks.inputs[j];
        rw += blocks.outputs[j];
    }
    s.v_c = v_c;
    s.w_c = w_c;
    return s;
}

std::vector<double> weights(std::span<const double> alpha, std::size_t k) {
    if (alpha.empty()) return std::vector<double>(k, 1.0);
    if (alpha.size() != k) throw DomainError("alpha must have one weight per subsystem");
    for (double a : alpha) {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("alpha weights must be positive");
    }
    return {alpha.begin(), alpha.end()};
}

// Per-entry objective weights alpha_j for the stacked b-parts.
void entry_weights(const BlockStructure& blocks, const std::vector<double>& alpha, Vector& av,
                   Vector& aw) {
    av.resize(blocks.mb());
    aw.resize(blocks.pb());
    Eigen::Index rv = 0, rw = 0;
    for (std::size_t j = 0; j < blocks.count(); ++j) {
        av.segment(rv, blocks.inputs[j]).setConstant(alpha[j]);
        aw.segment(rw, blocks.outputs[j]).setConstant(alpha[j]);
        rv += blocks.inputs[j];
        rw += blocks.outputs[j];
    }
}

double stacked_cost(const Vector& vb, const Vector& wb, const Vector& av, const Vector& aw) {
    return av.dot(vb.array().square().inverse().matrix()) +
           aw.dot(wb.array().square().inverse().matrix());
}

// Shrinks the subsystem scalings until 1 - sigma_max of the scaled matrix
// reaches `target`. Returns false if that is impossible.
bool enforce_margin(const CMatrix& nd, Vector& vb, Vector& wb, const Vector& v_c,
                    const Vector& w_c, double target) {
    Vector v(vb.size() + v_c.size()), w(wb.size() + w_c.size());
    v << vb, v_c;
    w << wb, w_c;
    double sigma = sigma_or_inf(vw_scaled(nd, v, w));
    // N11 scales with 1/s, N12 and N21 with 1/sqrt(s), the external block not
    // at all, so one step need not be enough.
    for (int iter = 0; iter < 60; ++iter) {
        if (!std::isfinite(sigma)) return false;
        if (sigma <= 1.0 - target) return true;
        const double s = std::max((sigma / (1.0 - target)) * (sigma / (1.0 - target)), 1.0 + 1e-9);
        vb /= std::sqrt(s);
        wb /= std::sqrt(s);
        v << vb, v_c;
        w << wb, w_c;
        sigma = sigma_or_inf(vw_scaled(nd, v, w));
    }
    return sigma <= 1.0 - target;
}

}  // namespace

CheckResult theorem1_check(const NominalMatrix& n, const BlockStructure& blocks, const Scalings& s,
                           const DScalings& d, double pd_margin) {
    const CMatrix full = n.full();
    const Stacked vw = stack(blocks, s);
    check_n_shape(full, blocks, s.v_c.size(), s.w_c.size());
    const Stacked dd = stack_d(blocks, d, s.v_c.size(), s.w_c.size());
    const double sigma = sigma_or_inf(vw_scaled(d_scaled(full, dd), vw.v, vw.w));
    CheckResult r;
    r.margin = 1.0 - sigma;
    r.pass = r.margin > pd_margin;
    return r;
}

double scaling_cost(const Scalings& s, std::span<const double> alpha) {
    const auto a = weights(alpha, s.v.size());
    double cost = 0.0;
    for (std::size_t j = 0; j < s.v.size(); ++j) {
        cost += a[j] * (s.v[j].array().square().inverse().sum() +
                        s.w[j].array().square().inverse().sum());
    }
    return cost;
}

Scalings solve_vw_step(const NominalMatrix& n, const BlockStructure& blocks, const DScalings& d,
                       const Vector& v_c, const Vector& w_c, std::span<const double> alpha,
                       const SynthesisOptions& options,
                       const std::optional<Scalings>& reference) {
    const CMatrix full = n.full();
    check_n_shape(full, blocks, v_c.size(), w_c.size());
    require_positive(v_c, "v_c");
    require_positive(w_c, "w_c");
    const auto a = weights(alpha, blocks.count());
    const Eigen::Index mb = blocks.mb(), pb = blocks.pb();
    const Eigen::Index rows = full.rows(), cols = full.cols();
    const CMatrix nd = d_scaled(full, stack_d(blocks, d, v_c.size(), w_c.size()));
    const double cap = 1.0 / std::sqrt(options.budget_floor);
    const double target = std::max(1e-8, 2.0 * options.pd_margin);
    Vector av, aw;
    entry_weights(blocks, a, av, aw);

    auto fail = [&](const std::string& why) {
        std::ostringstream msg;
        msg << "requirement unachievable at omega=" << format_double(n.omega)
            << " with current D: " << why;
        return RequirementInfeasible(n.omega, msg.str());
    };

    Vector vb(mb), wb(pb);
    bool have_ref = false;
    if (reference && theorem1_check(n, blocks, *reference, d, options.pd_margin).pass) {
        const Stacked r = stack(blocks, *reference);
        vb = r.v.head(mb).cwiseMin(cap);
        wb = r.w.head(pb).cwiseMin(cap);
        have_ref = true;
    }
    if (!have_ref) {
        // Feasible start: row/column equilibration of the external coupling
        // followed by a common factor sigma with sigma^2 a + sigma b = budget.
        CMatrix nh = nd;
        nh.bottomRows(rows - mb) = v_c.cast<Complex>().asDiagonal() * nh.bottomRows(rows - mb);
        nh.rightCols(cols - pb) = nh.rightCols(cols - pb) * w_c.cast<Complex>().asDiagonal();
        if (!nh.allFinite()) throw fail("external scalings overflow");
        const double c0 = sigma_or_inf(nh.bottomRightCorner(rows - mb, cols - pb));
        if (!(c0 < 1.0 - target)) throw fail("external block alone violates the bound");
        Vector r = Vector::Ones(mb), q = Vector::Ones(pb);
        for (Eigen::Index i = 0; i < mb; ++i) {
            const double norm = nh.row(i).norm();
            if (norm > 0.0) r(i) = 1.0 / norm;
        }
        for (Eigen::Index i = 0; i < pb; ++i) {
            const double norm = nh.col(i).norm();
            if (norm > 0.0) q(i) = 1.0 / norm;
        }
        const CMatrix rc = r.cast<Complex>().asDiagonal() * nh.topRows(mb);
        const double a11 = sigma_or_inf(rc.leftCols(pb) * q.cast<Complex>().asDiagonal());
        const double b = std::max(
            sigma_or_inf(rc.rightCols(cols - pb)),
            sigma_or_inf(nh.bottomLeftCorner(rows - mb, pb) * q.cast<Complex>().asDiagonal()));
        const double budget = 0.5 * (1.0 - c0);
        double sigma;
        if (a11 == 0.0 && b == 0.0) {
            sigma = cap / std::max(r.maxCoeff(), q.maxCoeff());
        } else {
            sigma = 2.0 * budget / (b + std::sqrt(b * b + 4.0 * a11 * budget));
        }
        vb = (sigma * r).cwiseMin(cap);
        wb = (sigma * q).cwiseMin(cap);
        const bool representable =
            vb.allFinite() && wb.allFinite() &&
            (mb == 0 || vb.minCoeff() > 1e-150) && (pb == 0 || wb.minCoeff() > 1e-150);
        if (!representable) throw fail("subsystem budgets below the representable range");
        if (!enforce_margin(nd, vb, wb, v_c, w_c, target)) throw fail("no feasible start found");
    }
    if (mb + pb == 0) return unstack(blocks, vb, wb, v_c, w_c);

    double cost = stacked_cost(vb, wb, av, aw);
    for (int pass = 0; pass < 3; ++pass) {
        // Variables are V^-2, W^-2 relative to the reference, so x = 1 reproduces it
        // and the LMI entries stay O(1) whatever the absolute scale of the budgets.
        Vector vfull(rows), wfull(cols);
        vfull << vb, v_c;
        wfull << wb, w_c;
        const CMatrix nref = vw_scaled(nd, vfull, wfull);
        const auto nvar = static_cast<std::size_t>(pb + mb);
        lmi::LmiProblem p(nvar);
        CMatrix f0 = CMatrix::Zero(cols + rows, cols + rows);
        f0.topRightCorner(cols, rows) = nref.adjoint();
        f0.bottomLeftCorner(rows, cols) = nref;
        for (Eigen::Index i = pb; i < cols; ++i) f0(i, i) = 1.0;
        for (Eigen::Index i = mb; i < rows; ++i) f0(cols + i, cols + i) = 1.0;
        p.add_block(f0);
        Vector c(static_cast<Eigen::Index>(nvar));
        Vector x0(static_cast<Eigen::Index>(nvar));
        for (Eigen::Index i = 0; i < pb; ++i) {
            CMatrix e = CMatrix::Zero(cols + rows, cols + rows);
            e(i, i) = 1.0;
            p.set_coefficient(0, static_cast<std::size_t>(i), e);
            const double lb = options.budget_floor * wb(i) * wb(i);
            p.set_lower_bound(static_cast<std::size_t>(i), lb);
            c(i) = aw(i) / (wb(i) * wb(i));
            x0(i) = std::max(1.0, 2.0 * lb);
        }
        for (Eigen::Index i = 0; i < mb; ++i) {
            CMatrix e = CMatrix::Zero(cols + rows, cols + rows);
            e(cols + i, cols + i) = 1.0;
            const auto var = static_cast<std::size_t>(pb + i);
            p.set_coefficient(0, var, e);
            const double lb = options.budget_floor * vb(i) * vb(i);
            p.set_lower_bound(var, lb);
            c(pb + i) = av(i) / (vb(i) * vb(i));
            x0(pb + i) = std::max(1.0, 2.0 * lb);
        }
        p.set_objective(c / c.sum());
        lmi::LmiOptions lo = options.lmi;
        lo.initial_point = x0;
        const auto sol = lmi::solve_sdp(p, lo);
        if (sol.status == lmi::LmiStatus::infeasible || !sol.x.allFinite() ||
            sol.x.minCoeff() <= 0.0) {
            break;
        }
        Vector wn = wb.cwiseQuotient(sol.x.head(pb).cwiseSqrt()).cwiseMin(cap);
        Vector vn = vb.cwiseQuotient(sol.x.tail(mb).cwiseSqrt()).cwiseMin(cap);
        if (!enforce_margin(nd, vn, wn, v_c, w_c, target)) break;
        const double new_cost = stacked_cost(vn, wn, av, aw);
        if (!(new_cost <= cost)) break;
        const double gain = (cost - new_cost) / cost;
        vb = vn;
        wb = wn;
        cost = new_cost;
        if (gain < options.conv_tol) break;
    }
    Scalings out = unstack(blocks, vb, wb, v_c, w_c);
    if (!theorem1_check(n, blocks, out, d, options.pd_margin).pass) {
        throw fail("scalings failed the positivity re-check");
    }
    return out;
}

DStepResult solve_d_step(const NominalMatrix& n, const BlockStructure& blocks, const Scalings& s,
                         const std::optional<DScalings>& start, const SynthesisOptions& options) {
    const CMatrix full = n.full();
    const Stacked vw = stack(blocks, s);
    check_n_shape(full, blocks, s.v_c.size(), s.w_c.size());
    const auto k = blocks.count();
    const Eigen::Index rows = full.rows();
    const Eigen::Index mb = blocks.mb(), pb = blocks.pb();
    const CMatrix m = vw_scaled(full, vw.v, vw.w);

    const double d_lo = options.d_min, d_hi = options.d_max;
    CMatrix f0 = CMatrix::Zero(rows, rows);
    f0.bottomRightCorner(rows - mb, rows - mb).diagonal().setOnes();
    f0 -= m.rightCols(m.cols() - pb) * m.rightCols(m.cols() - pb).adjoint();
    std::vector<CMatrix> fj(k);
    Eigen::Index rv = 0, rw = 0;
    for (std::size_t j = 0; j < k; ++j) {
        fj[j] = CMatrix::Zero(rows, rows);
        fj[j].block(rv, rv, blocks.inputs[j], blocks.inputs[j]).diagonal().setOnes();
        const auto cols_j = m.middleCols(rw, blocks.outputs[j]);
        fj[j] -= cols_j * cols_j.adjoint();
        rv += blocks.inputs[j];
        rw += blocks.outputs[j];
    }
    auto value = [&](const Vector& d) {
        CMatrix f = f0;
        for (std::size_t j = 0; j < k; ++j) f += d(static_cast<Eigen::Index>(j)) * fj[j];
        return f;
    };

    Vector d0 = Vector::Ones(static_cast<Eigen::Index>(k));
    if (start) {
        if (static_cast<std::size_t>(start->d.size()) != k) {
            throw DomainError("D-scalings do not match the number of subsystems");
        }
        d0 = start->d.cwiseMax(2.0 * d_lo).cwiseMin(0.5 * d_hi);
    }
    DStepResult out;
    out.d = {d0, 1.0};
    if (k == 0) {
        out.gamma = lmi::min_eigenvalue(f0);
        out.status = lmi::LmiStatus::optimal;
        return out;
    }

    lmi::LmiProblem p(k + 1);
    p.add_block(f0);
    for (std::size_t j = 0; j < k; ++j) {
        p.set_coefficient(0, j, fj[j]);
        p.set_lower_bound(j, d_lo);
        p.set_upper_bound(j, d_hi);
    }
    p.set_coefficient(0, k, -CMatrix::Identity(rows, rows));
    Vector c = Vector::Zero(static_cast<Eigen::Index>(k + 1));
    c(static_cast<Eigen::Index>(k)) = -1.0;
    p.set_objective(c);
    Vector x0(static_cast<Eigen::Index>(k + 1));
    x0.head(static_cast<Eigen::Index>(k)) = d0;
    const double gamma0 = lmi::min_eigenvalue(value(d0));
    x0(static_cast<Eigen::Index>(k)) = gamma0 - std::max(1.0, std::abs(gamma0));
    lmi::LmiOptions lo = options.lmi;
    lo.initial_point = x0;
    const auto sol = lmi::solve_sdp(p, lo);
    out.status = sol.status;
    if (sol.status == lmi::LmiStatus::infeasible || !sol.x.allFinite()) {
        out.gamma = gamma0;
        return out;
    }
    out.d.d = sol.x.head(static_cast<Eigen::Index>(k));
    // Report the exact gamma of the returned d rather than the solver variable.
    out.gamma = lmi::min_eigenvalue(value(out.d.d));
    if (out.gamma < gamma0) {
        out.d.d = d0;
        out.gamma = gamma0;
    }
    return out;
}

namespace {

// Moving d_j by a factor t while scaling v_j by sqrt(t) and w_j by 1/sqrt(t)
// leaves W^-2 D_r^-1 and V^-2 D_l untouched, so the check is unaffected. The
// cost tr V_j^-2 / t + t tr W_j^-2 is smallest at t = sqrt(tr V_j^-2 / tr W_j^-2).
void rebalance(Scalings& s, DScalings& d, const SynthesisOptions& options) {
    const double d_lo = options.d_min, d_hi = options.d_max;
    const double cap = 1.0 / std::sqrt(options.budget_floor);
    for (std::size_t j = 0; j < s.v.size(); ++j) {
        if (s.v[j].size() == 0 || s.w[j].size() == 0) continue;
        const double tv = s.v[j].array().square().inverse().sum();
        const double tw = s.w[j].array().square().inverse().sum();
        double t = std::sqrt(tv / tw);
        const auto jj = static_cast<Eigen::Index>(j);
        t = std::clamp(t, d_lo / d.d(jj), d_hi / d.d(jj));
        // Keep every budget below the cap implied by budget_floor.
        t = std::min(t, std::pow(cap / s.v[j].maxCoeff(), 2));
        t = std::max(t, std::pow(s.w[j].maxCoeff() / cap, 2));
        if (!(t > 0.0) || !std::isfinite(t)) continue;
        if (tv / t + t * tw >= tv + tw) continue;
        d.d(jj) *= t;
        s.v[j] *= std::sqrt(t);
        s.w[j] /= std::sqrt(t);
    }
}

}  // namespace

PointResult synthesize_point(const NominalMatrix& n, const BlockStructure& blocks,
                             const Vector& v_c, const Vector& w_c, std::span<const double> alpha,
                             const SynthesisOptions& options) {
    if (!(options.conv_tol > 0.0) || options.max_outer < 1) {
        throw DomainError("conv_tol must be positive and max_outer at least 1");
    }
    PointResult r;
    r.omega = n.omega;
    DScalings d = DScalings::ones(blocks.count());
    try {
        Scalings s = solve_vw_step(n, blocks, d, v_c, w_c, alpha, options);
        rebalance(s, d, options);
        double cost = scaling_cost(s, alpha);
        r.cost_trace.push_back(cost);
        for (int outer = 1; outer < options.max_outer && blocks.count() > 0; ++outer) {
            const auto step = solve_d_step(n, blocks, s, d, options);
            if (!(step.gamma > 0.0) || !theorem1_check(n, blocks, s, step.d, options.pd_margin).pass) {
                break;
            }
            Scalings next = solve_vw_step(n, blocks, step.d, v_c, w_c, alpha, options, s);
            DScalings next_d = step.d;
            rebalance(next, next_d, options);
            const double next_cost = scaling_cost(next, alpha);
            if (!(next_cost <= cost) || !theorem1_check(n, blocks, next, next_d, options.pd_margin).pass) break;
            const double gain = (cost - next_cost) / cost;
            s = std::move(next);
            d = next_d;
            cost = next_cost;
            r.cost_trace.push_back(cost);
            if (gain < options.conv_tol) break;
        }
        r.scalings = std::move(s);
        r.d = d;
        r.cost = cost;
        r.status = PointStatus::feasible;
    } catch (const RequirementInfeasible& e) {
        r.status = PointStatus::infeasible;
        r.message = e.what();
        r.d = d;
    }
    return r;
}

bool ScalingSolution::all_feasible() const {
    return std::all_of(points.begin(), points.end(),
                       [](const PointResult& p) { return p.status == PointStatus::feasible; });
}

std::vector<double> ScalingSolution::infeasible_omegas() const {
    std::vector<double> out;
    for (const auto& p : points) {
        if (p.status != PointStatus::feasible) out.push_back(p.omega);
    }
    return out;
}

namespace {

std::string infeasible_message(const ScalingSolution& sol) {
    const auto bad = sol.infeasible_omegas();
    std::ostringstream msg;
    msg << "requirement synthesis infeasible at " << bad.size() << " of " << sol.points.size()
        << " frequencies:";
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg << ' ' << format_double(bad[i]);
    if (bad.size() > 20) msg << " ...";
    return msg.str();
}

}  // namespace

SynthesisError::SynthesisError(ScalingSolution partial)
    : NumericalError(infeasible_message(partial)), partial_(std::move(partial)) {}

ScalingSolution synthesize_requirements(const InterconnectedSystem& sys,
                                        const RequirementSpec& req, std::span<const double> alpha,
                                        const SynthesisOptions& options) {
    const auto blocks = BlockStructure::of(sys);
    (void)weights(alpha, blocks.count());
    if (req.v_c.front().size() != sys.pc() || req.w_c.front().size() != sys.mc()) {
        throw DomainError("requirement dimensions do not match the external channels");
    }
    std::vector<ResponseSweep> sweeps;
    for (const auto& g : sys.subsystems()) sweeps.emplace_back(g);

    ScalingSolution sol{req.grid, blocks, std::vector<PointResult>(req.grid.size())};
    parallel_for(req.grid.size(), options.workers, [&](std::size_t i) {
        const double w = req.grid[i];
        std::vector<CMatrix> gb;
        gb.reserve(sweeps.size());
        for (const auto& s : sweeps) gb.push_back(s(w));
        const auto n = compute_N(sys, block_diag(gb), w);
        sol.points[i] = synthesize_point(n, blocks, req.v_c[i], req.w_c[i], alpha, options);
    });
    if (!sol.all_feasible()) throw SynthesisError(std::move(sol));
    return sol;
}

CheckResult check_subsystem_requirement(const CMatrix& e, const Vector& v, const Vector& w,
                                        double slack) {
    if (e.rows() != w.size() || e.cols() != v.size()) {
        throw DomainError("subsystem scalings do not match the error dimensions");
    }
    require_positive(v, "v_j");
    require_positive(w, "w_j");
    const double sigma = sigma_or_inf(w.cwiseInverse().cast<Complex>().asDiagonal() * e *
                                      v.cwiseInverse().cast<Complex>().asDiagonal());
    return {sigma <= 1.0 + slack, 1.0 - sigma};
}

CheckResult check_interconnected_requirement(const CMatrix& e, const Vector& v_c,
                                             const Vector& w_c, double slack) {
    if (e.rows() != v_c.size() || e.cols() != w_c.size()) {
        throw DomainError("interconnected scalings do not match the error dimensions");
    }
    require_positive(v_c, "v_c");
    require_positive(w_c, "w_c");
    const double sigma = sigma_or_inf(v_c.cast<Complex>().asDiagonal() * e *
                                      w_c.cast<Complex>().asDiagonal());
    return {sigma < 1.0 + slack, 1.0 - sigma};
}

void write_scalings_csv(std::ostream& out, const ScalingSolution& sol, std::size_t j) {
    if (j >= sol.blocks.count()) throw DomainError("subsystem index out of range");
    std::vector<std::string> header{"omega"};
    for (Eigen::Index i = 0; i < sol.blocks.inputs[j]; ++i) header.push_back("v_" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < sol.blocks.outputs[j]; ++i) header.push_back("w_" + std::to_string(i + 1));
    std::vector<std::vector<double>> rows;
    for (const auto& p : sol.points) {
        if (p.status != PointStatus::feasible) continue;
        std::vector<double> row{p.omega};
        for (double x : p.scalings.v[j]) row.push_back(x);
        for (double x : p.scalings.w[j]) row.push_back(x);
        rows.push_back(std::move(row));
    }
    write_csv(out, header, rows);
}

void write_d_csv(std::ostream& out, const ScalingSolution& sol) {
    out << "omega";
    for (std::size_t j = 0; j < sol.blocks.count(); ++j) out << ",d_" << j + 1;
    out << ",cost,status\n";
    for (const auto& p : sol.points) {
        out << format_double(p.omega);
        for (std::size_t j = 0; j < sol.blocks.count(); ++j) {
            const bool have = static_cast<std::size_t>(p.d.d.size()) == sol.blocks.count();
            out << ',' << format_double(have ? p.d.d(static_cast<Eigen::Index>(j)) : 1.0);
        }
        const bool ok = p.status == PointStatus::feasible;
        out << ',' << (ok ? format_double(p.cost) : "nan") << ',' << (ok ? "feasible" : "infeasible")
            << '\n';
    }
}

void write_cost_trace_csv(std::ostream& out, const ScalingSolution& sol) {
    std::vector<std::vector<double>> rows;
    for (const auto& p : sol.points) {
        for (std::size_t i = 0; i < p.cost_trace.size(); ++i) {
            rows.push_back({p.omega, static_cast<double>(i), p.cost_trace[i]});
        }
    }
    write_csv(out, {"omega", "iteration", "cost"}, rows);
}

}  // namespace modred
