#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "balancing.hpp"
#include "modred/reduction.hpp"

namespace modred {

namespace detail {

namespace {

// L with L L^T = P after flooring the spectrum of P.
Matrix floored_factor(const Matrix& p) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("Gramian eigendecomposition failed");
    const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
    const double floor = top > 0.0 ? 1e-14 * top : 1e-300;
    const Vector lam = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace

Balancer::Balancer(const Matrix& p, const Matrix& q) {
    const auto n = p.rows();
    if (n == 0) return;
    const Matrix lp = floored_factor(p);
    const Matrix lq = floored_factor(q);
    const Eigen::JacobiSVD<Matrix> svd(lq.transpose() * lp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    hsv_ = svd.singularValues();
    const double top = hsv_.size() > 0 ? hsv_(0) : 0.0;
    rank_ = 0;
    while (rank_ < hsv_.size() && hsv_(rank_) > 1e-15 * top && hsv_(rank_) > 0.0) ++rank_;
    const Vector inv_sqrt = hsv_.head(rank_).cwiseSqrt().cwiseInverse();
    tl_ = inv_sqrt.asDiagonal() * svd.matrixU().leftCols(rank_).transpose() * lq.transpose();
    tr_ = lp * svd.matrixV().leftCols(rank_) * inv_sqrt.asDiagonal();
}

StateSpaceModel Balancer::truncate(const StateSpaceModel& model, Eigen::Index r) const {
    if (r < 0 || r > rank_) throw DomainError("truncation order outside the balanced range");
    const Matrix l = tl_.topRows(r);
    const Matrix rr = tr_.leftCols(r);
    return {l * model.a() * rr, l * model.b(), model.c() * rr, model.d()};
}

StateSpaceModel Balancer::residualize(const StateSpaceModel& model, Eigen::Index r) const {
    if (r < 0 || r > rank_) throw DomainError("truncation order outside the balanced range");
    const Eigen::Index k = rank_ - r;
    if (k == 0) return truncate(model, r);
    const Matrix a = tl_ * model.a() * tr_;
    const Matrix b = tl_ * model.b();
    const Matrix c = model.c() * tr_;
    const Eigen::PartialPivLU<Matrix> lu(a.bottomRightCorner(k, k));
    if (!(lu.rcond() > 1e-14)) {
        throw NumericalError("discarded balanced states have a singular state matrix");
    }
    const Matrix x = lu.solve(a.bottomLeftCorner(k, r));
    const Matrix y = lu.solve(b.bottomRows(k));
    return {a.topLeftCorner(r, r) - a.topRightCorner(r, k) * x, b.topRows(r) - a.topRightCorner(r, k) * y,
            c.leftCols(r) - c.rightCols(k) * x, model.d() - c.rightCols(k) * y};
}

WeightedGramians weighted_gramians(const StateSpaceModel& model,
                                   const StateSpaceModel* output_weight,
                                   const StateSpaceModel* input_weight) {
    const auto n = model.states();
    const Matrix& a = model.a();
    const Matrix& b = model.b();
    const Matrix& c = model.c();
    WeightedGramians g;

    if (input_weight && input_weight->states() > 0) {
        const auto& v = *input_weight;
        const auto nv = v.states();
        Matrix aa = Matrix::Zero(n + nv, n + nv);
        aa.topLeftCorner(n, n) = a;
        aa.topRightCorner(n, nv) = b * v.c();
        aa.bottomRightCorner(nv, nv) = v.a();
        Matrix bb(n + nv, v.inputs());
        bb << b * v.d(), v.b();
        g.p = solve_lyapunov(aa, bb * bb.transpose()).topLeftCorner(n, n);
    } else {
        const Matrix bw = input_weight ? Matrix(b * input_weight->d()) : b;
        g.p = solve_lyapunov(a, bw * bw.transpose());
    }

    if (output_weight && output_weight->states() > 0) {
        const auto& w = *output_weight;
        const auto nw = w.states();
        Matrix aa = Matrix::Zero(n + nw, n + nw);
        aa.topLeftCorner(n, n) = a;
        aa.bottomLeftCorner(nw, n) = w.b() * c;
        aa.bottomRightCorner(nw, nw) = w.a();
        Matrix cc(w.outputs(), n + nw);
        cc << w.d() * c, w.c();
        g.q = solve_lyapunov(aa.transpose(), cc.transpose() * cc).topLeftCorner(n, n);
    } else {
        const Matrix cw = output_weight ? Matrix(output_weight->d() * c) : c;
        g.q = solve_lyapunov(a.transpose(), cw.transpose() * cw);
    }
    return g;
}

}  // namespace detail

namespace {

void require_stable(const StateSpaceModel& model) {
    if (!stability_check(model).stable) throw DomainError("balanced truncation requires a stable model");
}

ReductionResult truncate_with(const StateSpaceModel& model, const detail::Balancer& bal,
                              Eigen::Index r) {
    const auto n = model.states();
    if (r < 0 || r > n) throw DomainError("reduction order must lie in [0, n]");
    ReductionResult out{model, n, r, bal.hankel_values(), {}, {}, {}};
    if (r == n) return out;
    if (r > bal.max_order()) {
        throw NumericalError("Gramians are numerically rank deficient beyond order " +
                             std::to_string(bal.max_order()));
    }
    out.reduced = bal.truncate(model, r);
    return out;
}

}  // namespace

Vector hankel_singular_values(const StateSpaceModel& model) {
    require_stable(model);
    const auto g = gramians(model);
    return detail::Balancer(g.p, g.q).hankel_values();
}

ReductionResult balanced_truncation(const StateSpaceModel& model, Eigen::Index r) {
    require_stable(model);
    if (r < 0 || r > model.states()) throw DomainError("reduction order must lie in [0, n]");
    const auto g = gramians(model);
    return truncate_with(model, detail::Balancer(g.p, g.q), r);
}

ReductionResult fw_balanced_truncation(const StateSpaceModel& model,
                                       std::span<const FittedWeight> output_weights,
                                       std::span<const FittedWeight> input_weights,
                                       Eigen::Index r) {
    require_stable(model);
    if (r < 0 || r > model.states()) throw DomainError("reduction order must lie in [0, n]");
    if (!output_weights.empty() && static_cast<Eigen::Index>(output_weights.size()) != model.outputs()) {
        throw DomainError("one output weight per model output is required");
    }
    if (!input_weights.empty() && static_cast<Eigen::Index>(input_weights.size()) != model.inputs()) {
        throw DomainError("one input weight per model input is required");
    }
    std::optional<StateSpaceModel> wo, wi;
    if (!output_weights.empty()) wo = diagonal_weight(output_weights);
    if (!input_weights.empty()) wi = diagonal_weight(input_weights);
    const auto g = detail::weighted_gramians(model, wo ? &*wo : nullptr, wi ? &*wi : nullptr);
    auto out = truncate_with(model, detail::Balancer(g.p, g.q), r);
    out.output_weights.assign(output_weights.begin(), output_weights.end());
    out.input_weights.assign(input_weights.begin(), input_weights.end());
    return out;
}

bool ReductionResult::all_pass(double slack) const {
    return std::all_of(margins.begin(), margins.end(),
                       [slack](double m) { return m >= -slack; });
}

}  // namespace modred
