#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <lapacke.h>

#include "modred/reduction.hpp"

namespace modred {

namespace {

// Real parts of the eigenvalues of a quasi-triangular Schur factor, one per
// diagonal position, and the spectral radius.
std::vector<double> schur_real_parts(const Matrix& t, double* radius) {
    const auto n = t.rows();
    std::vector<double> re(static_cast<std::size_t>(n));
    double rad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
            const double mid = 0.5 * (a + d);
            const double disc = 0.25 * (a - d) * (a - d) + b * c;
            const double im = std::sqrt(std::max(0.0, -disc));
            re[static_cast<std::size_t>(i)] = re[static_cast<std::size_t>(i + 1)] = mid;
            rad = std::max(rad, std::hypot(mid, im));
            ++i;
        } else {
            re[static_cast<std::size_t>(i)] = t(i, i);
            rad = std::max(rad, std::abs(t(i, i)));
        }
    }
    if (radius) *radius = rad;
    return re;
}

thread_local double select_threshold = 0.0;

lapack_logical below_threshold(const double* re, const double* /*im*/) {
    return *re < select_threshold ? 1 : 0;
}

struct Schur {
    Matrix t;
    Matrix u;
    Eigen::Index selected = 0;
};

// LAPACK real Schur form in standard (canonical) shape, optionally ordered so
// that eigenvalues with real part below `threshold` come first.
Schur real_schur(const Matrix& a, std::optional<double> threshold) {
    const auto n = static_cast<lapack_int>(a.rows());
    Schur s{a, Matrix(a.rows(), a.rows())};
    std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
    lapack_int sdim = 0;
    if (threshold) select_threshold = *threshold;
    const lapack_int info =
        LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', threshold ? 'S' : 'N',
                      threshold ? below_threshold : nullptr, n, s.t.data(), n, &sdim, wr.data(),
                      wi.data(), s.u.data(), n);
    if (info != 0) throw NumericalError("real Schur decomposition failed (dgees)");
    s.selected = sdim;
    return s;
}

}  // namespace

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const auto n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) {
        throw DomainError("solve_lyapunov: A and Q must be square with equal size");
    }
    if (n == 0) return Matrix(0, 0);
    const double qscale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * qscale) {
        throw DomainError("solve_lyapunov: Q must be symmetric");
    }
    auto [t, u, unused] = real_schur(a, std::nullopt);
    const auto re = schur_real_parts(t, nullptr);
    if (!(*std::max_element(re.begin(), re.end()) < 0.0)) {
        throw DomainError("solve_lyapunov: A must be stable");
    }
    // T X + X T^T = -U^T Q U
    Matrix c = -(u.transpose() * q * u);
    double scale = 1.0;
    const auto ni = static_cast<lapack_int>(n);
    const lapack_int info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'T', 1, ni, ni, t.data(), ni,
                                           t.data(), ni, c.data(), ni, &scale);
    if (info < 0) throw NumericalError("dtrsyl rejected its arguments");
    Matrix p = u * (c / scale) * u.transpose();
    return 0.5 * (p + p.transpose());
}

Gramians gramians(const StateSpaceModel& model) {
    return {solve_lyapunov(model.a(), model.b() * model.b().transpose()),
            solve_lyapunov(model.a().transpose(), model.c().transpose() * model.c())};
}

StateSpaceModel parallel_sum(const StateSpaceModel& a, const StateSpaceModel& b) {
    if (a.inputs() != b.inputs() || a.outputs() != b.outputs()) {
        throw DomainError("parallel_sum: models must have the same inputs and outputs");
    }
    const auto na = a.states(), nb = b.states();
    Matrix aa = Matrix::Zero(na + nb, na + nb);
    aa.topLeftCorner(na, na) = a.a();
    aa.bottomRightCorner(nb, nb) = b.a();
    Matrix bb(na + nb, a.inputs());
    bb << a.b(), b.b();
    Matrix cc(a.outputs(), na + nb);
    cc << a.c(), b.c();
    return {aa, bb, cc, a.d() + b.d()};
}

StableSplit split_stable(const StateSpaceModel& model, double tol) {
    const auto n = model.states();
    const auto m = model.inputs(), p = model.outputs();
    auto empty = [&] {
        return StateSpaceModel(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), Matrix::Zero(p, m));
    };
    if (n == 0) return {model, empty()};

    // Spectral radius first, to set a scale-aware threshold.
    double radius = 0.0;
    (void)schur_real_parts(real_schur(model.a(), std::nullopt).t, &radius);
    const double threshold = -tol * std::max(1.0, radius);
    auto [t, u, selected] = real_schur(model.a(), threshold);
    if (selected == n) return {model, empty()};
    const Eigen::Index k = selected;
    const Eigen::Index rest = n - k;

    // Decouple: T11 X - X T22 = -T12.
    Matrix x = -t.topRightCorner(k, rest);
    if (k > 0) {
        Matrix t11 = t.topLeftCorner(k, k);
        Matrix t22 = t.bottomRightCorner(rest, rest);
        double scale = 1.0;
        const lapack_int info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, static_cast<lapack_int>(k),
                              static_cast<lapack_int>(rest), t11.data(), static_cast<lapack_int>(k),
                              t22.data(), static_cast<lapack_int>(rest), x.data(),
                              static_cast<lapack_int>(k), &scale);
        if (info < 0) throw NumericalError("dtrsyl rejected its arguments");
        x /= scale;
    }
    // New coordinates z = S^-1 U^T x with S = [[I, X], [0, I]].
    Matrix bt = u.transpose() * model.b();
    bt.topRows(k) -= x * bt.bottomRows(rest);
    Matrix ct = model.c() * u;
    ct.rightCols(rest) += ct.leftCols(k) * x;

    StateSpaceModel stable(t.topLeftCorner(k, k), bt.topRows(k), ct.leftCols(k), model.d());
    StateSpaceModel marginal(t.bottomRightCorner(rest, rest), bt.bottomRows(rest),
                             ct.rightCols(rest), Matrix::Zero(p, m));
    return {std::move(stable), std::move(marginal)};
}

}  // namespace modred
