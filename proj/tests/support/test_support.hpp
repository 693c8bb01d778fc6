#pragma once

// Random instance generators shared by the unit and acceptance suites.

#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "modred/lti.hpp"

namespace modred::testing {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

inline CMatrix random_cmatrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = Complex(dist(rng), dist(rng));
    return m;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Stable model: Gaussian A shifted so its spectral abscissa lies in [-1, -0.1].
inline StateSpaceModel random_stable(Rng& rng, Eigen::Index n, Eigen::Index m, Eigen::Index p,
                                     bool feedthrough = true) {
    Matrix a = random_matrix(rng, n, n);
    if (n > 0) {
        Eigen::EigenSolver<Matrix> es(a, false);
        const double abscissa = es.eigenvalues().real().maxCoeff();
        a.diagonal().array() -= abscissa + uniform(rng, 0.1, 1.0);
    }
    Matrix d = feedthrough ? random_matrix(rng, p, m, 0.5) : Matrix::Zero(p, m);
    return {a, random_matrix(rng, n, m), random_matrix(rng, p, n), d};
}

/// Complex matrix with largest singular value exactly `target`.
inline CMatrix random_contraction(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                  double target = 1.0) {
    CMatrix m = random_cmatrix(rng, rows, cols);
    Eigen::JacobiSVD<CMatrix> svd(m);
    return m * (target / svd.singularValues()(0));
}

}  // namespace modred::testing
